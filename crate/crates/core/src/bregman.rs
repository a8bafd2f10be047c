//! Split-Bregman iteration for `min sum a |grad u + F| + H u`, `u = 0` on the
//! boundary.
//!
//! Starting from `b = d = 0`, each sweep performs
//!
//! 1. `laplacian(u') = -div(b - d) + H / lambda`, `u' = 0` on the boundary;
//! 2. `d' = shrink(b + grad u' + F, a / lambda) - F`;
//! 3. `b' = b + grad u' - d'`.
//!
//! Step 3 carries no `F`: the shift by `F` lives entirely inside `d`, so
//! `d + F` is the splitting variable for `grad u + F` and step 3 is the usual
//! Bregman update `b + (grad u + F) - (d + F)` written without the
//! cancelling terms.

use crate::duality::primal_energy;
use crate::error::{invalid, Result};
use crate::grid::{divergence, gradient, NormKind, ScalarField, VectorField};
use crate::poisson::PoissonSolver;
use crate::problem::ProblemData;

/// Below this magnitude the shrinkage argument counts as zero.
const ZERO_MAGNITUDE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    /// Stop once `|u^{k+1} - u^k| / |u^{k+1}| < tol` in the discrete L2 norm.
    pub tol: f64,
    pub max_iter: usize,
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            tol: 1e-7,
            max_iter: 5000,
            record_history: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid(
                "lambda",
                format!("must be positive, got {}", self.lambda),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid(
                "tol",
                format!("must be positive, got {}", self.tol),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub u: ScalarField,
    /// Bregman variable.
    pub b: VectorField,
    /// Splitting variable for `grad u`.
    pub d: VectorField,
    pub k: usize,
}

impl SolverState {
    pub fn zero(p: &ProblemData) -> Self {
        Self {
            u: ScalarField::zeros(p.grid),
            b: VectorField::zeros(p.grid),
            d: VectorField::zeros(p.grid),
            k: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub k: usize,
    pub rel_change: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub state: SolverState,
    pub converged: bool,
    pub iterations: usize,
    /// Relative change of the last sweep (infinite if no sweep ran).
    pub last_rel_change: f64,
    pub history: Option<Vec<HistoryEntry>>,
}

/// Pointwise `max(|s| - a/lambda, 0) s/|s| - F` with `s = b + grad_u + F`,
/// and `-F` where `s` vanishes.
pub fn shrink_step(
    b: &VectorField,
    grad_u: &VectorField,
    drift: &VectorField,
    weight: &ScalarField,
    lambda: f64,
) -> VectorField {
    let s = &(b + grad_u) + drift;
    let grid = *s.grid();
    let mut dx = ScalarField::zeros(grid);
    let mut dy = ScalarField::zeros(grid);
    for i in 0..grid.nodes() {
        for j in 0..grid.nodes() {
            let (sx, sy) = s.get(i, j);
            let (fx, fy) = drift.get(i, j);
            let mag = sx.hypot(sy);
            let (ex, ey) = if mag < ZERO_MAGNITUDE {
                (0.0, 0.0)
            } else {
                let factor = (mag - weight.get(i, j) / lambda).max(0.0) / mag;
                (factor * sx, factor * sy)
            };
            dx.set(i, j, ex - fx);
            dy.set(i, j, ey - fy);
        }
    }
    VectorField::new(dx, dy).expect("same grid")
}

/// One sweep of the iteration; exactly one Poisson solve.
pub fn iterate(
    state: &SolverState,
    p: &ProblemData,
    cfg: &SolverConfig,
    solver: &PoissonSolver,
) -> Result<SolverState> {
    let inv_lambda = 1.0 / cfg.lambda;
    let div = divergence(&(&state.b - &state.d));
    let rhs = div.zip_map(&p.forcing, |dv, h| -dv + h * inv_lambda)?;
    let u = solver.solve_dirichlet(&rhs)?;
    let grad_u = gradient(&u);
    let d = shrink_step(&state.b, &grad_u, &p.drift, &p.weight, cfg.lambda);
    let b = &(&state.b + &grad_u) - &d;
    Ok(SolverState {
        u,
        b,
        d,
        k: state.k + 1,
    })
}

pub fn relative_change(new: &ScalarField, old: &ScalarField) -> f64 {
    let diff = (new - old).norm(NormKind::L2);
    let norm = new.norm(NormKind::L2);
    if norm > 0.0 {
        diff / norm
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Runs the iteration from `b = d = 0` until the relative-change rule fires
/// or `max_iter` sweeps have been made.
pub fn solve(p: &ProblemData, cfg: &SolverConfig, solver: &PoissonSolver) -> Result<SolveResult> {
    cfg.validate()?;
    let mut state = SolverState::zero(p);
    let mut history = cfg.record_history.then(Vec::new);
    let mut last = f64::INFINITY;
    let mut converged = false;
    while state.k < cfg.max_iter {
        let next = iterate(&state, p, cfg, solver)?;
        last = relative_change(&next.u, &state.u);
        state = next;
        if let Some(h) = history.as_mut() {
            h.push(HistoryEntry {
                k: state.k,
                rel_change: last,
                energy: primal_energy(&state.u, p),
            });
        }
        if last < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(SolveResult {
        iterations: state.k,
        state,
        converged,
        last_rel_change: last,
        history,
    })
}
