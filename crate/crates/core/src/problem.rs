//! Problem instances `(a, F, H)` and their standing-hypothesis checks.

use crate::error::Result;
use crate::grid::{gradient, GridSpec, NormKind, ScalarField, VectorField};

/// How the drift of the built-in example is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftAssembly {
    /// `F = (1, x + y) - gradient(u*)` with the discrete gradient, so that
    /// `gradient(u*) + F = (1, x + y)` holds exactly at every node.
    #[default]
    Discrete,
    /// `F = (1, x + y) - grad u*` with the analytic gradient sampled at the
    /// nodes; the identity then only holds to O(h).
    Analytic,
}

/// One instance of `min  sum a |grad u + F| + H u` with `u = 0` on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    pub grid: GridSpec,
    /// Weight `a`.
    pub weight: ScalarField,
    /// Drift `F`.
    pub drift: VectorField,
    /// Forcing `H`.
    pub forcing: ScalarField,
    pub exact_u: Option<ScalarField>,
    /// Potential `f` with `F = gradient(f)` when the drift is conservative.
    pub potential: Option<ScalarField>,
    /// Essential lower bound of the weight.
    pub m: f64,
    /// Essential upper bound of the weight.
    pub big_m: f64,
    pub tag: String,
}

impl ProblemData {
    pub fn new(
        weight: ScalarField,
        drift: VectorField,
        forcing: ScalarField,
        tag: impl Into<String>,
    ) -> Result<Self> {
        let grid = *weight.grid();
        check_grid(&grid, drift.grid())?;
        check_grid(&grid, forcing.grid())?;
        Ok(Self {
            grid,
            m: weight.min(),
            big_m: weight.max(),
            weight,
            drift,
            forcing,
            exact_u: None,
            potential: None,
            tag: tag.into(),
        })
    }

    /// Instance with a conservative drift `F = gradient(f)`.
    pub fn from_potential(
        weight: ScalarField,
        potential: ScalarField,
        forcing: ScalarField,
        tag: impl Into<String>,
    ) -> Result<Self> {
        let drift = gradient(&potential);
        let mut p = Self::new(weight, drift, forcing, tag)?;
        p.potential = Some(potential);
        Ok(p)
    }

    pub fn with_exact(mut self, exact_u: ScalarField) -> Result<Self> {
        check_grid(&self.grid, exact_u.grid())?;
        self.exact_u = Some(exact_u);
        Ok(self)
    }

    /// Replaces the weight and re-measures `m`, `M`.
    pub fn with_weight(mut self, weight: ScalarField) -> Self {
        self.m = weight.min();
        self.big_m = weight.max();
        self.weight = weight;
        self
    }

    /// Example with exact minimizer `u* = xy(1-x)(1-y)`,
    /// `a = sqrt(1 + (x+y)^2)` and `H = 1`.
    pub fn example1(grid: GridSpec) -> Self {
        Self::example1_with(grid, DriftAssembly::Discrete)
    }

    pub fn example1_with(grid: GridSpec, assembly: DriftAssembly) -> Self {
        let exact = ScalarField::from_fn_dirichlet(grid, |x, y| x * y * (1.0 - x) * (1.0 - y));
        let target = VectorField::from_fn(grid, |x, y| (1.0, x + y));
        let grad_u = match assembly {
            DriftAssembly::Discrete => gradient(&exact),
            DriftAssembly::Analytic => VectorField::from_fn(grid, |x, y| {
                (
                    y * (1.0 - y) * (1.0 - 2.0 * x),
                    x * (1.0 - x) * (1.0 - 2.0 * y),
                )
            }),
        };
        let drift = &target - &grad_u;
        let weight = ScalarField::from_fn(grid, |x, y| (1.0 + (x + y) * (x + y)).sqrt());
        let forcing = ScalarField::constant(grid, 1.0);
        Self {
            grid,
            weight,
            drift,
            forcing,
            exact_u: Some(exact),
            potential: None,
            m: 1.0,
            big_m: 5f64.sqrt(),
            tag: "example1".to_string(),
        }
    }

    /// Measures the standing hypotheses. `c_omega` is the Poincare constant
    /// of the domain when the caller knows one.
    pub fn validate(&self, c_omega: Option<f64>) -> ValidationReport {
        let m = self.weight.min();
        let big_m = self.weight.max();
        let k1 = self.drift.norm(NormKind::L1);
        let h_linf = self.forcing.norm(NormKind::Linf);
        let mut warnings = Vec::new();
        if m <= 0.0 {
            warnings.push(format!("weight not positive (min a = {m})"));
        }
        let poincare_condition = c_omega.map(|c| h_linf < m / c);
        if poincare_condition == Some(false) {
            warnings.push(format!(
                "forcing bound fails: |H|_inf = {h_linf} >= m / C_Omega = {}",
                m / c_omega.unwrap_or(f64::NAN)
            ));
        }
        if let Some(u) = &self.exact_u {
            if !u.vanishes_on_boundary() {
                warnings.push("exact solution does not vanish on the boundary".to_string());
            }
        }
        if let Some(f) = &self.potential {
            let mismatch = (&self.drift - &gradient(f)).norm(NormKind::Linf);
            if mismatch > 1e-12 * big_m.abs().max(1.0) {
                warnings.push(format!("drift differs from gradient(f) by {mismatch:e}"));
            }
        }
        ValidationReport {
            m,
            big_m,
            k1,
            h_linf,
            c_omega,
            poincare_condition,
            warnings,
        }
    }
}

fn check_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a.n() != b.n() {
        return Err(crate::Error::GridMismatch {
            left: a.n(),
            right: b.n(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub m: f64,
    pub big_m: f64,
    /// `|F|_{L1}`.
    pub k1: f64,
    pub h_linf: f64,
    pub c_omega: Option<f64>,
    /// `|H|_inf < m / C_Omega`, when `C_Omega` was supplied.
    pub poincare_condition: Option<bool>,
    pub warnings: Vec<String>,
}
