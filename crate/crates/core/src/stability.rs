//! Perturbation sweeps, empirical rates, explicit-constant bound checks and
//! the noisy-data replication experiment.

use rayon::prelude::*;

use crate::bregman::{solve, SolveResult, SolverConfig};
use crate::duality::{flux, primal_energy, FluxPair};
use crate::error::{invalid, Error, Result};
use crate::grid::{gradient, GridSpec, NormKind, ScalarField};
use crate::perturbation::{
    noise_scalar, noise_vector, noisy_instance, structured, MeasuredSizes, NoiseSpec, Param,
    PerturbMode, PerturbedProblem,
};
use crate::poisson::PoissonSolver;
use crate::problem::ProblemData;

/// Which data a sweep perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Weight,
    Drift,
    Forcing,
    Combined,
}

impl SweepParam {
    pub fn params(&self) -> &'static [Param] {
        match self {
            SweepParam::Weight => &[Param::Weight],
            SweepParam::Drift => &[Param::Drift],
            SweepParam::Forcing => &[Param::Forcing],
            SweepParam::Combined => &[Param::Weight, Param::Drift, Param::Forcing],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Weight => "a",
            SweepParam::Drift => "f",
            SweepParam::Forcing => "H",
            SweepParam::Combined => "combined",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" => Ok(Self::Weight),
            "f" | "F" => Ok(Self::Drift),
            "H" => Ok(Self::Forcing),
            "combined" => Ok(Self::Combined),
            other => Err(invalid("param", format!("unknown parameter `{other}`"))),
        }
    }
}

/// How each sweep row perturbs the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Structured(PerturbMode),
    /// Stochastic noise of relative level `eps`, one row per seed.
    Noise,
}

impl SweepMode {
    pub fn name(&self) -> &'static str {
        match self {
            SweepMode::Structured(m) => m.name(),
            SweepMode::Noise => "noise",
        }
    }
}

impl std::str::FromStr for SweepMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise" => Ok(Self::Noise),
            other => Ok(Self::Structured(other.parse()?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    /// Strictly decreasing perturbation sizes. A single `0` is allowed and
    /// yields identical instances.
    pub epsilons: Vec<f64>,
    pub mode: SweepMode,
    /// Seeds for `SweepMode::Noise`; ignored otherwise.
    pub seeds: Vec<u64>,
    pub solver: SolverConfig,
    pub eta: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.epsilons.is_empty() {
            return Err(invalid("epsilons", "list is empty"));
        }
        let zero_only = self.epsilons == [0.0];
        if !zero_only {
            if self.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
                return Err(invalid("epsilons", "values must be positive"));
            }
            if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
                return Err(invalid("epsilons", "values must be strictly decreasing"));
            }
        }
        if self.mode == SweepMode::Noise && self.seeds.is_empty() {
            return Err(invalid("seeds", "noise sweeps need at least one seed"));
        }
        if self.eta.is_nan() || self.eta <= 0.0 {
            return Err(invalid("eta", "must be positive"));
        }
        Ok(())
    }
}

/// Error functionals comparing the base solution with a perturbed one.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorColumns {
    pub err_u_l1: f64,
    pub err_gradu_l1: f64,
    pub err_sigma_l1: f64,
    pub err_j_l1: f64,
    pub energy_diff: f64,
    pub misalignment: f64,
}

/// The columns, their CSV names and the exponent of the matching bound.
pub const COLUMNS: [(&str, f64); 6] = [
    ("err_u_l1", 0.5),
    ("err_gradu_l1", 0.25),
    ("err_sigma_l1", 0.25),
    ("err_J_l1", 0.5),
    ("energy_diff", 1.0),
    ("misalignment", 1.0),
];

impl ErrorColumns {
    pub fn values(&self) -> [f64; 6] {
        [
            self.err_u_l1,
            self.err_gradu_l1,
            self.err_sigma_l1,
            self.err_j_l1,
            self.energy_diff,
            self.misalignment,
        ]
    }

    fn from_values(v: [f64; 6]) -> Self {
        Self {
            err_u_l1: v[0],
            err_gradu_l1: v[1],
            err_sigma_l1: v[2],
            err_j_l1: v[3],
            energy_diff: v[4],
            misalignment: v[5],
        }
    }
}

/// A solved instance with its flux.
#[derive(Debug, Clone)]
pub struct SolvedInstance {
    pub problem: ProblemData,
    pub result: SolveResult,
    pub flux: FluxPair,
    pub energy: f64,
}

impl SolvedInstance {
    pub fn solve(problem: ProblemData, cfg: &SolverConfig, eta: f64) -> Result<Self> {
        let solver = PoissonSolver::fast(problem.grid);
        let result = solve(&problem, cfg, &solver)?;
        let flux = flux(&result.state.u, &problem, eta);
        let energy = primal_energy(&result.state.u, &problem);
        Ok(Self {
            problem,
            result,
            flux,
            energy,
        })
    }

    pub fn u(&self) -> &ScalarField {
        &self.result.state.u
    }
}

/// Error columns between two solved instances plus the fraction of nodes
/// excluded because either flux is masked there.
pub fn compare(base: &SolvedInstance, other: &SolvedInstance) -> (ErrorColumns, f64, Vec<f64>) {
    let grid = base.problem.grid;
    let n = grid.n();
    let w = grid.cell_area();
    let du = base.u() - other.u();
    let gu = gradient(base.u());
    let gv = gradient(other.u());
    let (j1, j2) = (&base.flux.flux, &other.flux.flux);
    let (mut grad_acc, mut sigma_acc, mut mis_acc) = (0.0, 0.0, 0.0);
    let mut pointwise_mis = Vec::with_capacity(n * n);
    let mut excluded = 0usize;
    for i in 0..n {
        for j in 0..n {
            let (ax, ay) = j1.get(i, j);
            let (bx, by) = j2.get(i, j);
            let m = ax.hypot(ay) * bx.hypot(by) - (ax * bx + ay * by);
            pointwise_mis.push(m);
            mis_acc += m;
            if base.flux.mask[[i, j]] && other.flux.mask[[i, j]] {
                let (ux, uy) = gu.get(i, j);
                let (vx, vy) = gv.get(i, j);
                grad_acc += (ux - vx).hypot(uy - vy);
                sigma_acc += (base.flux.sigma.get(i, j) - other.flux.sigma.get(i, j)).abs();
            } else {
                excluded += 1;
            }
        }
    }
    let cols = ErrorColumns {
        err_u_l1: du.norm(NormKind::L1),
        err_gradu_l1: w * grad_acc,
        err_sigma_l1: w * sigma_acc,
        err_j_l1: (j1 - j2).norm(NormKind::L1),
        energy_diff: (base.energy - other.energy).abs(),
        misalignment: w * mis_acc,
    };
    (cols, excluded as f64 / (n * n) as f64, pointwise_mis)
}

/// One explicit-constant inequality evaluated on a row.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    /// Bound including the discretization slack.
    pub rhs: f64,
    pub holds: bool,
}

/// Relative allowance added to explicit-constant bounds.
pub const BOUND_SLACK: f64 = 0.1;

/// The drift-perturbation inequalities with constant `M` and
/// `sigma_1 = max` of both coefficient fields.
pub fn drift_bounds(
    cols: &ErrorColumns,
    sizes: &MeasuredSizes,
    big_m: f64,
    sigma1: f64,
    area: f64,
) -> Vec<BoundCheck> {
    let df = sizes.drift_l1;
    let s = 1.0 + BOUND_SLACK;
    let check = |name, lhs: f64, rhs: f64| BoundCheck {
        name,
        lhs,
        rhs,
        holds: lhs <= rhs,
    };
    vec![
        check("energy", cols.energy_diff, big_m * df * s),
        check(
            "misalignment",
            cols.misalignment,
            2.0 * big_m * sigma1 * df * s,
        ),
        check(
            "flux",
            cols.err_j_l1,
            (4.0 * big_m * sigma1 * area).sqrt() * df.sqrt() * s,
        ),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub seed: u64,
    pub cols: ErrorColumns,
    pub iters: usize,
    pub converged: bool,
    /// `|u - u~|_{L2} / |u|_{L2}`.
    pub rel_l2: f64,
    pub sizes: MeasuredSizes,
    pub excluded_fraction: f64,
    /// Smallest pointwise `|J||J~| - J.J~`; nonnegative up to rounding.
    pub min_misalignment_density: f64,
    pub sigma0_est: f64,
    pub sigma1_est: f64,
    pub bounds: Vec<BoundCheck>,
}

impl SweepRow {
    pub fn valid(&self) -> bool {
        self.converged
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub points_used: usize,
    /// Sum of squared residuals of the least-squares line.
    pub residual: f64,
}

/// Ordinary least squares on `(ln eps, ln e)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    if let Some((index, &(eps, err))) = points
        .iter()
        .enumerate()
        .find(|(_, (e, v))| !(*e > 0.0 && *v > 0.0))
    {
        return Err(Error::NonPositivePoint { index, eps, err });
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(e, v)| (e.ln(), v.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("points", "all eps values coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = logs
        .iter()
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(RateFit {
        slope,
        intercept,
        points_used: logs.len(),
        residual,
    })
}

/// Bound-shape verdict for one column.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeVerdict {
    pub column: &'static str,
    pub exponent: f64,
    pub fit: Option<RateFit>,
    /// `e(eps)` non-increasing as `eps` decreases.
    pub monotone: bool,
    /// `slope >= exponent - SLOPE_MARGIN`.
    pub slope_ok: bool,
    /// `(e / eps^q)` at the smallest eps over its value at the largest.
    pub ratio_growth: f64,
    pub ratio_ok: bool,
}

impl ShapeVerdict {
    pub fn holds(&self) -> bool {
        self.monotone && self.slope_ok && self.ratio_ok
    }
}

pub const SLOPE_MARGIN: f64 = 0.05;
pub const RATIO_LIMIT: f64 = 1.5;

/// Checks each column of seed-averaged `(eps, columns)` pairs (ordered by
/// decreasing eps) against the shape of its bound.
pub fn shape_verdicts(averaged: &[(f64, ErrorColumns)]) -> Vec<ShapeVerdict> {
    COLUMNS
        .iter()
        .enumerate()
        .map(|(c, &(column, q))| {
            let series: Vec<(f64, f64)> = averaged
                .iter()
                .map(|(e, cols)| (*e, cols.values()[c]))
                .collect();
            let monotone = series.windows(2).all(|w| w[1].1 <= w[0].1);
            let fit = fit_rate(&series).ok();
            let slope_ok = fit.is_some_and(|f| f.slope >= q - SLOPE_MARGIN);
            let ratio_growth = match (series.first(), series.last()) {
                (Some(&(e0, v0)), Some(&(e1, v1))) if v0 > 0.0 && e0 > 0.0 && e1 > 0.0 => {
                    (v1 / e1.powf(q)) / (v0 / e0.powf(q))
                }
                _ => f64::NAN,
            };
            ShapeVerdict {
                column,
                exponent: q,
                fit,
                monotone,
                slope_ok,
                ratio_growth,
                ratio_ok: ratio_growth <= RATIO_LIMIT,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub spec: SweepSpec,
    pub base_iters: usize,
    pub base_converged: bool,
    /// `sigma` range of the base solution.
    pub base_sigma: (f64, f64),
    pub rows: Vec<SweepRow>,
    /// Seed-averaged columns of the valid rows, by decreasing eps.
    pub averaged: Vec<(f64, ErrorColumns)>,
    pub verdicts: Vec<ShapeVerdict>,
}

impl StabilityReport {
    pub fn all_bounds_hold(&self) -> bool {
        self.rows
            .iter()
            .filter(|r| r.valid())
            .all(|r| r.bounds.iter().all(|b| b.holds))
    }

    pub fn all_shapes_hold(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.iter().all(ShapeVerdict::holds)
    }
}

fn perturb(base: &ProblemData, spec: &SweepSpec, eps: f64, seed: u64) -> Result<PerturbedProblem> {
    match spec.mode {
        SweepMode::Structured(mode) => structured(base, spec.param.params(), eps, mode),
        SweepMode::Noise => {
            let noise = NoiseSpec::new(eps, seed);
            let mut p = base.clone();
            for param in spec.param.params() {
                // same streams as the replication experiment
                let stream = noise.on_stream(match param {
                    Param::Forcing => 0,
                    Param::Weight => 1,
                    Param::Drift => 2,
                });
                match param {
                    Param::Weight => {
                        let w = noise_scalar(&p.weight, &stream)?;
                        p = p.with_weight(w);
                    }
                    Param::Forcing => p.forcing = noise_scalar(&p.forcing, &stream)?,
                    Param::Drift => {
                        p.drift = noise_vector(&p.drift, &stream)?;
                        p.potential = None;
                    }
                }
            }
            p.exact_u = None;
            Ok(PerturbedProblem::new(
                base.clone(),
                p,
                spec.param.params().to_vec(),
                None,
            ))
        }
    }
}

fn sweep_row(base: &SolvedInstance, spec: &SweepSpec, eps: f64, seed: u64) -> Result<SweepRow> {
    let pp = perturb(&base.problem, spec, eps, seed)?;
    let other = SolvedInstance::solve(pp.perturbed, &spec.solver, spec.eta)?;
    let (cols, excluded_fraction, density) = compare(base, &other);
    let (s0a, s1a) = base.flux.sigma_range();
    let (s0b, s1b) = other.flux.sigma_range();
    let sigma1 = s1a.max(s1b);
    let bounds = if spec.param == SweepParam::Drift {
        drift_bounds(&cols, &pp.sizes, base.problem.big_m, sigma1, 1.0)
    } else {
        Vec::new()
    };
    let u_norm = base.u().norm(NormKind::L2);
    let rel_l2 = if u_norm > 0.0 {
        (base.u() - other.u()).norm(NormKind::L2) / u_norm
    } else {
        0.0
    };
    Ok(SweepRow {
        eps,
        seed,
        cols,
        iters: other.result.iterations,
        converged: other.result.converged,
        rel_l2,
        sizes: pp.sizes,
        excluded_fraction,
        min_misalignment_density: density.iter().copied().fold(f64::INFINITY, f64::min),
        sigma0_est: s0a.min(s0b),
        sigma1_est: sigma1,
        bounds,
    })
}

/// Solves the base instance once, then one perturbed instance per
/// `(eps, seed)`; rows are returned in `(eps, seed)` order.
pub fn run_sweep(p: &ProblemData, spec: &SweepSpec) -> Result<StabilityReport> {
    spec.validate()?;
    let base = SolvedInstance::solve(p.clone(), &spec.solver, spec.eta)?;
    let seeds: Vec<u64> = match spec.mode {
        SweepMode::Noise => spec.seeds.clone(),
        SweepMode::Structured(_) => vec![0],
    };
    let jobs: Vec<(f64, u64)> = spec
        .epsilons
        .iter()
        .flat_map(|&e| seeds.iter().map(move |&s| (e, s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(eps, seed)| sweep_row(&base, spec, eps, seed))
        .collect::<Result<Vec<_>>>()?;

    let mut averaged = Vec::new();
    for &eps in &spec.epsilons {
        let valid: Vec<&SweepRow> = rows.iter().filter(|r| r.eps == eps && r.valid()).collect();
        if valid.is_empty() || eps == 0.0 {
            continue;
        }
        let mut acc = [0.0; 6];
        for r in &valid {
            for (a, v) in acc.iter_mut().zip(r.cols.values()) {
                *a += v;
            }
        }
        let k = valid.len() as f64;
        averaged.push((eps, ErrorColumns::from_values(acc.map(|a| a / k))));
    }
    let verdicts = if averaged.len() >= 2 {
        shape_verdicts(&averaged)
    } else {
        Vec::new()
    };
    Ok(StabilityReport {
        spec: spec.clone(),
        base_iters: base.result.iterations,
        base_converged: base.result.converged,
        base_sigma: base.flux.sigma_range(),
        rows,
        averaged,
        verdicts,
    })
}

/// Noise levels of the replication experiment and the reference errors.
pub const TABLE1_DELTAS: [f64; 3] = [0.01, 0.035, 0.06];
pub const TABLE1_REFERENCE: [f64; 3] = [0.0260, 0.0978, 0.1718];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Run {
    pub delta: f64,
    pub seed: u64,
    pub rel_l2: f64,
    pub iters: usize,
    pub max_err: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Level {
    pub delta: f64,
    pub runs: Vec<Table1Run>,
    pub mean_rel_l2: f64,
    pub mean_iters: f64,
    pub max_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Report {
    pub n: usize,
    /// `n == 100`, the published mesh.
    pub replication: bool,
    pub levels: Vec<Table1Level>,
}

/// One noisy solve of the built-in example.
pub fn table1_run(
    base: &ProblemData,
    cfg: &SolverConfig,
    delta: f64,
    seed: u64,
) -> Result<Table1Run> {
    let exact = base
        .exact_u
        .as_ref()
        .ok_or_else(|| invalid("problem", "needs an exact solution"))?;
    let pp = noisy_instance(base, delta, seed)?;
    let r = solve(&pp.perturbed, cfg, &PoissonSolver::fast(base.grid))?;
    let err = &r.state.u - exact;
    Ok(Table1Run {
        delta,
        seed,
        rel_l2: err.norm(NormKind::L2) / exact.norm(NormKind::L2),
        iters: r.iterations,
        max_err: err.norm(NormKind::Linf),
        converged: r.converged,
    })
}

pub fn table1_experiment(cfg: &SolverConfig, seeds: &[u64], n: usize) -> Result<Table1Report> {
    table1_experiment_with(cfg, seeds, n, &TABLE1_DELTAS)
}

pub fn table1_experiment_with(
    cfg: &SolverConfig,
    seeds: &[u64],
    n: usize,
    deltas: &[f64],
) -> Result<Table1Report> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(invalid("seeds", "list is empty"));
    }
    let base = ProblemData::example1(GridSpec::new(n)?);
    let jobs: Vec<(f64, u64)> = deltas
        .iter()
        .flat_map(|&d| seeds.iter().map(move |&s| (d, s)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(d, s)| table1_run(&base, cfg, d, s))
        .collect::<Result<Vec<_>>>()?;
    let levels = deltas
        .iter()
        .map(|&delta| {
            let runs: Vec<Table1Run> = runs.iter().filter(|r| r.delta == delta).copied().collect();
            let k = runs.len() as f64;
            Table1Level {
                delta,
                mean_rel_l2: runs.iter().map(|r| r.rel_l2).sum::<f64>() / k,
                mean_iters: runs.iter().map(|r| r.iters as f64).sum::<f64>() / k,
                max_err: runs.iter().fold(0.0, |m, r| m.max(r.max_err)),
                runs,
            }
        })
        .collect();
    Ok(Table1Report {
        n,
        replication: n == 100,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fit_exact_power_laws() {
        let f = fit_rate(&[(1.0, 2.0), (4.0, 4.0)]).unwrap();
        assert_abs_diff_eq!(f.slope, 0.5, epsilon = 1e-14);
        let f = fit_rate(&[(1.0, 3.0), (2.0, 3.0), (4.0, 3.0)]).unwrap();
        assert_abs_diff_eq!(f.slope, 0.0, epsilon = 1e-14);
        let f = fit_rate(&[(1.0, 1.0), (2.0, 4.0), (4.0, 16.0)]).unwrap();
        assert_abs_diff_eq!(f.slope, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.residual, 0.0, epsilon = 1e-24);
        assert_eq!(f.points_used, 3);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert_eq!(fit_rate(&[(1.0, 1.0)]), Err(Error::TooFewPoints(1)));
        assert!(matches!(
            fit_rate(&[(1.0, 1.0), (2.0, 0.0)]),
            Err(Error::NonPositivePoint { index: 1, .. })
        ));
        assert!(fit_rate(&[(-1.0, 1.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn fit_residual_is_minimal() {
        let pts = [(0.1, 0.3), (0.2, 0.5), (0.4, 0.6), (0.8, 1.3)];
        let f = fit_rate(&pts).unwrap();
        let ssr = |a: f64, b: f64| -> f64 {
            pts.iter()
                .map(|(e, v)| (v.ln() - a - b * e.ln()).powi(2))
                .sum()
        };
        for (da, db) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
            assert!(ssr(f.intercept + da, f.slope + db) > f.residual);
        }
    }

    #[test]
    fn sweep_spec_validation() {
        let mut spec = SweepSpec {
            param: SweepParam::Weight,
            epsilons: vec![],
            mode: SweepMode::Structured(PerturbMode::ConstantShift),
            seeds: vec![],
            solver: SolverConfig::default(),
            eta: 1e-8,
        };
        assert!(spec.validate().is_err());
        spec.epsilons = vec![0.01, 0.02];
        assert!(spec.validate().is_err());
        spec.epsilons = vec![0.02, -0.01];
        assert!(spec.validate().is_err());
        spec.epsilons = vec![0.0];
        assert!(spec.validate().is_ok());
        spec.epsilons = vec![0.02, 0.01];
        assert!(spec.validate().is_ok());
        spec.mode = SweepMode::Noise;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn zero_epsilon_sweep_has_zero_columns() {
        let p = ProblemData::example1(GridSpec::new(16).unwrap());
        for param in [
            SweepParam::Weight,
            SweepParam::Drift,
            SweepParam::Forcing,
            SweepParam::Combined,
        ] {
            let spec = SweepSpec {
                param,
                epsilons: vec![0.0],
                mode: SweepMode::Structured(PerturbMode::SmoothBump),
                seeds: vec![],
                solver: SolverConfig::default(),
                eta: 1e-8,
            };
            let r = run_sweep(&p, &spec).unwrap();
            assert_eq!(r.rows.len(), 1);
            let cols = r.rows[0].cols;
            // |J||J| - J.J only vanishes up to rounding
            assert!(cols.misalignment.abs() < 1e-14);
            let exact = ErrorColumns {
                misalignment: 0.0,
                ..cols
            };
            assert_eq!(exact, ErrorColumns::default());
            assert!(r.verdicts.is_empty());
        }
    }

    #[test]
    fn shape_verdicts_on_synthetic_series() {
        let series: Vec<(f64, ErrorColumns)> = [0.04, 0.02, 0.01, 0.005]
            .iter()
            .map(|&e: &f64| {
                (
                    e,
                    ErrorColumns::from_values([e, e.sqrt(), e.sqrt(), e, e, e * e]),
                )
            })
            .collect();
        let v = shape_verdicts(&series);
        assert!(v.iter().all(ShapeVerdict::holds));
        // a column decaying slower than its exponent fails the shape test
        let slow: Vec<(f64, ErrorColumns)> = series
            .iter()
            .map(|(e, c)| {
                (
                    *e,
                    ErrorColumns {
                        err_u_l1: e.powf(0.2),
                        ..*c
                    },
                )
            })
            .collect();
        let v = shape_verdicts(&slow);
        assert!(!v[0].slope_ok && !v[0].ratio_ok && v[0].monotone);
    }

    #[test]
    fn drift_bound_arithmetic() {
        let cols = ErrorColumns {
            energy_diff: 1.0,
            misalignment: 1.0,
            err_j_l1: 1.0,
            ..Default::default()
        };
        let sizes = MeasuredSizes {
            weight_linf: 0.0,
            drift_l1: 1.0,
            forcing_linf: 0.0,
            potential_w11: None,
        };
        let b = drift_bounds(&cols, &sizes, 1.0, 1.0, 1.0);
        assert!(b.iter().all(|c| c.holds));
        assert_abs_diff_eq!(b[0].rhs, 1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(b[1].rhs, 2.2, epsilon = 1e-15);
        assert_abs_diff_eq!(b[2].rhs, 2.2, epsilon = 1e-15);
    }

    #[test]
    fn table1_zero_noise_matches_plain_solve() {
        let cfg = SolverConfig::default();
        let report = table1_experiment_with(&cfg, &[1, 2], 16, &[0.0]).unwrap();
        assert!(!report.replication);
        let runs = &report.levels[0].runs;
        assert_eq!(runs[0].rel_l2, runs[1].rel_l2);
        let base = ProblemData::example1(GridSpec::new(16).unwrap());
        let r = solve(&base, &cfg, &PoissonSolver::fast(base.grid)).unwrap();
        assert_eq!(runs[0].iters, r.iterations);
    }
}
