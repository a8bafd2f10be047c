//! Stochastic noise and structured perturbations of problem data.
//!
//! Noise follows `X~ = X + gamma R` with `R` standard normal per node and
//! `gamma = delta |X| / |R|`, both norms being the unweighted Frobenius norm
//! over all nodes. Normal variates come from `rand_distr::StandardNormal`
//! driven by a `ChaCha8Rng` seeded with `seed` on stream `stream`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::grid::{gradient, GridSpec, NormKind, ScalarField, VectorField};
use crate::problem::ProblemData;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Relative noise level.
    pub delta: f64,
    pub seed: u64,
    /// ChaCha stream, so one seed can feed independent draws for a, F, H.
    pub stream: u64,
}

impl NoiseSpec {
    pub fn new(delta: f64, seed: u64) -> Self {
        Self {
            delta,
            seed,
            stream: 0,
        }
    }

    pub fn on_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    fn check(&self) -> Result<()> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(invalid(
                "delta",
                format!("must be >= 0, got {}", self.delta),
            ));
        }
        Ok(())
    }
}

fn normal_field(grid: GridSpec, rng: &mut ChaCha8Rng) -> ScalarField {
    let mut r = ScalarField::zeros(grid);
    for v in r.values_mut().iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    r
}

pub fn noise_scalar(field: &ScalarField, spec: &NoiseSpec) -> Result<ScalarField> {
    spec.check()?;
    if spec.delta == 0.0 {
        return Ok(field.clone());
    }
    let norm = field.frobenius();
    if norm == 0.0 {
        return Err(Error::NoiseScaleUndefined);
    }
    let r = normal_field(*field.grid(), &mut spec.rng());
    let gamma = spec.delta * norm / r.frobenius();
    field.zip_map(&r, |v, r| v + gamma * r)
}

/// Noise on both components with one joint `gamma`.
pub fn noise_vector(field: &VectorField, spec: &NoiseSpec) -> Result<VectorField> {
    spec.check()?;
    if spec.delta == 0.0 {
        return Ok(field.clone());
    }
    let norm = field.frobenius();
    if norm == 0.0 {
        return Err(Error::NoiseScaleUndefined);
    }
    let mut rng = spec.rng();
    let grid = *field.grid();
    let rx = normal_field(grid, &mut rng);
    let ry = normal_field(grid, &mut rng);
    let gamma = spec.delta * norm / rx.frobenius().hypot(ry.frobenius());
    VectorField::new(
        field.x().zip_map(&rx, |v, r| v + gamma * r)?,
        field.y().zip_map(&ry, |v, r| v + gamma * r)?,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbMode {
    /// `X + eps`.
    ConstantShift,
    /// `X + eps sin(pi x) sin(pi y)`.
    SmoothBump,
}

impl PerturbMode {
    pub fn name(&self) -> &'static str {
        match self {
            PerturbMode::ConstantShift => "constant-shift",
            PerturbMode::SmoothBump => "smooth-bump",
        }
    }
}

impl std::str::FromStr for PerturbMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant-shift" => Ok(Self::ConstantShift),
            "smooth-bump" => Ok(Self::SmoothBump),
            other => Err(invalid("mode", format!("unknown mode `{other}`"))),
        }
    }
}

/// `sin(pi x) sin(pi y)`, the bump profile shared by the structured
/// perturbations.
pub fn bump(grid: GridSpec) -> ScalarField {
    ScalarField::from_fn(grid, |x, y| (PI * x).sin() * (PI * y).sin())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbed<T> {
    pub field: T,
    pub nominal: f64,
    /// Size actually realized on the grid; differs from `nominal` only when
    /// the grid misses the profile's extremum by more than `1e-3 eps`.
    pub measured: f64,
}

/// Scalar perturbation with `|X - X~|_inf = eps` (as far as the grid allows).
pub fn perturb_scalar(
    field: &ScalarField,
    epsilon: f64,
    mode: PerturbMode,
) -> Result<Perturbed<ScalarField>> {
    if !epsilon.is_finite() {
        return Err(invalid("epsilon", "must be finite"));
    }
    let out = match mode {
        PerturbMode::ConstantShift => field.map(|v| v + epsilon),
        PerturbMode::SmoothBump => {
            let b = bump(*field.grid());
            field.zip_map(&b, |v, b| v + epsilon * b)?
        }
    };
    let realized = (&out - field).norm(NormKind::Linf);
    let measured = if (realized - epsilon.abs()).abs() <= 1e-3 * epsilon.abs() {
        epsilon.abs()
    } else {
        realized
    };
    Ok(Perturbed {
        field: out,
        nominal: epsilon,
        measured,
    })
}

/// Weight perturbation. Returns warnings when a negative shift pushes the
/// weight below half its original minimum.
pub fn perturb_weight(
    a: &ScalarField,
    epsilon: f64,
    mode: PerturbMode,
) -> Result<(Perturbed<ScalarField>, Vec<String>)> {
    let out = perturb_scalar(a, epsilon, mode)?;
    let mut warnings = Vec::new();
    if out.field.min() < 0.5 * a.min() {
        warnings.push(format!(
            "perturbed weight min {} below half of original min {}",
            out.field.min(),
            a.min()
        ));
    }
    Ok((out, warnings))
}

/// Conservative drift perturbation `f~ = f + eps bump`, `F~ = gradient(f~)`.
pub fn perturb_potential(f: &ScalarField, epsilon: f64) -> Result<(ScalarField, VectorField)> {
    let ft = f.zip_map(&bump(*f.grid()), |v, b| v + epsilon * b)?;
    let drift = gradient(&ft);
    Ok((ft, drift))
}

/// Drift perturbation by a discrete gradient, `F~ = F + eps gradient(bump)`,
/// usable when `F` itself has no potential. `F - F~` is then the gradient of
/// `f - f~ = -eps bump`.
pub fn perturb_drift_by_gradient(drift: &VectorField, epsilon: f64) -> VectorField {
    let g = gradient(&bump(*drift.grid())).scale(epsilon);
    drift + &g
}

/// `|g|_{L1} + |gradient g|_{L1}`.
pub fn w11_norm(g: &ScalarField) -> f64 {
    g.norm(NormKind::L1) + gradient(g).norm(NormKind::L1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    Weight,
    Drift,
    Forcing,
}

impl Param {
    pub fn name(&self) -> &'static str {
        match self {
            Param::Weight => "a",
            Param::Drift => "f",
            Param::Forcing => "H",
        }
    }
}

/// Perturbation magnitudes between two instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredSizes {
    pub weight_linf: f64,
    pub drift_l1: f64,
    pub forcing_linf: f64,
    /// `|f - f~|_{W^{1,1}}`, when the potential difference is known.
    pub potential_w11: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedProblem {
    pub base: ProblemData,
    pub perturbed: ProblemData,
    pub applied: Vec<Param>,
    /// `f~ - f`, known for conservative drift perturbations.
    pub potential_delta: Option<ScalarField>,
    pub sizes: MeasuredSizes,
}

impl PerturbedProblem {
    pub fn new(
        base: ProblemData,
        perturbed: ProblemData,
        mut applied: Vec<Param>,
        potential_delta: Option<ScalarField>,
    ) -> Self {
        applied.sort();
        applied.dedup();
        let sizes = measure(&base, &perturbed, potential_delta.as_ref());
        Self {
            base,
            perturbed,
            applied,
            potential_delta,
            sizes,
        }
    }
}

pub fn measure(
    base: &ProblemData,
    perturbed: &ProblemData,
    potential_delta: Option<&ScalarField>,
) -> MeasuredSizes {
    MeasuredSizes {
        weight_linf: (&base.weight - &perturbed.weight).norm(NormKind::Linf),
        drift_l1: (&base.drift - &perturbed.drift).norm(NormKind::L1),
        forcing_linf: (&base.forcing - &perturbed.forcing).norm(NormKind::Linf),
        potential_w11: potential_delta.map(w11_norm),
    }
}

/// Applies the structured perturbations used by the stability sweeps.
/// The drift is perturbed through its potential when one exists, otherwise
/// by `eps gradient(bump)`.
pub fn structured(
    base: &ProblemData,
    params: &[Param],
    epsilon: f64,
    mode: PerturbMode,
) -> Result<PerturbedProblem> {
    let mut p = base.clone();
    let mut potential_delta = None;
    for param in params {
        match param {
            Param::Weight => {
                let (w, _) = perturb_weight(&p.weight, epsilon, mode)?;
                p = p.with_weight(w.field);
            }
            Param::Forcing => {
                p.forcing = perturb_scalar(&p.forcing, epsilon, mode)?.field;
            }
            Param::Drift => {
                let delta = bump(p.grid).scale(epsilon);
                match &p.potential {
                    Some(f) => {
                        let (ft, drift) = perturb_potential(f, epsilon)?;
                        p.potential = Some(ft);
                        p.drift = drift;
                    }
                    None => p.drift = perturb_drift_by_gradient(&p.drift, epsilon),
                }
                potential_delta = Some(delta);
            }
        }
    }
    // the perturbed instance has no known exact solution
    p.exact_u = None;
    Ok(PerturbedProblem::new(
        base.clone(),
        p,
        params.to_vec(),
        potential_delta,
    ))
}

/// The stochastic model applied to `H`, `a` and `F` (streams 0, 1, 2 of
/// `seed`).
pub fn noisy_instance(base: &ProblemData, delta: f64, seed: u64) -> Result<PerturbedProblem> {
    let spec = NoiseSpec::new(delta, seed);
    let mut p = base.clone();
    p.forcing = noise_scalar(&base.forcing, &spec.on_stream(0))?;
    p = p.with_weight(noise_scalar(&base.weight, &spec.on_stream(1))?);
    p.drift = noise_vector(&base.drift, &spec.on_stream(2))?;
    p.potential = None;
    Ok(PerturbedProblem::new(
        base.clone(),
        p,
        vec![Param::Forcing, Param::Weight, Param::Drift],
        None,
    ))
}
