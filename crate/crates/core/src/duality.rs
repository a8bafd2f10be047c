//! Flux construction and minimality certificates.
//!
//! For a candidate `u`, the flux is `J = sigma (grad u + F)` with
//! `sigma = a / |grad u + F|`. A minimizer is certified by three numbers:
//! the duality gap between the primal energy and `<F, J>`, the residual of
//! `div J = H`, and the violation of the dual constraint `|J| <= a`.

use ndarray::Array2;

use crate::error::Result;
use crate::fmt::fmt_f64;
use crate::grid::{divergence, gradient, NormKind, ScalarField, VectorField};
use crate::problem::ProblemData;

pub const DEFAULT_ETA: f64 = 1e-8;

/// Flux `J` and coefficient `sigma` of a candidate solution.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxPair {
    pub flux: VectorField,
    pub sigma: ScalarField,
    /// `true` where `|grad u + F| >= eta`.
    pub mask: Array2<bool>,
    pub eta: f64,
}

impl FluxPair {
    pub fn masked_fraction(&self) -> f64 {
        let total = self.mask.len() as f64;
        self.mask.iter().filter(|&&m| !m).count() as f64 / total
    }

    /// Smallest and largest `sigma` over unmasked nodes, the measured
    /// stand-ins for the admissibility constants.
    pub fn sigma_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for (s, &m) in self.sigma.values().iter().zip(self.mask.iter()) {
            if m {
                lo = lo.min(*s);
                hi = hi.max(*s);
            }
        }
        (lo, hi)
    }
}

pub fn flux(u: &ScalarField, p: &ProblemData, eta: f64) -> FluxPair {
    let g = &gradient(u) + &p.drift;
    let grid = p.grid;
    let shape = (grid.nodes(), grid.nodes());
    let mut jx = Array2::zeros(shape);
    let mut jy = Array2::zeros(shape);
    let mut sigma = Array2::zeros(shape);
    let mut mask = Array2::from_elem(shape, false);
    for i in 0..grid.nodes() {
        for j in 0..grid.nodes() {
            let (gx, gy) = g.get(i, j);
            let mag = gx.hypot(gy);
            if mag >= eta {
                let s = p.weight.get(i, j) / mag;
                sigma[[i, j]] = s;
                jx[[i, j]] = s * gx;
                jy[[i, j]] = s * gy;
                mask[[i, j]] = true;
            }
        }
    }
    let field = |v| ScalarField::new(grid, v).expect("flux values are finite");
    FluxPair {
        flux: VectorField::new(field(jx), field(jy)).expect("same grid"),
        sigma: field(sigma),
        mask,
        eta,
    }
}

/// `sum a |grad u + F| + H u` under the cell quadrature.
pub fn primal_energy(u: &ScalarField, p: &ProblemData) -> f64 {
    let g = (&gradient(u) + &p.drift).magnitude();
    let density = g
        .zip_map(&p.weight, |g, a| a * g)
        .and_then(|t| Ok(&t + &u.zip_map(&p.forcing, |u, h| u * h)?))
        .expect("problem fields share a grid");
    density.integral()
}

/// Dual objective `<F, J>`.
pub fn dual_value(flux: &VectorField, drift: &VectorField) -> Result<f64> {
    drift.inner(flux)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub primal: f64,
    pub dual: f64,
    /// `primal - dual`.
    pub gap: f64,
    /// `|div J - H|_{L1}` over interior nodes whose divergence stencil is
    /// fully unmasked.
    pub el_residual_l1: f64,
    /// `max (|J| - a)^+`.
    pub flux_bound_violation: f64,
    /// `|H|_{L1}`, for normalizing the residual.
    pub forcing_l1: f64,
    pub masked_fraction: f64,
}

impl Certificate {
    pub fn relative_gap(&self) -> f64 {
        self.gap.abs() / self.primal.abs()
    }

    pub fn relative_el_residual(&self) -> f64 {
        if self.forcing_l1 == 0.0 {
            self.el_residual_l1
        } else {
            self.el_residual_l1 / self.forcing_l1
        }
    }

    fn entries(&self) -> [(&'static str, f64); 9] {
        [
            ("primal", self.primal),
            ("dual", self.dual),
            ("gap", self.gap),
            ("relative_gap", self.relative_gap()),
            ("el_residual_l1", self.el_residual_l1),
            ("relative_el_residual", self.relative_el_residual()),
            ("flux_bound_violation", self.flux_bound_violation),
            ("forcing_l1", self.forcing_l1),
            ("masked_fraction", self.masked_fraction),
        ]
    }

    /// `key = value` lines.
    pub fn to_key_values(&self) -> String {
        self.entries()
            .iter()
            .map(|(k, v)| format!("{k} = {}\n", fmt_f64(*v)))
            .collect()
    }

    pub fn csv_header() -> String {
        Self {
            primal: 0.0,
            dual: 0.0,
            gap: 0.0,
            el_residual_l1: 0.0,
            flux_bound_violation: 0.0,
            forcing_l1: 0.0,
            masked_fraction: 0.0,
        }
        .entries()
        .iter()
        .map(|(k, _)| *k)
        .collect::<Vec<_>>()
        .join(",")
    }

    pub fn csv_row(&self) -> String {
        self.entries()
            .iter()
            .map(|(_, v)| fmt_f64(*v))
            .collect::<Vec<_>>()
            .join(",")
    }
}

pub fn certify(u: &ScalarField, p: &ProblemData, eta: f64) -> Certificate {
    let pair = flux(u, p, eta);
    certify_with(u, p, &pair)
}

/// Certificate for a precomputed flux pair.
pub fn certify_with(u: &ScalarField, p: &ProblemData, pair: &FluxPair) -> Certificate {
    let primal = primal_energy(u, p);
    let dual = dual_value(&pair.flux, &p.drift).expect("problem fields share a grid");
    let div = divergence(&pair.flux);
    let grid = p.grid;
    let n = grid.n();
    let mut residual = 0.0;
    for i in 1..n {
        for j in 1..n {
            if pair.mask[[i, j]] && pair.mask[[i - 1, j]] && pair.mask[[i, j - 1]] {
                residual += (div.get(i, j) - p.forcing.get(i, j)).abs();
            }
        }
    }
    let mag = pair.flux.magnitude();
    let violation = mag
        .values()
        .iter()
        .zip(p.weight.values().iter())
        .fold(0.0f64, |acc, (j, a)| acc.max(j - a));
    Certificate {
        primal,
        dual,
        gap: primal - dual,
        el_residual_l1: residual * grid.cell_area(),
        flux_bound_violation: violation.max(0.0),
        forcing_l1: p.forcing.norm(NormKind::L1),
        masked_fraction: pair.masked_fraction(),
    }
}
