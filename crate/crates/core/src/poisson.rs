//! Dirichlet Poisson solver for the 5-point Laplacian on the unit square.
//!
//! The default method diagonalizes the interior Laplacian with a type-I
//! discrete sine transform along each axis (built on an FFT of length `2n`),
//! so a solve costs O(n^2 log n) and is exact to rounding. A conjugate
//! gradient method on the same operator is kept as an independent check.

use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{laplacian, GridSpec, NormKind, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonMethod {
    FastTransform,
    ConjugateGradient,
}

/// Solves `laplacian(u) = rhs` at interior nodes with `u = 0` on the boundary.
#[derive(Clone)]
pub struct PoissonSolver {
    grid: GridSpec,
    method: PoissonMethod,
    tolerance: f64,
    max_iter: usize,
    fft: Arc<dyn Fft<f64>>,
    /// Eigenvalues of the 1-D Dirichlet second difference, modes 1..n-1.
    eigenvalues: Vec<f64>,
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonSolver")
            .field("n", &self.grid.n())
            .field("method", &self.method)
            .field("tolerance", &self.tolerance)
            .finish()
    }
}

impl PoissonSolver {
    pub fn new(grid: GridSpec, method: PoissonMethod) -> Self {
        let n = grid.n();
        let h = grid.h();
        let fft = FftPlanner::new().plan_fft_forward(2 * n);
        let eigenvalues = (1..n)
            .map(|k| {
                let s = (k as f64 * std::f64::consts::PI / (2.0 * n as f64)).sin();
                -4.0 * s * s / (h * h)
            })
            .collect();
        Self {
            grid,
            method,
            tolerance: 1e-10,
            max_iter: 20 * n * n,
            fft,
            eigenvalues,
        }
    }

    pub fn fast(grid: GridSpec) -> Self {
        Self::new(grid, PoissonMethod::FastTransform)
    }

    /// Relative residual bound for the iterative method.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn method(&self) -> PoissonMethod {
        self.method
    }

    pub fn solve_dirichlet(&self, rhs: &ScalarField) -> Result<ScalarField> {
        if rhs.grid().n() != self.grid.n() {
            return Err(Error::GridMismatch {
                left: self.grid.n(),
                right: rhs.grid().n(),
            });
        }
        match self.method {
            PoissonMethod::FastTransform => Ok(self.solve_dst(rhs)),
            PoissonMethod::ConjugateGradient => self.solve_cg(rhs),
        }
    }

    fn solve_dst(&self, rhs: &ScalarField) -> ScalarField {
        let n = self.grid.n();
        let m = n - 1;
        let rv = rhs.values();
        let mut coeffs = Array2::from_shape_fn((m, m), |(i, j)| rv[[i + 1, j + 1]]);

        let mut scratch = DstScratch::new(n, self.fft.get_inplace_scratch_len());
        self.dst_rows_and_cols(&mut coeffs, &mut scratch);
        for ((k, l), c) in coeffs.indexed_iter_mut() {
            *c /= self.eigenvalues[k] + self.eigenvalues[l];
        }
        self.dst_rows_and_cols(&mut coeffs, &mut scratch);
        // DST-I is its own inverse up to a factor 2/n per axis.
        let norm = (2.0 / n as f64) * (2.0 / n as f64);

        let mut out = ScalarField::zeros(self.grid);
        let ov = out.values_mut();
        for i in 0..m {
            for j in 0..m {
                ov[[i + 1, j + 1]] = coeffs[[i, j]] * norm;
            }
        }
        out
    }

    fn dst_rows_and_cols(&self, a: &mut Array2<f64>, scratch: &mut DstScratch) {
        let m = a.nrows();
        let mut line = vec![0.0; m];
        for i in 0..m {
            for j in 0..m {
                line[j] = a[[i, j]];
            }
            self.dst1(&mut line, scratch);
            for j in 0..m {
                a[[i, j]] = line[j];
            }
        }
        for j in 0..m {
            for i in 0..m {
                line[i] = a[[i, j]];
            }
            self.dst1(&mut line, scratch);
            for i in 0..m {
                a[[i, j]] = line[i];
            }
        }
    }

    /// In-place `X_k = sum_j x_j sin(pi (j+1)(k+1) / n)` for a line of
    /// length `n - 1`, via the odd extension of length `2n`.
    fn dst1(&self, line: &mut [f64], scratch: &mut DstScratch) {
        let m = line.len();
        let n = m + 1;
        let buf = &mut scratch.buffer;
        buf[0] = Complex::new(0.0, 0.0);
        buf[n] = Complex::new(0.0, 0.0);
        for (j, &x) in line.iter().enumerate() {
            buf[j + 1] = Complex::new(x, 0.0);
            buf[2 * n - 1 - j] = Complex::new(-x, 0.0);
        }
        self.fft.process_with_scratch(buf, &mut scratch.fft_scratch);
        for (k, out) in line.iter_mut().enumerate() {
            *out = -0.5 * buf[k + 1].im;
        }
    }

    /// Conjugate gradient on the negated (positive definite) Laplacian.
    fn solve_cg(&self, rhs: &ScalarField) -> Result<ScalarField> {
        let grid = self.grid;
        // -laplacian(u) = -rhs on the interior
        let b = rhs.map(|v| -v).with_zero_boundary();
        let b_norm = b.frobenius();
        let mut u = ScalarField::zeros(grid);
        if b_norm == 0.0 {
            return Ok(u);
        }
        let apply = |v: &ScalarField| laplacian(v).map(|x| -x);
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        for _ in 0..self.max_iter {
            let ap = apply(&p);
            let alpha = rr / dot(&p, &ap);
            u = u.zip_map(&p, |a, b| a + alpha * b)?;
            r = r.zip_map(&ap, |a, b| a - alpha * b)?;
            let rr_new = dot(&r, &r);
            if rr_new.sqrt() <= self.tolerance * b_norm {
                return Ok(u);
            }
            let beta = rr_new / rr;
            p = r.zip_map(&p, |a, b| a + beta * b)?;
            rr = rr_new;
        }
        Err(Error::NotConverged {
            solver: "conjugate gradient",
            iterations: self.max_iter,
            residual: rr.sqrt() / b_norm,
        })
    }
}

fn dot(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values()
        .iter()
        .zip(b.values().iter())
        .map(|(x, y)| x * y)
        .sum()
}

struct DstScratch {
    buffer: Vec<Complex<f64>>,
    fft_scratch: Vec<Complex<f64>>,
}

impl DstScratch {
    fn new(n: usize, fft_scratch_len: usize) -> Self {
        Self {
            buffer: vec![Complex::new(0.0, 0.0); 2 * n],
            fft_scratch: vec![Complex::new(0.0, 0.0); fft_scratch_len],
        }
    }
}

/// Relative residual `|laplacian(u) - rhs| / |rhs|` over interior nodes.
pub fn relative_residual(u: &ScalarField, rhs: &ScalarField) -> f64 {
    let res = (&laplacian(u) - rhs).with_zero_boundary();
    let denom = rhs.with_zero_boundary().norm(NormKind::L2);
    if denom == 0.0 {
        res.norm(NormKind::L2)
    } else {
        res.norm(NormKind::L2) / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(grid: GridSpec, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.nodes();
        let v = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
        ScalarField::new(grid, v).unwrap()
    }

    fn manufactured_error(n: usize) -> f64 {
        let grid = GridSpec::new(n).unwrap();
        let rhs = ScalarField::from_fn(grid, |x, y| {
            -2.0 * PI * PI * (PI * x).sin() * (PI * y).sin()
        });
        let exact = ScalarField::from_fn_dirichlet(grid, |x, y| (PI * x).sin() * (PI * y).sin());
        let u = PoissonSolver::fast(grid).solve_dirichlet(&rhs).unwrap();
        (&u - &exact).norm(NormKind::Linf)
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let grid = GridSpec::new(16).unwrap();
        for method in [
            PoissonMethod::FastTransform,
            PoissonMethod::ConjugateGradient,
        ] {
            let u = PoissonSolver::new(grid, method)
                .solve_dirichlet(&ScalarField::zeros(grid))
                .unwrap();
            assert_eq!(u.norm(NormKind::Linf), 0.0);
        }
    }

    #[test]
    fn manufactured_solution_at_n100() {
        assert!(manufactured_error(100) <= 2e-3);
    }

    #[test]
    fn second_order_convergence() {
        let mut prev = manufactured_error(16);
        for n in [32, 64, 128] {
            let e = manufactured_error(n);
            let ratio = prev / e;
            assert!((3.6..=4.4).contains(&ratio), "n = {n}: ratio {ratio}");
            prev = e;
        }
    }

    #[test]
    fn residual_is_tiny_and_boundary_zero() {
        let grid = GridSpec::new(40).unwrap();
        let rhs = random_field(grid, 3);
        let u = PoissonSolver::fast(grid).solve_dirichlet(&rhs).unwrap();
        assert!(u.vanishes_on_boundary());
        assert!(relative_residual(&u, &rhs) < 1e-10);
    }

    #[test]
    fn linearity() {
        let grid = GridSpec::new(24).unwrap();
        let s = PoissonSolver::fast(grid);
        let r1 = random_field(grid, 1);
        let r2 = random_field(grid, 2);
        let lhs = s.solve_dirichlet(&(&r1 + &r2)).unwrap();
        let rhs = &s.solve_dirichlet(&r1).unwrap() + &s.solve_dirichlet(&r2).unwrap();
        assert!((&lhs - &rhs).norm(NormKind::Linf) < 1e-10);
    }

    #[test]
    fn fast_and_cg_agree() {
        let grid = GridSpec::new(32).unwrap();
        let rhs = random_field(grid, 11);
        let fast = PoissonSolver::fast(grid).solve_dirichlet(&rhs).unwrap();
        let cg = PoissonSolver::new(grid, PoissonMethod::ConjugateGradient)
            .with_tolerance(1e-12)
            .solve_dirichlet(&rhs)
            .unwrap();
        let rel = (&fast - &cg).norm(NormKind::L2) / fast.norm(NormKind::L2);
        assert!(rel < 1e-8, "relative difference {rel}");
    }

    #[test]
    fn cg_reports_non_convergence() {
        let grid = GridSpec::new(32).unwrap();
        let err = PoissonSolver::new(grid, PoissonMethod::ConjugateGradient)
            .with_max_iter(2)
            .solve_dirichlet(&random_field(grid, 5))
            .unwrap_err();
        assert!(matches!(err, Error::NotConverged { iterations: 2, .. }));
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let s = PoissonSolver::fast(GridSpec::new(8).unwrap());
        let rhs = ScalarField::zeros(GridSpec::new(9).unwrap());
        assert!(matches!(
            s.solve_dirichlet(&rhs),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn deterministic() {
        let grid = GridSpec::new(20).unwrap();
        let rhs = random_field(grid, 9);
        let s = PoissonSolver::fast(grid);
        assert_eq!(
            s.solve_dirichlet(&rhs).unwrap(),
            s.solve_dirichlet(&rhs).unwrap()
        );
    }
}
