//! Node-collocated grids on the unit square and the discrete calculus used
//! by every other module.
//!
//! Fields are sampled at the nodes `(i h, j h)`, `0 <= i, j <= n`, and stored
//! in an `(n + 1) x (n + 1)` array indexed `[[i, j]]` with `i` running along
//! `x`. Row-major order therefore means `i` is the slow index.
//!
//! The gradient uses forward differences with zero ghost values past the
//! last node; the divergence uses backward differences with zero ghost values
//! before the first node. With these conventions `divergence` is exactly the
//! negative adjoint of `gradient` for fields vanishing on the boundary, and
//! `divergence(gradient(u))` is the 5-point Laplacian at interior nodes.
//!
//! Integrals use the cell quadrature `h^2 * sum_{0 <= i, j < n}`: each cell
//! `[ih, (i+1)h] x [jh, (j+1)h]` is represented by its lower-left node. This
//! is the node set carrying every forward difference of a zero-boundary
//! field, so discrete inner products, energies and norms all agree with the
//! adjoint pairing above.

use std::ops::{Add, Mul, Neg, Sub};

use ndarray::{Array2, Zip};

use crate::error::{Error, Result};

/// Uniform grid on `[0, 1]^2` with `n` subdivisions per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    h: f64,
}

impl GridSpec {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::GridTooSmall(n));
        }
        Ok(Self {
            n,
            h: 1.0 / n as f64,
        })
    }

    /// Subdivisions per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Mesh size `1 / n`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Nodes per axis, `n + 1`.
    pub fn nodes(&self) -> usize {
        self.n + 1
    }

    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n || j == self.n
    }

    /// Quadrature weight `h^2`.
    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    fn shape(&self) -> (usize, usize) {
        (self.n + 1, self.n + 1)
    }

    fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GridMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }
}

/// Which discrete norm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
    Linf,
}

/// A real function sampled at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Array2<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Array2<f64>) -> Result<Self> {
        if values.dim() != grid.shape() {
            return Err(Error::ShapeMismatch {
                expected: grid.nodes(),
                got: values.dim(),
            });
        }
        if let Some(((i, j), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { i, j });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: Array2::zeros(grid.shape()),
        }
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self {
            grid,
            values: Array2::from_elem(grid.shape(), c),
        }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn(grid.shape(), |(i, j)| f(grid.coord(i), grid.coord(j)));
        Self { grid, values }
    }

    /// Samples `f(x, y)` at interior nodes and sets the boundary to zero.
    pub fn from_fn_dirichlet(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn(grid.shape(), |(i, j)| {
            if grid.is_boundary(i, j) {
                0.0
            } else {
                f(grid.coord(i), grid.coord(j))
            }
        });
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[[i, j]] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.mapv(f),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = Zip::from(&self.values)
            .and(&other.values)
            .map_collect(|&a, &b| f(a, b));
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// True when every boundary node holds exactly zero.
    pub fn vanishes_on_boundary(&self) -> bool {
        self.values
            .indexed_iter()
            .all(|((i, j), &v)| !self.grid.is_boundary(i, j) || v == 0.0)
    }

    /// Copy with the boundary nodes set to zero.
    pub fn with_zero_boundary(&self) -> Self {
        let mut out = self.clone();
        let n = self.grid.n;
        for k in 0..=n {
            out.values[[0, k]] = 0.0;
            out.values[[n, k]] = 0.0;
            out.values[[k, 0]] = 0.0;
            out.values[[k, n]] = 0.0;
        }
        out
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cell quadrature of the field.
    pub fn integral(&self) -> f64 {
        self.grid.cell_area() * cell_sum(&self.values, self.grid.n, |v| v)
    }

    /// Cell-quadrature inner product.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let n = self.grid.n;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.values[[i, j]] * other.values[[i, j]];
            }
        }
        Ok(self.grid.cell_area() * acc)
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        let n = self.grid.n;
        let w = self.grid.cell_area();
        match kind {
            NormKind::L1 => w * cell_sum(&self.values, n, f64::abs),
            NormKind::L2 => (w * cell_sum(&self.values, n, |v| v * v)).sqrt(),
            NormKind::Linf => self.values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// Unweighted Euclidean norm over every node (the Frobenius norm of the
    /// sample matrix).
    pub fn frobenius(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

fn cell_sum(values: &Array2<f64>, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += f(values[[i, j]]);
        }
    }
    acc
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
            .expect("grid mismatch in add")
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
            .expect("grid mismatch in sub")
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, c: f64) -> ScalarField {
        self.scale(c)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scale(-1.0)
    }
}

/// A planar vector field sampled at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    x: ScalarField,
    y: ScalarField,
}

impl VectorField {
    pub fn new(x: ScalarField, y: ScalarField) -> Result<Self> {
        x.grid.check_same(&y.grid)?;
        Ok(Self { x, y })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
        }
    }

    pub fn constant(grid: GridSpec, cx: f64, cy: f64) -> Self {
        Self {
            x: ScalarField::constant(grid, cx),
            y: ScalarField::constant(grid, cy),
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        Self {
            x: ScalarField::from_fn(grid, |x, y| f(x, y).0),
            y: ScalarField::from_fn(grid, |x, y| f(x, y).1),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.x.grid
    }

    pub fn x(&self) -> &ScalarField {
        &self.x
    }

    pub fn y(&self) -> &ScalarField {
        &self.y
    }

    pub fn into_components(self) -> (ScalarField, ScalarField) {
        (self.x, self.y)
    }

    pub fn get(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x.values[[i, j]], self.y.values[[i, j]])
    }

    pub fn magnitude(&self) -> ScalarField {
        self.x
            .zip_map(&self.y, f64::hypot)
            .expect("components share a grid")
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            x: self.x.scale(c),
            y: self.y.scale(c),
        }
    }

    /// Pointwise product with a scalar field.
    pub fn scale_by(&self, s: &ScalarField) -> Result<Self> {
        Ok(Self {
            x: self.x.zip_map(s, |a, b| a * b)?,
            y: self.y.zip_map(s, |a, b| a * b)?,
        })
    }

    /// Pointwise dot product.
    pub fn dot(&self, other: &Self) -> Result<ScalarField> {
        let xx = self.x.zip_map(&other.x, |a, b| a * b)?;
        let yy = self.y.zip_map(&other.y, |a, b| a * b)?;
        Ok(&xx + &yy)
    }

    /// Cell-quadrature inner product.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        Ok(self.x.inner(&other.x)? + self.y.inner(&other.y)?)
    }

    /// Norms of the pointwise Euclidean magnitude.
    pub fn norm(&self, kind: NormKind) -> f64 {
        self.magnitude().norm(kind)
    }

    /// Frobenius norm of both components stacked together.
    pub fn frobenius(&self) -> f64 {
        self.x.frobenius().hypot(self.y.frobenius())
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        VectorField {
            x: &self.x + &rhs.x,
            y: &self.y + &rhs.y,
        }
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        VectorField {
            x: &self.x - &rhs.x,
            y: &self.y - &rhs.y,
        }
    }
}

impl Neg for &VectorField {
    type Output = VectorField;
    fn neg(self) -> VectorField {
        self.scale(-1.0)
    }
}

/// Forward-difference gradient with zero ghost values past the last node.
pub fn gradient(u: &ScalarField) -> VectorField {
    let grid = u.grid;
    let n = grid.n;
    let inv_h = 1.0 / grid.h;
    let v = &u.values;
    let gx = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        let next = if i < n { v[[i + 1, j]] } else { 0.0 };
        (next - v[[i, j]]) * inv_h
    });
    let gy = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        let next = if j < n { v[[i, j + 1]] } else { 0.0 };
        (next - v[[i, j]]) * inv_h
    });
    VectorField {
        x: ScalarField { grid, values: gx },
        y: ScalarField { grid, values: gy },
    }
}

/// Backward-difference divergence with zero ghost values before the first
/// node; the negative adjoint of [`gradient`].
pub fn divergence(p: &VectorField) -> ScalarField {
    let grid = p.x.grid;
    let inv_h = 1.0 / grid.h;
    let px = &p.x.values;
    let py = &p.y.values;
    let values = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        let prev_x = if i > 0 { px[[i - 1, j]] } else { 0.0 };
        let prev_y = if j > 0 { py[[i, j - 1]] } else { 0.0 };
        (px[[i, j]] - prev_x + py[[i, j]] - prev_y) * inv_h
    });
    ScalarField { grid, values }
}

/// 5-point Laplacian at interior nodes, zero on the boundary.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    let grid = u.grid;
    let n = grid.n;
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let v = &u.values;
    let values = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        if grid.is_boundary(i, j) {
            0.0
        } else {
            (v[[i + 1, j]] + v[[i - 1, j]] + v[[i, j + 1]] + v[[i, j - 1]] - 4.0 * v[[i, j]])
                * inv_h2
        }
    });
    debug_assert_eq!(values.dim(), (n + 1, n + 1));
    ScalarField { grid, values }
}

/// Forward-difference curl `dx(p_y) - dy(p_x)` evaluated at the nodes
/// `0 <= i, j < n - 1` where both differences stay inside the grid; other
/// nodes are zero.
pub fn discrete_curl(p: &VectorField) -> ScalarField {
    let grid = p.x.grid;
    let n = grid.n;
    let inv_h = 1.0 / grid.h;
    let px = &p.x.values;
    let py = &p.y.values;
    let values = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        if i + 1 < n && j + 1 < n {
            (py[[i + 1, j]] - py[[i, j]] - px[[i, j + 1]] + px[[i, j]]) * inv_h
        } else {
            0.0
        }
    });
    ScalarField { grid, values }
}
