//! Broken polynomial spaces on a 1D mesh.
//!
//! Each cell carries the Legendre polynomials `P_0..P_r` mapped affinely onto
//! the cell and scaled to unit L2 norm, so the mass matrix is the identity and
//! L2 projection is a plain quadrature inner product.

use std::fmt;
use std::io::Write;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Side from which a one-sided trace is taken at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Limit from the left, `v(x_j^-)`.
    Minus,
    /// Limit from the right, `v(x_j^+)`.
    Plus,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Minus => f.write_str("minus"),
            Side::Plus => f.write_str("plus"),
        }
    }
}

/// Fills `vals[k] = P_k(xi)` and, if given, `ders[k] = P_k'(xi)` for `k < vals.len()`.
pub fn legendre(xi: f64, vals: &mut [f64], ders: Option<&mut [f64]>) {
    let n = vals.len();
    if n == 0 {
        return;
    }
    vals[0] = 1.0;
    if n > 1 {
        vals[1] = xi;
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        vals[k + 1] = ((2.0 * kf + 1.0) * xi * vals[k] - kf * vals[k - 1]) / (kf + 1.0);
    }
    if let Some(ders) = ders {
        ders[0] = 0.0;
        if n > 1 {
            ders[1] = 1.0;
        }
        for k in 1..n.saturating_sub(1) {
            ders[k + 1] = ders[k - 1] + (2.0 * k as f64 + 1.0) * vals[k];
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(points: usize) -> (Vec<f64>, Vec<f64>) {
    let n = NonZeroUsize::new(points).expect("quadrature needs at least one point");
    let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(n).into_node_weight_pairs().into_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// The DG space `V^h` of piecewise polynomials of degree `r` on a mesh.
#[derive(Debug, Clone)]
pub struct DGSpace {
    mesh: Mesh,
    degree: usize,
    ref_points: Vec<f64>,
    ref_weights: Vec<f64>,
    // P_k(xi_g) and P_k'(xi_g), row g, column k
    ref_values: Vec<f64>,
    ref_derivs: Vec<f64>,
    // per-cell tables: Gauss points, weights, and basis values (cell, g, k)
    points: Vec<f64>,
    weights: Vec<f64>,
    phi: Vec<f64>,
}

impl DGSpace {
    /// Space with the default rule of `max(r + 2, 2r + 1)` Gauss points per cell.
    pub fn new(mesh: Mesh, degree: usize) -> Self {
        let points = (degree + 2).max(2 * degree + 1);
        Self::with_quadrature(mesh, degree, points)
    }

    /// Space with an explicit number of Gauss points per cell (at least `r + 2`).
    pub fn with_quadrature(mesh: Mesh, degree: usize, points: usize) -> Self {
        let points = points.max(degree + 2);
        let (ref_points, ref_weights) = gauss_legendre(points);
        let nb = degree + 1;
        let mut ref_values = vec![0.0; points * nb];
        let mut ref_derivs = vec![0.0; points * nb];
        for (g, &xi) in ref_points.iter().enumerate() {
            legendre(
                xi,
                &mut ref_values[g * nb..(g + 1) * nb],
                Some(&mut ref_derivs[g * nb..(g + 1) * nb]),
            );
        }
        let mut space = Self {
            mesh,
            degree,
            ref_points,
            ref_weights,
            ref_values,
            ref_derivs,
            points: Vec::new(),
            weights: Vec::new(),
            phi: Vec::new(),
        };
        let cells = space.mesh.cells();
        for c in 0..cells {
            let (l, r) = space.mesh.bounds(c);
            for g in 0..points {
                space.points.push(0.5 * (l + r) + 0.5 * (r - l) * space.ref_points[g]);
                space.weights.push(0.5 * (r - l) * space.ref_weights[g]);
                for k in 0..nb {
                    space.phi.push(space.scale(c, k) * space.ref_values[g * nb + k]);
                }
            }
        }
        space
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `r + 1`.
    pub fn dofs_per_cell(&self) -> usize {
        self.degree + 1
    }

    /// `J (r + 1)`.
    pub fn n_dof(&self) -> usize {
        self.mesh.cells() * (self.degree + 1)
    }

    pub fn cells(&self) -> usize {
        self.mesh.cells()
    }

    /// Gauss points per cell.
    pub fn quad_order(&self) -> usize {
        self.ref_points.len()
    }

    /// Gauss points over the whole mesh.
    pub fn n_quad(&self) -> usize {
        self.ref_points.len() * self.mesh.cells()
    }

    pub fn dof(&self, cell: usize, k: usize) -> usize {
        cell * (self.degree + 1) + k
    }

    /// Normalization factor `sqrt((2k + 1) / h)` of basis function `k` on `cell`.
    pub fn scale(&self, cell: usize, k: usize) -> f64 {
        ((2 * k + 1) as f64 / self.mesh.width(cell)).sqrt()
    }

    /// Physical location of Gauss point `g` in `cell`.
    pub fn quad_point(&self, cell: usize, g: usize) -> f64 {
        self.points[cell * self.ref_points.len() + g]
    }

    /// Physical weight of Gauss point `g` in `cell`.
    pub fn quad_weight(&self, cell: usize, g: usize) -> f64 {
        self.weights[cell * self.ref_points.len() + g]
    }

    /// Basis function `k` of `cell` at Gauss point `g`.
    pub fn basis_at_quad(&self, cell: usize, g: usize, k: usize) -> f64 {
        let nb = self.degree + 1;
        self.phi[(cell * self.ref_points.len() + g) * nb + k]
    }

    /// x-derivative of basis function `k` of `cell` at Gauss point `g`.
    pub fn basis_deriv_at_quad(&self, cell: usize, g: usize, k: usize) -> f64 {
        self.scale(cell, k) * self.ref_derivs[g * (self.degree + 1) + k] * 2.0
            / self.mesh.width(cell)
    }

    /// Basis values `phi_k(x)` for `x` in (the closure of) `cell`.
    pub fn basis_values(&self, cell: usize, x: f64) -> Vec<f64> {
        let (l, r) = self.mesh.bounds(cell);
        let xi = (2.0 * x - l - r) / (r - l);
        let mut vals = vec![0.0; self.degree + 1];
        legendre(xi, &mut vals, None);
        for (k, v) in vals.iter_mut().enumerate() {
            *v *= self.scale(cell, k);
        }
        vals
    }

    /// Basis values at the left end of `cell`, `phi_k(x_c^+)`.
    pub fn left_trace(&self, cell: usize) -> Vec<f64> {
        (0..=self.degree)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * self.scale(cell, k)
            })
            .collect()
    }

    /// Basis values at the right end of `cell`, `phi_k(x_{c+1}^-)`.
    pub fn right_trace(&self, cell: usize) -> Vec<f64> {
        (0..=self.degree).map(|k| self.scale(cell, k)).collect()
    }

    /// Values at every Gauss point of the function with the given coefficients.
    pub fn values_at_quad(&self, coeffs: &[f64]) -> Vec<f64> {
        let nb = self.degree + 1;
        let nq = self.quad_order();
        let mut out = vec![0.0; self.n_quad()];
        for (c, cc) in coeffs.chunks_exact(nb).enumerate() {
            for g in 0..nq {
                let idx = c * nq + g;
                let row = &self.phi[idx * nb..(idx + 1) * nb];
                out[idx] = row.iter().zip(cc).map(|(a, b)| a * b).sum();
            }
        }
        out
    }

    /// Coefficients of `(w, phi)` for all basis functions, given `w` at every Gauss point.
    ///
    /// With the orthonormal basis this is the L2 projection of `w`.
    pub fn project_quad_values(&self, values: &[f64]) -> Vec<f64> {
        let nb = self.degree + 1;
        let mut out = vec![0.0; self.n_dof()];
        for (idx, (&v, &w)) in values.iter().zip(&self.weights).enumerate() {
            let wv = w * v;
            let c = idx / self.ref_points.len();
            let row = &self.phi[idx * nb..(idx + 1) * nb];
            for (o, p) in out[c * nb..(c + 1) * nb].iter_mut().zip(row) {
                *o += wv * p;
            }
        }
        out
    }

    /// Physical coordinates of all Gauss points, cell by cell.
    pub fn quad_points(&self) -> Vec<f64> {
        self.points.clone()
    }
}

/// A member of a [`DGSpace`], stored as per-cell Legendre coefficients.
#[derive(Debug, Clone)]
pub struct DGFunction {
    space: Arc<DGSpace>,
    coeffs: Vec<f64>,
}

/// Discrete L2 and sampled L-infinity errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub linf: f64,
}

const LINF_SAMPLES_PER_CELL: usize = 10;

impl DGFunction {
    pub fn zeros(space: Arc<DGSpace>) -> Self {
        let n = space.n_dof();
        Self {
            space,
            coeffs: vec![0.0; n],
        }
    }

    pub fn from_coeffs(space: Arc<DGSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dof() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coefficients, got {}",
                space.n_dof(),
                coeffs.len()
            )));
        }
        Ok(Self { space, coeffs })
    }

    /// L2 projection of a pointwise function, computed cell by cell with the space's Gauss rule.
    pub fn project(space: Arc<DGSpace>, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = space.quad_points().into_iter().map(f).collect();
        let coeffs = space.project_quad_values(&values);
        Self { space, coeffs }
    }

    pub fn space(&self) -> &Arc<DGSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn cell_coeffs(&self, cell: usize) -> &[f64] {
        let nb = self.space.dofs_per_cell();
        &self.coeffs[cell * nb..(cell + 1) * nb]
    }

    /// Value of the polynomial of `cell` at `x`; `x` may be either endpoint of the cell.
    pub fn eval_in_cell(&self, cell: usize, x: f64) -> Result<f64> {
        let cells = self.space.cells();
        if cell >= cells {
            return Err(Error::CellOutOfRange { cell, cells });
        }
        let (l, r) = self.space.mesh().bounds(cell);
        if !(x >= l && x <= r) {
            return Err(Error::OutOfDomain { x, a: l, b: r });
        }
        Ok(self.eval_unchecked(cell, x))
    }

    fn eval_unchecked(&self, cell: usize, x: f64) -> f64 {
        self.space
            .basis_values(cell, x)
            .iter()
            .zip(self.cell_coeffs(cell))
            .map(|(p, c)| p * c)
            .sum()
    }

    /// Value at `x`, using the cell that [`Mesh::locate`] picks.
    pub fn eval_at(&self, x: f64) -> Result<f64> {
        let cell = self.space.mesh().locate(x)?;
        Ok(self.eval_unchecked(cell, x))
    }

    /// One-sided limit at node `node` (`0..=J`).
    pub fn eval_trace(&self, node: usize, side: Side) -> Result<f64> {
        let cells = self.space.cells();
        let cell = match side {
            Side::Minus if node >= 1 && node <= cells => node - 1,
            Side::Plus if node < cells => node,
            _ => return Err(Error::NoTrace { node, side }),
        };
        let trace = match side {
            Side::Minus => self.space.right_trace(cell),
            Side::Plus => self.space.left_trace(cell),
        };
        Ok(trace
            .iter()
            .zip(self.cell_coeffs(cell))
            .map(|(p, c)| p * c)
            .sum())
    }

    /// `[v(x_j)] = v(x_j^-) - v(x_j^+)` at an interior node.
    pub fn jump(&self, node: usize) -> Result<f64> {
        let cells = self.space.cells();
        if node == 0 || node >= cells {
            return Err(Error::NotInterior {
                node,
                last: cells.saturating_sub(1),
            });
        }
        Ok(self.eval_trace(node, Side::Minus)? - self.eval_trace(node, Side::Plus)?)
    }

    /// Broken L2 inner product evaluated by quadrature.
    pub fn l2_inner(&self, other: &DGFunction) -> f64 {
        let a = self.space.values_at_quad(&self.coeffs);
        let b = self.space.values_at_quad(&other.coeffs);
        let nq = self.space.quad_order();
        let mut sum = 0.0;
        for c in 0..self.space.cells() {
            for g in 0..nq {
                sum += self.space.quad_weight(c, g) * a[c * nq + g] * b[c * nq + g];
            }
        }
        sum
    }

    /// L2 error by Gauss quadrature and L-infinity error sampled at Gauss points,
    /// both cell endpoints and ten interior points per cell.
    pub fn error_norms(&self, exact: impl Fn(f64) -> f64) -> ErrorNorms {
        let space = &self.space;
        let nq = space.quad_order();
        let vals = space.values_at_quad(&self.coeffs);
        let mut l2 = 0.0;
        let mut linf: f64 = 0.0;
        for c in 0..space.cells() {
            for g in 0..nq {
                let x = space.quad_point(c, g);
                let e = vals[c * nq + g] - exact(x);
                l2 += space.quad_weight(c, g) * e * e;
                linf = linf.max(e.abs());
            }
            let (l, r) = space.mesh().bounds(c);
            for s in 0..=LINF_SAMPLES_PER_CELL + 1 {
                let x = l + (r - l) * s as f64 / (LINF_SAMPLES_PER_CELL + 1) as f64;
                let e = self.eval_unchecked(c, x) - exact(x);
                linf = linf.max(e.abs());
            }
        }
        ErrorNorms {
            l2: l2.sqrt(),
            linf,
        }
    }

    /// `(x, v(x))` at `per_cell` equally spaced points in each cell, endpoints included.
    pub fn sample(&self, per_cell: usize) -> Vec<(f64, f64)> {
        let per_cell = per_cell.max(2);
        let mut out = Vec::with_capacity(per_cell * self.space.cells());
        for c in 0..self.space.cells() {
            let (l, r) = self.space.mesh().bounds(c);
            for s in 0..per_cell {
                let x = l + (r - l) * s as f64 / (per_cell - 1) as f64;
                out.push((x, self.eval_unchecked(c, x)));
            }
        }
        out
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &DGFunction) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += alpha * b;
        }
    }

    pub fn scaled(&self, alpha: f64) -> DGFunction {
        DGFunction {
            space: Arc::clone(&self.space),
            coeffs: self.coeffs.iter().map(|c| alpha * c).collect(),
        }
    }

    /// Coefficient dump with header `cell,coeff,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "cell,coeff,value")?;
        let nb = self.space.dofs_per_cell();
        for (i, v) in self.coeffs.iter().enumerate() {
            writeln!(out, "{},{},{:.17e}", i / nb, i % nb, v)?;
        }
        Ok(())
    }
}
