//! Whole-domain LDG forms and the discrete derivative operators built from them.
//!
//! Every form is assembled as a matrix `M` with `(M v)_k = form(v, phi_k)`, so with
//! the identity mass matrix the auxiliary variables are
//!
//! ```text
//! q_i = f_i - A_i u,        p_j = -(B_j1 q_1 + B_j2 q_2).
//! ```
//!
//! `q_1`, `p_1` and `p_3` use left traces at interior nodes; `q_2`, `p_2` and `p_4` use right traces.

use std::io::Write;
use std::sync::{Arc, OnceLock};

use crate::dgspace::{DGFunction, DGSpace};
use crate::error::{Error, Result};
use crate::linalg::{Band, BlockTridiag, DenseMatrix};

/// Time-dependent Dirichlet data `u(a, t) = u_a(t)`, `u(b, t) = u_b(t)`.
#[derive(Clone)]
pub struct BoundaryData {
    ua: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    ub: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl BoundaryData {
    pub fn new(
        ua: impl Fn(f64) -> f64 + Send + Sync + 'static,
        ub: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            ua: Arc::new(ua),
            ub: Arc::new(ub),
        }
    }

    pub fn constant(ua: f64, ub: f64) -> Self {
        Self::new(move |_| ua, move |_| ub)
    }

    pub fn ua(&self, t: f64) -> f64 {
        (self.ua)(t)
    }

    pub fn ub(&self, t: f64) -> f64 {
        (self.ub)(t)
    }

    pub fn at(&self, t: f64) -> (f64, f64) {
        (self.ua(t), self.ub(t))
    }
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundaryData").finish_non_exhaustive()
    }
}

/// Interior trace used by a form: `v(x_j^-)` or `v(x_j^+)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Upwind {
    Left,
    Right,
}

/// Assembled LDG operators for one `(mesh, r)` pair.
#[derive(Debug, Clone)]
pub struct LDGSystem {
    space: Arc<DGSpace>,
    kappa: f64,
    a: [BlockTridiag; 2],
    // b[j][i]: action of b_{j+1} on q_{i+1}; None where the form ignores that argument
    b: [[Option<BlockTridiag>; 2]; 4],
    // load vectors of f_i for unit u_a (index 0) and unit u_b (index 1)
    f: [[Vec<f64>; 2]; 2],
    dense: OnceLock<DenseForms>,
}

/// Dense copies of `A_1, A_2` and of `D_j = B_j1 A_1 + B_j2 A_2`, built on first use.
#[derive(Debug, Clone)]
pub struct DenseForms {
    pub a: [DenseMatrix; 2],
    pub d: [DenseMatrix; 4],
}

/// `q_1, q_2` as coefficient vectors.
pub type QCoeffs = [Vec<f64>; 2];
/// `p_1, ..., p_4` as coefficient vectors.
pub type PCoeffs = [Vec<f64>; 4];

impl LDGSystem {
    pub fn assemble(space: Arc<DGSpace>) -> Self {
        let kappa = if space.degree() == 0 { 0.0 } else { 1.0 };
        let form = |trace, cl, cr| assemble_form(&space, trace, cl, cr);
        let boundary = |cl, cr| assemble_form(&space, None, cl, cr);
        let a = [
            form(Some(Upwind::Left), 0.0, -(1.0 - kappa)),
            form(Some(Upwind::Right), 1.0 - kappa, 0.0),
        ];
        let b = [
            [Some(form(Some(Upwind::Left), 1.0, -1.0)), None],
            [
                Some(form(Some(Upwind::Right), 1.0, -kappa)),
                Some(boundary(0.0, -(1.0 - kappa))),
            ],
            [
                Some(boundary(1.0 - kappa, 0.0)),
                Some(form(Some(Upwind::Left), kappa, -1.0)),
            ],
            [None, Some(form(Some(Upwind::Right), 1.0, -1.0))],
        ];
        let n = space.n_dof();
        let first = 0;
        let last = space.cells() - 1;
        let mut f = [[vec![0.0; n], vec![0.0; n]], [vec![0.0; n], vec![0.0; n]]];
        for (k, (l, r)) in space
            .left_trace(first)
            .into_iter()
            .zip(space.right_trace(last))
            .enumerate()
        {
            let (ia, ib) = (space.dof(first, k), space.dof(last, k));
            f[0][0][ia] = -l;
            f[0][1][ib] = kappa * r;
            f[1][0][ia] = -kappa * l;
            f[1][1][ib] = r;
        }
        Self {
            space,
            kappa,
            a,
            b,
            f,
            dense: OnceLock::new(),
        }
    }

    pub fn space(&self) -> &Arc<DGSpace> {
        &self.space
    }

    /// `kappa_r`: 0 for piecewise constants, 1 otherwise.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn n_dof(&self) -> usize {
        self.space.n_dof()
    }

    /// Matrix of `a_i` (`i` is 1 or 2).
    pub fn a_matrix(&self, i: usize) -> &BlockTridiag {
        &self.a[i - 1]
    }

    /// Matrix of `b_j` acting on `q_i`, if that argument enters the form.
    pub fn b_matrix(&self, j: usize, i: usize) -> Option<&BlockTridiag> {
        self.b[j - 1][i - 1].as_ref()
    }

    /// Load vector of `f_i` for the given boundary values.
    pub fn load(&self, i: usize, ua: f64, ub: f64) -> Vec<f64> {
        let [fa, fb] = &self.f[i - 1];
        fa.iter().zip(fb).map(|(x, y)| ua * x + ub * y).collect()
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n_dof() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coefficients, got {}",
                self.n_dof(),
                v.len()
            )));
        }
        Ok(())
    }

    /// `q_i = f_i - A_i u` on raw coefficient vectors.
    pub fn q_coeffs(&self, u: &[f64], ua: f64, ub: f64) -> Result<QCoeffs> {
        self.check_len(u)?;
        let mut out = [Vec::new(), Vec::new()];
        for i in 0..2 {
            let au = self.a[i].matvec(u);
            let mut q = self.load(i + 1, ua, ub);
            q.iter_mut().zip(&au).for_each(|(x, y)| *x -= y);
            out[i] = q;
        }
        Ok(out)
    }

    /// `p_j = -(B_j1 q_1 + B_j2 q_2)` on raw coefficient vectors.
    pub fn p_coeffs(&self, q: &QCoeffs) -> Result<PCoeffs> {
        self.check_len(&q[0])?;
        self.check_len(&q[1])?;
        let n = self.n_dof();
        let mut tmp = vec![0.0; n];
        let mut out: PCoeffs = Default::default();
        for (j, row) in self.b.iter().enumerate() {
            let mut p = vec![0.0; n];
            for (i, m) in row.iter().enumerate() {
                if let Some(m) = m {
                    m.matvec_into(&q[i], &mut tmp);
                    p.iter_mut().zip(&tmp).for_each(|(x, y)| *x -= y);
                }
            }
            out[j] = p;
        }
        Ok(out)
    }

    pub fn q_operators(&self, u: &DGFunction, ua: f64, ub: f64) -> Result<(DGFunction, DGFunction)> {
        let [q1, q2] = self.q_coeffs(u.coeffs(), ua, ub)?;
        Ok((self.wrap(q1), self.wrap(q2)))
    }

    pub fn p_operators(&self, q1: &DGFunction, q2: &DGFunction) -> Result<[DGFunction; 4]> {
        let p = self.p_coeffs(&[q1.coeffs().to_vec(), q2.coeffs().to_vec()])?;
        Ok(p.map(|c| self.wrap(c)))
    }

    /// `Q_1^k v, Q_2^k v`: the stationary operators with boundary data taken at `t`.
    pub fn q_operators_at_time(
        &self,
        v: &DGFunction,
        t: f64,
        bc: &BoundaryData,
    ) -> Result<(DGFunction, DGFunction)> {
        let (ua, ub) = bc.at(t);
        self.q_operators(v, ua, ub)
    }

    /// `P_1^k v, ..., P_4^k v`, built from `Q_i^k v`.
    pub fn p_operators_at_time(
        &self,
        v: &DGFunction,
        t: f64,
        bc: &BoundaryData,
    ) -> Result<[DGFunction; 4]> {
        let (q1, q2) = self.q_operators_at_time(v, t, bc)?;
        self.p_operators(&q1, &q2)
    }

    fn wrap(&self, coeffs: Vec<f64>) -> DGFunction {
        DGFunction::from_coeffs(Arc::clone(&self.space), coeffs).expect("length checked")
    }

    /// Dense `A_i` and `dp_j/du = D_j = B_j1 A_1 + B_j2 A_2` (so `p_j = c_j + D_j u`).
    pub fn dense_forms(&self) -> &DenseForms {
        self.dense.get_or_init(|| {
            let a = [self.a[0].to_dense(), self.a[1].to_dense()];
            let d = std::array::from_fn(|j| {
                let n = self.n_dof();
                let mut d = DenseMatrix::zeros(n, n);
                for (i, m) in self.b[j].iter().enumerate() {
                    if let Some(m) = m {
                        let prod = m.to_dense().matmul(&a[i]).expect("square matrices");
                        d.axpy(1.0, &prod).expect("same shape");
                    }
                }
                d
            });
            DenseForms { a, d }
        })
    }

    /// Writes every assembled matrix as `matrix,row,col,value` rows (nonzeros only).
    pub fn write_matrices_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "matrix,row,col,value")?;
        let mut dump = |name: &str, m: &BlockTridiag| -> std::io::Result<()> {
            let d = m.to_dense();
            for r in 0..d.rows() {
                for c in 0..d.cols() {
                    let v = d.get(r, c);
                    if v != 0.0 {
                        writeln!(out, "{name},{r},{c},{v:.17e}")?;
                    }
                }
            }
            Ok(())
        };
        for i in 0..2 {
            dump(&format!("A{}", i + 1), &self.a[i])?;
        }
        for (j, row) in self.b.iter().enumerate() {
            for (i, m) in row.iter().enumerate() {
                if let Some(m) = m {
                    dump(&format!("B{}_q{}", j + 1, i + 1), m)?;
                }
            }
        }
        Ok(())
    }
}

/// Matrix of `(v, phi_x) + cl v(a+) phi(a+) + cr v(b-) phi(b-) - sum_j v(x_j^s) [phi(x_j)]`,
/// the interior sum omitted when `trace` is `None`.
fn assemble_form(space: &DGSpace, trace: Option<Upwind>, cl: f64, cr: f64) -> BlockTridiag {
    let cells = space.cells();
    let nb = space.dofs_per_cell();
    let nq = space.quad_order();
    let mut m = BlockTridiag::zeros(cells, nb);
    let lefts: Vec<Vec<f64>> = (0..cells).map(|c| space.left_trace(c)).collect();
    let rights: Vec<Vec<f64>> = (0..cells).map(|c| space.right_trace(c)).collect();
    for c in 0..cells {
        if trace.is_some() {
            for k in 0..nb {
                for l in 0..nb {
                    let v: f64 = (0..nq)
                        .map(|g| {
                            space.quad_weight(c, g)
                                * space.basis_at_quad(c, g, l)
                                * space.basis_deriv_at_quad(c, g, k)
                        })
                        .sum();
                    m.add(c, Band::Diag, k, l, v);
                }
            }
        }
        let (lc, rc) = (&lefts[c], &rights[c]);
        for k in 0..nb {
            for l in 0..nb {
                if c == 0 && cl != 0.0 {
                    m.add(c, Band::Diag, k, l, cl * lc[l] * lc[k]);
                }
                if c + 1 == cells && cr != 0.0 {
                    m.add(c, Band::Diag, k, l, cr * rc[l] * rc[k]);
                }
                match trace {
                    // node c + 1 sees phi(x^-) = R^c_k; node c sees phi(x^+) = L^c_k with a minus sign
                    Some(Upwind::Left) => {
                        if c + 1 < cells {
                            m.add(c, Band::Diag, k, l, -rc[l] * rc[k]);
                        }
                        if c > 0 {
                            m.add(c, Band::Lower, k, l, rights[c - 1][l] * lc[k]);
                        }
                    }
                    Some(Upwind::Right) => {
                        if c + 1 < cells {
                            m.add(c, Band::Upper, k, l, -lefts[c + 1][l] * rc[k]);
                        }
                        if c > 0 {
                            m.add(c, Band::Diag, k, l, lc[l] * lc[k]);
                        }
                    }
                    None => {}
                }
            }
        }
    }
    m
}
