//! Stationary solvers: the reduced nonlinear residual, damped Newton, and the
//! splitting iteration that alternates a pointwise solve for `(p2 + p3) / 2` with a
//! linear solve for `u`.

use std::sync::Arc;

use crate::dgspace::{DGFunction, DGSpace};
use crate::error::{Error, Result};
use crate::ldg_ops::{LDGSystem, PCoeffs, QCoeffs};
use crate::linalg::{norm_inf, DenseMatrix};
use crate::numop::{Jet, NumericalOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    Analytic,
    FiniteDifference,
}

/// Relative size of a Newton correction below which the iterate counts as converged.
pub const STEP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Tolerance on the infinity norm of the residual.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    /// Tolerance on the change of `(p2 + p3) / 2` between splitting iterations.
    pub splitting_tol: f64,
    pub max_splitting_iters: usize,
    pub jacobian: JacobianMode,
    /// Maximum number of step halvings per Newton iteration.
    pub max_halvings: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_newton_iters: 50,
            splitting_tol: 1e-9,
            max_splitting_iters: 100,
            jacobian: JacobianMode::Analytic,
            max_halvings: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) || !(self.splitting_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// `u` together with its discrete derivatives.
#[derive(Debug, Clone)]
pub struct EllipticState {
    pub u: DGFunction,
    pub q: [DGFunction; 2],
    pub p: [DGFunction; 4],
}

impl EllipticState {
    /// Derivatives of `u` for boundary values `(u_a, u_b)`.
    pub fn from_u(sys: &LDGSystem, u: DGFunction, (ua, ub): (f64, f64)) -> Result<Self> {
        let q = sys.q_coeffs(u.coeffs(), ua, ub)?;
        let p = sys.p_coeffs(&q)?;
        let space = Arc::clone(sys.space());
        let wrap = |c: Vec<f64>| DGFunction::from_coeffs(Arc::clone(&space), c);
        let [q1, q2] = q;
        let [p1, p2, p3, p4] = p;
        Ok(Self {
            u,
            q: [wrap(q1)?, wrap(q2)?],
            p: [wrap(p1)?, wrap(p2)?, wrap(p3)?, wrap(p4)?],
        })
    }
}

/// One line of a solver log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
    /// Newton damping factor, or the change in `(p2 + p3) / 2` for the splitting solver.
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub state: EllipticState,
    pub log: Vec<IterationRecord>,
    pub converged: bool,
}

/// The residual `R(u) = mass u + scale P_h Fhat[u] - rhs` with `q`, `p` eliminated.
///
/// `mass = 0`, `scale = 1`, `rhs = 0` is the stationary problem; the trapezoidal rule
/// uses `mass = 1` and `scale = dt / 2`.
#[derive(Debug, Clone)]
pub struct ReducedSystem<'a> {
    sys: &'a LDGSystem,
    op: &'a NumericalOperator,
    bc: (f64, f64),
    t: f64,
    mass: f64,
    scale: f64,
    rhs: Option<Vec<f64>>,
}

/// Values of `u, q, p` at all quadrature points.
struct QuadValues {
    u: Vec<f64>,
    q: [Vec<f64>; 2],
    p: [Vec<f64>; 4],
}

impl<'a> ReducedSystem<'a> {
    pub fn new(sys: &'a LDGSystem, op: &'a NumericalOperator, bc: (f64, f64)) -> Self {
        Self { sys, op, bc, t: 0.0, mass: 0.0, scale: 1.0, rhs: None }
    }

    pub fn at_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// Turns the residual into `mass u + scale P_h Fhat[u] - rhs`.
    pub fn shifted(mut self, mass: f64, scale: f64, rhs: Vec<f64>) -> Self {
        self.mass = mass;
        self.scale = scale;
        self.rhs = Some(rhs);
        self
    }

    pub fn space(&self) -> &Arc<DGSpace> {
        self.sys.space()
    }

    fn derivatives(&self, u: &[f64]) -> Result<(QCoeffs, PCoeffs)> {
        let q = self.sys.q_coeffs(u, self.bc.0, self.bc.1)?;
        let p = self.sys.p_coeffs(&q)?;
        Ok((q, p))
    }

    fn quad_values(&self, u: &[f64], q: &QCoeffs, p: &PCoeffs) -> QuadValues {
        let s = self.space();
        QuadValues {
            u: s.values_at_quad(u),
            q: [s.values_at_quad(&q[0]), s.values_at_quad(&q[1])],
            p: [
                s.values_at_quad(&p[0]),
                s.values_at_quad(&p[1]),
                s.values_at_quad(&p[2]),
                s.values_at_quad(&p[3]),
            ],
        }
    }

    fn jet(&self, v: &QuadValues, idx: usize, x: f64) -> Jet {
        Jet {
            p: [v.p[0][idx], v.p[1][idx], v.p[2][idx], v.p[3][idx]],
            q: [v.q[0][idx], v.q[1][idx]],
            u: v.u[idx],
            x,
            t: self.t,
        }
    }

    /// `Fhat` at every quadrature point, with the location of the first non-finite value as error.
    fn fhat_values(&self, v: &QuadValues) -> Result<Vec<f64>> {
        let s = self.space();
        let nq = s.quad_order();
        let mut out = vec![0.0; s.n_quad()];
        for c in 0..s.cells() {
            for g in 0..nq {
                let idx = c * nq + g;
                let x = s.quad_point(c, g);
                let value = self.op.eval_jet(&self.jet(v, idx, x));
                if !value.is_finite() {
                    return Err(Error::NonFinite { cell: c, x, value });
                }
                out[idx] = value;
            }
        }
        Ok(out)
    }

    fn finish(&self, u: &[f64], projected: Vec<f64>) -> Vec<f64> {
        let mut r = projected;
        if self.scale != 1.0 {
            r.iter_mut().for_each(|x| *x *= self.scale);
        }
        if self.mass != 0.0 {
            r.iter_mut().zip(u).for_each(|(x, y)| *x += self.mass * y);
        }
        if let Some(rhs) = &self.rhs {
            r.iter_mut().zip(rhs).for_each(|(x, y)| *x -= y);
        }
        r
    }

    /// Entries `(Fhat, phi_m)` for every basis function (plus the shift, if any).
    pub fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let (q, p) = self.derivatives(u)?;
        let v = self.quad_values(u, &q, &p);
        let f = self.fhat_values(&v)?;
        Ok(self.finish(u, self.space().project_quad_values(&f)))
    }

    /// `P_h Fhat` for given `u, q, p` coefficients, without the shift.
    pub fn projected_operator(&self, u: &[f64], q: &QCoeffs, p: &PCoeffs) -> Result<Vec<f64>> {
        let v = self.quad_values(u, q, p);
        Ok(self.space().project_quad_values(&self.fhat_values(&v)?))
    }

    /// Residual of the coupled seven-block system in `(u, q1, q2, p1, .., p4)`:
    /// `q_i + A_i u - f_i`, `p_j + B_j1 q1 + B_j2 q2`, and the `Fhat` block.
    pub fn full_residual(&self, u: &[f64], q: &QCoeffs, p: &PCoeffs) -> Result<[Vec<f64>; 7]> {
        let exact_q = self.sys.q_coeffs(u, self.bc.0, self.bc.1)?;
        let exact_p = self.sys.p_coeffs(q)?;
        let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<f64>>();
        let v = self.quad_values(u, q, p);
        let f = self.fhat_values(&v)?;
        let last = self.finish(u, self.space().project_quad_values(&f));
        Ok([
            diff(&q[0], &exact_q[0]),
            diff(&q[1], &exact_q[1]),
            diff(&p[0], &exact_p[0]),
            diff(&p[1], &exact_p[1]),
            diff(&p[2], &exact_p[2]),
            diff(&p[3], &exact_p[3]),
            last,
        ])
    }

    /// Jacobian of [`residual`](Self::residual) by the chain rule through the affine maps
    /// `dq_i/du = -A_i` and `dp_j/du = D_j`.
    pub fn jacobian(&self, u: &[f64]) -> Result<DenseMatrix> {
        let s = self.space();
        let forms = self.sys.dense_forms();
        let (q, p) = self.derivatives(u)?;
        let v = self.quad_values(u, &q, &p);
        let n = s.n_dof();
        let nb = s.dofs_per_cell();
        let nq = s.quad_order();
        let cells = s.cells();
        let mut jac = DenseMatrix::zeros(n, n);
        let mut row = vec![0.0; n];
        for c in 0..cells {
            // D_j = B A couples each cell to at most two neighbours on either side
            let lo = c.saturating_sub(2) * nb;
            let hi = (c + 3).min(cells) * nb;
            for g in 0..nq {
                let idx = c * nq + g;
                let x = s.quad_point(c, g);
                let (value, d) = self.op.partials(&self.jet(&v, idx, x));
                if !value.is_finite() {
                    return Err(Error::NonFinite { cell: c, x, value });
                }
                row[lo..hi].iter_mut().for_each(|r| *r = 0.0);
                for l in 0..nb {
                    let phi = s.basis_at_quad(c, g, l);
                    let dof = c * nb + l;
                    for col in lo..hi {
                        let mut acc = 0.0;
                        for j in 0..4 {
                            acc += d.p[j] * forms.d[j].get(dof, col);
                        }
                        for i in 0..2 {
                            acc -= d.q[i] * forms.a[i].get(dof, col);
                        }
                        row[col] += phi * acc;
                    }
                    row[dof] += phi * d.u;
                }
                let w = s.quad_weight(c, g) * self.scale;
                for k in 0..nb {
                    let wk = w * s.basis_at_quad(c, g, k);
                    for col in lo..hi {
                        jac.add_to(c * nb + k, col, wk * row[col]);
                    }
                }
            }
        }
        if self.mass != 0.0 {
            for i in 0..n {
                jac.add_to(i, i, self.mass);
            }
        }
        Ok(jac)
    }

    /// Central-difference Jacobian, column by column.
    pub fn fd_jacobian(&self, u: &[f64]) -> Result<DenseMatrix> {
        let n = u.len();
        let mut jac = DenseMatrix::zeros(n, n);
        let mut w = u.to_vec();
        for col in 0..n {
            let h = 1e-7 * (1.0 + u[col].abs());
            w[col] = u[col] + h;
            let rp = self.residual(&w)?;
            w[col] = u[col] - h;
            let rm = self.residual(&w)?;
            w[col] = u[col];
            for row in 0..n {
                jac.set(row, col, (rp[row] - rm[row]) / (2.0 * h));
            }
        }
        Ok(jac)
    }

    fn jacobian_with(&self, mode: JacobianMode, u: &[f64]) -> Result<DenseMatrix> {
        match mode {
            JacobianMode::Analytic => self.jacobian(u),
            JacobianMode::FiniteDifference => self.fd_jacobian(u),
        }
    }

    /// Damped Newton on the reduced residual, returning the final coefficients and log.
    ///
    /// Stops when the residual is below `newton_tol`, or when a Newton correction is below
    /// `STEP_TOL` relative to `u`.
    pub fn newton(&self, config: &SolverConfig, guess: &[f64]) -> Result<(Vec<f64>, Vec<IterationRecord>)> {
        config.validate()?;
        let mut u = guess.to_vec();
        let mut r = self.residual(&u)?;
        let mut norm = norm_inf(&r);
        let mut log = vec![IterationRecord { iteration: 0, residual: norm, step: 0.0 }];
        for it in 1..=config.max_newton_iters {
            if norm <= config.newton_tol {
                return Ok((u, log));
            }
            let jac = self.jacobian_with(config.jacobian, &u)?;
            let minus_r: Vec<f64> = r.iter().map(|x| -x).collect();
            let delta = jac.lu_solve(&minus_r).map_err(|e| match e {
                Error::Singular { pivot } => Error::SingularJacobian { pivot },
                other => other,
            })?;
            if norm_inf(&delta) <= STEP_TOL * (1.0 + norm_inf(&u)) {
                // the residual sits at its round-off floor above `newton_tol`
                let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + d).collect();
                if let Ok(rt) = self.residual(&trial) {
                    log.push(IterationRecord { iteration: it, residual: norm_inf(&rt), step: 1.0 });
                    return Ok((trial, log));
                }
            }
            let mut step = 1.0;
            let mut accepted = None;
            let mut fallback = None;
            for _ in 0..=config.max_halvings {
                let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + step * d).collect();
                match self.residual(&trial) {
                    Ok(rt) => {
                        let nt = norm_inf(&rt);
                        if nt < norm {
                            accepted = Some((trial, rt, nt));
                            break;
                        }
                        fallback = Some((trial, rt, nt));
                    }
                    // a non-finite trial counts as no decrease
                    Err(Error::NonFinite { .. }) => {}
                    Err(e) => return Err(e),
                }
                step *= 0.5;
            }
            // without a decrease the smallest finite step is taken anyway
            let (trial, rt, nt) = match accepted.or(fallback) {
                Some(t) => t,
                None => {
                    return Err(Error::NoConvergence { iterations: it, residual: norm, last: u });
                }
            };
            u = trial;
            r = rt;
            norm = nt;
            log.push(IterationRecord { iteration: it, residual: norm, step });
        }
        if norm <= config.newton_tol {
            Ok((u, log))
        } else {
            Err(Error::NoConvergence { iterations: config.max_newton_iters, residual: norm, last: u })
        }
    }
}

/// Linear interpolant of the boundary data, projected onto the space.
pub fn linear_guess(space: &Arc<DGSpace>, (ua, ub): (f64, f64)) -> DGFunction {
    let (a, b) = (space.mesh().a(), space.mesh().b());
    DGFunction::project(Arc::clone(space), move |x| ua + (ub - ua) * (x - a) / (b - a))
}

pub fn residual(sys: &LDGSystem, op: &NumericalOperator, u: &DGFunction, bc: (f64, f64)) -> Result<Vec<f64>> {
    ReducedSystem::new(sys, op, bc).residual(u.coeffs())
}

/// Damped Newton from `guess`. If Newton fails, it is retried once from the result of the
/// splitting iteration started at the same guess; the log then holds both phases.
pub fn solve_newton(
    sys: &LDGSystem,
    op: &NumericalOperator,
    bc: (f64, f64),
    config: &SolverConfig,
    guess: &DGFunction,
) -> Result<Solution> {
    let red = ReducedSystem::new(sys, op, bc);
    let (u, log) = match red.newton(config, guess.coeffs()) {
        Ok(done) => done,
        Err(first @ (Error::SingularJacobian { .. } | Error::NoConvergence { .. })) => {
            // Newton from a poor guess (a degenerate linearization at the linear interpolant,
            // or a basin boundary) is restarted from the splitting iterate, whose numerical
            // moment steers toward the monotone branch.
            let Ok(pre) = solve_splitting(sys, op, bc, config, guess) else { return Err(first) };
            let (u, mut log) = red.newton(config, pre.state.u.coeffs())?;
            let offset = pre.log.len();
            for rec in &mut log {
                rec.iteration += offset;
            }
            let mut all = pre.log;
            all.extend(log);
            (u, all)
        }
        Err(e) => return Err(e),
    };
    let u = DGFunction::from_coeffs(Arc::clone(sys.space()), u)?;
    Ok(Solution { state: EllipticState::from_u(sys, u, bc)?, log, converged: true })
}

/// Solves `F(s, q, u, x, t) + alpha (p1 - 2 s + p4) = 0` for `s`, starting from `s0`.
///
/// The search radius around `s0` doubles, and each new shell is scanned outward in eight
/// steps on both sides, so the first sign change found is close to the root nearest `s0`
/// and pairs of roots are only skipped when they sit within one scan step. Inside the
/// bracket Newton steps are used when they stay inside, bisection otherwise.
fn solve_pointwise(f: impl Fn(f64) -> (f64, f64), s0: f64) -> Option<f64> {
    const STEPS: usize = 8;
    let (f0, _) = f(s0);
    if f0 == 0.0 {
        return Some(s0);
    }
    if !f0.is_finite() {
        return None;
    }
    let mut inner = 0.0;
    let mut width = 1e-6 * (1.0 + s0.abs());
    let mut last = [(s0, f0); 2];
    for _ in 0..80 {
        for k in 1..=STEPS {
            let d = inner + (width - inner) * k as f64 / STEPS as f64;
            let mut best: Option<f64> = None;
            for (side, sign) in [-1.0, 1.0].into_iter().enumerate() {
                let s = s0 + sign * d;
                let v = f(s).0;
                if !v.is_finite() {
                    continue;
                }
                if v * f0 <= 0.0 {
                    let (prev, fprev) = last[side];
                    let root = refine(&f, prev, s, fprev)?;
                    if best.is_none_or(|b| (root - s0).abs() < (b - s0).abs()) {
                        best = Some(root);
                    }
                } else {
                    last[side] = (s, v);
                }
            }
            if best.is_some() {
                return best;
            }
        }
        inner = width;
        width *= 2.0;
    }
    None
}

/// Safeguarded Newton on a sign-changing bracket `[lo, hi]` with `f(lo) = flo`.
fn refine(f: &impl Fn(f64) -> (f64, f64), lo: f64, hi: f64, flo: f64) -> Option<f64> {
    let (mut lo, mut hi, mut flo) = (lo, hi, flo);
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (v, d) = f(s);
        if v == 0.0 {
            return Some(s);
        }
        if (v < 0.0) == (flo < 0.0) {
            lo = s;
            flo = v;
        } else {
            hi = s;
        }
        if (hi - lo).abs() <= 4.0 * f64::EPSILON * (1.0 + s.abs()) {
            return Some(s);
        }
        let newton = s - v / d;
        let inside = newton.is_finite() && newton > lo.min(hi) && newton < lo.max(hi);
        let next = if inside { newton } else { 0.5 * (lo + hi) };
        if (next - s).abs() <= 1e-15 * (1.0 + s.abs()) {
            return Some(next);
        }
        s = next;
    }
    Some(s)
}

/// Newton on the cell-local projected equation `P_h g(s_h) = 0`, starting from the projection
/// of the pointwise roots. The cell is left untouched if the iteration does not settle.
fn project_cell_root(space: &DGSpace, c: usize, s_h: &mut [f64], g: impl Fn(usize, f64, f64) -> (f64, f64)) {
    let (m, nq) = (space.dofs_per_cell(), space.quad_order());
    let first = space.dof(c, 0);
    let mut local = s_h[first..first + m].to_vec();
    let eval = |coef: &[f64]| {
        let mut res = vec![0.0; m];
        let mut jac = DenseMatrix::zeros(m, m);
        for k in 0..nq {
            let (x, w) = (space.quad_point(c, k), space.quad_weight(c, k));
            let phi: Vec<f64> = (0..m).map(|l| space.basis_at_quad(c, k, l)).collect();
            let s: f64 = coef.iter().zip(&phi).map(|(a, b)| a * b).sum();
            let (val, d) = g(c * nq + k, x, s);
            for l in 0..m {
                res[l] += w * val * phi[l];
                for j in 0..m {
                    jac.add_to(l, j, w * d * phi[l] * phi[j]);
                }
            }
        }
        (res, jac)
    };
    let (mut res, mut jac) = eval(&local);
    let scale = 1.0 + norm_inf(&res);
    for _ in 0..30 {
        let norm = norm_inf(&res);
        if !norm.is_finite() {
            return;
        }
        if norm <= 1e-14 * scale {
            s_h[first..first + m].copy_from_slice(&local);
            return;
        }
        let Ok(delta) = jac.lu_solve(&res) else { return };
        local.iter_mut().zip(&delta).for_each(|(a, d)| *a -= d);
        (res, jac) = eval(&local);
    }
    if norm_inf(&res).is_finite() && norm_inf(&res) <= 1e-10 * scale {
        s_h[first..first + m].copy_from_slice(&local);
    }
}

/// The splitting iteration: pointwise solve for `s = (p2 + p3) / 2`, projection, linear
/// solve `(D_2 + D_3) u / 2 = s - (c_2 + c_3) / 2` for `u`, and recomputation of `p`.
///
/// Stops when the change in `s` drops below `splitting_tol` or after `max_splitting_iters`
/// iterations; `converged` reports which.
pub fn solve_splitting(
    sys: &LDGSystem,
    op: &NumericalOperator,
    bc: (f64, f64),
    config: &SolverConfig,
    guess: &DGFunction,
) -> Result<Solution> {
    config.validate()?;
    let space = Arc::clone(sys.space());
    let n = space.n_dof();
    let nq = space.quad_order();
    let forms = sys.dense_forms();
    let mut m = forms.d[1].clone();
    m.axpy(1.0, &forms.d[2])?;
    m.scale(0.5);
    let lu = m.lu()?;
    let zero_p = sys.p_coeffs(&sys.q_coeffs(&vec![0.0; n], bc.0, bc.1)?)?;
    let c_avg: Vec<f64> = zero_p[1].iter().zip(&zero_p[2]).map(|(a, b)| 0.5 * (a + b)).collect();
    let alpha = op.alpha();
    let base = op.base();
    let reduced = ReducedSystem::new(sys, op, bc);

    let mut u = guess.coeffs().to_vec();
    let mut log = Vec::new();
    let mut converged = false;
    for it in 1..=config.max_splitting_iters {
        let (q, p) = reduced.derivatives(&u)?;
        let v = reduced.quad_values(&u, &q, &p);
        let mut s_vals = vec![0.0; space.n_quad()];
        for c in 0..space.cells() {
            for g in 0..nq {
                let idx = c * nq + g;
                let x = space.quad_point(c, g);
                let qbar = 0.5 * (v.q[0][idx] + v.q[1][idx]);
                let (uu, outer) = (v.u[idx], v.p[0][idx] + v.p[3][idx]);
                let start = 0.5 * (v.p[1][idx] + v.p[2][idx]);
                let f = |s: f64| {
                    let val = base.eval(s, qbar, uu, x, 0.0) + alpha * (outer - 2.0 * s);
                    let dp = base.partials(s, qbar, uu, x, 0.0)[0];
                    (val, dp - 2.0 * alpha)
                };
                s_vals[idx] = solve_pointwise(f, start).ok_or(Error::RootSolve { cell: c, x, start })?;
            }
        }
        let mut s_h = space.project_quad_values(&s_vals);
        for c in 0..space.cells() {
            project_cell_root(&space, c, &mut s_h, |idx, x, s| {
                let qbar = 0.5 * (v.q[0][idx] + v.q[1][idx]);
                let val = base.eval(s, qbar, v.u[idx], x, 0.0) + alpha * (v.p[0][idx] + v.p[3][idx] - 2.0 * s);
                (val, base.partials(s, qbar, v.u[idx], x, 0.0)[0] - 2.0 * alpha)
            });
        }
        let old_s: Vec<f64> = p[1].iter().zip(&p[2]).map(|(a, b)| 0.5 * (a + b)).collect();
        let change = s_h.iter().zip(&old_s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let rhs: Vec<f64> = s_h.iter().zip(&c_avg).map(|(a, b)| a - b).collect();
        u = lu.solve(&rhs)?;
        let res = norm_inf(&reduced.residual(&u)?);
        log.push(IterationRecord { iteration: it, residual: res, step: change });
        if change <= config.splitting_tol {
            converged = true;
            break;
        }
    }
    let u = DGFunction::from_coeffs(space, u)?;
    Ok(Solution { state: EllipticState::from_u(sys, u, bc)?, log, converged })
}
