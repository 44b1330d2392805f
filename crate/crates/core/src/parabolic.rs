//! Time stepping for `u_t + F(u_xx, u_x, u, x, t) = 0`: explicit RK4 and forward Euler
//! with a penalized boundary projection, and the implicit trapezoidal rule.

use std::sync::Arc;

use crate::dgspace::{DGFunction, DGSpace};
use crate::elliptic::{EllipticState, ReducedSystem, SolverConfig};
use crate::error::{Error, Result};
use crate::ldg_ops::{BoundaryData, LDGSystem};
use crate::linalg::DenseMatrix;
use crate::numop::NumericalOperator;
use crate::problems::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    ForwardEuler,
    Trapezoidal,
}

/// How explicit schemes impose the boundary data after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    /// Penalized projection with weight `h_max^{-1/2}`.
    Modified,
    /// Plain `L2` projection: the update is left as is.
    Standard,
}

/// Uniform time grid `t_k = k dt` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub final_time: f64,
    pub n_steps: usize,
    pub dt: f64,
    /// `kappa_t` when the grid came from `dt = kappa_t h^2`.
    pub cfl_kappa: Option<f64>,
}

impl TimeGrid {
    pub fn new(final_time: f64, n_steps: usize) -> Result<Self> {
        if !(final_time >= 0.0) || !final_time.is_finite() {
            return Err(Error::Config(format!("final time must be finite and nonnegative, got {final_time}")));
        }
        if n_steps == 0 && final_time > 0.0 {
            return Err(Error::Config("a positive final time needs at least one step".into()));
        }
        let dt = if n_steps == 0 { 0.0 } else { final_time / n_steps as f64 };
        Ok(Self { final_time, n_steps, dt, cfl_kappa: None })
    }

    /// Grid with the largest `dt <= kappa_t h_max^2` that divides `T`.
    pub fn from_cfl(final_time: f64, kappa_t: f64, h_max: f64) -> Result<Self> {
        if !(kappa_t > 0.0) || !(h_max > 0.0) {
            return Err(Error::Config("kappa_t and h must be positive".into()));
        }
        let target = kappa_t * h_max * h_max;
        // the small slack keeps T / target = 1000.0000000001 from adding a step
        let n = ((final_time / target) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let mut grid = Self::new(final_time, if final_time > 0.0 { n } else { 0 })?;
        grid.cfl_kappa = Some(kappa_t);
        Ok(grid)
    }

    /// Step size `dt` given directly; it must divide `T` up to rounding.
    pub fn from_dt(final_time: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        let n = (final_time / dt).round().max(if final_time > 0.0 { 1.0 } else { 0.0 }) as usize;
        Self::new(final_time, n)
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.final_time
        } else {
            k as f64 * self.dt
        }
    }
}

/// `P_h Fhat_k[v]`: the operator evaluated with the discrete derivatives of `v` for the
/// boundary data at `t`.
pub fn fhat_apply(
    sys: &LDGSystem,
    op: &NumericalOperator,
    v: &DGFunction,
    t: f64,
    bc: &BoundaryData,
) -> Result<DGFunction> {
    let c = fhat_coeffs(sys, op, v.coeffs(), t, bc)?;
    DGFunction::from_coeffs(Arc::clone(sys.space()), c)
}

fn fhat_coeffs(sys: &LDGSystem, op: &NumericalOperator, v: &[f64], t: f64, bc: &BoundaryData) -> Result<Vec<f64>> {
    let bct = bc.at(t);
    let red = ReducedSystem::new(sys, op, bct).at_time(t);
    let q = sys.q_coeffs(v, bct.0, bct.1)?;
    let p = sys.p_coeffs(&q)?;
    red.projected_operator(v, &q, &p)
}

/// Penalty weight `h_max^{-1/2}` of the modified projection.
pub fn penalty_weight(space: &DGSpace) -> f64 {
    space.mesh().h_max().powf(-0.5)
}

/// Modified projection of a function of `V_h`: boundary traces are pulled toward
/// `(u_a(t), u_b(t))`. Only the first and last cell change.
pub fn modified_projection(space: &Arc<DGSpace>, v: &DGFunction, t: f64, bc: &BoundaryData) -> Result<DGFunction> {
    let c = penalized_projection(space, v.coeffs(), bc.at(t), penalty_weight(space))?;
    DGFunction::from_coeffs(Arc::clone(space), c)
}

/// Solves `(Pv, phi) + gamma [Pv(a+) phi(a+) + Pv(b-) phi(b-)] = (v, phi) + gamma [u_a phi(a+) + u_b phi(b-)]`
/// for coefficient vectors; `gamma = 0` returns `v`.
pub fn penalized_projection(space: &DGSpace, v: &[f64], (ua, ub): (f64, f64), gamma: f64) -> Result<Vec<f64>> {
    if v.len() != space.n_dof() {
        return Err(Error::DimensionMismatch(format!("expected {} coefficients, got {}", space.n_dof(), v.len())));
    }
    let mut out = v.to_vec();
    if gamma == 0.0 {
        return Ok(out);
    }
    let m = space.dofs_per_cell();
    let last = space.cells() - 1;
    let mut solve_cell = |c: usize, traces: &[(Vec<f64>, f64)]| -> Result<()> {
        let mut mat = DenseMatrix::identity(m);
        let first = space.dof(c, 0);
        let mut rhs = v[first..first + m].to_vec();
        for (phi, value) in traces {
            for k in 0..m {
                rhs[k] += gamma * value * phi[k];
                for l in 0..m {
                    mat.add_to(k, l, gamma * phi[k] * phi[l]);
                }
            }
        }
        out[first..first + m].copy_from_slice(&mat.lu_solve(&rhs)?);
        Ok(())
    };
    let left = (space.left_trace(0), ua);
    let right = (space.right_trace(last), ub);
    if last == 0 {
        solve_cell(0, &[left, right])?;
    } else {
        solve_cell(0, &[left])?;
        solve_cell(last, &[right])?;
    }
    Ok(out)
}

fn finalize(space: &Arc<DGSpace>, v: Vec<f64>, t: f64, bc: &BoundaryData, mode: ProjectionMode) -> Result<DGFunction> {
    let c = match mode {
        ProjectionMode::Modified => penalized_projection(space, &v, bc.at(t), penalty_weight(space))?,
        ProjectionMode::Standard => v,
    };
    DGFunction::from_coeffs(Arc::clone(space), c)
}

/// `-dt P_h Fhat` at time `t`; non-finite values are reported as a blow-up of `stage`.
fn stage(sys: &LDGSystem, op: &NumericalOperator, v: &[f64], t: f64, dt: f64, bc: &BoundaryData, stage: usize) -> Result<Vec<f64>> {
    let blow = || Error::BlowUp { step: 0, stage };
    let mut xi = fhat_coeffs(sys, op, v, t, bc).map_err(|e| match e {
        Error::NonFinite { .. } => blow(),
        other => other,
    })?;
    xi.iter_mut().for_each(|x| *x *= -dt);
    if xi.iter().all(|x| x.is_finite()) {
        Ok(xi)
    } else {
        Err(blow())
    }
}

fn offset(u: &[f64], xi: &[f64], w: f64) -> Vec<f64> {
    u.iter().zip(xi).map(|(a, b)| a + w * b).collect()
}

/// One classical RK4 step from `t_prev` to `t_prev + dt`.
///
/// The step index in a returned [`Error::BlowUp`] is 0; [`evolve`] fills it in.
pub fn step_rk4(
    sys: &LDGSystem,
    op: &NumericalOperator,
    u_prev: &DGFunction,
    t_prev: f64,
    dt: f64,
    bc: &BoundaryData,
    mode: ProjectionMode,
) -> Result<DGFunction> {
    let u = u_prev.coeffs();
    let half = t_prev + 0.5 * dt;
    let xi1 = stage(sys, op, u, t_prev, dt, bc, 1)?;
    let xi2 = stage(sys, op, &offset(u, &xi1, 0.5), half, dt, bc, 2)?;
    let xi3 = stage(sys, op, &offset(u, &xi2, 0.5), half, dt, bc, 3)?;
    let xi4 = stage(sys, op, &offset(u, &xi3, 1.0), t_prev + dt, dt, bc, 4)?;
    let next: Vec<f64> = (0..u.len())
        .map(|i| u[i] + (xi1[i] + 2.0 * xi2[i] + 2.0 * xi3[i] + xi4[i]) / 6.0)
        .collect();
    finalize(sys.space(), next, t_prev + dt, bc, mode)
}

/// One forward Euler step.
pub fn step_forward_euler(
    sys: &LDGSystem,
    op: &NumericalOperator,
    u_prev: &DGFunction,
    t_prev: f64,
    dt: f64,
    bc: &BoundaryData,
    mode: ProjectionMode,
) -> Result<DGFunction> {
    let u = u_prev.coeffs();
    let xi = stage(sys, op, u, t_prev, dt, bc, 1)?;
    finalize(sys.space(), offset(u, &xi, 1.0), t_prev + dt, bc, mode)
}

/// One trapezoidal step to `t_n`: solves `u_n + (dt/2) P_h Fhat_n[u_n] = u_{n-1} - (dt/2) P_h Fhat_{n-1}[u_{n-1}]`
/// by reduced Newton from `u_{n-1}`. `state_prev` supplies the derivatives at `t_{n-1}`.
pub fn step_trapezoidal(
    sys: &LDGSystem,
    op: &NumericalOperator,
    state_prev: &EllipticState,
    t_n: f64,
    dt: f64,
    bc: &BoundaryData,
    config: &SolverConfig,
) -> Result<EllipticState> {
    let t_prev = t_n - dt;
    let u = state_prev.u.coeffs();
    let q = [state_prev.q[0].coeffs().to_vec(), state_prev.q[1].coeffs().to_vec()];
    let p = state_prev.p.each_ref().map(|f| f.coeffs().to_vec());
    let prev = ReducedSystem::new(sys, op, bc.at(t_prev)).at_time(t_prev).projected_operator(u, &q, &p)?;
    let rhs: Vec<f64> = u.iter().zip(&prev).map(|(a, f)| a - 0.5 * dt * f).collect();
    let bcn = bc.at(t_n);
    let red = ReducedSystem::new(sys, op, bcn).at_time(t_n).shifted(1.0, 0.5 * dt, rhs);
    let (next, _) = red.newton(config, u)?;
    EllipticState::from_u(sys, DGFunction::from_coeffs(Arc::clone(sys.space()), next)?, bcn)
}

#[derive(Debug, Clone)]
pub struct EvolveConfig {
    pub scheme: Scheme,
    pub projection: ProjectionMode,
    pub solver: SolverConfig,
    /// Record a snapshot every this many steps (and at the end); `None` records nothing.
    pub snapshot_every: Option<usize>,
}

impl EvolveConfig {
    pub fn new(scheme: Scheme) -> Self {
        Self { scheme, projection: ProjectionMode::Modified, solver: SolverConfig::default(), snapshot_every: None }
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub u: DGFunction,
    pub final_time: f64,
    pub steps: usize,
    /// `(t_k, u_h^k)` pairs, starting with the initial projection.
    pub history: Vec<(f64, DGFunction)>,
}

/// Steps `u_h^0 = P_h u_0` to the final time of `grid`.
pub fn evolve(
    problem: &Problem,
    sys: &LDGSystem,
    grid: &TimeGrid,
    op: &NumericalOperator,
    config: &EvolveConfig,
) -> Result<Evolution> {
    let space = Arc::clone(sys.space());
    let bc = &problem.bc;
    let mut u = DGFunction::project(Arc::clone(&space), |x| problem.initial(x));
    let mut history = Vec::new();
    if config.snapshot_every.is_some() {
        history.push((0.0, u.clone()));
    }
    let mut state = match config.scheme {
        Scheme::Trapezoidal => Some(EllipticState::from_u(sys, u.clone(), bc.at(0.0))?),
        _ => None,
    };
    let tag = |step: usize| {
        move |e: Error| match e {
            Error::BlowUp { stage, .. } => Error::BlowUp { step, stage },
            other => Error::TimeStep { step, source: Box::new(other) },
        }
    };
    for n in 1..=grid.n_steps {
        let (t_prev, t_n) = (grid.time(n - 1), grid.time(n));
        let dt = t_n - t_prev;
        u = match config.scheme {
            Scheme::Rk4 => step_rk4(sys, op, &u, t_prev, dt, bc, config.projection).map_err(tag(n))?,
            Scheme::ForwardEuler => step_forward_euler(sys, op, &u, t_prev, dt, bc, config.projection).map_err(tag(n))?,
            Scheme::Trapezoidal => {
                let prev = state.as_ref().expect("trapezoidal state");
                let next = step_trapezoidal(sys, op, prev, t_n, dt, bc, &config.solver).map_err(tag(n))?;
                let u = next.u.clone();
                state = Some(next);
                u
            }
        };
        if let Some(every) = config.snapshot_every {
            if n % every.max(1) == 0 || n == grid.n_steps {
                history.push((t_n, u.clone()));
            }
        }
    }
    Ok(Evolution { u, final_time: grid.final_time, steps: grid.n_steps, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::numop::PointwiseOperator;
    use crate::problems;

    fn system(a: f64, b: f64, cells: usize, r: usize) -> LDGSystem {
        LDGSystem::assemble(Arc::new(DGSpace::new(Mesh::uniform(a, b, cells).unwrap(), r)))
    }

    fn heat() -> NumericalOperator {
        NumericalOperator::new(PointwiseOperator::new(|p, _, _, _, _| -p).with_partials(|_, _, _, _, _| [-1.0, 0.0, 0.0]), 1.0)
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn time_grid_divides_final_time() {
        let g = TimeGrid::from_cfl(1.0, 0.001, 0.25).unwrap();
        assert_eq!(g.n_steps, 16000);
        assert!((g.dt * g.n_steps as f64 - 1.0).abs() < 1e-12);
        assert_eq!(g.cfl_kappa, Some(0.001));
        let g = TimeGrid::from_cfl(3.1, 0.05, 1.0).unwrap();
        assert!(g.dt <= 0.05 && (g.dt * g.n_steps as f64 - 3.1).abs() < 1e-12);
        assert_eq!(TimeGrid::from_dt(3.10, 0.031).unwrap().n_steps, 100);
        assert_eq!(TimeGrid::new(0.0, 0).unwrap().dt, 0.0);
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert_eq!(TimeGrid::new(1.0, 3).unwrap().time(3), 1.0);
    }

    #[test]
    fn heat_operator_of_quadratic() {
        let sys = system(0.0, 1.0, 6, 2);
        let v = DGFunction::project(Arc::clone(sys.space()), |x| 0.5 * x * x);
        let bc = BoundaryData::constant(0.0, 0.5);
        let f = fhat_apply(&sys, &heat(), &v, 0.3, &bc).unwrap();
        let e = f.error_norms(|_| -1.0);
        assert!(e.linf <= 1e-10, "{e:?}");
    }

    #[test]
    fn constant_operator_gives_constant() {
        let sys = system(-1.0, 2.0, 5, 1);
        let op = NumericalOperator::new(PointwiseOperator::new(|_, _, _, _, _| 2.5), 3.0);
        let v = DGFunction::project(Arc::clone(sys.space()), |x| x.sin());
        let f = fhat_apply(&sys, &op, &v, 0.0, &BoundaryData::constant(0.0, 0.0)).unwrap();
        // the moment of a nonpolynomial v is not zero, so take alpha = 0
        let f0 = fhat_apply(&sys, &op.with_alpha(0.0), &v, 0.0, &BoundaryData::constant(0.0, 0.0)).unwrap();
        assert!(f0.error_norms(|_| 2.5).linf <= 1e-12);
        assert!(f.error_norms(|_| 2.5).linf > 1e-6);
    }

    #[test]
    fn fhat_matches_pointwise_oracle_for_test5() {
        let pb = problems::test5();
        let sys = system(pb.a, pb.b, 8, 2);
        let space = Arc::clone(sys.space());
        let v = DGFunction::project(Arc::clone(&space), |x| pb.initial(x));
        let op = pb.numerical_operator();
        let f = fhat_apply(&sys, &op, &v, 0.0, &pb.bc).unwrap();
        // u0 is quadratic, so all discrete second derivatives equal 1 and the moment vanishes
        let oracle: Vec<f64> = space
            .quad_points()
            .iter()
            .map(|&x| pb.operator.eval(1.0, x, 0.5 * x * x + 1.0, x, 0.0))
            .collect();
        let expect = space.project_quad_values(&oracle);
        assert!(max_diff(f.coeffs(), &expect) <= 1e-10);
        // u_t + F = 0 with u_t(0) = 0
        assert!(f.error_norms(|_| 0.0).linf <= 1e-10);
    }

    #[test]
    fn modified_projection_examples() {
        let space = Arc::new(DGSpace::new(Mesh::uniform(0.0, 1.0, 2).unwrap(), 0));
        let zero = DGFunction::zeros(Arc::clone(&space));
        let p = modified_projection(&space, &zero, 0.0, &BoundaryData::constant(0.0, 0.0)).unwrap();
        assert!(p.coeffs().iter().all(|&c| c == 0.0));
        let p = modified_projection(&space, &zero, 0.0, &BoundaryData::constant(1.0, 0.0)).unwrap();
        let (h, g) = (0.5_f64, 0.5_f64.powf(-0.5));
        // (1 + g/h) c = g/sqrt(h) for the basis 1/sqrt(h)
        let value = p.eval_at(0.1).unwrap();
        assert!((value - g / (h + g)).abs() < 1e-14, "{value}");
        assert_eq!(p.eval_at(0.9).unwrap(), 0.0);

        // a function of the space with matching traces is unchanged
        let space = Arc::new(DGSpace::new(Mesh::uniform(0.0, 2.0, 4).unwrap(), 2));
        let v = DGFunction::project(Arc::clone(&space), |x| x * x - x + 3.0);
        let p = modified_projection(&space, &v, 0.0, &BoundaryData::constant(3.0, 5.0)).unwrap();
        assert!(max_diff(p.coeffs(), v.coeffs()) < 1e-13);
        // zero weight is the plain projection
        let c = penalized_projection(&space, v.coeffs(), (10.0, -4.0), 0.0).unwrap();
        assert_eq!(c, v.coeffs());
        // only the boundary cells move
        let c = penalized_projection(&space, v.coeffs(), (10.0, -4.0), 1.0).unwrap();
        let m = space.dofs_per_cell();
        assert_eq!(c[m..3 * m], v.coeffs()[m..3 * m]);
    }

    #[test]
    fn single_cell_projection_uses_both_traces() {
        let space = Arc::new(DGSpace::new(Mesh::uniform(0.0, 1.0, 1).unwrap(), 1));
        let v = DGFunction::project(Arc::clone(&space), |x| 2.0 * x - 1.0);
        let p = modified_projection(&space, &v, 0.0, &BoundaryData::constant(-1.0, 1.0)).unwrap();
        assert!(max_diff(p.coeffs(), v.coeffs()) < 1e-14);
        let p = modified_projection(&space, &v, 0.0, &BoundaryData::constant(0.0, 0.0)).unwrap();
        assert!(p.eval_trace(0, crate::Side::Plus).unwrap().abs() < 1.0);
        assert!(p.eval_trace(1, crate::Side::Minus).unwrap().abs() < 1.0);
    }

    #[test]
    fn zero_operator_leaves_state_unchanged() {
        let sys = system(0.0, 1.0, 4, 1);
        let op = NumericalOperator::new(PointwiseOperator::new(|_, _, _, _, _| 0.0), 2.0);
        let bc = BoundaryData::constant(1.0, 3.0);
        let u = DGFunction::project(Arc::clone(sys.space()), |x| 1.0 + 2.0 * x);
        for mode in [ProjectionMode::Modified, ProjectionMode::Standard] {
            // a stable step: round-off in the moment is not amplified
            let a = step_rk4(&sys, &op, &u, 0.0, 1e-3, &bc, mode).unwrap();
            let b = step_forward_euler(&sys, &op, &u, 0.0, 1e-3, &bc, mode).unwrap();
            assert!(max_diff(a.coeffs(), u.coeffs()) < 1e-13);
            assert!(max_diff(b.coeffs(), u.coeffs()) < 1e-13);
        }
        let state = EllipticState::from_u(&sys, u.clone(), bc.at(0.0)).unwrap();
        let next = step_trapezoidal(&sys, &op, &state, 0.1, 0.1, &bc, &SolverConfig::default()).unwrap();
        assert!(max_diff(next.u.coeffs(), u.coeffs()) < 1e-12);
    }

    #[test]
    fn euler_with_zero_step_is_the_modified_projection() {
        let pb = problems::test5();
        let sys = system(pb.a, pb.b, 4, 1);
        let u = DGFunction::project(Arc::clone(sys.space()), |x| x.exp());
        let e = step_forward_euler(&sys, &pb.numerical_operator(), &u, 0.2, 0.0, &pb.bc, ProjectionMode::Modified).unwrap();
        let m = modified_projection(sys.space(), &u, 0.2, &pb.bc).unwrap();
        assert_eq!(e.coeffs(), m.coeffs());
    }

    /// One step from `u` with `dt`, against 64 substeps of the same method.
    fn one_step_error(step: impl Fn(&DGFunction, f64, f64) -> DGFunction, u: &DGFunction, dt: f64) -> f64 {
        let coarse = step(u, 0.0, dt);
        let mut fine = u.clone();
        for k in 0..64 {
            fine = step(&fine, k as f64 * dt / 64.0, dt / 64.0);
        }
        max_diff(coarse.coeffs(), fine.coeffs())
    }

    #[test]
    fn rk4_local_error_is_fifth_order() {
        let sys = system(0.0, 1.0, 4, 1);
        let op = heat();
        let bc = BoundaryData::constant(0.0, 0.0);
        let u = DGFunction::project(Arc::clone(sys.space()), |x| (std::f64::consts::PI * x).sin());
        let step = |v: &DGFunction, t: f64, dt: f64| step_rk4(&sys, &op, v, t, dt, &bc, ProjectionMode::Standard).unwrap();
        let e1 = one_step_error(&step, &u, 2e-4);
        let e2 = one_step_error(&step, &u, 1e-4);
        let order = (e1 / e2).log2();
        assert!((order - 5.0).abs() < 0.3, "{e1} {e2} {order}");
    }

    #[test]
    fn forward_euler_is_first_order() {
        let sys = system(0.0, 1.0, 4, 1);
        let op = heat();
        let bc = BoundaryData::constant(0.0, 0.0);
        let u0 = DGFunction::project(Arc::clone(sys.space()), |x| (std::f64::consts::PI * x).sin());
        let run = |n: usize| {
            let dt = 0.01 / n as f64;
            let mut u = u0.clone();
            for k in 0..n {
                u = step_forward_euler(&sys, &op, &u, k as f64 * dt, dt, &bc, ProjectionMode::Standard).unwrap();
            }
            u
        };
        let mut reference = u0.clone();
        let dt = 0.01 / 4000.0;
        for k in 0..4000 {
            reference = step_rk4(&sys, &op, &reference, k as f64 * dt, dt, &bc, ProjectionMode::Standard).unwrap();
        }
        let e1 = max_diff(run(100).coeffs(), reference.coeffs());
        let e2 = max_diff(run(200).coeffs(), reference.coeffs());
        let ratio = e1 / e2;
        assert!((ratio - 2.0).abs() < 0.15, "{e1} {e2} {ratio}");
    }

    #[test]
    fn blow_up_is_reported() {
        let pb = problems::test5();
        let sys = system(pb.a, pb.b, 8, 1);
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let err = evolve(&pb, &sys, &grid, &pb.numerical_operator(), &EvolveConfig::new(Scheme::Rk4)).unwrap_err();
        assert!(matches!(err, Error::BlowUp { step, .. } if step >= 1), "{err:?}");
    }

    #[test]
    fn zero_steps_return_initial_projection() {
        let pb = problems::test8();
        let sys = system(pb.a, pb.b, 6, 2);
        let grid = TimeGrid::new(0.0, 0).unwrap();
        for scheme in [Scheme::Rk4, Scheme::ForwardEuler, Scheme::Trapezoidal] {
            let ev = evolve(&pb, &sys, &grid, &pb.numerical_operator(), &EvolveConfig::new(scheme)).unwrap();
            let p = DGFunction::project(Arc::clone(sys.space()), |x| pb.initial(x));
            assert_eq!(ev.u.coeffs(), p.coeffs());
        }
    }

    #[test]
    fn trapezoidal_residual_and_accuracy() {
        let pb = problems::test5();
        let sys = system(pb.a, pb.b, 4, 2);
        let op = pb.numerical_operator();
        let config = SolverConfig::default();
        let u0 = DGFunction::project(Arc::clone(sys.space()), |x| pb.initial(x));
        let state = EllipticState::from_u(&sys, u0, pb.bc.at(0.0)).unwrap();
        let dt = 0.05;
        let next = step_trapezoidal(&sys, &op, &state, dt, dt, &pb.bc, &config).unwrap();
        let prev = fhat_apply(&sys, &op, &state.u, 0.0, &pb.bc).unwrap();
        let rhs: Vec<f64> = state.u.coeffs().iter().zip(prev.coeffs()).map(|(a, f)| a - 0.5 * dt * f).collect();
        let red = ReducedSystem::new(&sys, &op, pb.bc.at(dt)).at_time(dt).shifted(1.0, 0.5 * dt, rhs);
        let r = red.residual(next.u.coeffs()).unwrap();
        assert!(crate::linalg::norm_inf(&r) <= config.newton_tol);

        let mut cfg = EvolveConfig::new(Scheme::Trapezoidal);
        cfg.snapshot_every = Some(5);
        let grid = TimeGrid::from_dt(0.5, 0.01).unwrap();
        let ev = evolve(&pb, &sys, &grid, &op, &cfg).unwrap();
        assert_eq!(ev.history.len(), 11);
        let e = ev.u.error_norms(|x| pb.exact(x, 0.5).unwrap());
        assert!(e.l2 < 1e-3, "{e:?}");
    }

    #[test]
    fn rk4_tracks_test5() {
        let pb = problems::test5();
        let sys = system(pb.a, pb.b, 4, 2);
        let grid = TimeGrid::from_cfl(0.2, 0.001, sys.space().mesh().h_max()).unwrap();
        let ev = evolve(&pb, &sys, &grid, &pb.numerical_operator(), &EvolveConfig::new(Scheme::Rk4)).unwrap();
        let e = ev.u.error_norms(|x| pb.exact(x, 0.2).unwrap());
        assert!(e.l2 < 1e-6, "{e:?}");
    }
}
