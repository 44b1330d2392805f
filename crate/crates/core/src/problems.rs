//! The eight benchmark problems and the fixtures of the solution-selection experiment.
//!
//! Elliptic problems read `F(u_xx, u_x, u, x) = 0`, parabolic ones `u_t + F(u_xx, u_x, u, x, t) = 0`.
//! Control-set infima are reduced to closed form.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ldg_ops::BoundaryData;
use crate::numop::{Jet, NumericalOperator, Point, PointwiseOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Elliptic,
    Parabolic,
}

/// Exact solution value and derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactJet {
    pub u: f64,
    pub ux: f64,
    pub uxx: f64,
    pub ut: f64,
}

type ExactFn = Arc<dyn Fn(f64, f64) -> ExactJet + Send + Sync>;
type InitialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Time-stepping parameters used for a parabolic problem's tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParabolicSettings {
    pub final_time: f64,
    /// `kappa_t` for `r = 0, 1, 2, 3`.
    pub kappa_t: [f64; 4],
    /// Step size of the trapezoidal runs.
    pub dt_trapezoidal: f64,
}

/// Box of derivative values used when sampling operator checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRegion {
    pub p: (f64, f64),
    pub q: (f64, f64),
    pub u: (f64, f64),
}

impl Default for SampleRegion {
    fn default() -> Self {
        Self {
            p: (-5.0, 5.0),
            q: (-5.0, 5.0),
            u: (-5.0, 5.0),
        }
    }
}

#[derive(Clone)]
pub struct Problem {
    pub name: &'static str,
    pub kind: ProblemKind,
    pub a: f64,
    pub b: f64,
    pub operator: PointwiseOperator,
    pub bc: BoundaryData,
    pub u0: Option<InitialFn>,
    exact: Option<ExactFn>,
    /// Moment coefficient used for the published tables.
    pub alpha: f64,
    /// Points where the exact solution or `F` is not smooth.
    pub kinks: Vec<f64>,
    /// Mesh sizes of the published convergence tables.
    pub cells: Vec<usize>,
    pub parabolic: Option<ParabolicSettings>,
    pub sample_region: SampleRegion,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("domain", &(self.a, self.b))
            .field("alpha", &self.alpha)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn numerical_operator(&self) -> NumericalOperator {
        NumericalOperator::new(self.operator.clone(), self.alpha)
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact_jet(&self, x: f64, t: f64) -> Option<ExactJet> {
        self.exact.as_ref().map(|e| e(x, t))
    }

    /// Exact `u(x, t)`; `t` is ignored for elliptic problems.
    pub fn exact(&self, x: f64, t: f64) -> Option<f64> {
        self.exact_jet(x, t).map(|j| j.u)
    }

    /// Initial data for parabolic problems, the exact solution at `t = 0` otherwise.
    pub fn initial(&self, x: f64) -> f64 {
        match &self.u0 {
            Some(f) => f(x),
            None => self.exact(x, 0.0).unwrap_or(0.0),
        }
    }

    /// `u_t + F(u_xx, u_x, u, x, t)` at the exact solution (no `u_t` for elliptic problems).
    pub fn exact_residual(&self, x: f64, t: f64) -> Option<f64> {
        let j = self.exact_jet(x, t)?;
        let f = self.operator.eval(j.uxx, j.ux, j.u, x, t);
        Some(match self.kind {
            ProblemKind::Elliptic => f,
            ProblemKind::Parabolic => j.ut + f,
        })
    }

    fn final_time(&self) -> f64 {
        self.parabolic.map_or(0.0, |s| s.final_time)
    }

    /// Random points `(p, q, u, x, t)` in the sample region, `x` in the domain and `t` in `[0, T]`.
    pub fn point_samples(&self, n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = self.sample_region;
        let t_end = self.final_time();
        (0..n)
            .map(|_| Point {
                p: rng.random_range(r.p.0..=r.p.1),
                q: rng.random_range(r.q.0..=r.q.1),
                u: rng.random_range(r.u.0..=r.u.1),
                x: rng.random_range(self.a..=self.b),
                t: rng.random_range(0.0..=t_end),
            })
            .collect()
    }

    /// Random jets with independent `p_1..p_4` and `q_1, q_2` in the sample region.
    pub fn jet_samples(&self, n: usize, seed: u64) -> Vec<Jet> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = self.sample_region;
        let t_end = self.final_time();
        (0..n)
            .map(|_| Jet {
                p: std::array::from_fn(|_| rng.random_range(r.p.0..=r.p.1)),
                q: std::array::from_fn(|_| rng.random_range(r.q.0..=r.q.1)),
                u: rng.random_range(r.u.0..=r.u.1),
                x: rng.random_range(self.a..=self.b),
                t: rng.random_range(0.0..=t_end),
            })
            .collect()
    }

    /// Random points of the domain at distance more than `radius` from every kink.
    pub fn smooth_points(&self, n: usize, seed: u64, radius: f64) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t_end = self.final_time();
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let x = rng.random_range(self.a..=self.b);
            let t = rng.random_range(0.0..=t_end);
            if self.kinks.iter().all(|k| (x - k).abs() > radius) {
                out.push((x, t));
            }
        }
        out
    }
}

pub const NAMES: [&str; 8] = ["test1", "test2", "test3", "test4", "test5", "test6", "test7", "test8"];

pub fn by_name(name: &str) -> Result<Problem> {
    Ok(match name {
        "test1" => test1(),
        "test2" => test2(),
        "test3" => test3(),
        "test4" => test4(),
        "test5" => test5(),
        "test6" => test6(),
        "test7" => test7(),
        "test8" => test8(),
        other => return Err(Error::UnknownProblem(other.to_string())),
    })
}

pub fn all() -> Vec<Problem> {
    NAMES.iter().map(|n| by_name(n).expect("registered")).collect()
}

fn elliptic(
    name: &'static str,
    (a, b): (f64, f64),
    operator: PointwiseOperator,
    exact: impl Fn(f64) -> ExactJet + Send + Sync + 'static,
    alpha: f64,
) -> Problem {
    let (ua, ub) = (exact(a).u, exact(b).u);
    Problem {
        name,
        kind: ProblemKind::Elliptic,
        a,
        b,
        operator,
        bc: BoundaryData::constant(ua, ub),
        u0: None,
        exact: Some(Arc::new(move |x, _| exact(x))),
        alpha,
        kinks: Vec::new(),
        cells: vec![4, 8, 16, 32, 64],
        parabolic: None,
        sample_region: SampleRegion::default(),
    }
}

fn parabolic(
    name: &'static str,
    (a, b): (f64, f64),
    operator: PointwiseOperator,
    exact: impl Fn(f64, f64) -> ExactJet + Send + Sync + 'static,
    alpha: f64,
    settings: ParabolicSettings,
) -> Problem {
    let exact: ExactFn = Arc::new(exact);
    let (ea, eb, e0) = (Arc::clone(&exact), Arc::clone(&exact), Arc::clone(&exact));
    Problem {
        name,
        kind: ProblemKind::Parabolic,
        a,
        b,
        operator,
        bc: BoundaryData::new(move |t| ea(a, t).u, move |t| eb(b, t).u),
        u0: Some(Arc::new(move |x| e0(x, 0.0).u)),
        exact: Some(exact),
        alpha,
        kinks: Vec::new(),
        cells: vec![4, 8, 16, 32],
        parabolic: Some(settings),
        sample_region: SampleRegion::default(),
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Monge-Ampere type `-u_xx^2 + 1 = 0` on `(0, 1)`, `u(0) = 0`, `u(1) = 1/2`; viscosity solution `x^2 / 2`.
pub fn test1() -> Problem {
    let op = PointwiseOperator::new(|p, _, _, _, _| -p * p + 1.0)
        .with_partials(|p, _, _, _, _| [-2.0 * p, 0.0, 0.0])
        .with_monotone_bound(4.0);
    let mut pb = elliptic(
        "test1",
        (0.0, 1.0),
        op,
        |x| ExactJet { u: 0.5 * x * x, ux: x, uxx: 1.0, ut: 0.0 },
        10.0,
    );
    pb.cells = vec![4, 8, 16, 32];
    pb.sample_region = SampleRegion { p: (-2.0, 2.0), q: (-2.0, 2.0), u: (-2.0, 2.0) };
    pb
}

fn test2_source(x: f64) -> f64 {
    let tail = -4.0 * x * x * (x * x.abs()).sin() + 2.0 * (0.5 * x).cos() + 2.0;
    if x != 0.0 {
        2.0 * x / x.abs() * (x * x).cos() + tail
    } else {
        tail
    }
}

/// `-u_xx^3 + u_xx + S^3 - S = 0` on `(-1, 1)`, not monotone in `u_xx`; `u'' ` jumps at 0.
pub fn test2() -> Problem {
    let op = PointwiseOperator::new(|p, _, _, x, _| {
        let s = test2_source(x);
        -p * p * p + p + s * s * s - s
    })
    .with_partials(|p, _, _, _, _| [-3.0 * p * p + 1.0, 0.0, 0.0]);
    let mut pb = elliptic(
        "test2",
        (-1.0, 1.0),
        op,
        |x| {
            let ax = x.abs();
            ExactJet {
                u: (x * ax).sin() - 8.0 * (0.5 * x).cos() + x * x + 8.0,
                ux: 2.0 * ax * (x * ax).cos() + 4.0 * (0.5 * x).sin() + 2.0 * x,
                uxx: test2_source(x),
                ut: 0.0,
            }
        },
        6.0,
    );
    pb.kinks = vec![0.0];
    pb
}

/// HJB with control set `{1, 2}`: `min(-theta u_xx + u_x - u + S) = 0` on `(-1, 1)`; exact `x|x|^3`.
pub fn test3() -> Problem {
    fn source(x: f64) -> f64 {
        let ax = x.abs();
        let c = if x < 0.0 { -12.0 } else { 24.0 };
        c * x * x - 4.0 * ax.powi(3) + x * ax.powi(3)
    }
    let op = PointwiseOperator::new(|p, q, u, x, _| {
        let rest = q - u + source(x);
        (-p + rest).min(-2.0 * p + rest)
    })
    .with_partials(|p, _, _, _, _| {
        let theta = if p > 0.0 { 2.0 } else { 1.0 };
        [-theta, 1.0, -1.0]
    })
    .with_monotone_bound(2.0);
    let mut pb = elliptic(
        "test3",
        (-1.0, 1.0),
        op,
        |x| {
            let ax = x.abs();
            ExactJet { u: x * ax.powi(3), ux: 4.0 * ax.powi(3), uxx: 12.0 * x * ax, ut: 0.0 }
        },
        4.0,
    );
    pb.kinks = vec![0.0];
    pb
}

/// Minimizer and minimum of `theta^2 x^2 q - theta p` over `theta` in `(0, 1]`
/// (the `theta -> 0+` limit is reported as `theta = 0`).
pub fn test4_control(p: f64, q: f64, x: f64) -> (f64, f64) {
    let w = x * x * q;
    let mut best = (0.0, 0.0);
    let one = w - p;
    if one < best.1 {
        best = (1.0, one);
    }
    if w > 0.0 {
        let th = p / (2.0 * w);
        if th > 0.0 && th <= 1.0 {
            let v = th * th * w - th * p;
            if v < best.1 {
                best = (th, v);
            }
        }
    }
    best
}

/// HJB with control set `(0, 1]`: `inf(-theta u_xx + theta^2 x^2 u_x) + u/x + S = 0` on `(1.2, 4)`; exact `x^2 ln x`.
pub fn test4() -> Problem {
    fn source(x: f64) -> f64 {
        let l = x.ln();
        let x4 = x.powi(4);
        (4.0 * l * l + 12.0 * l + 9.0 - 8.0 * x4 * l * l - 4.0 * x4 * l) / (4.0 * x.powi(3) * (2.0 * l + 1.0))
    }
    let op = PointwiseOperator::new(|p, q, u, x, _| test4_control(p, q, x).1 + u / x + source(x))
        .with_partials(|p, q, _, x, _| {
            let (th, _) = test4_control(p, q, x);
            [-th, th * th * x * x, 1.0 / x]
        })
        .with_monotone_bound(1.0);
    elliptic(
        "test4",
        (1.2, 4.0),
        op,
        |x| {
            let l = x.ln();
            ExactJet { u: x * x * l, ux: 2.0 * x * l + x, uxx: 2.0 * l + 3.0, ut: 0.0 }
        },
        4.0,
    )
}

/// `u_t - u_xx u + x^2/2 + t^4 - 4t^3 + 1 = 0` on `(0, 1)`; exact `x^2/2 + t^4 + 1`.
pub fn test5() -> Problem {
    let op = PointwiseOperator::new(|p, _, u, x, t| -p * u + 0.5 * x * x + t.powi(4) - 4.0 * t.powi(3) + 1.0)
        .with_partials(|p, _, u, _, _| [-u, 0.0, -p]);
    let mut pb = parabolic(
        "test5",
        (0.0, 1.0),
        op,
        |x, t| ExactJet { u: 0.5 * x * x + t.powi(4) + 1.0, ux: x, uxx: 1.0, ut: 4.0 * t.powi(3) },
        2.0,
        ParabolicSettings { final_time: 1.0, kappa_t: [0.001; 4], dt_trapezoidal: 0.001 },
    );
    pb.sample_region = SampleRegion { p: (-3.0, 3.0), q: (-3.0, 3.0), u: (0.0, 3.0) };
    pb
}

fn test6_source(x: f64, t: f64) -> f64 {
    let s = t + 1.0;
    let e = (s * x).exp();
    e * (s * (s * s * e + 1.0).ln() - x)
}

/// `u_t - u_x ln(u_xx + 1) + S = 0` on `(0, 2)`; exact `exp((t + 1) x)`.
pub fn test6() -> Problem {
    let op = PointwiseOperator::new(|p, q, _, x, t| -q * (p + 1.0).ln() + test6_source(x, t))
        .with_partials(|p, q, _, _, _| [-q / (p + 1.0), -(p + 1.0).ln(), 0.0]);
    let mut pb = parabolic(
        "test6",
        (0.0, 2.0),
        op,
        |x, t| {
            let s = t + 1.0;
            let e = (s * x).exp();
            ExactJet { u: e, ux: s * e, uxx: s * s * e, ut: x * e }
        },
        4.0,
        ParabolicSettings {
            final_time: 0.5,
            kappa_t: [0.005, 0.001, 0.0005, 0.0001],
            dt_trapezoidal: 0.005,
        },
    );
    pb.sample_region = SampleRegion { p: (0.0, 60.0), q: (0.5, 30.0), u: (1.0, 30.0) };
    pb
}

/// Switching coefficient of test 7, with half-open time intervals.
pub fn test7_coefficient(x: f64, t: f64) -> f64 {
    let first = t > 0.0 && t <= 0.5 * PI && x > 0.0 && x <= PI;
    let second = t > 0.5 * PI && t <= PI && x > PI && x < 2.0 * PI;
    if first || second {
        1.0
    } else {
        0.5
    }
}

/// `u_t - min_{A in {1, 1/2}}(A u_xx + c cos t sin x) + sin t sin x = 0` on `(0, 2 pi)`; exact `cos t sin x`.
pub fn test7() -> Problem {
    let op = PointwiseOperator::new(|p, _, _, x, t| {
        let rest = test7_coefficient(x, t) * t.cos() * x.sin();
        -(p + rest).min(0.5 * p + rest) + t.sin() * x.sin()
    })
    .with_partials(|p, _, _, _, _| [if p > 0.0 { -0.5 } else { -1.0 }, 0.0, 0.0]);
    parabolic(
        "test7",
        (0.0, 2.0 * PI),
        op,
        |x, t| ExactJet {
            u: t.cos() * x.sin(),
            ux: t.cos() * x.cos(),
            uxx: -t.cos() * x.sin(),
            ut: -t.sin() * x.sin(),
        },
        2.0,
        ParabolicSettings {
            final_time: 3.10,
            kappa_t: [0.05, 0.005, 0.001, 0.0005],
            dt_trapezoidal: 0.031,
        },
    )
}

/// Bang-bang control: `u_t - (|x-1| u_xx - |u_x|) + |x-1|^2 (|x-1| + 3) e^{-t} = 0` on `(0, 3)`;
/// exact `|x - 1|^3 e^{-t}`.
pub fn test8() -> Problem {
    let op = PointwiseOperator::new(|p, q, _, x, t| {
        let d = (x - 1.0).abs();
        -(d * p - q.abs()) + d * d * (d + 3.0) * (-t).exp()
    })
    .with_partials(|_, q, _, x, _| [-(x - 1.0).abs(), sign(q), 0.0]);
    let mut pb = parabolic(
        "test8",
        (0.0, 3.0),
        op,
        |x, t| {
            let d = x - 1.0;
            let e = (-t).exp();
            ExactJet {
                u: d.abs().powi(3) * e,
                ux: 3.0 * d * d.abs() * e,
                uxx: 6.0 * d.abs() * e,
                ut: -d.abs().powi(3) * e,
            }
        },
        2.0,
        ParabolicSettings {
            final_time: 1.0,
            kappa_t: [0.05, 0.005, 0.001, 0.0005],
            dt_trapezoidal: 0.001,
        },
    );
    pb.kinks = vec![1.0];
    pb
}

/// Candidate limits of the selection experiment on test 1.
#[derive(Clone)]
pub struct SelectionFixtures {
    pub mu: fn(f64) -> f64,
    pub u_plus: fn(f64) -> f64,
    pub u_minus: fn(f64) -> f64,
    pub u_bar: fn(f64) -> f64,
}

impl SelectionFixtures {
    /// `(3/4) mu + (1/4) u_bar`.
    pub fn initial_guess(&self, x: f64) -> f64 {
        0.75 * (self.mu)(x) + 0.25 * (self.u_bar)(x)
    }
}

/// The artifact `mu`, convex on `(0, 1/2)` and concave on `(1/2, 1)`.
pub fn mu(x: f64) -> f64 {
    if x < 0.5 {
        0.5 * x * x + 0.25 * x
    } else {
        -0.5 * x * x + 1.25 * x - 0.25
    }
}

pub fn selection_fixtures() -> SelectionFixtures {
    SelectionFixtures {
        mu,
        u_plus: |x| 0.5 * x * x,
        u_minus: |x| -0.5 * x * x + x,
        u_bar: |x| 0.5 * x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry() {
        for name in NAMES {
            assert_eq!(by_name(name).unwrap().name, name);
        }
        assert!(matches!(by_name("test9"), Err(Error::UnknownProblem(_))));
        assert_eq!(all().len(), 8);
        let alphas: Vec<f64> = all().iter().map(|p| p.alpha).collect();
        assert_eq!(alphas, vec![10.0, 6.0, 4.0, 4.0, 2.0, 4.0, 2.0, 2.0]);
    }

    #[test]
    fn test1_identity() {
        let pb = test1();
        for &(q, u, x) in &[(0.0, 0.0, 0.1), (3.0, -2.0, 0.9)] {
            assert_eq!(pb.operator.eval(1.0, q, u, x, 0.0), 0.0);
        }
        assert_eq!(pb.bc.at(0.0), (0.0, 0.5));
    }

    #[test]
    fn test3_plug_in() {
        // hand derivatives of x|x|^3 at x = 0.5: u = 1/16, u' = 1/2, u'' = 3
        let pb = test3();
        let j = pb.exact_jet(0.5, 0.0).unwrap();
        assert_eq!((j.u, j.ux, j.uxx), (0.0625, 0.5, 3.0));
        assert!(pb.operator.eval(3.0, 0.5, 0.0625, 0.5, 0.0).abs() < 1e-14);
        assert_eq!(pb.bc.at(0.0), (-1.0, 1.0));
    }

    #[test]
    fn test4_boundary_values() {
        let pb = test4();
        let (ua, ub) = pb.bc.at(0.0);
        assert!((ua - 1.44 * 1.2f64.ln()).abs() < 1e-14);
        assert!((ub - 16.0 * 4.0f64.ln()).abs() < 1e-13);
        // the optimal control of the exact solution lies strictly inside (0, 1]
        for &x in &[1.2, 2.0, 3.9] {
            let j = pb.exact_jet(x, 0.0).unwrap();
            let (th, _) = test4_control(j.uxx, j.ux, x);
            let l = f64::ln(x);
            let expected = (2.0 * l + 3.0) / (2.0 * x.powi(3) * (2.0 * l + 1.0));
            assert!((th - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_solutions_solve_their_equations() {
        for pb in all() {
            for (x, t) in pb.smooth_points(1000, 17, 1e-3) {
                let r = pb.exact_residual(x, t).unwrap();
                // test 7 has c = 1/2 at t = 0 on the whole domain
                if pb.name == "test7" && t == 0.0 {
                    continue;
                }
                assert!(r.abs() <= 1e-8, "{} at x = {x}, t = {t}: {r}", pb.name);
            }
        }
    }

    #[test]
    fn parabolic_data_matches_exact_solution() {
        for pb in all().into_iter().filter(|p| p.kind == ProblemKind::Parabolic) {
            let t = 0.37;
            assert_eq!(pb.bc.ua(t), pb.exact(pb.a, t).unwrap());
            assert_eq!(pb.bc.ub(t), pb.exact(pb.b, t).unwrap());
            assert_eq!(pb.initial(0.3), pb.exact(0.3, 0.0).unwrap());
        }
        let p5 = test5();
        assert_eq!(p5.bc.at(0.5), (0.0625 + 1.0, 1.5 + 0.0625));
        let p8 = test8();
        assert!((p8.bc.ub(1.0) - 8.0 * (-1.0f64).exp()).abs() < 1e-15);
    }

    /// Oracle: minimum over a uniform grid of control values.
    fn grid_min(n: usize, lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> f64 {
        (0..=n)
            .map(|i| g(lo + (hi - lo) * i as f64 / n as f64))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn control_reductions_match_grid_minimization() {
        let p3 = test3();
        let p4 = test4();
        let p7 = test7();
        let p8 = test8();
        for (i, s) in p3.point_samples(200, 3).iter().enumerate() {
            // F(0, 0, 0, x) = S(x)
            let source = p3.operator.eval(0.0, 0.0, 0.0, s.x, 0.0);
            let brute = grid_min(1, 1.0, 2.0, |th| -th * s.p) + s.q - s.u + source;
            assert!((p3.operator.eval_point(s) - brute).abs() < 1e-8, "sample {i}");
        }
        for s in p4.point_samples(200, 4) {
            let x = s.x;
            let rest = p4.operator.eval(0.0, 0.0, s.u, x, 0.0);
            let n = 200_000;
            let brute = grid_min(n, 1.0 / n as f64, 1.0, |th| -th * s.p + th * th * x * x * s.q).min(0.0) + rest;
            // the grid resolves the vertex to O(1/n^2)
            let tol = 1e-8 + s.q.abs() * x * x * (1.0 / n as f64).powi(2) * 4.0 + s.p.abs() / n as f64;
            assert!((p4.operator.eval_point(&s) - brute).abs() <= tol, "{s:?}");
        }
        for s in p7.point_samples(200, 7) {
            let rest = test7_coefficient(s.x, s.t) * s.t.cos() * s.x.sin();
            let brute = -[1.0, 0.5].iter().map(|a| a * s.p + rest).fold(f64::INFINITY, f64::min)
                + s.t.sin() * s.x.sin();
            assert!((p7.operator.eval_point(&s) - brute).abs() < 1e-12);
        }
        for s in p8.point_samples(200, 8) {
            let d = (s.x - 1.0).abs();
            let inf = grid_min(10_000, -1.0, 1.0, |th| d * s.p + th * s.q);
            let brute = -inf + d * d * (d + 3.0) * (-s.t).exp();
            assert!((p8.operator.eval_point(&s) - brute).abs() < 1e-10);
        }
    }

    #[test]
    fn analytic_partials_agree_with_finite_differences() {
        for pb in all() {
            // stay away from the switching surfaces of the control problems
            let samples: Vec<Point> = pb
                .point_samples(300, 5)
                .into_iter()
                .filter(|s| s.p.abs() > 1e-3 && s.q.abs() > 1e-3)
                .collect();
            let report = pb.operator.check_partials(&samples, 1e-5);
            // a sample may still land within a finite-difference step of a switch
            assert!(report.violations.len() <= samples.len() / 100, "{}: {report}", pb.name);
        }
    }

    #[test]
    fn selection_fixture_values() {
        let f = selection_fixtures();
        // both branches give 1/4 at x = 1/2
        assert!(((f.mu)(0.5) - 0.25).abs() < 1e-15);
        assert!(((f.mu)(0.5 - 1e-15) - 0.25).abs() < 1e-14);
        // one-sided second differences give mu'' = +1 and -1
        let h = 1e-3;
        let d2 = |x: f64| ((f.mu)(x - h) - 2.0 * (f.mu)(x) + (f.mu)(x + h)) / (h * h);
        assert!((d2(0.25) - 1.0).abs() < 1e-6);
        assert!((d2(0.75) + 1.0).abs() < 1e-6);
        // mu is C1 at 1/2
        let slope_l = ((f.mu)(0.5) - (f.mu)(0.5 - h)) / h;
        let slope_r = ((f.mu)(0.5 + h) - (f.mu)(0.5)) / h;
        assert!((slope_l - slope_r).abs() < 2e-3);
        for g in [f.u_plus, f.u_minus, f.u_bar, f.mu] {
            assert!(g(0.0).abs() < 1e-15);
            assert!((g(1.0) - 0.5).abs() < 1e-15);
        }
        assert!((f.initial_guess(0.5) - (0.75 * 0.25 + 0.25 * 0.25)).abs() < 1e-15);
    }

    #[test]
    fn samplers_are_deterministic_and_in_range() {
        let pb = test6();
        assert_eq!(pb.jet_samples(10, 1), pb.jet_samples(10, 1));
        for j in pb.jet_samples(100, 2) {
            assert!(j.x >= 0.0 && j.x <= 2.0 && j.t >= 0.0 && j.t <= 0.5);
            assert!(j.p.iter().all(|&p| p >= 0.0));
        }
        for (x, _) in test8().smooth_points(100, 3, 0.1) {
            assert!((x - 1.0).abs() > 0.1);
        }
    }
}
