//! Pointwise operators `F(p, q, u, x, t)` and Lax-Friedrichs-like numerical operators
//!
//! ```text
//! Fhat = F((p2 + p3) / 2, (q1 + q2) / 2, u, x, t) + alpha (p1 - p2 - p3 + p4).
//! ```

use std::fmt;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(f64, f64, f64, f64, f64) -> f64 + Send + Sync>;
type PartialsFn = Arc<dyn Fn(f64, f64, f64, f64, f64) -> [f64; 3] + Send + Sync>;

/// Arguments of `F`: second derivative `p`, first derivative `q`, value `u`, position, time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub p: f64,
    pub q: f64,
    pub u: f64,
    pub x: f64,
    pub t: f64,
}

/// Arguments of `Fhat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub p: [f64; 4],
    pub q: [f64; 2],
    pub u: f64,
    pub x: f64,
    pub t: f64,
}

impl Jet {
    /// The jet with all one-sided derivatives equal to the given point's.
    pub fn diagonal(pt: &Point) -> Self {
        Self {
            p: [pt.p; 4],
            q: [pt.q; 2],
            u: pt.u,
            x: pt.x,
            t: pt.t,
        }
    }
}

/// Pointwise nonlinear operator `F`, optionally with analytic partials `(F_p, F_q, F_u)`.
#[derive(Clone)]
pub struct PointwiseOperator {
    f: ScalarFn,
    partials: Option<PartialsFn>,
    monotone_bound: Option<f64>,
}

impl fmt::Debug for PointwiseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointwiseOperator")
            .field("analytic_partials", &self.partials.is_some())
            .field("monotone_bound", &self.monotone_bound)
            .finish()
    }
}

/// Relative step for finite-difference partials.
const FD_STEP: f64 = 1e-6;

impl PointwiseOperator {
    pub fn new(f: impl Fn(f64, f64, f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            partials: None,
            monotone_bound: None,
        }
    }

    pub fn with_partials(
        mut self,
        d: impl Fn(f64, f64, f64, f64, f64) -> [f64; 3] + Send + Sync + 'static,
    ) -> Self {
        self.partials = Some(Arc::new(d));
        self
    }

    /// Records a bound `M > |dF/dp|` on the region of interest.
    pub fn with_monotone_bound(mut self, m: f64) -> Self {
        self.monotone_bound = Some(m);
        self
    }

    pub fn monotone_bound(&self) -> Option<f64> {
        self.monotone_bound
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.partials.is_some()
    }

    pub fn eval(&self, p: f64, q: f64, u: f64, x: f64, t: f64) -> f64 {
        (self.f)(p, q, u, x, t)
    }

    pub fn eval_point(&self, pt: &Point) -> f64 {
        self.eval(pt.p, pt.q, pt.u, pt.x, pt.t)
    }

    /// `(F_p, F_q, F_u)`, analytic when available.
    pub fn partials(&self, p: f64, q: f64, u: f64, x: f64, t: f64) -> [f64; 3] {
        match &self.partials {
            Some(d) => d(p, q, u, x, t),
            None => self.fd_partials(p, q, u, x, t),
        }
    }

    /// Central differences with step `1e-6 (1 + |value|)`.
    pub fn fd_partials(&self, p: f64, q: f64, u: f64, x: f64, t: f64) -> [f64; 3] {
        let f = &self.f;
        let hp = FD_STEP * (1.0 + p.abs());
        let hq = FD_STEP * (1.0 + q.abs());
        let hu = FD_STEP * (1.0 + u.abs());
        [
            (f(p + hp, q, u, x, t) - f(p - hp, q, u, x, t)) / (2.0 * hp),
            (f(p, q + hq, u, x, t) - f(p, q - hq, u, x, t)) / (2.0 * hq),
            (f(p, q, u + hu, x, t) - f(p, q, u - hu, x, t)) / (2.0 * hu),
        ]
    }

    /// Compares analytic partials against finite differences; returns the failing samples.
    pub fn check_partials(&self, samples: &[Point], rel_tol: f64) -> Report {
        let mut report = Report::default();
        for (i, s) in samples.iter().enumerate() {
            report.checked += 1;
            let a = self.partials(s.p, s.q, s.u, s.x, s.t);
            let d = self.fd_partials(s.p, s.q, s.u, s.x, s.t);
            for (k, name) in ["p", "q", "u"].iter().enumerate() {
                let err = (a[k] - d[k]).abs();
                if err > rel_tol * (1.0 + d[k].abs()) {
                    report.violations.push(Violation {
                        sample: i,
                        what: format!("dF/d{name}: analytic {} vs finite difference {}", a[k], d[k]),
                        value: err,
                    });
                }
            }
        }
        report
    }
}

/// Partial derivatives of `Fhat` with respect to `p1..p4`, `q1, q2` and `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhatPartials {
    pub p: [f64; 4],
    pub q: [f64; 2],
    pub u: f64,
}

/// `Fhat` built from a base operator and a moment coefficient `alpha`.
#[derive(Debug, Clone)]
pub struct NumericalOperator {
    base: PointwiseOperator,
    alpha: f64,
}

impl NumericalOperator {
    pub fn new(base: PointwiseOperator, alpha: f64) -> Self {
        Self { base, alpha }
    }

    pub fn base(&self) -> &PointwiseOperator {
        &self.base
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            base: self.base.clone(),
            alpha,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn evaluate(&self, p1: f64, p2: f64, p3: f64, p4: f64, q1: f64, q2: f64, u: f64, x: f64, t: f64) -> f64 {
        self.base.eval(0.5 * (p2 + p3), 0.5 * (q1 + q2), u, x, t) + self.alpha * (p1 - p2 - p3 + p4)
    }

    pub fn eval_jet(&self, j: &Jet) -> f64 {
        self.evaluate(j.p[0], j.p[1], j.p[2], j.p[3], j.q[0], j.q[1], j.u, j.x, j.t)
    }

    /// Value and partials of `Fhat` at a jet.
    pub fn partials(&self, j: &Jet) -> (f64, FhatPartials) {
        let (p, q) = (0.5 * (j.p[1] + j.p[2]), 0.5 * (j.q[0] + j.q[1]));
        let a = self.alpha;
        let [fp, fq, fu] = self.base.partials(p, q, j.u, j.x, j.t);
        let value = self.base.eval(p, q, j.u, j.x, j.t) + a * (j.p[0] - j.p[1] - j.p[2] + j.p[3]);
        let d = FhatPartials {
            p: [a, 0.5 * fp - a, 0.5 * fp - a, a],
            q: [0.5 * fq, 0.5 * fq],
            u: fu,
        };
        (value, d)
    }

    pub fn check_consistency(&self, samples: &[Point]) -> Report {
        check_consistency(|j| self.eval_jet(j), |pt| self.base.eval_point(pt), samples)
    }

    pub fn check_gmonotonicity(&self, samples: &[Jet], perturbation: f64) -> Report {
        check_gmonotonicity(|j| self.eval_jet(j), samples, perturbation)
    }
}

/// One failed check.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub sample: usize,
    pub what: String,
    pub value: f64,
}

/// Outcome of a sampled property check.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} samples, {} violations", self.checked, self.violations.len())?;
        if let Some(v) = self.violations.first() {
            write!(f, " (first: sample {}: {})", v.sample, v.what)?;
        }
        Ok(())
    }
}

/// `|Fhat(p, p, p, p, q, q, u, x, t) - F(p, q, u, x, t)| <= 1e-12 (1 + |F|)` at every sample.
pub fn check_consistency(
    fhat: impl Fn(&Jet) -> f64,
    f: impl Fn(&Point) -> f64,
    samples: &[Point],
) -> Report {
    let mut report = Report::default();
    for (i, s) in samples.iter().enumerate() {
        report.checked += 1;
        let exact = f(s);
        let got = fhat(&Jet::diagonal(s));
        let err = (got - exact).abs();
        if !(err <= 1e-12 * (1.0 + exact.abs())) {
            report.violations.push(Violation {
                sample: i,
                what: format!("Fhat on the diagonal is {got}, F is {exact}"),
                value: err,
            });
        }
    }
    report
}

/// Central differences of `Fhat` must be `>= -1e-8` in `p1, p4` and `<= 1e-8` in `p2, p3`.
///
/// The step in each `p_j` is `perturbation (1 + |p_j|)`.
pub fn check_gmonotonicity(fhat: impl Fn(&Jet) -> f64, samples: &[Jet], perturbation: f64) -> Report {
    const SLACK: f64 = 1e-8;
    let mut report = Report::default();
    for (i, s) in samples.iter().enumerate() {
        report.checked += 1;
        for k in 0..4 {
            let h = perturbation * (1.0 + s.p[k].abs());
            let mut hi = *s;
            let mut lo = *s;
            hi.p[k] += h;
            lo.p[k] -= h;
            let d = (fhat(&hi) - fhat(&lo)) / (2.0 * h);
            let increasing = k == 0 || k == 3;
            let bad = if increasing { !(d >= -SLACK) } else { !(d <= SLACK) };
            if bad {
                let dir = if increasing { "increasing" } else { "decreasing" };
                report.violations.push(Violation {
                    sample: i,
                    what: format!("dFhat/dp{} = {d} but Fhat must be {dir} in p{}", k + 1, k + 1),
                    value: d,
                });
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn test1(alpha: f64) -> NumericalOperator {
        let base = PointwiseOperator::new(|p, _, _, _, _| -p * p + 1.0)
            .with_partials(|p, _, _, _, _| [-2.0 * p, 0.0, 0.0]);
        NumericalOperator::new(base, alpha)
    }

    fn grid_jets(range: f64) -> Vec<Jet> {
        let mut out = Vec::new();
        let n = 7;
        for a in 0..n {
            for b in 0..n {
                let s = |i: usize| -range + 2.0 * range * i as f64 / (n - 1) as f64;
                out.push(Jet {
                    p: [s(a), s(b), s(n - 1 - a), s(n - 1 - b)],
                    q: [0.3, -0.2],
                    u: 0.1,
                    x: 0.5,
                    t: 0.0,
                });
            }
        }
        out
    }

    #[test]
    fn evaluate_examples() {
        let op = test1(10.0);
        assert_eq!(op.evaluate(1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.3, 0.0), 0.0);
        // hand arithmetic: -1 + 1 + 10 (2 - 1 - 1 + 2)
        assert_eq!(op.evaluate(2.0, 1.0, 1.0, 2.0, 0.0, 0.0, 0.0, 0.3, 0.0), 20.0);
        let pt = Point { p: 0.7, q: 2.0, u: -1.0, x: 0.1, t: 0.0 };
        assert_eq!(op.eval_jet(&Jet::diagonal(&pt)), op.base().eval_point(&pt));
    }

    #[test]
    fn consistency_checks() {
        let op = test1(10.0);
        let samples: Vec<Point> = (0..50)
            .map(|i| Point { p: i as f64 * 0.1 - 2.5, q: 1.0, u: 0.0, x: 0.2, t: 0.0 })
            .collect();
        assert!(op.check_consistency(&samples).passed());
        // moment replaced by alpha (p1 + p4) is inconsistent away from p = 0
        let bad = |j: &Jet| op.base().eval(0.5 * (j.p[1] + j.p[2]), 0.5 * (j.q[0] + j.q[1]), j.u, j.x, j.t) + 10.0 * (j.p[0] + j.p[3]);
        let r = check_consistency(bad, |pt| op.base().eval_point(pt), &samples);
        assert_eq!(r.violations.len(), samples.iter().filter(|s| s.p.abs() > 1e-12).count());
        // discontinuous F, sampled away from the jump
        let step = NumericalOperator::new(
            PointwiseOperator::new(|p, _, _, x, _| if x < 0.5 { -p } else { -2.0 * p }),
            1.0,
        );
        let away: Vec<Point> = [0.1, 0.3, 0.7, 0.9]
            .iter()
            .map(|&x| Point { p: 1.0, q: 0.0, u: 0.0, x, t: 0.0 })
            .collect();
        assert!(step.check_consistency(&away).passed());
    }

    #[test]
    fn gmonotonicity_checks() {
        let jets = grid_jets(2.0);
        assert!(test1(10.0).check_gmonotonicity(&jets, 1e-4).passed());
        let r = test1(-1.0).check_gmonotonicity(&jets, 1e-4);
        assert!(!r.passed());
        assert!(r.violations.iter().any(|v| v.what.contains("dp1")));
        let heat = NumericalOperator::new(PointwiseOperator::new(|p, _, _, _, _| -p), 0.0);
        assert!(heat.check_gmonotonicity(&jets, 1e-4).passed());
        let anti = NumericalOperator::new(PointwiseOperator::new(|p, _, _, _, _| -p), -0.6);
        assert!(!anti.check_gmonotonicity(&jets, 1e-4).passed());
    }

    #[test]
    fn analytic_partials_match_finite_differences() {
        let op = test1(3.0);
        let jet = Jet { p: [0.3, -1.2, 0.8, 2.0], q: [0.5, -0.1], u: 0.2, x: 0.4, t: 0.0 };
        let (v, d) = op.partials(&jet);
        assert_eq!(v, op.eval_jet(&jet));
        for k in 0..4 {
            let h = 1e-6;
            let mut a = jet;
            let mut b = jet;
            a.p[k] += h;
            b.p[k] -= h;
            let fd = (op.eval_jet(&a) - op.eval_jet(&b)) / (2.0 * h);
            assert!((fd - d.p[k]).abs() < 1e-6);
        }
        let fdonly = NumericalOperator::new(PointwiseOperator::new(|p, q, u, _, _| p * q + u.sin()), 1.0);
        let (_, d) = fdonly.partials(&jet);
        let (p, q) = (0.5 * (jet.p[1] + jet.p[2]), 0.5 * (jet.q[0] + jet.q[1]));
        assert!((d.q[0] - 0.5 * p).abs() < 1e-8);
        assert!((d.p[1] - (0.5 * q - 1.0)).abs() < 1e-8);
        assert!((d.u - jet.u.cos()).abs() < 1e-8);
        let samples = [Point { p: 0.4, q: 1.0, u: 2.0, x: 0.0, t: 0.0 }];
        assert!(op.base().check_partials(&samples, 1e-5).passed());
        let wrong = PointwiseOperator::new(|p, _, _, _, _| p * p).with_partials(|_, _, _, _, _| [0.0; 3]);
        assert!(!wrong.check_partials(&samples, 1e-5).passed());
    }

    proptest! {
        #[test]
        fn moment_vanishes_on_diagonal(s in -50.0f64..50.0, q in -5.0f64..5.0, alpha in -20.0f64..20.0) {
            let op = test1(alpha);
            let v = op.evaluate(s, s, s, s, q, q, 0.0, 0.5, 0.0);
            prop_assert!((v - (1.0 - s * s)).abs() <= 1e-12 * (1.0 + v.abs()));
        }

        #[test]
        fn moment_is_linear_in_p1(p in proptest::array::uniform4(-5.0f64..5.0), delta in -3.0f64..3.0, alpha in 0.0f64..20.0) {
            let op = test1(alpha);
            let base = op.evaluate(p[0], p[1], p[2], p[3], 0.0, 0.0, 0.0, 0.0, 0.0);
            let moved = op.evaluate(p[0] + delta, p[1], p[2], p[3], 0.0, 0.0, 0.0, 0.0, 0.0);
            prop_assert!((moved - base - alpha * delta).abs() <= 1e-12 * (1.0 + base.abs() + moved.abs()));
        }
    }
}
