//! Stencil form of the piecewise constant scheme, written without the DG machinery and used
//! to cross-check `r = 0` solves.
//!
//! Cell values `U_1..U_J` sit at midpoints `x̂_j`; `U_0 = u_a`, `U_{J+1} = u_b`, and the
//! mirror ghosts `U_{-1} = 2 u_a - U_1`, `U_{J+2} = 2 u_b - U_J` close the second differences.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numop::NumericalOperator;

#[derive(Debug, Clone, PartialEq)]
pub struct FDGrid {
    pub a: f64,
    pub b: f64,
    pub ua: f64,
    pub ub: f64,
    /// `U_1..U_J`.
    pub values: Vec<f64>,
}

impl FDGrid {
    pub fn new(a: f64, b: f64, (ua, ub): (f64, f64), values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !(b > a) {
            return Err(Error::InvalidMesh("FD grid needs a < b and at least one cell".into()));
        }
        Ok(Self { a, b, ua, ub, values })
    }

    /// Grid holding `f` at the midpoints.
    pub fn sampled(a: f64, b: f64, bc: (f64, f64), cells: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = (b - a) / cells as f64;
        Self::new(a, b, bc, (0..cells).map(|j| f(a + (j as f64 + 0.5) * h)).collect())
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.cells() as f64
    }

    pub fn midpoint(&self, j: usize) -> f64 {
        self.a + (j as f64 - 0.5) * self.h()
    }

    /// `U_j` for `j` in `-1..=J+2`, ghosts included.
    fn value(&self, j: isize) -> f64 {
        let n = self.cells() as isize;
        match j {
            -1 => 2.0 * self.ua - self.values[0],
            0 => self.ua,
            j if j == n + 1 => self.ub,
            j if j == n + 2 => 2.0 * self.ub - self.values[(n - 1) as usize],
            j => self.values[(j - 1) as usize],
        }
    }

    fn second_difference(&self, j: isize) -> f64 {
        let h = self.h();
        (self.value(j + 1) - 2.0 * self.value(j) + self.value(j - 1)) / (h * h)
    }
}

/// Residual `Fhat(δ²U_{j-1}, δ²U_j, δ²U_j, δ²U_{j+1}, δ⁻U_j, δ⁺U_j, U_j, ·)` for `j = 1..J`.
///
/// The `x` argument is averaged over the two Gauss points `x̂_j ± h / (2 sqrt 3)`, the rule the
/// `r = 0` LDG residual integrates with; for `x`-independent `F` this is the midpoint value.
pub fn fd_residual(grid: &FDGrid, op: &NumericalOperator) -> Vec<f64> {
    let h = grid.h();
    let offset = h / (2.0 * 3f64.sqrt());
    (1..=grid.cells() as isize)
        .map(|j| {
            let u = grid.value(j);
            let (pm, p0, pp) = (grid.second_difference(j - 1), grid.second_difference(j), grid.second_difference(j + 1));
            let qm = (u - grid.value(j - 1)) / h;
            let qp = (grid.value(j + 1) - u) / h;
            let x = grid.midpoint(j as usize);
            let f = |x: f64| op.evaluate(pm, p0, p0, pp, qm, qp, u, x, 0.0);
            0.5 * (f(x - offset) + f(x + offset))
        })
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton with a central-difference Jacobian, from `guess`.
pub fn fd_solve(op: &NumericalOperator, guess: FDGrid, tol: f64, max_iters: usize) -> Result<FDGrid> {
    let n = guess.cells();
    let mut grid = guess;
    let mut r = fd_residual(&grid, op);
    let mut norm = max_abs(&r);
    for it in 0..max_iters {
        if norm <= tol {
            return Ok(grid);
        }
        let mut jac = DMatrix::zeros(n, n);
        for col in 0..n {
            let step = 1e-7 * (1.0 + grid.values[col].abs());
            let mut plus = grid.clone();
            plus.values[col] += step;
            let mut minus = grid.clone();
            minus.values[col] -= step;
            let (rp, rm) = (fd_residual(&plus, op), fd_residual(&minus, op));
            for row in 0..n {
                jac[(row, col)] = (rp[row] - rm[row]) / (2.0 * step);
            }
        }
        let delta = jac
            .lu()
            .solve(&DVector::from_iterator(n, r.iter().map(|x| -x)))
            .ok_or(Error::SingularJacobian { pivot: 0 })?;
        let mut lambda = 1.0;
        let mut next = None;
        for _ in 0..=10 {
            let mut trial = grid.clone();
            trial.values.iter_mut().zip(delta.iter()).for_each(|(u, d)| *u += lambda * d);
            let rt = fd_residual(&trial, op);
            let nt = max_abs(&rt);
            if nt.is_finite() && (nt < norm || next.is_none()) {
                let done = nt < norm;
                next = Some((trial, rt, nt));
                if done {
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, rt, nt)) = next else {
            return Err(Error::NoConvergence { iterations: it, residual: norm, last: grid.values });
        };
        grid = trial;
        r = rt;
        norm = nt;
    }
    if norm <= tol {
        Ok(grid)
    } else {
        Err(Error::NoConvergence { iterations: max_iters, residual: norm, last: grid.values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numop::PointwiseOperator;
    use crate::problems;

    #[test]
    fn ghosts_and_differences() {
        let g = FDGrid::new(0.0, 1.0, (1.0, 2.0), vec![3.0, 4.0]).unwrap();
        assert_eq!(g.value(-1), -1.0);
        assert_eq!(g.value(0), 1.0);
        assert_eq!(g.value(3), 2.0);
        assert_eq!(g.value(4), 0.0);
        // mirror ghosts make the boundary second differences vanish
        assert_eq!(g.second_difference(0), 0.0);
        assert_eq!(g.second_difference(3), 0.0);
        assert_eq!(g.second_difference(1), (4.0 - 6.0 + 1.0) / 0.25);
        assert!(FDGrid::new(1.0, 0.0, (0.0, 0.0), vec![1.0]).is_err());
    }

    #[test]
    fn quadratic_solves_test1_stencil_in_the_interior() {
        let pb = problems::test1();
        let op = pb.numerical_operator();
        let cells = 16;
        let g = FDGrid::sampled(0.0, 1.0, (0.0, 0.5), cells, |x| 0.5 * x * x).unwrap();
        let r = fd_residual(&g, &op);
        // second differences are exact on quadratics away from the boundary stencils
        for j in 2..cells - 2 {
            assert!(r[j].abs() <= 1e-10, "{j}: {}", r[j]);
        }
    }

    #[test]
    fn linear_operator_is_solved_in_one_step() {
        // -u'' = 2 with the moment switched off
        let op = NumericalOperator::new(PointwiseOperator::new(|p, _, _, _, _| -p - 2.0), 0.0);
        let g = FDGrid::sampled(0.0, 1.0, (0.0, 0.0), 8, |_| 0.0).unwrap();
        let sol = fd_solve(&op, g, 1e-12, 5).unwrap();
        let r = fd_residual(&sol, &op);
        assert!(max_abs(&r) <= 1e-12);
    }

    #[test]
    fn test1_error_matches_the_table() {
        let pb = problems::test1();
        let op = pb.numerical_operator();
        // from the exact solution Newton lands on another discrete root; the secant does not
        let guess = FDGrid::sampled(0.0, 1.0, (0.0, 0.5), 16, |x| 0.5 * x).unwrap();
        let sol = fd_solve(&op, guess, 1e-10, 50).unwrap();
        // piecewise constant error: sup over each cell of |U_j - u(x)|
        let h = sol.h();
        let err = (1..=16)
            .map(|j| {
                let (l, r) = (sol.midpoint(j) - 0.5 * h, sol.midpoint(j) + 0.5 * h);
                let u = sol.values[j - 1];
                (u - 0.5 * l * l).abs().max((u - 0.5 * r * r).abs())
            })
            .fold(0.0, f64::max);
        assert!(err > 5.3e-2 / 2.0 && err < 5.3e-2 * 2.0, "{err}");
    }

    #[test]
    fn matches_the_piecewise_constant_ldg_solution() {
        use crate::elliptic::{linear_guess, solve_newton, SolverConfig};
        use crate::{DGSpace, LDGSystem, Mesh};
        use std::sync::Arc;
        for name in ["test2", "test3"] {
            let pb = problems::by_name(name).unwrap();
            let (op, bc) = (pb.numerical_operator(), pb.bc.at(0.0));
            let sys = LDGSystem::assemble(Arc::new(DGSpace::new(Mesh::uniform(pb.a, pb.b, 16).unwrap(), 0)));
            let ldg = solve_newton(&sys, &op, bc, &SolverConfig::default(), &linear_guess(sys.space(), bc)).unwrap();
            let guess = FDGrid::sampled(pb.a, pb.b, bc, 16, |x| bc.0 + (bc.1 - bc.0) * (x - pb.a) / (pb.b - pb.a)).unwrap();
            let fd = fd_solve(&op, guess, 1e-10, 50).unwrap();
            let h = fd.h();
            for (c, v) in ldg.state.u.coeffs().iter().zip(&fd.values) {
                assert!((c / h.sqrt() - v).abs() <= 1e-9, "{name}");
            }
        }
    }
}
