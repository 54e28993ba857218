//! Reference QP solver used to measure how far the LP path is from the true
//! optimum.
//!
//! Dual active-set method in the style of Goldfarb and Idnani: start at the
//! unconstrained minimizer, add the lowest-index violated constraint, and take
//! primal/dual steps that keep every multiplier non-negative. Each iteration
//! solves small dense systems; this solver is meant for simulation, not for
//! the real-time loop.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::trajectory::QuadraticProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpResult {
    pub alpha_star: DVector<f64>,
    /// `alpha' Q alpha + q' alpha` (without `q0`)
    pub objective: f64,
    /// Active constraint indices in the order they entered.
    pub active: Vec<usize>,
    /// One multiplier per constraint, zero for inactive ones.
    pub multipliers: DVector<f64>,
    pub iterations: usize,
    pub status: QpStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpConfig {
    /// Violation above which a constraint is added.
    pub feasibility_tol: f64,
    pub iteration_limit: usize,
}

impl Default for QpConfig {
    fn default() -> Self {
        Self { feasibility_tol: 1e-10, iteration_limit: 500 }
    }
}

/// Minimizes `alpha' Q alpha + q' alpha` subject to `G alpha <= h`.
///
/// Multipliers follow `2 Q alpha + q + G' lambda = 0`, `lambda >= 0`.
pub fn qp_solve(
    q_mat: &DMatrix<f64>,
    q_vec: &DVector<f64>,
    g: &DMatrix<f64>,
    h: &DVector<f64>,
    cfg: QpConfig,
) -> Result<QpResult> {
    let n = q_vec.len();
    let m = h.len();
    let hess = q_mat * 2.0;
    let hinv = hess
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?
        .inverse();
    let scale = 1.0 + h.amax();

    let mut x = -(&hinv * q_vec);
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let mut iterations = 0;

    let status = 'outer: loop {
        let slack = g * &x - h;
        let Some(p) = (0..m).find(|i| slack[*i] > cfg.feasibility_tol * scale.max(g.row(*i).norm())) else {
            break QpStatus::Optimal;
        };
        // constraint normal in ">=" form
        let np: DVector<f64> = -g.row(p).transpose();
        let mut u_plus = 0.0;
        loop {
            iterations += 1;
            if iterations > cfg.iteration_limit {
                break 'outer QpStatus::IterationLimit;
            }
            let k = active.len();
            let (z, r) = if k == 0 {
                (&hinv * &np, DVector::zeros(0))
            } else {
                let nmat = DMatrix::from_fn(n, k, |i, j| -g[(active[j], i)]);
                let hn = &hinv * &nmat;
                let gram = nmat.transpose() * &hn;
                let r = gram
                    .lu()
                    .solve(&(hn.transpose() * &np))
                    .ok_or(Error::Singular("active-set normals"))?;
                let z = &hinv * (&np - &nmat * &r);
                (z, r)
            };

            // largest dual step keeping multipliers non-negative
            let mut t_dual = f64::INFINITY;
            let mut drop = None;
            for j in 0..k {
                if r[j] > 1e-14 {
                    let ratio = u[j] / r[j];
                    if ratio < t_dual {
                        t_dual = ratio;
                        drop = Some(j);
                    }
                }
            }
            let zn = z.dot(&np);
            let t_primal = if z.norm() > 1e-14 * (1.0 + x.norm()) && zn > 0.0 {
                // ">=" slack of p is -(g_p x - h_p)
                (g.row(p).dot(&x.transpose()) - h[p]) / zn
            } else {
                f64::INFINITY
            };
            let t = t_dual.min(t_primal);
            if t.is_infinite() {
                break 'outer QpStatus::Infeasible;
            }
            if t_primal.is_finite() {
                x += &z * t;
            }
            for j in 0..k {
                u[j] -= t * r[j];
            }
            u_plus += t;
            if t_primal <= t_dual {
                active.push(p);
                u.push(u_plus);
                break;
            }
            let j = drop.expect("dual step needs a blocking multiplier");
            active.remove(j);
            u.remove(j);
        }
    };

    let mut multipliers = DVector::zeros(m);
    for (idx, val) in active.iter().zip(&u) {
        multipliers[*idx] = val.max(0.0);
    }
    let objective = (x.transpose() * q_mat * &x)[0] + q_vec.dot(&x);
    Ok(QpResult { alpha_star: x, objective, active, multipliers, iterations, status })
}

/// Solves a [`QuadraticProblem`] with the reference solver.
pub fn solve_problem(qp: &QuadraticProblem, cfg: QpConfig) -> Result<QpResult> {
    qp_solve(&qp.q_mat, &qp.q_vec, &qp.g, &qp.h, cfg)
}

/// KKT residuals of a candidate solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

pub fn kkt_residuals(
    q_mat: &DMatrix<f64>,
    q_vec: &DVector<f64>,
    g: &DMatrix<f64>,
    h: &DVector<f64>,
    alpha: &DVector<f64>,
    lambda: &DVector<f64>,
) -> KktResiduals {
    let grad = q_mat * alpha * 2.0 + q_vec + g.transpose() * lambda;
    let slack = g * alpha - h;
    KktResiduals {
        stationarity: grad.norm(),
        primal: slack.iter().copied().fold(0.0, f64::max),
        dual: lambda.iter().copied().fold(0.0, |a, l| a.max(-l)),
        complementarity: slack.iter().zip(lambda.iter()).map(|(s, l)| (s * l).abs()).fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unconstrained_minimizer() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let c = DVector::from_row_slice(&[1.0, -3.0]);
        let res = qp_solve(&q, &c, &DMatrix::zeros(0, 2), &DVector::zeros(0), QpConfig::default()).unwrap();
        let want = -(q.clone().try_inverse().unwrap() * &c) * 0.5;
        assert_eq!(res.status, QpStatus::Optimal);
        assert!((res.alpha_star - want).norm() < 1e-12);
        assert!(res.active.is_empty());
    }

    #[test]
    fn single_bound_hand_solution() {
        // (x - 2)^2 = x^2 - 4x + 4 subject to x <= 1
        let q = DMatrix::from_element(1, 1, 1.0);
        let c = DVector::from_element(1, -4.0);
        let g = DMatrix::from_element(1, 1, 1.0);
        let h = DVector::from_element(1, 1.0);
        let res = qp_solve(&q, &c, &g, &h, QpConfig::default()).unwrap();
        assert_relative_eq!(res.alpha_star[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(res.multipliers[0], 2.0, max_relative = 1e-12);
        assert_eq!(res.active, vec![0]);
    }

    #[test]
    fn infeasible_is_reported() {
        let q = DMatrix::identity(1, 1);
        let c = DVector::zeros(1);
        let g = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let h = DVector::from_row_slice(&[-1.0, -1.0]);
        let res = qp_solve(&q, &c, &g, &h, QpConfig::default()).unwrap();
        assert_eq!(res.status, QpStatus::Infeasible);
    }

    #[test]
    fn rejects_indefinite() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let err = qp_solve(&q, &DVector::zeros(2), &DMatrix::zeros(0, 2), &DVector::zeros(0), QpConfig::default());
        assert!(matches!(err, Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn kkt_holds_on_box_problem() {
        // min |x - (3, 3)|^2 in the unit box
        let q = DMatrix::identity(2, 2);
        let c = DVector::from_row_slice(&[-6.0, -6.0]);
        let g = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]);
        let h = DVector::from_row_slice(&[1.0, 1.0, 0.0, 0.0]);
        let res = qp_solve(&q, &c, &g, &h, QpConfig::default()).unwrap();
        assert!((res.alpha_star.clone() - DVector::from_row_slice(&[1.0, 1.0])).norm() < 1e-12);
        let k = kkt_residuals(&q, &c, &g, &h, &res.alpha_star, &res.multipliers);
        assert!(k.stationarity < 1e-9 && k.primal < 1e-9 && k.dual < 1e-12 && k.complementarity < 1e-9);
    }
}
