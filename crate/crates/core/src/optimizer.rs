//! Suboptimal constrained solve of the trajectory problem.
//!
//! 1. Unconstrained optimum `alpha0 = -Q^-1 q / 2`.
//! 2. Cholesky `A' A = Q` turns the cost into `|beta|^2 + J(alpha0)` with
//!    `beta = A (alpha - alpha0)`.
//! 3. The squared norm is replaced by the 1-norm and `beta = beta_p - beta_n`
//!    is split into non-negative parts, which gives a standard-form LP.
//! 4. The LP optimum is mapped back, `alpha = alpha0 + A^-1 beta`.
//!
//! Without active constraints the LP optimum is `beta = 0`, so the result is
//! exactly the unconstrained optimum.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lp::{simplex_solve, LinearProgramStd, LpStatus, SimplexConfig};
use crate::qp::{solve_problem, QpConfig, QpStatus};
use crate::trajectory::QuadraticProblem;

/// Tolerance used to call a constraint active at the solution.
const ACTIVE_TOL: f64 = 1e-7;

pub fn unconstrained_optimum(q_mat: &DMatrix<f64>, q_vec: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = q_mat.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.solve(q_vec) * -0.5)
}

/// The problem in least-distance form, `min |beta|^2` s.t. `gb beta <= hb`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastDistanceProblem {
    /// Upper-triangular factor with `A' A = Q`.
    pub a: DMatrix<f64>,
    pub alpha0: DVector<f64>,
    pub gb: DMatrix<f64>,
    pub hb: DVector<f64>,
    /// Cost at the unconstrained optimum.
    pub j0: f64,
}

impl LeastDistanceProblem {
    pub fn to_beta(&self, alpha: &DVector<f64>) -> DVector<f64> {
        &self.a * (alpha - &self.alpha0)
    }

    pub fn to_alpha(&self, beta: &DVector<f64>) -> DVector<f64> {
        let step = self
            .a
            .solve_upper_triangular(beta)
            .expect("Cholesky factor has a positive diagonal");
        &self.alpha0 + step
    }
}

pub fn to_least_distance(qp: &QuadraticProblem) -> Result<LeastDistanceProblem> {
    let chol = qp.q_mat.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let a = chol.l().transpose();
    let scale = a.diagonal().amax();
    if a.diagonal().iter().any(|d| *d <= 1e-12 * scale) {
        return Err(Error::NotPositiveDefinite);
    }
    let alpha0 = chol.solve(&qp.q_vec) * -0.5;
    // G A^-1, computed as (A'^-1 G')'
    let gb = a
        .transpose()
        .solve_lower_triangular(&qp.g.transpose())
        .ok_or(Error::Singular("Cholesky factor"))?
        .transpose();
    let hb = &qp.h - &qp.g * &alpha0;
    let j0 = qp.objective(&alpha0);
    Ok(LeastDistanceProblem { a, alpha0, gb, hb, j0 })
}

/// `min sum(beta_p + beta_n)` s.t. `gb (beta_p - beta_n) <= hb`, closed with
/// slacks. Columns are `(beta_p, beta_n, slack)`.
pub fn linearize_to_lp(ld: &LeastDistanceProblem) -> LinearProgramStd {
    let (m, n) = ld.gb.shape();
    let mut a = DMatrix::zeros(m, 2 * n);
    a.view_mut((0, 0), (m, n)).copy_from(&ld.gb);
    a.view_mut((0, n), (m, n)).copy_from(&(-&ld.gb));
    LinearProgramStd::from_inequalities(&vec![1.0; 2 * n], &a, ld.hb.as_slice())
}

/// Recovers `beta = beta_p - beta_n` from an LP solution vector.
pub fn split_to_beta(x: &[f64], n: usize) -> DVector<f64> {
    DVector::from_fn(n, |i, _| x[i] - x[n + i])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub alpha_star: DVector<f64>,
    /// Quadratic cost `J(alpha_star)` including `q0`.
    pub objective: f64,
    pub iterations: usize,
    pub active_constraints: Vec<usize>,
    pub status: SolveStatus,
    /// For infeasible problems: whether holding the initial currents
    /// (`alpha = 0`) satisfies the sampled constraints.
    pub hold_feasible: bool,
    /// Simplex work bound (parameters plus constraints) for this problem.
    pub work_bound: usize,
}

/// Which solver produces the trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Least-distance transform plus simplex.
    #[default]
    Lp,
    /// Reference active-set QP.
    Qp,
}

fn active_set(qp: &QuadraticProblem, alpha: &DVector<f64>) -> Vec<usize> {
    let slack = &qp.h - &qp.g * alpha;
    (0..qp.n_constraints())
        .filter(|i| slack[*i].abs() <= ACTIVE_TOL * (1.0 + qp.h[*i].abs()))
        .collect()
}

fn hold_feasible(qp: &QuadraticProblem) -> bool {
    qp.h.iter().all(|h| *h >= -ACTIVE_TOL)
}

/// LP-path solve.
pub fn solve(qp: &QuadraticProblem, cfg: SimplexConfig) -> Result<SolveReport> {
    let ld = to_least_distance(qp)?;
    let n = qp.n_vars();
    let lp = linearize_to_lp(&ld);
    let work_bound = lp.work_bound();
    // Strictly feasible unconstrained optimum: the LP optimum is beta = 0.
    if ld.hb.iter().all(|h| *h >= 0.0) {
        return Ok(SolveReport {
            objective: ld.j0,
            active_constraints: active_set(qp, &ld.alpha0),
            alpha_star: ld.alpha0,
            iterations: 0,
            status: SolveStatus::Optimal,
            hold_feasible: true,
            work_bound,
        });
    }
    let sol = simplex_solve(&lp, cfg);
    let status = match sol.status {
        LpStatus::Optimal => SolveStatus::Optimal,
        LpStatus::IterationLimit => SolveStatus::IterationLimit,
        // the objective is bounded below by zero
        LpStatus::Infeasible | LpStatus::Unbounded => SolveStatus::Infeasible,
    };
    let alpha_star = ld.to_alpha(&split_to_beta(&sol.x, n));
    Ok(SolveReport {
        objective: qp.objective(&alpha_star),
        active_constraints: active_set(qp, &alpha_star),
        alpha_star,
        iterations: sol.iterations,
        status,
        hold_feasible: hold_feasible(qp),
        work_bound,
    })
}

/// Reference QP solve with the same report shape.
pub fn solve_reference(qp: &QuadraticProblem, cfg: QpConfig) -> Result<SolveReport> {
    let res = solve_problem(qp, cfg)?;
    let status = match res.status {
        QpStatus::Optimal => SolveStatus::Optimal,
        QpStatus::Infeasible => SolveStatus::Infeasible,
        QpStatus::IterationLimit => SolveStatus::IterationLimit,
    };
    Ok(SolveReport {
        objective: qp.objective(&res.alpha_star),
        active_constraints: res.active.clone(),
        alpha_star: res.alpha_star,
        iterations: res.iterations,
        status,
        hold_feasible: hold_feasible(qp),
        work_bound: qp.n_vars() + qp.n_constraints(),
    })
}

pub fn solve_with(kind: SolverKind, qp: &QuadraticProblem, simplex: SimplexConfig) -> Result<SolveReport> {
    match kind {
        SolverKind::Lp => solve(qp, simplex),
        SolverKind::Qp => solve_reference(qp, QpConfig::default()),
    }
}
