//! Dense two-phase simplex for small standard-form linear programs
//!
//! ```text
//! minimize c' x   subject to   A x = b,  x >= 0
//! ```
//!
//! Problems here have a few dozen rows and columns, so the tableau is a
//! plain row-major `Vec<f64>`.

use std::fmt;

use nalgebra::{DMatrix, DVector};

/// Standard-form LP. The first `structural` columns are decision variables,
/// the rest are slacks.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgramStd {
    pub cost: Vec<f64>,
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub structural: usize,
}

impl LinearProgramStd {
    /// `minimize c' x  s.t.  A x <= b, x >= 0`, closed with one slack per row.
    pub fn from_inequalities(cost: &[f64], a: &DMatrix<f64>, b: &[f64]) -> Self {
        let (m, n) = a.shape();
        assert_eq!(cost.len(), n, "cost length");
        assert_eq!(b.len(), m, "rhs length");
        let mut full = DMatrix::zeros(m, n + m);
        full.view_mut((0, 0), (m, n)).copy_from(a);
        for i in 0..m {
            full[(i, n + i)] = 1.0;
        }
        let mut c = cost.to_vec();
        c.resize(n + m, 0.0);
        Self { cost: c, a: full, b: b.to_vec(), structural: n }
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    /// Work bound quoted for simplex on this problem: parameters plus
    /// constraints.
    pub fn work_bound(&self) -> usize {
        self.structural + self.rows()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexConfig {
    /// Smallest magnitude accepted as a pivot.
    pub pivot_tol: f64,
    /// Phase-1 residual above which the problem is declared infeasible.
    pub feasibility_tol: f64,
    /// Reduced costs above `-optimality_tol` count as non-negative.
    pub optimality_tol: f64,
    /// Total pivot budget. `None` means `4 * (structural + rows)`.
    pub iteration_limit: Option<usize>,
    /// Degenerate pivots tolerated before switching to Bland's rule.
    /// `None` means `2 * rows`.
    pub bland_after: Option<usize>,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-9,
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            iteration_limit: None,
            bland_after: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of all columns of the problem (structural and slack).
    pub x: Vec<f64>,
    pub objective: f64,
    /// Pivots over both phases.
    pub iterations: usize,
    /// Basic column per row; `None` marks an artificial left on a redundant row.
    pub basis: Vec<Option<usize>>,
}

/// Working tableau. Columns are the problem columns followed by artificials,
/// then the right-hand side.
#[derive(Debug, Clone)]
pub struct SimplexTableau {
    rows: usize,
    cols: usize,
    artificial_start: usize,
    data: Vec<f64>,
    /// reduced costs, last entry is minus the objective value
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl SimplexTableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let p = self.at(pr, pc);
        for c in 0..w {
            self.data[pr * w + c] /= p;
        }
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                for c in 0..w {
                    self.data[r * w + c] -= f * pivot_row[c];
                }
                self.data[r * w + pc] = 0.0;
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for c in 0..w {
                self.obj[c] -= f * pivot_row[c];
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Sets the objective row to the reduced costs of `cost` (length `cols`)
    /// for the current basis.
    fn price(&mut self, cost: &[f64]) {
        let w = self.width();
        self.obj = cost.to_vec();
        self.obj.push(0.0);
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for c in 0..w {
                    self.obj[c] -= cb * self.data[r * w + c];
                }
            }
        }
    }

    pub fn basis(&self) -> &[usize] {
        &self.basis
    }
}

impl fmt::Display for SimplexTableau {
    /// One line per row: `basic | coefficients | rhs`, objective row last.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            write!(f, "x{:<3}|", self.basis[r])?;
            for c in 0..self.cols {
                write!(f, " {:>11.4e}", self.at(r, c))?;
            }
            writeln!(f, " | {:>11.4e}", self.rhs(r))?;
        }
        write!(f, "obj |")?;
        for c in 0..self.cols {
            write!(f, " {:>11.4e}", self.obj[c])?;
        }
        writeln!(f, " | {:>11.4e}", self.obj[self.cols])
    }
}

enum Phase {
    Done,
    Unbounded,
    Limit,
}

/// Two-phase primal simplex solver. Owns its tableau; one solve per instance.
pub struct SimplexSolver {
    cfg: SimplexConfig,
    tableau: Option<SimplexTableau>,
    iterations: usize,
    degenerate: usize,
}

impl SimplexSolver {
    pub fn new(cfg: SimplexConfig) -> Self {
        Self { cfg, tableau: None, iterations: 0, degenerate: 0 }
    }

    /// Final tableau of the last solve, for debugging.
    pub fn tableau(&self) -> Option<&SimplexTableau> {
        self.tableau.as_ref()
    }

    pub fn solve(&mut self, lp: &LinearProgramStd) -> LpSolution {
        let m = lp.rows();
        let n = lp.cols();
        assert_eq!(lp.cost.len(), n, "cost length");
        assert_eq!(lp.b.len(), m, "rhs length");
        let limit = self.cfg.iteration_limit.unwrap_or(4 * lp.work_bound());
        self.iterations = 0;
        self.degenerate = 0;

        // Rows with a negative right-hand side are negated so that b >= 0.
        let signs: Vec<f64> = lp.b.iter().map(|b| if *b < 0.0 { -1.0 } else { 1.0 }).collect();

        // Reuse unit columns as the starting basis where possible.
        let mut basis = vec![usize::MAX; m];
        for c in 0..n {
            let mut hit = None;
            let mut unit = true;
            for r in 0..m {
                let v = signs[r] * lp.a[(r, c)];
                if v == 0.0 {
                    continue;
                }
                if v == 1.0 && hit.is_none() {
                    hit = Some(r);
                } else {
                    unit = false;
                    break;
                }
            }
            if let (true, Some(r)) = (unit, hit) {
                if basis[r] == usize::MAX {
                    basis[r] = c;
                }
            }
        }
        let missing: Vec<usize> = (0..m).filter(|r| basis[*r] == usize::MAX).collect();
        let cols = n + missing.len();
        let w = cols + 1;
        let mut data = vec![0.0; m * w];
        for r in 0..m {
            for c in 0..n {
                data[r * w + c] = signs[r] * lp.a[(r, c)];
            }
            data[r * w + cols] = signs[r] * lp.b[r];
        }
        for (k, r) in missing.iter().enumerate() {
            data[r * w + n + k] = 1.0;
            basis[*r] = n + k;
        }
        let mut t = SimplexTableau {
            rows: m,
            cols,
            artificial_start: n,
            data,
            obj: vec![0.0; w],
            basis,
        };

        // Phase 1: minimize the sum of artificials.
        if !missing.is_empty() {
            let mut phase1 = vec![0.0; cols];
            for c in phase1.iter_mut().skip(n) {
                *c = 1.0;
            }
            t.price(&phase1);
            match self.run(&mut t, limit, cols) {
                Phase::Limit => return self.finish(t, lp, LpStatus::IterationLimit),
                // bounded below by zero
                Phase::Unbounded | Phase::Done => {}
            }
            if -t.obj[cols] > self.cfg.feasibility_tol {
                return self.finish(t, lp, LpStatus::Infeasible);
            }
            // Drive artificials out of the basis where a real column can replace them.
            for r in 0..m {
                if t.basis[r] >= n {
                    if let Some(c) = (0..n).find(|c| t.at(r, *c).abs() > self.cfg.pivot_tol) {
                        t.pivot(r, c);
                    }
                }
            }
        }

        // Phase 2 on the original cost; artificials may not re-enter.
        let mut cost = lp.cost.clone();
        cost.resize(cols, 0.0);
        t.price(&cost);
        let status = match self.run(&mut t, limit, n) {
            Phase::Done => LpStatus::Optimal,
            Phase::Unbounded => LpStatus::Unbounded,
            Phase::Limit => LpStatus::IterationLimit,
        };
        self.finish(t, lp, status)
    }

    /// Pivots until optimal over columns `< enterable`.
    fn run(&mut self, t: &mut SimplexTableau, limit: usize, enterable: usize) -> Phase {
        let bland_after = self.cfg.bland_after.unwrap_or(2 * t.rows);
        loop {
            let bland = self.degenerate >= bland_after;
            let entering = if bland {
                (0..enterable).find(|c| t.obj[*c] < -self.cfg.optimality_tol)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for c in 0..enterable {
                    let d = t.obj[c];
                    if d < -self.cfg.optimality_tol && best.is_none_or(|(_, b)| d < b) {
                        best = Some((c, d));
                    }
                }
                best.map(|(c, _)| c)
            };
            let Some(pc) = entering else {
                return Phase::Done;
            };
            if self.iterations >= limit {
                return Phase::Limit;
            }

            // ratio test, ties broken by the smallest basic column index
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..t.rows {
                let a = t.at(r, pc);
                if a > self.cfg.pivot_tol {
                    let ratio = t.rhs(r).max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12 * lratio.abs().max(1.0)
                                || (ratio <= lratio + 1e-12 * lratio.abs().max(1.0)
                                    && t.basis[r] < t.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, ratio)) = leave else {
                return Phase::Unbounded;
            };
            if ratio <= 1e-12 {
                self.degenerate += 1;
            }
            t.pivot(pr, pc);
            self.iterations += 1;
        }
    }

    fn finish(&mut self, t: SimplexTableau, lp: &LinearProgramStd, status: LpStatus) -> LpSolution {
        let n = lp.cols();
        let mut x = vec![0.0; n];
        let mut basis = Vec::with_capacity(t.rows);
        for r in 0..t.rows {
            let c = t.basis[r];
            if c < t.artificial_start {
                x[c] = t.rhs(r).max(0.0);
                basis.push(Some(c));
            } else {
                basis.push(None);
            }
        }
        let objective = lp.objective(&x);
        self.tableau = Some(t);
        LpSolution { status, x, objective, iterations: self.iterations, basis }
    }
}

/// Solves `lp` with a fresh solver.
pub fn simplex_solve(lp: &LinearProgramStd, cfg: SimplexConfig) -> LpSolution {
    SimplexSolver::new(cfg).solve(lp)
}

/// Dual prices `y` with `B' y = c_B` for the final basis. Rows whose basic
/// variable is a leftover artificial get a zero price.
pub fn dual_prices(lp: &LinearProgramStd, sol: &LpSolution) -> Option<DVector<f64>> {
    let m = lp.rows();
    let mut bt = DMatrix::zeros(m, m);
    let mut cb = DVector::zeros(m);
    for (r, col) in sol.basis.iter().enumerate() {
        match col {
            Some(c) => {
                for i in 0..m {
                    bt[(r, i)] = lp.a[(i, *c)];
                }
                cb[r] = lp.cost[*c];
            }
            None => bt[(r, r)] = 1.0,
        }
    }
    bt.lu().solve(&cb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ineq(cost: &[f64], rows: &[&[f64]], b: &[f64]) -> LinearProgramStd {
        let n = cost.len();
        let a = DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c]);
        LinearProgramStd::from_inequalities(cost, &a, b)
    }

    #[test]
    fn lower_bound_constraint() {
        // min x1 + x2  s.t.  x1 >= 1
        let lp = ineq(&[1.0, 1.0], &[&[-1.0, 0.0]], &[-1.0]);
        let sol = simplex_solve(&lp, SimplexConfig::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_relative_eq!(sol.x[0], 1.0);
        assert_eq!(sol.x[1], 0.0);
        assert_relative_eq!(sol.objective, 1.0);
    }

    #[test]
    fn upper_bound_maximization() {
        let lp = ineq(&[-1.0], &[&[1.0]], &[5.0]);
        let sol = simplex_solve(&lp, SimplexConfig::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_relative_eq!(sol.x[0], 5.0);
    }

    #[test]
    fn detects_infeasible() {
        // x <= 1 and x >= 2
        let lp = ineq(&[1.0], &[&[1.0], &[-1.0]], &[1.0, -2.0]);
        assert_eq!(simplex_solve(&lp, SimplexConfig::default()).status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let lp = ineq(&[-1.0, 0.0], &[&[0.0, 1.0]], &[1.0]);
        assert_eq!(simplex_solve(&lp, SimplexConfig::default()).status, LpStatus::Unbounded);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let lp = ineq(&[-1.0, -1.0], &[&[1.0, 2.0], &[3.0, 1.0]], &[4.0, 6.0]);
        let cfg = SimplexConfig { iteration_limit: Some(1), ..Default::default() };
        let sol = simplex_solve(&lp, cfg);
        assert_eq!(sol.status, LpStatus::IterationLimit);
        assert!(sol.iterations <= 1);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Beale's cycling example
        let lp = ineq(
            &[-0.75, 150.0, -0.02, 6.0],
            &[&[0.25, -60.0, -0.04, 9.0], &[0.5, -90.0, -0.02, 3.0], &[0.0, 0.0, 1.0, 0.0]],
            &[0.0, 0.0, 1.0],
        );
        let cfg = SimplexConfig { bland_after: Some(0), ..Default::default() };
        let sol = simplex_solve(&lp, cfg);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_relative_eq!(sol.objective, -0.05, max_relative = 1e-9);
    }

    #[test]
    fn tableau_dump_has_one_line_per_row() {
        let lp = ineq(&[1.0, 1.0], &[&[-1.0, 0.0], &[1.0, 1.0]], &[-1.0, 4.0]);
        let mut solver = SimplexSolver::new(SimplexConfig::default());
        solver.solve(&lp);
        let text = solver.tableau().unwrap().to_string();
        assert_eq!(text.lines().count(), lp.rows() + 1);
    }

    #[test]
    fn duals_satisfy_complementary_slackness() {
        let lp = ineq(&[2.0, 3.0, 1.0], &[&[-1.0, -1.0, 0.0], &[0.0, -1.0, -1.0], &[1.0, 0.0, 1.0]], &[-2.0, -1.0, 5.0]);
        let sol = simplex_solve(&lp, SimplexConfig::default());
        assert_eq!(sol.status, LpStatus::Optimal);
        let y = dual_prices(&lp, &sol).unwrap();
        for j in 0..lp.cols() {
            let d = lp.cost[j] - lp.a.column(j).dot(&y);
            assert!(d >= -1e-8);
            assert!((d * sol.x[j]).abs() <= 1e-8);
        }
    }
}
