//! The dense simplex on a small textbook LP.

use nalgebra::DMatrix;
use pmsm_mpc::lp::{dual_prices, simplex_solve, LinearProgramStd, SimplexConfig};

fn main() {
    // maximize 3x + 5y  s.t.  x <= 4, 2y <= 12, 3x + 2y <= 18
    let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 3.0, 2.0]);
    let lp = LinearProgramStd::from_inequalities(&[-3.0, -5.0], &a, &[4.0, 12.0, 18.0]);
    let sol = simplex_solve(&lp, SimplexConfig::default());
    println!("{:?} after {} pivots", sol.status, sol.iterations);
    println!("x = {:.3}, y = {:.3}, objective {:.3}", sol.x[0], sol.x[1], -sol.objective);
    if let Some(y) = dual_prices(&lp, &sol) {
        println!("dual prices {:?}", y.as_slice());
    }
}
