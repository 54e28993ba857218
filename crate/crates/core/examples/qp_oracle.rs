//! Dual active-set QP with KKT residuals of its answer.

use nalgebra::{DMatrix, DVector};
use pmsm_mpc::qp::{kkt_residuals, qp_solve, QpConfig};

fn main() -> pmsm_mpc::Result<()> {
    // (x - 2)^2 + (y - 1)^2  s.t.  x + y <= 2, x >= 0
    let q = DMatrix::identity(2, 2);
    let c = DVector::from_vec(vec![-4.0, -2.0]);
    let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 0.0]);
    let h = DVector::from_vec(vec![2.0, 0.0]);
    let res = qp_solve(&q, &c, &g, &h, QpConfig::default())?;
    println!("{:?}: x = {:?}, active {:?}", res.status, res.alpha_star.as_slice(), res.active);
    let kkt = kkt_residuals(&q, &c, &g, &h, &res.alpha_star, &res.multipliers);
    println!("{kkt:?}");
    Ok(())
}
