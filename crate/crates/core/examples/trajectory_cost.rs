//! Polynomial current trajectories, their flat voltages and the quadratic
//! cost in the free coefficients.

use nalgebra::DVector;
use pmsm_mpc::motor::rpm;
use pmsm_mpc::trajectory::{assemble_cost, flat_voltage};
use pmsm_mpc::{DqState, Horizon, MotorParams, PolyTrajectory};

fn main() -> pmsm_mpc::Result<()> {
    let p = MotorParams::nameplate();
    let h = Horizon::new(2e-3, 3)?;
    let omega = rpm(1000.0);
    let i0 = DqState::new(0.0, 1.0);
    // free coefficients: three for i_d, three for i_q
    let free = [-0.5, 0.2, 0.0, 3.0, -1.0, 0.5];
    let traj = PolyTrajectory::from_free(i0, &free, h.length)?;
    for k in 0..=4 {
        let t = h.length * k as f64 / 4.0;
        let i = traj.eval_current(t)?;
        let u = flat_voltage(&traj, t, omega, &p)?;
        println!("t = {:.2} ms: i = ({:.3}, {:.3}) A, u = ({:.2}, {:.2}) V", t * 1e3, i.i_d, i.i_q, u.u_d, u.u_q);
    }
    let qp = assemble_cost(i0, 5.0, omega, 0.05, h, &p)?;
    println!("J = {:.6}", qp.objective(&DVector::from_row_slice(&free)));
    Ok(())
}
