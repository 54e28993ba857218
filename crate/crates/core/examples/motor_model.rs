//! Open-loop machine model: derivatives, torque, losses and the exact
//! zero-order-hold step against the RK4 plant.

use pmsm_mpc::motor::{
    electrical_derivatives, power_loss, rpm, step_plant, torque, MechState, ZohModel,
};
use pmsm_mpc::{DqState, DqVoltage, MotorParams};

fn main() -> pmsm_mpc::Result<()> {
    let p = MotorParams::nameplate();
    let omega = rpm(2000.0);
    let s = DqState::new(-1.0, 5.0);
    let u = DqVoltage::new(-60.0, 200.0);

    let (did, diq) = electrical_derivatives(s, u, omega, &p);
    println!("d/dt i = ({did:.1}, {diq:.1}) A/s");
    println!("torque at i_q = {:.1} A: {:.3} Nm", s.i_q, torque(s.i_q, &p));
    println!("copper + iron loss: {:.2} W", power_loss(s, omega, &p));

    let ts = 125e-6;
    let zoh = ZohModel::new(omega, ts, &p)?;
    let (rk4, _) = step_plant(s, MechState::held(omega), u, ts, &p)?;
    let exact = zoh.predict(s, u);
    println!("one period: RK4 ({:.6}, {:.6}), ZOH ({:.6}, {:.6})", rk4.i_d, rk4.i_q, exact.i_d, exact.i_q);
    Ok(())
}
