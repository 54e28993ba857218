//! Speed steps through the outer PI loop on a free rotor.

use pmsm_mpc::harness::{builtin, run_with_solver};
use pmsm_mpc::motor::to_rpm;
use pmsm_mpc::{ControllerConfig, MotorParams, SolverKind};

fn main() -> pmsm_mpc::Result<()> {
    let sc = builtin("fig8a")?;
    let res = run_with_solver(&sc, &ControllerConfig::default(), &MotorParams::nameplate(), SolverKind::Lp)?;
    for r in res.trace.rows.iter().step_by(200) {
        println!("{:>5.0} ms  {:>7.1} rpm  tau* {:>6.2} Nm", r.time * 1e3, to_rpm(r.omega), r.tau_ref);
    }
    Ok(())
}
