//! Torque step above the voltage-limited speed, with and without the voltage
//! constraints.

use pmsm_mpc::harness::analysis::EXCURSION_THRESHOLD;
use pmsm_mpc::harness::{builtin, id_excursion, run_with_solver};
use pmsm_mpc::{ControllerConfig, MotorParams, SolverKind};

fn main() -> pmsm_mpc::Result<()> {
    let p = MotorParams::nameplate();
    let sc = builtin("fig8d")?;
    for voltage_constraints in [true, false] {
        let cfg = ControllerConfig { voltage_constraints, ..ControllerConfig::default() };
        let res = run_with_solver(&sc, &cfg, &p, SolverKind::Lp)?;
        let e = id_excursion(&res.trace, sc.last_step_time(), EXCURSION_THRESHOLD);
        println!(
            "voltage limits {voltage_constraints}: steady i_d {:.3} A, dip {:.3} A for {:.2} ms",
            e.steady_id,
            e.depth,
            e.duration * 1e3
        );
    }
    Ok(())
}
