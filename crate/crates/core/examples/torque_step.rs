//! Rated torque step at standstill in closed loop.

use pmsm_mpc::harness::{builtin, run_with_solver, settling_time};
use pmsm_mpc::{ControllerConfig, MotorParams, SolverKind};

fn main() -> pmsm_mpc::Result<()> {
    let p = MotorParams::nameplate();
    let sc = builtin("fig8b")?;
    let res = run_with_solver(&sc, &ControllerConfig::default(), &p, SolverKind::Lp)?;
    for r in res.trace.after(sc.last_step_time()).iter().take(12) {
        println!("{:>6.3} ms  tau {:>7.3} Nm  i_d {:>7.4} A  u_q {:>7.2} V", r.time * 1e3, r.tau, r.i_d, r.u_q);
    }
    let last = res.trace.rows.last().unwrap();
    println!("final torque {:.3} Nm for a {:.1} Nm reference", last.tau, last.tau_ref);
    println!("within 3 % of rated after {:?} s", settling_time(&res.trace, sc.last_step_time(), 0.03 * p.tau_rated));
    Ok(())
}
