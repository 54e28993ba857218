//! Closed-loop steady state against the analytic loss-optimal d-current.

use pmsm_mpc::harness::efficiency_report;
use pmsm_mpc::motor::rpm;
use pmsm_mpc::{ControllerConfig, MotorParams};

fn main() -> pmsm_mpc::Result<()> {
    let p = MotorParams::nameplate();
    println!("rpm   i_d loop   i_d opt   loss W   saved");
    for speed in [500.0, 1000.0, 1500.0, 2000.0] {
        let r = efficiency_report(rpm(speed), p.tau_rated, &p, &ControllerConfig::default())?;
        println!(
            "{speed:>4}  {:>8.4}  {:>8.4}  {:>7.2}  {:>5.2} %",
            r.id_closed_loop,
            r.id_analytic,
            r.loss_optimized,
            100.0 * r.improvement
        );
    }
    Ok(())
}
