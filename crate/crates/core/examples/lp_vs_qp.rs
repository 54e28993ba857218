//! LP trajectory against the reference QP on the same scenario.

use pmsm_mpc::harness::{builtin, compare_lp_qp};
use pmsm_mpc::{ControllerConfig, MotorParams};

fn main() -> pmsm_mpc::Result<()> {
    let rep = compare_lp_qp(&builtin("fig9b")?, &ControllerConfig::default(), &MotorParams::nameplate())?;
    let worst = rep.per_cycle_excess.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("largest per-cycle excess J_LP - J_QP: {worst:.3e}");
    println!("median relative excess: {:.3e}", rep.median_relative_excess);
    println!("LP dip {:.3} A over {:.2} ms", rep.lp_excursion.depth, rep.lp_excursion.duration * 1e3);
    println!("QP dip {:.3} A over {:.2} ms", rep.qp_excursion.depth, rep.qp_excursion.duration * 1e3);
    Ok(())
}
