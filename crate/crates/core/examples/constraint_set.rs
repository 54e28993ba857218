//! Current box and voltage rectangle for a given speed and voltage limit.

use pmsm_mpc::constraints::{id_min_doubled, loss_optimal_id};
use pmsm_mpc::motor::rpm;
use pmsm_mpc::{build_constraint_set, MotorParams};

fn main() -> pmsm_mpc::Result<()> {
    let p = MotorParams::nameplate();
    let cs = build_constraint_set(&p, rpm(2200.0), 250.0)?;
    println!("i_d in [{:.4}, {:.1}] A, |i_q| <= {:.1} A", cs.id_min, cs.id_max, cs.iq_max);
    let v = cs.voltage;
    println!("u_d in [{:.2}, {:.2}] V, u_q in [{:.2}, {:.2}] V", v.ud_lo, v.ud_hi, v.uq_lo, v.uq_hi);
    println!("largest voltage corner {:.2} V", v.max_corner_norm());
    println!("id_min (doubled) {:.4} A", id_min_doubled(&p)?);
    for speed in [500.0, 1000.0, 2000.0, 3000.0] {
        println!("loss-optimal i_d at {speed:>4} rpm: {:.4} A", loss_optimal_id(&p, rpm(speed)));
    }
    Ok(())
}
