//! One MPC problem through the least-distance transform and the simplex,
//! side by side with the reference QP.

use pmsm_mpc::lp::SimplexConfig;
use pmsm_mpc::motor::rpm;
use pmsm_mpc::optimizer::{solve, solve_reference, to_least_distance};
use pmsm_mpc::qp::QpConfig;
use pmsm_mpc::trajectory::{assemble_cost, sample_constraints, DEFAULT_INTERLAY};
use pmsm_mpc::{build_constraint_set, DqState, Horizon, MotorParams};

fn main() -> pmsm_mpc::Result<()> {
    let p = MotorParams::nameplate();
    let cs = build_constraint_set(&p, rpm(2200.0), 250.0)?;
    let h = Horizon::new(2e-3, 3)?;
    let omega = rpm(2400.0);
    let i0 = DqState::new(-1.63, 0.0);
    let (g, hv) = sample_constraints(&cs, i0, omega, h, &p, DEFAULT_INTERLAY);
    let qp = assemble_cost(i0, 10.5, omega, 0.05, h, &p)?.with_constraints(g, hv);
    println!("{} coefficients, {} sampled constraints", qp.n_vars(), qp.n_constraints());

    let ld = to_least_distance(&qp)?;
    println!("unconstrained optimum violates {} rows", ld.hb.iter().filter(|v| **v < 0.0).count());

    let lp = solve(&qp, SimplexConfig::default())?;
    let reference = solve_reference(&qp, QpConfig::default())?;
    println!("LP: J = {:.6}, {} iterations, active {:?}", lp.objective, lp.iterations, lp.active_constraints);
    println!("QP: J = {:.6}, {} iterations, active {:?}", reference.objective, reference.iterations, reference.active_constraints);
    Ok(())
}
