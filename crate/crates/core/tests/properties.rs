//! Model and controller invariants over random inputs.

use pmsm_mpc::constraints::build_constraint_set;
use pmsm_mpc::motor::{integrate_electrical, power_loss, rpm, step_plant, MechState, ZohModel};
use pmsm_mpc::trajectory::flat_voltage;
use pmsm_mpc::{ControllerConfig, DqState, DqVoltage, MotorParams, MpcController, PolyTrajectory};
use proptest::prelude::*;

fn p() -> MotorParams {
    MotorParams::nameplate()
}

fn current() -> impl Strategy<Value = DqState> {
    (-8.0..8.0f64, -8.0..8.0f64).prop_map(|(d, q)| DqState::new(d, q))
}

fn voltage() -> impl Strategy<Value = DqVoltage> {
    (-250.0..250.0f64, -250.0..250.0f64).prop_map(|(d, q)| DqVoltage::new(d, q))
}

fn speed() -> impl Strategy<Value = f64> {
    -rpm(3000.0)..rpm(3000.0)
}

proptest! {
    #[test]
    fn zoh_step_is_affine(s1 in current(), s2 in current(), u1 in voltage(), u2 in voltage(), w in speed(), a in -2.0..2.0f64) {
        let zoh = ZohModel::new(w, 125e-6, &p()).unwrap();
        let zero = zoh.predict(DqState::default(), DqVoltage::default());
        let lin = |s: DqState, u: DqVoltage| {
            let x = zoh.predict(s, u);
            (x.i_d - zero.i_d, x.i_q - zero.i_q)
        };
        let (x1, x2) = (lin(s1, u1), lin(s2, u2));
        let mix = lin(
            DqState::new(a * s1.i_d + s2.i_d, a * s1.i_q + s2.i_q),
            DqVoltage::new(a * u1.u_d + u2.u_d, a * u1.u_q + u2.u_q),
        );
        prop_assert!((mix.0 - (a * x1.0 + x2.0)).abs() < 1e-9);
        prop_assert!((mix.1 - (a * x1.1 + x2.1)).abs() < 1e-9);
    }

    #[test]
    fn zoh_agrees_with_rk4(s in current(), u in voltage(), w in speed()) {
        let zoh = ZohModel::new(w, 125e-6, &p()).unwrap().predict(s, u);
        let (rk4, _) = step_plant(s, MechState::held(w), u, 125e-6, &p()).unwrap();
        prop_assert!((zoh.i_d - rk4.i_d).abs() < 1e-9 && (zoh.i_q - rk4.i_q).abs() < 1e-9);
    }

    #[test]
    fn loss_is_convex_in_current(a in current(), b in current(), w in speed(), t in 0.0..1.0f64) {
        let mid = DqState::new(t * a.i_d + (1.0 - t) * b.i_d, t * a.i_q + (1.0 - t) * b.i_q);
        let lhs = power_loss(mid, w, &p());
        let rhs = t * power_loss(a, w, &p()) + (1.0 - t) * power_loss(b, w, &p());
        prop_assert!(lhs <= rhs + 1e-9);
        prop_assert!(power_loss(a, w, &p()) >= 0.0);
    }

    #[test]
    fn flat_voltage_reproduces_the_trajectory(
        i0 in (-4.0..0.0f64, -8.0..8.0f64),
        free in prop::collection::vec(-2.0..2.0f64, 6),
        w in speed(),
    ) {
        let i0 = DqState::new(i0.0, i0.1);
        let traj = PolyTrajectory::from_free(i0, &free, 2e-3).unwrap();
        let end = integrate_electrical(i0, w, 0.0, 2e-3, |t| flat_voltage(&traj, t.min(2e-3), w, &p()).unwrap(), &p()).unwrap();
        let want = traj.eval_current(2e-3).unwrap();
        prop_assert!((end.i_d - want.i_d).abs() < 1e-6 && (end.i_q - want.i_q).abs() < 1e-6);
    }

    #[test]
    fn clamp_lands_in_rectangle(u in (-1e3..1e3f64, -1e3..1e3f64)) {
        let rect = build_constraint_set(&p(), rpm(2200.0), 250.0).unwrap().voltage;
        prop_assert!(rect.contains(rect.clamp(DqVoltage::new(u.0, u.1)), 0.0));
    }

    #[test]
    fn controller_output_stays_in_rectangle(i in current(), w in 0.0..rpm(2400.0), tau in -10.5..10.5f64) {
        let mut ctrl = MpcController::new(ControllerConfig::default(), p()).unwrap();
        let rect = ctrl.constraints().voltage;
        let (u, _) = ctrl.mpc_step(i, w, tau).unwrap();
        prop_assert!(rect.contains(u, 1e-9));
    }
}
