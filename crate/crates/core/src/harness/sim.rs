//! Closed-loop simulation with a one-period computational delay.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::scenario::{Mode, Scenario};
use super::trace::{SimTrace, TraceRow};
use crate::controller::{ControllerConfig, MpcController};
use crate::error::{Error, Result};
use crate::motor::{power_loss, rpm, steady_state_voltage, step_plant, torque, DqState, DqVoltage, MechState, MotorParams};
use crate::optimizer::SolverKind;

/// Allowed excursion outside the current box, as a fraction of `i_max`.
pub const CURRENT_BOX_TOLERANCE: f64 = 0.01;
/// Plant currents above this multiple of `i_max` abort the run.
pub const DIVERGENCE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    VoltageOutsideRectangle { time: f64, u: DqVoltage },
    CurrentOutsideBox { time: f64, i: DqState, excess: f64 },
    IterationLimit { time: f64, iterations: usize, bound: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::VoltageOutsideRectangle { time, u } => {
                write!(f, "t = {time:.6} s: voltage ({:.3}, {:.3}) V outside the rectangle", u.u_d, u.u_q)
            }
            Self::CurrentOutsideBox { time, i, excess } => write!(
                f,
                "t = {time:.6} s: current ({:.4}, {:.4}) A beyond the box by {excess:.4} A",
                i.i_d, i.i_q
            ),
            Self::IterationLimit { time, iterations, bound } => {
                write!(f, "t = {time:.6} s: {iterations} simplex iterations exceed 4 x {bound}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolverStats {
    pub solves: usize,
    pub max_iterations: usize,
    pub total_iterations: usize,
    /// parameters plus sampled constraints
    pub work_bound: usize,
    /// solves with more iterations than `work_bound`
    pub over_bound: usize,
    pub fallbacks: usize,
    /// wall-clock time spent in the controller, never asserted on
    pub compute_time: Duration,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub trace: SimTrace,
    pub violations: Vec<Violation>,
    pub stats: SolverStats,
}

impl SimResult {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Runs `sc` once per selected solver.
pub fn run_scenario(sc: &Scenario, cfg: &ControllerConfig, p: &MotorParams) -> Result<Vec<SimResult>> {
    sc.solver.kinds().into_iter().map(|kind| run_with_solver(sc, cfg, p, kind)).collect()
}

/// Runs `sc` with one solver. `p` is the controller's model; scenario plant
/// overrides apply to the simulated machine only.
pub fn run_with_solver(sc: &Scenario, cfg: &ControllerConfig, p: &MotorParams, kind: SolverKind) -> Result<SimResult> {
    sc.validate()?;
    let mut cfg = sc.controller_config(cfg)?;
    cfg.solver = kind;
    let plant = sc.plant_params(p)?;
    let mut ctrl = MpcController::new(cfg, *p)?;
    let rect = ctrl.constraints().voltage;
    let cs = *ctrl.constraints();

    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let noise = if sc.current_noise > 0.0 {
        Some(Normal::new(0.0, sc.current_noise).map_err(|e| Error::Scenario(e.to_string()))?)
    } else {
        None
    };

    let ts = cfg.ts;
    let steps = (sc.duration / ts).round() as usize;
    let mut s = DqState::new(sc.initial_i_d, sc.initial_i_q);
    let mut mech = match sc.mode {
        Mode::TorqueControl => MechState::held(rpm(sc.speed_rpm)),
        Mode::SpeedControl => MechState::free(rpm(sc.speed_rpm), sc.inertia, sc.load_torque),
    };
    let mut applied = DqVoltage::default();
    if s != DqState::default() {
        applied = steady_state_voltage(s, mech.omega, &plant);
        if cfg.voltage_constraints {
            applied = rect.clamp(applied);
        }
        ctrl.set_applied_voltage(applied);
    }
    let mut rows = Vec::with_capacity(steps);
    let mut violations = Vec::new();
    let mut stats = SolverStats::default();
    let box_tol = CURRENT_BOX_TOLERANCE * p.i_max;

    for k in 0..steps {
        let t = k as f64 * ts;
        let magnitude = s.norm();
        if !s.is_finite() || magnitude > DIVERGENCE_FACTOR * plant.i_max {
            return Err(Error::Diverged { time: t, magnitude });
        }
        let mut i_meas = s;
        if let Some(n) = &noise {
            i_meas.i_d += n.sample(&mut rng);
            i_meas.i_q += n.sample(&mut rng);
        }

        let started = Instant::now();
        let tau_ref = match sc.mode {
            Mode::TorqueControl => sc.reference(t).clamp(-cfg.torque_limit, cfg.torque_limit),
            Mode::SpeedControl => ctrl.speed_pi(rpm(sc.reference(t)), mech.omega),
        };
        let (u_next, diag) = ctrl.mpc_step(i_meas, mech.omega, tau_ref)?;
        stats.compute_time += started.elapsed();

        let rep = &diag.report;
        stats.solves += 1;
        stats.total_iterations += rep.iterations;
        stats.max_iterations = stats.max_iterations.max(rep.iterations);
        stats.work_bound = stats.work_bound.max(rep.work_bound);
        if rep.iterations > rep.work_bound {
            stats.over_bound += 1;
        }
        if rep.iterations > 4 * rep.work_bound {
            violations.push(Violation::IterationLimit { time: t, iterations: rep.iterations, bound: rep.work_bound });
        }
        stats.fallbacks += diag.fallback as usize;

        if cfg.voltage_constraints && !rect.contains(applied, 1e-9) {
            violations.push(Violation::VoltageOutsideRectangle { time: t, u: applied });
        }
        let excess = (s.i_d - cs.id_max)
            .max(cs.id_min - s.i_d)
            .max(s.i_q.abs() - cs.iq_max);
        if excess > box_tol {
            violations.push(Violation::CurrentOutsideBox { time: t, i: s, excess });
        }

        let reference = diag.reference.as_ref();
        rows.push(TraceRow {
            time: t,
            omega: mech.omega,
            i_d: s.i_d,
            i_q: s.i_q,
            u_d: applied.u_d,
            u_q: applied.u_q,
            tau: torque(s.i_q, &plant),
            tau_ref,
            d_hat_d: diag.d_hat.u_d,
            d_hat_q: diag.d_hat.u_q,
            loss: power_loss(s, mech.omega, &plant),
            iterations: rep.iterations,
            active: rep.active_constraints.len(),
            cost: rep.objective,
            cost_ref: reference.map(|r| r.objective),
            active_ref: reference.map(|r| r.active_constraints.len()),
            alpha_gap: reference.map(|r| (&r.alpha_star - &rep.alpha_star).amax()),
            fallback: diag.fallback,
            clamped: diag.clamped,
        });

        (s, mech) = step_plant(s, mech, applied, ts, &plant)?;
        applied = u_next;
    }

    Ok(SimResult {
        trace: SimTrace { scenario: sc.name.clone(), solver: kind, ts, rows },
        violations,
        stats,
    })
}
