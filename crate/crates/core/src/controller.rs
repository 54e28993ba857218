//! Predictive torque controller with delay compensation, a voltage-equivalent
//! disturbance observer and an outer PI speed loop.
//!
//! Timing: at each interrupt the controller receives the current measured at
//! that instant while the previously computed voltage is being applied. It
//! predicts the current one period ahead, plans from there and returns the
//! voltage to apply at the next interrupt.

use serde::{Deserialize, Serialize};

use crate::constraints::{build_constraint_set_with, ConstraintSet, ExpansionRule};
use crate::error::{Error, Result};
use crate::lp::SimplexConfig;
use crate::motor::{rpm, steady_state_voltage, DqState, DqVoltage, MotorParams, ZohModel};
use crate::optimizer::{solve_reference, solve_with, SolveReport, SolveStatus, SolverKind};
use crate::qp::QpConfig;
use crate::trajectory::{
    assemble_cost, flat_voltage, sample_constraints_selected, Horizon, PolyTrajectory,
    QuadraticProblem, DEFAULT_INTERLAY,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// sampling period (s)
    pub ts: f64,
    /// optimization horizon (s)
    pub horizon: f64,
    pub loss_weight: f64,
    /// polynomial degree of the current trajectories
    pub degree: usize,
    pub interlay: f64,
    /// speed used to size the voltage rectangle (rad/s)
    pub omega_max: f64,
    /// voltage circle radius (V)
    pub u_max: f64,
    /// per-sample observer filter factor in `[0, 1]`; zero disables it
    pub observer_gain: f64,
    pub kp: f64,
    pub ki: f64,
    /// torque reference limit (Nm)
    pub torque_limit: f64,
    pub solver: SolverKind,
    /// include the voltage rectangle in the optimization and the output clamp
    pub voltage_constraints: bool,
    pub expansion: ExpansionRule,
    pub delay_compensation: bool,
    /// also solve every problem with the reference QP for comparison
    pub shadow_reference: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        let (kp, ki) = pi_gains(0.01, 50.0, 1.0);
        Self {
            ts: 125e-6,
            horizon: 2e-3,
            loss_weight: 0.05,
            degree: 3,
            interlay: DEFAULT_INTERLAY,
            omega_max: rpm(2200.0),
            u_max: 250.0,
            observer_gain: 0.1,
            kp,
            ki,
            torque_limit: 10.5,
            solver: SolverKind::Lp,
            voltage_constraints: true,
            expansion: ExpansionRule::QAxisFill,
            delay_compensation: true,
            shadow_reference: false,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return bad(format!("ts must be positive, got {}", self.ts));
        }
        if !(self.horizon >= 4.0 * self.ts) {
            return bad(format!(
                "horizon {} must span at least four sampling periods of {}",
                self.horizon, self.ts
            ));
        }
        if !(self.loss_weight >= 0.0 && self.loss_weight.is_finite()) {
            return bad(format!("loss_weight must be >= 0, got {}", self.loss_weight));
        }
        if self.degree < 1 {
            return bad("degree must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.interlay) {
            return bad(format!("interlay must lie in [0, 1), got {}", self.interlay));
        }
        if !(0.0..=1.0).contains(&self.observer_gain) {
            return bad(format!("observer_gain must lie in [0, 1], got {}", self.observer_gain));
        }
        if !(self.u_max > 0.0 && self.omega_max >= 0.0) {
            return bad("u_max must be positive and omega_max non-negative".into());
        }
        if !(self.torque_limit > 0.0 && self.kp >= 0.0 && self.ki >= 0.0) {
            return bad("torque_limit must be positive and PI gains non-negative".into());
        }
        Ok(())
    }

    /// Sets a numeric field by name. Booleans take 0 or 1.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let flag = |v: f64| -> Result<bool> {
            match v {
                0.0 => Ok(false),
                1.0 => Ok(true),
                _ => Err(Error::InvalidParameter(format!("`{name}` expects 0 or 1, got {v}"))),
            }
        };
        match name {
            "ts" => self.ts = value,
            "horizon" => self.horizon = value,
            "loss_weight" => self.loss_weight = value,
            "degree" => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::InvalidParameter(format!("degree must be a positive integer, got {value}")));
                }
                self.degree = value as usize
            }
            "interlay" => self.interlay = value,
            "omega_max" => self.omega_max = value,
            "u_max" => self.u_max = value,
            "observer_gain" => self.observer_gain = value,
            "kp" => self.kp = value,
            "ki" => self.ki = value,
            "torque_limit" => self.torque_limit = value,
            "voltage_constraints" => self.voltage_constraints = flag(value)?,
            "delay_compensation" => self.delay_compensation = flag(value)?,
            "shadow_reference" => self.shadow_reference = flag(value)?,
            other => {
                return Err(Error::InvalidParameter(format!("unknown controller parameter `{other}`")))
            }
        }
        Ok(())
    }
}

/// PI gains placing both closed-loop speed poles for a rigid inertia:
/// `kp = 2 zeta wn J`, `ki = wn^2 J`.
pub fn pi_gains(inertia: f64, bandwidth: f64, damping: f64) -> (f64, f64) {
    (2.0 * damping * bandwidth * inertia, bandwidth * bandwidth * inertia)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ControllerState {
    /// voltage currently being applied
    pub u_last: DqVoltage,
    /// disturbance estimate as a voltage
    pub d_hat: DqVoltage,
    /// PI integrator (Nm)
    pub integrator: f64,
    /// disturbance-free prediction of the next measurement
    pub pred_nominal: Option<DqState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// predicted current at the start of the plan
    pub i0: DqState,
    pub d_hat: DqVoltage,
    pub report: SolveReport,
    /// the steady-state fallback was commanded
    pub fallback: bool,
    /// the output clamp changed the planned voltage
    pub clamped: bool,
    /// reference QP result for the same problem when shadowing is enabled
    pub reference: Option<SolveReport>,
}

/// One-step prediction from the measured current with the applied voltage
/// and the disturbance estimate.
pub fn delay_compensate(
    i_meas: DqState,
    u_last: DqVoltage,
    d_hat: DqVoltage,
    omega: f64,
    p: &MotorParams,
    ts: f64,
) -> Result<DqState> {
    Ok(ZohModel::new(omega, ts, p)?.predict(i_meas, u_last + d_hat))
}

/// Filtered update of the disturbance estimate from the residual between the
/// measurement and the disturbance-free prediction.
pub fn observe_disturbance(
    i_meas: DqState,
    i_pred: DqState,
    d_hat: DqVoltage,
    zoh: &ZohModel,
    gain: f64,
) -> Result<DqVoltage> {
    let raw = zoh.voltage_equivalent(i_meas.i_d - i_pred.i_d, i_meas.i_q - i_pred.i_q)?;
    Ok(DqVoltage::new(
        (1.0 - gain) * d_hat.u_d + gain * raw.u_d,
        (1.0 - gain) * d_hat.u_q + gain * raw.u_q,
    ))
}

/// PI speed controller with clamped output and back-calculation anti-windup.
pub fn speed_pi(omega_ref: f64, omega: f64, cfg: &ControllerConfig, state: &mut ControllerState) -> f64 {
    let lim = cfg.torque_limit;
    let e = omega_ref - omega;
    let raw = cfg.kp * e + state.integrator;
    let out = raw.clamp(-lim, lim);
    // tracking gain ki/kp bleeds the integrator while saturated
    let back = if cfg.kp > 0.0 { cfg.ki / cfg.kp } else { 0.0 };
    state.integrator += cfg.ts * (cfg.ki * e + back * (out - raw));
    state.integrator = state.integrator.clamp(-lim, lim);
    out
}

/// Stateful controller for one motor.
#[derive(Debug, Clone)]
pub struct MpcController {
    cfg: ControllerConfig,
    params: MotorParams,
    horizon: Horizon,
    constraints: ConstraintSet,
    simplex: SimplexConfig,
    state: ControllerState,
    zoh: Option<(f64, ZohModel)>,
}

impl MpcController {
    /// `params` is the controller's model of the machine, which may differ
    /// from the simulated plant.
    pub fn new(cfg: ControllerConfig, params: MotorParams) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        let constraints = build_constraint_set_with(&params, cfg.omega_max, cfg.u_max, cfg.expansion)?;
        Ok(Self {
            horizon: Horizon::new(cfg.horizon, cfg.degree)?,
            cfg,
            params,
            constraints,
            simplex: SimplexConfig::default(),
            state: ControllerState::default(),
            zoh: None,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn params(&self) -> &MotorParams {
        &self.params
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    /// Overrides the voltage assumed to be applied right now, e.g. when the
    /// loop starts from a non-zero operating point.
    pub fn set_applied_voltage(&mut self, u: DqVoltage) {
        self.state.u_last = u;
        self.state.pred_nominal = None;
    }

    pub fn speed_pi(&mut self, omega_ref: f64, omega: f64) -> f64 {
        speed_pi(omega_ref, omega, &self.cfg, &mut self.state)
    }

    fn zoh(&mut self, omega: f64) -> Result<ZohModel> {
        match self.zoh {
            Some((w, z)) if w == omega => Ok(z),
            _ => {
                let z = ZohModel::new(omega, self.cfg.ts, &self.params)?;
                self.zoh = Some((omega, z));
                Ok(z)
            }
        }
    }

    /// The problem solved for a planning start `i0` with disturbance `d_hat`.
    pub fn build_problem(&self, i0: DqState, omega: f64, tau_ref: f64, d_hat: DqVoltage) -> Result<QuadraticProblem> {
        let qp = assemble_cost(i0, tau_ref, omega, self.cfg.loss_weight, self.horizon, &self.params)?;
        let cs = self.constraints.with_voltage_offset(d_hat);
        let (g, h) = sample_constraints_selected(
            &cs,
            i0,
            omega,
            self.horizon,
            &self.params,
            self.cfg.interlay,
            self.cfg.voltage_constraints,
        );
        Ok(qp.with_constraints(g, h))
    }

    /// One control period: returns the voltage to apply at the next instant.
    pub fn mpc_step(&mut self, i_meas: DqState, omega: f64, tau_ref: f64) -> Result<(DqVoltage, Diagnostics)> {
        let zoh = self.zoh(omega)?;
        if let Some(pred) = self.state.pred_nominal {
            self.state.d_hat = observe_disturbance(i_meas, pred, self.state.d_hat, &zoh, self.cfg.observer_gain)?;
        }
        let d_hat = self.state.d_hat;
        let u_last = self.state.u_last;
        self.state.pred_nominal = Some(zoh.predict(i_meas, u_last));
        let i0 = if self.cfg.delay_compensation {
            zoh.predict(i_meas, u_last + d_hat)
        } else {
            i_meas
        };

        let qp = self.build_problem(i0, omega, tau_ref, d_hat)?;
        let report = solve_with(self.cfg.solver, &qp, self.simplex)?;
        let reference = if self.cfg.shadow_reference {
            Some(solve_reference(&qp, QpConfig::default())?)
        } else {
            None
        };

        let fallback = report.status != SolveStatus::Optimal;
        let model_voltage = if fallback {
            steady_state_voltage(i0, omega, &self.params)
        } else {
            let traj = PolyTrajectory::from_free(i0, report.alpha_star.as_slice(), self.cfg.horizon)?;
            flat_voltage(&traj, 0.0, omega, &self.params)?
        };
        let planned = model_voltage - d_hat;
        let u = if self.cfg.voltage_constraints {
            self.constraints.voltage.clamp(planned)
        } else {
            planned
        };
        let clamped = u != planned;
        self.state.u_last = u;
        Ok((u, Diagnostics { i0, d_hat, report, fallback, clamped, reference }))
    }
}
