//! Linear dq model of a surface-mounted PMSM.
//!
//! Currents and voltages are peak values in the rotor-fixed frame. The
//! reluctance torque is not modelled, so torque depends on `i_q` only and the
//! electrical subsystem is linear once the speed is frozen.

use std::f64::consts::PI;

use nalgebra::{Matrix2, SMatrix, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest sub-step used by the plant integrator.
pub const MAX_SUBSTEP: f64 = 10e-6;

/// Converts revolutions per minute to mechanical rad/s.
pub fn rpm(value: f64) -> f64 {
    value * 2.0 * PI / 60.0
}

/// Converts mechanical rad/s to revolutions per minute.
pub fn to_rpm(omega: f64) -> f64 {
    omega * 60.0 / (2.0 * PI)
}

/// Electrical and mechanical constants of the machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorParams {
    /// d-axis inductance (H)
    pub l_d: f64,
    /// q-axis inductance (H)
    pub l_q: f64,
    /// stator resistance (Ohm)
    pub r: f64,
    /// motor constant, peak convention (Vs)
    pub k: f64,
    /// pole pairs
    pub n_p: u32,
    /// hysteresis iron-loss constant (A/(Vs))
    pub k_fe: f64,
    /// rated mechanical speed (rad/s)
    pub omega_rated: f64,
    /// peak current limit (A)
    pub i_max: f64,
    /// peak voltage limit (V)
    pub u_max: f64,
    /// rated torque (Nm)
    pub tau_rated: f64,
}

impl MotorParams {
    /// Nameplate data of the 10.5 Nm reference machine.
    pub fn nameplate() -> Self {
        Self {
            l_d: 4.8e-3,
            l_q: 7.2e-3,
            r: 0.92,
            k: 0.334,
            n_p: 3,
            k_fe: 1.27,
            omega_rated: rpm(3000.0),
            i_max: 8.0,
            u_max: 330.0,
            tau_rated: 10.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("l_d", self.l_d),
            ("l_q", self.l_q),
            ("r", self.r),
            ("k", self.k),
            ("k_fe", self.k_fe),
            ("omega_rated", self.omega_rated),
            ("i_max", self.i_max),
            ("u_max", self.u_max),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly positive, got {value}"
                )));
            }
        }
        if self.n_p < 1 {
            return Err(Error::InvalidParameter("n_p must be at least 1".into()));
        }
        if !self.tau_rated.is_finite() {
            return Err(Error::InvalidParameter("tau_rated must be finite".into()));
        }
        Ok(())
    }

    /// Torque per ampere of quadrature current, `1.5 n_p K`.
    pub fn torque_constant(&self) -> f64 {
        1.5 * self.n_p as f64 * self.k
    }

    /// Sets a parameter by its field name. Used for command-line and
    /// scenario overrides.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "l_d" => self.l_d = value,
            "l_q" => self.l_q = value,
            "r" => self.r = value,
            "k" => self.k = value,
            "n_p" => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "n_p must be a positive integer, got {value}"
                    )));
                }
                self.n_p = value as u32
            }
            "k_fe" => self.k_fe = value,
            "omega_rated" => self.omega_rated = value,
            "i_max" => self.i_max = value,
            "u_max" => self.u_max = value,
            "tau_rated" => self.tau_rated = value,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown motor parameter `{other}`"
                )))
            }
        }
        Ok(())
    }
}

impl Default for MotorParams {
    fn default() -> Self {
        Self::nameplate()
    }
}

/// Stator currents in the dq frame (A, peak).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DqState {
    pub i_d: f64,
    pub i_q: f64,
}

impl DqState {
    pub fn new(i_d: f64, i_q: f64) -> Self {
        Self { i_d, i_q }
    }

    pub fn norm(&self) -> f64 {
        self.i_d.hypot(self.i_q)
    }

    pub fn is_finite(&self) -> bool {
        self.i_d.is_finite() && self.i_q.is_finite()
    }

    fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.i_d, self.i_q)
    }

    fn from_vector(v: Vector2<f64>) -> Self {
        Self::new(v[0], v[1])
    }
}

/// Stator voltages in the dq frame (V, peak).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DqVoltage {
    pub u_d: f64,
    pub u_q: f64,
}

impl DqVoltage {
    pub fn new(u_d: f64, u_q: f64) -> Self {
        Self { u_d, u_q }
    }

    pub fn norm(&self) -> f64 {
        self.u_d.hypot(self.u_q)
    }

    pub fn is_finite(&self) -> bool {
        self.u_d.is_finite() && self.u_q.is_finite()
    }
}

impl std::ops::Add for DqVoltage {
    type Output = DqVoltage;
    fn add(self, rhs: DqVoltage) -> DqVoltage {
        DqVoltage::new(self.u_d + rhs.u_d, self.u_q + rhs.u_q)
    }
}

impl std::ops::Sub for DqVoltage {
    type Output = DqVoltage;
    fn sub(self, rhs: DqVoltage) -> DqVoltage {
        DqVoltage::new(self.u_d - rhs.u_d, self.u_q - rhs.u_q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechMode {
    /// `inertia * d(omega)/dt = tau_M - tau_load`
    FreeInertia,
    /// A load machine imposes the speed.
    SpeedHeld,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechState {
    /// mechanical speed (rad/s)
    pub omega: f64,
    /// kg m^2
    pub inertia: f64,
    /// Nm
    pub tau_load: f64,
    pub mode: MechMode,
}

impl MechState {
    pub fn held(omega: f64) -> Self {
        Self {
            omega,
            inertia: 1.0,
            tau_load: 0.0,
            mode: MechMode::SpeedHeld,
        }
    }

    pub fn free(omega: f64, inertia: f64, tau_load: f64) -> Self {
        Self {
            omega,
            inertia,
            tau_load,
            mode: MechMode::FreeInertia,
        }
    }
}

/// Time derivatives of the dq currents (A/s).
pub fn electrical_derivatives(s: DqState, u: DqVoltage, omega: f64, p: &MotorParams) -> (f64, f64) {
    let w = p.n_p as f64 * omega;
    let did = (-p.r * s.i_d + w * p.l_q * s.i_q + u.u_d) / p.l_d;
    let diq = (-p.r * s.i_q - w * p.l_d * s.i_d - w * p.k + u.u_q) / p.l_q;
    (did, diq)
}

/// Electromagnetic torque (Nm).
pub fn torque(i_q: f64, p: &MotorParams) -> f64 {
    p.torque_constant() * i_q
}

/// Copper plus hysteresis iron losses (W).
///
/// The iron term uses `|omega|`, so losses stay non-negative in both
/// directions of rotation.
pub fn power_loss(s: DqState, omega: f64, p: &MotorParams) -> f64 {
    let copper = 1.5 * p.r * (s.i_d * s.i_d + s.i_q * s.i_q);
    let psi_d = p.l_d * s.i_d + p.k;
    let psi_q = p.l_q * s.i_q;
    let iron = 1.5 * p.n_p as f64 * omega.abs() * p.k_fe * (psi_d * psi_d + psi_q * psi_q);
    copper + iron
}

pub fn control_error_power(tau: f64, tau_ref: f64) -> f64 {
    (tau - tau_ref) * (tau - tau_ref)
}

/// Voltage that holds the currents constant at speed `omega`.
pub fn steady_state_voltage(s: DqState, omega: f64, p: &MotorParams) -> DqVoltage {
    let w = p.n_p as f64 * omega;
    DqVoltage::new(
        p.r * s.i_d - w * p.l_q * s.i_q,
        p.r * s.i_q + w * p.l_d * s.i_d + w * p.k,
    )
}

fn substeps(dt: f64) -> usize {
    ((dt / MAX_SUBSTEP).ceil() as usize).max(1)
}

/// Advances the plant by `dt` with the voltage held constant.
///
/// Classical RK4 on sub-steps no longer than [`MAX_SUBSTEP`]. In free-inertia
/// mode the speed is integrated alongside the currents.
pub fn step_plant(
    s: DqState,
    m: MechState,
    u: DqVoltage,
    dt: f64,
    p: &MotorParams,
) -> Result<(DqState, MechState)> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if m.mode == MechMode::FreeInertia && m.inertia <= 0.0 {
        return Err(Error::InvalidParameter("inertia must be positive".into()));
    }
    let n = substeps(dt);
    let h = dt / n as f64;
    let free = m.mode == MechMode::FreeInertia;
    let f = |x: [f64; 3]| -> [f64; 3] {
        let (did, diq) = electrical_derivatives(DqState::new(x[0], x[1]), u, x[2], p);
        let dw = if free {
            (torque(x[1], p) - m.tau_load) / m.inertia
        } else {
            0.0
        };
        [did, diq, dw]
    };
    let mut x = [s.i_d, s.i_q, m.omega];
    for _ in 0..n {
        x = rk4(&f, x, h);
    }
    let mut m_next = m;
    m_next.omega = x[2];
    Ok((DqState::new(x[0], x[1]), m_next))
}

fn rk4<const N: usize>(f: &impl Fn([f64; N]) -> [f64; N], x: [f64; N], h: f64) -> [f64; N] {
    let axpy = |a: &[f64; N], b: &[f64; N], c: f64| -> [f64; N] {
        let mut out = *a;
        for i in 0..N {
            out[i] += c * b[i];
        }
        out
    };
    let k1 = f(x);
    let k2 = f(axpy(&x, &k1, h / 2.0));
    let k3 = f(axpy(&x, &k2, h / 2.0));
    let k4 = f(axpy(&x, &k3, h));
    let mut out = x;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates the electrical subsystem over `[t0, t1]` at constant speed
/// with a time-varying voltage `u(t)`.
pub fn integrate_electrical(
    s: DqState,
    omega: f64,
    t0: f64,
    t1: f64,
    u: impl Fn(f64) -> DqVoltage,
    p: &MotorParams,
) -> Result<DqState> {
    if !(t1 > t0) {
        return Err(Error::InvalidParameter(format!("empty interval [{t0}, {t1}]")));
    }
    let n = substeps(t1 - t0);
    let h = (t1 - t0) / n as f64;
    // time rides along as a third state so the generic stepper can be reused
    let f = |x: [f64; 3]| -> [f64; 3] {
        let (did, diq) = electrical_derivatives(DqState::new(x[0], x[1]), u(x[2]), omega, p);
        [did, diq, 1.0]
    };
    let mut x = [s.i_d, s.i_q, t0];
    for _ in 0..n {
        x = rk4(&f, x, h);
    }
    Ok(DqState::new(x[0], x[1]))
}

/// Exact zero-order-hold discretization of the electrical subsystem at a
/// frozen speed:
///
/// ```text
/// i[k+1] = phi * i[k] + gamma * u[k] + offset
/// ```
///
/// where `offset` carries the back-EMF.
#[derive(Debug, Clone, Copy)]
pub struct ZohModel {
    pub phi: Matrix2<f64>,
    pub gamma: Matrix2<f64>,
    pub offset: Vector2<f64>,
}

impl ZohModel {
    pub fn new(omega: f64, ts: f64, p: &MotorParams) -> Result<Self> {
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(Error::InvalidParameter(format!("Ts must be positive, got {ts}")));
        }
        let w = p.n_p as f64 * omega;
        // augmented generator over [i_d, i_q, u_d, u_q, 1]
        let mut m = SMatrix::<f64, 5, 5>::zeros();
        m[(0, 0)] = -p.r / p.l_d;
        m[(0, 1)] = w * p.l_q / p.l_d;
        m[(1, 0)] = -w * p.l_d / p.l_q;
        m[(1, 1)] = -p.r / p.l_q;
        m[(0, 2)] = 1.0 / p.l_d;
        m[(1, 3)] = 1.0 / p.l_q;
        m[(1, 4)] = -w * p.k / p.l_q;
        let e = (m * ts).exp();
        Ok(Self {
            phi: e.fixed_view::<2, 2>(0, 0).into_owned(),
            gamma: e.fixed_view::<2, 2>(0, 2).into_owned(),
            offset: e.fixed_view::<2, 1>(0, 4).into_owned(),
        })
    }

    pub fn predict(&self, s: DqState, u: DqVoltage) -> DqState {
        let next = self.phi * s.to_vector() + self.gamma * Vector2::new(u.u_d, u.u_q) + self.offset;
        DqState::from_vector(next)
    }

    /// Voltage that, applied for one period, would explain a current
    /// deviation `delta` from a prediction.
    pub fn voltage_equivalent(&self, delta_d: f64, delta_q: f64) -> Result<DqVoltage> {
        let inv = self
            .gamma
            .try_inverse()
            .ok_or(Error::Singular("ZOH input matrix"))?;
        let v = inv * Vector2::new(delta_d, delta_q);
        Ok(DqVoltage::new(v[0], v[1]))
    }
}

/// One sampling period of the exact discrete model.
pub fn discrete_one_step(
    s: DqState,
    u: DqVoltage,
    omega: f64,
    ts: f64,
    p: &MotorParams,
) -> Result<DqState> {
    Ok(ZohModel::new(omega, ts, p)?.predict(s, u))
}
