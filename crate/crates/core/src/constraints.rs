//! Affine approximation of the current and voltage limits.
//!
//! Currents are boxed to `id_min <= i_d <= 0` and `|i_q| <= i_max`. The
//! voltage circle is replaced by a rectangle derived from a steady-state
//! analysis at the largest speed, then grown until it touches the circle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motor::{DqState, DqVoltage, MotorParams};

/// Corner tolerance for the "touches the circle" invariant.
const CIRCLE_TOL: f64 = 1e-9;

/// Scalar inequality `coeffs . (i_d, i_q, u_d, u_q) <= bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineConstraint {
    pub coeffs: [f64; 4],
    pub bound: f64,
}

impl AffineConstraint {
    pub fn new(coeffs: [f64; 4], bound: f64) -> Result<Self> {
        if coeffs.iter().all(|c| *c == 0.0) {
            return Err(Error::InvalidParameter(
                "affine constraint needs a nonzero coefficient".into(),
            ));
        }
        Ok(Self { coeffs, bound })
    }

    pub fn value(&self, i: DqState, u: DqVoltage) -> f64 {
        self.coeffs[0] * i.i_d + self.coeffs[1] * i.i_q + self.coeffs[2] * u.u_d + self.coeffs[3] * u.u_q
    }

    pub fn is_satisfied(&self, i: DqState, u: DqVoltage, tol: f64) -> bool {
        self.value(i, u) <= self.bound + tol
    }
}

/// Axis-aligned voltage rectangle (V).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageRect {
    pub ud_lo: f64,
    pub ud_hi: f64,
    pub uq_lo: f64,
    pub uq_hi: f64,
}

impl VoltageRect {
    pub fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.ud_lo, self.uq_lo),
            (self.ud_lo, self.uq_hi),
            (self.ud_hi, self.uq_lo),
            (self.ud_hi, self.uq_hi),
        ]
    }

    pub fn max_corner_norm(&self) -> f64 {
        self.corners()
            .iter()
            .map(|(d, q)| d.hypot(*q))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, u: DqVoltage, tol: f64) -> bool {
        u.u_d >= self.ud_lo - tol
            && u.u_d <= self.ud_hi + tol
            && u.u_q >= self.uq_lo - tol
            && u.u_q <= self.uq_hi + tol
    }

    pub fn clamp(&self, u: DqVoltage) -> DqVoltage {
        DqVoltage::new(
            u.u_d.clamp(self.ud_lo, self.ud_hi),
            u.u_q.clamp(self.uq_lo, self.uq_hi),
        )
    }

    /// Rectangle translated by `offset`.
    pub fn shifted(&self, offset: DqVoltage) -> Self {
        Self {
            ud_lo: self.ud_lo + offset.u_d,
            ud_hi: self.ud_hi + offset.u_d,
            uq_lo: self.uq_lo + offset.u_q,
            uq_hi: self.uq_hi + offset.u_q,
        }
    }

    fn contains_origin(&self) -> bool {
        self.ud_lo <= 0.0 && self.ud_hi >= 0.0 && self.uq_lo <= 0.0 && self.uq_hi >= 0.0
    }
}

/// How the steady-state rectangle is grown onto the voltage circle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpansionRule {
    /// One additive margin on all four sides.
    UniformMargin,
    /// Keep the d-axis bounds and open the q-axis symmetrically up to the
    /// circle.
    #[default]
    QAxisFill,
}

/// Result of growing a rectangle onto the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expansion {
    pub rect: VoltageRect,
    /// Margin added to the bounds. Negative when the rectangle had to shrink.
    pub margin: f64,
    /// The steady-state rectangle did not fit inside the circle.
    pub infeasible: bool,
}

/// Loss-optimal `i_d` at rated speed (A).
pub fn id_min_raw(p: &MotorParams) -> Result<f64> {
    if !(p.k_fe > 0.0) {
        return Err(Error::InvalidParameter(
            "k_fe must be positive: no iron-loss model".into(),
        ));
    }
    if !(p.omega_rated > 0.0) {
        return Err(Error::InvalidParameter("omega_rated must be positive".into()));
    }
    Ok(loss_optimal_id(p, p.omega_rated))
}

/// Lower `i_d` bound used by the controller: twice [`id_min_raw`], leaving
/// headroom for dynamic field-weakening.
pub fn id_min_doubled(p: &MotorParams) -> Result<f64> {
    Ok(2.0 * id_min_raw(p)?)
}

/// `argmin P_loss` over `i_d` at speed `omega`. Zero at standstill.
pub fn loss_optimal_id(p: &MotorParams, omega: f64) -> f64 {
    let w = p.n_p as f64 * omega.abs() * p.k_fe;
    if w == 0.0 {
        return 0.0;
    }
    -p.l_d * p.k / (p.l_d * p.l_d + p.r / w)
}

/// Steady-state voltage rectangle for speeds up to `omega_max`.
pub fn steady_voltage_rectangle(p: &MotorParams, omega_max: f64) -> Result<VoltageRect> {
    if !(omega_max >= 0.0 && omega_max.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "omega_max must be non-negative, got {omega_max}"
        )));
    }
    let id_min = id_min_doubled(p)?;
    let iq_max = p.i_max;
    let w = p.n_p as f64 * omega_max;
    Ok(VoltageRect {
        ud_lo: p.r * id_min - w * p.l_q * iq_max,
        ud_hi: w * p.l_q * iq_max,
        uq_lo: -p.r * iq_max + w * p.l_d * id_min - w * p.k,
        uq_hi: p.r * iq_max + w * p.k,
    })
}

/// Uniform additive margin until the first corner reaches radius `u_max`.
///
/// A rectangle that already pokes out of the circle is shrunk by the same
/// rule (negative margin) and flagged as infeasible.
pub fn expand_rectangle(rect: VoltageRect, u_max: f64) -> Result<Expansion> {
    check_expandable(&rect, u_max)?;
    // For a corner at distances (a, b) from the axes the margin solves
    // (a + m)^2 + (b + m)^2 = u_max^2.
    let margin = rect
        .corners()
        .iter()
        .map(|&(d, q)| {
            let (a, b) = (d.abs(), q.abs());
            let disc = 2.0 * u_max * u_max - (a - b) * (a - b);
            if disc < 0.0 {
                // this corner cannot reach the circle before another does
                f64::INFINITY
            } else {
                (-(a + b) + disc.sqrt()) / 2.0
            }
        })
        .fold(f64::INFINITY, f64::min);
    let rect = VoltageRect {
        ud_lo: rect.ud_lo - margin,
        ud_hi: rect.ud_hi + margin,
        uq_lo: rect.uq_lo - margin,
        uq_hi: rect.uq_hi + margin,
    };
    Ok(Expansion {
        rect,
        margin,
        infeasible: margin < 0.0,
    })
}

/// Opens the q-axis to `+-sqrt(u_max^2 - max|u_d|^2)`.
pub fn fill_q_axis(rect: VoltageRect, u_max: f64) -> Result<Expansion> {
    check_expandable(&rect, u_max)?;
    let d = rect.ud_lo.abs().max(rect.ud_hi.abs());
    if d >= u_max {
        return Err(Error::InvalidParameter(format!(
            "d-axis voltage range {d} V leaves no room within u_max = {u_max} V"
        )));
    }
    let q = (u_max * u_max - d * d).sqrt();
    let margin = (q - rect.uq_hi).min(rect.uq_lo + q);
    let infeasible = rect.uq_hi > q || rect.uq_lo < -q;
    Ok(Expansion {
        rect: VoltageRect {
            ud_lo: rect.ud_lo,
            ud_hi: rect.ud_hi,
            uq_lo: -q,
            uq_hi: q,
        },
        margin,
        infeasible,
    })
}

fn check_expandable(rect: &VoltageRect, u_max: f64) -> Result<()> {
    if !(u_max > 0.0 && u_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("u_max must be positive, got {u_max}")));
    }
    if !rect.contains_origin() {
        return Err(Error::InvalidParameter(
            "voltage rectangle must contain the origin".into(),
        ));
    }
    Ok(())
}

pub fn expand_with(rule: ExpansionRule, rect: VoltageRect, u_max: f64) -> Result<Expansion> {
    match rule {
        ExpansionRule::UniformMargin => expand_rectangle(rect, u_max),
        ExpansionRule::QAxisFill => fill_q_axis(rect, u_max),
    }
}

/// Decoupled current box and voltage rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSet {
    pub id_min: f64,
    pub id_max: f64,
    pub iq_max: f64,
    pub voltage: VoltageRect,
    /// Raised when the steady rectangle had to shrink to fit the circle.
    pub infeasible_rectangle: bool,
}

impl ConstraintSet {
    /// The eight scalar inequalities on `(i_d, i_q, u_d, u_q)`.
    pub fn affine_constraints(&self) -> Vec<AffineConstraint> {
        let v = &self.voltage;
        [
            ([1.0, 0.0, 0.0, 0.0], self.id_max),
            ([-1.0, 0.0, 0.0, 0.0], -self.id_min),
            ([0.0, 1.0, 0.0, 0.0], self.iq_max),
            ([0.0, -1.0, 0.0, 0.0], self.iq_max),
            ([0.0, 0.0, 1.0, 0.0], v.ud_hi),
            ([0.0, 0.0, -1.0, 0.0], -v.ud_lo),
            ([0.0, 0.0, 0.0, 1.0], v.uq_hi),
            ([0.0, 0.0, 0.0, -1.0], -v.uq_lo),
        ]
        .into_iter()
        .map(|(coeffs, bound)| AffineConstraint { coeffs, bound })
        .collect()
    }

    pub fn contains_current(&self, i: DqState, tol: f64) -> bool {
        i.i_d >= self.id_min - tol
            && i.i_d <= self.id_max + tol
            && i.i_q.abs() <= self.iq_max + tol
    }

    /// Same set with the voltage rectangle translated, e.g. by a disturbance
    /// estimate.
    pub fn with_voltage_offset(&self, offset: DqVoltage) -> Self {
        Self {
            voltage: self.voltage.shifted(offset),
            ..*self
        }
    }

    /// Corner of the current box farthest from the origin.
    pub fn current_corner_norm(&self) -> f64 {
        self.iq_max.hypot(self.id_min.abs().max(self.id_max.abs()))
    }
}

/// Constraint set with the default expansion rule.
pub fn build_constraint_set(p: &MotorParams, omega_max: f64, u_max: f64) -> Result<ConstraintSet> {
    build_constraint_set_with(p, omega_max, u_max, ExpansionRule::default())
}

pub fn build_constraint_set_with(
    p: &MotorParams,
    omega_max: f64,
    u_max: f64,
    rule: ExpansionRule,
) -> Result<ConstraintSet> {
    let expansion = expand_with(rule, steady_voltage_rectangle(p, omega_max)?, u_max)?;
    debug_assert!(expansion.rect.max_corner_norm() <= u_max + CIRCLE_TOL);
    Ok(ConstraintSet {
        id_min: id_min_doubled(p)?,
        id_max: 0.0,
        iq_max: p.i_max,
        voltage: expansion.rect,
        infeasible_rectangle: expansion.infeasible,
    })
}
