//! Polynomial current trajectories over the prediction horizon.
//!
//! Each current is a power series in normalized time `s = t / T`,
//!
//! ```text
//! i_x(t) = sum_k alpha_xk * s^k,   k = 0..=n
//! ```
//!
//! with `alpha_x0` pinned to the (delay-compensated) measured current. The
//! voltages follow algebraically from the machine equations, so the cost and
//! all path constraints are functions of the `2n` free coefficients only.
//! Free coefficients are ordered `(alpha_d1..alpha_dn, alpha_q1..alpha_qn)`.

use nalgebra::{DMatrix, DVector};

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::motor::{DqState, DqVoltage, MotorParams};

/// Interlay constant for cubic trajectories sampled at `T / 3`.
pub const DEFAULT_INTERLAY: f64 = 0.064;

/// Horizon length and polynomial degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    /// seconds
    pub length: f64,
    pub degree: usize,
}

impl Horizon {
    pub fn new(length: f64, degree: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive, got {length}"
            )));
        }
        if degree == 0 {
            return Err(Error::InvalidParameter("polynomial degree must be >= 1".into()));
        }
        Ok(Self { length, degree })
    }

    /// Number of free coefficients, `2n`.
    pub fn free_coeffs(&self) -> usize {
        2 * self.degree
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyTrajectory {
    alpha_d: Vec<f64>,
    alpha_q: Vec<f64>,
    horizon: f64,
}

impl PolyTrajectory {
    pub fn new(alpha_d: Vec<f64>, alpha_q: Vec<f64>, horizon: f64) -> Result<Self> {
        if alpha_d.is_empty() || alpha_d.len() != alpha_q.len() {
            return Err(Error::InvalidParameter(
                "coefficient vectors must be non-empty and of equal length".into(),
            ));
        }
        Horizon::new(horizon, alpha_d.len().max(2) - 1)?;
        Ok(Self { alpha_d, alpha_q, horizon })
    }

    /// Trajectory starting at `i0` with the given free coefficients.
    pub fn from_free(i0: DqState, free: &[f64], horizon: f64) -> Result<Self> {
        if free.is_empty() || !free.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "expected an even number of free coefficients, got {}",
                free.len()
            )));
        }
        let n = free.len() / 2;
        let mut alpha_d = vec![i0.i_d];
        alpha_d.extend_from_slice(&free[..n]);
        let mut alpha_q = vec![i0.i_q];
        alpha_q.extend_from_slice(&free[n..]);
        Self::new(alpha_d, alpha_q, horizon)
    }

    /// Currents frozen at `i0` over the whole horizon.
    pub fn constant(i0: DqState, h: Horizon) -> Self {
        let mut alpha_d = vec![0.0; h.degree + 1];
        let mut alpha_q = vec![0.0; h.degree + 1];
        alpha_d[0] = i0.i_d;
        alpha_q[0] = i0.i_q;
        Self { alpha_d, alpha_q, horizon: h.length }
    }

    pub fn degree(&self) -> usize {
        self.alpha_d.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn alpha_d(&self) -> &[f64] {
        &self.alpha_d
    }

    pub fn alpha_q(&self) -> &[f64] {
        &self.alpha_q
    }

    pub fn initial(&self) -> DqState {
        DqState::new(self.alpha_d[0], self.alpha_q[0])
    }

    fn normalized(&self, t: f64) -> Result<f64> {
        // tolerate rounding at the end point
        let slack = 1e-12 * self.horizon;
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(Error::OutsideHorizon { t, horizon: self.horizon });
        }
        Ok((t / self.horizon).clamp(0.0, 1.0))
    }

    pub fn eval_current(&self, t: f64) -> Result<DqState> {
        let s = self.normalized(t)?;
        Ok(DqState::new(horner(&self.alpha_d, s), horner(&self.alpha_q, s)))
    }

    /// Time derivatives of both currents (A/s).
    pub fn eval_derivative(&self, t: f64) -> Result<(f64, f64)> {
        let s = self.normalized(t)?;
        let d = |a: &[f64]| {
            a.iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * s + k as f64 * c)
                / self.horizon
        };
        Ok((d(&self.alpha_d), d(&self.alpha_q)))
    }
}

fn horner(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

/// Voltage that realizes the trajectory at time `t`, from the machine
/// equations solved for `u`.
pub fn flat_voltage(traj: &PolyTrajectory, t: f64, omega: f64, p: &MotorParams) -> Result<DqVoltage> {
    let i = traj.eval_current(t)?;
    let (did, diq) = traj.eval_derivative(t)?;
    let w = p.n_p as f64 * omega;
    Ok(DqVoltage::new(
        p.l_d * did + p.r * i.i_d - w * p.l_q * i.i_q,
        p.l_q * diq + p.r * i.i_q + w * p.l_d * i.i_d + w * p.k,
    ))
}

/// `J(alpha) = alpha' Q alpha + q' alpha + q0` subject to `G alpha <= h`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProblem {
    pub q_mat: DMatrix<f64>,
    pub q_vec: DVector<f64>,
    pub q0: f64,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
}

impl QuadraticProblem {
    pub fn n_vars(&self) -> usize {
        self.q_vec.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.h.len()
    }

    pub fn objective(&self, alpha: &DVector<f64>) -> f64 {
        (alpha.transpose() * &self.q_mat * alpha)[0] + self.q_vec.dot(alpha) + self.q0
    }

    /// Largest `G alpha - h`, or `-inf` without constraints.
    pub fn max_violation(&self, alpha: &DVector<f64>) -> f64 {
        (&self.g * alpha - &self.h).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn with_constraints(mut self, g: DMatrix<f64>, h: DVector<f64>) -> Self {
        self.g = g;
        self.h = h;
        self
    }
}

/// Quadratic form over one axis' full coefficient vector `(a_0..a_n)`.
struct AxisForm {
    p: DMatrix<f64>,
    l: DVector<f64>,
    c: f64,
}

impl AxisForm {
    fn new(n: usize) -> Self {
        Self {
            p: DMatrix::zeros(n + 1, n + 1),
            l: DVector::zeros(n + 1),
            c: 0.0,
        }
    }

    /// Adds `weight * int_0^T (gain * i(t) + offset)^2 dt`, using
    /// `int_0^T s^j s^k dt = T / (j + k + 1)`.
    fn add_integral(&mut self, weight: f64, gain: f64, offset: f64, horizon: f64) {
        let n = self.l.len();
        for j in 0..n {
            for k in 0..n {
                self.p[(j, k)] += weight * gain * gain * horizon / (j + k + 1) as f64;
            }
            self.l[j] += 2.0 * weight * gain * offset * horizon / (j + 1) as f64;
        }
        self.c += weight * offset * offset * horizon;
    }

    /// Adds `weight * (gain * i(T) + offset)^2`; every basis function is 1 at `s = 1`.
    fn add_endpoint(&mut self, weight: f64, gain: f64, offset: f64) {
        self.p.add_scalar_mut(weight * gain * gain);
        self.l.add_scalar_mut(2.0 * weight * gain * offset);
        self.c += weight * offset * offset;
    }
}

/// Exact cost of a trajectory family as a quadratic in the free coefficients:
///
/// ```text
/// J = int_0^T (tau - tau_ref)^2 + w_l * P_loss dt + T * (tau(T) - tau_ref)^2
/// ```
///
/// Returns a problem without constraints.
pub fn assemble_cost(
    i0: DqState,
    tau_ref: f64,
    omega: f64,
    w_l: f64,
    horizon: Horizon,
    p: &MotorParams,
) -> Result<QuadraticProblem> {
    if !(w_l >= 0.0 && w_l.is_finite()) {
        return Err(Error::InvalidParameter(format!("loss weight must be >= 0, got {w_l}")));
    }
    let n = horizon.degree;
    let t = horizon.length;
    let copper = w_l * 1.5 * p.r;
    let iron = w_l * 1.5 * p.n_p as f64 * omega.abs() * p.k_fe;
    let kt = p.torque_constant();

    let mut d = AxisForm::new(n);
    d.add_integral(copper, 1.0, 0.0, t);
    d.add_integral(iron, p.l_d, p.k, t);

    let mut q = AxisForm::new(n);
    q.add_integral(1.0, kt, -tau_ref, t);
    q.add_integral(copper, 1.0, 0.0, t);
    q.add_integral(iron, p.l_q, 0.0, t);
    q.add_endpoint(t, kt, -tau_ref);

    let mut q_mat = DMatrix::zeros(2 * n, 2 * n);
    let mut q_vec = DVector::zeros(2 * n);
    let mut q0 = 0.0;
    for (axis, form, a0) in [(0, &d, i0.i_d), (1, &q, i0.i_q)] {
        let off = axis * n;
        for j in 0..n {
            for k in 0..n {
                q_mat[(off + j, off + k)] = form.p[(j + 1, k + 1)];
            }
            q_vec[off + j] = 2.0 * form.p[(j + 1, 0)] * a0 + form.l[j + 1];
        }
        q0 += form.p[(0, 0)] * a0 * a0 + form.l[0] * a0 + form.c;
    }
    Ok(QuadraticProblem {
        q_mat,
        q_vec,
        q0,
        g: DMatrix::zeros(0, 2 * n),
        h: DVector::zeros(0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Quantity {
    Id,
    Iq,
    Ud,
    Uq,
}

/// A sampled quantity as `row . (a_d0..a_dn, a_q0..a_qn) + constant`.
fn quantity_row(
    kind: Quantity,
    s: f64,
    omega: f64,
    horizon: Horizon,
    p: &MotorParams,
) -> (Vec<f64>, f64) {
    let n = horizon.degree;
    let mut row = vec![0.0; 2 * (n + 1)];
    let w = p.n_p as f64 * omega;
    let value = |k: usize| s.powi(k as i32);
    let slope = |k: usize| {
        if k == 0 {
            0.0
        } else {
            k as f64 * s.powi(k as i32 - 1) / horizon.length
        }
    };
    let mut constant = 0.0;
    for k in 0..=n {
        let (dk, qk) = (k, n + 1 + k);
        match kind {
            Quantity::Id => row[dk] = value(k),
            Quantity::Iq => row[qk] = value(k),
            Quantity::Ud => {
                row[dk] = p.l_d * slope(k) + p.r * value(k);
                row[qk] = -w * p.l_q * value(k);
            }
            Quantity::Uq => {
                row[qk] = p.l_q * slope(k) + p.r * value(k);
                row[dk] = w * p.l_d * value(k);
            }
        }
    }
    if kind == Quantity::Uq {
        constant = w * p.k;
    }
    (row, constant)
}

/// Sampled path constraints `G alpha <= h` in the free coefficients.
///
/// Current limits are sampled at `t = kT/n, k = 1..=n` (the initial value is
/// fixed); voltage limits at `k = 0..=n`. A sample at `k >= 1` of a limit
/// `c(t) <= b` is tightened by the interlay,
///
/// ```text
/// c(kT/n) <= b + delta * (c(0) - b)
/// ```
///
/// Row order: `i_d <= 0`, `i_d >= id_min`, `i_q <= iq_max`, `i_q >= -iq_max`,
/// then `u_d <= hi`, `u_d >= lo`, `u_q <= hi`, `u_q >= lo`, samples innermost.
pub fn sample_constraints(
    cs: &ConstraintSet,
    i0: DqState,
    omega: f64,
    horizon: Horizon,
    p: &MotorParams,
    delta: f64,
) -> (DMatrix<f64>, DVector<f64>) {
    sample_constraints_selected(cs, i0, omega, horizon, p, delta, true)
}

/// Like [`sample_constraints`], optionally without the voltage rows.
pub fn sample_constraints_selected(
    cs: &ConstraintSet,
    i0: DqState,
    omega: f64,
    horizon: Horizon,
    p: &MotorParams,
    delta: f64,
    include_voltage: bool,
) -> (DMatrix<f64>, DVector<f64>) {
    let n = horizon.degree;
    let v = &cs.voltage;
    // (quantity, sign, bound) meaning sign * quantity <= bound
    let mut limits = vec![
        (Quantity::Id, 1.0, cs.id_max),
        (Quantity::Id, -1.0, -cs.id_min),
        (Quantity::Iq, 1.0, cs.iq_max),
        (Quantity::Iq, -1.0, cs.iq_max),
    ];
    if include_voltage {
        limits.extend([
            (Quantity::Ud, 1.0, v.ud_hi),
            (Quantity::Ud, -1.0, -v.ud_lo),
            (Quantity::Uq, 1.0, v.uq_hi),
            (Quantity::Uq, -1.0, -v.uq_lo),
        ]);
    }

    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for (kind, sign, bound) in limits {
        let first = match kind {
            Quantity::Id | Quantity::Iq => 1,
            Quantity::Ud | Quantity::Uq => 0,
        };
        let (row0, c0) = quantity_row(kind, 0.0, omega, horizon, p);
        for k in first..=n {
            let s = k as f64 / n as f64;
            let (row, c) = quantity_row(kind, s, omega, horizon, p);
            let entry = if k == 0 {
                (row.iter().map(|r| sign * r).collect(), bound - sign * c)
            } else {
                let coeffs = row.iter().zip(&row0).map(|(r, r0)| sign * (r - delta * r0)).collect();
                (coeffs, (1.0 - delta) * bound - sign * (c - delta * c0))
            };
            rows.push(entry);
        }
    }

    let m = rows.len();
    let mut g = DMatrix::zeros(m, 2 * n);
    let mut h = DVector::zeros(m);
    for (r, (row, bound)) in rows.into_iter().enumerate() {
        h[r] = bound - row[0] * i0.i_d - row[n + 1] * i0.i_q;
        for j in 0..n {
            g[(r, j)] = row[1 + j];
            g[(r, n + j)] = row[n + 2 + j];
        }
    }
    (g, h)
}

/// Worst violation of the original (unsampled) current and voltage limits,
/// checked on `points` equally spaced instants in `[0, T]`.
pub fn dense_violation(
    traj: &PolyTrajectory,
    cs: &ConstraintSet,
    omega: f64,
    p: &MotorParams,
    points: usize,
    include_voltage: bool,
) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    let v = &cs.voltage;
    for j in 0..points {
        let t = traj.horizon() * j as f64 / (points - 1).max(1) as f64;
        let i = traj.eval_current(t)?;
        let mut candidates = vec![
            i.i_d - cs.id_max,
            cs.id_min - i.i_d,
            i.i_q - cs.iq_max,
            -cs.iq_max - i.i_q,
        ];
        if include_voltage {
            let u = flat_voltage(traj, t, omega, p)?;
            candidates.extend([u.u_d - v.ud_hi, v.ud_lo - u.u_d, u.u_q - v.uq_hi, v.uq_lo - u.u_q]);
        }
        worst = candidates.into_iter().fold(worst, f64::max);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::build_constraint_set;
    use crate::motor::{integrate_electrical, power_loss, rpm, torque};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p() -> MotorParams {
        MotorParams::nameplate()
    }

    fn h3() -> Horizon {
        Horizon::new(2e-3, 3).unwrap()
    }

    /// Composite Simpson quadrature of the cost functional, evaluated from
    /// the trajectory and the loss/torque maps directly.
    fn quadrature_cost(traj: &PolyTrajectory, tau_ref: f64, omega: f64, w_l: f64, p: &MotorParams) -> f64 {
        let t_end = traj.horizon();
        let intervals = 10_000;
        let step = t_end / intervals as f64;
        let f = |t: f64| {
            let i = traj.eval_current(t).unwrap();
            let e = torque(i.i_q, p) - tau_ref;
            e * e + w_l * power_loss(i, omega, p)
        };
        let mut sum = f(0.0) + f(t_end);
        for j in 1..intervals {
            sum += if j % 2 == 1 { 4.0 } else { 2.0 } * f(j as f64 * step);
        }
        let end = torque(traj.eval_current(t_end).unwrap().i_q, p) - tau_ref;
        sum * step / 3.0 + t_end * end * end
    }

    #[test]
    fn zero_trajectory() {
        let tr = PolyTrajectory::constant(DqState::default(), h3());
        assert_eq!(tr.eval_current(1e-3).unwrap(), DqState::default());
        assert_eq!(tr.eval_derivative(1e-3).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn single_monomial() {
        let tr = PolyTrajectory::new(vec![0.0; 4], vec![0.0, 1.0, 0.0, 0.0], 2e-3).unwrap();
        assert_relative_eq!(tr.eval_current(2e-3).unwrap().i_q, 1.0);
        assert_relative_eq!(tr.eval_derivative(2e-3).unwrap().1, 1.0 / 2e-3);
    }

    #[test]
    fn rejects_times_outside_horizon() {
        let tr = PolyTrajectory::constant(DqState::default(), h3());
        assert!(tr.eval_current(-1e-6).is_err());
        assert!(tr.eval_current(2.1e-3).is_err());
        assert!(tr.eval_derivative(3e-3).is_err());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let free: Vec<f64> = (0..6).map(|_| rng.random_range(-5.0..5.0)).collect();
            let tr = PolyTrajectory::from_free(DqState::new(-1.0, 2.0), &free, 2e-3).unwrap();
            let t = rng.random_range(0.1e-3..1.9e-3);
            let h = 1e-6 * tr.horizon();
            let a = tr.eval_current(t + h).unwrap();
            let b = tr.eval_current(t - h).unwrap();
            let (dd, dq) = tr.eval_derivative(t).unwrap();
            let fd = ((a.i_d - b.i_d) / (2.0 * h), (a.i_q - b.i_q) / (2.0 * h));
            assert_relative_eq!(dd, fd.0, max_relative = 1e-6, epsilon = 1e-3);
            assert_relative_eq!(dq, fd.1, max_relative = 1e-6, epsilon = 1e-3);
        }
    }

    #[test]
    fn flat_voltage_resistive_and_back_emf() {
        let p = p();
        let tr = PolyTrajectory::constant(DqState::new(-1.5, 3.0), h3());
        let u = flat_voltage(&tr, 1e-3, 0.0, &p).unwrap();
        assert_relative_eq!(u.u_d, -1.5 * p.r);
        assert_relative_eq!(u.u_q, 3.0 * p.r);

        let w = rpm(1000.0);
        let zero = PolyTrajectory::constant(DqState::default(), h3());
        let u = flat_voltage(&zero, 0.5e-3, w, &p).unwrap();
        assert_eq!(u.u_d, 0.0);
        assert_relative_eq!(u.u_q, 3.0 * w * p.k);
    }

    #[test]
    fn flat_voltage_steady_state_matches_plant_equilibrium() {
        let p = p();
        let s = DqState::new(-2.0, 5.0);
        let w = rpm(1800.0);
        let tr = PolyTrajectory::constant(s, h3());
        let u = flat_voltage(&tr, 0.0, w, &p).unwrap();
        let (a, b) = crate::motor::electrical_derivatives(s, u, w, &p);
        assert!(a.abs() < 1e-9 && b.abs() < 1e-9);
    }

    #[test]
    fn flatness_round_trip_through_plant() {
        let p = p();
        let w = rpm(2000.0);
        let tr = PolyTrajectory::from_free(DqState::new(-1.0, 1.0), &[-0.5, 0.8, -0.3, 4.0, -2.0, 0.7], 2e-3).unwrap();
        let end = integrate_electrical(tr.initial(), w, 0.0, 2e-3, |t| flat_voltage(&tr, t, w, &p).unwrap(), &p).unwrap();
        let want = tr.eval_current(2e-3).unwrap();
        assert!((end.i_d - want.i_d).abs() < 1e-6);
        assert!((end.i_q - want.i_q).abs() < 1e-6);
    }

    #[test]
    fn zero_problem_has_zero_minimum() {
        let qp = assemble_cost(DqState::default(), 0.0, 0.0, 0.0, h3(), &p()).unwrap();
        assert_eq!(qp.q0, 0.0);
        assert!(qp.q_vec.iter().all(|v| *v == 0.0));
        assert_eq!(qp.objective(&DVector::zeros(6)), 0.0);
    }

    #[test]
    fn constant_term_matches_quadrature() {
        let p = p();
        let i0 = DqState::new(-0.8, 2.5);
        let qp = assemble_cost(i0, 7.0, rpm(1500.0), 0.05, h3(), &p).unwrap();
        let frozen = PolyTrajectory::constant(i0, h3());
        let quad = quadrature_cost(&frozen, 7.0, rpm(1500.0), 0.05, &p);
        assert_relative_eq!(qp.q0, quad, max_relative = 1e-8);
    }

    #[test]
    fn hessian_matches_finite_differences_of_quadrature() {
        let p = p();
        let i0 = DqState::new(-1.2, 3.0);
        let (tau, w, wl) = (9.0, rpm(2100.0), 0.05);
        let qp = assemble_cost(i0, tau, w, wl, h3(), &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let j_at = |a: &[f64]| quadrature_cost(&PolyTrajectory::from_free(i0, a, 2e-3).unwrap(), tau, w, wl, &p);
        let step = 0.05;
        for r in 0..6 {
            for c in 0..6 {
                let shift = |dr: f64, dc: f64| {
                    let mut a = base.clone();
                    a[r] += dr;
                    a[c] += dc;
                    j_at(&a)
                };
                // second mixed difference of a quadratic is exact up to rounding
                let fd = (shift(step, step) - shift(step, -step) - shift(-step, step) + shift(-step, -step))
                    / (4.0 * step * step);
                let want = if r == c { 2.0 * qp.q_mat[(r, c)] } else { qp.q_mat[(r, c)] + qp.q_mat[(c, r)] };
                assert_relative_eq!(fd, want, max_relative = 1e-5, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn q_is_symmetric() {
        let qp = assemble_cost(DqState::new(-1.0, 1.0), 5.0, rpm(2000.0), 0.05, h3(), &p()).unwrap();
        assert_eq!(qp.q_mat, qp.q_mat.transpose());
    }

    #[test]
    fn full_constraint_count() {
        let p = p();
        let cs = build_constraint_set(&p, rpm(2200.0), 250.0).unwrap();
        let (g, h) = sample_constraints(&cs, DqState::new(-1.0, 2.0), rpm(1000.0), h3(), &p, DEFAULT_INTERLAY);
        assert_eq!(g.nrows(), 28);
        assert_eq!(g.ncols(), 6);
        assert_eq!(h.len(), 28);
    }

    #[test]
    fn origin_is_interior_for_zero_trajectory() {
        let p = p();
        let mut cs = build_constraint_set(&p, rpm(2200.0), 250.0).unwrap();
        // push the i_d upper limit off zero so the zero trajectory is strictly inside
        cs.id_max = 0.5;
        let (_, h) = sample_constraints(&cs, DqState::default(), 0.0, h3(), &p, DEFAULT_INTERLAY);
        assert!(h.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn violating_sample_produces_violated_row() {
        let p = p();
        let cs = build_constraint_set(&p, rpm(2200.0), 250.0).unwrap();
        // i_d(T/3) > 0 from a zero start
        let free = [3.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let (g, h) = sample_constraints(&cs, DqState::default(), 0.0, h3(), &p, DEFAULT_INTERLAY);
        let r = &g * DVector::from_row_slice(&free) - &h;
        assert!(r[0] > 0.0, "first row is i_d(T/3) <= 0");
        let tr = PolyTrajectory::from_free(DqState::default(), &free, 2e-3).unwrap();
        assert_relative_eq!(r[0], tr.eval_current(2e-3 / 3.0).unwrap().i_d, max_relative = 1e-12);
    }

    #[test]
    fn rows_match_direct_substitution() {
        let p = p();
        let cs = build_constraint_set(&p, rpm(2200.0), 250.0).unwrap();
        let i0 = DqState::new(-1.0, 3.0);
        let w = rpm(2000.0);
        let free = [0.3, -0.2, 0.1, 2.0, -1.0, 0.4];
        let tr = PolyTrajectory::from_free(i0, &free, 2e-3).unwrap();
        let (g, h) = sample_constraints(&cs, i0, w, h3(), &p, DEFAULT_INTERLAY);
        let lhs = &g * DVector::from_row_slice(&free) - &h;
        // row 12 is u_d(0) <= ud_hi
        let u0 = flat_voltage(&tr, 0.0, w, &p).unwrap();
        assert_relative_eq!(lhs[12], u0.u_d - cs.voltage.ud_hi, max_relative = 1e-10);
        // row 13 is u_d(T/3) - delta u_d(0) <= (1 - delta) ud_hi
        let u1 = flat_voltage(&tr, 2e-3 / 3.0, w, &p).unwrap();
        let want = u1.u_d - DEFAULT_INTERLAY * u0.u_d - (1.0 - DEFAULT_INTERLAY) * cs.voltage.ud_hi;
        assert_relative_eq!(lhs[13], want, max_relative = 1e-10);
    }
}
