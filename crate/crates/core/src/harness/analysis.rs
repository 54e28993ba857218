//! Metrics over simulation traces: LP/QP comparison, field-weakening
//! excursions, settling, closed-loop cost, efficiency and ablations.

use super::scenario::{Mode, Scenario, SolverSelection, Step};
use super::sim::{run_with_solver, SimResult};
use super::trace::SimTrace;
use crate::constraints::{id_min_doubled, loss_optimal_id};
use crate::controller::ControllerConfig;
use crate::error::Result;
use crate::motor::{power_loss, to_rpm, DqState, MotorParams};
use crate::optimizer::SolverKind;

/// Rows averaged to estimate a steady-state value at the end of a trace.
const STEADY_ROWS: usize = 16;

/// How far and how long `i_d` dips below its final steady value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Excursion {
    pub steady_id: f64,
    pub min_id: f64,
    /// `steady_id - min_id`
    pub depth: f64,
    /// time spent more than the threshold below `steady_id`
    pub duration: f64,
}

/// Mean of `f` over the last rows of the trace.
pub fn steady_value(trace: &SimTrace, f: impl Fn(&super::trace::TraceRow) -> f64) -> f64 {
    let n = trace.rows.len().clamp(1, STEADY_ROWS);
    trace.rows[trace.rows.len() - n..].iter().map(f).sum::<f64>() / n as f64
}

pub fn id_excursion(trace: &SimTrace, from: f64, threshold: f64) -> Excursion {
    let steady_id = steady_value(trace, |r| r.i_d);
    let rows = trace.after(from);
    let min_id = rows.iter().map(|r| r.i_d).fold(f64::INFINITY, f64::min);
    let below = rows.iter().filter(|r| r.i_d < steady_id - threshold).count();
    Excursion { steady_id, min_id, depth: steady_id - min_id, duration: below as f64 * trace.ts }
}

/// Time after `from` until `|tau - tau_ref|` stays within `tol` (Nm) for the
/// rest of the trace.
pub fn settling_time(trace: &SimTrace, from: f64, tol: f64) -> Option<f64> {
    let rows = trace.after(from);
    let last_bad = rows.iter().rposition(|r| (r.tau - r.tau_ref).abs() > tol);
    match last_bad {
        None => Some(0.0),
        Some(i) if i + 1 < rows.len() => Some(rows[i + 1].time - from),
        Some(_) => None,
    }
}

/// Largest `|i_d|` after `from`.
pub fn max_abs_id(trace: &SimTrace, from: f64) -> f64 {
    trace.after(from).iter().map(|r| r.i_d.abs()).fold(0.0, f64::max)
}

/// Rectangle-rule integral of `P_ctrl + w_l P_loss` along the trace.
pub fn closed_loop_cost(trace: &SimTrace, w_l: f64) -> f64 {
    trace
        .rows
        .iter()
        .map(|r| trace.ts * ((r.tau - r.tau_ref).powi(2) + w_l * r.loss))
        .sum()
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub lp: SimResult,
    pub qp: SimResult,
    /// `J_LP - J_QP` on the problems the LP run actually solved
    pub per_cycle_excess: Vec<f64>,
    /// integral of the per-cycle excess over time
    pub excess_integral: f64,
    pub median_relative_excess: f64,
    pub lp_excursion: Excursion,
    pub qp_excursion: Excursion,
    /// largest difference between the two traces in currents and voltages
    pub max_trace_difference: f64,
}

/// Runs the scenario with both solvers. The LP run also solves every one of
/// its problems with the reference QP, so the per-cycle excess compares the
/// two solvers on identical problems.
pub fn compare_lp_qp(sc: &Scenario, cfg: &ControllerConfig, p: &MotorParams) -> Result<CompareReport> {
    let shadowed = ControllerConfig { shadow_reference: true, ..*cfg };
    let lp = run_with_solver(sc, &shadowed, p, SolverKind::Lp)?;
    let qp = run_with_solver(sc, cfg, p, SolverKind::Qp)?;

    let mut per_cycle_excess = Vec::new();
    let mut relative = Vec::new();
    for r in &lp.trace.rows {
        if let Some(reference) = r.cost_ref {
            per_cycle_excess.push(r.cost - reference);
            relative.push((r.cost - reference) / reference.abs().max(1e-12));
        }
    }
    relative.sort_by(f64::total_cmp);
    let median_relative_excess = relative.get(relative.len() / 2).copied().unwrap_or(0.0);
    let excess_integral = per_cycle_excess.iter().sum::<f64>() * lp.trace.ts;

    let from = sc.last_step_time();
    let max_trace_difference = lp
        .trace
        .rows
        .iter()
        .zip(&qp.trace.rows)
        .map(|(a, b)| {
            [a.i_d - b.i_d, a.i_q - b.i_q, a.u_d - b.u_d, a.u_q - b.u_q]
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.abs()))
        })
        .fold(0.0, f64::max);

    Ok(CompareReport {
        lp_excursion: id_excursion(&lp.trace, from, EXCURSION_THRESHOLD),
        qp_excursion: id_excursion(&qp.trace, from, EXCURSION_THRESHOLD),
        lp,
        qp,
        per_cycle_excess,
        excess_integral,
        median_relative_excess,
        max_trace_difference,
    })
}

/// Distance below the steady `i_d` that counts as field-weakening (A).
pub const EXCURSION_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyReport {
    /// rad/s
    pub omega: f64,
    pub tau: f64,
    /// steady `i_d` chosen by the closed loop
    pub id_closed_loop: f64,
    /// loss-optimal `i_d` clipped to the current box
    pub id_analytic: f64,
    pub iq: f64,
    pub loss_optimized: f64,
    /// loss with `i_d = 0` at the same `i_q`
    pub loss_zero_id: f64,
    /// `1 - loss_optimized / loss_zero_id`
    pub improvement: f64,
}

/// Loss-optimal `i_d` clipped to `[id_min_doubled, 0]`.
pub fn analytic_optimal_id(p: &MotorParams, omega: f64) -> Result<f64> {
    Ok(loss_optimal_id(p, omega).clamp(id_min_doubled(p)?, 0.0))
}

/// Loss reduction of the clipped loss-optimal `i_d` against `i_d = 0`.
pub fn analytic_improvement(p: &MotorParams, omega: f64, iq: f64) -> Result<f64> {
    let id = analytic_optimal_id(p, omega)?;
    let base = power_loss(DqState::new(0.0, iq), omega, p);
    Ok(1.0 - power_loss(DqState::new(id, iq), omega, p) / base)
}

/// Steady-state losses of the closed loop at `(omega, tau)` against the same
/// torque with `i_d = 0`.
pub fn efficiency_report(omega: f64, tau: f64, p: &MotorParams, cfg: &ControllerConfig) -> Result<EfficiencyReport> {
    let sc = Scenario {
        name: "efficiency".into(),
        description: String::new(),
        mode: Mode::TorqueControl,
        schedule: vec![Step { time: 0.0, value: tau }],
        speed_rpm: to_rpm(omega),
        inertia: 0.01,
        load_torque: 0.0,
        plant: Default::default(),
        controller: Default::default(),
        solver: SolverSelection::Lp,
        duration: 0.03,
        seed: 0,
        current_noise: 0.0,
        initial_i_d: 0.0,
        initial_i_q: 0.0,
    };
    let res = run_with_solver(&sc, cfg, p, cfg.solver)?;
    let id = steady_value(&res.trace, |r| r.i_d);
    let iq = steady_value(&res.trace, |r| r.i_q);
    let loss_optimized = power_loss(DqState::new(id, iq), omega, p);
    let loss_zero_id = power_loss(DqState::new(0.0, iq), omega, p);
    Ok(EfficiencyReport {
        omega,
        tau,
        id_closed_loop: id,
        id_analytic: analytic_optimal_id(p, omega)?,
        iq,
        loss_optimized,
        loss_zero_id,
        improvement: 1.0 - loss_optimized / loss_zero_id,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationRow {
    pub horizon: f64,
    pub loss_weight: f64,
    /// closed-loop cost with the run's own loss weight
    pub cost: f64,
    pub control_error: f64,
    /// energy lost over the run (J)
    pub energy_lost: f64,
    pub max_iterations: usize,
}

/// Closed-loop cost of `sc` for every combination of horizon and loss weight.
pub fn ablation_sweep(
    sc: &Scenario,
    cfg: &ControllerConfig,
    p: &MotorParams,
    horizons: &[f64],
    weights: &[f64],
) -> Result<Vec<AblationRow>> {
    let mut out = Vec::new();
    for &horizon in horizons {
        for &loss_weight in weights {
            let run_cfg = ControllerConfig { horizon, loss_weight, ..*cfg };
            let res = run_with_solver(sc, &run_cfg, p, run_cfg.solver)?;
            let tr = &res.trace;
            out.push(AblationRow {
                horizon,
                loss_weight,
                cost: closed_loop_cost(tr, loss_weight),
                control_error: closed_loop_cost(tr, 0.0),
                energy_lost: tr.rows.iter().map(|r| r.loss * tr.ts).sum(),
                max_iterations: res.stats.max_iterations,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::trace::TraceRow;
    use crate::motor::rpm;
    use approx::assert_relative_eq;

    fn trace(ids: &[f64], taus: &[(f64, f64)]) -> SimTrace {
        let rows = ids
            .iter()
            .zip(taus)
            .enumerate()
            .map(|(k, (id, (tau, tau_ref)))| TraceRow {
                time: k as f64,
                omega: 0.0,
                i_d: *id,
                i_q: 0.0,
                u_d: 0.0,
                u_q: 0.0,
                tau: *tau,
                tau_ref: *tau_ref,
                d_hat_d: 0.0,
                d_hat_q: 0.0,
                loss: 1.0,
                iterations: 0,
                active: 0,
                cost: 0.0,
                cost_ref: None,
                active_ref: None,
                alpha_gap: None,
                fallback: false,
                clamped: false,
            })
            .collect();
        SimTrace { scenario: "t".into(), solver: SolverKind::Lp, ts: 1.0, rows }
    }

    #[test]
    fn excursion_measures_depth_and_duration() {
        let mut ids = vec![-1.0, -1.0, -3.0, -2.5, -2.05];
        ids.extend(std::iter::repeat_n(-2.0, 20));
        let tr = trace(&ids, &vec![(0.0, 0.0); ids.len()]);
        let e = id_excursion(&tr, 1.0, 0.1);
        assert_relative_eq!(e.steady_id, -2.0);
        assert_relative_eq!(e.depth, 1.0);
        assert_relative_eq!(e.duration, 2.0);
    }

    #[test]
    fn settling_time_finds_last_violation() {
        let taus = [(0.0, 1.0), (0.5, 1.0), (0.99, 1.0), (1.2, 1.0), (1.0, 1.0), (1.005, 1.0)];
        let tr = trace(&[0.0; 6], &taus);
        assert_eq!(settling_time(&tr, 0.0, 0.02), Some(4.0));
        assert_eq!(settling_time(&tr, 4.0, 0.02), Some(0.0));
        let tr = trace(&[0.0; 2], &[(0.0, 1.0), (0.0, 1.0)]);
        assert_eq!(settling_time(&tr, 0.0, 0.02), None);
    }

    #[test]
    fn cost_integral() {
        let tr = trace(&[0.0; 3], &[(1.0, 0.0), (0.0, 0.0), (0.0, 2.0)]);
        assert_relative_eq!(closed_loop_cost(&tr, 0.5), 1.0 + 4.0 + 1.5);
    }

    #[test]
    fn no_improvement_at_standstill() {
        let p = MotorParams::default();
        assert_eq!(analytic_optimal_id(&p, 0.0).unwrap(), 0.0);
        assert_eq!(analytic_improvement(&p, 0.0, 5.0).unwrap(), 0.0);
        let rep = efficiency_report(0.0, 5.0, &p, &ControllerConfig::default()).unwrap();
        assert!(rep.improvement.abs() < 1e-9, "{rep:?}");
    }

    #[test]
    fn analytic_improvement_is_monotone_in_speed() {
        let p = MotorParams::default();
        let mut last = 0.0;
        for k in 0..=60 {
            let w = p.omega_rated * k as f64 / 60.0;
            let g = analytic_improvement(&p, w, p.tau_rated / p.torque_constant()).unwrap();
            assert!(g >= last - 1e-12);
            last = g;
        }
        assert!(analytic_improvement(&p, rpm(2000.0), 6.0).unwrap() > 0.0);
    }
}
