//! Closed-loop simulation harness: scenarios, traces and the metrics built on
//! top of them.

pub mod analysis;
pub mod scenario;
pub mod sim;
pub mod trace;

pub use analysis::{
    ablation_sweep, closed_loop_cost, compare_lp_qp, efficiency_report, id_excursion, settling_time,
    AblationRow, CompareReport, EfficiencyReport, Excursion,
};
pub use scenario::{builtin, builtin_names, Mode, Scenario, SolverSelection, Step};
pub use sim::{run_scenario, run_with_solver, SimResult, SolverStats, Violation};
pub use trace::{SimTrace, TraceRow};
