//! Closed-loop cost over horizon lengths on the three rated torque steps.

use pmsm_mpc::harness::{ablation_sweep, builtin};
use pmsm_mpc::{ControllerConfig, MotorParams};

fn main() -> pmsm_mpc::Result<()> {
    let p = MotorParams::nameplate();
    let horizons = [0.5e-3, 1e-3, 2e-3, 5e-3];
    for name in ["fig8b", "fig8c", "fig8d"] {
        let rows = ablation_sweep(&builtin(name)?, &ControllerConfig::default(), &p, &horizons, &[0.05])?;
        let costs: Vec<String> = rows.iter().map(|r| format!("{:.1} ms: {:.4}", r.horizon * 1e3, r.cost)).collect();
        println!("{name}  {}", costs.join("  "));
    }
    Ok(())
}
