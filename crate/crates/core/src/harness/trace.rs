//! Per-sample simulation records and their CSV form.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::optimizer::SolverKind;

/// One control period. Currents, speed and torque are the true plant values
/// at the sampling instant; the voltage is what the inverter applies until
/// the next instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time: f64,
    pub omega: f64,
    pub i_d: f64,
    pub i_q: f64,
    pub u_d: f64,
    pub u_q: f64,
    pub tau: f64,
    pub tau_ref: f64,
    pub d_hat_d: f64,
    pub d_hat_q: f64,
    /// copper plus iron losses (W)
    pub loss: f64,
    pub iterations: usize,
    pub active: usize,
    /// trajectory cost at the solution
    pub cost: f64,
    /// reference QP cost on the same problem, when shadowed
    pub cost_ref: Option<f64>,
    /// active constraints of the reference solution
    pub active_ref: Option<usize>,
    /// largest coefficient difference to the reference solution
    pub alpha_gap: Option<f64>,
    pub fallback: bool,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub scenario: String,
    pub solver: SolverKind,
    pub ts: f64,
    pub rows: Vec<TraceRow>,
}

impl SimTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<TraceRow>> {
        let mut r = csv::Reader::from_path(path)?;
        Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.time)
    }

    /// Rows at or after `t`.
    pub fn after(&self, t: f64) -> &[TraceRow] {
        let start = self.rows.partition_point(|r| r.time < t - 1e-12);
        &self.rows[start..]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64) -> TraceRow {
        TraceRow {
            time: t,
            omega: 0.0,
            i_d: -0.5,
            i_q: 1.25,
            u_d: 0.0,
            u_q: 3.0,
            tau: 1.0,
            tau_ref: 1.0,
            d_hat_d: 0.0,
            d_hat_q: 0.0,
            loss: 2.0,
            iterations: 3,
            active: 1,
            cost: 0.1,
            cost_ref: None,
            active_ref: None,
            alpha_gap: None,
            fallback: false,
            clamped: false,
        }
    }

    #[test]
    fn header_is_stable() {
        let tr = SimTrace { scenario: "x".into(), solver: SolverKind::Lp, ts: 1.0, rows: vec![row(0.0)] };
        let text = tr.to_csv_string().unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "time,omega,i_d,i_q,u_d,u_q,tau,tau_ref,d_hat_d,d_hat_q,loss,iterations,active,cost,\
             cost_ref,active_ref,alpha_gap,fallback,clamped"
        );
    }

    #[test]
    fn csv_round_trip() {
        let mut r1 = row(1.0);
        r1.cost_ref = Some(0.05);
        let tr = SimTrace { scenario: "x".into(), solver: SolverKind::Lp, ts: 1.0, rows: vec![row(0.0), r1] };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        tr.save(&path).unwrap();
        assert_eq!(SimTrace::read_csv(&path).unwrap(), tr.rows);
    }

    #[test]
    fn after_slices_by_time() {
        let tr = SimTrace {
            scenario: "x".into(),
            solver: SolverKind::Lp,
            ts: 1.0,
            rows: (0..5).map(|k| row(k as f64)).collect(),
        };
        assert_eq!(tr.after(2.0).len(), 3);
        assert_eq!(tr.after(10.0).len(), 0);
    }
}
