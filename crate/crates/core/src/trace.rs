//! Per-iteration solver records and their CSV form.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str = "iter,objective,step_size,frob_err_sq,wall_ms";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// `½‖y − A(X_k)‖²`.
    pub objective: f64,
    /// `None` for the initial point.
    pub step_size: Option<f64>,
    /// `‖X_k − ρ‖_F²` when the truth is known.
    pub frob_err_sq: Option<f64>,
    /// Milliseconds since the solver started, when timing is enabled.
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Relative iterate change fell below the tolerance.
    Converged,
    ObjectiveFloor,
    MaxIters,
    /// The projected gradient vanished.
    ZeroDirection,
    /// Objective exceeded the divergence threshold (baselines).
    Diverged,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    /// `"rgd"`, or `"mifgd-heavy-ball"` for the momentum baseline.
    pub method: String,
    pub records: Vec<IterRecord>,
    pub stop_reason: StopReason,
    /// Some iterate had fewer than `r` nonzero eigenvalues.
    pub rank_collapse: bool,
}

impl SolverTrace {
    pub fn new(method: impl Into<String>) -> Self {
        SolverTrace {
            method: method.into(),
            records: Vec::new(),
            stop_reason: StopReason::MaxIters,
            rank_collapse: false,
        }
    }

    pub fn last(&self) -> Option<&IterRecord> {
        self.records.last()
    }

    /// Number of iterations taken (records after the initial point).
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_frob_err_sq(&self) -> Option<f64> {
        self.last().and_then(|r| r.frob_err_sq)
    }

    /// First iteration index whose recorded `‖X_k − ρ‖_F²` is at most `target`.
    pub fn first_iter_below(&self, target: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.frob_err_sq.is_some_and(|e| e <= target))
            .map(|r| r.iter)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{},{}", r.iter, r.objective);
            push_opt(&mut out, r.step_size);
            push_opt(&mut out, r.frob_err_sq);
            push_opt(&mut out, r.wall_ms);
            out.push('\n');
        }
        out
    }
}

fn push_opt(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        let _ = write!(out, "{v}");
    }
}
