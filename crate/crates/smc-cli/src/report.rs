//! JSON summaries written next to the trajectory and plot artifacts.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

/// One named pass/fail outcome with a human-readable detail line.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckResult { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunFiles {
    pub trajectory: String,
    pub plot: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub variant: String,
    pub seed: u64,
    pub agent_count: usize,
    pub t_final: f64,
    pub samples: usize,
    pub final_metric: f64,
    pub stall_window: f64,
    pub stall_tol: f64,
    /// Stall flag per agent, in agent order.
    pub stalled: Vec<bool>,
    pub boundary_crossings: u64,
    pub defaults_applied: Vec<String>,
    pub files: RunFiles,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedOutcome {
    pub index: u32,
    pub seed: u64,
    pub final_metric: f64,
    pub boundary_crossings: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MsbOutcome {
    pub agent: usize,
    pub sup_mean_sq: f64,
    pub bound: f64,
    pub sample_count: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapeOutcome {
    pub manifold: String,
    pub agent: usize,
    pub delta: f64,
    pub escaped: u32,
    pub members: u32,
    /// Escape time per member, `null` where the agent never left.
    pub times: Vec<Option<f64>>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub scenario: String,
    pub variant: String,
    pub master_seed: u64,
    pub members: u32,
    pub per_seed: Vec<SeedOutcome>,
    pub mean_square_bounds: Vec<MsbOutcome>,
    pub escapes: Vec<EscapeOutcome>,
    pub all_passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub scenario: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FigureReport {
    pub figure: String,
    pub scenario: String,
    pub claims: Vec<CheckResult>,
    pub all_passed: bool,
    pub files: RunFiles,
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_serializes_with_stable_field_names() {
        let summary = RunSummary {
            scenario: "demo".to_string(),
            variant: "classical".to_string(),
            seed: 1,
            agent_count: 2,
            t_final: 10.0,
            samples: 101,
            final_metric: 0.125,
            stall_window: 10.0,
            stall_tol: 1.0,
            stalled: vec![false, true],
            boundary_crossings: 0,
            defaults_applied: vec!["sim.dt = 0.1 (default)".to_string()],
            files: RunFiles { trajectory: "demo.csv".to_string(), plot: "demo.svg".to_string() },
        };
        let json = serde_json::to_string(&summary).unwrap();
        for key in ["\"scenario\"", "\"final_metric\"", "\"stalled\"", "\"boundary_crossings\""] {
            assert!(json.contains(key), "{json}");
        }
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["stalled"][1], serde_json::Value::Bool(true));
    }

    #[test]
    fn escape_times_serialize_missing_as_null() {
        let escape = EscapeOutcome {
            manifold: "midline_x".to_string(),
            agent: 0,
            delta: 2.0,
            escaped: 1,
            members: 2,
            times: vec![Some(3.5), None],
            passed: false,
        };
        let json = serde_json::to_string(&escape).unwrap();
        assert!(json.contains("[3.5,null]"), "{json}");
    }
}
