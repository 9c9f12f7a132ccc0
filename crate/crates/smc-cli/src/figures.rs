//! Bundled figure scenarios and the quantified claims each one makes.
//! The TOML sources are embedded at compile time so `smc reproduce`
//! works without the repository checkout.

use smc_core::analysis::stall_detector;
use smc_core::sim::Trajectory;

use crate::report::CheckResult;
use crate::scenario::{parse_scenario, LoadedScenario, ManifoldSpec, ScenarioError};

pub const FIGURE_IDS: [&str; 4] = ["fig1a", "fig1b", "fig2a", "fig2b"];

const MANIFOLD_TOL_FACTOR: f64 = 1.0e-9;
const WALL_MARGIN: f64 = 1.0;
const RETREAT_UNITS: f64 = 10.0;
const EARLY_WINDOW: f64 = 10.0;
const STALL_WINDOW: f64 = 10.0;
const STALL_TOL: f64 = 1.0;
const METRIC_EARLY_T: f64 = 1.0;
const METRIC_LATE_T: f64 = 150.0;

pub fn bundled_source(figure: &str) -> Option<&'static str> {
    match figure {
        "fig1a" => Some(include_str!("../../../scenarios/fig1a.toml")),
        "fig1b" => Some(include_str!("../../../scenarios/fig1b.toml")),
        "fig2a" => Some(include_str!("../../../scenarios/fig2a.toml")),
        "fig2b" => Some(include_str!("../../../scenarios/fig2b.toml")),
        _ => None,
    }
}

pub fn bundled_scenario(figure: &str) -> Result<Option<LoadedScenario>, ScenarioError> {
    match bundled_source(figure) {
        Some(text) => parse_scenario(text, figure).map(Some),
        None => Ok(None),
    }
}

/// Evaluate the quantified claims a figure makes about its run.
pub fn evaluate_claims(
    figure: &str,
    loaded: &LoadedScenario,
    traj: &Trajectory,
) -> Result<Vec<CheckResult>, ScenarioError> {
    match figure {
        "fig1a" => claims_fig1a(loaded, traj),
        "fig1b" => claims_fig1b(loaded, traj),
        "fig2a" | "fig2b" => claims_fig2(loaded, traj),
        _ => Ok(Vec::new()),
    }
}

/// Every corner agent stays on its symmetry set for the whole run.
fn claims_fig1a(
    loaded: &LoadedScenario,
    traj: &Trajectory,
) -> Result<Vec<CheckResult>, ScenarioError> {
    let tol = MANIFOLD_TOL_FACTOR * loaded.domain().lx();
    let sets = [
        (0_usize, ManifoldSpec::Origin, "origin agent stays put"),
        (1, ManifoldSpec::AxisX0, "left-wall agent stays on x = 0"),
        (2, ManifoldSpec::AxisY0, "bottom-wall agent stays on y = 0"),
        (3, ManifoldSpec::DiagonalMain, "corner agent stays on the diagonal"),
    ];
    let mut claims = Vec::new();
    for (agent, spec, name) in sets {
        let manifold = loaded.manifold(spec)?;
        let mut worst = 0.0_f64;
        for i in 0..traj.len() {
            worst = worst.max(manifold.distance(traj.position(i, agent)));
        }
        claims.push(CheckResult::new(
            name,
            worst <= tol,
            format!("max distance {worst:.3e}, tolerance {tol:.3e}"),
        ));
    }
    Ok(claims)
}

/// The right-most agent runs to the right wall before doubling back,
/// and the left agents' early motion is horizontal.
fn claims_fig1b(
    loaded: &LoadedScenario,
    traj: &Trajectory,
) -> Result<Vec<CheckResult>, ScenarioError> {
    let lx = loaded.domain().lx();
    let rightmost = traj.agent_count() - 1;

    let mut wall_time = None;
    let mut retreat_time = None;
    let mut running_max = f64::NEG_INFINITY;
    for (i, &t) in traj.times().iter().enumerate() {
        let x = traj.position(i, rightmost).x;
        running_max = running_max.max(x);
        if wall_time.is_none() && x >= lx - WALL_MARGIN {
            wall_time = Some(t);
        }
        if retreat_time.is_none() && running_max - x > RETREAT_UNITS {
            retreat_time = Some(t);
        }
    }
    let wall_first = match (wall_time, retreat_time) {
        (Some(_), None) => true,
        (Some(w), Some(r)) => w < r,
        (None, _) => false,
    };
    let detail = format!(
        "wall contact at {}, first {RETREAT_UNITS}-unit retreat at {}",
        wall_time.map_or("never".to_string(), |t| format!("t = {t:.1} s")),
        retreat_time.map_or("never".to_string(), |t| format!("t = {t:.1} s")),
    );
    let mut claims =
        vec![CheckResult::new("right-most agent touches the right wall first", wall_first, detail)];

    for agent in 0..rightmost {
        let start = traj.position(0, agent);
        let mut dx = 0.0_f64;
        let mut dy = 0.0_f64;
        for (i, &t) in traj.times().iter().enumerate() {
            if t > EARLY_WINDOW {
                break;
            }
            let p = traj.position(i, agent);
            dx = dx.max((p.x - start.x).abs());
            dy = dy.max((p.y - start.y).abs());
        }
        claims.push(CheckResult::new(
            format!("agent {agent} moves horizontally over the first {EARLY_WINDOW} s"),
            dy < 0.1 * dx,
            format!("|dy| {dy:.3e} vs 10% of |dx| {:.3e}", 0.1 * dx),
        ));
    }
    Ok(claims)
}

/// No agent stalls, every sample stays inside the domain, and the
/// coverage mismatch at t = 150 s is below its value at t = 1 s.
fn claims_fig2(
    loaded: &LoadedScenario,
    traj: &Trajectory,
) -> Result<Vec<CheckResult>, ScenarioError> {
    let domain = loaded.domain();
    let mut claims = Vec::new();

    for agent in 0..traj.agent_count() {
        let stalled = stall_detector(traj, agent, STALL_WINDOW, STALL_TOL)?;
        claims.push(CheckResult::new(
            format!("agent {agent} never stalls"),
            !stalled,
            format!("stall flag over {STALL_WINDOW} s windows at {STALL_TOL} unit: {stalled}"),
        ));
    }

    let mut outside = 0_usize;
    for i in 0..traj.len() {
        for agent in 0..traj.agent_count() {
            if !domain.contains(traj.position(i, agent)) {
                outside += 1;
            }
        }
    }
    claims.push(CheckResult::new(
        "all samples stay inside the domain",
        outside == 0,
        format!("{outside} samples outside"),
    ));

    let early = metric_at(traj, METRIC_EARLY_T);
    let late = metric_at(traj, METRIC_LATE_T);
    claims.push(CheckResult::new(
        format!("coverage metric falls from t = {METRIC_EARLY_T} s to t = {METRIC_LATE_T} s"),
        late < early,
        format!("metric({METRIC_LATE_T}) = {late:.6e} vs metric({METRIC_EARLY_T}) = {early:.6e}"),
    ));
    Ok(claims)
}

/// Metric at the first recorded sample at or after `t`.
fn metric_at(traj: &Trajectory, t: f64) -> f64 {
    let slop = 1.0e-9 * traj.dt();
    for (i, &sample_t) in traj.times().iter().enumerate() {
        if sample_t >= t - slop {
            return traj.metrics()[i];
        }
    }
    *traj.metrics().last().expect("trajectory has samples")
}
