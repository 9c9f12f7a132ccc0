//! The four subcommands. Each writes its artifacts into the output
//! directory and reports through [`CliError`], whose variants map onto
//! the process exit codes: 1 for a failed check, 2 for usage or
//! configuration problems, 3 for numerical failures.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use smc_core::analysis::{
    deterministic_bound_check, escape_time, euler_slack, msb_bound, msb_check, stall_detector,
};
use smc_core::control::ControlVariant;
use smc_core::sim::Trajectory;

use crate::figures;
use crate::plot::render_plot;
use crate::report::{
    write_json, AnalysisReport, CheckResult, EnsembleSummary, EscapeOutcome, FigureReport,
    MsbOutcome, RunFiles, RunSummary, SeedOutcome,
};
use crate::scenario::{load_scenario, AnalysisSpec, LoadedScenario, ScenarioError};
use crate::trajectory_io::write_trajectory;

/// Stall reporting defaults for `run` summaries.
const RUN_STALL_WINDOW: f64 = 10.0;
const RUN_STALL_TOL: f64 = 1.0;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable files, invalid scenarios. Exit code 2.
    Usage(String),
    /// A requested check did not pass. Exit code 1.
    Check(String),
    /// The integrator produced a non-finite state. Exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Check(msg) | CliError::Numerical(msg) => {
                f.write_str(msg)
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Usage(format!("io: {e}"))
    }
}

/// Core errors raised while integrating (as opposed to while loading)
/// indicate numerical trouble, not bad configuration.
fn run_error(e: smc_core::Error) -> CliError {
    CliError::Numerical(format!("simulation failed: {e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verbosity {
    Quiet,
    Normal,
    Verbose,
}

#[derive(Debug, Clone)]
pub struct GlobalOpts {
    pub out_dir: PathBuf,
    pub verbosity: Verbosity,
}

impl GlobalOpts {
    fn say(&self, msg: impl AsRef<str>) {
        if self.verbosity != Verbosity::Quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn say_verbose(&self, msg: impl AsRef<str>) {
        if self.verbosity == Verbosity::Verbose {
            println!("{}", msg.as_ref());
        }
    }

    fn ensure_out_dir(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir)
            .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", self.out_dir.display())))
    }
}

fn load(path: &Path) -> Result<LoadedScenario, CliError> {
    load_scenario(path).map_err(CliError::from)
}

fn log_defaults(opts: &GlobalOpts, loaded: &LoadedScenario) {
    for line in &loaded.defaults_applied {
        opts.say_verbose(format!("note: {line}"));
    }
    if !loaded.defaults_applied.is_empty() {
        opts.say(format!(
            "{} defaulted fields (run with --verbose to list them)",
            loaded.defaults_applied.len()
        ));
    }
}

fn check_line(check: &CheckResult) -> String {
    let tag = if check.passed { "PASS" } else { "FAIL" };
    format!("{tag} {}: {}", check.name, check.detail)
}

/// Run one scenario and write `<name>.csv`, `<name>.svg`, and
/// `<name>_summary.json`.
pub fn cmd_run(opts: &GlobalOpts, scenario_path: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let loaded = load(scenario_path)?;
    log_defaults(opts, &loaded);
    let mut scenario = loaded.scenario.clone();
    if let Some(s) = seed {
        scenario.sim.seed = s;
    }
    let traj = scenario.run().map_err(run_error)?;
    opts.ensure_out_dir()?;

    let base = opts.out_dir.join(&loaded.name);
    let csv_path = base.with_extension("csv");
    let svg_path = base.with_extension("svg");
    let summary_path = opts.out_dir.join(format!("{}_summary.json", loaded.name));
    write_trajectory(&traj, &csv_path)?;
    fs::write(&svg_path, render_plot(scenario.world.density(), Some(&traj)))?;

    let horizon = traj.final_time() - traj.times()[0];
    let window = RUN_STALL_WINDOW.min(horizon);
    let stalled = if window > 0.0 {
        (0..traj.agent_count())
            .map(|a| stall_detector(&traj, a, window, RUN_STALL_TOL))
            .collect::<Result<Vec<_>, _>>()
            .map_err(run_error)?
    } else {
        vec![false; traj.agent_count()]
    };

    let final_metric = *traj.metrics().last().expect("trajectory has samples");
    let summary = RunSummary {
        scenario: loaded.name.clone(),
        variant: variant_label(scenario.control.variant).to_string(),
        seed: scenario.sim.seed,
        agent_count: traj.agent_count(),
        t_final: scenario.sim.t_final,
        samples: traj.len(),
        final_metric,
        stall_window: window,
        stall_tol: RUN_STALL_TOL,
        stalled: stalled.clone(),
        boundary_crossings: traj.boundary_crossings(),
        defaults_applied: loaded.defaults_applied.clone(),
        files: RunFiles {
            trajectory: csv_path.display().to_string(),
            plot: svg_path.display().to_string(),
        },
    };
    write_json(&summary, &summary_path)?;

    opts.say(format!(
        "{}: {} agents, {} samples, final metric {final_metric:.6e}",
        loaded.name,
        traj.agent_count(),
        traj.len(),
    ));
    opts.say(format!(
        "stalled agents: {}, boundary crossings: {}",
        stalled.iter().filter(|&&s| s).count(),
        traj.boundary_crossings(),
    ));
    opts.say(format!(
        "wrote {}, {}, {}",
        csv_path.display(),
        svg_path.display(),
        summary_path.display()
    ));
    Ok(())
}

fn variant_label(variant: ControlVariant) -> &'static str {
    match variant {
        ControlVariant::Classical => "classical",
        ControlVariant::Regularized => "regularized",
        ControlVariant::Stochastic => "stochastic",
        ControlVariant::StochasticContraction => "stochastic_contraction",
    }
}

/// Member seeds are `master ^ index` so the set is reproducible from
/// one number and no two members collide.
fn member_seeds(master: u64, members: u32) -> Vec<u64> {
    (0..members).map(|i| master ^ u64::from(i)).collect()
}

fn run_ensemble(loaded: &LoadedScenario, master: u64, members: u32) -> Result<Vec<Trajectory>, CliError> {
    member_seeds(master, members)
        .into_par_iter()
        .map(|seed| {
            loaded
                .scenario
                .run_seeded(seed)
                .map_err(|e| CliError::Numerical(format!("seed {seed}: {e}")))
        })
        .collect()
}

/// Run `members` seeded variations and write `<name>_ensemble.json`.
pub fn cmd_ensemble(
    opts: &GlobalOpts,
    scenario_path: &Path,
    members: u32,
    seed: Option<u64>,
) -> Result<(), CliError> {
    if members < 2 {
        return Err(CliError::Usage(format!(
            "ensemble needs at least 2 members, got {members}"
        )));
    }
    let loaded = load(scenario_path)?;
    log_defaults(opts, &loaded);
    let master = seed.unwrap_or(loaded.scenario.sim.seed);
    let trajs = run_ensemble(&loaded, master, members)?;

    let seeds = member_seeds(master, members);
    let per_seed: Vec<SeedOutcome> = trajs
        .iter()
        .zip(&seeds)
        .enumerate()
        .map(|(i, (traj, &seed))| SeedOutcome {
            index: i as u32,
            seed,
            final_metric: *traj.metrics().last().expect("trajectory has samples"),
            boundary_crossings: traj.boundary_crossings(),
        })
        .collect();

    let mut all_passed = true;

    let control = &loaded.scenario.control;
    let mut msb_outcomes = Vec::new();
    if control.variant == ControlVariant::StochasticContraction {
        let bound =
            msb_bound(control, &loaded.scenario.initial_positions).map_err(run_error)?;
        let slack = loaded
            .analyses
            .iter()
            .find_map(|spec| match spec {
                AnalysisSpec::MeanSquareBound { slack, .. } => Some(slack.unwrap_or(1.0)),
                _ => None,
            })
            .unwrap_or(1.0);
        for agent in 0..loaded.agent_count() {
            let report = msb_check(&trajs, agent, control.contraction_center, bound, slack)
                .map_err(run_error)?;
            all_passed &= report.passed;
            msb_outcomes.push(MsbOutcome {
                agent,
                sup_mean_sq: report.sup_mean_sq,
                bound: report.bound,
                sample_count: report.sample_count,
                passed: report.passed,
            });
        }
    }

    let mut escapes = Vec::new();
    for spec in &loaded.analyses {
        if let AnalysisSpec::Escape { manifold, agent, delta, .. } = spec {
            let set = loaded.manifold(*manifold)?;
            let mut times = Vec::with_capacity(trajs.len());
            for traj in &trajs {
                times.push(escape_time(traj, *agent, &set, *delta).map_err(run_error)?);
            }
            let escaped = times.iter().filter(|t| t.is_some()).count() as u32;
            let passed = escaped == members;
            all_passed &= passed;
            escapes.push(EscapeOutcome {
                manifold: manifold.label().to_string(),
                agent: *agent,
                delta: *delta,
                escaped,
                members,
                times,
                passed,
            });
        }
    }

    let summary = EnsembleSummary {
        scenario: loaded.name.clone(),
        variant: variant_label(control.variant).to_string(),
        master_seed: master,
        members,
        per_seed,
        mean_square_bounds: msb_outcomes,
        escapes,
        all_passed,
    };
    opts.ensure_out_dir()?;
    let path = opts.out_dir.join(format!("{}_ensemble.json", loaded.name));
    write_json(&summary, &path)?;

    for msb in &summary.mean_square_bounds {
        opts.say(format!(
            "{} msb agent {}: sup mean |x|^2 {:.6e} vs bound {:.6e}",
            if msb.passed { "PASS" } else { "FAIL" },
            msb.agent,
            msb.sup_mean_sq,
            msb.bound,
        ));
    }
    for esc in &summary.escapes {
        opts.say(format!(
            "{} escape {} agent {}: {}/{} members escaped delta {}",
            if esc.passed { "PASS" } else { "FAIL" },
            esc.manifold,
            esc.agent,
            esc.escaped,
            esc.members,
            esc.delta,
        ));
    }
    opts.say(format!("{} members, wrote {}", members, path.display()));

    if all_passed {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "{}: ensemble checks failed (see {})",
            loaded.name,
            path.display()
        )))
    }
}

/// Evaluate every analysis declared in the scenario file and write
/// `<name>_analysis.json`.
pub fn cmd_analyze(
    opts: &GlobalOpts,
    scenario_path: &Path,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let mut loaded = load(scenario_path)?;
    log_defaults(opts, &loaded);
    if let Some(s) = seed {
        loaded.scenario.sim.seed = s;
    }

    let mut checks = Vec::new();
    let mut base: Option<Trajectory> = None;
    let mut ensembles: HashMap<u32, Vec<Trajectory>> = HashMap::new();
    let master = loaded.scenario.sim.seed;

    for spec in loaded.analyses.clone() {
        let check = match spec {
            AnalysisSpec::Confinement { manifold, agent, tol } => {
                let traj = base_run(&loaded, &mut base)?;
                let set = loaded.manifold(manifold)?;
                let mut worst = 0.0_f64;
                for i in 0..traj.len() {
                    worst = worst.max(set.distance(traj.position(i, agent)));
                }
                CheckResult::new(
                    format!("confinement {} agent {agent}", manifold.label()),
                    worst <= tol,
                    format!("max distance {worst:.3e}, tolerance {tol:.3e}"),
                )
            }
            AnalysisSpec::Escape { manifold, agent, delta, seeds } => {
                let trajs = ensemble_runs(&loaded, master, seeds, &mut ensembles)?;
                let set = loaded.manifold(manifold)?;
                let mut escaped = 0_u32;
                let mut slowest: Option<f64> = None;
                for traj in trajs {
                    match escape_time(traj, agent, &set, delta).map_err(run_error)? {
                        Some(t) => {
                            escaped += 1;
                            slowest = Some(slowest.map_or(t, |s: f64| s.max(t)));
                        }
                        None => {}
                    }
                }
                CheckResult::new(
                    format!("escape {} agent {agent}", manifold.label()),
                    escaped == seeds,
                    format!(
                        "{escaped}/{seeds} members left the delta = {delta} neighborhood{}",
                        slowest.map_or(String::new(), |t| format!(", slowest at t = {t:.1} s")),
                    ),
                )
            }
            AnalysisSpec::MeanSquareBound { seeds, slack, agent } => {
                let control = loaded.scenario.control;
                let bound = msb_bound(&control, &loaded.scenario.initial_positions)
                    .map_err(run_error)?;
                let trajs = ensemble_runs(&loaded, master, seeds, &mut ensembles)?;
                let agents: Vec<usize> = match agent {
                    Some(a) => vec![a],
                    None => (0..loaded.agent_count()).collect(),
                };
                let mut passed = true;
                let mut worst_ratio = 0.0_f64;
                let mut sup = 0.0_f64;
                for a in agents {
                    let report = msb_check(
                        trajs,
                        a,
                        control.contraction_center,
                        bound,
                        slack.unwrap_or(1.0),
                    )
                    .map_err(run_error)?;
                    passed &= report.passed;
                    if report.sup_mean_sq / report.bound > worst_ratio {
                        worst_ratio = report.sup_mean_sq / report.bound;
                        sup = report.sup_mean_sq;
                    }
                }
                CheckResult::new(
                    format!("mean square bound over {seeds} seeds"),
                    passed,
                    format!("worst sup mean |x|^2 {sup:.6e} vs bound {bound:.6e}"),
                )
            }
            AnalysisSpec::DecayEnvelope { agent } => {
                let traj = base_run(&loaded, &mut base)?;
                let control = loaded.scenario.control;
                let slack = euler_slack(&control, &loaded.domain());
                let ok = deterministic_bound_check(traj, agent, &control, slack)
                    .map_err(run_error)?;
                CheckResult::new(
                    format!("decay envelope agent {agent}"),
                    ok,
                    format!("per-step slack rate {slack:.3e}"),
                )
            }
            AnalysisSpec::Stall { agent, window, tol, expect } => {
                let traj = base_run(&loaded, &mut base)?;
                let stalled = stall_detector(traj, agent, window, tol).map_err(run_error)?;
                CheckResult::new(
                    format!("stall agent {agent}"),
                    stalled == expect,
                    format!("window {window} s, tolerance {tol}: flag {stalled}, expected {expect}"),
                )
            }
        };
        opts.say(check_line(&check));
        checks.push(check);
    }

    let all_passed = checks.iter().all(|c| c.passed);
    let report = AnalysisReport {
        scenario: loaded.name.clone(),
        seed: master,
        checks,
        all_passed,
    };
    opts.ensure_out_dir()?;
    let path = opts.out_dir.join(format!("{}_analysis.json", loaded.name));
    write_json(&report, &path)?;
    opts.say(format!("wrote {}", path.display()));

    if report.checks.is_empty() {
        opts.say(format!("{}: no analyses declared", loaded.name));
    }
    if all_passed {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "{}: {} of {} checks failed",
            loaded.name,
            report.checks.iter().filter(|c| !c.passed).count(),
            report.checks.len(),
        )))
    }
}

fn base_run<'a>(
    loaded: &LoadedScenario,
    cache: &'a mut Option<Trajectory>,
) -> Result<&'a Trajectory, CliError> {
    if cache.is_none() {
        *cache = Some(loaded.scenario.run().map_err(run_error)?);
    }
    Ok(cache.as_ref().expect("just filled"))
}

fn ensemble_runs<'a>(
    loaded: &LoadedScenario,
    master: u64,
    seeds: u32,
    cache: &'a mut HashMap<u32, Vec<Trajectory>>,
) -> Result<&'a [Trajectory], CliError> {
    if !cache.contains_key(&seeds) {
        let trajs = run_ensemble(loaded, master, seeds)?;
        cache.insert(seeds, trajs);
    }
    Ok(cache.get(&seeds).expect("just filled"))
}

/// Re-run a bundled figure scenario, write its artifacts, and verify
/// the claims the figure makes.
pub fn cmd_reproduce(opts: &GlobalOpts, figure: &str) -> Result<(), CliError> {
    let loaded = figures::bundled_scenario(figure)
        .map_err(CliError::from)?
        .ok_or_else(|| {
            CliError::Usage(format!(
                "unknown figure {figure:?}; available: {}",
                figures::FIGURE_IDS.join(", ")
            ))
        })?;
    log_defaults(opts, &loaded);
    let traj = loaded.scenario.run().map_err(run_error)?;
    opts.ensure_out_dir()?;

    let base = opts.out_dir.join(&loaded.name);
    let csv_path = base.with_extension("csv");
    let svg_path = base.with_extension("svg");
    write_trajectory(&traj, &csv_path)?;
    fs::write(&svg_path, render_plot(loaded.scenario.world.density(), Some(&traj)))?;

    let claims = figures::evaluate_claims(figure, &loaded, &traj).map_err(CliError::from)?;
    for claim in &claims {
        opts.say(check_line(claim));
    }
    let all_passed = claims.iter().all(|c| c.passed);
    let report = FigureReport {
        figure: figure.to_string(),
        scenario: loaded.name.clone(),
        claims,
        all_passed,
        files: RunFiles {
            trajectory: csv_path.display().to_string(),
            plot: svg_path.display().to_string(),
        },
    };
    let path = opts.out_dir.join(format!("{figure}_report.json"));
    write_json(&report, &path)?;
    opts.say(format!("wrote {}, {}, {}", csv_path.display(), svg_path.display(), path.display()));

    if all_passed {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "{figure}: {} of {} claims failed",
            report.claims.iter().filter(|c| !c.passed).count(),
            report.claims.len(),
        )))
    }
}
