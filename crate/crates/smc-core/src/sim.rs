//! Euler-Maruyama time stepping of the multi-agent coverage dynamics.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::control::{drift_with_control, feedback_control, gradient_from_tables, ControlConfig};
use crate::coverage::CoverageAccumulator;
use crate::density::GaussianMixture;
use crate::math;
use crate::spectral::{
    ergodicity_metric, target_coefficients, AxisTables, ModeSet, QuadratureGrid, RectDomain,
    SpectralCoefficients,
};
use crate::{Error, Result, Vec2};

/// What happens when an integration step leaves the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// Mirror-fold back inside. Folding commutes with the even periodic
    /// extension of the basis, so the spectral state sees no seam.
    Reflect,
    /// Clamp onto the nearest wall, axis by axis.
    Project,
    /// Let agents roam; the basis is evaluated at the folded image while
    /// the true position runs free. Used for unbounded-model checks.
    Free,
}

/// Integration parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Step length in seconds.
    pub dt: f64,
    /// Horizon in seconds; the run takes `floor(t_final / dt)` steps.
    pub t_final: f64,
    /// Master seed; agent `i` draws from stream `i` of this seed.
    pub seed: u64,
    pub boundary: BoundaryPolicy,
    /// Record every this-many steps (the final state is always recorded).
    pub record_stride: u32,
}

impl SimConfig {
    pub fn new(dt: f64, t_final: f64, seed: u64) -> Self {
        SimConfig { dt, t_final, seed, boundary: BoundaryPolicy::Reflect, record_stride: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter("dt must be finite and positive"));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(Error::InvalidParameter("t_final must be finite and at least dt"));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record_stride must be at least 1"));
        }
        Ok(())
    }

    /// Number of Euler steps, `floor(t_final / dt)` with a one-part-in-1e12
    /// guard so horizons that are exact multiples of `dt` in real arithmetic
    /// do not lose their last step to division rounding.
    pub fn step_count(&self) -> u64 {
        let q = self.t_final / self.dt;
        (q * (1.0 + 1e-12) + 1e-12) as u64
    }
}

/// Static problem data: domain, target density, mode truncation, and the
/// target coefficients the coverage dynamics chase.
#[derive(Debug, Clone)]
pub struct World {
    domain: RectDomain,
    density: GaussianMixture,
    modes: ModeSet,
    mu: SpectralCoefficients,
}

impl World {
    /// Precompute target coefficients for `density` on `grid`.
    pub fn new(density: GaussianMixture, modes: ModeSet, grid: QuadratureGrid) -> Result<Self> {
        grid.check_resolves(&modes)?;
        let domain = *density.domain();
        let mu = target_coefficients(|p| density.eval(p), &modes, &domain, grid)?;
        Ok(World { domain, density, modes, mu })
    }

    #[inline]
    pub fn domain(&self) -> RectDomain {
        self.domain
    }

    #[inline]
    pub fn density(&self) -> &GaussianMixture {
        &self.density
    }

    #[inline]
    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }

    /// Target coefficients `mu_k`.
    #[inline]
    pub fn mu(&self) -> &SpectralCoefficients {
        &self.mu
    }
}

/// A complete runnable setup.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub world: World,
    pub control: ControlConfig,
    pub sim: SimConfig,
    pub initial_positions: Vec<Vec2>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.control.validate()?;
        self.sim.validate()?;
        if self.initial_positions.is_empty() {
            return Err(Error::InvalidParameter("scenario needs at least one agent"));
        }
        for &p in &self.initial_positions {
            if !p.is_finite() {
                return Err(Error::InvalidParameter("initial positions must be finite"));
            }
            if self.sim.boundary != BoundaryPolicy::Free {
                self.world.domain.check_contains(p)?;
            }
        }
        Ok(())
    }

    /// Run with the scenario's own seed.
    pub fn run(&self) -> Result<Trajectory> {
        self.run_seeded(self.sim.seed)
    }

    /// Run with an explicit seed (ensemble member).
    pub fn run_seeded(&self, seed: u64) -> Result<Trajectory> {
        self.validate()?;
        Stepper::new(self, seed).run()
    }
}

/// Recorded time series of one run.
///
/// Each sample holds the true (unfolded) agent positions, the norms of the
/// feedback commands computed from the state at that instant (contraction
/// and noise excluded), and the spectral coverage metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dt: f64,
    agent_count: usize,
    times: Vec<f64>,
    positions: Vec<Vec<Vec2>>,
    control_norms: Vec<Vec<f64>>,
    metrics: Vec<f64>,
    boundary_crossings: u64,
}

impl Trajectory {
    /// Assemble a trajectory from raw rows, checking alignment.
    pub fn from_parts(
        dt: f64,
        times: Vec<f64>,
        positions: Vec<Vec<Vec2>>,
        control_norms: Vec<Vec<f64>>,
        metrics: Vec<f64>,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter("trajectory dt must be finite and positive"));
        }
        if times.is_empty() {
            return Err(Error::InvalidParameter("trajectory needs at least one sample"));
        }
        if positions.len() != times.len()
            || control_norms.len() != times.len()
            || metrics.len() != times.len()
        {
            return Err(Error::InvalidParameter("trajectory rows must align with times"));
        }
        let agent_count = positions[0].len();
        if agent_count == 0 {
            return Err(Error::InvalidParameter("trajectory needs at least one agent"));
        }
        for (ps, ns) in positions.iter().zip(&control_norms) {
            if ps.len() != agent_count || ns.len() != agent_count {
                return Err(Error::InvalidParameter("trajectory rows must align across agents"));
            }
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("trajectory times must increase strictly"));
        }
        Ok(Trajectory {
            dt,
            agent_count,
            times,
            positions,
            control_norms,
            metrics,
            boundary_crossings: 0,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.times.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    #[inline]
    pub fn agent_count(&self) -> usize {
        self.agent_count
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    #[inline]
    pub fn metrics(&self) -> &[f64] {
        &self.metrics
    }

    /// Positions of all agents at sample `i`.
    #[inline]
    pub fn positions(&self, sample: usize) -> &[Vec2] {
        &self.positions[sample]
    }

    /// Feedback-command norms of all agents at sample `i`.
    #[inline]
    pub fn control_norms(&self, sample: usize) -> &[f64] {
        &self.control_norms[sample]
    }

    #[inline]
    pub fn position(&self, sample: usize, agent: usize) -> Vec2 {
        self.positions[sample][agent]
    }

    /// One agent's position series.
    pub fn agent_track(&self, agent: usize) -> Result<Vec<Vec2>> {
        if agent >= self.agent_count {
            return Err(Error::AgentCountMismatch { expected: self.agent_count, got: agent });
        }
        Ok(self.positions.iter().map(|row| row[agent]).collect())
    }

    #[inline]
    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// How many integration sub-steps left the rectangle before boundary
    /// handling (always 0 for runs that never touch a wall).
    #[inline]
    pub fn boundary_crossings(&self) -> u64 {
        self.boundary_crossings
    }
}

fn apply_boundary(domain: &RectDomain, policy: BoundaryPolicy, p: Vec2) -> Vec2 {
    match policy {
        BoundaryPolicy::Reflect => domain.fold(p),
        BoundaryPolicy::Project => domain.clamp(p),
        BoundaryPolicy::Free => p,
    }
}

struct Stepper<'a> {
    scenario: &'a Scenario,
    rngs: Vec<ChaCha12Rng>,
    /// True positions, possibly outside the rectangle under `Free`.
    positions: Vec<Vec2>,
    /// Folded images used for every basis evaluation.
    eval_positions: Vec<Vec2>,
    acc: CoverageAccumulator,
    tables: AxisTables,
    noise_scale: f64,
    boundary_crossings: u64,
}

impl<'a> Stepper<'a> {
    fn new(scenario: &'a Scenario, seed: u64) -> Self {
        let n = scenario.initial_positions.len();
        let domain = scenario.world.domain;
        let rngs = (0..n)
            .map(|i| {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                rng
            })
            .collect();
        let positions = scenario.initial_positions.clone();
        let eval_positions = positions.iter().map(|&p| domain.fold(p)).collect();
        let acc = CoverageAccumulator::new(&scenario.world.modes, n)
            .expect("agent count checked by validate");
        let tables = AxisTables::new(&scenario.world.modes);
        let noise_scale = scenario.control.noise_sigma() * math::sqrt(scenario.sim.dt);
        Stepper {
            scenario,
            rngs,
            positions,
            eval_positions,
            acc,
            tables,
            noise_scale,
            boundary_crossings: 0,
        }
    }

    fn run(mut self) -> Result<Trajectory> {
        let world = &self.scenario.world;
        let cfg = &self.scenario.control;
        let sim = self.scenario.sim;
        let domain = world.domain;
        let n_agents = self.positions.len();
        let n_steps = sim.step_count();
        let stride = u64::from(sim.record_stride);

        let sample_estimate = (n_steps / stride + 2) as usize;
        let mut times = Vec::with_capacity(sample_estimate);
        let mut positions = Vec::with_capacity(sample_estimate);
        let mut control_norms = Vec::with_capacity(sample_estimate);
        let mut metrics = Vec::with_capacity(sample_estimate);

        for step in 0..n_steps {
            let c = self.acc.time_averages(&world.modes, &domain, &self.eval_positions)?;
            let recording = step % stride == 0;
            let mut norms = if recording { Vec::with_capacity(n_agents) } else { Vec::new() };
            if recording {
                times.push(step as f64 * sim.dt);
                positions.push(self.positions.clone());
                metrics.push(ergodicity_metric(&c, &world.mu, &world.modes)?);
            }

            for i in 0..n_agents {
                self.tables.fill(self.eval_positions[i], &domain);
                let b = gradient_from_tables(&world.modes, &domain, &c, &world.mu, &self.tables);
                let u = feedback_control(cfg, b);
                if recording {
                    norms.push(u.norm());
                }
                // Left-endpoint coverage slab at the pre-move position.
                self.acc.add_agent_slab(&world.modes, &self.tables, sim.dt);

                let v = drift_with_control(cfg, u, self.positions[i]);
                let mut p = self.positions[i] + v * sim.dt;
                if self.noise_scale > 0.0 {
                    let zx: f64 = StandardNormal.sample(&mut self.rngs[i]);
                    let zy: f64 = StandardNormal.sample(&mut self.rngs[i]);
                    p += Vec2::new(zx, zy) * self.noise_scale;
                }
                if !p.is_finite() {
                    return Err(Error::NumericalFailure { step });
                }
                if !domain.contains(p) {
                    self.boundary_crossings += 1;
                }
                let bounded = apply_boundary(&domain, sim.boundary, p);
                self.positions[i] = bounded;
                self.eval_positions[i] = match sim.boundary {
                    BoundaryPolicy::Free => domain.fold(bounded),
                    _ => bounded,
                };
            }
            self.acc.advance(sim.dt);

            if recording {
                control_norms.push(norms);
            }
        }

        // Final state, always recorded.
        let c = self.acc.time_averages(&world.modes, &domain, &self.eval_positions)?;
        times.push(n_steps as f64 * sim.dt);
        positions.push(self.positions.clone());
        metrics.push(ergodicity_metric(&c, &world.mu, &world.modes)?);
        let mut norms = Vec::with_capacity(n_agents);
        for i in 0..n_agents {
            self.tables.fill(self.eval_positions[i], &domain);
            let b = gradient_from_tables(&world.modes, &domain, &c, &world.mu, &self.tables);
            norms.push(feedback_control(cfg, b).norm());
        }
        control_norms.push(norms);

        let mut traj = Trajectory::from_parts(sim.dt, times, positions, control_norms, metrics)?;
        traj.boundary_crossings = self.boundary_crossings;
        Ok(traj)
    }
}
