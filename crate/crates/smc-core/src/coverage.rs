//! Running time-averaged basis coefficients of an agent ensemble.

use alloc::vec;
use alloc::vec::Vec;

use crate::spectral::{AxisTables, ModeSet, RectDomain, SpectralCoefficients};
use crate::{Error, Result, Vec2};

/// Left-endpoint accumulator for the empirical coverage coefficients
/// `c_k(t) = (1 / (N t)) * integral over [0, t] of sum_j f_k(x_j(s)) ds`.
///
/// Each call to [`CoverageAccumulator::accumulate`] contributes one
/// rectangle-rule slab evaluated at the positions held at the start of the
/// step, and advances the accumulated time by `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageAccumulator {
    sums: Vec<f64>,
    elapsed: f64,
    agent_count: usize,
}

impl CoverageAccumulator {
    pub fn new(modes: &ModeSet, agent_count: usize) -> Result<Self> {
        if agent_count == 0 {
            return Err(Error::InvalidParameter("coverage needs at least one agent"));
        }
        Ok(CoverageAccumulator { sums: vec![0.0; modes.len()], elapsed: 0.0, agent_count })
    }

    #[inline]
    pub fn agent_count(&self) -> usize {
        self.agent_count
    }

    /// Total accumulated time.
    #[inline]
    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    /// Raw per-mode integrals `S_k`.
    #[inline]
    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// Add one rectangle-rule slab of length `dt` at the given positions.
    pub fn accumulate(
        &mut self,
        modes: &ModeSet,
        domain: &RectDomain,
        positions: &[Vec2],
        dt: f64,
    ) -> Result<()> {
        self.check_alignment(modes, positions)?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter("accumulation step must be finite and positive"));
        }
        let mut tables = AxisTables::new(modes);
        for &p in positions {
            domain.check_contains(p)?;
            tables.fill(p, domain);
            self.add_agent_slab(modes, &tables, dt);
        }
        self.elapsed += dt;
        Ok(())
    }

    /// Fused-path variant: add one agent's slab from pre-filled tables.
    pub(crate) fn add_agent_slab(&mut self, modes: &ModeSet, tables: &AxisTables, dt: f64) {
        let ky = modes.ky() as usize;
        for m in 0..modes.kx() as usize {
            let cm = tables.cx[m];
            let row = &mut self.sums[m * ky..(m + 1) * ky];
            for (n, slot) in row.iter_mut().enumerate() {
                *slot += dt * (cm * tables.cy[n]);
            }
        }
    }

    /// Fused-path variant: advance time after all agents contributed.
    pub(crate) fn advance(&mut self, dt: f64) {
        self.elapsed += dt;
    }

    /// Time-averaged coefficients.
    ///
    /// At `t = 0` there is no history yet and the average degenerates to
    /// the instantaneous ensemble mean of `f_k` at the current positions,
    /// which is also its limit as `t` shrinks to zero.
    pub fn time_averages(
        &self,
        modes: &ModeSet,
        domain: &RectDomain,
        positions: &[Vec2],
    ) -> Result<SpectralCoefficients> {
        self.check_alignment(modes, positions)?;
        let mut out = SpectralCoefficients::zeros(modes);
        if self.elapsed == 0.0 {
            let mut tables = AxisTables::new(modes);
            let inv_n = 1.0 / self.agent_count as f64;
            let ky = modes.ky() as usize;
            for &p in positions {
                domain.check_contains(p)?;
                tables.fill(p, domain);
                let values = out.values_mut();
                for m in 0..modes.kx() {
                    for n in 0..modes.ky() {
                        values[m as usize * ky + n as usize] += tables.eval(m, n);
                    }
                }
            }
            for v in out.values_mut() {
                *v *= inv_n;
            }
        } else {
            let scale = 1.0 / (self.agent_count as f64 * self.elapsed);
            for (slot, &s) in out.values_mut().iter_mut().zip(&self.sums) {
                *slot = s * scale;
            }
        }
        Ok(out)
    }

    fn check_alignment(&self, modes: &ModeSet, positions: &[Vec2]) -> Result<()> {
        if self.sums.len() != modes.len() {
            return Err(Error::ModeCountMismatch { expected: self.sums.len(), got: modes.len() });
        }
        if positions.len() != self.agent_count {
            return Err(Error::AgentCountMismatch {
                expected: self.agent_count,
                got: positions.len(),
            });
        }
        Ok(())
    }
}
