//! Coverage feedback laws: the spectral mismatch gradient and the
//! unit-saturated controllers built on it.

use crate::math;
use crate::spectral::{AxisTables, ModeSet, RectDomain, SpectralCoefficients};
use crate::{Error, Result, Vec2};

/// Which feedback law drives the agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlVariant {
    /// `u = -u_max B / |B|`, frozen to zero when `|B|` falls below the
    /// stall tolerance.
    Classical,
    /// `u = -u_max B / sqrt(|B|^2 + epsilon^2)`, smooth near `B = 0`.
    Regularized,
    /// Regularized law plus additive white noise of strength `sigma`.
    Stochastic,
    /// Stochastic law plus a linear pull of rate `k_contraction` toward
    /// `contraction_center`.
    StochasticContraction,
}

/// Parameters shared by all feedback variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlConfig {
    pub variant: ControlVariant,
    /// Speed bound; the feedback never exceeds it.
    pub u_max: f64,
    /// Regularization length for the non-classical variants.
    pub epsilon: f64,
    /// Noise strength for the stochastic variants.
    pub sigma: f64,
    /// Contraction rate (StochasticContraction only).
    pub k_contraction: f64,
    /// Contraction target (StochasticContraction only).
    pub contraction_center: Vec2,
    /// Gradient norms at or below this freeze the classical law.
    pub stall_tol: f64,
}

/// Stall threshold used when none is given explicitly: small enough that
/// only floating-point shadows of an exact zero gradient trip it.
pub fn default_stall_tol(u_max: f64) -> f64 {
    1.0e-12 * u_max
}

impl ControlConfig {
    pub fn classical(u_max: f64) -> Self {
        ControlConfig {
            variant: ControlVariant::Classical,
            u_max,
            epsilon: 0.0,
            sigma: 0.0,
            k_contraction: 0.0,
            contraction_center: Vec2::ZERO,
            stall_tol: default_stall_tol(u_max),
        }
    }

    pub fn regularized(u_max: f64, epsilon: f64) -> Self {
        ControlConfig {
            variant: ControlVariant::Regularized,
            epsilon,
            ..Self::classical(u_max)
        }
    }

    pub fn stochastic(u_max: f64, epsilon: f64, sigma: f64) -> Self {
        ControlConfig {
            variant: ControlVariant::Stochastic,
            epsilon,
            sigma,
            ..Self::classical(u_max)
        }
    }

    pub fn stochastic_contraction(u_max: f64, epsilon: f64, sigma: f64, k: f64) -> Self {
        ControlConfig {
            variant: ControlVariant::StochasticContraction,
            epsilon,
            sigma,
            k_contraction: k,
            ..Self::classical(u_max)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_max.is_finite() && self.u_max > 0.0) {
            return Err(Error::InvalidParameter("u_max must be finite and positive"));
        }
        if !(self.stall_tol.is_finite() && self.stall_tol >= 0.0) {
            return Err(Error::InvalidParameter("stall_tol must be finite and non-negative"));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(Error::InvalidParameter("sigma must be finite and non-negative"));
        }
        if !self.contraction_center.is_finite() {
            return Err(Error::InvalidParameter("contraction center must be finite"));
        }
        match self.variant {
            ControlVariant::Classical => {}
            ControlVariant::Regularized => self.require_epsilon()?,
            ControlVariant::Stochastic => {
                self.require_epsilon()?;
                if self.sigma == 0.0 {
                    return Err(Error::InvalidParameter(
                        "the stochastic variant needs sigma > 0",
                    ));
                }
            }
            ControlVariant::StochasticContraction => {
                // sigma = 0 stays legal here: the contraction dynamics are
                // also the deterministic model the decay bound applies to.
                self.require_epsilon()?;
                if !(self.k_contraction.is_finite() && self.k_contraction > 0.0) {
                    return Err(Error::InvalidParameter(
                        "contraction needs k_contraction > 0",
                    ));
                }
            }
        }
        Ok(())
    }

    fn require_epsilon(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(
                "non-classical variants need epsilon > 0",
            ));
        }
        Ok(())
    }

    /// Noise strength actually applied by the simulator.
    pub fn noise_sigma(&self) -> f64 {
        match self.variant {
            ControlVariant::Classical | ControlVariant::Regularized => 0.0,
            ControlVariant::Stochastic | ControlVariant::StochasticContraction => self.sigma,
        }
    }
}

/// Weighted mismatch gradient at one agent position:
/// `B = sum_k lambda_k grad f_k(p) (c_k - mu_k)`.
pub fn spectral_gradient(
    modes: &ModeSet,
    domain: &RectDomain,
    c: &SpectralCoefficients,
    mu: &SpectralCoefficients,
    position: Vec2,
) -> Result<Vec2> {
    if c.len() != modes.len() {
        return Err(Error::ModeCountMismatch { expected: modes.len(), got: c.len() });
    }
    if mu.len() != modes.len() {
        return Err(Error::ModeCountMismatch { expected: modes.len(), got: mu.len() });
    }
    domain.check_contains(position)?;
    let mut tables = AxisTables::new(modes);
    tables.fill(position, domain);
    Ok(gradient_from_tables(modes, domain, c, mu, &tables))
}

/// Fused-path gradient from pre-filled tables.
///
/// Modes are consumed as transpose pairs `{(m, n), (n, m)}`, each pair's two
/// contributions added together before joining the running sum. For an
/// exchange-symmetric state on a square domain the x and y accumulations
/// then see identical addend sequences, so the gradient on the diagonal has
/// bit-equal components and the diagonal stays exactly invariant under the
/// normalized laws.
pub(crate) fn gradient_from_tables(
    modes: &ModeSet,
    domain: &RectDomain,
    c: &SpectralCoefficients,
    mu: &SpectralCoefficients,
    tables: &AxisTables,
) -> Vec2 {
    let kx = modes.kx();
    let ky = modes.ky();
    let lambdas = modes.lambdas();
    let cs = c.values();
    let mus = mu.values();

    let term = |m: u32, n: u32| -> Vec2 {
        let idx = (m as usize) * (ky as usize) + n as usize;
        let scale = lambdas[idx] * (cs[idx] - mus[idx]);
        tables.grad(m, n, domain) * scale
    };

    let mut b = Vec2::ZERO;
    for m in 0..kx {
        for n in 0..ky {
            if m == n {
                b += term(m, n);
            } else if m < n {
                if n < kx {
                    let t_a = term(m, n);
                    let t_b = term(n, m);
                    b += Vec2::new(t_a.x + t_b.x, t_a.y + t_b.y);
                } else {
                    b += term(m, n);
                }
            } else if m >= ky {
                // Transpose (n, m) is out of range, so this mode was not
                // covered by the pair pass.
                b += term(m, n);
            }
        }
    }
    b
}

/// Hard-normalized law: full speed against the gradient, frozen at zero
/// when the gradient is numerically indistinguishable from zero.
pub fn classical_control(b: Vec2, u_max: f64, stall_tol: f64) -> Vec2 {
    let norm = b.norm();
    if norm <= stall_tol {
        Vec2::ZERO
    } else {
        b * (-u_max / norm)
    }
}

/// Smooth saturated law `-u_max B / sqrt(|B|^2 + epsilon^2)`.
///
/// The output norm is `u_max |B| / sqrt(|B|^2 + epsilon^2)`, strictly below
/// `u_max` whenever `epsilon^2` is resolvable against `|B|^2`, and the
/// direction is exactly antiparallel to `B`.
pub fn regularized_control(b: Vec2, u_max: f64, epsilon: f64) -> Vec2 {
    let denom = math::hypot(b.norm(), epsilon);
    b * (-u_max / denom)
}

/// Feedback command for the configured variant (no contraction term).
pub fn feedback_control(cfg: &ControlConfig, b: Vec2) -> Vec2 {
    match cfg.variant {
        ControlVariant::Classical => classical_control(b, cfg.u_max, cfg.stall_tol),
        ControlVariant::Regularized
        | ControlVariant::Stochastic
        | ControlVariant::StochasticContraction => {
            regularized_control(b, cfg.u_max, cfg.epsilon)
        }
    }
}

/// Deterministic part of the state derivative at `position`.
pub fn drift(cfg: &ControlConfig, b: Vec2, position: Vec2) -> Vec2 {
    drift_with_control(cfg, feedback_control(cfg, b), position)
}

/// Drift given an already-computed feedback command.
pub(crate) fn drift_with_control(cfg: &ControlConfig, u: Vec2, position: Vec2) -> Vec2 {
    match cfg.variant {
        ControlVariant::StochasticContraction => {
            u - (position - cfg.contraction_center) * cfg.k_contraction
        }
        _ => u,
    }
}
