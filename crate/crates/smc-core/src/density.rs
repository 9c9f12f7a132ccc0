//! Gaussian-mixture target densities, renormalized over the domain.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math;
use crate::spectral::{QuadratureGrid, RectDomain};
use crate::{Error, Result, Vec2};

/// One isotropic Gaussian bump `weight * N(center, sigma^2 I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub center: Vec2,
    pub sigma: f64,
}

impl GaussianComponent {
    /// Unnormalized planar Gaussian value at `p`.
    #[inline]
    fn eval(&self, p: Vec2) -> f64 {
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        let two_var = 2.0 * self.sigma * self.sigma;
        self.weight * math::exp(-(dx * dx + dy * dy) / two_var) / (PI * two_var)
    }
}

/// Mixture of isotropic Gaussians with unit mass over the domain.
///
/// The free-plane mixture loses the mass of its tails outside the
/// rectangle, so the constructor renormalizes by the midpoint-quadrature
/// integral over the domain. [`GaussianMixture::eval`] then integrates to
/// one on the same grid by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    components: Vec<GaussianComponent>,
    domain: RectDomain,
    grid: QuadratureGrid,
    /// Quadrature mass of the unnormalized sum over the domain.
    mass: f64,
}

impl GaussianMixture {
    pub fn new(
        components: Vec<GaussianComponent>,
        domain: RectDomain,
        grid: QuadratureGrid,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("mixture needs at least one component"));
        }
        for c in &components {
            if !(c.weight.is_finite() && c.weight > 0.0) {
                return Err(Error::InvalidParameter("component weights must be finite and positive"));
            }
            if !(c.sigma.is_finite() && c.sigma > 0.0) {
                return Err(Error::InvalidParameter("component sigmas must be finite and positive"));
            }
            if !c.center.is_finite() {
                return Err(Error::InvalidParameter("component centers must be finite"));
            }
        }
        let mut mixture = GaussianMixture { components, domain, grid, mass: 1.0 };
        let mass = mixture.raw_quadrature_mass();
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::DegenerateDensity);
        }
        mixture.mass = mass;
        Ok(mixture)
    }

    /// Midpoint-rule integral of the unnormalized component sum.
    fn raw_quadrature_mass(&self) -> f64 {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let (lx, ly) = (self.domain.lx(), self.domain.ly());
        let mut total = 0.0;
        for j in 0..ny {
            let y = (j as f64 + 0.5) / ny as f64 * ly;
            let mut line = 0.0;
            for i in 0..nx {
                let x = (i as f64 + 0.5) / nx as f64 * lx;
                line += self.raw_eval(Vec2::new(x, y));
            }
            total += line;
        }
        total * (lx / nx as f64) * (ly / ny as f64)
    }

    /// Component sum before renormalization, combined pairwise so that the
    /// summation tree commutes with the mirror symmetries of symmetric
    /// layouts (reflected evaluation points then give bit-equal results).
    fn raw_eval(&self, p: Vec2) -> f64 {
        fn tree(values: &mut dyn Iterator<Item = f64>, count: usize) -> f64 {
            match count {
                0 => 0.0,
                1 => values.next().unwrap(),
                _ => {
                    let left = count / 2;
                    tree(values, left) + tree(values, count - left)
                }
            }
        }
        let mut evals = self.components.iter().map(|c| c.eval(p));
        tree(&mut evals, self.components.len())
    }

    /// Normalized density value at `p`.
    ///
    /// Defined for any finite point (the mixture is a smooth function on
    /// the whole plane); only values on the domain carry mass meaning.
    #[inline]
    pub fn eval(&self, p: Vec2) -> f64 {
        self.raw_eval(p) / self.mass
    }

    #[inline]
    pub fn domain(&self) -> &RectDomain {
        &self.domain
    }

    #[inline]
    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    #[inline]
    pub fn grid(&self) -> QuadratureGrid {
        self.grid
    }

    /// Midpoint integral of the normalized density on an arbitrary grid.
    pub fn quadrature_integral(&self, grid: QuadratureGrid) -> f64 {
        let (nx, ny) = (grid.nx(), grid.ny());
        let (lx, ly) = (self.domain.lx(), self.domain.ly());
        let mut total = 0.0;
        for j in 0..ny {
            let y = (j as f64 + 0.5) / ny as f64 * ly;
            for i in 0..nx {
                let x = (i as f64 + 0.5) / nx as f64 * lx;
                total += self.eval(Vec2::new(x, y));
            }
        }
        total * (lx / nx as f64) * (ly / ny as f64)
    }
}

/// Four equal Gaussian bumps at the quarter points of the domain:
/// centers `(lx/4, ly/4)`, `(lx/4, 3ly/4)`, `(3lx/4, ly/4)`,
/// `(3lx/4, 3ly/4)`, each with weight `1/4` and common spread `sigma`.
pub fn make_quadrimodal(
    domain: RectDomain,
    sigma: f64,
    grid: QuadratureGrid,
) -> Result<GaussianMixture> {
    let (lx, ly) = (domain.lx(), domain.ly());
    let centers = [
        Vec2::new(0.25 * lx, 0.25 * ly),
        Vec2::new(0.25 * lx, 0.75 * ly),
        Vec2::new(0.75 * lx, 0.25 * ly),
        Vec2::new(0.75 * lx, 0.75 * ly),
    ];
    let components = centers
        .iter()
        .map(|&center| GaussianComponent { weight: 0.25, center, sigma })
        .collect();
    GaussianMixture::new(components, domain, grid)
}
