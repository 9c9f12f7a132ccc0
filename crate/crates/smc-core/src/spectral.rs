//! Cosine basis on a rectangle, spectral weights, target-coefficient
//! quadrature, and the coverage mismatch metric.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math::{self, cospi, sinpi};
use crate::{Error, Result, Vec2};

/// Axis-aligned rectangle `[0, lx] x [0, ly]` that all spatial quantities
/// live on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectDomain {
    lx: f64,
    ly: f64,
}

impl RectDomain {
    pub fn new(lx: f64, ly: f64) -> Result<Self> {
        if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidParameter("domain side lengths must be finite and positive"));
        }
        Ok(RectDomain { lx, ly })
    }

    #[inline]
    pub fn lx(&self) -> f64 {
        self.lx
    }

    #[inline]
    pub fn ly(&self) -> f64 {
        self.ly
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.lx == self.ly
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    /// True when the point lies in the closed rectangle.
    #[inline]
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= 0.0 && p.x <= self.lx && p.y >= 0.0 && p.y <= self.ly
    }

    #[inline]
    pub(crate) fn check_contains(&self, p: Vec2) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutsideDomain { x: p.x, y: p.y })
        }
    }

    /// Mirror-fold a point into the rectangle.
    ///
    /// Folding matches the even periodic extension of the cosine basis, so
    /// evaluating a basis function at `fold(p)` equals its analytic value at
    /// the unconstrained `p`. Points already inside pass through unchanged.
    pub fn fold(&self, p: Vec2) -> Vec2 {
        Vec2::new(fold_axis(p.x, self.lx), fold_axis(p.y, self.ly))
    }

    /// Clamp a point onto the rectangle, axis by axis.
    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.max(0.0).min(self.lx), p.y.max(0.0).min(self.ly))
    }
}

fn fold_axis(x: f64, l: f64) -> f64 {
    if (0.0..=l).contains(&x) {
        return x;
    }
    let period = 2.0 * l;
    let mut r = x % period;
    if r < 0.0 {
        r += period;
    }
    if r > l {
        r = period - r;
    }
    r
}

/// Index `(m, n)` of the basis function `cos(m pi x / lx) cos(n pi y / ly)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    pub m: u32,
    pub n: u32,
}

impl ModeIndex {
    #[inline]
    pub const fn new(m: u32, n: u32) -> Self {
        ModeIndex { m, n }
    }
}

/// Spectral weight `(1 + m^2 + n^2)^(-3/2)`.
///
/// Strictly positive and summable over the mode lattice; low modes dominate
/// the coverage metric so large-scale mismatch is corrected first.
pub fn lambda_weight(mode: ModeIndex) -> f64 {
    let s = 1.0 + f64::from(mode.m) * f64::from(mode.m) + f64::from(mode.n) * f64::from(mode.n);
    1.0 / (s * math::sqrt(s))
}

/// Ordered set of modes with their weights, row-major over
/// `0..kx` by `0..ky`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    kx: u32,
    ky: u32,
    modes: Vec<ModeIndex>,
    lambdas: Vec<f64>,
}

impl ModeSet {
    /// Full truncation with `kx * ky` modes and the default weights.
    pub fn rectangular(kx: u32, ky: u32) -> Result<Self> {
        Self::with_weights(kx, ky, lambda_weight)
    }

    /// Full truncation with caller-provided weights (must be positive).
    pub fn with_weights<W>(kx: u32, ky: u32, weight: W) -> Result<Self>
    where
        W: Fn(ModeIndex) -> f64,
    {
        if kx == 0 || ky == 0 {
            return Err(Error::InvalidParameter("mode counts must be at least 1 per axis"));
        }
        let count = (kx as usize) * (ky as usize);
        let mut modes = Vec::with_capacity(count);
        let mut lambdas = Vec::with_capacity(count);
        for m in 0..kx {
            for n in 0..ky {
                let mode = ModeIndex::new(m, n);
                let lam = weight(mode);
                if !(lam.is_finite() && lam > 0.0) {
                    return Err(Error::InvalidParameter("mode weights must be finite and positive"));
                }
                modes.push(mode);
                lambdas.push(lam);
            }
        }
        Ok(ModeSet { kx, ky, modes, lambdas })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    #[inline]
    pub fn kx(&self) -> u32 {
        self.kx
    }

    #[inline]
    pub fn ky(&self) -> u32 {
        self.ky
    }

    #[inline]
    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    #[inline]
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Flat index of `(m, n)` in the row-major layout.
    #[inline]
    pub fn index_of(&self, m: u32, n: u32) -> Option<usize> {
        (m < self.kx && n < self.ky).then(|| (m as usize) * (self.ky as usize) + n as usize)
    }

    /// Largest mode index on either axis, for quadrature resolution checks.
    pub fn max_index(&self) -> u32 {
        (self.kx - 1).max(self.ky - 1)
    }
}

/// Coefficient vector aligned with a [`ModeSet`]'s layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients {
    values: Vec<f64>,
}

impl SpectralCoefficients {
    pub fn zeros(modes: &ModeSet) -> Self {
        SpectralCoefficients { values: vec![0.0; modes.len()] }
    }

    pub fn from_values(values: Vec<f64>, modes: &ModeSet) -> Result<Self> {
        if values.len() != modes.len() {
            return Err(Error::ModeCountMismatch { expected: modes.len(), got: values.len() });
        }
        Ok(SpectralCoefficients { values })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

impl core::ops::Index<usize> for SpectralCoefficients {
    type Output = f64;
    #[inline]
    fn index(&self, idx: usize) -> &f64 {
        &self.values[idx]
    }
}

#[inline]
fn axis_cos(m: u32, u: f64) -> f64 {
    cospi(f64::from(m) * u)
}

#[inline]
fn axis_sin(m: u32, u: f64) -> f64 {
    sinpi(f64::from(m) * u)
}

#[inline]
fn grad_component(m: u32, l: f64, s: f64, c: f64) -> f64 {
    -(f64::from(m) * PI / l) * (s * c)
}

/// Evaluate `f_mn(p) = cos(m pi x / lx) cos(n pi y / ly)`.
///
/// Unnormalized: `f_00 = 1` and every value lies in `[-1, 1]`.
pub fn basis_eval(mode: ModeIndex, point: Vec2, domain: &RectDomain) -> Result<f64> {
    domain.check_contains(point)?;
    let u = point.x / domain.lx();
    let v = point.y / domain.ly();
    Ok(axis_cos(mode.m, u) * axis_cos(mode.n, v))
}

/// Evaluate the spatial gradient of `f_mn`.
///
/// The component normal to each domain edge vanishes exactly there (the
/// basis satisfies zero-flux boundary conditions), and both components
/// vanish exactly at the four corners.
pub fn basis_grad(mode: ModeIndex, point: Vec2, domain: &RectDomain) -> Result<Vec2> {
    domain.check_contains(point)?;
    let u = point.x / domain.lx();
    let v = point.y / domain.ly();
    let (cu, su) = (axis_cos(mode.m, u), axis_sin(mode.m, u));
    let (cv, sv) = (axis_cos(mode.n, v), axis_sin(mode.n, v));
    Ok(Vec2::new(
        grad_component(mode.m, domain.lx(), su, cv),
        grad_component(mode.n, domain.ly(), sv, cu),
    ))
}

/// Per-point cosine/sine tables shared by every hot loop, so that all
/// evaluation paths agree bit for bit.
#[derive(Debug, Clone)]
pub(crate) struct AxisTables {
    pub cx: Vec<f64>,
    pub sx: Vec<f64>,
    pub cy: Vec<f64>,
    pub sy: Vec<f64>,
}

impl AxisTables {
    pub fn new(modes: &ModeSet) -> Self {
        AxisTables {
            cx: vec![0.0; modes.kx() as usize],
            sx: vec![0.0; modes.kx() as usize],
            cy: vec![0.0; modes.ky() as usize],
            sy: vec![0.0; modes.ky() as usize],
        }
    }

    pub fn fill(&mut self, point: Vec2, domain: &RectDomain) {
        let u = point.x / domain.lx();
        let v = point.y / domain.ly();
        for (m, slot) in self.cx.iter_mut().enumerate() {
            *slot = axis_cos(m as u32, u);
        }
        for (m, slot) in self.sx.iter_mut().enumerate() {
            *slot = axis_sin(m as u32, u);
        }
        for (n, slot) in self.cy.iter_mut().enumerate() {
            *slot = axis_cos(n as u32, v);
        }
        for (n, slot) in self.sy.iter_mut().enumerate() {
            *slot = axis_sin(n as u32, v);
        }
    }

    #[inline]
    pub fn eval(&self, m: u32, n: u32) -> f64 {
        self.cx[m as usize] * self.cy[n as usize]
    }

    #[inline]
    pub fn grad(&self, m: u32, n: u32, domain: &RectDomain) -> Vec2 {
        Vec2::new(
            grad_component(m, domain.lx(), self.sx[m as usize], self.cy[n as usize]),
            grad_component(n, domain.ly(), self.sy[n as usize], self.cx[m as usize]),
        )
    }
}

/// Tensor-product midpoint quadrature resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureGrid {
    nx: u32,
    ny: u32,
}

/// Default quadrature resolution per axis.
pub const DEFAULT_QUADRATURE_POINTS: u32 = 512;

/// Minimum midpoint samples per half-wavelength of the highest mode.
const SAMPLES_PER_HALF_WAVE: u32 = 4;

impl QuadratureGrid {
    pub fn new(nx: u32, ny: u32) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidParameter("quadrature grid needs at least one point per axis"));
        }
        Ok(QuadratureGrid { nx, ny })
    }

    #[inline]
    pub fn nx(&self) -> u32 {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> u32 {
        self.ny
    }

    /// Reject grids that undersample the highest requested mode.
    pub fn check_resolves(&self, modes: &ModeSet) -> Result<()> {
        let needed = SAMPLES_PER_HALF_WAVE * modes.max_index().max(1);
        let got = self.nx.min(self.ny);
        if got < needed {
            return Err(Error::ResolutionTooCoarse { needed, got });
        }
        Ok(())
    }

    /// Midpoint node fractions `(i + 1/2) / n` along one axis.
    fn fractions(n: u32) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| (i as f64 + 0.5) / n as f64)
    }
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid { nx: DEFAULT_QUADRATURE_POINTS, ny: DEFAULT_QUADRATURE_POINTS }
    }
}

/// Project a density onto the basis: `mu_k = integral of f_k * rho over
/// the domain`, by tensor-product midpoint quadrature.
///
/// The sum is evaluated separably (per-axis cosine tables), which is
/// exact reordering of the same products, so the cost is
/// `O(grid * kx + grid_y * kx * ky)` rather than `O(grid * kx * ky)`.
pub fn target_coefficients<F>(
    density: F,
    modes: &ModeSet,
    domain: &RectDomain,
    grid: QuadratureGrid,
) -> Result<SpectralCoefficients>
where
    F: Fn(Vec2) -> f64,
{
    grid.check_resolves(modes)?;
    let (nx, ny) = (grid.nx() as usize, grid.ny() as usize);
    let (kx, ky) = (modes.kx() as usize, modes.ky() as usize);

    let us: Vec<f64> = QuadratureGrid::fractions(grid.nx()).collect();
    let vs: Vec<f64> = QuadratureGrid::fractions(grid.ny()).collect();

    // cos_x[i * kx + m] = cos(m pi u_i), likewise for the y axis; the
    // mode index is kept contiguous so the accumulation loops stream.
    let mut cos_x = vec![0.0; nx * kx];
    for (i, &u) in us.iter().enumerate() {
        for m in 0..kx {
            cos_x[i * kx + m] = axis_cos(m as u32, u);
        }
    }
    let mut cos_y = vec![0.0; ny * ky];
    for (j, &v) in vs.iter().enumerate() {
        for n in 0..ky {
            cos_y[j * ky + n] = axis_cos(n as u32, v);
        }
    }

    let mut mu = vec![0.0; kx * ky];
    let mut row = vec![0.0; kx];
    for (j, &v) in vs.iter().enumerate() {
        let y = v * domain.ly();
        row.fill(0.0);
        for (i, &u) in us.iter().enumerate() {
            let r = density(Vec2::new(u * domain.lx(), y));
            if !r.is_finite() {
                return Err(Error::InvalidParameter("density evaluated to a non-finite value"));
            }
            for (acc, &c) in row.iter_mut().zip(&cos_x[i * kx..(i + 1) * kx]) {
                *acc += c * r;
            }
        }
        let cy = &cos_y[j * ky..(j + 1) * ky];
        for m in 0..kx {
            let rm = row[m];
            for (slot, &c) in mu[m * ky..(m + 1) * ky].iter_mut().zip(cy) {
                *slot += rm * c;
            }
        }
    }

    let cell = (domain.lx() / grid.nx() as f64) * (domain.ly() / grid.ny() as f64);
    for value in &mut mu {
        *value *= cell;
    }
    SpectralCoefficients::from_values(mu, modes)
}

/// Weighted squared mismatch between two coefficient vectors:
/// `sum_k lambda_k (c_k - mu_k)^2`.
pub fn ergodicity_metric(
    c: &SpectralCoefficients,
    mu: &SpectralCoefficients,
    modes: &ModeSet,
) -> Result<f64> {
    if c.len() != modes.len() {
        return Err(Error::ModeCountMismatch { expected: modes.len(), got: c.len() });
    }
    if mu.len() != modes.len() {
        return Err(Error::ModeCountMismatch { expected: modes.len(), got: mu.len() });
    }
    let mut total = 0.0;
    for ((&ck, &mk), &lam) in c.values().iter().zip(mu.values()).zip(modes.lambdas()) {
        let d = ck - mk;
        total += lam * d * d;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn square2000() -> RectDomain {
        RectDomain::new(2000.0, 2000.0).unwrap()
    }

    #[test]
    fn domain_rejects_bad_sides() {
        assert!(RectDomain::new(0.0, 1.0).is_err());
        assert!(RectDomain::new(10.0, -1.0).is_err());
        assert!(RectDomain::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn fold_matches_iterated_mirroring() {
        let d = square2000();
        // Oracle: reflect across the nearest violated edge until inside.
        fn mirror_until_inside(mut x: f64, l: f64) -> f64 {
            for _ in 0..64 {
                if x < 0.0 {
                    x = -x;
                } else if x > l {
                    x = 2.0 * l - x;
                } else {
                    return x;
                }
            }
            panic!("did not converge");
        }
        let samples = [-3.0, 4003.0, 2000.3, -0.4, 5999.9, 12345.6, 2000.0, 0.0, 1999.9];
        for &x in &samples {
            let want = mirror_until_inside(x, 2000.0);
            let got = d.fold(Vec2::new(x, 500.0)).x;
            assert!((got - want).abs() < 1e-9, "fold({x}) = {got}, want {want}");
        }
        assert_eq!(d.fold(Vec2::new(4003.0, 7.0)), Vec2::new(3.0, 7.0));
    }

    #[test]
    fn fold_is_identity_inside() {
        let d = square2000();
        let p = Vec2::new(123.456, 1999.999);
        assert_eq!(d.fold(p), p);
    }

    #[test]
    fn clamp_projects_componentwise() {
        let d = square2000();
        assert_eq!(d.clamp(Vec2::new(-5.0, 2500.0)), Vec2::new(0.0, 2000.0));
        assert_eq!(d.clamp(Vec2::new(700.0, 800.0)), Vec2::new(700.0, 800.0));
    }

    #[test]
    fn constant_mode_is_one_everywhere() {
        let d = square2000();
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..50 {
            let p = Vec2::new(rng.random_range(0.0..2000.0), rng.random_range(0.0..2000.0));
            assert_eq!(basis_eval(ModeIndex::new(0, 0), p, &d).unwrap(), 1.0);
        }
    }

    #[test]
    fn basis_values_at_landmark_points() {
        let d = square2000();
        // Half-period arguments are exact zeros.
        assert_eq!(basis_eval(ModeIndex::new(2, 3), Vec2::new(500.0, 1500.0), &d).unwrap(), 0.0);
        // Full-period argument at the far edge.
        assert_eq!(basis_eval(ModeIndex::new(1, 0), Vec2::new(2000.0, 321.0), &d).unwrap(), -1.0);
        // Generic point against an independently computed product.
        let d2 = RectDomain::new(2000.0, 1000.0).unwrap();
        let got = basis_eval(ModeIndex::new(2, 1), Vec2::new(700.0, 300.0), &d2).unwrap();
        let want = (2.0 * PI * 700.0 / 2000.0).cos() * (PI * 300.0 / 1000.0).cos();
        assert!((got - want).abs() < 1e-14, "got {got}, want {want}");
    }

    #[test]
    fn eval_outside_domain_errors() {
        let d = square2000();
        let err = basis_eval(ModeIndex::new(1, 1), Vec2::new(-1.0, 5.0), &d).unwrap_err();
        assert!(matches!(err, Error::OutsideDomain { .. }));
        assert!(basis_grad(ModeIndex::new(1, 1), Vec2::new(3.0, 2000.1), &d).is_err());
    }

    #[test]
    fn gradient_vanishes_exactly_at_corners() {
        let d = square2000();
        let corners = [
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 2000.0),
            Vec2::new(2000.0, 0.0),
            Vec2::new(2000.0, 2000.0),
        ];
        for m in 0..6 {
            for n in 0..6 {
                for &p in &corners {
                    let g = basis_grad(ModeIndex::new(m, n), p, &d).unwrap();
                    assert_eq!(g, Vec2::ZERO, "mode ({m},{n}) at {p:?}");
                }
            }
        }
    }

    #[test]
    fn normal_gradient_component_vanishes_exactly_on_edges() {
        let d = square2000();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let m = rng.random_range(0..25u32);
            let n = rng.random_range(0..25u32);
            let t = rng.random_range(0.0..2000.0);
            for x_edge in [0.0, 2000.0] {
                let g = basis_grad(ModeIndex::new(m, n), Vec2::new(x_edge, t), &d).unwrap();
                assert_eq!(g.x, 0.0, "mode ({m},{n}) x-edge {x_edge}");
            }
            for y_edge in [0.0, 2000.0] {
                let g = basis_grad(ModeIndex::new(m, n), Vec2::new(t, y_edge), &d).unwrap();
                assert_eq!(g.y, 0.0, "mode ({m},{n}) y-edge {y_edge}");
            }
        }
    }

    /// Central-difference oracle for the analytic gradient.
    fn fd_grad(mode: ModeIndex, p: Vec2, d: &RectDomain, h: f64) -> Vec2 {
        let fxp = basis_eval(mode, Vec2::new(p.x + h, p.y), d).unwrap();
        let fxm = basis_eval(mode, Vec2::new(p.x - h, p.y), d).unwrap();
        let fyp = basis_eval(mode, Vec2::new(p.x, p.y + h), d).unwrap();
        let fym = basis_eval(mode, Vec2::new(p.x, p.y - h), d).unwrap();
        Vec2::new((fxp - fxm) / (2.0 * h), (fyp - fym) / (2.0 * h))
    }

    #[test]
    fn gradient_matches_central_differences() {
        let d = square2000();
        let h = 1.0e-6 * 2000.0;
        let mut rng = StdRng::seed_from_u64(20240917);
        for _ in 0..200 {
            let mode = ModeIndex::new(rng.random_range(0..25), rng.random_range(0..25));
            let p = Vec2::new(rng.random_range(h..2000.0 - h), rng.random_range(h..2000.0 - h));
            let analytic = basis_grad(mode, p, &d).unwrap();
            let fd = fd_grad(mode, p, &d, h);
            let rel = (analytic - fd).norm() / analytic.norm().max(1e-12);
            assert!(rel < 1e-5, "mode {mode:?} at {p:?}: rel err {rel}");
        }
    }

    #[test]
    fn lambda_weights_match_independent_powers() {
        // Frozen reference values for two landmark modes.
        assert!((lambda_weight(ModeIndex::new(0, 1)) - 0.353_553_390_593_273_73).abs() < 1e-15);
        assert!((lambda_weight(ModeIndex::new(3, 4)) - 0.007_542_928_274_545_54).abs() < 1e-16);
        // Cross-check against powf for a sweep of modes.
        for m in 0..30u32 {
            for n in 0..30u32 {
                let lam = lambda_weight(ModeIndex::new(m, n));
                let want = (1.0 + f64::from(m).powi(2) + f64::from(n).powi(2)).powf(-1.5);
                assert!(lam > 0.0);
                assert!(
                    ((lam - want) / want).abs() < 1e-14,
                    "lambda({m},{n}) = {lam}, powf gives {want}"
                );
                assert_eq!(lam, lambda_weight(ModeIndex::new(n, m)));
            }
        }
    }

    #[test]
    fn mode_set_is_row_major() {
        let ms = ModeSet::rectangular(3, 2).unwrap();
        let order: Vec<(u32, u32)> = ms.modes().iter().map(|k| (k.m, k.n)).collect();
        assert_eq!(order, [(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]);
        assert_eq!(ms.index_of(2, 1), Some(5));
        assert_eq!(ms.index_of(3, 0), None);
        assert_eq!(ms.len(), 6);
        assert_eq!(ms.max_index(), 2);
    }

    #[test]
    fn mode_set_rejects_empty_axes_and_bad_weights() {
        assert!(ModeSet::rectangular(0, 5).is_err());
        assert!(ModeSet::with_weights(2, 2, |_| 0.0).is_err());
        assert!(ModeSet::with_weights(2, 2, |_| f64::NAN).is_err());
    }

    #[test]
    fn axis_tables_agree_with_scalar_paths_bitwise() {
        let d = square2000();
        let ms = ModeSet::rectangular(25, 25).unwrap();
        let mut tables = AxisTables::new(&ms);
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..20 {
            let p = Vec2::new(rng.random_range(0.0..2000.0), rng.random_range(0.0..2000.0));
            tables.fill(p, &d);
            for &mode in ms.modes() {
                let f_scalar = basis_eval(mode, p, &d).unwrap();
                let g_scalar = basis_grad(mode, p, &d).unwrap();
                assert_eq!(tables.eval(mode.m, mode.n), f_scalar);
                assert_eq!(tables.grad(mode.m, mode.n, &d), g_scalar);
            }
        }
    }

    #[test]
    fn quadrature_guard_rejects_coarse_grids() {
        let ms = ModeSet::rectangular(25, 25).unwrap();
        let coarse = QuadratureGrid::new(64, 64).unwrap();
        assert!(matches!(
            coarse.check_resolves(&ms),
            Err(Error::ResolutionTooCoarse { needed: 96, got: 64 })
        ));
        let fine = QuadratureGrid::new(96, 512).unwrap();
        assert!(fine.check_resolves(&ms).is_ok());
    }

    #[test]
    fn uniform_density_projects_onto_constant_mode_only() {
        let d = square2000();
        let ms = ModeSet::rectangular(9, 9).unwrap();
        let grid = QuadratureGrid::new(128, 128).unwrap();
        let area = d.area();
        let mu = target_coefficients(|_| 1.0 / area, &ms, &d, grid).unwrap();
        assert!((mu[ms.index_of(0, 0).unwrap()] - 1.0).abs() < 1e-9);
        for &mode in ms.modes().iter().skip(1) {
            let v = mu[ms.index_of(mode.m, mode.n).unwrap()];
            assert!(v.abs() < 1e-10, "mu({},{}) = {v}", mode.m, mode.n);
        }
    }

    #[test]
    fn separable_quadrature_matches_direct_double_sum() {
        // Direct O(grid * modes) summation as the oracle, written without
        // the half-period trig helpers.
        let d = RectDomain::new(2000.0, 1000.0).unwrap();
        let ms = ModeSet::rectangular(5, 4).unwrap();
        let grid = QuadratureGrid::new(64, 32).unwrap();
        let density = |p: Vec2| {
            let dx = (p.x - 700.0) / 400.0;
            let dy = (p.y - 600.0) / 300.0;
            (-(dx * dx + dy * dy)).exp() / 1.0e5
        };
        let mu = target_coefficients(density, &ms, &d, grid).unwrap();
        let (nx, ny) = (64, 32);
        let cell = (2000.0 / nx as f64) * (1000.0 / ny as f64);
        for &mode in ms.modes() {
            let mut want = 0.0;
            for j in 0..ny {
                let y = (j as f64 + 0.5) / ny as f64 * 1000.0;
                for i in 0..nx {
                    let x = (i as f64 + 0.5) / nx as f64 * 2000.0;
                    let f = (f64::from(mode.m) * PI * x / 2000.0).cos()
                        * (f64::from(mode.n) * PI * y / 1000.0).cos();
                    want += f * density(Vec2::new(x, y));
                }
            }
            want *= cell;
            let got = mu[ms.index_of(mode.m, mode.n).unwrap()];
            assert!(
                (got - want).abs() < 1e-12 * want.abs().max(1.0),
                "mode ({},{}): got {got}, want {want}",
                mode.m,
                mode.n
            );
        }
    }

    #[test]
    fn non_finite_density_is_rejected() {
        let d = square2000();
        let ms = ModeSet::rectangular(2, 2).unwrap();
        let grid = QuadratureGrid::new(16, 16).unwrap();
        let res = target_coefficients(|_| f64::NAN, &ms, &d, grid);
        assert!(res.is_err());
    }

    #[test]
    fn metric_is_zero_iff_matched_and_counts_weighted_squares() {
        let ms = ModeSet::rectangular(4, 4).unwrap();
        let mu = SpectralCoefficients::zeros(&ms);
        let c = SpectralCoefficients::zeros(&ms);
        assert_eq!(ergodicity_metric(&c, &mu, &ms).unwrap(), 0.0);

        let mut values = vec![0.0; ms.len()];
        values[ms.index_of(0, 0).unwrap()] = 0.5;
        let c = SpectralCoefficients::from_values(values, &ms).unwrap();
        // lambda(0,0) = 1, so the metric is exactly 0.25.
        assert_eq!(ergodicity_metric(&c, &mu, &ms).unwrap(), 0.25);
    }

    #[test]
    fn metric_rejects_misaligned_vectors() {
        let ms = ModeSet::rectangular(4, 4).unwrap();
        let other = ModeSet::rectangular(3, 3).unwrap();
        let c = SpectralCoefficients::zeros(&other);
        let mu = SpectralCoefficients::zeros(&ms);
        assert!(matches!(
            ergodicity_metric(&c, &mu, &ms),
            Err(Error::ModeCountMismatch { expected: 16, got: 9 })
        ));
    }

    #[test]
    fn metric_scales_quadratically_in_the_mismatch() {
        let ms = ModeSet::rectangular(6, 6).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        let base: Vec<f64> = (0..ms.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let doubled: Vec<f64> = base.iter().map(|v| 2.0 * v).collect();
        let mu = SpectralCoefficients::zeros(&ms);
        let c1 = SpectralCoefficients::from_values(base, &ms).unwrap();
        let c2 = SpectralCoefficients::from_values(doubled, &ms).unwrap();
        let m1 = ergodicity_metric(&c1, &mu, &ms).unwrap();
        let m2 = ergodicity_metric(&c2, &mu, &ms).unwrap();
        assert!(m1 > 0.0);
        assert!((m2 - 4.0 * m1).abs() < 1e-12 * m2.abs());
    }
}
