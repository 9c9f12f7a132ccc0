//! Deterministic SVG rendering: density contours, agent paths, and
//! start/end markers. Identical inputs produce identical bytes, so the
//! files are diffable across runs and platforms.

use std::fmt::Write as _;

use smc_core::density::GaussianMixture;
use smc_core::sim::Trajectory;
use smc_core::Vec2;

const PLOT_WIDTH: f64 = 720.0;
const MARGIN: f64 = 40.0;
const CONTOUR_CELLS: usize = 120;
const CONTOUR_FRACTIONS: [f64; 5] = [0.15, 0.35, 0.55, 0.75, 0.9];
const AGENT_COLORS: [&str; 6] =
    ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Frame {
    lx: f64,
    ly: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(lx: f64, ly: f64) -> Self {
        let inner_w = PLOT_WIDTH - 2.0 * MARGIN;
        let inner_h = inner_w * ly / lx;
        Frame { lx, ly, width: PLOT_WIDTH, height: inner_h + 2.0 * MARGIN }
    }

    fn px(&self, p: Vec2) -> (f64, f64) {
        let inner_w = self.width - 2.0 * MARGIN;
        let inner_h = self.height - 2.0 * MARGIN;
        let x = MARGIN + p.x / self.lx * inner_w;
        let y = MARGIN + (1.0 - p.y / self.ly) * inner_h;
        (x, y)
    }
}

/// Render the density as contour lines plus, when a trajectory is
/// given, one colored path per agent with a cross at the initial
/// position and a circle at the final one.
pub fn render_plot(density: &GaussianMixture, traj: Option<&Trajectory>) -> String {
    let domain = *density.domain();
    let frame = Frame::new(domain.lx(), domain.ly());
    let mut svg = String::with_capacity(1 << 16);
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" \
         viewBox=\"0 0 {:.0} {:.0}\">\n",
        frame.width, frame.height, frame.width, frame.height
    )
    .unwrap();
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    let (fx0, fy1) = frame.px(Vec2::ZERO);
    let (fx1, fy0) = frame.px(Vec2::new(domain.lx(), domain.ly()));
    write!(
        svg,
        "<rect class=\"frame\" x=\"{fx0:.2}\" y=\"{fy0:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" \
         fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
        w = fx1 - fx0,
        h = fy1 - fy0,
    )
    .unwrap();

    render_contours(&mut svg, density, &frame);

    if let Some(traj) = traj {
        for agent in 0..traj.agent_count() {
            let color = AGENT_COLORS[agent % AGENT_COLORS.len()];
            let mut points = String::with_capacity(traj.len() * 14);
            for i in 0..traj.len() {
                let (x, y) = frame.px(traj.position(i, agent));
                if i > 0 {
                    points.push(' ');
                }
                write!(points, "{x:.2},{y:.2}").unwrap();
            }
            write!(
                svg,
                "<polyline class=\"agent-path\" fill=\"none\" stroke=\"{color}\" \
                 stroke-width=\"1.5\" points=\"{points}\"/>\n"
            )
            .unwrap();
        }
        for agent in 0..traj.agent_count() {
            let color = AGENT_COLORS[agent % AGENT_COLORS.len()];
            let (sx, sy) = frame.px(traj.position(0, agent));
            let r = 5.0;
            write!(
                svg,
                "<path class=\"start-marker\" stroke=\"{color}\" stroke-width=\"2\" \
                 d=\"M {x0:.2} {sy:.2} L {x1:.2} {sy:.2} M {sx:.2} {y0:.2} L {sx:.2} {y1:.2}\"/>\n",
                x0 = sx - r,
                x1 = sx + r,
                y0 = sy - r,
                y1 = sy + r,
            )
            .unwrap();
            let (ex, ey) = frame.px(traj.position(traj.len() - 1, agent));
            write!(
                svg,
                "<circle class=\"end-marker\" cx=\"{ex:.2}\" cy=\"{ey:.2}\" r=\"4\" \
                 fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n"
            )
            .unwrap();
        }
    }

    svg.push_str("</svg>\n");
    svg
}

/// Marching squares over a uniform sampling of the density. One path
/// element per level keeps the output compact.
fn render_contours(svg: &mut String, density: &GaussianMixture, frame: &Frame) {
    let n = CONTOUR_CELLS + 1;
    let domain = density.domain();
    let (lx, ly) = (domain.lx(), domain.ly());
    let mut values = vec![0.0_f64; n * n];
    let mut peak = 0.0_f64;
    for j in 0..n {
        let y = j as f64 / CONTOUR_CELLS as f64 * ly;
        for i in 0..n {
            let x = i as f64 / CONTOUR_CELLS as f64 * lx;
            let v = density.eval(Vec2::new(x, y));
            values[j * n + i] = v;
            peak = peak.max(v);
        }
    }
    if peak <= 0.0 {
        return;
    }

    let sample = |i: usize, j: usize| values[j * n + i];
    let world = |i: f64, j: f64| {
        Vec2::new(i / CONTOUR_CELLS as f64 * lx, j / CONTOUR_CELLS as f64 * ly)
    };

    for fraction in CONTOUR_FRACTIONS {
        let level = fraction * peak;
        let mut d = String::new();
        for j in 0..CONTOUR_CELLS {
            for i in 0..CONTOUR_CELLS {
                let v00 = sample(i, j);
                let v10 = sample(i + 1, j);
                let v11 = sample(i + 1, j + 1);
                let v01 = sample(i, j + 1);
                let case = (v00 >= level) as u8
                    | ((v10 >= level) as u8) << 1
                    | ((v11 >= level) as u8) << 2
                    | ((v01 >= level) as u8) << 3;
                if case == 0 || case == 15 {
                    continue;
                }
                let lerp = |va: f64, vb: f64| (level - va) / (vb - va);
                let (fi, fj) = (i as f64, j as f64);
                let bottom = world(fi + lerp(v00, v10), fj);
                let right = world(fi + 1.0, fj + lerp(v10, v11));
                let top = world(fi + lerp(v01, v11), fj + 1.0);
                let left = world(fi, fj + lerp(v00, v01));
                let center_high = 0.25 * (v00 + v10 + v11 + v01) >= level;
                let segments: &[(Vec2, Vec2)] = match case {
                    1 => &[(left, bottom)],
                    2 => &[(bottom, right)],
                    3 => &[(left, right)],
                    4 => &[(right, top)],
                    5 if center_high => &[(left, top), (bottom, right)],
                    5 => &[(left, bottom), (right, top)],
                    6 => &[(bottom, top)],
                    7 => &[(left, top)],
                    8 => &[(top, left)],
                    9 => &[(bottom, top)],
                    10 if center_high => &[(bottom, left), (top, right)],
                    10 => &[(bottom, right), (top, left)],
                    11 => &[(top, right)],
                    12 => &[(left, right)],
                    13 => &[(bottom, right)],
                    14 => &[(left, bottom)],
                    _ => &[],
                };
                for &(a, b) in segments {
                    let (ax, ay) = frame.px(a);
                    let (bx, by) = frame.px(b);
                    write!(d, "M {ax:.2} {ay:.2} L {bx:.2} {by:.2} ").unwrap();
                }
            }
        }
        if !d.is_empty() {
            d.pop();
            write!(
                svg,
                "<path class=\"density-contour\" fill=\"none\" stroke=\"#999999\" \
                 stroke-width=\"1\" d=\"{d}\"/>\n"
            )
            .unwrap();
        }
    }
}
