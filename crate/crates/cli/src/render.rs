//! SVG rendering of planar instances and results.
//!
//! Output is SVG 1.1 with all coordinates printed at fixed four-decimal
//! precision in a fixed element order, so equal inputs give byte-identical
//! files. Grids become heatmap underlays (diverging palette when values are
//! signed), partitions contribute their pairwise cell boundaries (lines for
//! equal quadratic coefficients, circles otherwise), cuts become clipped
//! lines, and points are colored by class.

use equicut::colored::ColoredPointSet;
use equicut::geom::AffineFunctional;
use equicut::grid::DensityGrid;
use equicut::window::GVPartition;

const PALETTE: [&str; 10] = [
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

pub struct Scene {
    pub grids: Vec<DensityGrid<f64>>,
    pub points: Option<ColoredPointSet>,
    pub lines: Vec<AffineFunctional<f64>>,
    pub partition: Option<GVPartition>,
}

impl Scene {
    pub fn is_empty(&self) -> bool {
        self.grids.is_empty()
            && self.points.is_none()
            && self.lines.is_empty()
            && self.partition.is_none()
    }
}

/// Fixed-precision coordinate; negative values rounding to zero lose the
/// sign so reruns cannot differ on -0.0000.
fn f(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

struct Frame {
    x0: f64,
    y1: f64,
    scale: f64,
    width: f64,
    height: f64,
    world: (f64, f64, f64, f64),
}

impl Frame {
    fn x(&self, wx: f64) -> f64 {
        (wx - self.x0) * self.scale
    }
    fn y(&self, wy: f64) -> f64 {
        (self.y1 - wy) * self.scale
    }
}

fn world_bbox(scene: &Scene) -> Result<(f64, f64, f64, f64), String> {
    let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut grow = |x: f64, y: f64| {
        b.0 = b.0.min(x);
        b.1 = b.1.min(y);
        b.2 = b.2.max(x);
        b.3 = b.3.max(y);
    };
    for g in &scene.grids {
        grow(*g.x0(), *g.y0());
        grow(g.x_end(), g.y_end());
    }
    if let Some(s) = &scene.points {
        for p in s.points() {
            let c = p.to_f64();
            grow(c[0], c[1]);
        }
    }
    if !b.0.is_finite() {
        // Lines and partitions alone have no natural extent.
        b = (-1.0, -1.0, 1.0, 1.0);
    }
    let span = (b.2 - b.0).max(b.3 - b.1).max(1e-9);
    let pad = 0.05 * span;
    Ok((b.0 - pad, b.1 - pad, b.2 + pad, b.3 + pad))
}

/// Intersects the zero set of a x + b y + c with the world box; None when
/// the line misses it or the functional is constant.
fn clip_line(fnl: &AffineFunctional<f64>, world: (f64, f64, f64, f64)) -> Option<[(f64, f64); 2]> {
    let (a, b) = (fnl.coeffs[0], fnl.coeffs[1]);
    let c = fnl.offset;
    if a.abs().max(b.abs()) < 1e-15 {
        return None;
    }
    let (x0, y0, x1, y1) = world;
    let mut hits: Vec<(f64, f64)> = Vec::new();
    let eps = 1e-9 * (x1 - x0).max(y1 - y0);
    if a.abs() > 1e-15 {
        for y in [y0, y1] {
            let x = -(b * y + c) / a;
            if x >= x0 - eps && x <= x1 + eps {
                hits.push((x, y));
            }
        }
    }
    if b.abs() > 1e-15 {
        for x in [x0, x1] {
            let y = -(a * x + c) / b;
            if y >= y0 - eps && y <= y1 + eps {
                hits.push((x, y));
            }
        }
    }
    let mut best: Option<([(f64, f64); 2], f64)> = None;
    for i in 0..hits.len() {
        for j in i + 1..hits.len() {
            let d = (hits[i].0 - hits[j].0).hypot(hits[i].1 - hits[j].1);
            if best.as_ref().map_or(true, |(_, bd)| d > *bd) {
                best = Some(([hits[i], hits[j]], d));
            }
        }
    }
    best.filter(|(_, d)| *d > eps).map(|(seg, _)| seg)
}

fn push_heatmap(out: &mut String, g: &DensityGrid<f64>, frame: &Frame, opacity: f64) {
    let vmax = g
        .values()
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1e-300);
    let signed = g.values().iter().any(|v| *v < 0.0);
    let (hx, hy) = (*g.hx(), *g.hy());
    for iy in 0..g.ny() {
        for ix in 0..g.nx() {
            let v = *g.value(ix, iy);
            if v.abs() <= 1e-12 * vmax {
                continue;
            }
            let t = (v.abs() / vmax).min(1.0);
            let (r, gr, b) = if signed && v < 0.0 {
                // Blue for negative charge, red for positive.
                (255.0 - 155.0 * t, 255.0 - 175.0 * t, 255.0)
            } else if signed {
                (255.0, 255.0 - 175.0 * t, 255.0 - 155.0 * t)
            } else {
                (255.0 - 224.0 * t, 255.0 - 136.0 * t, 255.0 - 75.0 * t)
            };
            let wx = g.x0() + ix as f64 * hx;
            let wy = g.y0() + (iy as f64 + 1.0) * hy;
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"rgb({},{},{})\" fill-opacity=\"{}\"/>\n",
                f(frame.x(wx)),
                f(frame.y(wy)),
                f(hx * frame.scale),
                f(hy * frame.scale),
                r as u32,
                gr as u32,
                b as u32,
                f(opacity)
            ));
        }
    }
}

fn push_partition(out: &mut String, p: &GVPartition, frame: &Frame) {
    let m = p.m();
    for i in 0..m {
        for j in i + 1..m {
            let (fi, fj) = (&p.functionals[i], &p.functionals[j]);
            let db = fi.b - fj.b;
            let (da0, da1, da2) = (fi.a0 - fj.a0, fi.a1 - fj.a1, fi.a2 - fj.a2);
            if db.abs() <= 1e-12 {
                let fnl = AffineFunctional::new(vec![da1, da2], da0);
                if let Some([q0, q1]) = clip_line(&fnl, frame.world) {
                    out.push_str(&format!(
                        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333333\" stroke-width=\"1.5\"/>\n",
                        f(frame.x(q0.0)),
                        f(frame.y(q0.1)),
                        f(frame.x(q1.0)),
                        f(frame.y(q1.1))
                    ));
                }
            } else {
                let cx = -da1 / (2.0 * db);
                let cy = -da2 / (2.0 * db);
                let r2 = cx * cx + cy * cy - da0 / db;
                if r2 > 0.0 {
                    out.push_str(&format!(
                        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1.5\"/>\n",
                        f(frame.x(cx)),
                        f(frame.y(cy)),
                        f(r2.sqrt() * frame.scale)
                    ));
                }
            }
        }
    }
}

pub fn render(scene: &Scene) -> Result<String, String> {
    if scene.is_empty() {
        return Err("nothing to render: no grids, points, cuts or partitions given".into());
    }
    if let Some(s) = &scene.points {
        if s.dim() != 2 {
            return Err(format!("render supports 2D only, point set has dim {}", s.dim()));
        }
    }
    for g in &scene.grids {
        if g.dim() != 2 {
            return Err(format!("render supports 2D only, grid has dim {}", g.dim()));
        }
    }
    for l in &scene.lines {
        if l.coeffs.len() != 2 {
            return Err(format!(
                "render supports 2D only, cut has dim {}",
                l.coeffs.len()
            ));
        }
    }

    let world = world_bbox(scene)?;
    let (x0, y0, x1, y1) = world;
    let scale = 640.0 / (x1 - x0).max(y1 - y0);
    let frame = Frame {
        x0,
        y1,
        scale,
        width: (x1 - x0) * scale,
        height: (y1 - y0) * scale,
        world,
    };

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        f(frame.width),
        f(frame.height),
        f(frame.width),
        f(frame.height)
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    for (i, g) in scene.grids.iter().enumerate() {
        let opacity = if i == 0 { 0.9 } else { 0.4 };
        push_heatmap(&mut out, g, &frame, opacity);
    }
    if let Some(p) = &scene.partition {
        push_partition(&mut out, p, &frame);
    }
    for fnl in &scene.lines {
        if let Some([q0, q1]) = clip_line(fnl, world) {
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\" stroke-width=\"2\"/>\n",
                f(frame.x(q0.0)),
                f(frame.y(q0.1)),
                f(frame.x(q1.0)),
                f(frame.y(q1.1))
            ));
        }
    }
    if let Some(s) = &scene.points {
        for (p, color) in s.points().iter().zip(s.colors()) {
            let c = p.to_f64();
            out.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\" stroke=\"black\" stroke-width=\"0.5\"/>\n",
                f(frame.x(c[0])),
                f(frame.y(c[1])),
                PALETTE[color % PALETTE.len()]
            ));
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
