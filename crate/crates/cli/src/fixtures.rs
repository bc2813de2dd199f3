//! Deterministic instance generators.
//!
//! Every generator is a pure function of its parameters and seed. Point-set
//! generators retry fresh draws until the general-position check passes, so
//! the emitted instance always satisfies its solver's preconditions.

use equicut::colored::ColoredPointSet;
use equicut::geom::Point;
use equicut::grid::DensityGrid;
use equicut::scalar::{self, Rational};
use equicut::window;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rational_point(coords: &[f64]) -> Point<Rational> {
    Point::new(coords.iter().map(|c| scalar::from_f64_exact(*c)).collect())
}

fn build_set(
    points: Vec<Point<Rational>>,
    colors: Vec<usize>,
    k: usize,
) -> Result<ColoredPointSet, String> {
    ColoredPointSet::new(points, colors, k).map_err(|e| e.to_string())
}

/// Retries a seeded draw until the set passes construction (general
/// position, equal counts). The retry count is part of determinism: the
/// same seed always replays the same accepted draw.
fn draw_until_valid(
    seed: u64,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> (Vec<Point<Rational>>, Vec<usize>, usize),
) -> Result<ColoredPointSet, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last_err = String::new();
    for _ in 0..100 {
        let (points, colors, k) = draw(&mut rng);
        match build_set(points, colors, k) {
            Ok(s) => return Ok(s),
            Err(e) => last_err = e,
        }
    }
    Err(format!("no valid draw in 100 attempts: {last_err}"))
}

/// 3n planar points, three colors. For n >= 3 the convex hull is
/// monochromatic: color 0 sits on a radius-10 ring and the rest in a small
/// central disk. A 3n-point hull has at least three vertices, so n = 2
/// cannot satisfy that shape; those instances instead put color 2 strictly
/// inside the hull of colors 0 and 1, which also guarantees a balanced
/// line.
pub fn bereg_kano(n: usize, seed: u64) -> Result<ColoredPointSet, String> {
    if n < 2 {
        return Err("bereg-kano needs n >= 2".into());
    }
    draw_until_valid(seed, |rng| {
        let mut points = Vec::with_capacity(3 * n);
        let mut colors = Vec::with_capacity(3 * n);
        if n >= 3 {
            for k in 0..n {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64
                    + rng.random_range(-0.2..0.2) / n as f64;
                let r = 10.0 + rng.random_range(0.0..0.5);
                points.push(rational_point(&[r * a.cos(), r * a.sin()]));
                colors.push(0);
            }
            for color in 1..3 {
                for _ in 0..n {
                    let a = rng.random_range(0.0..2.0 * std::f64::consts::PI);
                    let r = 2.0 * rng.random_range(0.0f64..1.0).sqrt();
                    points.push(rational_point(&[r * a.cos(), r * a.sin()]));
                    colors.push(color);
                }
            }
        } else {
            for k in 0..4 {
                let a = std::f64::consts::FRAC_PI_4
                    + std::f64::consts::FRAC_PI_2 * k as f64
                    + rng.random_range(-0.15..0.15);
                let r = 10.0 + rng.random_range(0.0..0.5);
                points.push(rational_point(&[r * a.cos(), r * a.sin()]));
                colors.push(k % 2);
            }
            for _ in 0..2 {
                let a = rng.random_range(0.0..2.0 * std::f64::consts::PI);
                let r = 2.0 * rng.random_range(0.0f64..1.0).sqrt();
                points.push(rational_point(&[r * a.cos(), r * a.sin()]));
                colors.push(2);
            }
        }
        (points, colors, 3)
    })
}

/// d+1 colors with n points each; the last color lies strictly inside the
/// convex hull of the others (outer colors on a radius-10 shell, inner
/// color in a radius-3/2 ball).
pub fn hull_inside(d: usize, n: usize, seed: u64) -> Result<ColoredPointSet, String> {
    if !(2..=3).contains(&d) {
        return Err("hull-inside supports d in {2, 3}".into());
    }
    if n < 2 {
        return Err("hull-inside needs n >= 2".into());
    }
    draw_until_valid(seed, |rng| {
        let outer = d * n;
        let mut points = Vec::with_capacity(outer + n);
        let mut colors = Vec::with_capacity(outer + n);
        for k in 0..outer {
            let r = 10.0 + rng.random_range(0.0..0.5);
            let coords = if d == 2 {
                let a = 2.0 * std::f64::consts::PI * k as f64 / outer as f64
                    + rng.random_range(-0.3..0.3) / outer as f64;
                vec![r * a.cos(), r * a.sin()]
            } else {
                // Fibonacci sphere keeps the shell well spread for any n.
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / outer as f64;
                let rho = (1.0 - z * z).sqrt();
                let a = 2.399963229728653 * k as f64 + rng.random_range(-0.05..0.05);
                vec![r * rho * a.cos(), r * rho * a.sin(), r * z]
            };
            points.push(rational_point(&coords));
            colors.push(k % d);
        }
        for _ in 0..n {
            let coords: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
            points.push(rational_point(&coords));
            colors.push(d);
        }
        (points, colors, d + 1)
    })
}

/// Three colors marching outward along the rays from the vertices of a
/// regular triangle, with geometric spacing and a small angular spread to
/// keep each color non-collinear.
pub fn triangle_rays(n: usize, seed: u64) -> Result<ColoredPointSet, String> {
    if n < 2 {
        return Err("triangle-rays needs n >= 2".into());
    }
    draw_until_valid(seed, |rng| {
        let mut points = Vec::with_capacity(3 * n);
        let mut colors = Vec::with_capacity(3 * n);
        for color in 0..3 {
            let theta = std::f64::consts::FRAC_PI_2
                + 2.0 * std::f64::consts::PI * color as f64 / 3.0;
            for i in 0..n {
                let jitter = rng.random_range(-0.01..0.01);
                let a = theta + 0.02 * i as f64 + jitter;
                let r = 6.0 + 5.0 * 4.0f64.powi(i as i32);
                points.push(rational_point(&[r * a.cos(), r * a.sin()]));
                colors.push(color);
            }
        }
        (points, colors, 3)
    })
}

/// Two signed grids on the unit square with values uniform in [-1, 1).
pub fn charges(nx: usize, ny: usize, seed: u64) -> Vec<DensityGrid<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..2)
        .map(|_| {
            let values: Vec<f64> = (0..nx * ny)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            DensityGrid::new_2d(nx, ny, 0.0, 0.0, 1.0 / nx as f64, 1.0 / ny as f64, values)
                .expect("static shape")
        })
        .collect()
}

/// Three unit-square measures with the first supported strictly inside the
/// hull of the other two supports: a small central blob over two full-
/// support step densities. The steps are lopsided so no common center of
/// symmetry exists.
pub fn enclosed_triple(grid_n: usize, seed: u64) -> Vec<DensityGrid<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1.0 / grid_n as f64;
    let cx = rng.random_range(0.42..0.58);
    let cy = rng.random_range(0.42..0.58);
    let radius = rng.random_range(0.07..0.10);
    let split_y = rng.random_range(0.4..0.6);
    let w_bottom = rng.random_range(1.0..1.4);
    let w_top = rng.random_range(1.6..2.0);
    let split_x = rng.random_range(0.4..0.6);
    let w_left = rng.random_range(1.6..2.0);
    let w_right = rng.random_range(1.0..1.4);

    let mut blob = vec![0.0; grid_n * grid_n];
    let mut bands_h = vec![0.0; grid_n * grid_n];
    let mut bands_v = vec![0.0; grid_n * grid_n];
    for iy in 0..grid_n {
        let y = (iy as f64 + 0.5) * h;
        for ix in 0..grid_n {
            let x = (ix as f64 + 0.5) * h;
            let idx = iy * grid_n + ix;
            if (x - cx).hypot(y - cy) <= radius {
                blob[idx] = 1.0;
            }
            bands_h[idx] = if y < split_y { w_bottom } else { w_top };
            bands_v[idx] = if x < split_x { w_left } else { w_right };
        }
    }
    [blob, bands_h, bands_v]
        .into_iter()
        .map(|values| {
            let mut g = DensityGrid::new_2d(grid_n, grid_n, 0.0, 0.0, h, h, values)
                .expect("static shape");
            g.normalize().expect("blob radius exceeds one cell");
            g
        })
        .collect()
}

/// Two strictly positive rational step densities on [0, 1], normalized.
pub fn rational_pair(cells: usize, seed: u64) -> (DensityGrid<Rational>, DensityGrid<Rational>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make = |cells: usize| {
        let values: Vec<Rational> = (0..cells)
            .map(|_| scalar::from_int(rng.random_range(1..9)))
            .collect();
        let mut g = DensityGrid::new_1d(
            Rational::from_integer(0.into()),
            scalar::ratio(1, cells as i64),
            values,
        )
        .expect("static shape");
        g.normalize().expect("positive values");
        g
    };
    (make(cells), make(cells))
}

/// Three smooth unit-square measures: two-Gaussian mixtures over a small
/// uniform floor. The floor keeps every restriction stage nonempty.
pub fn measure_triple(grid_n: usize, seed: u64) -> Vec<DensityGrid<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1.0 / grid_n as f64;
    (0..3)
        .map(|_| {
            let c1 = (rng.random_range(0.2..0.8), rng.random_range(0.2..0.8));
            let c2 = (rng.random_range(0.2..0.8), rng.random_range(0.2..0.8));
            let s1 = rng.random_range(0.10..0.25);
            let s2 = rng.random_range(0.10..0.25);
            let lam = rng.random_range(0.3..0.7);
            let mut values = vec![0.0; grid_n * grid_n];
            for iy in 0..grid_n {
                let y = (iy as f64 + 0.5) * h;
                for ix in 0..grid_n {
                    let x = (ix as f64 + 0.5) * h;
                    let g1 = (-((x - c1.0).powi(2) + (y - c1.1).powi(2)) / (2.0 * s1 * s1)).exp();
                    let g2 = (-((x - c2.0).powi(2) + (y - c2.1).powi(2)) / (2.0 * s2 * s2)).exp();
                    values[iy * grid_n + ix] = 0.05 + lam * g1 + (1.0 - lam) * g2;
                }
            }
            let mut g = DensityGrid::new_2d(grid_n, grid_n, 0.0, 0.0, h, h, values)
                .expect("static shape");
            g.normalize().expect("floor keeps the total positive");
            g
        })
        .collect()
}

/// 1D counterexample pair, re-exported for the fixture writer.
pub fn interval_ce(
    n: usize,
    alpha: &Rational,
    eps: &Rational,
) -> Result<(DensityGrid<Rational>, DensityGrid<Rational>), String> {
    window::build_interval_counterexample(n, alpha, eps).map_err(|e| e.to_string())
}

/// Planar simplex counterexample triple, re-exported for the fixture
/// writer.
pub fn simplex_ce(
    n: usize,
    alpha: &Rational,
    width: f64,
    grid_n: usize,
) -> Result<Vec<DensityGrid<f64>>, String> {
    window::build_simplex_counterexample(n, alpha, width, grid_n).map_err(|e| e.to_string())
}
