//! Halfspace masses against Monte Carlo integration and cellwise additivity.

use equicut::geom::{AffineFunctional, Halfspace, Sense};
use equicut::grid::DensityGrid;
use equicut::scalar::{from_int, ratio, Rational};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_charge(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> DensityGrid<f64> {
    let values: Vec<f64> = (0..nx * ny).map(|_| rng.random_range(-1.0..1.0)).collect();
    DensityGrid::new_2d(nx, ny, 0.0, 0.0, 1.0 / nx as f64, 1.0 / ny as f64, values).unwrap()
}

#[test]
fn monte_carlo_agrees_with_clipping() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = random_charge(&mut rng, 8, 8);
    let h = Halfspace::new(
        AffineFunctional::new(vec![0.8, -0.6], 0.1),
        Sense::NonNegative,
    );
    let exact = g.halfspace_mass(&h);

    let samples = 1_000_000usize;
    let mut acc = 0.0f64;
    for _ in 0..samples {
        let x: f64 = rng.random_range(0.0..1.0);
        let y: f64 = rng.random_range(0.0..1.0);
        if 0.8 * x - 0.6 * y + 0.1 >= 0.0 {
            let ix = ((x * 8.0) as usize).min(7);
            let iy = ((y * 8.0) as usize).min(7);
            acc += g.value(ix, iy);
        }
    }
    let mc = acc / samples as f64; // bbox area is 1
    assert!(
        (mc - exact).abs() <= 3e-3,
        "monte carlo {mc} vs clipped {exact}"
    );
}

#[test]
fn mass_is_additive_over_cells_exactly_in_rationals() {
    let nx = 3;
    let ny = 3;
    let values: Vec<Rational> = (0..9).map(|i| ratio(i as i64 - 4, 3)).collect();
    let g = DensityGrid::new_2d(
        nx,
        ny,
        ratio(-1, 2),
        ratio(1, 3),
        ratio(2, 5),
        ratio(3, 7),
        values.clone(),
    )
    .unwrap();
    let h = Halfspace::new(
        AffineFunctional::new(vec![ratio(3, 4), ratio(-2, 9)], ratio(1, 6)),
        Sense::NonNegative,
    );
    let whole = g.halfspace_mass(&h);

    let mut sum = Rational::from_integer(0.into());
    for j in 0..ny {
        for i in 0..nx {
            let single = DensityGrid::new_2d(
                1,
                1,
                g.x0().clone() + g.hx().clone() * from_int(i as i64),
                g.y0().clone() + g.hy().clone() * from_int(j as i64),
                g.hx().clone(),
                g.hy().clone(),
                vec![values[j * nx + i].clone()],
            )
            .unwrap();
            sum += single.halfspace_mass(&h);
        }
    }
    assert_eq!(whole, sum);
}

#[test]
fn mass_is_additive_within_1e12_in_doubles() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let g = random_charge(&mut rng, 5, 4);
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        let c: f64 = rng.random_range(-0.5..0.5);
        if a.abs() + b.abs() < 1e-3 {
            continue;
        }
        let h = Halfspace::new(AffineFunctional::new(vec![a, b], c), Sense::NonNegative);
        let whole = g.halfspace_mass(&h);
        let mut sum = 0.0;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let single = DensityGrid::new_2d(
                    1,
                    1,
                    g.x0() + g.hx() * i as f64,
                    g.y0() + g.hy() * j as f64,
                    *g.hx(),
                    *g.hy(),
                    vec![*g.value(i, j)],
                )
                .unwrap();
                sum += single.halfspace_mass(&h);
            }
        }
        assert!(
            (whole - sum).abs() <= 1e-12 * (1.0 + whole.abs()),
            "additivity off: {whole} vs {sum}"
        );
    }
}

#[test]
fn rational_and_double_masses_agree_after_conversion() {
    let values: Vec<Rational> = (0..8).map(|i| ratio(2 * i as i64 - 7, 5)).collect();
    let g = DensityGrid::new_2d(
        4,
        2,
        from_int(0),
        from_int(0),
        ratio(1, 4),
        ratio(1, 2),
        values,
    )
    .unwrap();
    let h = Halfspace::new(
        AffineFunctional::new(vec![ratio(1, 3), ratio(-1, 2)], ratio(1, 8)),
        Sense::NonNegative,
    );
    let exact = g.halfspace_mass(&h);
    let approx = g.to_f64().halfspace_mass(&h.to_f64());
    let exact_f = equicut::scalar::to_f64(&exact);
    assert!((exact_f - approx).abs() < 1e-12, "{exact_f} vs {approx}");
}
