//! Scratch probe for two-stage window solves (not shipped behavior).

use equicut::grid::DensityGrid;
use equicut::io;
use equicut::window::{convex_window, GvConfig, WindowError};

fn load(path: &str) -> DensityGrid<f64> {
    io::parse_grid_f64(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let dir = &args[1];
    let m: usize = args[2].parse().unwrap();
    let multistarts: usize = args[3].parse().unwrap();
    let budget: usize = args[4].parse().unwrap();
    let polish: usize = args[5].parse().unwrap();
    let subsample: usize = args.get(6).map_or(4, |s| s.parse().unwrap());
    let measures = vec![
        load(&format!("{dir}/m0.txt")),
        load(&format!("{dir}/m1.txt")),
        load(&format!("{dir}/m2.txt")),
    ];
    let cfg = GvConfig {
        multistarts,
        budget,
        polish_budget: polish,
        subsample,
        seed: 1,
        ..GvConfig::default()
    };
    let t0 = std::time::Instant::now();
    match convex_window(&measures, m, &cfg) {
        Ok(w) => println!("ok in {:?}: fractions {:?}", t0.elapsed(), w.fractions),
        Err(WindowError::NoConvergence { stage, residual, .. }) => {
            println!("stage {stage} residual {residual:.6} in {:?}", t0.elapsed())
        }
        Err(e) => println!("error: {e}"),
    }
}
