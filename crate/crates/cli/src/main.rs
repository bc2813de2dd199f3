//! Command-line front end: parse instances, run the solvers, write
//! artifacts.
//!
//! Exit codes: 0 success; 1 input or usage errors (with line-numbered file
//! diagnostics); 2 certified negative answers (exhaustive enumeration found
//! nothing, an impossibility scan succeeded, or a continuation hit a
//! degenerate limit with a witness); 3 solver failure to converge. Output
//! files are written atomically (temp file, then rename) and all seeded
//! commands are byte-reproducible.

mod fixtures;
mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use equicut::balanced::{
    condition_ii_check, extreme_order_permutations, find_balanced_hyperplane,
    hull_condition_check, verify_witness, BalancedOutcome, ExtremeOrderMode,
};
use equicut::colored::ColoredPointSet;
use equicut::geom::{AffineFunctional, Point};
use equicut::grid::DensityGrid;
use equicut::io;
use equicut::sandwich::{
    epsilon_not_permuted_probe, find_charge_bisection, find_equal_fraction_halfspace,
    point_anchored_equal_cut, Charge, ContinuationConfig, SandwichError,
};
use equicut::scalar::{self, Rational};
use equicut::window::{
    convex_window, extract_convex_cell, find_interval_window, gv_equipartition,
    verify_interval_counterexample, CellConstraint, GvConfig, WindowError,
};

const EXIT_NEGATIVE: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "equicut",
    version,
    about = "Balanced hyperplanes, charge bisections, equal-fraction cuts and convex windows"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Find a hyperplane with equally many points of every color on each
    /// side (exit 2 when exhaustive enumeration certifies none exists).
    BalancedFind {
        /// Point-set file.
        #[arg(long)]
        input: PathBuf,
        /// Witness file to write.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Report which extreme-order permutations of the colors are realized
    /// and whether the sufficient condition holds under some relabeling.
    ConditionCheck {
        #[arg(long)]
        input: PathBuf,
        /// Sampled directions; required for 3D input, optional for 2D.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Test whether some color lies strictly inside the convex hull of the
    /// other colors (exit 2 when no color does).
    HullCheck {
        #[arg(long)]
        input: PathBuf,
    },
    /// Halve one or two signed charges by a halfspace.
    Hamcut {
        /// Charge grid files; one for 1D, two for 2D.
        #[arg(long, num_args = 1.., required = true)]
        charges: Vec<PathBuf>,
        /// Residual tolerance as a fraction of the total variation.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Halfspace cutting the same fraction of d+1 measures, by
    /// perturbation continuation (exit 2 on a degenerate limit with
    /// witness).
    FractionCut {
        /// Measure grid files, normalized to total 1; two for 1D, three
        /// for 2D.
        #[arg(long, num_args = 2.., required = true)]
        measures: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.25)]
        s0: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 1e-6)]
        smin: f64,
        /// Acceptance tolerance on each perturbed bisection.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// The epsilon of the small-fraction hypothesis.
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Optional file receiving one line per accepted continuation step.
        #[arg(long)]
        steps: Option<PathBuf>,
    },
    /// Scan small-mass halfspaces for strictly ascending fractions; any
    /// hit disproves the not-permuted hypothesis.
    NotPermutedProbe {
        #[arg(long, num_args = 2.., required = true)]
        measures: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        /// Number of scanned halfspaces.
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Equal-fraction cut whose boundary passes through a given point.
    AnchoredCut {
        /// Exactly two measure grid files.
        #[arg(long, num_args = 2, required = true)]
        measures: Vec<PathBuf>,
        /// Anchor coordinates, two rationals.
        #[arg(long, num_args = 2, required = true)]
        point: Vec<String>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exact interval holding fraction 1/m of two 1D rational measures.
    Window1d {
        #[arg(long)]
        m0: PathBuf,
        #[arg(long)]
        m1: PathBuf,
        /// Target fraction, a rational 1/m.
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Verify that no interval cuts fraction alpha of both measures (exit
    /// 2 when impossibility is certified).
    Window1dCounterexample {
        #[arg(long)]
        m0: PathBuf,
        #[arg(long)]
        m1: PathBuf,
        #[arg(long)]
        alpha: String,
    },
    /// Split three planar measures into m cells of fraction 1/m each by a
    /// generalized Voronoi partition.
    GvPartition {
        #[arg(long, num_args = 3, required = true)]
        measures: Vec<PathBuf>,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 4)]
        subsample: usize,
        #[arg(long, default_value_t = 20)]
        multistarts: usize,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Convex region cutting fraction 1/m of three planar measures,
    /// composed from prime-stage partitions.
    ConvexWindow {
        #[arg(long, num_args = 3, required = true)]
        measures: Vec<PathBuf>,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 4)]
        subsample: usize,
        #[arg(long, default_value_t = 20)]
        multistarts: usize,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a deterministic instance family into a directory.
    GenFixture {
        /// One of: bereg-kano, hull-inside, triangle-rays, interval-ce,
        /// simplex-ce, charges, enclosed-triple, rational-pair,
        /// measure-triple.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        /// Mandatory for randomized kinds.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Rational fraction for the counterexample kinds.
        #[arg(long)]
        alpha: Option<String>,
        /// Rational block width for interval-ce.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long, default_value_t = 0.03)]
        width: f64,
        /// Grid resolution per axis for 2D measure kinds.
        #[arg(long, default_value_t = 24)]
        grid: usize,
        /// Cell count for 1D and charge kinds.
        #[arg(long, default_value_t = 16)]
        cells: usize,
    },
    /// Render 2D instances and results as SVG.
    Render {
        #[arg(long)]
        points: Option<PathBuf>,
        /// Witness file from balanced-find.
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Result line from hamcut, fraction-cut or anchored-cut.
        #[arg(long)]
        cut: Option<PathBuf>,
        /// Partition file from gv-partition.
        #[arg(long)]
        partition: Option<PathBuf>,
        /// Measure or charge grids for the heatmap underlay.
        #[arg(long, num_args = 0..)]
        grids: Vec<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn read_file(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_atomic(path: &Path, text: &str) -> Result<(), String> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let name = path
        .file_name()
        .ok_or_else(|| format!("{}: not a file path", path.display()))?;
    let mut tmp = dir.map_or_else(PathBuf::new, Path::to_path_buf);
    tmp.push(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, text).map_err(|e| format!("{}: {e}", tmp.display()))?;
    fs::rename(&tmp, path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Prints the result text and mirrors it to the output file when given.
fn emit(output: Option<&Path>, text: &str) -> Result<(), String> {
    print!("{text}");
    if let Some(path) = output {
        write_atomic(path, text)?;
    }
    Ok(())
}

fn load_points(path: &Path) -> Result<ColoredPointSet, String> {
    io::parse_point_set(&read_file(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_grid_f64(path: &Path) -> Result<DensityGrid<f64>, String> {
    io::parse_grid_f64(&read_file(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_grid_rational(path: &Path) -> Result<DensityGrid<Rational>, String> {
    io::parse_grid(&read_file(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_grids_f64(paths: &[PathBuf]) -> Result<Vec<DensityGrid<f64>>, String> {
    paths.iter().map(|p| load_grid_f64(p)).collect()
}

fn parse_rational_flag(token: &str, what: &str) -> Result<Rational, String> {
    scalar::parse_rational(token).map_err(|_| format!("{what}: not a rational: {token:?}"))
}

fn run(cmd: Cmd) -> Result<u8, String> {
    match cmd {
        Cmd::BalancedFind { input, output } => balanced_find(&input, output.as_deref()),
        Cmd::ConditionCheck {
            input,
            samples,
            seed,
        } => condition_check(&input, samples, seed),
        Cmd::HullCheck { input } => hull_check(&input),
        Cmd::Hamcut {
            charges,
            tol,
            output,
        } => hamcut(&charges, tol, output.as_deref()),
        Cmd::FractionCut {
            measures,
            s0,
            gamma,
            smin,
            tol,
            epsilon,
            output,
            steps,
        } => fraction_cut(
            &measures,
            ContinuationConfig {
                s0,
                gamma,
                s_min: smin,
                zero_tol: tol,
                epsilon,
            },
            output.as_deref(),
            steps.as_deref(),
        ),
        Cmd::NotPermutedProbe {
            measures,
            epsilon,
            budget,
            output,
        } => not_permuted_probe(&measures, epsilon, budget, output.as_deref()),
        Cmd::AnchoredCut {
            measures,
            point,
            tol,
            output,
        } => anchored_cut(&measures, &point, tol, output.as_deref()),
        Cmd::Window1d {
            m0,
            m1,
            alpha,
            output,
        } => window1d(&m0, &m1, &alpha, output.as_deref()),
        Cmd::Window1dCounterexample { m0, m1, alpha } => window1d_ce(&m0, &m1, &alpha),
        Cmd::GvPartition {
            measures,
            m,
            tol,
            subsample,
            multistarts,
            budget,
            seed,
            output,
        } => gv_partition(
            &measures,
            m,
            gv_config(tol, subsample, multistarts, budget, seed),
            output.as_deref(),
        ),
        Cmd::ConvexWindow {
            measures,
            m,
            tol,
            subsample,
            multistarts,
            budget,
            seed,
            output,
        } => convex_window_cmd(
            &measures,
            m,
            gv_config(tol, subsample, multistarts, budget, seed),
            output.as_deref(),
        ),
        Cmd::GenFixture {
            kind,
            out,
            seed,
            n,
            d,
            alpha,
            eps,
            width,
            grid,
            cells,
        } => gen_fixture(GenArgs {
            kind,
            out,
            seed,
            n,
            d,
            alpha,
            eps,
            width,
            grid,
            cells,
        }),
        Cmd::Render {
            points,
            witness,
            cut,
            partition,
            grids,
            output,
        } => render_cmd(
            points.as_deref(),
            witness.as_deref(),
            cut.as_deref(),
            partition.as_deref(),
            &grids,
            &output,
        ),
    }
}

fn gv_config(tol: f64, subsample: usize, multistarts: usize, budget: usize, seed: u64) -> GvConfig {
    GvConfig {
        tol,
        subsample,
        multistarts,
        budget,
        seed,
        ..GvConfig::default()
    }
}

fn balanced_find(input: &Path, output: Option<&Path>) -> Result<u8, String> {
    let set = load_points(input)?;
    match find_balanced_hyperplane(&set) {
        BalancedOutcome::Found(w) => {
            if !verify_witness(&set, &w) {
                return Err("internal: witness failed exact re-verification".into());
            }
            emit(output, &io::write_balanced_witness(&w))?;
            println!("balanced: {} points of each color per side", w.common_count);
            Ok(0)
        }
        BalancedOutcome::NotFound(cert) => {
            println!(
                "not found: exhaustive enumeration over {} oriented hyperplanes inspected {} separable subsets",
                cert.pairs_enumerated, cert.separable_subsets
            );
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn condition_check(input: &Path, samples: Option<usize>, seed: u64) -> Result<u8, String> {
    let set = load_points(input)?;
    let mode = match samples {
        Some(directions) => ExtremeOrderMode::Sampled { directions, seed },
        None => ExtremeOrderMode::Exact,
    };
    let report = extreme_order_permutations(&set, mode).map_err(|e| e.to_string())?;
    let outcome = condition_ii_check(&report);
    let total = report.realized.len() + report.missing.len();
    println!(
        "realized {} of {} extreme-order permutations{}",
        report.realized.len(),
        total,
        if report.approximate { " (sampled)" } else { "" }
    );
    for perm in &report.missing {
        let labels: Vec<String> = perm.iter().map(usize::to_string).collect();
        println!("missing: {}", labels.join(" "));
    }
    println!("holds as labeled: {}", outcome.holds_as_labeled);
    match &outcome.relabeling {
        Some(r) => {
            let labels: Vec<String> = r.iter().map(usize::to_string).collect();
            println!("relabeling: {}", labels.join(" "));
            Ok(0)
        }
        None => {
            println!("relabeling: none");
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn hull_check(input: &Path) -> Result<u8, String> {
    let set = load_points(input)?;
    match hull_condition_check(&set) {
        Some(color) => {
            println!("color {color} lies strictly inside the hull of the other colors");
            Ok(0)
        }
        None => {
            println!("no color lies strictly inside the hull of the other colors");
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn hamcut(paths: &[PathBuf], tol: f64, output: Option<&Path>) -> Result<u8, String> {
    let charges: Vec<Charge> = load_grids_f64(paths)?.into_iter().map(Charge::new).collect();
    match find_charge_bisection(&charges, tol) {
        Ok(r) => {
            let masses: Vec<f64> = charges.iter().map(|c| c.mass(&r.halfspace)).collect();
            emit(
                output,
                &io::write_cut_line(r.u.coords(), &masses, 0.5, r.residual),
            )?;
            Ok(0)
        }
        Err(e) => sandwich_failure(e),
    }
}

fn fraction_cut(
    paths: &[PathBuf],
    cfg: ContinuationConfig,
    output: Option<&Path>,
    steps_out: Option<&Path>,
) -> Result<u8, String> {
    let measures = load_grids_f64(paths)?;
    match find_equal_fraction_halfspace(&measures, &cfg) {
        Ok(r) => {
            emit(
                output,
                &io::write_cut_line(r.u.coords(), &r.fractions, r.common_fraction, r.residual),
            )?;
            if let Some(path) = steps_out {
                let mut text = String::new();
                for st in &r.steps {
                    let u: Vec<String> = st.u.iter().map(|v| io::fmt_f64(*v)).collect();
                    let fr: Vec<String> = st.fractions.iter().map(|v| io::fmt_f64(*v)).collect();
                    text.push_str(&format!(
                        "s: {} | u: {} | fractions: {} | residual: {} | chain: {}\n",
                        io::fmt_f64(st.s),
                        u.join(" "),
                        fr.join(" "),
                        io::fmt_f64(st.residual),
                        io::fmt_f64(st.eq2_residual)
                    ));
                }
                write_atomic(path, &text)?;
            }
            Ok(0)
        }
        Err(e) => sandwich_failure(e),
    }
}

fn sandwich_failure(e: SandwichError) -> Result<u8, String> {
    match e {
        SandwichError::NoConvergence(best) => {
            println!(
                "no convergence: best residual {}",
                io::fmt_f64(best.residual)
            );
            Ok(EXIT_NO_CONVERGENCE)
        }
        SandwichError::DegenerateLimit(diag) => {
            let fr: Vec<String> = diag.fractions.iter().map(|v| io::fmt_f64(*v)).collect();
            let fnl = &diag.halfspace.functional;
            let coeffs: Vec<String> = fnl.coeffs.iter().map(|v| io::fmt_f64(*v)).collect();
            println!(
                "degenerate limit at s = {}: witness halfspace {} {} has ascending fractions {}",
                io::fmt_f64(diag.s),
                coeffs.join(" "),
                io::fmt_f64(fnl.offset),
                fr.join(" ")
            );
            Ok(EXIT_NEGATIVE)
        }
        other => Err(other.to_string()),
    }
}

fn not_permuted_probe(
    paths: &[PathBuf],
    epsilon: f64,
    budget: usize,
    output: Option<&Path>,
) -> Result<u8, String> {
    let measures = load_grids_f64(paths)?;
    let report = epsilon_not_permuted_probe(&measures, epsilon, budget).map_err(|e| e.to_string())?;
    let mut text = format!(
        "scanned {} admissible {} violations {}\n",
        report.scanned,
        report.admissible,
        report.violations.len()
    );
    for perm in &report.realized_perms {
        let labels: Vec<String> = perm.iter().map(usize::to_string).collect();
        text.push_str(&format!("order: {}\n", labels.join(" ")));
    }
    for (h, fractions) in &report.violations {
        let coeffs: Vec<String> = h.functional.coeffs.iter().map(|v| io::fmt_f64(*v)).collect();
        let fr: Vec<String> = fractions.iter().map(|v| io::fmt_f64(*v)).collect();
        text.push_str(&format!(
            "violation: {} {} | fractions: {}\n",
            coeffs.join(" "),
            io::fmt_f64(h.functional.offset),
            fr.join(" ")
        ));
    }
    emit(output, &text)?;
    Ok(0)
}

fn anchored_cut(
    paths: &[PathBuf],
    point: &[String],
    tol: f64,
    output: Option<&Path>,
) -> Result<u8, String> {
    let measures = load_grids_f64(paths)?;
    let coords: Vec<Rational> = point
        .iter()
        .map(|t| parse_rational_flag(t, "anchor coordinate"))
        .collect::<Result<_, _>>()?;
    let p = Point::new(coords);
    match point_anchored_equal_cut(&measures, &p, tol) {
        Ok(cut) => {
            let fnl = &cut.halfspace_f64.functional;
            let mut u = fnl.coeffs.clone();
            u.push(fnl.offset);
            let t = cut.fractions.iter().sum::<f64>() / cut.fractions.len() as f64;
            emit(output, &io::write_cut_line(&u, &cut.fractions, t, cut.residual))?;
            Ok(0)
        }
        Err(e) => sandwich_failure(e),
    }
}

fn window1d(m0: &Path, m1: &Path, alpha: &str, output: Option<&Path>) -> Result<u8, String> {
    let g0 = load_grid_rational(m0)?;
    let g1 = load_grid_rational(m1)?;
    let alpha = parse_rational_flag(alpha, "alpha")?;
    match find_interval_window(&g0, &g1, &alpha) {
        Ok(w) => {
            emit(output, &io::write_interval(&w.a, &w.b))?;
            let fr: Vec<String> = w.fractions.iter().map(scalar::format_rational).collect();
            println!("fractions: {}", fr.join(" "));
            Ok(0)
        }
        Err(WindowError::NotRepresentable { alpha }) => Err(format!(
            "alpha must be 1/m for some integer m >= 2, got {}",
            scalar::format_rational(&alpha)
        )),
        Err(e) => Err(e.to_string()),
    }
}

fn window1d_ce(m0: &Path, m1: &Path, alpha: &str) -> Result<u8, String> {
    let g0 = load_grid_rational(m0)?;
    let g1 = load_grid_rational(m1)?;
    let alpha = parse_rational_flag(alpha, "alpha")?;
    let scan = verify_interval_counterexample(&g0, &g1, &alpha).map_err(|e| e.to_string())?;
    println!("impossible: {}", scan.impossible);
    println!(
        "family minimum: {}",
        scalar::format_rational(&scan.min_m1_over_family)
    );
    Ok(if scan.impossible { EXIT_NEGATIVE } else { 0 })
}

fn describe_cell(cell: &equicut::window::ConvexCell) -> String {
    let mut text = format!("cell {}\n", cell.index);
    for c in &cell.constraints {
        match c {
            CellConstraint::HalfPlane { a0, a1, a2 } => {
                text.push_str(&format!(
                    "halfplane {} {} {}\n",
                    io::fmt_f64(*a0),
                    io::fmt_f64(*a1),
                    io::fmt_f64(*a2)
                ));
            }
            CellConstraint::Disk { cx, cy, r2 } => {
                text.push_str(&format!(
                    "disk {} {} {}\n",
                    io::fmt_f64(*cx),
                    io::fmt_f64(*cy),
                    io::fmt_f64(*r2)
                ));
            }
        }
    }
    text
}

fn gv_partition(
    paths: &[PathBuf],
    m: usize,
    cfg: GvConfig,
    output: Option<&Path>,
) -> Result<u8, String> {
    let measures = load_grids_f64(paths)?;
    match gv_equipartition(&measures, m, &cfg) {
        Ok(p) => {
            let matrix = p.cell_measures(&measures, cfg.verify_subsample);
            let target = 1.0 / m as f64;
            let max_dev = matrix
                .iter()
                .flat_map(|row| row.iter())
                .map(|v| (v - target).abs())
                .fold(0.0f64, f64::max);
            emit(output, &io::write_partition(&p, &matrix))?;
            print!("{}", describe_cell(&extract_convex_cell(&p)));
            println!("max deviation: {}", io::fmt_f64(max_dev));
            Ok(0)
        }
        Err(WindowError::NoConvergence {
            stage,
            residual,
            best,
        }) => {
            println!(
                "no convergence at stage {stage}: residual {}",
                io::fmt_f64(residual)
            );
            if let Some(path) = output {
                let matrix = best.cell_measures(&measures, cfg.verify_subsample);
                write_atomic(path, &io::write_partition(&best, &matrix))?;
            }
            Ok(EXIT_NO_CONVERGENCE)
        }
        Err(e) => Err(e.to_string()),
    }
}

fn convex_window_cmd(
    paths: &[PathBuf],
    m: usize,
    cfg: GvConfig,
    output: Option<&Path>,
) -> Result<u8, String> {
    let measures = load_grids_f64(paths)?;
    match convex_window(&measures, m, &cfg) {
        Ok(w) => {
            let mut text = format!("stages {}\n", w.cells.len());
            for (i, (cell, partition)) in w.cells.iter().zip(&w.partitions).enumerate() {
                text.push_str(&format!("stage {i}\n"));
                for q in &partition.functionals {
                    text.push_str(&format!(
                        "{} {} {} {}\n",
                        io::fmt_f64(q.a0),
                        io::fmt_f64(q.a1),
                        io::fmt_f64(q.a2),
                        io::fmt_f64(q.b)
                    ));
                }
                text.push_str(&describe_cell(cell));
            }
            let fr: Vec<String> = w.fractions.iter().map(|v| io::fmt_f64(*v)).collect();
            text.push_str(&format!("fractions: {}\n", fr.join(" ")));
            emit(output, &text)?;
            Ok(0)
        }
        Err(WindowError::NoConvergence { stage, residual, .. }) => {
            println!(
                "no convergence at stage {stage}: residual {}",
                io::fmt_f64(residual)
            );
            Ok(EXIT_NO_CONVERGENCE)
        }
        Err(e) => Err(e.to_string()),
    }
}

struct GenArgs {
    kind: String,
    out: PathBuf,
    seed: Option<u64>,
    n: usize,
    d: usize,
    alpha: Option<String>,
    eps: Option<String>,
    width: f64,
    grid: usize,
    cells: usize,
}

/// Midpoint of (1/(n+1), 1/n), the open interval of admissible fractions.
fn default_ce_alpha(n: usize) -> Rational {
    let n = n as i64;
    scalar::ratio(2 * n + 1, 2 * n * (n + 1))
}

fn gen_fixture(args: GenArgs) -> Result<u8, String> {
    fs::create_dir_all(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    let need_seed = || {
        args.seed
            .ok_or_else(|| format!("--seed is mandatory for randomized kind {:?}", args.kind))
    };
    let alpha = match &args.alpha {
        Some(t) => Some(parse_rational_flag(t, "alpha")?),
        None => None,
    };
    let mut written: Vec<PathBuf> = Vec::new();
    let put = |name: &str, text: String, written: &mut Vec<PathBuf>| -> Result<(), String> {
        let path = args.out.join(name);
        write_atomic(&path, &text)?;
        written.push(path);
        Ok(())
    };

    match args.kind.as_str() {
        "bereg-kano" => {
            let s = fixtures::bereg_kano(args.n, need_seed()?)?;
            put("points.txt", io::write_point_set(&s), &mut written)?;
        }
        "hull-inside" => {
            let s = fixtures::hull_inside(args.d, args.n, need_seed()?)?;
            put("points.txt", io::write_point_set(&s), &mut written)?;
        }
        "triangle-rays" => {
            let s = fixtures::triangle_rays(args.n, need_seed()?)?;
            put("points.txt", io::write_point_set(&s), &mut written)?;
        }
        "interval-ce" => {
            let alpha = alpha.unwrap_or_else(|| default_ce_alpha(args.n));
            let eps = match &args.eps {
                Some(t) => parse_rational_flag(t, "eps")?,
                None => {
                    (alpha.clone() - scalar::ratio(1, args.n as i64 + 1))
                        / scalar::from_int(2)
                }
            };
            let (m0, m1) = fixtures::interval_ce(args.n, &alpha, &eps)?;
            put("m0.txt", io::write_grid(&m0), &mut written)?;
            put("m1.txt", io::write_grid(&m1), &mut written)?;
            println!("alpha: {}", scalar::format_rational(&alpha));
        }
        "simplex-ce" => {
            let alpha = alpha.unwrap_or_else(|| default_ce_alpha(args.n));
            let grids = fixtures::simplex_ce(args.n, &alpha, args.width, args.grid.max(48))?;
            for (i, g) in grids.iter().enumerate() {
                put(&format!("m{i}.txt"), io::write_grid_f64(g), &mut written)?;
            }
            println!("alpha: {}", scalar::format_rational(&alpha));
        }
        "charges" => {
            let grids = fixtures::charges(args.cells, args.cells, need_seed()?);
            for (i, g) in grids.iter().enumerate() {
                put(&format!("c{i}.txt"), io::write_grid_f64(g), &mut written)?;
            }
        }
        "enclosed-triple" => {
            let grids = fixtures::enclosed_triple(args.grid, need_seed()?);
            for (i, g) in grids.iter().enumerate() {
                put(&format!("m{i}.txt"), io::write_grid_f64(g), &mut written)?;
            }
        }
        "rational-pair" => {
            let (m0, m1) = fixtures::rational_pair(args.cells, need_seed()?);
            put("m0.txt", io::write_grid(&m0), &mut written)?;
            put("m1.txt", io::write_grid(&m1), &mut written)?;
        }
        "measure-triple" => {
            let grids = fixtures::measure_triple(args.grid.min(64).max(8), need_seed()?);
            for (i, g) in grids.iter().enumerate() {
                put(&format!("m{i}.txt"), io::write_grid_f64(g), &mut written)?;
            }
        }
        other => return Err(format!("unknown fixture kind {other:?}")),
    }
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(0)
}

/// First `u:`-style result line of a file, as a 2D functional.
fn parse_cut_functional(path: &Path) -> Result<AffineFunctional<f64>, String> {
    let text = read_file(path)?;
    let bad = || format!("{}: expected a `u: u1 u2 c | ...` result line", path.display());
    let line = text.lines().find(|l| l.starts_with("u:")).ok_or_else(bad)?;
    let fields: Vec<&str> = line
        .split('|')
        .next()
        .ok_or_else(bad)?
        .trim_start_matches("u:")
        .split_whitespace()
        .collect();
    if fields.len() != 3 {
        return Err(format!(
            "{}: cut has {} components, render supports 2D only",
            path.display(),
            fields.len().saturating_sub(1)
        ));
    }
    let nums: Vec<f64> = fields
        .iter()
        .map(|t| t.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    Ok(AffineFunctional::new(vec![nums[0], nums[1]], nums[2]))
}

fn render_cmd(
    points: Option<&Path>,
    witness: Option<&Path>,
    cut: Option<&Path>,
    partition: Option<&Path>,
    grids: &[PathBuf],
    output: &Path,
) -> Result<u8, String> {
    let mut scene = render::Scene {
        grids: load_grids_f64(grids)?,
        points: None,
        lines: Vec::new(),
        partition: None,
    };
    if let Some(path) = points {
        scene.points = Some(load_points(path)?);
    }
    if let Some(path) = witness {
        let w = io::parse_balanced_witness(&read_file(path)?)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        let fnl = &w.halfspace.functional;
        if fnl.coeffs.len() != 2 {
            return Err(format!(
                "{}: witness has dim {}, render supports 2D only",
                path.display(),
                fnl.coeffs.len()
            ));
        }
        scene.lines.push(AffineFunctional::new(
            fnl.coeffs.iter().map(scalar::to_f64).collect(),
            scalar::to_f64(&fnl.offset),
        ));
    }
    if let Some(path) = cut {
        scene.lines.push(parse_cut_functional(path)?);
    }
    if let Some(path) = partition {
        let (p, _) = io::parse_partition(&read_file(path)?)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        scene.partition = Some(p);
    }
    let svg = render::render(&scene)?;
    write_atomic(output, &svg)?;
    println!("wrote {}", output.display());
    Ok(0)
}
