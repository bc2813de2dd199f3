//! Continuous halfspace solvers over signed step densities.
//!
//! Halfspaces of R^d are parameterized by unit vectors of S^d: the vector
//! u = (a, c) stands for {x : a.x + c >= 0}, and the poles (0, ..., 0, +-1)
//! stand for the full and empty degenerate halfspaces. Mapping u to the
//! vector of halved-mass defects of d signed densities gives a continuous
//! odd map S^d -> R^d, so a zero always exists; the solvers here locate one
//! by multistart damped Gauss-Newton over local tangent coordinates.
//!
//! On top of the plain bisection solver sits a continuation: to cut an equal
//! positive fraction of d+1 probability densities, bisect the perturbed
//! charges (1+s) mu_i - mu_{i-1} while s decays geometrically, warm-starting
//! each solve from the last, and polish at s = 0. A trajectory that falls
//! into a pole, or whose fractions all collapse toward 0 or toward 1, is
//! reported as a degenerate limit together with the small-fraction halfspace
//! that witnesses why.

use std::collections::BTreeSet;
use std::fmt;

use crate::geom::{AffineFunctional, Halfspace, Point, Sense};
use crate::grid::DensityGrid;
use crate::scalar::{self, Rational};

/// A signed density with its total and total variation cached.
#[derive(Debug, Clone)]
pub struct Charge {
    grid: DensityGrid<f64>,
    total: f64,
    variation: f64,
}

impl Charge {
    pub fn new(grid: DensityGrid<f64>) -> Self {
        let total = grid.total();
        let variation = grid.total_variation();
        Charge {
            grid,
            total,
            variation,
        }
    }

    pub fn grid(&self) -> &DensityGrid<f64> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn variation(&self) -> f64 {
        self.variation
    }

    pub fn mass(&self, h: &Halfspace<f64>) -> f64 {
        self.grid.halfspace_mass(h)
    }
}

/// Unit vector on S^d parameterizing halfspaces of R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereParam {
    u: Vec<f64>,
}

impl SphereParam {
    /// Normalizes a nonzero finite vector onto the sphere.
    pub fn new(coords: Vec<f64>) -> Result<Self, SandwichError> {
        if coords.len() < 2 {
            return Err(SandwichError::UnsupportedDimension {
                dim: coords.len().saturating_sub(1),
            });
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(SandwichError::NotAUnitVector);
        }
        Ok(SphereParam {
            u: coords.iter().map(|c| c / norm).collect(),
        })
    }

    /// Ambient dimension d of the halfspaces (sphere lives in R^{d+1}).
    pub fn dim(&self) -> usize {
        self.u.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.u
    }

    pub fn antipode(&self) -> SphereParam {
        SphereParam {
            u: self.u.iter().map(|c| -c).collect(),
        }
    }

    fn from_unit(u: Vec<f64>) -> SphereParam {
        SphereParam { u }
    }
}

#[derive(Debug, Clone)]
pub enum SandwichError {
    UnsupportedDimension { dim: usize },
    ChargeCount { expected: usize, got: usize },
    MeasureCount { expected: usize, got: usize },
    DimensionMismatch,
    NotAUnitVector,
    NotNormalized { index: usize, total: f64 },
    InvalidConfig { what: String },
    /// Budget exhausted without reaching tolerance; best candidate attached.
    NoConvergence(BisectCandidate),
    /// Continuation iterates approached a pole; the attached halfspace has
    /// all fractions small and ascending, the shape that blocks the limit.
    DegenerateLimit(DegenerateDiagnostic),
}

impl fmt::Display for SandwichError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SandwichError::UnsupportedDimension { dim } => {
                write!(f, "unsupported dimension {dim}: solvers cover d in {{1, 2}}")
            }
            SandwichError::ChargeCount { expected, got } => {
                write!(f, "expected {expected} charges for this dimension, got {got}")
            }
            SandwichError::MeasureCount { expected, got } => {
                write!(f, "expected {expected} measures for this dimension, got {got}")
            }
            SandwichError::DimensionMismatch => write!(f, "inputs disagree on dimension"),
            SandwichError::NotAUnitVector => write!(f, "cannot normalize a zero or non-finite vector"),
            SandwichError::NotNormalized { index, total } => {
                write!(f, "measure {index} has total {total}, expected 1")
            }
            SandwichError::InvalidConfig { what } => write!(f, "invalid configuration: {what}"),
            SandwichError::NoConvergence(best) => write!(
                f,
                "no convergence: best residual {:.3e} at u = {:?}",
                best.residual, best.u
            ),
            SandwichError::DegenerateLimit(d) => write!(
                f,
                "iterates approach a degenerate halfspace (fractions {:?} at s = {:.3e})",
                d.fractions, d.s
            ),
        }
    }
}

impl std::error::Error for SandwichError {}

/// Best halfspace seen by a failed solve.
#[derive(Debug, Clone)]
pub struct BisectCandidate {
    pub u: Vec<f64>,
    pub halfspace: Halfspace<f64>,
    pub residual: f64,
}

/// Witness attached to a degenerate continuation limit.
#[derive(Debug, Clone)]
pub struct DegenerateDiagnostic {
    pub halfspace: Halfspace<f64>,
    pub fractions: Vec<f64>,
    pub s: f64,
}

/// Halfspace {x : u_1 x_1 + ... + u_d x_d + u_{d+1} >= 0} for u on S^d.
///
/// Exactly at the poles (0, ..., 0, +-1) the functional is constant and the
/// halfspace degenerates to all of R^d or the empty set.
pub fn lift_param(u: &SphereParam) -> Halfspace<f64> {
    let d = u.dim();
    let functional = AffineFunctional::new(u.u[..d].to_vec(), u.u[d]);
    Halfspace::new(functional, Sense::NonNegative)
}

/// P_i(u) = rho_i(H_u) - rho_i(R^d \ H_u) = 2 rho_i(H_u) - rho_i(R^d).
pub fn odd_map(charges: &[Charge], u: &SphereParam) -> Vec<f64> {
    let h = lift_param(u);
    charges
        .iter()
        .map(|c| 2.0 * c.mass(&h) - c.total())
        .collect()
}

/// Result of a charge bisection: the sphere point, its halfspace, and the
/// achieved sup-norm of the odd map.
#[derive(Debug, Clone)]
pub struct BisectResult {
    pub u: SphereParam,
    pub halfspace: Halfspace<f64>,
    pub residual: f64,
    pub tol_abs: f64,
}

/// Finds u with ||P(u)||_inf <= tol * sum of total variations.
///
/// Degenerate halfspaces (the poles) are legal answers: when every charge
/// has zero total they satisfy the halving condition trivially, and they are
/// only returned when no nondegenerate zero is found.
pub fn find_charge_bisection(charges: &[Charge], tol: f64) -> Result<BisectResult, SandwichError> {
    if charges.is_empty() {
        return Err(SandwichError::ChargeCount {
            expected: 1,
            got: 0,
        });
    }
    let d = charges[0].dim();
    if d != 1 && d != 2 {
        return Err(SandwichError::UnsupportedDimension { dim: d });
    }
    if charges.len() != d {
        return Err(SandwichError::ChargeCount {
            expected: d,
            got: charges.len(),
        });
    }
    if charges.iter().any(|c| c.dim() != d) {
        return Err(SandwichError::DimensionMismatch);
    }
    let variation: f64 = charges.iter().map(|c| c.variation()).sum();
    let tol_abs = tol * variation;

    let f = |u: &[f64]| {
        let h = halfspace_of(u);
        charges
            .iter()
            .map(|c| 2.0 * c.mass(&h) - c.total())
            .collect::<Vec<f64>>()
    };

    match solve_on_sphere(&f, d, tol_abs, None) {
        SphereOutcome::Converged(zeros) => {
            let best = pick_bisection_zero(zeros);
            let u = SphereParam::from_unit(best.0);
            let halfspace = lift_param(&u);
            Ok(BisectResult {
                u,
                halfspace,
                residual: best.1,
                tol_abs,
            })
        }
        SphereOutcome::Failed(best) => {
            // Poles are legal degenerate answers; accept one if it meets the
            // tolerance (all charge totals near zero).
            let mut pole_best: Option<(Vec<f64>, f64)> = None;
            for sign in [1.0, -1.0] {
                let mut u = vec![0.0; d + 1];
                u[d] = sign;
                let r = inf_norm(&f(&u));
                if r <= tol_abs && pole_best.as_ref().map_or(true, |(_, pr)| r < *pr) {
                    pole_best = Some((u, r));
                }
            }
            if let Some((u, r)) = pole_best {
                let u = SphereParam::from_unit(u);
                let halfspace = lift_param(&u);
                return Ok(BisectResult {
                    u,
                    halfspace,
                    residual: r,
                    tol_abs,
                });
            }
            let u = SphereParam::from_unit(best.0.clone());
            Err(SandwichError::NoConvergence(BisectCandidate {
                halfspace: lift_param(&u),
                u: best.0,
                residual: best.1,
            }))
        }
    }
}

/// Schedule and tolerances for the equal-fraction continuation.
#[derive(Debug, Clone)]
pub struct ContinuationConfig {
    /// Initial perturbation.
    pub s0: f64,
    /// Geometric decay factor.
    pub gamma: f64,
    /// Smallest perturbation solved before the s = 0 polish.
    pub s_min: f64,
    /// Acceptance tolerance on the sup-norm of the odd map at each step.
    pub zero_tol: f64,
    /// Fraction floor the result is measured against.
    pub epsilon: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig {
            s0: 0.25,
            gamma: 0.5,
            s_min: 1e-6,
            zero_tol: 1e-8,
            epsilon: 0.05,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<(), SandwichError> {
        if !(self.s_min > 0.0 && self.s_min < self.s0) {
            return Err(SandwichError::InvalidConfig {
                what: format!("need 0 < s_min < s0, got s_min = {}, s0 = {}", self.s_min, self.s0),
            });
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(SandwichError::InvalidConfig {
                what: format!("need 0 < gamma < 1, got {}", self.gamma),
            });
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(SandwichError::InvalidConfig {
                what: format!("need 0 < epsilon < 1/2, got {}", self.epsilon),
            });
        }
        if !(self.zero_tol > 0.0) {
            return Err(SandwichError::InvalidConfig {
                what: format!("need zero_tol > 0, got {}", self.zero_tol),
            });
        }
        Ok(())
    }
}

/// One accepted continuation step.
#[derive(Debug, Clone)]
pub struct ContinuationStep {
    pub s: f64,
    pub u: Vec<f64>,
    /// mu_i(H) for the step's halfspace.
    pub fractions: Vec<f64>,
    /// Sup-norm of the odd map at acceptance.
    pub residual: f64,
    /// max_i |mu_{i-1}(H) - (1+s) mu_i(H) + s/2|.
    pub eq2_residual: f64,
}

/// Halfspace cutting (nearly) the same fraction of every input measure.
#[derive(Debug, Clone)]
pub struct FractionCutResult {
    pub halfspace: Halfspace<f64>,
    pub u: SphereParam,
    pub fractions: Vec<f64>,
    pub common_fraction: f64,
    /// Max pairwise gap between fractions.
    pub residual: f64,
    /// True when the complement was taken to land in (0, 1/2].
    pub flipped: bool,
    pub steps: Vec<ContinuationStep>,
}

/// Equal-fraction halfspace for d+1 probability densities via continuation.
///
/// At each s the perturbed charges (1+s) mu_i - mu_{i-1} have total s, so a
/// plain bisection targets exactly the required mass s/2. Solutions are
/// warm-started along the geometric s-schedule, polished at s = 0, and the
/// result is complemented when the common fraction lands above 1/2.
///
/// When the inputs admit no small-fraction halfspace with strictly ascending
/// fractions (for the configured epsilon), the trajectory stays away from
/// the poles and the returned common fraction lies in
/// [epsilon - 1e-4, 1/2 + 1e-4]. Without that hypothesis the trajectory may
/// collapse; this is reported as `DegenerateLimit` with a witness step.
pub fn find_equal_fraction_halfspace(
    measures: &[DensityGrid<f64>],
    cfg: &ContinuationConfig,
) -> Result<FractionCutResult, SandwichError> {
    cfg.validate()?;
    if measures.is_empty() {
        return Err(SandwichError::MeasureCount {
            expected: 2,
            got: 0,
        });
    }
    let d = measures[0].dim();
    if d != 1 && d != 2 {
        return Err(SandwichError::UnsupportedDimension { dim: d });
    }
    if measures.len() != d + 1 {
        return Err(SandwichError::MeasureCount {
            expected: d + 1,
            got: measures.len(),
        });
    }
    for (i, m) in measures.iter().enumerate() {
        if m.dim() != d {
            return Err(SandwichError::DimensionMismatch);
        }
        let total = m.total();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SandwichError::NotNormalized { index: i, total });
        }
    }

    let fractions_at = |u: &[f64]| -> Vec<f64> {
        let h = halfspace_of(u);
        measures.iter().map(|m| m.halfspace_mass(&h)).collect()
    };
    // Odd-map components of the perturbed charges: with totals s, the target
    // rho^s_i(H) = s/2 reads P_i = 2 rho^s_i(H) - s = 0.
    let p_at = |fr: &[f64], s: f64| -> Vec<f64> {
        (1..=d)
            .map(|i| 2.0 * ((1.0 + s) * fr[i] - fr[i - 1]) - s)
            .collect()
    };

    let mut steps: Vec<ContinuationStep> = Vec::new();
    let mut pole_streak = 0usize;
    let mut u_prev: Option<Vec<f64>> = None;

    let mut s = cfg.s0;
    loop {
        let f = |u: &[f64]| p_at(&fractions_at(u), s);
        let outcome = match &u_prev {
            None => solve_on_sphere(&f, d, cfg.zero_tol, None),
            Some(w) => solve_on_sphere(&f, d, cfg.zero_tol, Some(w)),
        };
        let u = match outcome {
            SphereOutcome::Converged(zeros) => match &u_prev {
                // First step: prefer the zero whose fractions sit deepest
                // inside (0, 1), to start on a branch away from the poles.
                None => pick_interior_zero(zeros, &fractions_at),
                Some(w) => pick_nearest_zero(zeros, w),
            },
            SphereOutcome::Failed(best) => {
                let u = SphereParam::from_unit(best.0.clone());
                return Err(SandwichError::NoConvergence(BisectCandidate {
                    halfspace: lift_param(&u),
                    u: best.0,
                    residual: best.1,
                }));
            }
        };
        let fr = fractions_at(&u);
        let p = p_at(&fr, s);
        let residual = inf_norm(&p);
        let eq2 = (1..=d)
            .map(|i| (fr[i - 1] - (1.0 + s) * fr[i] + s / 2.0).abs())
            .fold(0.0f64, f64::max);
        // A branch is collapsing when the parameter nears a pole or, for
        // compactly supported inputs whose boundary parks at the support
        // edge, when the fractions all drop below epsilon (or all rise above
        // 1 - epsilon). Either shape persisting two steps is the degenerate
        // limit the fraction floor is meant to exclude.
        let near_pole = u[d].abs() > 1.0 - 1e-4;
        let collapsed = fr.iter().all(|f| *f < cfg.epsilon)
            || fr.iter().all(|f| *f > 1.0 - cfg.epsilon);
        steps.push(ContinuationStep {
            s,
            u: u.clone(),
            fractions: fr,
            residual,
            eq2_residual: eq2,
        });

        if near_pole || collapsed {
            pole_streak += 1;
            if pole_streak >= 2 {
                return Err(SandwichError::DegenerateLimit(degenerate_diagnostic(
                    &steps,
                    cfg.epsilon,
                )));
            }
        } else {
            pole_streak = 0;
        }

        let settled = u_prev
            .as_ref()
            .map_or(false, |w| angle_between(w, &u) < 1e-6);
        u_prev = Some(u);
        if s <= cfg.s_min || settled {
            break;
        }
        s = (s * cfg.gamma).max(cfg.s_min);
    }

    // Polish at s = 0: the continuation has isolated a nondegenerate branch,
    // so the unperturbed equal-fraction system can be solved directly.
    let warm = u_prev.expect("at least one accepted step");
    let f0 = |u: &[f64]| p_at(&fractions_at(u), 0.0);
    let (u_fin, res_fin, ok) = gauss_newton_on_sphere(&f0, &warm, cfg.zero_tol, 60);
    let u_fin = if ok { u_fin } else { warm };
    let fr = fractions_at(&u_fin);
    let p0 = p_at(&fr, 0.0);
    if inf_norm(&p0) > 10.0 * cfg.zero_tol {
        let u = SphereParam::from_unit(u_fin.clone());
        return Err(SandwichError::NoConvergence(BisectCandidate {
            halfspace: lift_param(&u),
            u: u_fin,
            residual: res_fin,
        }));
    }
    let eq2 = (1..=d)
        .map(|i| (fr[i - 1] - fr[i]).abs())
        .fold(0.0f64, f64::max);
    steps.push(ContinuationStep {
        s: 0.0,
        u: u_fin.clone(),
        fractions: fr.clone(),
        residual: inf_norm(&p0),
        eq2_residual: eq2,
    });

    let mean = fr.iter().sum::<f64>() / fr.len() as f64;
    let (u_out, flipped) = if mean > 0.5 {
        (u_fin.iter().map(|c| -c).collect::<Vec<f64>>(), true)
    } else {
        (u_fin, false)
    };
    let halfspace = halfspace_of(&u_out);
    let fractions: Vec<f64> = measures.iter().map(|m| m.halfspace_mass(&halfspace)).collect();
    let residual = max_pairwise_gap(&fractions);
    let common_fraction = fractions.iter().sum::<f64>() / fractions.len() as f64;
    Ok(FractionCutResult {
        halfspace,
        u: SphereParam::from_unit(u_out),
        fractions,
        common_fraction,
        residual,
        flipped,
        steps,
    })
}

fn degenerate_diagnostic(steps: &[ContinuationStep], epsilon: f64) -> DegenerateDiagnostic {
    // Walk back through accepted steps; the small side of a near-pole step
    // has all fractions below epsilon in strictly ascending order.
    for step in steps.iter().rev() {
        for flip in [false, true] {
            let fr: Vec<f64> = if flip {
                step.fractions.iter().map(|f| 1.0 - f).collect()
            } else {
                step.fractions.clone()
            };
            let small = fr.iter().all(|f| *f < epsilon);
            let ascending = fr.windows(2).all(|w| w[0] < w[1]);
            if small && ascending {
                let u: Vec<f64> = if flip {
                    step.u.iter().map(|c| -c).collect()
                } else {
                    step.u.clone()
                };
                return DegenerateDiagnostic {
                    halfspace: halfspace_of(&u),
                    fractions: fr,
                    s: step.s,
                };
            }
        }
    }
    let last = steps.last().expect("diagnostic requires an accepted step");
    DegenerateDiagnostic {
        halfspace: halfspace_of(&last.u),
        fractions: last.fractions.clone(),
        s: last.s,
    }
}

/// Report of a budget-bounded scan for small ascending-fraction halfspaces.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    /// Halfspaces with all fractions below epsilon, strictly ascending in
    /// label order, with their fractions. Nonempty is a proof of violation;
    /// empty is sampled evidence only.
    pub violations: Vec<(Halfspace<f64>, Vec<f64>)>,
    /// Strict-order permutations realized by admissible halfspaces; an entry
    /// lists measure indices from smallest fraction to largest.
    pub realized_perms: BTreeSet<Vec<usize>>,
    pub scanned: usize,
    /// Scanned halfspaces with all fractions below epsilon.
    pub admissible: usize,
}

/// Scans a direction x offset grid of halfspaces for violations of the
/// small-fraction ordering hypothesis: all fractions below `epsilon` and
/// strictly ascending with the measure index.
pub fn epsilon_not_permuted_probe(
    measures: &[DensityGrid<f64>],
    epsilon: f64,
    budget: usize,
) -> Result<ProbeReport, SandwichError> {
    if measures.is_empty() {
        return Err(SandwichError::MeasureCount {
            expected: 2,
            got: 0,
        });
    }
    let d = measures[0].dim();
    if d != 1 && d != 2 {
        return Err(SandwichError::UnsupportedDimension { dim: d });
    }
    if measures.iter().any(|m| m.dim() != d) {
        return Err(SandwichError::DimensionMismatch);
    }
    if !(epsilon > 0.0) {
        return Err(SandwichError::InvalidConfig {
            what: format!("need epsilon > 0, got {epsilon}"),
        });
    }
    let budget = budget.max(16);

    // Offsets must cover every cut through the union of supports.
    let refs: Vec<&DensityGrid<f64>> = measures.iter().collect();
    let (x0, y0, x1, y1) = DensityGrid::common_bbox(&refs);
    let radius = [x0.abs(), x1.abs(), y0.abs(), y1.abs()]
        .into_iter()
        .fold(0.0f64, f64::max)
        * if d == 2 { std::f64::consts::SQRT_2 } else { 1.0 }
        + 1.0;

    let directions: Vec<Vec<f64>> = if d == 1 {
        vec![vec![1.0], vec![-1.0]]
    } else {
        let nd = ((budget as f64 / 8.0).sqrt().round() as usize).clamp(16, 720);
        (0..nd)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / nd as f64;
                vec![th.cos(), th.sin()]
            })
            .collect()
    };
    let noff = (budget / directions.len()).max(4);

    let mut violations = Vec::new();
    let mut realized = BTreeSet::new();
    let mut scanned = 0usize;
    let mut admissible = 0usize;
    for dir in &directions {
        for j in 0..noff {
            let c = -radius + 2.0 * radius * (j as f64 + 0.5) / noff as f64;
            let h = Halfspace::new(
                AffineFunctional::new(dir.clone(), c),
                Sense::NonNegative,
            );
            scanned += 1;
            let fr: Vec<f64> = measures.iter().map(|m| m.halfspace_mass(&h)).collect();
            if fr.iter().any(|f| *f >= epsilon) {
                continue;
            }
            admissible += 1;
            let mut order: Vec<usize> = (0..fr.len()).collect();
            order.sort_by(|&a, &b| fr[a].partial_cmp(&fr[b]).expect("finite fractions"));
            let strict = order.windows(2).all(|w| fr[w[0]] < fr[w[1]]);
            if !strict {
                continue;
            }
            let identity = order.iter().enumerate().all(|(k, &i)| k == i);
            realized.insert(order);
            if identity {
                violations.push((h, fr));
            }
        }
    }
    Ok(ProbeReport {
        violations,
        realized_perms: realized,
        scanned,
        admissible,
    })
}

/// Equal cut through an anchor point, exact on the boundary.
#[derive(Debug, Clone)]
pub struct AnchoredCut {
    /// Exact functional: evaluates to zero at the anchor in rational
    /// arithmetic.
    pub halfspace: Halfspace<Rational>,
    pub halfspace_f64: Halfspace<f64>,
    /// Unit normal found on the direction circle.
    pub normal: Vec<f64>,
    pub fractions: Vec<f64>,
    /// |fraction gap| at the returned cut.
    pub residual: f64,
}

/// Halfplane with the anchor on its boundary cutting equal fractions of two
/// planar probability densities.
///
/// Halfplanes through p form a circle of unit normals; the fraction gap is
/// odd along it, so a sign change always exists and plain bisection on the
/// angle converges. The returned functional is assembled in rational
/// arithmetic so the anchor lies on the boundary exactly.
pub fn point_anchored_equal_cut(
    measures: &[DensityGrid<f64>],
    p: &Point<Rational>,
    tol: f64,
) -> Result<AnchoredCut, SandwichError> {
    if measures.len() != 2 {
        return Err(SandwichError::MeasureCount {
            expected: 2,
            got: measures.len(),
        });
    }
    if measures.iter().any(|m| m.dim() != 2) || p.dim() != 2 {
        return Err(SandwichError::UnsupportedDimension {
            dim: measures.first().map(|m| m.dim()).unwrap_or(0),
        });
    }
    let pf: Vec<f64> = p.to_f64();
    let variation: f64 = measures.iter().map(|m| m.total_variation()).sum();
    let tol_abs = tol * variation;

    // Gap between the two masses on the halfplane {x : n(theta).(x - p) >= 0}.
    let gap = |theta: f64| -> f64 {
        let (a, b) = (theta.cos(), theta.sin());
        let c = -(a * pf[0] + b * pf[1]);
        let h = Halfspace::new(AffineFunctional::new(vec![a, b], c), Sense::NonNegative);
        measures[1].halfspace_mass(&h) - measures[0].halfspace_mass(&h)
    };

    // Bracket a sign change; gap(theta + pi) = -gap(theta) guarantees one.
    let samples = 720;
    let mut best: Option<(f64, f64)> = None;
    let mut bracket: Option<(f64, f64, f64, f64)> = None;
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=samples {
        let th = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
        let g = gap(th);
        if best.as_ref().map_or(true, |(_, bg)| g.abs() < bg.abs()) {
            best = Some((th, g));
        }
        if let Some((pth, pg)) = prev {
            if pg == 0.0 || (pg < 0.0) != (g < 0.0) {
                bracket = Some((pth, pg, th, g));
                break;
            }
        }
        prev = Some((th, g));
    }
    let (mut lo, mut glo, mut hi, _) = match bracket {
        Some(b) => b,
        None => {
            let (th, g) = best.expect("sampled at least once");
            if g.abs() <= tol_abs {
                (th, g, th, g)
            } else {
                let (a, b) = (th.cos(), th.sin());
                let c = -(a * pf[0] + b * pf[1]);
                let u = vec![a, b, c];
                return Err(SandwichError::NoConvergence(BisectCandidate {
                    halfspace: halfspace_of(&u),
                    u,
                    residual: g.abs(),
                }));
            }
        }
    };
    for _ in 0..200 {
        if hi - lo < 1e-15 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let g = gap(mid);
        if g == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (g < 0.0) == (glo < 0.0) {
            lo = mid;
            glo = g;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let (a, b) = (theta.cos(), theta.sin());

    // Exact boundary incidence: build the functional over rationals from the
    // f64 normal, with offset -n.p computed exactly.
    let an = scalar::from_f64_exact(a);
    let bn = scalar::from_f64_exact(b);
    let offset = -(an.clone() * p.coords[0].clone() + bn.clone() * p.coords[1].clone());
    let exact = Halfspace::new(
        AffineFunctional::new(vec![an, bn], offset),
        Sense::NonNegative,
    );
    let hf = exact.to_f64();
    let fractions: Vec<f64> = measures.iter().map(|m| m.halfspace_mass(&hf)).collect();
    let residual = (fractions[1] - fractions[0]).abs();
    if residual > tol_abs.max(1e-12) {
        let u = vec![a, b, hf.functional.offset];
        return Err(SandwichError::NoConvergence(BisectCandidate {
            halfspace: hf,
            u,
            residual,
        }));
    }
    Ok(AnchoredCut {
        halfspace: exact,
        halfspace_f64: hf,
        normal: vec![a, b],
        fractions,
        residual,
    })
}

// ---------------------------------------------------------------------------
// Sphere zero search internals.

fn halfspace_of(u: &[f64]) -> Halfspace<f64> {
    let d = u.len() - 1;
    Halfspace::new(
        AffineFunctional::new(u[..d].to_vec(), u[d]),
        Sense::NonNegative,
    )
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    v.iter().map(|x| x / n).collect()
}

fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    dot.clamp(-1.0, 1.0).acos()
}

fn max_pairwise_gap(v: &[f64]) -> f64 {
    let lo = v.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    let hi = v.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
    hi - lo
}

/// Orthonormal basis of the tangent plane at a unit vector.
fn tangent_basis(u: &[f64]) -> Vec<Vec<f64>> {
    let n = u.len();
    if n == 2 {
        return vec![vec![-u[1], u[0]]];
    }
    // n == 3: project out the axis least aligned with u, then cross.
    let k = (0..3)
        .min_by(|&a, &b| u[a].abs().partial_cmp(&u[b].abs()).expect("finite"))
        .expect("nonempty");
    let mut t1 = vec![0.0; 3];
    t1[k] = 1.0;
    let dot = t1.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
    for i in 0..3 {
        t1[i] -= dot * u[i];
    }
    let t1 = normalize(&t1);
    let t2 = vec![
        u[1] * t1[2] - u[2] * t1[1],
        u[2] * t1[0] - u[0] * t1[2],
        u[0] * t1[1] - u[1] * t1[0],
    ];
    vec![t1, t2]
}

fn retract(u: &[f64], basis: &[Vec<f64>], step: &[f64]) -> Vec<f64> {
    let mut v = u.to_vec();
    for (t, s) in basis.iter().zip(step) {
        for i in 0..v.len() {
            v[i] += t[i] * s;
        }
    }
    normalize(&v)
}

/// Damped Gauss-Newton for F = 0 on the sphere, central differences in
/// tangent coordinates. Returns (point, sup-norm residual, converged).
fn gauss_newton_on_sphere(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    u0: &[f64],
    tol_abs: f64,
    max_iter: usize,
) -> (Vec<f64>, f64, bool) {
    let n = u0.len() - 1;
    let fd = 1e-5;
    let mut u = normalize(u0);
    let mut fu = f(&u);
    let mut res = inf_norm(&fu);
    let mut lambda = 1e-12;
    for _ in 0..max_iter {
        if res <= tol_abs {
            return (u, res, true);
        }
        let basis = tangent_basis(&u);
        let mut jac = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut step = vec![0.0; n];
            step[j] = fd;
            let fp = f(&retract(&u, &basis, &step));
            step[j] = -fd;
            let fm = f(&retract(&u, &basis, &step));
            for i in 0..n {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * fd);
            }
        }
        let mut improved = false;
        'damping: for _ in 0..10 {
            let Some(delta) = solve_damped(&jac, &fu, lambda) else {
                lambda = (lambda * 100.0).max(1e-10);
                continue;
            };
            let mut alpha = 1.0f64;
            for _ in 0..12 {
                let step: Vec<f64> = delta.iter().map(|d| d * alpha).collect();
                let cand = retract(&u, &basis, &step);
                let fc = f(&cand);
                let rc = inf_norm(&fc);
                if rc < res {
                    u = cand;
                    fu = fc;
                    res = rc;
                    lambda = (lambda * 0.25).max(1e-14);
                    improved = true;
                    break 'damping;
                }
                alpha *= 0.5;
            }
            lambda = (lambda * 100.0).max(1e-10);
        }
        if !improved {
            break;
        }
    }
    (u, res, res <= tol_abs)
}

/// Normal equations (J^T J + lambda I) delta = -J^T F for n in {1, 2}.
fn solve_damped(jac: &[Vec<f64>], fu: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let n = jac.len();
    match n {
        1 => {
            let j = jac[0][0];
            let a = j * j + lambda;
            if a == 0.0 || !a.is_finite() {
                return None;
            }
            Some(vec![-j * fu[0] / a])
        }
        2 => {
            let (a11, a12) = (
                jac[0][0] * jac[0][0] + jac[1][0] * jac[1][0] + lambda,
                jac[0][0] * jac[0][1] + jac[1][0] * jac[1][1],
            );
            let a22 = jac[0][1] * jac[0][1] + jac[1][1] * jac[1][1] + lambda;
            let b1 = -(jac[0][0] * fu[0] + jac[1][0] * fu[1]);
            let b2 = -(jac[0][1] * fu[0] + jac[1][1] * fu[1]);
            let det = a11 * a22 - a12 * a12;
            if det.abs() < 1e-300 || !det.is_finite() {
                return None;
            }
            Some(vec![(b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det])
        }
        _ => unreachable!("sphere solvers cover S^1 and S^2"),
    }
}

enum SphereOutcome {
    /// Distinct converged zeros, each with its residual.
    Converged(Vec<(Vec<f64>, f64)>),
    /// Best (point, residual) seen.
    Failed((Vec<f64>, f64)),
}

/// Multistart zero search; `warm` tries a single warm start first and only
/// falls back to the full start set when it misses.
fn solve_on_sphere(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    d: usize,
    tol_abs: f64,
    warm: Option<&[f64]>,
) -> SphereOutcome {
    if let Some(w) = warm {
        let (u, res, ok) = gauss_newton_on_sphere(f, w, tol_abs, 60);
        if ok {
            return SphereOutcome::Converged(vec![(u, res)]);
        }
    }
    let starts = if d == 1 { circle_starts(64) } else { icosphere_starts() };
    let mut ranked: Vec<(usize, f64)> = starts
        .iter()
        .enumerate()
        .map(|(i, u)| (i, inf_norm(&f(u))))
        .collect();
    ranked.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite residuals"));

    let mut zeros: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut best: (Vec<f64>, f64) = (starts[ranked[0].0].clone(), ranked[0].1);
    for round in 0..2 {
        let take = if round == 0 { 64.min(ranked.len()) } else { ranked.len() };
        for &(i, _) in &ranked[..take] {
            let (u, res, ok) = gauss_newton_on_sphere(f, &starts[i], tol_abs, 80);
            if res < best.1 {
                best = (u.clone(), res);
            }
            if !ok {
                continue;
            }
            // Dedup zeros (antipodes are distinct: they give complementary
            // halfspaces).
            if !zeros.iter().any(|(z, _)| angle_between(z, &u) < 1e-6) {
                zeros.push((u, res));
            }
        }
        if !zeros.is_empty() {
            break;
        }
    }
    if zeros.is_empty() {
        SphereOutcome::Failed(best)
    } else {
        SphereOutcome::Converged(zeros)
    }
}

/// Lexicographic key for deterministic tie-breaks, stable under solver noise.
fn lex_key(u: &[f64]) -> Vec<i64> {
    u.iter().map(|c| (c / 1e-9).round() as i64).collect()
}

fn pick_bisection_zero(zeros: Vec<(Vec<f64>, f64)>) -> (Vec<f64>, f64) {
    // Prefer nondegenerate answers: farthest from the poles, then lex order.
    zeros
        .into_iter()
        .min_by(|a, b| {
            let pa = a.0.last().expect("nonempty").abs();
            let pb = b.0.last().expect("nonempty").abs();
            pa.partial_cmp(&pb)
                .expect("finite")
                .then_with(|| lex_key(&a.0).cmp(&lex_key(&b.0)))
        })
        .expect("nonempty zero list")
}

fn pick_interior_zero(zeros: Vec<(Vec<f64>, f64)>, fractions_at: &dyn Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    zeros
        .into_iter()
        .max_by(|a, b| {
            let score = |u: &[f64]| {
                fractions_at(u)
                    .iter()
                    .map(|f| f.min(1.0 - f))
                    .fold(f64::INFINITY, f64::min)
            };
            score(&a.0)
                .partial_cmp(&score(&b.0))
                .expect("finite")
                .then_with(|| lex_key(&b.0).cmp(&lex_key(&a.0)))
        })
        .expect("nonempty zero list")
        .0
}

fn pick_nearest_zero(zeros: Vec<(Vec<f64>, f64)>, w: &[f64]) -> Vec<f64> {
    zeros
        .into_iter()
        .min_by(|a, b| {
            angle_between(&a.0, w)
                .partial_cmp(&angle_between(&b.0, w))
                .expect("finite")
                .then_with(|| lex_key(&a.0).cmp(&lex_key(&b.0)))
        })
        .expect("nonempty zero list")
        .0
}

fn circle_starts(k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            vec![th.cos(), th.sin()]
        })
        .collect()
}

/// Icosahedron subdivided three times: 642 vertices on S^2.
fn icosphere_starts() -> Vec<Vec<f64>> {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let raw: Vec<[f64; 3]> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
    ];
    let mut verts: Vec<Vec<f64>> = raw.iter().map(|v| normalize(v)).collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..3 {
        let mut cache: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec<f64>>| -> usize {
            let key = (a.min(b), a.max(b));
            if let Some(&i) = cache.get(&key) {
                return i;
            }
            let m = normalize(&[
                (verts[a][0] + verts[b][0]) / 2.0,
                (verts[a][1] + verts[b][1]) / 2.0,
                (verts[a][2] + verts[b][2]) / 2.0,
            ]);
            verts.push(m);
            let i = verts.len() - 1;
            cache.insert(key, i);
            i
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    verts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn charge_2d(seed: u64, n: usize) -> Charge {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        Charge::new(DensityGrid::new_2d(n, n, 0.0, 0.0, 1.0 / n as f64, 1.0 / n as f64, values).unwrap())
    }

    fn uniform_1d(x0: f64, x1: f64, n: usize) -> DensityGrid<f64> {
        let h = (x1 - x0) / n as f64;
        let v = 1.0 / (x1 - x0);
        DensityGrid::new_1d(x0, h, vec![v; n]).unwrap()
    }

    #[test]
    fn lift_sends_equator_point_to_halfline_at_zero() {
        let u = SphereParam::new(vec![1.0, 0.0]).unwrap();
        let h = lift_param(&u);
        assert_eq!(h.functional.coeffs, vec![1.0]);
        assert_eq!(h.functional.offset, 0.0);
        assert!(h.contains(&[2.0]));
        assert!(!h.contains(&[-1.0]));
    }

    #[test]
    fn lift_sends_poles_to_degenerate_halfspaces() {
        use crate::geom::DegenerateKind;
        let full = lift_param(&SphereParam::new(vec![0.0, 0.0, 1.0]).unwrap());
        assert_eq!(full.degenerate, DegenerateKind::Full);
        let empty = lift_param(&SphereParam::new(vec![0.0, 0.0, -1.0]).unwrap());
        assert_eq!(empty.degenerate, DegenerateKind::Empty);
    }

    #[test]
    fn lift_antipode_is_the_complement_up_to_boundary() {
        let charge = charge_2d(11, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let u = SphereParam::new(vec![
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ])
            .unwrap_or_else(|_| SphereParam::new(vec![1.0, 0.0, 0.0]).unwrap());
            let m = charge.mass(&lift_param(&u));
            let mc = charge.mass(&lift_param(&u.antipode()));
            assert!((m + mc - charge.total()).abs() < 1e-12);
        }
    }

    #[test]
    fn odd_map_is_odd() {
        let charges = vec![charge_2d(21, 8), charge_2d(22, 8)];
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let u = SphereParam::new(vec![
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ])
            .unwrap_or_else(|_| SphereParam::new(vec![0.0, 1.0, 0.0]).unwrap());
            let p = odd_map(&charges, &u);
            let q = odd_map(&charges, &u.antipode());
            for (a, b) in p.iter().zip(&q) {
                assert!((a + b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn odd_map_vanishes_at_the_median_of_a_uniform_charge() {
        let charge = Charge::new(uniform_1d(0.0, 1.0, 8));
        // {x : -x + 1/2 >= 0} is the halfline up to 1/2.
        let u = SphereParam::new(vec![-1.0, 0.5]).unwrap();
        let p = odd_map(&[charge], &u);
        assert!(p[0].abs() < 1e-12, "{}", p[0]);
    }

    #[test]
    fn bisection_cuts_a_uniform_density_at_its_median() {
        let charge = Charge::new(uniform_1d(0.0, 1.0, 16));
        let r = find_charge_bisection(&[charge], 1e-9).unwrap();
        assert!(r.residual <= r.tol_abs);
        let f = &r.halfspace.functional;
        let cut = -f.offset / f.coeffs[0];
        assert!((cut - 0.5).abs() < 1e-7, "cut at {cut}");
    }

    #[test]
    fn bisection_halves_centrally_symmetric_charges() {
        // Values with v(i, j) = v(n-1-i, n-1-j) are even about the center
        // point, so every line through it halves the charge.
        let n = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut values = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                if j * n + i <= (n - 1 - j) * n + (n - 1 - i) {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    values[j * n + i] = v;
                    values[(n - 1 - j) * n + (n - 1 - i)] = v;
                }
            }
        }
        let g1 = DensityGrid::new_2d(n, n, -0.2, 0.1, 0.1, 0.1, values.clone()).unwrap();
        let mut values2 = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                if j * n + i <= (n - 1 - j) * n + (n - 1 - i) {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    values2[j * n + i] = v;
                    values2[(n - 1 - j) * n + (n - 1 - i)] = v;
                }
            }
        }
        let g2 = DensityGrid::new_2d(n, n, -0.2, 0.1, 0.1, 0.1, values2).unwrap();
        let charges = vec![Charge::new(g1), Charge::new(g2)];
        let r = find_charge_bisection(&charges, 1e-9).unwrap();
        assert!(r.residual <= r.tol_abs, "residual {}", r.residual);
    }

    #[test]
    fn continuation_finds_the_symmetric_equal_cut_on_the_line() {
        let m0 = uniform_1d(0.0, 1.0, 32);
        let m1 = uniform_1d(0.25, 0.75, 32);
        let r = find_equal_fraction_halfspace(&[m0, m1], &ContinuationConfig::default()).unwrap();
        assert!(r.residual < 1e-7, "residual {}", r.residual);
        assert!((r.common_fraction - 0.5).abs() < 1e-5, "t = {}", r.common_fraction);
        let f = &r.halfspace.functional;
        let cut = -f.offset / f.coeffs[0];
        assert!((cut - 0.5).abs() < 1e-5, "cut at {cut}");
    }

    #[test]
    fn continuation_steps_satisfy_the_shifted_identity_and_ascend() {
        // mu_2 enclosed by mu_0 and mu_1: frames around the unit square with
        // a central blob last, the layout whose small cuts cannot ascend.
        let (m0, m1, m2) = frame_fixture();
        let cfg = ContinuationConfig::default();
        let r = find_equal_fraction_halfspace(&[m0, m1, m2], &cfg).unwrap();
        assert!(!r.steps.is_empty());
        for step in &r.steps {
            assert!(step.eq2_residual <= cfg.zero_tol, "eq2 {}", step.eq2_residual);
            if step.fractions.iter().all(|f| *f < 0.5) {
                for w in step.fractions.windows(2) {
                    assert!(w[1] - w[0] >= -cfg.zero_tol, "fractions {:?}", step.fractions);
                }
            }
        }
        assert!(r.residual <= 10.0 * cfg.zero_tol, "final residual {}", r.residual);
        assert!(r.common_fraction >= cfg.epsilon - 1e-4, "t = {}", r.common_fraction);
        assert!(r.common_fraction <= 0.5 + 1e-4, "t = {}", r.common_fraction);
    }

    /// Two frame-like spread measures and one central blob, blob last.
    fn frame_fixture() -> (DensityGrid<f64>, DensityGrid<f64>, DensityGrid<f64>) {
        let n = 24;
        let h = 1.0 / n as f64;
        let mut top_bottom = vec![0.0; n * n];
        let mut left_right = vec![0.0; n * n];
        let mut blob = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                let x = (i as f64 + 0.5) * h;
                let y = (j as f64 + 0.5) * h;
                if y < 0.2 || y > 0.8 {
                    top_bottom[j * n + i] = 1.0;
                }
                if x < 0.2 || x > 0.8 {
                    left_right[j * n + i] = 1.0;
                }
                let r2 = (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5);
                if r2 < 0.12 * 0.12 {
                    blob[j * n + i] = 1.0;
                }
            }
        }
        let mk = |v: Vec<f64>| {
            let mut g = DensityGrid::new_2d(n, n, 0.0, 0.0, h, h, v).unwrap();
            g.normalize().unwrap();
            g
        };
        (mk(top_bottom), mk(left_right), mk(blob))
    }

    #[test]
    fn complement_flip_preserves_additivity() {
        let (m0, m1, m2) = frame_fixture();
        let measures = [m0, m1, m2];
        let r = find_equal_fraction_halfspace(&measures, &ContinuationConfig::default()).unwrap();
        let comp = r.halfspace.complement();
        for (m, f) in measures.iter().zip(&r.fractions) {
            let fc = m.halfspace_mass(&comp);
            assert!((fc - (1.0 - f)).abs() < 1e-12);
        }
    }

    #[test]
    fn probe_finds_ascending_tails() {
        // Nested right tails: the halfline {x >= c} near the right end cuts
        // fractions that strictly grow with the index.
        let m0 = uniform_1d(0.0, 1.0, 64);
        let m1 = uniform_1d(0.1, 1.0, 64);
        let m2 = uniform_1d(0.2, 1.0, 64);
        let report = epsilon_not_permuted_probe(&[m0, m1, m2], 0.2, 40_000).unwrap();
        assert!(!report.violations.is_empty());
        let (_, fr) = &report.violations[0];
        assert!(fr[0] < fr[1] && fr[1] < fr[2]);
        assert!(fr.iter().all(|f| *f < 0.2));
    }

    #[test]
    fn probe_reports_no_violations_for_an_enclosed_last_measure() {
        let (m0, m1, m2) = frame_fixture();
        let report = epsilon_not_permuted_probe(&[m0, m1, m2], 0.05, 100_000).unwrap();
        assert!(report.violations.is_empty(), "found {:?}", report.violations.len());
    }

    #[test]
    fn probe_with_vanishing_epsilon_realizes_nothing() {
        let m0 = uniform_1d(0.0, 1.0, 16);
        let m1 = uniform_1d(0.2, 0.9, 16);
        let report = epsilon_not_permuted_probe(&[m0, m1], 1e-12, 10_000).unwrap();
        assert!(report.violations.is_empty());
        assert!(report.realized_perms.is_empty());
    }

    #[test]
    fn anchored_cut_passes_through_the_anchor_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let n = 12;
        let values: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut g0 = DensityGrid::new_2d(n, n, 0.0, 0.0, 1.0 / n as f64, 1.0 / n as f64, values).unwrap();
        g0.normalize().unwrap();
        let values: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut g1 = DensityGrid::new_2d(n, n, 0.0, 0.0, 1.0 / n as f64, 1.0 / n as f64, values).unwrap();
        g1.normalize().unwrap();
        let p = Point::new(vec![ratio(2, 5), ratio(1, 2)]);
        let cut = point_anchored_equal_cut(&[g0, g1], &p, 1e-9).unwrap();
        use crate::geom::side_of;
        use crate::geom::Sign;
        assert_eq!(side_of(&cut.halfspace.functional, &p), Sign::Zero);
        assert!(cut.residual <= 1e-9 * 2.0 + 1e-12, "gap {}", cut.residual);
    }

    #[test]
    fn anchored_cut_on_identical_measures_is_balanced() {
        let n = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let values: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..1.0)).collect();
        let mut g = DensityGrid::new_2d(n, n, -1.0, -1.0, 0.25, 0.25, values).unwrap();
        g.normalize().unwrap();
        let p = Point::new(vec![ratio(-1, 4), ratio(1, 8)]);
        let cut = point_anchored_equal_cut(&[g.clone(), g], &p, 1e-9).unwrap();
        assert!((cut.fractions[0] - cut.fractions[1]).abs() < 1e-12);
    }

    #[test]
    fn icosphere_has_the_expected_vertex_count() {
        let verts = icosphere_starts();
        assert_eq!(verts.len(), 642);
        for v in &verts {
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation_rejects_bad_schedules() {
        let mut cfg = ContinuationConfig::default();
        cfg.s_min = 0.5;
        assert!(cfg.validate().is_err());
        let mut cfg = ContinuationConfig::default();
        cfg.gamma = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ContinuationConfig::default();
        cfg.epsilon = 0.5;
        assert!(cfg.validate().is_err());
    }
}
