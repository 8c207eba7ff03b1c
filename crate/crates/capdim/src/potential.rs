//! Discrete logarithmic potential theory: energies, equilibrium measures,
//! capacity, Fekete diameters, and the polar/nonpolar classifier.
//!
//! The equilibrium solver works with a *smoothed* kernel: each sample point
//! carries a small circle of radius half its nearest-neighbour distance, and
//! the diagonal of the log-distance kernel is filled with the self-energy of
//! the uniform measure on that circle (`ln r_i`). This keeps the maximised
//! quadratic form equal to the exact energy of a genuine (smeared) measure,
//! which removes the `ln n / n` bias the raw atomic energy suffers from and
//! makes the reported capacity scale exactly under dilation.

use crate::geometry::{self, BoundaryPath, CompactSetSpec, GeometryError};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_N: usize = 256;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_THRESHOLD: f64 = 1e-6;
/// Sample sizes used by the polarity classifier, coarse to fine.
pub const POLARITY_SCHEDULE: [usize; 3] = [64, 128, 256];
/// Relative drift between the last two capacity estimates below which the
/// sequence counts as stabilised.
pub const STABILIZATION_WINDOW: f64 = 0.1;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("support points and weights have different lengths ({support} vs {weights})")]
    MismatchedLengths { support: usize, weights: usize },
    #[error("weights must be finite and nonnegative")]
    BadWeight,
    #[error("support contains coincident points")]
    CoincidentSupport,
    #[error("need at least {needed} support points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("linear solve failed on the kernel system")]
    LinearSolveFailed,
    #[error("equilibrium iteration did not reach gap <= {tol} (best gap {gap})")]
    NonConvergence { gap: f64, tol: f64 },
}

/// A finitely supported positive measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    #[serde(with = "crate::cplx::vec")]
    pub support: Vec<Complex64>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(support: Vec<Complex64>, weights: Vec<f64>) -> Result<Self, PotentialError> {
        if support.len() != weights.len() {
            return Err(PotentialError::MismatchedLengths {
                support: support.len(),
                weights: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(PotentialError::BadWeight);
        }
        Ok(DiscreteMeasure { support, weights })
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The complex moment `sum_i w_i z_i^l`.
    pub fn moment(&self, l: u32) -> Complex64 {
        self.support
            .iter()
            .zip(&self.weights)
            .map(|(z, w)| *w * z.powu(l))
            .sum()
    }

    /// Distance from `z` to the nearest support point of positive weight.
    pub fn distance_to_support(&self, z: Complex64) -> f64 {
        self.support
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(p, _)| (z - p).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// A difference of two finitely supported positive measures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedMeasure {
    pub positive: DiscreteMeasure,
    pub negative: DiscreteMeasure,
}

impl SignedMeasure {
    /// Net mass (0 for an equilibrium difference).
    pub fn mass(&self) -> f64 {
        self.positive.mass() - self.negative.mass()
    }

    pub fn moment(&self, l: u32) -> Complex64 {
        self.positive.moment(l) - self.negative.moment(l)
    }

    pub fn distance_to_support(&self, z: Complex64) -> f64 {
        self.positive
            .distance_to_support(z)
            .min(self.negative.distance_to_support(z))
    }
}

/// Plain atomic log-energy `sum_{i != j} w_i w_j ln|z_i - z_j|`.
///
/// Errors when two support points of positive weight coincide (the energy
/// would be `-inf`).
pub fn log_energy(m: &DiscreteMeasure) -> Result<f64, PotentialError> {
    let pts: Vec<(Complex64, f64)> = m
        .support
        .iter()
        .zip(&m.weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(z, w)| (*z, *w))
        .collect();
    let mut total = 0.0;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let d = (pts[i].0 - pts[j].0).norm();
            if d == 0.0 {
                return Err(PotentialError::CoincidentSupport);
            }
            total += 2.0 * pts[i].1 * pts[j].1 * d.ln();
        }
    }
    Ok(total)
}

/// Logarithmic potential `sum_i w_i ln|z - z_i|`. Evaluating on a support
/// point of positive weight returns `-inf` (a signed flag, not an error).
pub fn potential_eval(m: &DiscreteMeasure, z: Complex64) -> f64 {
    let mut total = 0.0;
    for (p, w) in m.support.iter().zip(&m.weights) {
        if *w == 0.0 {
            continue;
        }
        let d = (z - p).norm();
        if d == 0.0 {
            return f64::NEG_INFINITY;
        }
        total += w * d.ln();
    }
    total
}

/// Equilibrium solve output: the measure plus the diagnostics needed to
/// certify it (energies, final stationarity gap, iteration counts).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub measure: DiscreteMeasure,
    /// `w' K w` with the raw zero-diagonal kernel.
    pub atomic_energy: f64,
    /// `w' K~ w` with the smoothed diagonal; `exp` of this is the capacity.
    pub smoothed_energy: f64,
    /// Final simplex-gradient gap `max_i g_i - w'g` (stationarity residual).
    pub gap: f64,
    /// Largest deviation `|g_i - w'g|` over the support of the measure —
    /// flatness of the smoothed potential on the support.
    pub support_residual: f64,
    pub active_set_rounds: usize,
    pub polish_iterations: usize,
    pub min_separation: f64,
}

/// Maximises the smoothed log-energy over probability vectors on the
/// sampled support. Active-set solve first (one linear system per round),
/// then a Frank-Wolfe polish if the gap still exceeds `tol`.
pub fn equilibrium_solve(
    spec: &CompactSetSpec,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<EquilibriumSolution, PotentialError> {
    let n_eff = match spec {
        // A point set cannot supply more atoms than it has.
        CompactSetSpec::PointSet { points } => n.min(points.len()),
        _ => n,
    };
    if n_eff < 2 {
        return Err(PotentialError::TooFewPoints {
            needed: 2,
            got: n_eff,
        });
    }
    let sample = geometry::sample_support(spec, n_eff, seed)?;
    let pts = sample.points;
    let n = pts.len();

    // Kernel with smoothed diagonal.
    let mut kt = DMatrix::<f64>::zeros(n, n);
    let mut nearest = vec![f64::INFINITY; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (pts[i] - pts[j]).norm();
            let ld = d.ln();
            kt[(i, j)] = ld;
            kt[(j, i)] = ld;
            nearest[i] = nearest[i].min(d);
            nearest[j] = nearest[j].min(d);
        }
    }
    for i in 0..n {
        kt[(i, i)] = (0.5 * nearest[i]).ln();
    }

    let mut active: Vec<usize> = (0..n).collect();
    let mut w = DVector::<f64>::zeros(n);
    let mut rounds = 0usize;

    loop {
        rounds += 1;
        if rounds > 4 * n + 16 {
            return Err(PotentialError::NonConvergence { gap: f64::NAN, tol });
        }
        let k = active.len();
        let sub = DMatrix::<f64>::from_fn(k, k, |r, c| kt[(active[r], active[c])]);
        let rhs = DVector::<f64>::from_element(k, 1.0);
        let x = sub
            .lu()
            .solve(&rhs)
            .ok_or(PotentialError::LinearSolveFailed)?;
        let s: f64 = x.iter().sum();
        if !(s.is_finite() && s != 0.0) {
            return Err(PotentialError::LinearSolveFailed);
        }

        // Drop negative-weight atoms and re-solve.
        let negs: Vec<usize> = (0..k).filter(|&r| x[r] / s < -1e-14).collect();
        if !negs.is_empty() && k - negs.len() >= 2 {
            let drop: std::collections::HashSet<usize> = negs.into_iter().collect();
            active = active
                .iter()
                .enumerate()
                .filter(|(r, _)| !drop.contains(r))
                .map(|(_, &i)| i)
                .collect();
            continue;
        }

        w.fill(0.0);
        for (r, &i) in active.iter().enumerate() {
            w[i] = (x[r] / s).max(0.0);
        }
        let g = 2.0 * (&kt * &w);
        let lambda = g.dot(&w);
        // Off-support stationarity: activate the worst violator, if any.
        let add_tol = 1e-10 * lambda.abs().max(1.0);
        let mut worst: Option<(usize, f64)> = None;
        for i in 0..n {
            if w[i] == 0.0 && g[i] > lambda + add_tol {
                let excess = g[i] - lambda;
                if worst.is_none_or(|(_, e)| excess > e) {
                    worst = Some((i, excess));
                }
            }
        }
        if let Some((i, _)) = worst {
            if !active.contains(&i) {
                active.push(i);
                active.sort_unstable();
                continue;
            }
        }
        break;
    }

    // Frank-Wolfe polish toward the simplex optimum (usually a no-op: the
    // active-set solution already sits at machine-level stationarity).
    let mut polish = 0usize;
    let mut gap;
    loop {
        let g = 2.0 * (&kt * &w);
        let lambda = g.dot(&w);
        let (imax, gmax) =
            g.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, &v)| {
                    if v > acc.1 {
                        (i, v)
                    } else {
                        acc
                    }
                },
            );
        gap = (gmax - lambda).max(0.0);
        if gap <= tol || polish >= 200 {
            break;
        }
        polish += 1;
        // d = e_imax - w; ascent step with exact line search on the
        // concave quadratic.
        let mut d = -w.clone();
        d[imax] += 1.0;
        let dkd = d.dot(&(&kt * &d));
        let step = if dkd < 0.0 {
            (gap / (-2.0 * dkd)).clamp(0.0, 1.0)
        } else {
            1e-3
        };
        w *= 1.0 - step;
        w[imax] += step;
    }
    if gap > tol {
        return Err(PotentialError::NonConvergence { gap, tol });
    }

    // Energies and the on-support flatness residual.
    let g = 2.0 * (&kt * &w);
    let lambda = g.dot(&w);
    let mut support_residual = 0.0f64;
    for i in 0..n {
        if w[i] > 0.0 {
            support_residual = support_residual.max((g[i] - lambda).abs());
        }
    }
    let smoothed_energy = 0.5 * lambda;
    let mut diag = 0.0;
    for i in 0..n {
        if w[i] > 0.0 {
            diag += w[i] * w[i] * kt[(i, i)];
        }
    }
    let atomic_energy = smoothed_energy - diag;

    let (support, weights): (Vec<Complex64>, Vec<f64>) = pts
        .iter()
        .zip(w.iter())
        .filter(|(_, w)| **w > 0.0)
        .map(|(z, w)| (*z, *w))
        .unzip();
    Ok(EquilibriumSolution {
        measure: DiscreteMeasure { support, weights },
        atomic_energy,
        smoothed_energy,
        gap,
        support_residual,
        active_set_rounds: rounds,
        polish_iterations: polish,
        min_separation: sample.min_separation,
    })
}

/// The discrete equilibrium measure of `spec` on `n` sampled points.
pub fn equilibrium_measure(
    spec: &CompactSetSpec,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<DiscreteMeasure, PotentialError> {
    Ok(equilibrium_solve(spec, n, tol, seed)?.measure)
}

/// Capacity estimate `exp(smoothed equilibrium energy)`.
///
/// Finite point sets have capacity 0 and short-circuit the solve.
pub fn capacity(
    spec: &CompactSetSpec,
    n: usize,
    tol: f64,
    seed: u64,
) -> Result<f64, PotentialError> {
    if geometry::is_finite_set(spec) {
        return Ok(0.0);
    }
    Ok(equilibrium_solve(spec, n, tol, seed)?.smoothed_energy.exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Polar,
    Nonpolar,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolarityVerdict {
    pub capacity_estimate: f64,
    /// Capacity estimates along the refinement schedule.
    pub sequence: Vec<f64>,
    pub classification: Polarity,
    pub threshold: f64,
}

/// Classifies `spec` as polar (capacity below `threshold`), nonpolar
/// (capacity sequence stabilised above it), or inconclusive.
pub fn classify_polarity(
    spec: &CompactSetSpec,
    threshold: f64,
) -> Result<PolarityVerdict, PotentialError> {
    classify_polarity_with(
        spec,
        threshold,
        &POLARITY_SCHEDULE,
        DEFAULT_TOL,
        DEFAULT_SEED,
    )
}

pub fn classify_polarity_with(
    spec: &CompactSetSpec,
    threshold: f64,
    schedule: &[usize],
    tol: f64,
    seed: u64,
) -> Result<PolarityVerdict, PotentialError> {
    if geometry::is_finite_set(spec) {
        return Ok(PolarityVerdict {
            capacity_estimate: 0.0,
            sequence: vec![0.0; schedule.len()],
            classification: Polarity::Polar,
            threshold,
        });
    }
    let mut sequence = Vec::with_capacity(schedule.len());
    for &n in schedule {
        sequence.push(capacity(spec, n, tol, seed)?);
    }
    let last = *sequence.last().expect("schedule must be non-empty");
    let classification = if last < threshold {
        Polarity::Polar
    } else if sequence.len() >= 2 {
        let prev = sequence[sequence.len() - 2];
        if (last - prev).abs() <= STABILIZATION_WINDOW * last.abs() {
            Polarity::Nonpolar
        } else {
            Polarity::Inconclusive
        }
    } else {
        Polarity::Inconclusive
    };
    Ok(PolarityVerdict {
        capacity_estimate: last,
        sequence,
        classification,
        threshold,
    })
}

/// n-point Fekete diameter: maximises the product of pairwise distances
/// over the support and returns the geometric-mean distance
/// `exp(sum_{i != j} ln|z_i - z_j| / (n(n-1)))`.
///
/// For `n = 2` this is the diameter of the set.
pub fn fekete_diameter(spec: &CompactSetSpec, n: usize, seed: u64) -> Result<f64, PotentialError> {
    let points = fekete_points(spec, n, seed)?;
    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            total += 2.0 * (points[i] - points[j]).norm().ln();
        }
    }
    Ok((total / (n as f64 * (n as f64 - 1.0))).exp())
}

/// The optimised Fekete configuration itself.
pub fn fekete_points(
    spec: &CompactSetSpec,
    n: usize,
    seed: u64,
) -> Result<Vec<Complex64>, PotentialError> {
    if n < 2 {
        return Err(PotentialError::TooFewPoints { needed: 2, got: n });
    }
    geometry::validate(spec.clone())?;
    if let Some(path) = BoundaryPath::from_spec(spec) {
        Ok(fekete_on_path(&path, n, seed))
    } else {
        fekete_on_point_set(spec, n)
    }
}

const COARSE_STEPS: usize = 192;
const GOLDEN_ITERS: usize = 48;

fn fekete_on_path(path: &BoundaryPath, n: usize, seed: u64) -> Vec<Complex64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xFEC7_15A9_0D2B_4E63);
    let rot: f64 = if path.cyclic { rng.gen::<f64>() } else { 0.0 };
    let mut params: Vec<f64> = (0..n)
        .map(|i| {
            let t = rot + (i as f64 + 0.5) / n as f64;
            if path.cyclic {
                t.rem_euclid(1.0)
            } else {
                (i as f64 + 0.5) / n as f64
            }
        })
        .collect();
    let mut points: Vec<Complex64> = params.iter().map(|&t| path.point(t)).collect();

    // Sum of log-distances from candidate position t to all other points.
    let gain = |t: f64, skip: usize, points: &[Complex64]| -> f64 {
        let p = path.point(t);
        let mut s = 0.0;
        for (j, q) in points.iter().enumerate() {
            if j == skip {
                continue;
            }
            let d = (p - q).norm();
            if d == 0.0 {
                return f64::NEG_INFINITY;
            }
            s += d.ln();
        }
        s
    };

    let coarse_step = 1.0 / COARSE_STEPS as f64;
    for _sweep in 0..60 {
        let mut moved = false;
        for i in 0..n {
            let current = gain(params[i], i, &points);
            // Coarse scan of the whole boundary.
            let mut best_t = params[i];
            let mut best_v = current;
            for k in 0..COARSE_STEPS {
                let t = if path.cyclic {
                    (k as f64 + 0.5) * coarse_step
                } else {
                    k as f64 / (COARSE_STEPS - 1) as f64
                };
                let v = gain(t, i, &points);
                if v > best_v {
                    best_v = v;
                    best_t = t;
                }
            }
            // Golden-section refinement around the best coarse candidate.
            let (mut lo, mut hi) = (best_t - 1.5 * coarse_step, best_t + 1.5 * coarse_step);
            if !path.cyclic {
                lo = lo.max(0.0);
                hi = hi.min(1.0);
            }
            let phi = (5.0f64.sqrt() - 1.0) / 2.0;
            let (mut a, mut b) = (lo, hi);
            let mut c = b - phi * (b - a);
            let mut d = a + phi * (b - a);
            let (mut fc, mut fd) = (gain(c, i, &points), gain(d, i, &points));
            for _ in 0..GOLDEN_ITERS {
                if fc > fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - phi * (b - a);
                    fc = gain(c, i, &points);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + phi * (b - a);
                    fd = gain(d, i, &points);
                }
            }
            let refined = if fc > fd { c } else { d };
            let refined_v = fc.max(fd);
            let (cand_t, cand_v) = if refined_v > best_v {
                (refined, refined_v)
            } else {
                (best_t, best_v)
            };
            if cand_v > current + 1e-13 * current.abs().max(1.0) {
                params[i] = if path.cyclic {
                    cand_t.rem_euclid(1.0)
                } else {
                    cand_t.clamp(0.0, 1.0)
                };
                points[i] = path.point(params[i]);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    points
}

fn fekete_on_point_set(spec: &CompactSetSpec, n: usize) -> Result<Vec<Complex64>, PotentialError> {
    let all: Vec<Complex64> = match spec {
        CompactSetSpec::PointSet { points } => points.clone(),
        CompactSetSpec::Union { children } => {
            let mut out = Vec::new();
            for c in children {
                if let CompactSetSpec::PointSet { points } = c {
                    out.extend_from_slice(points);
                }
            }
            out
        }
        _ => unreachable!("callers route curve-like specs to the path optimiser"),
    };
    if n > all.len() {
        return Err(PotentialError::Geometry(GeometryError::NotEnoughPoints {
            requested: n,
            available: all.len(),
        }));
    }
    if n == all.len() {
        return Ok(all);
    }
    // Greedy seed: the farthest pair, then best marginal additions.
    let mut chosen: Vec<usize> = {
        let mut best = (0, 1, f64::NEG_INFINITY);
        for i in 0..all.len() {
            for j in (i + 1)..all.len() {
                let d = (all[i] - all[j]).norm();
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        vec![best.0, best.1]
    };
    while chosen.len() < n {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for cand in 0..all.len() {
            if chosen.contains(&cand) {
                continue;
            }
            let s: f64 = chosen
                .iter()
                .map(|&c| (all[cand] - all[c]).norm().ln())
                .sum();
            if s > best.1 {
                best = (cand, s);
            }
        }
        chosen.push(best.0);
    }
    // Swap improvement until stable.
    let score = |set: &[usize]| -> f64 {
        let mut s = 0.0;
        for a in 0..set.len() {
            for b in (a + 1)..set.len() {
                s += (all[set[a]] - all[set[b]]).norm().ln();
            }
        }
        s
    };
    let mut current = score(&chosen);
    for _ in 0..20 {
        let mut improved = false;
        for slot in 0..chosen.len() {
            for cand in 0..all.len() {
                if chosen.contains(&cand) {
                    continue;
                }
                let old = chosen[slot];
                chosen[slot] = cand;
                let s = score(&chosen);
                if s > current + 1e-13 {
                    current = s;
                    improved = true;
                } else {
                    chosen[slot] = old;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(chosen.into_iter().map(|i| all[i]).collect())
}
