//! Compact subsets of the plane: specification, validation, boundary
//! sampling, and membership tests.
//!
//! Sets are described declaratively ([`CompactSetSpec`]) and serialized as
//! tagged JSON, e.g. `{"type": "disc", "center": [0.0, 0.0], "radius": 1.0}`.
//! Sampling is deterministic: the random stream is derived from `(seed, n,
//! variant kind)` only, never from the placement of the set, so congruent
//! sets receive congruent sample patterns. That property is load-bearing for
//! the cancellation tests downstream — do not "improve" it by hashing centers
//! into the stream.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative jitter applied to evenly spaced boundary samples. Breaking the
/// exact symmetry keeps downstream linear systems nonsingular without
/// perturbing energies at any observable level.
pub const SAMPLE_JITTER: f64 = 5e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CompactSetSpec {
    Disc {
        #[serde(with = "crate::cplx")]
        center: Complex64,
        radius: f64,
    },
    Segment {
        #[serde(with = "crate::cplx")]
        a: Complex64,
        #[serde(with = "crate::cplx")]
        b: Complex64,
    },
    Polygon {
        #[serde(with = "crate::cplx::vec")]
        vertices: Vec<Complex64>,
    },
    PointSet {
        #[serde(with = "crate::cplx::vec")]
        points: Vec<Complex64>,
    },
    Union {
        children: Vec<CompactSetSpec>,
    },
}

/// A point of C^2, used by the two-variable module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint2 {
    #[serde(with = "crate::cplx")]
    pub z: Complex64,
    #[serde(with = "crate::cplx")]
    pub w: Complex64,
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("disc radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon edge {0} has zero length")]
    ZeroLengthEdge(usize),
    #[error("polygon boundary self-intersects (edges {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("point set must be non-empty")]
    EmptyPointSet,
    #[error("point set contains coincident points")]
    CoincidentPoints,
    #[error("union must contain at least one child")]
    EmptyUnion,
    #[error("coordinates must be finite")]
    NonFiniteCoordinate,
    #[error("requested {requested} samples but the point set has only {available}")]
    NotEnoughPoints { requested: usize, available: usize },
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("sampling produced coincident points; retry with a different seed")]
    SampleCollision,
}

/// Checks a specification for well-formedness and hands it back unchanged.
///
/// Rejects nonpositive or non-finite radii, degenerate segments, polygons
/// with fewer than three vertices, zero-length edges, or self-intersecting
/// boundaries, empty point sets or unions, and any non-finite coordinate.
pub fn validate(spec: CompactSetSpec) -> Result<CompactSetSpec, GeometryError> {
    check(&spec)?;
    Ok(spec)
}

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

fn check(spec: &CompactSetSpec) -> Result<(), GeometryError> {
    match spec {
        CompactSetSpec::Disc { center, radius } => {
            if !finite(*center) {
                return Err(GeometryError::NonFiniteCoordinate);
            }
            if !(radius.is_finite() && *radius > 0.0) {
                return Err(GeometryError::BadRadius(*radius));
            }
        }
        CompactSetSpec::Segment { a, b } => {
            if !finite(*a) || !finite(*b) {
                return Err(GeometryError::NonFiniteCoordinate);
            }
            if a == b {
                return Err(GeometryError::DegenerateSegment);
            }
        }
        CompactSetSpec::Polygon { vertices } => {
            if vertices.len() < 3 {
                return Err(GeometryError::TooFewVertices(vertices.len()));
            }
            if vertices.iter().any(|v| !finite(*v)) {
                return Err(GeometryError::NonFiniteCoordinate);
            }
            let m = vertices.len();
            for i in 0..m {
                if vertices[i] == vertices[(i + 1) % m] {
                    return Err(GeometryError::ZeroLengthEdge(i));
                }
            }
            for i in 0..m {
                for j in (i + 1)..m {
                    // Adjacent edges share an endpoint; skip those pairs
                    // (including the wrap-around pair).
                    if j == i + 1 || (i == 0 && j == m - 1) {
                        continue;
                    }
                    let (a1, b1) = (vertices[i], vertices[(i + 1) % m]);
                    let (a2, b2) = (vertices[j], vertices[(j + 1) % m]);
                    if segments_intersect(a1, b1, a2, b2) {
                        return Err(GeometryError::SelfIntersecting(i, j));
                    }
                }
            }
        }
        CompactSetSpec::PointSet { points } => {
            if points.is_empty() {
                return Err(GeometryError::EmptyPointSet);
            }
            if points.iter().any(|p| !finite(*p)) {
                return Err(GeometryError::NonFiniteCoordinate);
            }
            for i in 0..points.len() {
                for j in (i + 1)..points.len() {
                    if points[i] == points[j] {
                        return Err(GeometryError::CoincidentPoints);
                    }
                }
            }
        }
        CompactSetSpec::Union { children } => {
            if children.is_empty() {
                return Err(GeometryError::EmptyUnion);
            }
            for c in children {
                check(c)?;
            }
        }
    }
    Ok(())
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

fn on_segment(a: Complex64, b: Complex64, p: Complex64) -> bool {
    p.re >= a.re.min(b.re)
        && p.re <= a.re.max(b.re)
        && p.im >= a.im.min(b.im)
        && p.im <= a.im.max(b.im)
}

fn segments_intersect(a1: Complex64, b1: Complex64, a2: Complex64, b2: Complex64) -> bool {
    let d1 = cross(a2, b2, a1);
    let d2 = cross(a2, b2, b1);
    let d3 = cross(a1, b1, a2);
    let d4 = cross(a1, b1, b2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a2, b2, a1))
        || (d2 == 0.0 && on_segment(a2, b2, b1))
        || (d3 == 0.0 && on_segment(a1, b1, a2))
        || (d4 == 0.0 && on_segment(a1, b1, b2))
}

/// Boundary samples of a spec together with their minimum pairwise
/// separation (the energy kernel uses it to size its diagonal smoothing).
#[derive(Clone, Debug)]
pub struct SupportSample {
    pub points: Vec<Complex64>,
    pub min_separation: f64,
}

const KIND_DISC: u64 = 1;
const KIND_SEGMENT: u64 = 2;
const KIND_POLYGON: u64 = 3;

fn mix(seed: u64, n: u64, kind: u64) -> u64 {
    let mut x = seed
        .wrapping_add(kind.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(n.wrapping_mul(0xD1B5_4A32_D192_ED03));
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn stream(seed: u64, n: usize, kind: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, n as u64, kind))
}

/// Draws `n` nearly equispaced, jittered points on the support of `spec`:
/// the boundary circle of a disc, the segment itself, a polygon's boundary,
/// the points of a point set (at most its cardinality), or a length-weighted
/// split across a union's children.
///
/// Deterministic in `(spec, n, seed)`; congruent specs of the same variant
/// receive congruent patterns under the same `(n, seed)`.
pub fn sample_support(
    spec: &CompactSetSpec,
    n: usize,
    seed: u64,
) -> Result<SupportSample, GeometryError> {
    if n == 0 {
        return Err(GeometryError::ZeroSamples);
    }
    check(spec)?;
    let points = sample_inner(spec, n, seed)?;
    let min_separation = min_separation(&points);
    if points.len() > 1 && (min_separation.is_nan() || min_separation <= 0.0) {
        return Err(GeometryError::SampleCollision);
    }
    Ok(SupportSample {
        points,
        min_separation,
    })
}

fn sample_inner(
    spec: &CompactSetSpec,
    n: usize,
    seed: u64,
) -> Result<Vec<Complex64>, GeometryError> {
    match spec {
        CompactSetSpec::Disc { center, radius } => {
            let mut rng = stream(seed, n, KIND_DISC);
            let rot: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
            let spacing = std::f64::consts::TAU / n as f64;
            Ok((0..n)
                .map(|i| {
                    let u: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                    let theta = rot + spacing * (i as f64 + 0.5 + SAMPLE_JITTER * u);
                    center + radius * Complex64::new(theta.cos(), theta.sin())
                })
                .collect())
        }
        CompactSetSpec::Segment { a, b } => {
            let mut rng = stream(seed, n, KIND_SEGMENT);
            Ok((0..n)
                .map(|i| {
                    let u: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                    let t = (i as f64 + 0.5 + SAMPLE_JITTER * u) / n as f64;
                    a + t * (b - a)
                })
                .collect())
        }
        CompactSetSpec::Polygon { vertices } => {
            let mut rng = stream(seed, n, KIND_POLYGON);
            let m = vertices.len();
            let lengths: Vec<f64> = (0..m)
                .map(|i| (vertices[(i + 1) % m] - vertices[i]).norm())
                .collect();
            let total: f64 = lengths.iter().sum();
            Ok((0..n)
                .map(|i| {
                    let u: f64 = rng.gen::<f64>() * 2.0 - 1.0;
                    let mut s = total * (i as f64 + 0.5 + SAMPLE_JITTER * u) / n as f64;
                    let mut e = 0;
                    while e + 1 < m && s > lengths[e] {
                        s -= lengths[e];
                        e += 1;
                    }
                    let t = (s / lengths[e]).clamp(0.0, 1.0);
                    vertices[e] + t * (vertices[(e + 1) % m] - vertices[e])
                })
                .collect())
        }
        CompactSetSpec::PointSet { points } => {
            if n > points.len() {
                return Err(GeometryError::NotEnoughPoints {
                    requested: n,
                    available: points.len(),
                });
            }
            Ok(points[..n].to_vec())
        }
        CompactSetSpec::Union { children } => {
            // Budget by boundary length. Point-set children carry no length;
            // they only receive samples when the whole union is discrete.
            let lengths: Vec<f64> = children.iter().map(boundary_length).collect();
            let total: f64 = lengths.iter().sum();
            let mut out = Vec::with_capacity(n);
            if total == 0.0 {
                // Union of point sets: allocate by cardinality, first-come.
                let mut left = n;
                for c in children {
                    if left == 0 {
                        break;
                    }
                    if let CompactSetSpec::PointSet { points } = c {
                        let take = left.min(points.len());
                        out.extend_from_slice(&points[..take]);
                        left -= take;
                    }
                }
                if left > 0 {
                    return Err(GeometryError::NotEnoughPoints {
                        requested: n,
                        available: n - left,
                    });
                }
                return Ok(out);
            }
            let positive: Vec<usize> = (0..children.len()).filter(|&i| lengths[i] > 0.0).collect();
            if n < positive.len() {
                // Too few samples to cover every component; spread over the
                // longest ones.
                let mut order = positive.clone();
                order.sort_by(|&i, &j| lengths[j].total_cmp(&lengths[i]));
                for &i in order.iter().take(n) {
                    out.extend(sample_inner(&children[i], 1, seed)?);
                }
                return Ok(out);
            }
            // Largest-remainder allocation with at least one sample each.
            let mut alloc: Vec<usize> = positive
                .iter()
                .map(|&i| ((n as f64) * lengths[i] / total).floor() as usize)
                .map(|k| k.max(1))
                .collect();
            let mut assigned: usize = alloc.iter().sum();
            let mut frac: Vec<(f64, usize)> = positive
                .iter()
                .enumerate()
                .map(|(slot, &i)| {
                    let exact = (n as f64) * lengths[i] / total;
                    (exact - exact.floor(), slot)
                })
                .collect();
            frac.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut cursor = 0;
            while assigned < n {
                alloc[frac[cursor % frac.len()].1] += 1;
                assigned += 1;
                cursor += 1;
            }
            while assigned > n {
                // Over-assigned because of the one-each floor: trim from the
                // largest allocations.
                let slot = (0..alloc.len()).max_by_key(|&s| alloc[s]).unwrap();
                if alloc[slot] <= 1 {
                    break;
                }
                alloc[slot] -= 1;
                assigned -= 1;
            }
            for (slot, &i) in positive.iter().enumerate() {
                out.extend(sample_inner(&children[i], alloc[slot], seed)?);
            }
            Ok(out)
        }
    }
}

/// Minimum pairwise distance; `f64::INFINITY` for fewer than two points.
pub fn min_separation(points: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            best = best.min((points[i] - points[j]).norm());
        }
    }
    best
}

/// Distance from `z` to the set described by `spec` (0 when inside).
pub fn distance_to(spec: &CompactSetSpec, z: Complex64) -> f64 {
    match spec {
        CompactSetSpec::Disc { center, radius } => ((z - center).norm() - radius).max(0.0),
        CompactSetSpec::Segment { a, b } => point_segment_distance(z, *a, *b),
        CompactSetSpec::Polygon { vertices } => {
            if point_in_polygon(z, vertices) {
                0.0
            } else {
                let m = vertices.len();
                (0..m)
                    .map(|i| point_segment_distance(z, vertices[i], vertices[(i + 1) % m]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
        CompactSetSpec::PointSet { points } => points
            .iter()
            .map(|p| (z - p).norm())
            .fold(f64::INFINITY, f64::min),
        CompactSetSpec::Union { children } => children
            .iter()
            .map(|c| distance_to(c, z))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Membership within tolerance: true iff `z` lies within distance `tol` of
/// the set. Discs and polygons are solid; segments and point sets are thin.
pub fn contains(spec: &CompactSetSpec, z: Complex64, tol: f64) -> bool {
    distance_to(spec, z) <= tol.max(0.0)
}

fn point_segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a).re * ab.re + (z - a).im * ab.im) / len2).clamp(0.0, 1.0);
    (z - (a + t * ab)).norm()
}

fn point_in_polygon(z: Complex64, vertices: &[Complex64]) -> bool {
    // Even-odd crossing rule; boundary hits are caught by the distance term
    // in `distance_to`, so near-edge behaviour does not depend on this.
    let m = vertices.len();
    let mut inside = false;
    for i in 0..m {
        let a = vertices[i];
        let b = vertices[(i + 1) % m];
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) / (b.im - a.im) * (b.re - a.re);
            if z.re < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Total boundary length (perimeter for discs/polygons, length for segments,
/// 0 for point sets, sum over unions).
pub fn boundary_length(spec: &CompactSetSpec) -> f64 {
    match spec {
        CompactSetSpec::Disc { radius, .. } => std::f64::consts::TAU * radius,
        CompactSetSpec::Segment { a, b } => (b - a).norm(),
        CompactSetSpec::Polygon { vertices } => {
            let m = vertices.len();
            (0..m)
                .map(|i| (vertices[(i + 1) % m] - vertices[i]).norm())
                .sum()
        }
        CompactSetSpec::PointSet { .. } => 0.0,
        CompactSetSpec::Union { children } => children.iter().map(boundary_length).sum(),
    }
}

/// Two-dimensional area (discs and polygons carry area; segments and point
/// sets do not). Unions sum child areas without overlap correction.
pub fn area(spec: &CompactSetSpec) -> f64 {
    match spec {
        CompactSetSpec::Disc { radius, .. } => std::f64::consts::PI * radius * radius,
        CompactSetSpec::Polygon { vertices } => {
            let m = vertices.len();
            let twice: f64 = (0..m)
                .map(|i| {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % m];
                    a.re * b.im - b.re * a.im
                })
                .sum();
            0.5 * twice.abs()
        }
        CompactSetSpec::Segment { .. } | CompactSetSpec::PointSet { .. } => 0.0,
        CompactSetSpec::Union { children } => children.iter().map(area).sum(),
    }
}

/// A disc `(center, radius)` guaranteed to contain the set. Not minimal —
/// it is a cheap bound used to place probe circles and anchors.
pub fn enclosing_disc(spec: &CompactSetSpec) -> (Complex64, f64) {
    match spec {
        CompactSetSpec::Disc { center, radius } => (*center, *radius),
        CompactSetSpec::Segment { a, b } => (0.5 * (a + b), 0.5 * (b - a).norm()),
        CompactSetSpec::Polygon { vertices } => hull_of_points(vertices),
        CompactSetSpec::PointSet { points } => hull_of_points(points),
        CompactSetSpec::Union { children } => {
            let discs: Vec<(Complex64, f64)> = children.iter().map(enclosing_disc).collect();
            let center = discs.iter().map(|(c, _)| c).sum::<Complex64>() / discs.len() as f64;
            let radius = discs
                .iter()
                .map(|(c, r)| (c - center).norm() + r)
                .fold(0.0, f64::max);
            (center, radius)
        }
    }
}

fn hull_of_points(points: &[Complex64]) -> (Complex64, f64) {
    let center = points.iter().sum::<Complex64>() / points.len() as f64;
    let radius = points
        .iter()
        .map(|p| (p - center).norm())
        .fold(0.0, f64::max);
    (center, radius)
}

/// True when the set is a finite collection of points (a point set, or a
/// union made solely of point sets). Such sets carry zero capacity and are
/// short-circuited by the potential module.
pub fn is_finite_set(spec: &CompactSetSpec) -> bool {
    match spec {
        CompactSetSpec::PointSet { .. } => true,
        CompactSetSpec::Union { children } => children.iter().all(is_finite_set),
        _ => false,
    }
}

/// Piecewise boundary parametrisation by normalised arc length, used by the
/// Fekete optimiser to slide points along the support.
pub struct BoundaryPath {
    segs: Vec<PathSeg>,
    starts: Vec<f64>, // cumulative normalised start of each piece
    fracs: Vec<f64>,  // normalised length of each piece
    pub cyclic: bool,
}

enum PathSeg {
    Circle { center: Complex64, radius: f64 },
    Line { a: Complex64, b: Complex64 },
}

impl BoundaryPath {
    /// Builds the path for specs with one-dimensional support. Returns
    /// `None` for point sets (and unions of them), which have no curve.
    pub fn from_spec(spec: &CompactSetSpec) -> Option<BoundaryPath> {
        let mut segs = Vec::new();
        let mut lens = Vec::new();
        collect_segs(spec, &mut segs, &mut lens);
        let total: f64 = lens.iter().sum();
        if segs.is_empty() || total == 0.0 {
            return None;
        }
        let mut starts = Vec::with_capacity(segs.len());
        let mut acc = 0.0;
        let fracs: Vec<f64> = lens.iter().map(|l| l / total).collect();
        for f in &fracs {
            starts.push(acc);
            acc += f;
        }
        let cyclic = !matches!(spec, CompactSetSpec::Segment { .. });
        Some(BoundaryPath {
            segs,
            starts,
            fracs,
            cyclic,
        })
    }

    /// Point at normalised arc-length parameter `t`. Cyclic paths wrap `t`
    /// mod 1; open paths clamp to `[0, 1]`.
    pub fn point(&self, t: f64) -> Complex64 {
        let t = if self.cyclic {
            t.rem_euclid(1.0)
        } else {
            t.clamp(0.0, 1.0)
        };
        let mut idx = match self.starts.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        if idx >= self.segs.len() {
            idx = self.segs.len() - 1;
        }
        let local = ((t - self.starts[idx]) / self.fracs[idx]).clamp(0.0, 1.0);
        match &self.segs[idx] {
            PathSeg::Circle { center, radius } => {
                let theta = std::f64::consts::TAU * local;
                center + radius * Complex64::new(theta.cos(), theta.sin())
            }
            PathSeg::Line { a, b } => a + local * (b - a),
        }
    }
}

fn collect_segs(spec: &CompactSetSpec, segs: &mut Vec<PathSeg>, lens: &mut Vec<f64>) {
    match spec {
        CompactSetSpec::Disc { center, radius } => {
            segs.push(PathSeg::Circle {
                center: *center,
                radius: *radius,
            });
            lens.push(std::f64::consts::TAU * radius);
        }
        CompactSetSpec::Segment { a, b } => {
            segs.push(PathSeg::Line { a: *a, b: *b });
            lens.push((b - a).norm());
        }
        CompactSetSpec::Polygon { vertices } => {
            let m = vertices.len();
            for i in 0..m {
                let (a, b) = (vertices[i], vertices[(i + 1) % m]);
                segs.push(PathSeg::Line { a, b });
                lens.push((b - a).norm());
            }
        }
        CompactSetSpec::PointSet { .. } => {}
        CompactSetSpec::Union { children } => {
            for c in children {
                collect_segs(c, segs, lens);
            }
        }
    }
}
