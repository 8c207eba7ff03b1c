//! Acceptance gate: nine numbered end-to-end criteria, one test each.
//!
//! Every test prints a single `[PASS]`/`[FAIL]` line (run with
//! `cargo test --test acceptance -- --nocapture` to see them all) and
//! asserts, so the gate fails loudly as well as legibly. Tolerances are
//! pinned here, next to the criterion they guard.

use capdim::bergman_p1::{
    bly_dimension, dimension_report, log_weight_field, riesz_mass, verify_witness_bounds,
    witness_psi_star, BergmanDimension,
};
use capdim::bergman_p2::{
    dim_global_sections_p2, monomial_norm_estimate, monomial_predicate, omega_k_dimension,
    omega_k_monomial_basis, RegionSpec,
};
use capdim::cauchy::{
    apply_boost, area_cauchy_transform, laurent_tail, signed_equilibrium_difference,
    vanishing_boost_with_noise, weighted_tail_norm, BoostedFunction, FunctionExpr, LaurentTail,
};
use capdim::geometry::CompactSetSpec;
use capdim::potential::{
    capacity, equilibrium_solve, fekete_diameter, potential_eval, DEFAULT_SEED, DEFAULT_TOL,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

const N_ATOMS: usize = 256;

// Criterion 1
const CAP_DISC_RTOL: f64 = 0.02;
const CAP_SEGMENT_RTOL: f64 = 0.05;
const CAP_TIME_LIMIT_S: f64 = 30.0;
// Criterion 2
const FLATNESS_FACTOR: f64 = 5.0; // times the solver tolerance
const EXTERIOR_PROBES: usize = 100;
// Criterion 3
const FEKETE_RTOL: f64 = 0.01;
const FEKETE_MONOTONE_SLACK: f64 = 1e-9;
// Criterion 4
const RIESZ_RTOL: f64 = 0.01;
const RIESZ_TIME_LIMIT_S: f64 = 10.0;
// Criterion 6
const C1_ATOL: f64 = 1e-12;
const C2_ATOL: f64 = 1e-6;
const BOOST_RESIDUAL_TOL: f64 = 1e-10;
const AREA_RTOL: f64 = 0.01;
// Criterion 7
const WITNESS_EPS: f64 = 0.01;
const WITNESS_TAU_PROBES: usize = 200;
const WITNESS_TIME_LIMIT_S: f64 = 60.0;
// Criterion 9
const CROSS_DECIDED_MIN: f64 = 0.95;
const CROSS_TIME_LIMIT_S: f64 = 600.0;

fn disc(cx: f64, cy: f64, r: f64) -> CompactSetSpec {
    CompactSetSpec::Disc {
        center: Complex64::new(cx, cy),
        radius: r,
    }
}

fn segment(ax: f64, ay: f64, bx: f64, by: f64) -> CompactSetSpec {
    CompactSetSpec::Segment {
        a: Complex64::new(ax, ay),
        b: Complex64::new(bx, by),
    }
}

fn report(number: u8, label: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {number}: {label} — {detail}");
    assert!(pass, "criterion {number} ({label}): {detail}");
}

#[test]
fn criterion_1_capacity_oracles() {
    let start = Instant::now();
    let mut worst_disc = 0.0f64;
    for r in [0.5, 1.0, 2.0] {
        let got = capacity(&disc(0.0, 0.0, r), N_ATOMS, DEFAULT_TOL, DEFAULT_SEED).unwrap();
        worst_disc = worst_disc.max((got - r).abs() / r);
    }
    let mut worst_seg = 0.0f64;
    for l in [1.0, 2.0, 4.0] {
        let got = capacity(
            &segment(0.0, 0.0, l, 0.0),
            N_ATOMS,
            DEFAULT_TOL,
            DEFAULT_SEED,
        )
        .unwrap();
        worst_seg = worst_seg.max((got - l / 4.0).abs() / (l / 4.0));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst_disc <= CAP_DISC_RTOL
        && worst_seg <= CAP_SEGMENT_RTOL
        && elapsed <= 6.0 * CAP_TIME_LIMIT_S;
    report(
        1,
        "capacity oracles",
        pass,
        &format!(
            "disc rel err {worst_disc:.2e} (tol {CAP_DISC_RTOL}), segment rel err {worst_seg:.2e} (tol {CAP_SEGMENT_RTOL}), {elapsed:.1}s for 6 cases"
        ),
    );
}

#[test]
fn criterion_2_frostman_flatness() {
    let slack = FLATNESS_FACTOR * DEFAULT_TOL;
    let mut worst_flat = 0.0f64;
    let mut worst_margin = f64::INFINITY;
    for spec in [disc(0.0, 0.0, 1.0), segment(-1.0, 0.0, 1.0, 0.0)] {
        let sol = equilibrium_solve(&spec, N_ATOMS, DEFAULT_TOL, DEFAULT_SEED).unwrap();
        worst_flat = worst_flat.max(sol.support_residual);
        // Exterior probes: the potential must not dip below the equilibrium
        // energy (minus slack) anywhere off the set.
        let (center, radius) = capdim::geometry::enclosing_disc(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut placed = 0;
        while placed < EXTERIOR_PROBES {
            let t: f64 = rng.gen();
            let rad = radius * 1.05 * (radius * 5.0 / (radius * 1.05)).powf(t);
            let th = rng.gen::<f64>() * std::f64::consts::TAU;
            let z = center + rad * Complex64::new(th.cos(), th.sin());
            if capdim::geometry::distance_to(&spec, z) < 0.04 * radius {
                continue;
            }
            worst_margin = worst_margin.min(potential_eval(&sol.measure, z) - sol.smoothed_energy);
            placed += 1;
        }
    }
    let pass = worst_flat <= slack && worst_margin >= -slack;
    report(
        2,
        "equilibrium flatness and exterior lower bound",
        pass,
        &format!(
            "support residual {worst_flat:.2e} (tol {slack:.1e}), worst exterior margin {worst_margin:+.2e}"
        ),
    );
}

#[test]
fn criterion_3_fekete_diameters() {
    let unit = disc(0.0, 0.0, 1.0);
    let mut worst = 0.0f64;
    for n in [4usize, 8, 16] {
        let expect = (n as f64).powf(1.0 / (n as f64 - 1.0));
        let got = fekete_diameter(&unit, n, DEFAULT_SEED).unwrap();
        worst = worst.max((got - expect).abs() / expect);
    }
    let seq: Vec<f64> = (2..=16)
        .map(|n| fekete_diameter(&unit, n, DEFAULT_SEED).unwrap())
        .collect();
    let monotone = seq.windows(2).all(|w| w[1] <= w[0] + FEKETE_MONOTONE_SLACK);
    let pass = worst <= FEKETE_RTOL && monotone;
    report(
        3,
        "Fekete diameters on the unit disc",
        pass,
        &format!(
            "worst rel err {worst:.2e} (tol {FEKETE_RTOL}), nonincreasing over n=2..16: {monotone}"
        ),
    );
}

#[test]
fn criterion_4_riesz_mass_table() {
    let mut worst = 0.0f64;
    let mut dims_ok = true;
    let mut slowest = 0.0f64;
    for k in -2..=3 {
        let t0 = Instant::now();
        let rep = riesz_mass(&log_weight_field(k)).unwrap();
        slowest = slowest.max(t0.elapsed().as_secs_f64());
        let expect = 4.0 * std::f64::consts::PI * (k + 2) as f64;
        let scale = 4.0 * std::f64::consts::PI * ((k + 2) as f64).abs().max(1.0);
        worst = worst.max((rep.total - expect).abs() / scale);
        assert!(!rep.infinite, "k={k} flagged infinite");
        dims_ok &= bly_dimension(rep.total).unwrap() == (k + 1).max(0) as usize;
    }
    let pass = worst <= RIESZ_RTOL && dims_ok && slowest <= RIESZ_TIME_LIMIT_S;
    report(
        4,
        "curvature mass of the standard weights",
        pass,
        &format!(
            "worst scaled err {worst:.2e} (tol {RIESZ_RTOL}), dimension counts exact: {dims_ok}, slowest k {slowest:.1}s"
        ),
    );
}

#[test]
fn criterion_5_dimension_dichotomy() {
    let mut all_ok = true;
    let mut checked = 0;
    for k in [-5, 0, 3] {
        for spec in [segment(-1.0, 0.0, 1.0, 0.0), disc(0.0, 0.0, 1.0)] {
            let rep = dimension_report(k, &spec, None).unwrap();
            all_ok &= rep.dimension == BergmanDimension::Infinite;
            checked += 1;
        }
        let pts = [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        for size in 1..=5 {
            let spec = CompactSetSpec::PointSet {
                points: pts[..size].to_vec(),
            };
            let rep = dimension_report(k, &spec, None).unwrap();
            let expect = (k + 1).max(0) as usize;
            all_ok &= rep.dimension == BergmanDimension::Finite { dimension: expect };
            checked += 1;
        }
    }
    report(
        5,
        "dimension dichotomy",
        all_ok,
        &format!("{checked} (set, k) cases: nonpolar sets infinite, point sets match the polynomial count"),
    );
}

#[test]
fn criterion_6_transform_and_boost_suite() {
    // Leading Laurent data of the signed equilibrium difference.
    let e_minus = disc(-1.0, 0.0, 0.5);
    let e_plus = disc(1.0, 0.0, 0.5);
    let mu = signed_equilibrium_difference(&e_minus, &e_plus, N_ATOMS, DEFAULT_TOL, DEFAULT_SEED)
        .unwrap();
    let tail = laurent_tail(&mu, capdim::cauchy::DEFAULT_MAX_ORDER);
    let c1 = tail.coefficient(1).norm();
    let c2 = tail.coefficient(2);
    let c2_err = (c2 - Complex64::new(2.0, 0.0)).norm();

    // The first moment cancels for any pair, not just the symmetric one.
    let mut c1_worst = c1;
    for (a, b) in [
        (segment(-2.0, 0.0, -1.0, 0.0), segment(1.0, 0.0, 2.0, 0.0)),
        (disc(-1.0, 0.5, 0.4), segment(1.0, -1.0, 2.0, 1.0)),
    ] {
        let m = signed_equilibrium_difference(&a, &b, 128, DEFAULT_TOL, DEFAULT_SEED).unwrap();
        c1_worst = c1_worst.max(laurent_tail(&m, 4).coefficient(1).norm());
    }

    // Boost chain: every step must gain at least one vanishing order and
    // annihilate the old coefficients to near roundoff.
    let f0 = BoostedFunction::plain(FunctionExpr::Cauchy { measure: mu }, tail);
    let mut f = f0;
    let mut boosts_ok = true;
    let mut residual_worst = 0.0f64;
    for (radius, phase) in [(0.0, 0.0), (4.5, 0.9)] {
        let p = f.tail.order().unwrap();
        let anchors: Vec<Complex64> = if radius == 0.0 {
            // The documented example anchors for the first boost.
            vec![
                Complex64::new(3.0, 0.0),
                Complex64::new(0.0, 4.0),
                Complex64::new(-5.0, 0.0),
            ]
        } else {
            (0..=p)
                .map(|i| {
                    let th = phase + i as f64 * std::f64::consts::TAU / (p as f64 + 1.0);
                    radius * Complex64::new(th.cos(), th.sin())
                })
                .collect()
        };
        let data = vanishing_boost_with_noise(
            &f.tail,
            &f.tail_noise,
            |z| capdim::cauchy::eval_boosted(&f, z),
            &anchors,
        )
        .unwrap();
        residual_worst = residual_worst.max(data.residual);
        let next = apply_boost(&f, &anchors).unwrap();
        boosts_ok &= next.tail.order().unwrap() > p;
        f = next;
    }

    // Tail-norm finiteness boundary.
    let mut boundary_ok = true;
    for k in [-3i32, -4, -5] {
        for s in 1..=8u32 {
            let t = LaurentTail {
                start_order: s,
                coefficients: vec![Complex64::new(1.0, 0.0)],
            };
            let v = weighted_tail_norm(&t, k, 2.0).unwrap();
            boundary_ok &= v.is_finite() == (s as i32 >= -k);
        }
    }

    // Area transform of the unit disc against its closed form.
    let unit = disc(0.0, 0.0, 1.0);
    let mut area_worst = 0.0f64;
    for z in [Complex64::new(2.0, 0.0), Complex64::new(0.0, 10.0)] {
        let got = area_cauchy_transform(&unit, z, capdim::cauchy::DEFAULT_AREA_GRID).unwrap();
        let expect = -std::f64::consts::PI / z;
        area_worst = area_worst.max((got - expect).norm() / expect.norm());
    }

    let pass = c1_worst <= C1_ATOL
        && c2_err <= C2_ATOL
        && boosts_ok
        && residual_worst <= BOOST_RESIDUAL_TOL
        && boundary_ok
        && area_worst <= AREA_RTOL;
    report(
        6,
        "transform and boost suite",
        pass,
        &format!(
            "|c1| {c1_worst:.1e} (tol {C1_ATOL:.0e}), |c2-2| {c2_err:.1e} (tol {C2_ATOL:.0e}), boost orders gained: {boosts_ok}, residual {residual_worst:.1e} (tol {BOOST_RESIDUAL_TOL:.0e}), norm boundary exact: {boundary_ok}, area transform rel err {area_worst:.2e} (tol {AREA_RTOL})"
        ),
    );
}

#[test]
fn criterion_7_witness_certification() {
    let start = Instant::now();
    let w = witness_psi_star(&disc(0.0, 0.0, 1.0), WITNESS_EPS, N_ATOMS, DEFAULT_SEED).unwrap();
    let cert = verify_witness_bounds(&w, WITNESS_TAU_PROBES, 7);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = cert.certified
        && cert.tau2 > 0.0
        && cert.tau3 > 0.0
        && cert.bound_ok
        && cert.probes_used.2 == 10_000
        && elapsed <= WITNESS_TIME_LIMIT_S;
    report(
        7,
        "witness certification",
        pass,
        &format!(
            "tau2 {:.3e}, tau3 {:.3e}, bound held at {} probes, {elapsed:.1}s",
            cert.tau2, cert.tau3, cert.probes_used.2
        ),
    );
}

#[test]
fn criterion_8_two_variable_dimension_table() {
    let mut ok = true;
    for k in -2..=3 {
        ok &= omega_k_dimension(k) == ((k + 3) * (k + 4) / 2) as usize;
    }
    for k in -6..=-3 {
        ok &= omega_k_dimension(k) == 1;
        ok &= omega_k_monomial_basis(k, None) == vec![((-(k + 2)) as u32, 0u32)];
    }
    let mut sandwich = true;
    for k in -6..=3 {
        sandwich &= dim_global_sections_p2(k) < omega_k_dimension(k);
    }
    let pass = ok && sandwich;
    report(
        8,
        "two-variable dimension table",
        pass,
        &format!("integer table exact: {ok}, strict sandwich (global sections < union count): {sandwich}"),
    );
}

#[test]
fn criterion_9_predicate_quadrature_cross_validation() {
    let start = Instant::now();
    let pieces: Vec<RegionSpec> = [1u32, 3, 5]
        .iter()
        .map(|&ell| RegionSpec::X { ell })
        .chain([2u32, 6, 10].iter().map(|&m| RegionSpec::Z { m }))
        .chain(std::iter::once(RegionSpec::Y))
        .collect();
    let ks = [-5i32, -3, -2, 0, 1];
    let mut cells = Vec::new();
    for piece in &pieces {
        for &k in &ks {
            for p in 0..=6u32 {
                for q in 0..=(6 - p) {
                    cells.push((piece.clone(), p, q, k));
                }
            }
        }
    }
    let total = cells.len();

    let outcomes: Vec<(bool, bool)> = cells
        .par_iter()
        .map(|(piece, p, q, k)| {
            let predicted = monomial_predicate(piece, *p, *q, *k);
            let v = monomial_norm_estimate(piece, *p, *q, *k).unwrap();
            if v.near_critical {
                (false, true) // undecided, no contradiction possible
            } else {
                (true, v.is_finite() == predicted)
            }
        })
        .collect();

    let decided = outcomes.iter().filter(|(d, _)| *d).count();
    let contradictions = outcomes.iter().filter(|(d, ok)| *d && !ok).count();
    let elapsed = start.elapsed().as_secs_f64();
    let decided_frac = decided as f64 / total as f64;
    let pass =
        decided_frac >= CROSS_DECIDED_MIN && contradictions == 0 && elapsed <= CROSS_TIME_LIMIT_S;
    report(
        9,
        "predicate/quadrature cross-validation",
        pass,
        &format!(
            "{decided}/{total} cells decided ({:.1}%), {contradictions} contradictions, {elapsed:.1}s",
            100.0 * decided_frac
        ),
    );
}
