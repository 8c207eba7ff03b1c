//! Property-based invariants across the workspace: sampling determinism,
//! scaling laws, algebraic identities, and serialization round-trips.

use capdim::bergman_p1::strict_floor;
use capdim::bergman_p2::{monomial_predicate, RegionSpec};
use capdim::cauchy::{weighted_tail_norm, LaurentTail};
use capdim::geometry::{self, CompactSetSpec};
use capdim::potential::{capacity, equilibrium_solve, DEFAULT_SEED, DEFAULT_TOL};
use num_complex::Complex64;
use proptest::prelude::*;

fn small_complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y)| Complex64::new(x, y))
}

fn sampleable_spec() -> impl Strategy<Value = CompactSetSpec> {
    prop_oneof![
        (small_complex(), 0.3..2.0f64).prop_map(|(c, r)| CompactSetSpec::Disc {
            center: c,
            radius: r
        }),
        (small_complex(), small_complex())
            .prop_filter("segment endpoints must differ", |(a, b)| (a - b).norm()
                > 0.1)
            .prop_map(|(a, b)| CompactSetSpec::Segment { a, b }),
    ]
}

fn any_spec() -> impl Strategy<Value = CompactSetSpec> {
    prop_oneof![
        sampleable_spec(),
        proptest::collection::vec(small_complex(), 1..6)
            .prop_map(|points| { CompactSetSpec::PointSet { points } }),
        (sampleable_spec(), sampleable_spec()).prop_map(|(a, b)| CompactSetSpec::Union {
            children: vec![a, b]
        }),
    ]
}

fn any_region() -> impl Strategy<Value = RegionSpec> {
    prop_oneof![
        Just(RegionSpec::B),
        (1..8u32).prop_map(|ell| RegionSpec::X { ell }),
        Just(RegionSpec::Y),
        (2..12u32).prop_map(|m| RegionSpec::Z { m }),
    ]
}

proptest! {
    #[test]
    fn sampling_is_deterministic_and_stays_on_the_set(
        spec in sampleable_spec(),
        n in 16usize..64,
        seed in 0u64..1000,
    ) {
        let a = geometry::sample_support(&spec, n, seed).unwrap();
        let b = geometry::sample_support(&spec, n, seed).unwrap();
        prop_assert_eq!(&a.points, &b.points);
        let (_, scale) = geometry::enclosing_disc(&spec);
        for &z in &a.points {
            prop_assert!(geometry::distance_to(&spec, z) <= 1e-2 * scale.max(1.0));
        }
    }

    #[test]
    fn strict_floor_is_the_greatest_strictly_smaller_integer(
        x in -1e6..1e6f64,
        n in -1000i64..1000,
    ) {
        if x != 0.0 {
            let f = strict_floor(x);
            prop_assert!((f as f64) < x);
            prop_assert!(x <= (f + 1) as f64);
        }
        // Integers step down by one (zero is the documented carve-out).
        if n != 0 {
            prop_assert_eq!(strict_floor(n as f64), n - 1);
        }
    }

    #[test]
    fn membership_predicates_are_monotone_in_sharpness(
        p in 0u32..12,
        q in 0u32..12,
        k in -8i32..6,
        ell in 1u32..12,
        m in 2u32..12,
    ) {
        // Widening the spike or the band only admits more monomials.
        let narrow = monomial_predicate(&RegionSpec::X { ell }, p, q, k);
        let wide = monomial_predicate(&RegionSpec::X { ell: ell + 1 }, p, q, k);
        prop_assert!(!narrow || wide);
        let narrow = monomial_predicate(&RegionSpec::Z { m }, p, q, k);
        let wide = monomial_predicate(&RegionSpec::Z { m: m + 1 }, p, q, k);
        prop_assert!(!narrow || wide);
        // The two spikes are mirror images.
        prop_assert_eq!(
            monomial_predicate(&RegionSpec::X { ell: 1 }, p, q, k),
            monomial_predicate(&RegionSpec::Y, q, p, k),
        );
    }

    #[test]
    fn weighted_tail_norm_boundary_is_exact(
        s in 1u32..10,
        k in -8i32..-1,
        mag in -3.0..3.0f64,
        r_cut in 1.2..4.0f64,
    ) {
        let tail = LaurentTail {
            start_order: s,
            coefficients: vec![Complex64::new(10f64.powf(mag), 0.0)],
        };
        let v = weighted_tail_norm(&tail, k, r_cut).unwrap();
        prop_assert_eq!(v.is_finite(), s as i32 >= -k);
    }

    #[test]
    fn truncated_multiplication_matches_pointwise_products(
        s1 in 1u32..4,
        s2 in 1u32..4,
        c1 in proptest::collection::vec(small_complex(), 1..4),
        c2 in proptest::collection::vec(small_complex(), 1..4),
    ) {
        let t1 = LaurentTail { start_order: s1, coefficients: c1 };
        let t2 = LaurentTail { start_order: s2, coefficients: c2 };
        // Keep every product order, so truncation drops nothing.
        let full = t1.max_known_order() + t2.max_known_order();
        let prod = t1.multiply(&t2, full);
        let z = Complex64::new(5.0, 3.0);
        let direct = t1.eval(z) * t2.eval(z);
        prop_assert!((prod.eval(z) - direct).norm() <= 1e-12 * direct.norm().max(1e-6));
        // Commutativity of the truncated product.
        let flipped = t2.multiply(&t1, full);
        prop_assert!((prod.eval(z) - flipped.eval(z)).norm() <= 1e-14);
    }

    #[test]
    fn compact_set_serialization_round_trips(spec in any_spec()) {
        let text = serde_json::to_string(&spec).unwrap();
        let back: CompactSetSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(spec, back);
    }

    #[test]
    fn region_serialization_round_trips(region in any_region()) {
        let text = serde_json::to_string(&region).unwrap();
        let back: RegionSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(region, back);
    }

    #[test]
    fn laurent_tail_serialization_round_trips(
        s in 1u32..6,
        coeffs in proptest::collection::vec(small_complex(), 1..5),
    ) {
        let tail = LaurentTail { start_order: s, coefficients: coeffs };
        let text = serde_json::to_string(&tail).unwrap();
        let back: LaurentTail = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(tail, back);
    }
}

// Equilibrium solves are too slow for default case counts.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn capacity_commutes_with_dilation_and_translation(
        c in small_complex(),
        r in 0.3..3.0f64,
    ) {
        // Congruent sampling makes covariance exact to roundoff, not just
        // asymptotically.
        let unit = capacity(
            &CompactSetSpec::Disc { center: Complex64::new(0.0, 0.0), radius: 1.0 },
            64,
            DEFAULT_TOL,
            DEFAULT_SEED,
        )
        .unwrap();
        let moved = capacity(
            &CompactSetSpec::Disc { center: c, radius: r },
            64,
            DEFAULT_TOL,
            DEFAULT_SEED,
        )
        .unwrap();
        prop_assert!((moved - r * unit).abs() <= 1e-10 * r.max(1.0));
    }

    #[test]
    fn equilibrium_weights_form_a_probability_measure(
        spec in sampleable_spec(),
    ) {
        let sol = equilibrium_solve(&spec, 48, DEFAULT_TOL, DEFAULT_SEED).unwrap();
        prop_assert!(sol.measure.weights.iter().all(|w| *w >= 0.0));
        prop_assert!((sol.measure.mass() - 1.0).abs() <= 1e-12);
        prop_assert!(sol.support_residual <= 5.0 * DEFAULT_TOL);
    }
}
