// Structural invariants checked over randomized inputs: fold symmetry and
// distance domination of the ray casts, monotonicity of the weight under
// domain and boundary-mask changes, scaling equivariance, exactness of the
// angular rule on the half-plane, and the verdict gate.

use hardyscope::classify::{uic_check, verdict_from, BdrVerdict, QbVerdict, Verdict};
use hardyscope::domain::DomainSpec;
use hardyscope::geom::Vec2;
use hardyscope::hardy::{mean_hitting_weight, DirectionQuadrature};
use hardyscope::raycast::{hitting_radius, HitOptions};
use proptest::prelude::*;

fn v(x: f64, y: f64) -> Vec2 {
    Vec2 { x, y }
}

fn polar(r: f64, t: f64) -> Vec2 {
    v(r * t.cos(), r * t.sin())
}

const TAU: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hitting_radius_is_fold_symmetric(
        r in 0.0..0.95f64,
        t in 0.0..TAU,
        theta in -10.0..10.0f64,
    ) {
        let disk = DomainSpec::unit_disk();
        let p = polar(r, t);
        let opts = HitOptions::for_domain(&disk);
        let a = hitting_radius(&disk, p, theta, &opts).unwrap();
        let b = hitting_radius(&disk, p, theta + PI, &opts).unwrap();
        prop_assert!((a.r - b.r).abs() <= 1e-9 * (1.0 + a.r.abs()));
    }

    #[test]
    fn hitting_radius_dominates_distance(
        r in 0.0..0.95f64,
        t in 0.0..TAU,
        theta in 0.0..TAU,
        square_x in 0.02..0.98f64,
        square_y in 0.02..0.98f64,
    ) {
        let disk = DomainSpec::unit_disk();
        let sq = DomainSpec::unit_square();
        for (dom, p) in [(&disk, polar(r, t)), (&sq, v(square_x, square_y))] {
            let opts = HitOptions::for_domain(dom);
            let hit = hitting_radius(dom, p, theta, &opts).unwrap();
            let d = dom.boundary_distance(p).unwrap();
            prop_assert!(hit.r >= d * (1.0 - 1e-12), "r {} < d {}", hit.r, d);
        }
    }

    #[test]
    fn smaller_domain_shrinks_radius_and_weight(
        r in 0.0..0.9f64,
        t in 0.0..TAU,
        theta in 0.0..TAU,
        r_small in 0.3..0.9f64,
    ) {
        let big = DomainSpec::unit_disk();
        let small = DomainSpec::disk(Vec2::ZERO, r_small).unwrap();
        let p = polar(r * r_small, t);
        let hit_s = hitting_radius(&small, p, theta, &HitOptions::for_domain(&small)).unwrap();
        let hit_b = hitting_radius(&big, p, theta, &HitOptions::for_domain(&big)).unwrap();
        prop_assert!(hit_s.r <= hit_b.r + 1e-12);

        let q = DirectionQuadrature::for_domain(&big, 64).unwrap();
        let m_s = mean_hitting_weight(&small, p, &q, false).unwrap().m;
        let m_b = mean_hitting_weight(&big, p, &q, false).unwrap().m;
        prop_assert!(m_s <= m_b * (1.0 + 1e-12));
    }

    #[test]
    fn marked_side_weight_dominates_full_weight(
        x in 0.05..0.95f64,
        y in 0.05..0.95f64,
        mask_bits in 1u8..16,
    ) {
        let gamma = [
            mask_bits & 1 != 0,
            mask_bits & 2 != 0,
            mask_bits & 4 != 0,
            mask_bits & 8 != 0,
        ];
        let sq = DomainSpec::rectangle(Vec2::ZERO, v(1.0, 1.0), gamma).unwrap();
        let q = DirectionQuadrature::for_domain(&sq, 32).unwrap();
        let p = v(x, y);
        let full = mean_hitting_weight(&sq, p, &q, false).unwrap().m;
        let marked = mean_hitting_weight(&sq, p, &q, true).unwrap().m;
        prop_assert!(marked >= full * (1.0 - 1e-12), "marked {marked} < full {full}");
    }

    #[test]
    fn weight_dominates_distance(
        r in 0.0..0.93f64,
        t in 0.0..TAU,
        n_pow in 4u32..8,
    ) {
        let disk = DomainSpec::unit_disk();
        let q = DirectionQuadrature::for_domain(&disk, 1usize << n_pow).unwrap();
        let p = polar(r, t);
        let m = mean_hitting_weight(&disk, p, &q, false).unwrap().m;
        let d = disk.boundary_distance(p).unwrap();
        prop_assert!(m >= d * (1.0 - 1e-9), "m {m} < d {d}");
    }

    #[test]
    fn equispaced_rule_is_exact_on_half_plane(
        x in 0.05..5.0f64,
        y in -5.0..5.0f64,
        n_pow in 4u32..10,
    ) {
        // The averaged squared sine over offset equispaced angles is exactly
        // one half, for any direction count.
        let hp = DomainSpec::half_plane();
        let q = DirectionQuadrature::for_domain(&hp, 1usize << n_pow).unwrap();
        let m = mean_hitting_weight(&hp, v(x, y), &q, false).unwrap().m;
        prop_assert!((m / (2.0f64.sqrt() * x) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn weight_scales_with_the_domain(
        r in 0.0..0.9f64,
        t in 0.0..TAU,
        scale in 0.25..4.0f64,
    ) {
        let unit = DomainSpec::unit_disk();
        let scaled = DomainSpec::disk(Vec2::ZERO, scale).unwrap();
        let q = DirectionQuadrature::for_domain(&unit, 64).unwrap();
        let qs = DirectionQuadrature::for_domain(&scaled, 64).unwrap();
        let p = polar(r, t);
        let m1 = mean_hitting_weight(&unit, p, &q, false).unwrap().m;
        let m2 = mean_hitting_weight(&scaled, p * scale, &qs, false).unwrap().m;
        prop_assert!((m2 - scale * m1).abs() <= 1e-9 * scale.max(1.0));
    }

    #[test]
    fn verdict_gate_is_consistent(
        compact in any::<bool>(),
        qb_pick in 0u8..3,
        bdr_pick in 0u8..3,
    ) {
        let qb = match qb_pick {
            0 => QbVerdict::QuasiBounded,
            1 => QbVerdict::Not,
            _ => QbVerdict::Inconclusive,
        };
        let bdr = match bdr_pick {
            0 => Some(BdrVerdict::Regular),
            1 => Some(BdrVerdict::Inconclusive),
            _ => None,
        };
        let out = verdict_from(compact, qb.clone(), bdr.clone());
        let expected = if compact {
            Verdict::CompactCase
        } else if matches!(qb, QbVerdict::Not) {
            Verdict::RefutedQuasiBoundedness
        } else if matches!(qb, QbVerdict::QuasiBounded)
            && matches!(bdr, Some(BdrVerdict::Regular))
        {
            Verdict::DiscreteSpectrumCertified
        } else {
            Verdict::Inconclusive
        };
        prop_assert_eq!(out, expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cone_angle_grows_with_the_budget(
        r in 0.0..0.8f64,
        t in 0.0..TAU,
        c0 in 1.2..2.5f64,
        bump in 0.1..1.5f64,
    ) {
        let disk = DomainSpec::unit_disk();
        let q = DirectionQuadrature::for_domain(&disk, 64).unwrap();
        let p = polar(r, t);
        let small = uic_check(&disk, p, c0, &q).unwrap();
        let large = uic_check(&disk, p, c0 + bump, &q).unwrap();
        prop_assert!(large >= small - 1e-9, "angle shrank: {small} -> {large}");
    }
}
