use compass_core::geometry::{
    classify_point, cone_membership_probe_default, gamma_cone_contains, gamma_margin, meets_gamma,
    supporting_hyperrectangle, tangent_cone_contains, ConeQuery, Hyperrectangle, Region,
};
use proptest::prelude::*;

/// Box with some zero-width axes, a point snapped to facets on some axes, and a direction
/// whose components are either zero or at least 0.01 in magnitude.
fn cone_case() -> impl Strategy<Value = (Hyperrectangle<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..=4).prop_flat_map(|d| {
        (
            prop::collection::vec((-5.0..5.0f64, 0.1..3.0f64, prop::bool::weighted(0.15)), d),
            prop::collection::vec(0u8..4, d),
            prop::collection::vec(0.05..0.95f64, d),
            prop::collection::vec((prop::bool::weighted(0.3), 0.01..2.0f64, prop::bool::ANY), d),
        )
            .prop_map(|(axes, snap, frac, dir)| {
                let lo: Vec<f64> = axes.iter().map(|a| a.0).collect();
                let hi: Vec<f64> = axes.iter().map(|a| if a.2 { a.0 } else { a.0 + a.1 }).collect();
                let x = (0..lo.len())
                    .map(|k| match snap[k] {
                        0 => lo[k],
                        1 => hi[k],
                        _ => lo[k] + frac[k] * (hi[k] - lo[k]),
                    })
                    .collect();
                let v = dir
                    .iter()
                    .map(|&(zero, m, neg)| if zero { 0.0 } else if neg { -m } else { m })
                    .collect();
                (Hyperrectangle::new(lo, hi).unwrap(), x, v)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn closed_form_matches_probe((b, x, v) in cone_case()) {
        let member = tangent_cone_contains(&x, &b, &v, 1e-9).unwrap();
        let probe = cone_membership_probe_default(&x, &b, &v).unwrap();
        if member {
            prop_assert!(probe < 1e-6, "member with probe {probe}");
        } else {
            prop_assert!(probe > 1e-3, "non-member with probe {probe}");
        }
    }

    #[test]
    fn gamma_cones_nest_inside_the_tangent_cone(
        (b, x, v) in cone_case(),
        g1 in 0.001..2.0f64,
        g2 in 0.001..2.0f64,
    ) {
        let (small, large) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let q_large = ConeQuery::new(x.clone(), b.clone(), v.clone(), large);
        let q_small = ConeQuery::new(x.clone(), b.clone(), v.clone(), small);
        let in_large = gamma_cone_contains(&q_large).unwrap();
        let in_small = gamma_cone_contains(&q_small).unwrap();
        prop_assert!(!in_large || in_small);
        if in_small {
            prop_assert!(tangent_cone_contains(&x, &b, &v, q_small.face_tolerance).unwrap());
        }
    }

    #[test]
    fn margin_is_the_threshold((b, x, v) in cone_case(), g in 0.001..2.0f64) {
        let q = ConeQuery::new(x, b, v, g);
        let m = gamma_margin(&q).unwrap();
        prop_assert_eq!(gamma_cone_contains(&q).unwrap(), matches!(m, Some(m) if meets_gamma(m, g)));
    }

    #[test]
    fn tangent_cone_grows_with_the_box(
        (b, x, v) in cone_case(),
        grow in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 4),
    ) {
        let d = b.dim();
        let lo: Vec<f64> = (0..d).map(|k| b.lo()[k] - grow[k].0).collect();
        let hi: Vec<f64> = (0..d).map(|k| b.hi()[k] + grow[k].1).collect();
        let outer = Hyperrectangle::new(lo, hi).unwrap();
        if tangent_cone_contains(&x, &b, &v, 1e-9).unwrap() {
            prop_assert!(tangent_cone_contains(&x, &outer, &v, 1e-9).unwrap());
        }
    }

    #[test]
    fn translation_invariance((b, x, v) in cone_case(), shift in prop::collection::vec(-10.0..10.0f64, 4)) {
        let d = b.dim();
        let moved_box = b.translated(&shift[..d]);
        let moved_x: Vec<f64> = (0..d).map(|k| x[k] + shift[k]).collect();
        // The face tolerance absorbs the rounding the shift introduces.
        prop_assert_eq!(
            tangent_cone_contains(&x, &b, &v, 1e-9).unwrap(),
            tangent_cone_contains(&moved_x, &moved_box, &v, 1e-9).unwrap()
        );
    }

    #[test]
    fn supporting_box_is_minimal(pts in prop::collection::vec(prop::collection::vec(-100.0..100.0f64, 3), 1..12)) {
        let b = supporting_hyperrectangle(&pts).unwrap();
        for p in &pts {
            prop_assert!(b.contains(p, 0.0));
        }
        for k in 0..3 {
            prop_assert!(pts.iter().any(|p| p[k] == b.lo()[k]));
            prop_assert!(pts.iter().any(|p| p[k] == b.hi()[k]));
        }
        let rho = b.rho();
        prop_assert!(b.side_lengths().iter().all(|&s| s <= rho));
    }

    #[test]
    fn interior_points_accept_every_carrier_direction((b, _x, v) in cone_case()) {
        let d = b.dim();
        let mid: Vec<f64> = (0..d).map(|k| 0.5 * (b.lo()[k] + b.hi()[k])).collect();
        let class = classify_point(&mid, &b, 1e-9).unwrap();
        prop_assert_eq!(class.region, Region::RelativeInterior);
        let carrier: Vec<f64> = (0..d)
            .map(|k| if class.degenerate_axes.contains(&k) { 0.0 } else { v[k] })
            .collect();
        prop_assert!(gamma_cone_contains(&ConeQuery::new(mid, b, carrier, 1e6)).unwrap());
    }
}

#[test]
fn f32_and_f64_agree_on_a_facet_query() {
    let b64 = Hyperrectangle::new(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap();
    let b32 = Hyperrectangle::new(vec![0.0f32, 0.0], vec![2.0, 1.0]).unwrap();
    let m64 = gamma_margin(&ConeQuery::new(vec![2.0, 0.5], b64, vec![-1.0, 0.3], 0.5)).unwrap();
    let m32 = gamma_margin(&ConeQuery::new(vec![2.0f32, 0.5], b32, vec![-1.0, 0.3], 0.5)).unwrap();
    assert_eq!(m64, Some(0.5));
    assert_eq!(m32, Some(0.5f32));
}
