use cuspex::hypgeom::*;
use cuspex::lattice::GroupElement;
use num_complex::Complex64;
use proptest::prelude::*;

fn point3() -> impl Strategy<Value = InteriorPoint> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, l)| InteriorPoint::h3(x, y, l.exp()))
}

fn point2() -> impl Strategy<Value = InteriorPoint> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, l)| InteriorPoint::h2(x, l.exp()))
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn isometry() -> impl Strategy<Value = Isometry> {
    (complex(), complex(), complex(), complex())
        .prop_filter_map("singular", |(a, b, c, d)| {
            let det = a * d - b * c;
            (det.norm() > 0.1).then(|| Isometry::new(a, b, c, d).ok()).flatten()
        })
}

/// Words in S, T, U whose entries stay within 50 in absolute value.
fn lattice_element() -> impl Strategy<Value = GroupElement> {
    proptest::collection::vec(0usize..5, 0..12).prop_map(|word| {
        let gens = [
            GroupElement::s(),
            GroupElement::t(),
            GroupElement::t().inverse(),
            GroupElement::u(),
            GroupElement::u().inverse(),
        ];
        let mut g = GroupElement::identity();
        for i in word {
            let next = g.multiply(&gens[i]);
            if next.to_isometry().is_ok_and(|m| {
                [m.a, m.b, m.c, m.d].iter().all(|z| z.re.abs() <= 50.0 && z.im.abs() <= 50.0)
            }) {
                g = next;
            }
        }
        g
    })
}

fn close(p: &InteriorPoint, q: &InteriorPoint, tol: f64) -> bool {
    hyp_distance(p, q) <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn metric_axioms(p in point3(), q in point3(), r in point3()) {
        prop_assert_eq!(hyp_distance(&p, &q), hyp_distance(&q, &p));
        prop_assert_eq!(hyp_distance(&p, &p), 0.0);
        prop_assert!(hyp_distance(&p, &r) <= hyp_distance(&p, &q) + hyp_distance(&q, &r) + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn lattice_isometries_preserve_distance(g in lattice_element(), p in point3(), q in point3()) {
        let m = g.to_isometry().unwrap();
        let (gp, gq) = (mobius_apply_interior(&m, &p), mobius_apply_interior(&m, &q));
        let (d, e) = (hyp_distance(&p, &q), hyp_distance(&gp, &gq));
        prop_assert!((d - e).abs() <= 1e-9 * (1.0 + d), "{} {}", d, e);
        // The exact action agrees with the float one.
        prop_assert!(close(&g.apply_interior(&p), &gp, 1e-9));
    }

    #[test]
    fn action_composes(g in isometry(), h in isometry(), p in point3(), z in complex()) {
        let gh = g.compose(&h);
        let lhs = mobius_apply_interior(&gh, &p);
        let rhs = mobius_apply_interior(&g, &mobius_apply_interior(&h, &p));
        prop_assert!(close(&lhs, &rhs, 1e-9));
        let xi = BoundaryPoint::Finite(z);
        let a = mobius_apply_boundary(&gh, &xi);
        let b = mobius_apply_boundary(&g, &mobius_apply_boundary(&h, &xi));
        prop_assert!(a.chordal_distance(&b) <= 1e-9);
    }

    #[test]
    fn sign_of_matrix_is_irrelevant(g in isometry(), p in point3()) {
        let neg = Isometry { a: -g.a, b: -g.b, c: -g.c, d: -g.d };
        prop_assert!(close(&mobius_apply_interior(&g, &p), &mobius_apply_interior(&neg, &p), 1e-12));
    }

    #[test]
    fn projection_is_idempotent(a in complex(), b in complex(), p in point3(), anchor in point3()) {
        prop_assume!((a - b).norm() > 1e-3);
        let g = geodesic_between(BoundaryPoint::Finite(a), BoundaryPoint::Finite(b), &anchor).unwrap();
        let (t, q) = closest_point_projection(&p, &g);
        let (t2, _) = closest_point_projection(&q, &g);
        prop_assert!((t - t2).abs() <= 1e-7, "{} {}", t, t2);
        prop_assert!(close(&geodesic_point(&g, t), &q, 1e-9));
    }

    #[test]
    fn geodesic_is_unit_speed(a in complex(), b in complex(), anchor in point3(), s in -5.0..5.0f64, u in -5.0..5.0f64) {
        prop_assume!((a - b).norm() > 1e-3);
        let g = geodesic_between(BoundaryPoint::Finite(a), BoundaryPoint::Finite(b), &anchor).unwrap();
        let d = hyp_distance(&g.point(s), &g.point(u));
        prop_assert!((d - (s - u).abs()).abs() <= 1e-9 * (1.0 + d));
    }

    #[test]
    fn geodesics_move_with_isometries(g in isometry(), a in complex(), b in complex(), anchor in point3(), t in -4.0..4.0f64) {
        prop_assume!((a - b).norm() > 1e-2);
        let geo = geodesic_between(BoundaryPoint::Finite(a), BoundaryPoint::Finite(b), &anchor).unwrap();
        let moved = geo.transformed(&g).unwrap();
        prop_assert!(close(&moved.point(t), &mobius_apply_interior(&g, &geo.point(t)), 1e-7));
    }
}

fn distance_to_segment(p: &InteriorPoint, a: &InteriorPoint, b: &InteriorPoint) -> f64 {
    let len = hyp_distance(a, b);
    if len == 0.0 {
        return hyp_distance(p, a);
    }
    let g = geodesic_through(a, b).unwrap();
    let t = g.time_of(p).clamp(0.0, len);
    hyp_distance(p, &g.point(t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn triangles_are_thin(a in point3(), b in point3(), c in point3(), planar in any::<bool>(),
                          a2 in point2(), b2 in point2(), c2 in point2()) {
        let (a, b, c) = if planar { (a2, b2, c2) } else { (a, b, c) };
        for (p, q, r) in [(&a, &b, &c), (&b, &c, &a), (&c, &a, &b)] {
            let len = hyp_distance(p, q);
            if len == 0.0 {
                continue;
            }
            let g = geodesic_through(p, q).unwrap();
            for i in 0..=20 {
                let x = g.point(len * i as f64 / 20.0);
                let d = distance_to_segment(&x, q, r).min(distance_to_segment(&x, r, p));
                prop_assert!(d <= DEFAULT_DELTA + 1e-9, "{}", d);
            }
        }
    }
}
