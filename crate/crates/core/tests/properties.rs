use convex_brackets::brackets::{epigraph_hausdorff_bound, lipschitz_bracket_family, rescale_class, ConvexFn, Rect};
use convex_brackets::geometry::shapes::{pentagon, regular_polygon, unit_cube, unit_square, unit_triangle};
use convex_brackets::geometry::{hausdorff, volume, Polytope, PolytopeFile};
use convex_brackets::partition::build_partition;
use convex_brackets::sampler::{sample_convex_fn, sample_lipschitz_convex, sample_points, within_bound, SamplerConfig};
use convex_brackets::schedule::{build_schedule_ln, ln_u_cap, zetasum_check};
use proptest::prelude::*;

fn affine_pieces(d: usize, gamma: f64) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    prop::collection::vec((prop::collection::vec(-gamma..=gamma, d), -0.5..0.5f64), 1..6)
        .prop_map(|v| v.into_iter().unzip())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn brackets_contain_lipschitz_functions(
        (slopes, intercepts) in affine_pieces(2, 1.5),
        eps in 0.05..0.8f64,
        lo in -1.0..0.0f64,
        len in 0.1..1.5f64,
        xs in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 50),
    ) {
        let rect = Rect::axis_aligned(&[(lo, lo + len), (0.0, len)]).unwrap();
        let fam = lipschitz_bracket_family(rect, 2.0, &[1.5, 1.5], eps, 2.0).unwrap();
        let f = ConvexFn::new(slopes, intercepts, 10.0).unwrap();
        let eval = |x: &[f64]| f.raw(x);
        for (a, b) in xs {
            let x = [lo + a * len, b * len];
            let (l, u) = fam.bracket_at(&eval, &x);
            let v = f.raw(&x);
            prop_assert!(l <= v + 1e-12 && v <= u + 1e-12);
            prop_assert!((u - l - eps).abs() < 1e-12);
        }
    }

    #[test]
    fn sup_gap_bounded_by_epigraph_distance((s1, c1) in affine_pieces(1, 1.0), (s2, c2) in affine_pieces(1, 1.0)) {
        let d = unit_cube(1);
        let f = ConvexFn::new(s1, c1, 2.0).unwrap();
        let g = ConvexFn::new(s2, c2, 2.0).unwrap();
        let r = epigraph_hausdorff_bound(&f, &g, &d, 2.0, &[1.0]).unwrap();
        prop_assert!(r.holds, "{:?}", r);
    }

    #[test]
    fn sampler_is_deterministic_and_in_class(seed in 0u64..1000, index in 0u64..1000, m in 1usize..6) {
        let d = pentagon();
        let cfg = SamplerConfig::new(seed, m, 1.0, 1.0);
        let f = sample_convex_fn(&cfg, &d, index).unwrap();
        prop_assert_eq!(&f, &sample_convex_fn(&cfg, &d, index).unwrap());
        prop_assert!(within_bound(&f, &d).unwrap());
    }

    #[test]
    fn lipschitz_sampler_respects_gamma(seed in 0u64..1000, g0 in 0.0..2.0f64, g1 in 0.0..2.0f64) {
        let mut cfg = SamplerConfig::new(seed, 4, 1.0, 1.0);
        cfg.gamma = Some(vec![g0, g1]);
        let f = sample_lipschitz_convex(&cfg, &unit_square(), 0).unwrap();
        for s in &f.slopes {
            prop_assert!(s[0].abs() <= g0 && s[1].abs() <= g1);
        }
    }

    #[test]
    fn classification_matches_membership(seed in 0u64..200, e in 2i32..5) {
        let eps = 2f64.powi(-e);
        let part = build_partition(&unit_triangle(), eps, 2.0, 1.0, 0.25).unwrap();
        for x in sample_points(part.domain(), 40, seed, 0).unwrap() {
            let c = part.classify(&x);
            prop_assert!(c.is_some());
            let c = c.unwrap();
            prop_assert!(part.in_cell(c, &x));
        }
    }

    #[test]
    fn polytope_json_roundtrip(n in 3usize..9, r in 0.1..2.0f64, cx in -1.0..1.0f64) {
        let p = regular_polygon(n, r, [cx, 0.3]).unwrap();
        let q = PolytopeFile::parse(&PolytopeFile::to_json(&p)).unwrap();
        prop_assert_eq!(p.halfspaces(), q.halfspaces());
    }

    #[test]
    fn hausdorff_is_symmetric_and_zero_on_self(n in 3usize..8, m in 3usize..8, s in -0.3..0.3f64) {
        let p = regular_polygon(n, 1.0, [0.0, 0.0]).unwrap();
        let q = regular_polygon(m, 0.8, [s, 0.1]).unwrap();
        let a = hausdorff(&p, &q).unwrap();
        let b = hausdorff(&q, &p).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!(hausdorff(&p, &p).unwrap() < 1e-9);
    }

    #[test]
    fn volume_is_translation_and_scale_covariant(n in 3usize..10, s in 0.2..3.0f64, t in -2.0..2.0f64) {
        let p = regular_polygon(n, 1.0, [0.0, 0.0]).unwrap();
        let q: Polytope = p.affine_image(s, &[t, -t]).unwrap();
        let (a, b) = (volume(&p).unwrap(), volume(&q).unwrap());
        prop_assert!((b - s * s * a).abs() < 1e-9 * b.max(1.0));
    }

    #[test]
    fn zeta_sum_bound(p in 1.0..3.0f64, extra_u in 0.0..10.0f64, extra_eps in 1.0..40.0f64, gamma in 1.0..3.0f64) {
        let ln_u = ln_u_cap(p) - extra_u;
        let s = build_schedule_ln((ln_u - extra_eps).exp(), p, ln_u, 1).unwrap();
        if s.a_count > 0 {
            prop_assert!(zetasum_check(&s, gamma).holds);
        }
    }

    #[test]
    fn rescaling_preserves_values(
        (slopes, intercepts) in affine_pieces(2, 2.0),
        a in -1.0..1.0f64, w in 0.2..3.0f64, t in 0.0..1.0f64, u in 0.0..1.0f64, bf in 0.5..4.0f64,
    ) {
        let f = ConvexFn::new(slopes, intercepts, bf).unwrap();
        let from = [(a, a + w), (0.0, 2.0 * w)];
        let g = rescale_class(&f, &from, &[(0.0, 1.0), (0.0, 1.0)], bf, 1.0).unwrap();
        let x = [a + t * w, u * 2.0 * w];
        prop_assert!((g.raw(&[t, u]) - f.raw(&x) / bf).abs() < 1e-12 * (1.0 + f.raw(&x).abs()));
    }
}
