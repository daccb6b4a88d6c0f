//! Seeded invariant suites for the bracket families.

use convex_brackets::brackets::{
    convex_profile_count, count_bound_1d, lipschitz_bracket_family, theoretical_count, CountBound, GlobalFamily,
    LipschitzFamily, Rect,
};
use convex_brackets::entropy::{count_family, dp_count, fit_slope};
use convex_brackets::geometry::shapes::{unit_cube, unit_square};
use convex_brackets::partition::build_partition;
use convex_brackets::sampler::{rng_for, sample_lipschitz_convex, SamplerConfig};
use rand::Rng;

fn rects() -> Vec<(Rect, Vec<f64>)> {
    let c = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        (Rect::axis_aligned(&[(0.0, 1.0)]).unwrap(), vec![1.0]),
        (Rect::axis_aligned(&[(0.0, 1.0), (0.0, 0.5)]).unwrap(), vec![1.0, 2.0]),
        (
            Rect {
                frame: vec![vec![c, c], vec![-c, c]],
                lo: vec![0.0, -0.3],
                hi: vec![0.8, 0.4],
            },
            vec![0.5, 1.5],
        ),
    ]
}

#[test]
fn brackets_valid_for_seeded_lipschitz_functions() {
    for (r, (rect, gamma)) in rects().into_iter().enumerate() {
        let d = rect.dim();
        let fam: LipschitzFamily = lipschitz_bracket_family(rect.clone(), 4.0, &gamma, 0.2, 2.0).unwrap();
        let box_d = unit_cube(d).affine_image(2.0, &vec![-1.0; d]).unwrap();
        let mut cfg = SamplerConfig::new(r as u64, 4, 1.0, 4.0);
        cfg.gamma = Some(gamma.clone());
        cfg.basis = Some(rect.frame.clone());
        let mut rng = rng_for(99, r as u64);
        let mut violations = 0;
        for i in 0..1000 {
            let f = sample_lipschitz_convex(&cfg, &box_d, i).unwrap();
            let eval = |x: &[f64]| f.raw(x);
            for _ in 0..10 {
                let y: Vec<f64> = (0..d).map(|a| rng.random_range(rect.lo[a]..=rect.hi[a])).collect();
                let mut x = vec![0.0; d];
                for (c, e) in y.iter().zip(&rect.frame) {
                    for (xi, ei) in x.iter_mut().zip(e) {
                        *xi += c * ei;
                    }
                }
                let (lo, hi) = fam.bracket_at(&eval, &x);
                let v = f.raw(&x);
                if v < lo - 1e-12 || v > hi + 1e-12 || hi - lo > 0.2 + 1e-12 {
                    violations += 1;
                }
            }
        }
        assert_eq!(violations, 0, "rectangle {r}");
    }
}

#[test]
fn enumerated_counts_are_monotone_in_eps() {
    let rect = Rect::axis_aligned(&[(0.0, 1.0)]).unwrap();
    let counts: Vec<f64> = [2.0, 1.0, 0.5]
        .iter()
        .map(|e| {
            lipschitz_bracket_family(rect.clone(), 1.0, &[1.0], *e, 2.0)
                .unwrap()
                .count_bound()
                .value()
                .unwrap()
        })
        .collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    let dp: Vec<f64> = (2..=7).map(|e| dp_count(2f64.powi(-e), 1.0)).collect();
    assert!(dp.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn dp_enumeration_slope() {
    let eps: Vec<f64> = (2..=7).map(|e| 2f64.powi(-e)).collect();
    let counts: Vec<f64> = eps.iter().map(|e| dp_count(*e, 1.0)).collect();
    let fit = fit_slope(&eps, &counts).unwrap();
    assert!((0.35..=0.65).contains(&fit.slope), "{}", fit.slope);
    assert!((0.40..=0.60).contains(&fit.slope), "{}", fit.slope);
}

#[test]
fn dp_matches_strictly_convex_filter_on_tiny_grids() {
    // With an unlimited step the DFS conditions are a relaxation of
    // discrete convexity, so they can only admit more sequences.
    for n in 2..=6 {
        assert!(count_bound_1d(n, 1e9, -4, 4) >= convex_profile_count(n, -4, 4));
    }
}

#[test]
fn distinct_keys_below_enumerated_total() {
    let rect = Rect::axis_aligned(&[(0.0, 1.0)]).unwrap();
    let fam = lipschitz_bracket_family(rect, 1.0, &[1.0], 0.5, 2.0).unwrap();
    let CountBound::Enumerated(total) = fam.count_bound() else {
        panic!("tiny grid must be enumerable")
    };
    let mut cfg = SamplerConfig::new(4, 3, 1.0, 1.0);
    cfg.gamma = Some(vec![1.0]);
    let d = unit_cube(1);
    let mut keys = std::collections::HashSet::new();
    let mut history = Vec::new();
    for i in 0..4000 {
        let f = sample_lipschitz_convex(&cfg, &d, i).unwrap();
        keys.insert(fam.canonical_map(&|x| f.raw(x)).unwrap().key);
        if (i + 1) % 1000 == 0 {
            history.push(keys.len());
        }
    }
    assert!(history.windows(2).all(|w| w[0] <= w[1]));
    assert!((keys.len() as f64) <= total, "{} > {total}", keys.len());
}

#[test]
fn doubling_samples_never_loses_keys() {
    let part = build_partition(&unit_square(), 0.25, 2.0, 1.0, 0.25).unwrap();
    let fam = GlobalFamily::build(part, 0.25, 2.0).unwrap();
    let cfg = SamplerConfig::new(8, 3, 0.3, 1.0);
    let a = count_family(&fam, &cfg, 200, 32).unwrap();
    let b = count_family(&fam, &cfg, 400, 32).unwrap();
    assert!(b.distinct_keys >= a.distinct_keys);
    assert_eq!(a.coverage, 1.0);
}

#[test]
fn sup_norm_size_bounded_by_eps() {
    for (rect, gamma) in rects() {
        for eps in [0.5, 0.2, 0.05] {
            let fam = lipschitz_bracket_family(rect.clone(), 1.0, &gamma, eps, f64::INFINITY).unwrap();
            assert!(fam.lp_size() <= eps);
        }
    }
}

#[test]
fn theoretical_count_scaling() {
    let part = build_partition(&unit_square(), 0.125, 2.0, 1.0, 0.25).unwrap();
    for e in [0.5, 0.25, 0.125, 0.01] {
        let a = theoretical_count(&part, e / 2.0, 2.0).unwrap();
        let b = theoretical_count(&part, e, 2.0).unwrap();
        assert!((a.total_closed_form / b.total_closed_form - 2.0).abs() < 1e-12);
    }
}
