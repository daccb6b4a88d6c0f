use super::ConvexFn;
use crate::error::{Error, Result};
use crate::geometry::{Halfspace, Polytope};

fn ratios(from: &[(f64, f64)], to: &[(f64, f64)]) -> Result<Vec<f64>> {
    if from.len() != to.len() {
        return Err(Error::Argument("boxes differ in dimension".into()));
    }
    from.iter()
        .zip(to)
        .map(|((a, b), (c, e))| {
            if !(b > a) || !(e > c) {
                Err(Error::Argument("degenerate box".into()))
            } else {
                Ok((b - a) / (e - c))
            }
        })
        .collect()
}

/// `f̃(t) = (B_to/B_from) f(x(t))` where `x(t)` maps `box_to` affinely
/// onto `box_from` axis by axis.
pub fn rescale_class(
    f: &ConvexFn,
    box_from: &[(f64, f64)],
    box_to: &[(f64, f64)],
    b_from: f64,
    b_to: f64,
) -> Result<ConvexFn> {
    let r = ratios(box_from, box_to)?;
    if !(b_from > 0.0) || !(b_to > 0.0) {
        return Err(Error::Argument("bounds must be positive".into()));
    }
    let s = b_to / b_from;
    let mut slopes = Vec::with_capacity(f.n_pieces());
    let mut intercepts = Vec::with_capacity(f.n_pieces());
    for (g, c) in f.slopes.iter().zip(&f.intercepts) {
        slopes.push(g.iter().zip(&r).map(|(gi, ri)| s * gi * ri).collect());
        let shift: f64 = (0..g.len()).map(|i| g[i] * (box_from[i].0 - r[i] * box_to[i].0)).sum();
        intercepts.push(s * (c + shift));
    }
    ConvexFn::new(slopes, intercepts, b_to)
}

/// Image of `p ⊆ box_from` under the affine map onto `box_to`.
pub fn rescale_polytope(p: &Polytope, box_from: &[(f64, f64)], box_to: &[(f64, f64)]) -> Result<Polytope> {
    let r = ratios(box_from, box_to)?;
    let hs = p
        .halfspaces()
        .iter()
        .map(|h| {
            let normal: Vec<f64> = h.normal.iter().zip(&r).map(|(n, ri)| n * ri).collect();
            let shift: f64 = (0..r.len())
                .map(|i| h.normal[i] * (box_from[i].0 - r[i] * box_to[i].0))
                .sum();
            Halfspace {
                normal,
                offset: h.offset - shift,
            }
        })
        .collect();
    Polytope::new(p.dim(), hs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brackets::lp_size;
    use crate::geometry::{shapes::box_polytope, triangulate};

    #[test]
    fn identity_boxes() {
        let f = ConvexFn::new(vec![vec![1.0, -2.0], vec![0.5, 0.0]], vec![0.1, -0.3], 1.0).unwrap();
        let bx = [(0.0, 1.0), (0.0, 1.0)];
        assert_eq!(rescale_class(&f, &bx, &bx, 1.0, 1.0).unwrap(), f);
    }

    #[test]
    fn chain_rule_doubles_slope() {
        let f = ConvexFn::new(vec![vec![1.0]], vec![0.0], 2.0).unwrap();
        let g = rescale_class(&f, &[(0.0, 2.0)], &[(0.0, 1.0)], 2.0, 2.0).unwrap();
        assert_eq!(g.slopes[0], vec![2.0]);
        for t in [0.0, 0.3, 1.0] {
            assert!((g.eval(&[t]) - f.eval(&[2.0 * t])).abs() < 1e-15);
        }
    }

    #[test]
    fn values_correspond() {
        let f = ConvexFn::new(vec![vec![0.7, -0.2], vec![-0.4, 0.9]], vec![0.1, -0.3], 3.0).unwrap();
        let from = [(-1.0, 2.0), (0.5, 1.5)];
        let to = [(0.0, 1.0), (0.0, 1.0)];
        let g = rescale_class(&f, &from, &to, 3.0, 1.0).unwrap();
        for t in [[0.2, 0.9], [1.0, 0.0], [0.5, 0.5]] {
            let x = [-1.0 + 3.0 * t[0], 0.5 + t[1]];
            assert!((g.raw(&t) - f.raw(&x) / 3.0).abs() < 1e-14);
        }
        let p = box_polytope(&from).unwrap();
        let q = rescale_polytope(&p, &from, &to).unwrap();
        for (a, b) in q.bounding_box().iter().zip(&to) {
            assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
        }
    }

    #[test]
    fn lp_size_scales_by_b_times_volume() {
        // A bracket of gap w on [0,1]² pulled back to [0,2]² with B = 3
        // has gap 3w, so its L_1 size is 3·4·w.
        let w = 0.2;
        let unit = box_polytope(&[(0.0, 1.0), (0.0, 1.0)]).unwrap();
        let big = box_polytope(&[(0.0, 2.0), (0.0, 2.0)]).unwrap();
        let pieces = |p: &Polytope, g: f64| -> Vec<_> {
            triangulate(p)
                .unwrap()
                .into_iter()
                .map(|s| {
                    let n = s.vertices.len();
                    (s, vec![g; n])
                })
                .collect()
        };
        let small = lp_size(&pieces(&unit, w), 1.0).unwrap();
        let large = lp_size(&pieces(&big, 3.0 * w), 1.0).unwrap();
        assert!((large / small - 12.0).abs() < 1e-12);
    }
}
