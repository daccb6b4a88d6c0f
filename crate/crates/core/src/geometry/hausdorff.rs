use super::Polytope;
use crate::error::{Error, Result};
use crate::linalg::{add, combinations, dist, dot, gram_schmidt, min_norm_solution};

/// Euclidean projection of `x` onto `q`.
///
/// The minimizer is the projection of `x` onto the affine hull of some
/// face, cut out by at most `d` independent constraints; every such
/// candidate is tried and the closest feasible one kept.
pub fn project_onto_polytope(x: &[f64], q: &Polytope) -> Vec<f64> {
    let d = q.dim();
    if q.contains(x, 0.0) {
        return x.to_vec();
    }
    let hs = q.halfspaces();
    let tol = 1e-10;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for s in 1..=d.min(hs.len()) {
        for subset in combinations(hs.len(), s) {
            let rows: Vec<Vec<f64>> = subset.iter().map(|i| hs[*i].normal.clone()).collect();
            if gram_schmidt(&rows, 1e-10).len() < s {
                continue;
            }
            let rhs: Vec<f64> = subset.iter().map(|i| hs[*i].offset - dot(&hs[*i].normal, x)).collect();
            let Some(c) = min_norm_solution(&rows, &rhs, d) else {
                continue;
            };
            let y = add(x, &c);
            if !q.contains(&y, tol) {
                continue;
            }
            let dd = dist(x, &y);
            if best.as_ref().is_none_or(|(b, _)| dd < *b) {
                best = Some((dd, y));
            }
        }
    }
    best.map(|(_, y)| y).unwrap_or_else(|| fallback_vertex(x, q))
}

fn fallback_vertex(x: &[f64], q: &Polytope) -> Vec<f64> {
    q.vertices()
        .iter()
        .min_by(|a, b| dist(x, &a.point).total_cmp(&dist(x, &b.point)))
        .map(|v| v.point.clone())
        .unwrap_or_else(|| x.to_vec())
}

pub fn distance_to_polytope(x: &[f64], q: &Polytope) -> f64 {
    dist(x, &project_onto_polytope(x, q))
}

/// Hausdorff distance, attained at vertices for convex polytopes.
pub fn hausdorff(p: &Polytope, q: &Polytope) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::Domain("dimension mismatch".into()));
    }
    let one = |a: &Polytope, b: &Polytope| {
        a.vertices()
            .iter()
            .map(|v| distance_to_polytope(&v.point, b))
            .fold(0.0, f64::max)
    };
    Ok(one(p, q).max(one(q, p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::*;

    #[test]
    fn examples() {
        let a = unit_square();
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let b = box_polytope(&[(0.0, 2.0), (0.0, 2.0)]).unwrap();
        assert!((hausdorff(&a, &b).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        let c = a.affine_image(1.0, &[3.0, 4.0]).unwrap();
        assert!((hausdorff(&a, &c).unwrap() - 5.0).abs() < 1e-12);
        assert!(hausdorff(&a, &unit_cube(3)).is_err());
    }

    #[test]
    fn projection_onto_edge_and_corner() {
        let sq = unit_square();
        assert!((distance_to_polytope(&[0.5, 2.0], &sq) - 1.0).abs() < 1e-12);
        assert!((distance_to_polytope(&[2.0, 2.0], &sq) - 2f64.sqrt()).abs() < 1e-12);
        let tri = unit_triangle();
        assert!((distance_to_polytope(&[1.0, 1.0], &tri) - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
