use std::collections::BTreeSet;

use super::{Halfspace, Polytope};
use crate::error::{Error, Result};
use crate::linalg::{determinant, factorial, gram_schmidt, lex_cmp, sub};

/// A `d`-simplex given by its `d + 1` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    pub vertices: Vec<Vec<f64>>,
}

impl Simplex {
    pub fn volume(&self) -> f64 {
        simplex_volume(&self.vertices)
    }

    /// The simplex as a halfspace polytope.
    pub fn to_polytope(&self) -> Result<Polytope> {
        let d = self.vertices.len() - 1;
        let mut hs = Vec::with_capacity(d + 1);
        for skip in 0..=d {
            let pts: Vec<&Vec<f64>> = self
                .vertices
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != skip)
                .map(|(_, v)| v)
                .collect();
            let dirs: Vec<Vec<f64>> = pts[1..].iter().map(|v| sub(v, pts[0])).collect();
            let normal = crate::linalg::complement_basis(&dirs, d)
                .into_iter()
                .next()
                .ok_or_else(|| Error::Domain("degenerate simplex".into()))?;
            let mut h = Halfspace {
                offset: crate::linalg::dot(&normal, pts[0]),
                normal,
            };
            if h.slack(&self.vertices[skip]) < 0.0 {
                h.normal.iter_mut().for_each(|c| *c = -*c);
                h.offset = -h.offset;
            }
            hs.push(h);
        }
        Polytope::new(d, hs)
    }

    /// Barycentric coordinates of `x`.
    pub fn barycentric(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d = self.vertices.len() - 1;
        let v0 = &self.vertices[0];
        let cols: Vec<Vec<f64>> = self.vertices[1..].iter().map(|v| sub(v, v0)).collect();
        let rows: Vec<Vec<f64>> = (0..d).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        let lam = crate::linalg::solve_square(&rows, &sub(x, v0))?;
        let l0 = 1.0 - lam.iter().sum::<f64>();
        let mut out = vec![l0];
        out.extend(lam);
        Some(out)
    }
}

/// `|det(v_1 − v_0, …, v_d − v_0)| / d!`.
pub fn simplex_volume(vertices: &[Vec<f64>]) -> f64 {
    let d = vertices.len() - 1;
    let rows: Vec<Vec<f64>> = vertices[1..].iter().map(|v| sub(v, &vertices[0])).collect();
    determinant(&rows).abs() / factorial(d)
}

fn affine_dim(points: &[&Vec<f64>]) -> usize {
    if points.is_empty() {
        return 0;
    }
    let dirs: Vec<Vec<f64>> = points[1..].iter().map(|v| sub(v, points[0])).collect();
    gram_schmidt(&dirs, 1e-9).len()
}

/// Pulling triangulation: each face is coned from its lexicographically
/// least vertex over the faces of its facets not containing that vertex.
pub fn triangulate(p: &Polytope) -> Result<Vec<Simplex>> {
    let verts = p.vertices();
    let d = p.dim();
    let all: Vec<usize> = (0..verts.len()).collect();
    let pts: Vec<&Vec<f64>> = verts.iter().map(|v| &v.point).collect();
    if affine_dim(&pts) < d {
        return Err(Error::Domain("polytope is lower-dimensional".into()));
    }
    let mut out = Vec::new();
    pull(p, &all, &BTreeSet::new(), d, &mut Vec::new(), &mut out);
    Ok(out
        .into_iter()
        .map(|idx: Vec<usize>| Simplex {
            vertices: idx.iter().map(|i| verts[*i].point.clone()).collect(),
        })
        .collect())
}

fn pull(
    p: &Polytope,
    face: &[usize],
    tight: &BTreeSet<usize>,
    dim: usize,
    apexes: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let verts = p.vertices();
    if dim == 0 {
        let mut s = apexes.clone();
        s.push(face[0]);
        out.push(s);
        return;
    }
    let v0 = *face
        .iter()
        .min_by(|a, b| lex_cmp(&verts[**a].point, &verts[**b].point))
        .expect("nonempty face");
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    for i in 0..p.n_facets() {
        if tight.contains(&i) || verts[v0].tight.contains(&i) {
            continue;
        }
        let sub_face: Vec<usize> = face.iter().copied().filter(|v| verts[*v].tight.contains(&i)).collect();
        if sub_face.len() < dim || seen.contains(&sub_face) {
            continue;
        }
        let pts: Vec<&Vec<f64>> = sub_face.iter().map(|v| &verts[*v].point).collect();
        if affine_dim(&pts) != dim - 1 {
            continue;
        }
        seen.insert(sub_face.clone());
        let mut t = tight.clone();
        t.insert(i);
        apexes.push(v0);
        pull(p, &sub_face, &t, dim - 1, apexes, out);
        apexes.pop();
    }
}

/// Exact volume via triangulation.
pub fn volume(p: &Polytope) -> Result<f64> {
    if p.dim() == 1 {
        let (a, b) = p.bounding_box()[0];
        return Ok(b - a);
    }
    Ok(triangulate(p)?.iter().map(|s| s.volume()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::*;

    #[test]
    fn square_two_triangles() {
        let t = triangulate(&unit_square()).unwrap();
        assert_eq!(t.len(), 2);
        for s in &t {
            assert!((s.volume() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn simplex_is_one_piece() {
        for d in 1..=3 {
            let t = triangulate(&standard_simplex(d)).unwrap();
            assert_eq!(t.len(), 1);
            assert!((t[0].volume() - 1.0 / factorial(d)).abs() < 1e-12);
        }
    }

    #[test]
    fn hexagon_fan() {
        let t = triangulate(&unit_hexagon()).unwrap();
        assert_eq!(t.len(), 4);
        let total: f64 = t.iter().map(|s| s.volume()).sum();
        assert!((total - 1.5 * 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn volumes() {
        assert!((volume(&unit_square()).unwrap() - 1.0).abs() < 1e-12);
        assert!((volume(&unit_triangle()).unwrap() - 0.5).abs() < 1e-12);
        assert!((volume(&unit_cube(3)).unwrap() - 1.0).abs() < 1e-12);
        assert!((volume(&square_pyramid()).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_roundtrip() {
        let s = Simplex {
            vertices: vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]],
        };
        let p = s.to_polytope().unwrap();
        assert!((volume(&p).unwrap() - 1.0).abs() < 1e-12);
        let b = s.barycentric(&[0.5, 0.25]).unwrap();
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
