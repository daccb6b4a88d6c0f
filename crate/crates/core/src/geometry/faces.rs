use serde::Serialize;

use super::{Halfspace, Polytope, GEOM_TOL};
use crate::error::{Error, Result};
use crate::linalg::{add, combinations, complement_basis, dot, gram_schmidt, min_norm_solution, norm, sub};
use crate::lp::{Cmp, LinearProgram, LpOutcome};

/// The face `G_j = D ∩ H_{j_1} ∩ … ∩ H_{j_k}` of codimension `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Face {
    pub j_tuple: Vec<usize>,
    pub k: usize,
    /// Relative-interior point (centre of the largest ball inside the face).
    pub affine_point: Vec<f64>,
    /// Orthonormal basis of the face's linear hull, `d − k` vectors.
    pub tangent_basis: Vec<Vec<f64>>,
    /// Radius of the largest ball inside the face, within its affine hull.
    pub inradius: f64,
}

impl Face {
    pub fn dim(&self) -> usize {
        self.tangent_basis.len()
    }

    pub fn to_local(&self, x: &[f64]) -> Vec<f64> {
        let r = sub(x, &self.affine_point);
        self.tangent_basis.iter().map(|t| dot(t, &r)).collect()
    }

    pub fn to_ambient(&self, y: &[f64]) -> Vec<f64> {
        let mut x = self.affine_point.clone();
        for (c, t) in y.iter().zip(&self.tangent_basis) {
            crate::linalg::axpy(&mut x, *c, t);
        }
        x
    }

    /// Projection of `v` onto the tangent space, in tangent coordinates.
    pub fn project_direction(&self, v: &[f64]) -> Vec<f64> {
        self.tangent_basis.iter().map(|t| dot(t, v)).collect()
    }

    /// The face as a full-dimensional polytope in tangent coordinates.
    /// `None` for a zero-dimensional face.
    pub fn local_polytope(&self, p: &Polytope) -> Result<Option<Polytope>> {
        let m = self.dim();
        if m == 0 {
            return Ok(None);
        }
        let mut hs = Vec::new();
        for (b, h) in p.halfspaces().iter().enumerate() {
            if self.j_tuple.contains(&b) {
                continue;
            }
            let w = self.project_direction(&h.normal);
            if norm(&w) < 1e-12 {
                continue;
            }
            hs.push(Halfspace {
                normal: w,
                offset: h.offset - dot(&h.normal, &self.affine_point),
            });
        }
        Polytope::new(m, hs).map(Some)
    }

    /// Vertices of the polytope lying on every hyperplane of the face.
    pub fn vertices(&self, p: &Polytope) -> Vec<Vec<f64>> {
        p.vertices()
            .iter()
            .filter(|v| self.j_tuple.iter().all(|j| v.tight.contains(j)))
            .map(|v| v.point.clone())
            .collect()
    }

    /// `(d − k)`-dimensional volume; a point has volume 1.
    pub fn volume(&self, p: &Polytope) -> Result<f64> {
        match self.local_polytope(p)? {
            None => Ok(1.0),
            Some(q) => super::volume(&q),
        }
    }
}

/// Builds the face for `tuple`, or `None` if the hyperplanes do not meet
/// `D` in a face of the expected dimension.
pub(crate) fn face_of(p: &Polytope, tuple: &[usize]) -> Option<Face> {
    let d = p.dim();
    let k = tuple.len();
    let hs = p.halfspaces();
    let normals: Vec<Vec<f64>> = tuple.iter().map(|i| hs[*i].normal.clone()).collect();
    if gram_schmidt(&normals, 1e-10).len() < k {
        return None;
    }
    let tangent = complement_basis(&normals, d);
    let mut lp = LinearProgram::new(d + 1);
    for (b, h) in hs.iter().enumerate() {
        let mut a = h.normal.clone();
        if tuple.contains(&b) {
            a.push(0.0);
            lp.add(a, Cmp::Eq, h.offset);
        } else {
            let proj: f64 = tangent.iter().map(|t| dot(t, &h.normal).powi(2)).sum::<f64>().sqrt();
            a.push(if proj < 1e-12 { 0.0 } else { -proj });
            lp.add(a, Cmp::Ge, h.offset);
        }
    }
    let mut cap = vec![0.0; d + 1];
    cap[d] = 1.0;
    let bound = p.bounding_box().iter().map(|(a, b)| b - a).fold(1.0, f64::max);
    lp.add(cap.clone(), Cmp::Le, bound);
    lp.set_objective(&cap);
    let LpOutcome::Optimal { mut x, .. } = lp.maximize() else {
        return None;
    };
    let r = x.pop().unwrap_or(0.0);
    if k < d && r <= GEOM_TOL {
        return None;
    }
    // Restore the equalities exactly by a minimal-norm correction.
    let resid: Vec<f64> = tuple.iter().map(|i| hs[*i].offset - dot(&hs[*i].normal, &x)).collect();
    if let Some(c) = min_norm_solution(&normals, &resid, d) {
        x = add(&x, &c);
    }
    if !p.contains(&x, GEOM_TOL) {
        return None;
    }
    Some(Face {
        j_tuple: tuple.to_vec(),
        k,
        affine_point: x,
        tangent_basis: tangent,
        inradius: if k == d { 0.0 } else { r },
    })
}

/// Faces of codimension `k`: every `k`-tuple of facets whose hyperplanes
/// meet `D` in a `(d − k)`-dimensional face, in lexicographic tuple order.
pub fn enumerate_faces(p: &Polytope, k: usize) -> Result<Vec<Face>> {
    if k > p.dim() {
        return Err(Error::Argument(format!(
            "codimension {k} exceeds dimension {}",
            p.dim()
        )));
    }
    Ok(combinations(p.n_facets(), k)
        .into_iter()
        .filter_map(|t| face_of(p, &t))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplicityReport {
    pub simple: bool,
    /// `(j_tuple, number of tight facets at the face's interior point)`.
    pub violations: Vec<(Vec<usize>, usize)>,
}

pub fn check_simple(p: &Polytope) -> Result<SimplicityReport> {
    let mut violations = Vec::new();
    for k in 1..=p.dim() {
        for f in enumerate_faces(p, k)? {
            let n = p.tight_set(&f.affine_point, GEOM_TOL).len();
            if n != k {
                violations.push((f.j_tuple.clone(), n));
            }
        }
    }
    Ok(SimplicityReport {
        simple: violations.is_empty(),
        violations,
    })
}
