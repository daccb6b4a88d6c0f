//! Bounded convex polytopes in halfspace form `{x : ⟨v_j, x⟩ ≥ p_j}`.

mod faces;
mod hausdorff;
mod io;
pub mod shapes;
mod triangulate;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{combinations, dist, dot, gram_schmidt, lex_cmp, normalized, solve_square, sub};
use crate::lp::{Cmp, LinearProgram, LpOutcome};

pub use faces::{check_simple, enumerate_faces, Face, SimplicityReport};
pub use hausdorff::{distance_to_polytope, hausdorff, project_onto_polytope};
pub use io::PolytopeFile;
pub use triangulate::{simplex_volume, triangulate, volume, Simplex};

/// Tolerance used for tightness and containment predicates.
pub const GEOM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    /// Signed slack `⟨v, x⟩ − p`; equals the Euclidean distance to the
    /// boundary hyperplane for unit normals.
    #[inline]
    pub fn slack(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub point: Vec<f64>,
    /// Indices of the halfspaces tight at this vertex.
    pub tight: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Polytope {
    dim: usize,
    halfspaces: Vec<Halfspace>,
    bbox: Vec<(f64, f64)>,
    vertices: OnceLock<Vec<Vertex>>,
}

impl PartialEq for Polytope {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.halfspaces == other.halfspaces
    }
}

impl Polytope {
    /// Builds a polytope, normalizing every normal to unit length and
    /// rescaling its offset. Fails if the system is empty, unbounded or
    /// has empty interior.
    pub fn new(dim: usize, halfspaces: Vec<Halfspace>) -> Result<Polytope> {
        if dim == 0 {
            return Err(Error::Argument("dimension must be positive".into()));
        }
        let mut hs = Vec::with_capacity(halfspaces.len());
        for h in halfspaces {
            if h.normal.len() != dim {
                return Err(Error::Domain(format!(
                    "normal of length {} in dimension {dim}",
                    h.normal.len()
                )));
            }
            let n = crate::linalg::norm(&h.normal);
            if (n - 1.0).abs() < 1e-14 {
                hs.push(h);
                continue;
            }
            let v = normalized(&h.normal).ok_or_else(|| Error::Domain("zero normal".into()))?;
            hs.push(Halfspace {
                normal: v,
                offset: h.offset / n,
            });
        }
        let mut p = Polytope {
            dim,
            halfspaces: hs,
            bbox: Vec::new(),
            vertices: OnceLock::new(),
        };
        let (_, r) = p.chebyshev_center()?;
        if r <= GEOM_TOL {
            return Err(Error::Domain("polytope has empty interior".into()));
        }
        let mut bbox = Vec::with_capacity(dim);
        for i in 0..dim {
            let e = crate::linalg::unit_vector(dim, i);
            let hi = p.support(&e)?;
            let lo = -p.support(&crate::linalg::scale(&e, -1.0))?;
            bbox.push((lo, hi));
        }
        p.bbox = bbox;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn n_facets(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn bounding_box(&self) -> &[(f64, f64)] {
        &self.bbox
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.slack(x) >= -tol)
    }

    pub fn min_slack(&self, x: &[f64]) -> f64 {
        self.halfspaces.iter().map(|h| h.slack(x)).fold(f64::INFINITY, f64::min)
    }

    fn base_lp(&self, extra: usize) -> LinearProgram {
        let n = self.dim + extra;
        let mut lp = LinearProgram::new(n);
        for h in &self.halfspaces {
            let mut a = h.normal.clone();
            a.resize(n, 0.0);
            lp.add(a, Cmp::Ge, h.offset);
        }
        lp
    }

    /// Support function `h(P, x) = max_{y∈P} ⟨y, x⟩`.
    pub fn support(&self, x: &[f64]) -> Result<f64> {
        self.support_point(x).map(|(v, _)| v)
    }

    /// Support value together with a maximizer.
    pub fn support_point(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        if x.len() != self.dim {
            return Err(Error::Domain("direction has wrong dimension".into()));
        }
        let mut lp = self.base_lp(0);
        lp.set_objective(x);
        match lp.maximize() {
            LpOutcome::Optimal { value, x } => Ok((value, x)),
            LpOutcome::Infeasible => Err(Error::Domain("empty polytope".into())),
            LpOutcome::Unbounded => Err(Error::Unbounded(format!("direction {x:?}"))),
        }
    }

    /// Width `h(P,u) + h(P,−u)` in the direction `u`.
    pub fn width(&self, u: &[f64]) -> Result<f64> {
        let nu = crate::linalg::norm(u);
        if (nu - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!("direction norm {nu} is not 1")));
        }
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        let w = self.support(u)? + self.support(&neg)?;
        Ok(w.max(0.0))
    }

    /// Diameter over vertex pairs with the attaining unit direction.
    pub fn max_width(&self) -> (f64, Vec<f64>) {
        let vs = self.vertices();
        let mut best = (0.0, crate::linalg::unit_vector(self.dim, 0));
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                let dd = dist(&vs[i].point, &vs[j].point);
                if dd > best.0 {
                    let mut u = sub(&vs[j].point, &vs[i].point);
                    u.iter_mut().for_each(|c| *c /= dd);
                    crate::linalg::canonical_sign(&mut u);
                    best = (dd, u);
                }
            }
        }
        best
    }

    /// Center and radius of the largest inscribed ball.
    pub fn chebyshev_center(&self) -> Result<(Vec<f64>, f64)> {
        let d = self.dim;
        let mut lp = LinearProgram::new(d + 1);
        for h in &self.halfspaces {
            let mut a = h.normal.clone();
            a.push(-1.0);
            lp.add(a, Cmp::Ge, h.offset);
        }
        let mut obj = vec![0.0; d + 1];
        obj[d] = 1.0;
        lp.set_objective(&obj);
        match lp.maximize() {
            LpOutcome::Optimal { mut x, .. } => {
                let r = x.pop().unwrap_or(0.0);
                Ok((x, r))
            }
            LpOutcome::Infeasible => Err(Error::Domain("empty polytope".into())),
            LpOutcome::Unbounded => Err(Error::Unbounded("inscribed ball radius".into())),
        }
    }

    /// Vertices found by solving every `d`-tuple of facet hyperplanes.
    pub fn vertices(&self) -> &[Vertex] {
        self.vertices.get_or_init(|| self.compute_vertices())
    }

    fn compute_vertices(&self) -> Vec<Vertex> {
        let d = self.dim;
        let mut out: Vec<Vertex> = Vec::new();
        for tuple in combinations(self.halfspaces.len(), d) {
            let rows: Vec<Vec<f64>> = tuple.iter().map(|i| self.halfspaces[*i].normal.clone()).collect();
            if gram_schmidt(&rows, 1e-10).len() < d {
                continue;
            }
            let rhs: Vec<f64> = tuple.iter().map(|i| self.halfspaces[*i].offset).collect();
            let Some(x) = solve_square(&rows, &rhs) else { continue };
            if !self.contains(&x, GEOM_TOL) {
                continue;
            }
            if out.iter().any(|v| dist(&v.point, &x) < 1e-9) {
                continue;
            }
            let tight = self.tight_set(&x, GEOM_TOL);
            out.push(Vertex { point: x, tight });
        }
        out.sort_by(|a, b| lex_cmp(&a.point, &b.point));
        out
    }

    pub fn tight_set(&self, x: &[f64], tol: f64) -> Vec<usize> {
        self.halfspaces
            .iter()
            .enumerate()
            .filter(|(_, h)| h.slack(x).abs() <= tol)
            .map(|(i, _)| i)
            .collect()
    }

    /// Image under `x ↦ s·x + t`.
    pub fn affine_image(&self, s: f64, t: &[f64]) -> Result<Polytope> {
        if s <= 0.0 {
            return Err(Error::Argument("scale must be positive".into()));
        }
        let hs = self
            .halfspaces
            .iter()
            .map(|h| Halfspace {
                normal: h.normal.clone(),
                offset: s * h.offset + dot(&h.normal, t),
            })
            .collect();
        Polytope::new(self.dim, hs)
    }

    /// Image under an orthogonal map `x ↦ Qx` (rows of `q` are the images' coordinates).
    pub fn rotated(&self, q: &[Vec<f64>]) -> Result<Polytope> {
        let hs = self
            .halfspaces
            .iter()
            .map(|h| Halfspace {
                normal: q.iter().map(|row| dot(row, &h.normal)).collect(),
                offset: h.offset,
            })
            .collect();
        Polytope::new(self.dim, hs)
    }

    /// Uniformly rescaled and translated copy inside `[0,1]^d`, together
    /// with the scale and shift used (`x_new = s·x + t`).
    pub fn normalized_to_unit_box(&self) -> Result<(Polytope, f64, Vec<f64>)> {
        let span = self.bbox.iter().map(|(a, b)| b - a).fold(0.0, f64::max);
        let s = 1.0 / span;
        let t: Vec<f64> = self.bbox.iter().map(|(a, _)| -s * a).collect();
        Ok((self.affine_image(s, &t)?, s, t))
    }
}

/// `inf {|k| : x + k v ∈ H}` for the hyperplane `H = {⟨n,y⟩ = p}`.
pub fn directional_distance(x: &[f64], h: &Halfspace, v: &[f64]) -> f64 {
    let nv = dot(&h.normal, v);
    if nv == 0.0 {
        f64::INFINITY
    } else {
        (dot(&h.normal, x) - h.offset).abs() / nv.abs()
    }
}
