//! Maximum-volume inscribed (John) ellipsoids by a log-barrier Newton
//! method on the centre `c` and a symmetric positive definite shape `E`,
//! the ellipsoid being `{c + E w : ‖w‖ ≤ 1}`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Face, Polytope};
use crate::linalg::{canonical_sign, dot, gram_schmidt, sub, unit_vector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    /// Orthonormal principal axes, ordered by decreasing radius.
    pub axes: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
}

impl Ellipsoid {
    /// `min_{y∈E} ⟨v, y⟩`.
    pub fn min_along(&self, v: &[f64]) -> f64 {
        let s: f64 = self
            .axes
            .iter()
            .zip(&self.radii)
            .map(|(a, r)| (r * dot(a, v)).powi(2))
            .sum();
        dot(v, &self.center) - s.sqrt()
    }

    /// Gauge `‖E^{-1}(x − c)‖` restricted to the axes' span.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        let r = sub(x, &self.center);
        self.axes
            .iter()
            .zip(&self.radii)
            .map(|(a, rad)| (dot(a, &r) / rad).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Component of `x − c` orthogonal to the axes.
    pub fn off_span(&self, x: &[f64]) -> f64 {
        let mut r = sub(x, &self.center);
        for a in &self.axes {
            let c = dot(a, &r);
            crate::linalg::axpy(&mut r, -c, a);
        }
        crate::linalg::norm(&r)
    }

    pub fn scaled(&self, s: f64) -> Ellipsoid {
        Ellipsoid {
            center: self.center.iter().map(|x| x * s).collect(),
            axes: self.axes.clone(),
            radii: self.radii.iter().map(|r| r * s).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct JohnOptions {
    /// Duality-gap target for the barrier method.
    pub gap_tol: f64,
    pub max_newton: usize,
}

impl Default for JohnOptions {
    fn default() -> Self {
        JohnOptions {
            gap_tol: 1e-10,
            max_newton: 200,
        }
    }
}

struct Problem<'a> {
    m: usize,
    normals: Vec<&'a [f64]>,
    offsets: Vec<f64>,
    pairs: Vec<(usize, usize)>,
}

impl<'a> Problem<'a> {
    fn new(p: &'a Polytope) -> Self {
        let m = p.dim();
        let mut pairs = Vec::new();
        for i in 0..m {
            for j in i..m {
                pairs.push((i, j));
            }
        }
        Problem {
            m,
            normals: p.halfspaces().iter().map(|h| h.normal.as_slice()).collect(),
            offsets: p.halfspaces().iter().map(|h| h.offset).collect(),
            pairs,
        }
    }

    fn nvar(&self) -> usize {
        self.m + self.pairs.len()
    }

    fn shape(&self, z: &[f64]) -> DMatrix<f64> {
        let mut e = DMatrix::zeros(self.m, self.m);
        for (k, (i, j)) in self.pairs.iter().enumerate() {
            e[(*i, *j)] = z[self.m + k];
            e[(*j, *i)] = z[self.m + k];
        }
        e
    }

    fn basis(&self, k: usize) -> DMatrix<f64> {
        let (i, j) = self.pairs[k];
        let mut s = DMatrix::zeros(self.m, self.m);
        s[(i, j)] = 1.0;
        s[(j, i)] = 1.0;
        s
    }

    /// Barrier value, or `None` outside the domain.
    fn value(&self, z: &[f64], t: f64) -> Option<f64> {
        let e = self.shape(z);
        let chol = e.clone().cholesky()?;
        let logdet = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        let c = &z[..self.m];
        let mut f = -t * logdet;
        for (v, p) in self.normals.iter().zip(&self.offsets) {
            let w = &e * DVector::from_column_slice(v);
            let s = dot(v, c) - p - w.norm();
            if s <= 0.0 {
                return None;
            }
            f -= s.ln();
        }
        Some(f)
    }

    fn grad_hess(&self, z: &[f64], t: f64) -> (DVector<f64>, DMatrix<f64>) {
        let m = self.m;
        let n = self.nvar();
        let e = self.shape(z);
        let einv = e.clone().try_inverse().expect("positive definite shape");
        let c = &z[..m];
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        let sk: Vec<DMatrix<f64>> = (0..self.pairs.len()).map(|k| self.basis(k)).collect();
        let es: Vec<DMatrix<f64>> = sk.iter().map(|s| &einv * s).collect();
        for k in 0..sk.len() {
            g[m + k] -= t * es[k].trace();
            for l in 0..sk.len() {
                h[(m + k, m + l)] += t * (&es[k] * &es[l]).trace();
            }
        }
        for (v, p) in self.normals.iter().zip(&self.offsets) {
            let vv = DVector::from_column_slice(v);
            let w = &e * &vv;
            let nw = w.norm();
            let s = dot(v, c) - p - nw;
            let u: Vec<DVector<f64>> = sk.iter().map(|sm| sm * &vv).collect();
            let dn: Vec<f64> = u.iter().map(|uk| w.dot(uk) / nw).collect();
            let mut ds = DVector::zeros(n);
            for i in 0..m {
                ds[i] = v[i];
            }
            for k in 0..u.len() {
                ds[m + k] = -dn[k];
            }
            g -= &ds / s;
            h += &ds * ds.transpose() / (s * s);
            for k in 0..u.len() {
                for l in 0..u.len() {
                    let d2 = u[k].dot(&u[l]) / nw - w.dot(&u[k]) * w.dot(&u[l]) / (nw * nw * nw);
                    h[(m + k, m + l)] += d2 / s;
                }
            }
        }
        (g, h)
    }
}

/// John ellipsoid of a full-dimensional polytope.
pub fn john_ellipsoid(p: &Polytope) -> Result<Ellipsoid> {
    john_with(p, JohnOptions::default())
}

pub fn john_with(p: &Polytope, opts: JohnOptions) -> Result<Ellipsoid> {
    let pb = Problem::new(p);
    let m = pb.m;
    let (c0, r0) = p.chebyshev_center()?;
    if r0 <= 0.0 {
        return Err(Error::Domain("empty interior".into()));
    }
    let mut z = c0.clone();
    for (i, j) in &pb.pairs {
        z.push(if i == j { 0.99 * r0 } else { 0.0 });
    }
    let nc = pb.normals.len() as f64;
    let mut t = 1.0;
    loop {
        for _ in 0..opts.max_newton {
            let (g, h) = pb.grad_hess(&z, t);
            let step = match h.clone().cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => h.lu().solve(&(-&g)).unwrap_or_else(|| -g.clone()),
            };
            let dec = -g.dot(&step);
            if dec / 2.0 < 1e-13 {
                break;
            }
            let f0 = pb.value(&z, t).expect("iterate stays feasible");
            let mut a = 1.0;
            let mut moved = false;
            while a > 1e-14 {
                let cand: Vec<f64> = z.iter().zip(step.iter()).map(|(x, d)| x + a * d).collect();
                if let Some(f1) = pb.value(&cand, t) {
                    if f1 <= f0 - 0.25 * a * dec {
                        z = cand;
                        moved = true;
                        break;
                    }
                }
                a *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if nc / t < opts.gap_tol {
            break;
        }
        t *= 8.0;
    }
    let e = pb.shape(&z);
    Ok(principal(&z[..m], &e))
}

/// Orders the eigen-decomposition of `E` deterministically: radii descending,
/// equal radii sharing a canonical basis of their eigenspace.
fn principal(center: &[f64], e: &DMatrix<f64>) -> Ellipsoid {
    let m = e.nrows();
    let eig = e.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let mut axes = Vec::with_capacity(m);
    let mut radii = Vec::with_capacity(m);
    let mut i = 0;
    while i < m {
        let mut j = i + 1;
        while j < m && (eig.eigenvalues[idx[i]] - eig.eigenvalues[idx[j]]).abs() < 1e-6 {
            j += 1;
        }
        let space: Vec<Vec<f64>> = idx[i..j]
            .iter()
            .map(|c| eig.eigenvectors.column(*c).iter().copied().collect())
            .collect();
        let group = canonical_subspace_basis(&space, m);
        for (q, col) in group.into_iter().zip(&idx[i..j]) {
            axes.push(q);
            radii.push(eig.eigenvalues[*col]);
        }
        i = j;
    }
    Ellipsoid {
        center: center.to_vec(),
        axes,
        radii,
    }
}

/// Basis of `span(space)` obtained by projecting the standard basis onto it.
fn canonical_subspace_basis(space: &[Vec<f64>], m: usize) -> Vec<Vec<f64>> {
    if space.len() == 1 {
        let mut v = space[0].clone();
        canonical_sign(&mut v);
        return vec![v];
    }
    let mut projected = Vec::with_capacity(m);
    for i in 0..m {
        let e = unit_vector(m, i);
        let mut w = vec![0.0; m];
        for q in space {
            crate::linalg::axpy(&mut w, dot(q, &e), q);
        }
        projected.push(w);
    }
    let mut out = gram_schmidt(&projected, 1e-8);
    out.truncate(space.len());
    for v in out.iter_mut() {
        canonical_sign(v);
    }
    out
}

/// John ellipsoid of a face within its affine hull, in ambient coordinates.
pub fn john_face(p: &Polytope, face: &Face) -> Result<Ellipsoid> {
    let local = face
        .local_polytope(p)?
        .ok_or_else(|| Error::Domain("zero-dimensional face".into()))?;
    let e = john_ellipsoid(&local)?;
    Ok(lift(face, &e))
}

fn lift(face: &Face, e: &Ellipsoid) -> Ellipsoid {
    let d = face.affine_point.len();
    let axes = e
        .axes
        .iter()
        .map(|a| {
            let mut v = vec![0.0; d];
            for (c, t) in a.iter().zip(&face.tangent_basis) {
                crate::linalg::axpy(&mut v, *c, t);
            }
            v
        })
        .collect();
    Ellipsoid {
        center: face.to_ambient(&e.center),
        axes,
        radii: e.radii.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JohnCheck {
    pub ok: bool,
    /// Largest amount by which the ellipsoid crosses a facet.
    pub inscribed_violation: f64,
    /// Largest gauge of a vertex minus the factor.
    pub containment_excess: f64,
}

/// Checks `E ⊆ P` and `P ⊆ c + factor (E − c)` within `1e-7`.
pub fn verify_john(p: &Polytope, e: &Ellipsoid, factor: f64) -> JohnCheck {
    let inscribed_violation = p
        .halfspaces()
        .iter()
        .map(|h| h.offset - e.min_along(&h.normal))
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let containment_excess = p
        .vertices()
        .iter()
        .map(|v| e.gauge(&v.point) - factor)
        .fold(f64::NEG_INFINITY, f64::max);
    JohnCheck {
        ok: inscribed_violation <= 1e-7 && containment_excess <= 1e-7,
        inscribed_violation,
        containment_excess,
    }
}

/// `verify_john` for a face, carried out in its tangent coordinates.
pub fn verify_face_john(p: &Polytope, face: &Face, e: &Ellipsoid, factor: f64) -> Result<JohnCheck> {
    let local = face
        .local_polytope(p)?
        .ok_or_else(|| Error::Domain("zero-dimensional face".into()))?;
    let le = Ellipsoid {
        center: face.to_local(&e.center),
        axes: e.axes.iter().map(|a| face.project_direction(a)).collect(),
        radii: e.radii.clone(),
    };
    let mut check = verify_john(&local, &le, factor);
    let drift = e.off_span(&face.affine_point);
    if drift > 1e-7 {
        check.ok = false;
    }
    Ok(check)
}
