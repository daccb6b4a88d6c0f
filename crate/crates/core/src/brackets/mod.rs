//! Bracket construction: grid-quantized Lipschitz families on rectangles,
//! their assembly over a partition, size and count evaluators.

mod count;
mod epigraph;
mod global;
mod grid;
mod quad;
mod rescale;
mod theory;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Simplex;
use crate::linalg::{dot, factorial};

pub use count::{convex_profile_count, count_bound_1d, CountBound};
pub use epigraph::{epigraph_hausdorff_bound, epigraph_polytope, sup_norm_gap, EpigraphCheck};
pub use global::{combine_families, CellFamily, GlobalFamily, KeyCount};
pub use grid::{lipschitz_bracket_family, LipschitzFamily, Rect};
pub use quad::gauss_legendre;
pub use rescale::{rescale_class, rescale_polytope};
pub use theory::{c_dk, size_certificate, theoretical_count, FaceCount, SizeCertificate, TheoreticalCount};

/// `f(x) = clamp(max_j ⟨g_j, x⟩ + c_j, −B, B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexFn {
    pub slopes: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    pub cap: f64,
}

impl ConvexFn {
    pub fn new(slopes: Vec<Vec<f64>>, intercepts: Vec<f64>, cap: f64) -> Result<Self> {
        if slopes.is_empty() || slopes.len() != intercepts.len() {
            return Err(Error::Argument("need matching, nonempty slopes and intercepts".into()));
        }
        Ok(ConvexFn {
            slopes,
            intercepts,
            cap,
        })
    }

    pub fn dim(&self) -> usize {
        self.slopes[0].len()
    }

    pub fn n_pieces(&self) -> usize {
        self.slopes.len()
    }

    /// Unclipped maximum of the affine pieces.
    pub fn raw(&self, x: &[f64]) -> f64 {
        self.slopes
            .iter()
            .zip(&self.intercepts)
            .map(|(g, c)| dot(g, x) + c)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.raw(x).clamp(-self.cap, self.cap)
    }

    /// Maximum of the pieces satisfying `|⟨g, e_α⟩| ≤ Γ_α` (with a relative
    /// slack of `1e-9`), i.e. a convex `Γ`-Lipschitz minorant that agrees
    /// with `f` wherever only admissible pieces are active.
    pub fn admissible_pieces(&self, basis: &[Vec<f64>], gamma: &[f64]) -> Vec<usize> {
        (0..self.slopes.len())
            .filter(|j| {
                basis
                    .iter()
                    .zip(gamma)
                    .all(|(e, g)| dot(&self.slopes[*j], e).abs() <= g * (1.0 + 1e-9))
            })
            .collect()
    }

    pub fn eval_pieces(&self, pieces: &[usize], x: &[f64]) -> f64 {
        pieces
            .iter()
            .map(|j| dot(&self.slopes[*j], x) + self.intercepts[*j])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A bracket `[interp − w/2, interp + w/2]` around a piecewise-linear
/// interpolant on a Kuhn-triangulated grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Bracket {
    /// Quantized node values, row-major over the grid.
    pub key: Vec<i64>,
    pub quantum: f64,
    pub half_width: f64,
}

impl Bracket {
    pub fn lower_node(&self, n: usize) -> f64 {
        self.key[n] as f64 * self.quantum - self.half_width
    }

    pub fn upper_node(&self, n: usize) -> f64 {
        self.key[n] as f64 * self.quantum + self.half_width
    }

    /// Node values as little-endian 64-bit floats `(lower, upper)` interleaved.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.key.len() * 16);
        for n in 0..self.key.len() {
            out.extend_from_slice(&self.lower_node(n).to_le_bytes());
            out.extend_from_slice(&self.upper_node(n).to_le_bytes());
        }
        out
    }
}

/// Complete homogeneous symmetric polynomial `h_p(g_0, …, g_d)`.
fn complete_homogeneous(g: &[f64], p: usize) -> f64 {
    let mut h = vec![0.0; p + 1];
    h[0] = 1.0;
    for gi in g {
        for m in 1..=p {
            h[m] += gi * h[m - 1];
        }
    }
    h[p]
}

/// `∫_S (Σ λ_i g_i)^p` for the linear interpolant of nonnegative node
/// values `g` over the simplex `S`.
pub fn simplex_power_integral(s: &Simplex, g: &[f64], p: f64) -> f64 {
    let d = s.vertices.len() - 1;
    let vol = s.volume();
    if p.fract() == 0.0 && p <= 64.0 {
        let pi = p as usize;
        return vol * factorial(d) * factorial(pi) / factorial(d + pi) * complete_homogeneous(g, pi);
    }
    // Collapsed-coordinate Gauss–Legendre rule.
    let n = (p.ceil() as usize + 4).max(16);
    let (xs, ws) = gauss_legendre(n);
    let nodes: Vec<f64> = xs.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let wts: Vec<f64> = ws.iter().map(|w| 0.5 * w).collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; d];
    loop {
        // Map cube point t to barycentric coordinates.
        let mut lam = vec![0.0; d + 1];
        let mut rest = 1.0;
        let mut w = 1.0;
        for a in 0..d {
            let t = nodes[idx[a]];
            w *= wts[idx[a]];
            lam[a] = rest * t;
            rest *= 1.0 - t;
        }
        lam[d] = rest;
        // Jacobian of the collapsed map is Π (1 − t_a)^{d−1−a}.
        let mut jac2 = 1.0;
        for a in 0..d {
            jac2 *= (1.0 - nodes[idx[a]]).powi((d - 1 - a) as i32);
        }
        let val: f64 = lam.iter().zip(g).map(|(l, gi)| l * gi).sum();
        total += w * jac2 * val.max(0.0).powf(p);
        let mut a = 0;
        loop {
            if a == d {
                return total * vol * factorial(d);
            }
            idx[a] += 1;
            if idx[a] < n {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// `L_p` norm of a nonnegative piecewise-linear function given on simplices.
pub fn lp_size(pieces: &[(Simplex, Vec<f64>)], p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Argument(format!("p = {p} must be at least 1")));
    }
    if p.is_infinite() {
        return Ok(pieces.iter().flat_map(|(_, g)| g.iter().cloned()).fold(0.0, f64::max));
    }
    let s: f64 = pieces.iter().map(|(s, g)| simplex_power_integral(s, g, p)).sum();
    Ok(s.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{shapes::unit_square, triangulate};

    fn square_pieces(f: impl Fn(&[f64]) -> f64) -> Vec<(Simplex, Vec<f64>)> {
        triangulate(&unit_square())
            .unwrap()
            .into_iter()
            .map(|s| {
                let g = s.vertices.iter().map(|v| f(v)).collect();
                (s, g)
            })
            .collect()
    }

    #[test]
    fn constant_gap() {
        let pc = square_pieces(|_| 0.3);
        assert!((lp_size(&pc, 2.0).unwrap() - 0.3).abs() < 1e-14);
        assert!((lp_size(&pc, f64::INFINITY).unwrap() - 0.3).abs() < 1e-14);
        assert!((lp_size(&pc, 2.5).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn linear_gap() {
        let pc = square_pieces(|x| x[0]);
        assert!((lp_size(&pc, 1.0).unwrap() - 0.5).abs() < 1e-14);
        // ∫ x² = 1/3.
        assert!((lp_size(&pc, 2.0).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
        // ∫ x^{1.5} = 0.4.
        assert!((lp_size(&pc, 1.5).unwrap() - 0.4f64.powf(1.0 / 1.5)).abs() < 1e-7);
        assert!(lp_size(&pc, 0.5).is_err());
    }

    #[test]
    fn admissible_pieces_filter() {
        let f = ConvexFn::new(vec![vec![0.0, 0.0], vec![3.0, 0.0]], vec![0.0, -1.0], 1.0).unwrap();
        let e = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(f.admissible_pieces(&e, &[2.0, 2.0]), vec![0]);
        assert_eq!(f.admissible_pieces(&e, &[3.0, 0.0]), vec![0, 1]);
    }
}
