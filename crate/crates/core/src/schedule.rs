//! Partition constants: the band schedule `δ`, the weights `a`, `ζ`, the
//! boundary offset `u` and the geometric constants `L`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_simple, enumerate_faces, Face, Polytope};
use crate::john::john_face;
use crate::linalg::{combinations, dot, matrix_from_rows, norm, scale};
use crate::lp::{Cmp, LinearProgram, LpOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UMode {
    Theoretical,
    Empirical,
}

impl std::str::FromStr for UMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theoretical" => Ok(UMode::Theoretical),
            "empirical" => Ok(UMode::Empirical),
            _ => Err(Error::Argument(format!("unknown mode {s:?}"))),
        }
    }
}

/// Cap on empirical `u`.
pub const EMPIRICAL_CAP: f64 = 0.25;

/// `ln 2^{−2(p+1)²(p+2)}`.
pub fn ln_u_cap(p: f64) -> f64 {
    -2.0 * (p + 1.0).powi(2) * (p + 2.0) * std::f64::consts::LN_2
}

pub fn u_cap(p: f64) -> f64 {
    (-2.0 * (p + 1.0).powi(2) * (p + 2.0)).exp2()
}

/// `ln δ_i = p ((p+1)/(p+2))^{i−1} ln ε` for `i ≥ 1`.
pub fn ln_delta(eps: f64, p: f64, i: usize) -> f64 {
    p * ((p + 1.0) / (p + 2.0)).powi(i as i32 - 1) * eps.ln()
}

/// `ln a_i = (1/k) ln ε − p (p+1)^{i−2}/(p+2)^{i−1} ln ε` for `i ≥ 1`.
pub fn ln_a(eps: f64, p: f64, k: usize, i: usize) -> f64 {
    let le = eps.ln();
    le / k as f64 - p * (p + 1.0).powi(i as i32 - 2) / (p + 2.0).powi(i as i32 - 1) * le
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaSchedule {
    pub eps: f64,
    pub p: f64,
    pub k: usize,
    pub u: f64,
    pub ln_u: f64,
    #[serde(rename = "A")]
    pub a_count: usize,
    /// `δ_0 … δ_{A+2}` with `δ_0 = 0`, `δ_{A+1} = u`, `δ_{A+2} = ∞`.
    pub delta: Vec<f64>,
    /// `ln δ_1 … ln δ_{A+1}` (index 0 holds `−∞`).
    pub ln_delta: Vec<f64>,
    /// `a_1 … a_A` (index 0 holds `a_0`).
    pub a_weights: Vec<f64>,
    pub ln_a: Vec<f64>,
    /// `ζ_1 … ζ_A` (index 0 unused, `0`).
    pub zeta: Vec<f64>,
    pub ln_zeta: Vec<f64>,
}

impl DeltaSchedule {
    /// Band index `i` with `δ_i ≤ s < δ_{i+1}`; `A + 1` for `s ≥ u`.
    pub fn band(&self, s: f64) -> usize {
        let a = self.a_count;
        if s >= self.u {
            return a + 1;
        }
        // delta[0..=a+1] is increasing; find the last i with delta[i] <= s.
        let idx = self.delta[..=a + 1].partition_point(|d| *d <= s);
        idx.saturating_sub(1).min(a)
    }

    /// `1 + Σ ζ_α²`.
    pub fn a_u(&self) -> f64 {
        1.0 + self.zeta[1..].iter().map(|z| z * z).sum::<f64>()
    }

    pub fn ln_a_u(&self) -> f64 {
        let terms: Vec<f64> = std::iter::once(0.0)
            .chain(self.ln_zeta[1..].iter().map(|l| 2.0 * l))
            .collect();
        log_sum_exp(&terms)
    }

    /// `B_u = Σ ζ_α^d`.
    pub fn b_u(&self, d: usize) -> f64 {
        self.zeta[1..].iter().map(|z| z.powi(d as i32)).sum()
    }
}

pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Builds the schedule for `ε`, `p`, `u` and codimension `k`.
pub fn build_schedule(eps: f64, p: f64, u: f64, k: usize) -> Result<DeltaSchedule> {
    let mut s = build_schedule_ln(eps, p, u.ln(), k)?;
    s.u = u;
    s.delta[s.a_count + 1] = u;
    Ok(s)
}

/// As [`build_schedule`] with `u` given through its logarithm, so that the
/// theoretical cap can be used without underflow.
pub fn build_schedule_ln(eps: f64, p: f64, ln_u: f64, k: usize) -> Result<DeltaSchedule> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Argument(format!("eps = {eps} must lie in (0, 1)")));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Argument(format!("p = {p} must be a finite real ≥ 1")));
    }
    if !(ln_u < 0.0) || !ln_u.is_finite() {
        return Err(Error::Argument("u must lie in (0, 1)".into()));
    }
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    let mut a_count = 0;
    while ln_delta(eps, p, a_count + 1) < ln_u {
        a_count += 1;
    }
    let mut ld = vec![f64::NEG_INFINITY];
    ld.extend((1..=a_count).map(|i| ln_delta(eps, p, i)));
    ld.push(ln_u);
    let mut delta: Vec<f64> = vec![0.0];
    delta.extend((1..=a_count).map(|i| eps.powf(p * ((p + 1.0) / (p + 2.0)).powi(i as i32 - 1))));
    delta.push(ln_u.exp());
    delta.push(f64::INFINITY);
    let le = eps.ln();
    let kf = k as f64;
    // a_0 is chosen so that a_0^p δ_1 = ε^{p/k}.
    let ln_a0 = le / kf - ln_delta(eps, p, 1) / p;
    let mut la = vec![ln_a0];
    la.extend((1..=a_count).map(|i| ln_a(eps, p, k, i)));
    let mut lz = vec![f64::NEG_INFINITY];
    for i in 1..=a_count {
        lz.push(0.5 * (le / kf + ld[i + 1] - ld[i] - la[i]));
    }
    let mut zeta: Vec<f64> = lz.iter().map(|l| l.exp()).collect();
    zeta[0] = 0.0;
    Ok(DeltaSchedule {
        eps,
        p,
        k,
        u: ln_u.exp(),
        ln_u,
        a_count,
        delta,
        ln_delta: ld,
        a_weights: la.iter().map(|l| l.exp()).collect(),
        ln_a: la,
        zeta,
        ln_zeta: lz,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    pub holds: bool,
}

/// `Σ_{α=1}^A ζ_α^γ ≤ 2 u^{γ/(2(p+1)²)}`, evaluated in log space.
pub fn zetasum_check(s: &DeltaSchedule, gamma: f64) -> ZetaCheck {
    let terms: Vec<f64> = s.ln_zeta[1..].iter().map(|l| gamma * l).collect();
    let ln_lhs = log_sum_exp(&terms);
    let ln_rhs = std::f64::consts::LN_2 + gamma / (2.0 * (s.p + 1.0).powi(2)) * s.ln_u;
    let lhs = ln_lhs.exp();
    let rhs = ln_rhs.exp();
    ZetaCheck {
        lhs,
        rhs,
        ln_lhs,
        ln_rhs,
        holds: ln_lhs <= ln_rhs || lhs <= rhs + 1e-12,
    }
}

/// `A_u ≤ 1 + 2 u^{1/(p+1)²}`; returns `(A_u, bound, holds)`.
pub fn a_u_check(s: &DeltaSchedule) -> (f64, f64, bool) {
    let au = s.a_u();
    let bound = 1.0 + 2.0 * (s.ln_u / (s.p + 1.0).powi(2)).exp();
    (au, bound, au <= bound + 1e-12)
}

/// For each active normal, the unit vector in the span of the active
/// normals orthogonal to the others, oriented positively.
pub fn f_tilde_vectors(normals: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let k = normals.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let d = normals[0].len();
    let n = matrix_from_rows(normals, d);
    let gram = &n * n.transpose();
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("active normals are dependent".into()))?;
    let mut out = Vec::with_capacity(k);
    for a in 0..k {
        let col = inv.column(a);
        let mut f = vec![0.0; d];
        for (g, v) in col.iter().zip(normals) {
            crate::linalg::axpy(&mut f, *g, v);
        }
        let nf = norm(&f);
        if nf < 1e-12 {
            return Err(Error::Degenerate("active normals are dependent".into()));
        }
        let mut f = scale(&f, 1.0 / nf);
        if dot(&f, &normals[a]) < 0.0 {
            f.iter_mut().for_each(|c| *c = -*c);
        }
        out.push(f);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LConstants {
    pub j_tuple: Vec<usize>,
    pub k: usize,
    #[serde(rename = "L_k1")]
    pub l_1: f64,
    #[serde(rename = "L_k2")]
    pub l_2: f64,
    #[serde(rename = "L_j3")]
    pub l_3: f64,
    pub f_tilde: Vec<Vec<f64>>,
}

/// Face-level constants. `l_1` and `l_2` are the per-face values; the
/// codimension-level ones are their maxima over faces.
pub fn compute_l_constants(p: &Polytope, face: &Face) -> Result<LConstants> {
    let hs = p.halfspaces();
    let normals: Vec<Vec<f64>> = face.j_tuple.iter().map(|j| hs[*j].normal.clone()).collect();
    let ft = f_tilde_vectors(&normals)?;
    let mut l2 = 1.0f64;
    let mut l1 = 1.0f64;
    let mut any_projection = false;
    for (b, h) in hs.iter().enumerate() {
        if face.j_tuple.contains(&b) {
            continue;
        }
        let s: f64 = ft
            .iter()
            .zip(&normals)
            .map(|(f, v)| dot(f, &h.normal) / dot(f, v))
            .sum();
        l2 = l2.max(s);
        let proj = norm(&face.project_direction(&h.normal));
        if proj > 1e-12 {
            any_projection = true;
            l1 = l1.max(1.0 / proj);
        }
    }
    if face.dim() > 0 && !any_projection {
        return Err(Error::Unbounded(format!(
            "face {:?} has no bounding facet",
            face.j_tuple
        )));
    }
    let l3 = ft
        .iter()
        .zip(&normals)
        .map(|(f, v)| 1.0 / dot(f, v))
        .fold(1.0, f64::max);
    Ok(LConstants {
        j_tuple: face.j_tuple.clone(),
        k: face.k,
        l_1: l1,
        l_2: l2,
        l_3: l3,
        f_tilde: ft,
    })
}

/// Per-codimension maxima of `L_{j,1}` and `L_{j,2}` (index `k`).
pub fn level_constants(consts: &[LConstants], d: usize) -> (Vec<f64>, Vec<f64>) {
    let mut l1 = vec![1.0f64; d + 1];
    let mut l2 = vec![1.0f64; d + 1];
    for c in consts {
        l1[c.k] = l1[c.k].max(c.l_1);
        l2[c.k] = l2[c.k].max(c.l_2);
    }
    (l1, l2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FaceU {
    pub j_tuple: Vec<usize>,
    pub k: usize,
    /// Inradius (empirical) or exit distance from the John centre (theoretical).
    pub distance: f64,
    #[serde(rename = "L_k2")]
    pub l_k2: f64,
    pub term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UReport {
    pub mode: UMode,
    pub u: f64,
    pub ln_u: f64,
    pub cap: f64,
    pub ln_cap: f64,
    pub faces: Vec<FaceU>,
    /// Number of halvings needed to keep facet tuples that are not faces
    /// from meeting inside the `u`-band.
    pub halvings: usize,
}

/// Exit distance from `x` to the relative boundary of `face`, minimized
/// over directions in its linear hull.
fn exit_distance(p: &Polytope, face: &Face, x: &[f64]) -> f64 {
    p.halfspaces()
        .iter()
        .enumerate()
        .filter(|(b, _)| !face.j_tuple.contains(b))
        .filter_map(|(_, h)| {
            let proj = norm(&face.project_direction(&h.normal));
            (proj > 1e-12).then(|| h.slack(x) / proj)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest achievable value of `max_{β∈tuple} slack_β` over `D`.
fn tuple_depth(p: &Polytope, tuple: &[usize]) -> f64 {
    let d = p.dim();
    let mut lp = LinearProgram::new(d + 1);
    for h in p.halfspaces() {
        let mut a = h.normal.clone();
        a.push(0.0);
        lp.add(a, Cmp::Ge, h.offset);
    }
    for j in tuple {
        let h = &p.halfspaces()[*j];
        let mut a = scale(&h.normal, -1.0);
        a.push(1.0);
        lp.add(a, Cmp::Ge, -h.offset);
    }
    let mut obj = vec![0.0; d + 1];
    obj[d] = 1.0;
    lp.set_objective(&obj);
    match lp.minimize() {
        LpOutcome::Optimal { value, .. } => value,
        _ => f64::INFINITY,
    }
}

/// Boundary offset `u`.
pub fn compute_u(p: &Polytope, pexp: f64, mode: UMode) -> Result<UReport> {
    let report = check_simple(p)?;
    if !report.simple {
        return Err(Error::Assumption(format!("violating faces {:?}", report.violations)));
    }
    let d = p.dim();
    let mut faces_by_k: Vec<Vec<Face>> = Vec::new();
    let mut consts = Vec::new();
    for k in 0..=d {
        let fs = enumerate_faces(p, k)?;
        for f in &fs {
            if k >= 1 {
                consts.push(compute_l_constants(p, f)?);
            }
        }
        faces_by_k.push(fs);
    }
    let (_, l2) = level_constants(&consts, d);
    let mut rows = Vec::new();
    for k in 1..d {
        for f in &faces_by_k[k] {
            let distance = match mode {
                UMode::Empirical => f.inradius,
                UMode::Theoretical => {
                    let e = john_face(p, f)?;
                    exit_distance(p, f, &e.center)
                }
            };
            rows.push(FaceU {
                j_tuple: f.j_tuple.clone(),
                k,
                distance,
                l_k2: l2[k],
                term: distance / l2[k],
            });
        }
    }
    let min_term = rows.iter().map(|r| r.term).fold(f64::INFINITY, f64::min);
    let (ln_cap, cap) = match mode {
        UMode::Theoretical => (ln_u_cap(pexp), u_cap(pexp)),
        UMode::Empirical => (EMPIRICAL_CAP.ln(), EMPIRICAL_CAP),
    };
    let mut ln_u = ln_cap.min(min_term.ln());
    let face_tuples: Vec<Vec<usize>> = faces_by_k.iter().flatten().map(|f| f.j_tuple.clone()).collect();
    let mut depths = Vec::new();
    for s in 2..=(d + 1).min(p.n_facets()) {
        for t in combinations(p.n_facets(), s) {
            if !face_tuples.contains(&t) {
                depths.push(tuple_depth(p, &t));
            }
        }
    }
    let min_depth = depths.iter().cloned().fold(f64::INFINITY, f64::min);
    let from_cap = ln_u == ln_cap;
    let mut u = if from_cap { cap } else { ln_u.exp() };
    let mut halvings = 0;
    while u > min_depth {
        u *= 0.5;
        ln_u -= std::f64::consts::LN_2;
        halvings += 1;
    }
    Ok(UReport {
        mode,
        u,
        ln_u,
        cap,
        ln_cap,
        faces: rows,
        halvings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::*;

    #[test]
    fn theoretical_u_never_exceeds_cap() {
        let r = compute_u(&unit_triangle(), 1.0, UMode::Theoretical).unwrap();
        assert_eq!(r.u, 2f64.powi(-24));
        assert!(r.u <= r.cap);
    }

    #[test]
    fn delta_closed_form() {
        let s = build_schedule(0.1, 1.0, 0.3, 1).unwrap();
        assert_eq!(s.a_count, 2);
        assert!((s.delta[1] - 0.1).abs() < 1e-15);
        assert!((s.delta[2] - 0.1f64.powf(2.0 / 3.0)).abs() < 1e-15);
        assert_eq!(s.delta[3], 0.3);
        assert_eq!(s.delta[4], f64::INFINITY);
        assert!((ln_delta(0.1, 1.0, 3).exp() - 0.1f64.powf(4.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn a_weights_and_zeta() {
        let eps: f64 = 0.1;
        let s = build_schedule(eps, 1.0, 0.3, 1).unwrap();
        // a_1 = ε · ε^{−1/2}, a_2 = ε · ε^{−1/3}.
        assert!((s.a_weights[1] - eps.powf(0.5)).abs() < 1e-14);
        assert!((s.a_weights[2] - eps.powf(2.0 / 3.0)).abs() < 1e-14);
        for i in 1..=s.a_count {
            let z = (eps * s.delta[i + 1] / (s.delta[i] * s.a_weights[i])).sqrt();
            assert!((s.zeta[i] - z).abs() < 1e-13);
        }
    }

    #[test]
    fn empty_schedule() {
        let s = build_schedule(0.5, 1.0, 0.25, 1).unwrap();
        assert_eq!(s.a_count, 0);
        let c = zetasum_check(&s, 2.0);
        assert_eq!(c.lhs, 0.0);
        assert!(c.holds);
    }

    #[test]
    fn rejects_bad_eps() {
        assert!(build_schedule(1.0, 1.0, 0.25, 1).is_err());
        assert!(build_schedule(0.1, 0.5, 0.25, 1).is_err());
    }

    #[test]
    fn caps() {
        assert!((u_cap(1.0) - 2f64.powi(-24)).abs() < 1e-22);
        assert_eq!(u_cap(2.0), 2f64.powi(-72));
    }

    #[test]
    fn zetasum_at_cap() {
        let s = build_schedule_ln(1e-3, 1.0, ln_u_cap(1.0), 2).unwrap();
        assert!(zetasum_check(&s, 2.0).holds);
        assert!(a_u_check(&s).2);
    }

    #[test]
    fn band_lookup() {
        let s = build_schedule(0.1, 1.0, 0.3, 1).unwrap();
        assert_eq!(s.band(0.0), 0);
        assert_eq!(s.band(0.1), 1);
        assert_eq!(s.band(0.25), 2);
        assert_eq!(s.band(0.3), 3);
    }

    #[test]
    fn f_tilde_examples() {
        let f = f_tilde_vectors(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(f, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let f = f_tilde_vectors(&[vec![1.0, 0.0], vec![-s, s]]).unwrap();
        assert!((f[0][0] - s).abs() < 1e-12 && (f[0][1] - s).abs() < 1e-12);
        assert!(f[1][0].abs() < 1e-12 && (f[1][1] - 1.0).abs() < 1e-12);
        assert!(f_tilde_vectors(&[vec![1.0, 0.0], vec![2.0, 0.0]]).is_err());
    }

    #[test]
    fn square_constants() {
        let sq = unit_square();
        for f in enumerate_faces(&sq, 1).unwrap() {
            let c = compute_l_constants(&sq, &f).unwrap();
            assert_eq!((c.l_1, c.l_2, c.l_3), (1.0, 1.0, 1.0));
        }
        for f in enumerate_faces(&sq, 2).unwrap() {
            assert_eq!(compute_l_constants(&sq, &f).unwrap().l_3, 1.0);
        }
    }

    #[test]
    fn triangle_corner_l2() {
        let tri = unit_triangle();
        let corner = enumerate_faces(&tri, 2)
            .unwrap()
            .into_iter()
            .find(|f| f.j_tuple == vec![0, 1])
            .unwrap();
        assert_eq!(compute_l_constants(&tri, &corner).unwrap().l_2, 1.0);
    }

    #[test]
    fn u_values() {
        let r = compute_u(&unit_square(), 2.0, UMode::Empirical).unwrap();
        assert_eq!(r.u, 0.25);
        assert_eq!(r.halvings, 0);
        let r = compute_u(&unit_triangle(), 1.0, UMode::Theoretical).unwrap();
        assert!((r.u - 2f64.powi(-24)).abs() < 1e-20);
        assert!(compute_u(&square_pyramid(), 1.0, UMode::Empirical).is_err());
    }
}
