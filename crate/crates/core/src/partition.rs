//! Cells `G_{i,j}`: points of `D` whose distances to the facets of the
//! face `G_j` fall in prescribed bands while staying at least `u` away
//! from every other facet.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{check_simple, enumerate_faces, volume, Face, Halfspace, Polytope};
use crate::john::{john_ellipsoid, john_face, Ellipsoid};
use crate::linalg::{dot, factorial, gram_schmidt, norm};
use crate::schedule::{build_schedule, compute_l_constants, level_constants, DeltaSchedule, LConstants};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellBasis {
    pub e: Vec<Vec<f64>>,
    /// `order[α]` is the position in the face tuple whose normal generates `e_α`.
    pub order: Vec<usize>,
}

impl CellBasis {
    pub fn coords(&self, x: &[f64]) -> Vec<f64> {
        self.e.iter().map(|e| dot(e, x)).collect()
    }

    pub fn from_coords(&self, y: &[f64]) -> Vec<f64> {
        let d = self.e.len();
        let mut x = vec![0.0; d];
        for (c, e) in y.iter().zip(&self.e) {
            crate::linalg::axpy(&mut x, *c, e);
        }
        x
    }
}

/// Gram-Schmidt over the active normals taken in `order`, completed by
/// `completion` (the John axes of the face).
pub fn cell_basis(normals: &[Vec<f64>], order: &[usize], completion: &[Vec<f64>]) -> Result<CellBasis> {
    let k = normals.len();
    let ordered: Vec<Vec<f64>> = order.iter().map(|i| normals[*i].clone()).collect();
    let head = gram_schmidt(&ordered, 1e-10);
    if head.len() < k {
        return Err(Error::Degenerate("active normals are dependent".into()));
    }
    let mut all = head;
    all.extend(completion.iter().cloned());
    let e = gram_schmidt(&all, 1e-8);
    let d = normals
        .first()
        .map(|v| v.len())
        .or_else(|| completion.first().map(|v| v.len()))
        .unwrap_or(0);
    if e.len() != d {
        return Err(Error::Degenerate("basis completion is rank deficient".into()));
    }
    Ok(CellBasis {
        e,
        order: order.to_vec(),
    })
}

/// Ordering of the active positions by increasing `δ_{i_α}`, ties by position.
pub fn delta_order(i_tuple: &[usize]) -> Vec<usize> {
    let mut o: Vec<usize> = (0..i_tuple.len()).collect();
    o.sort_by_key(|a| (i_tuple[*a], *a));
    o
}

/// Per-face data shared by all of its cells.
#[derive(Debug, Clone, Serialize)]
pub struct FaceInfo {
    pub face: Face,
    pub constants: Option<LConstants>,
    pub john: Option<Ellipsoid>,
    /// `vol_{d−k}(G_j)`.
    pub volume: f64,
    /// Lateral basis vectors `e_{k+1..d}`.
    pub lateral: Vec<Vec<f64>>,
    /// `ρ_{j,α} = w(G_j, e_α)` for the lateral axes.
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub j_tuple: Vec<usize>,
    pub i_tuple: Vec<usize>,
    pub k: usize,
    pub face_index: usize,
    pub basis: CellBasis,
    /// `Γ` along the basis; `None` when some band index is zero.
    pub lipschitz: Option<Vec<f64>>,
    /// Half-lengths of `R_{i,j}` along the basis.
    pub rect_half: Vec<f64>,
    /// Band widths `δ_{i_α+1} − δ_{i_α}` along `e_1..e_k`.
    pub gaps: Vec<f64>,
    pub volume: f64,
    /// Exact extent of the cell along each basis vector.
    pub e_bounds: Vec<(f64, f64)>,
    #[serde(skip)]
    pub polytope: Polytope,
}

impl Cell {
    pub fn is_trivial(&self) -> bool {
        self.lipschitz.is_none()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.e_bounds.iter().map(|(a, b)| b - a).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Partition {
    pub dim: usize,
    pub b: f64,
    pub u: f64,
    /// Band schedule (its `k`-dependent weights are not used here).
    pub schedule: DeltaSchedule,
    /// `L_{k,1}` per codimension.
    pub l_k1: Vec<f64>,
    pub l_k2: Vec<f64>,
    pub faces: Vec<FaceInfo>,
    pub cells: Vec<Cell>,
    #[serde(skip)]
    index: HashMap<(Vec<usize>, Vec<usize>), usize>,
    #[serde(skip)]
    domain: Polytope,
}

/// `Γ_α = 2B/δ_{i_α}` along `e_1..e_k`, `2B/u` laterally. Fails with
/// no-certificate when a band index is zero.
pub fn lipschitz_certificate(
    sched: &DeltaSchedule,
    i_tuple: &[usize],
    order: &[usize],
    d: usize,
    b: f64,
) -> Result<Vec<f64>> {
    if i_tuple.contains(&0) {
        return Err(Error::NoCertificate(format!(
            "band tuple {i_tuple:?} touches the boundary"
        )));
    }
    let mut g: Vec<f64> = order.iter().map(|a| 2.0 * b / sched.delta[i_tuple[*a]]).collect();
    g.resize(d, 2.0 * b / sched.u);
    Ok(g)
}

/// Half-lengths `α!(δ_{i_α+1} − δ_{i_α})` then `2 L_{k,1} ρ_{j,α}`.
pub fn cell_rectangle(gaps: &[f64], rho: &[f64], l_k1: f64) -> Vec<f64> {
    gaps.iter()
        .enumerate()
        .map(|(a, g)| factorial(a + 1) * g)
        .chain(rho.iter().map(|r| 2.0 * l_k1 * r))
        .collect()
}

fn extent(points: &[Vec<f64>], dir: &[f64]) -> (f64, f64) {
    points
        .iter()
        .map(|p| dot(p, dir))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn face_info(p: &Polytope, face: Face) -> Result<FaceInfo> {
    let d = p.dim();
    let (constants, john) = if face.k == 0 {
        (None, Some(john_ellipsoid(p)?))
    } else if face.k == d {
        (Some(compute_l_constants(p, &face)?), None)
    } else {
        (Some(compute_l_constants(p, &face)?), Some(john_face(p, &face)?))
    };
    let lateral = john.as_ref().map(|e| e.axes.clone()).unwrap_or_default();
    let verts = face.vertices(p);
    let rho = lateral
        .iter()
        .map(|e| {
            let (a, b) = extent(&verts, e);
            b - a
        })
        .collect();
    let vol = if face.k == 0 { volume(p)? } else { face.volume(p)? };
    Ok(FaceInfo {
        face,
        constants,
        john,
        volume: vol,
        lateral,
        rho,
    })
}

fn cell_polytope(p: &Polytope, sched: &DeltaSchedule, j: &[usize], i: &[usize]) -> Option<Polytope> {
    let hs = p.halfspaces();
    let mut out = hs.to_vec();
    for (jj, ii) in j.iter().zip(i) {
        let h = &hs[*jj];
        if *ii > 0 {
            out.push(Halfspace {
                normal: h.normal.clone(),
                offset: h.offset + sched.delta[*ii],
            });
        }
        out.push(Halfspace {
            normal: h.normal.iter().map(|c| -c).collect(),
            offset: -(h.offset + sched.delta[*ii + 1]),
        });
    }
    for (b, h) in hs.iter().enumerate() {
        if !j.contains(&b) {
            out.push(Halfspace {
                normal: h.normal.clone(),
                offset: h.offset + sched.u,
            });
        }
    }
    Polytope::new(p.dim(), out).ok()
}

fn band_tuples(k: usize, a: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() * (a + 1));
        for t in &out {
            for i in 0..=a {
                let mut s = t.clone();
                s.push(i);
                next.push(s);
            }
        }
        out = next;
    }
    out
}

/// Builds every nonempty cell for the given normalized `eps`, exponent `p`,
/// bound `B` and offset `u`.
pub fn build_partition(p: &Polytope, eps: f64, pexp: f64, b: f64, u: f64) -> Result<Partition> {
    let report = check_simple(p)?;
    if !report.simple {
        return Err(Error::Assumption(format!("violating faces {:?}", report.violations)));
    }
    let d = p.dim();
    let sched = build_schedule(eps, pexp, u, 1)?;
    let mut faces = Vec::new();
    for k in 0..=d {
        for f in enumerate_faces(p, k)? {
            faces.push(face_info(p, f)?);
        }
    }
    let consts: Vec<LConstants> = faces.iter().filter_map(|f| f.constants.clone()).collect();
    let (l_k1, l_k2) = level_constants(&consts, d);
    let jobs: Vec<(usize, Vec<usize>)> = faces
        .iter()
        .enumerate()
        .flat_map(|(fi, f)| band_tuples(f.face.k, sched.a_count).into_iter().map(move |t| (fi, t)))
        .collect();
    let built: Vec<Result<Option<Cell>>> = jobs
        .par_iter()
        .map(|(fi, i_tuple)| {
            let info = &faces[*fi];
            let j = &info.face.j_tuple;
            let Some(poly) = cell_polytope(p, &sched, j, i_tuple) else {
                return Ok(None);
            };
            let k = j.len();
            let order = delta_order(i_tuple);
            let normals: Vec<Vec<f64>> = j.iter().map(|x| p.halfspaces()[*x].normal.clone()).collect();
            let basis = cell_basis(&normals, &order, &info.lateral)?;
            let lipschitz = lipschitz_certificate(&sched, i_tuple, &order, d, b).ok();
            let gaps: Vec<f64> = order
                .iter()
                .map(|a| sched.delta[i_tuple[*a] + 1] - sched.delta[i_tuple[*a]])
                .collect();
            let rect_half = cell_rectangle(&gaps, &info.rho, l_k1[k]);
            let verts: Vec<Vec<f64>> = poly.vertices().iter().map(|v| v.point.clone()).collect();
            let e_bounds = basis.e.iter().map(|e| extent(&verts, e)).collect();
            let vol = volume(&poly)?;
            Ok(Some(Cell {
                j_tuple: j.clone(),
                i_tuple: i_tuple.clone(),
                k,
                face_index: *fi,
                basis,
                lipschitz,
                rect_half,
                gaps,
                volume: vol,
                e_bounds,
                polytope: poly,
            }))
        })
        .collect();
    let mut cells = Vec::new();
    for c in built {
        if let Some(c) = c? {
            cells.push(c);
        }
    }
    cells.sort_by(|a, b| (&a.j_tuple, &a.i_tuple).cmp(&(&b.j_tuple, &b.i_tuple)));
    let index = cells
        .iter()
        .enumerate()
        .map(|(n, c)| ((c.j_tuple.clone(), c.i_tuple.clone()), n))
        .collect();
    Ok(Partition {
        dim: d,
        b,
        u,
        schedule: sched,
        l_k1,
        l_k2,
        faces,
        cells,
        index,
        domain: p.clone(),
    })
}

impl Partition {
    pub fn domain(&self) -> &Polytope {
        &self.domain
    }

    /// Cell containing `x` under the half-open band convention.
    pub fn classify(&self, x: &[f64]) -> Option<usize> {
        let mut j = Vec::new();
        let mut i = Vec::new();
        for (n, h) in self.domain.halfspaces().iter().enumerate() {
            let s = h.slack(x);
            if s < 0.0 {
                return None;
            }
            if s < self.u {
                j.push(n);
                i.push(self.schedule.band(s));
            }
        }
        self.index.get(&(j, i)).copied()
    }

    /// Membership predicate of a single cell.
    pub fn in_cell(&self, c: usize, x: &[f64]) -> bool {
        let cell = &self.cells[c];
        let s = &self.schedule;
        for (n, h) in self.domain.halfspaces().iter().enumerate() {
            let v = h.slack(x);
            if v < 0.0 {
                return false;
            }
            match cell.j_tuple.iter().position(|jj| *jj == n) {
                Some(a) => {
                    let i = cell.i_tuple[a];
                    if !(s.delta[i] <= v && v < s.delta[i + 1]) {
                        return false;
                    }
                }
                None => {
                    if v < self.u {
                        return false;
                    }
                }
            }
        }
        true
    }

    pub fn total_volume(&self) -> f64 {
        self.cells.iter().map(|c| c.volume).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParallelotopeWidth {
    pub width: f64,
    pub max_width: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Widths of `{x : 0 ≤ ⟨x, v_i⟩ ≤ d_i}` through the vertex representation
/// `Σ [0, f_β]` with `f_β = d_β f̃_β / ⟨f̃_β, v_β⟩`.
pub fn parallelotope_width(v_list: &[Vec<f64>], d_list: &[f64], direction: &[f64]) -> Result<ParallelotopeWidth> {
    let gens = parallelotope_generators(v_list, d_list)?;
    let width = gens.iter().map(|f| dot(f, direction).abs()).sum();
    let j = gens.len();
    let mut max_width: f64 = 0.0;
    for mask in 0u32..(1 << j) {
        let mut s = vec![0.0; direction.len()];
        for (b, f) in gens.iter().enumerate() {
            let sign = if mask & (1 << b) != 0 { 1.0 } else { -1.0 };
            crate::linalg::axpy(&mut s, sign, f);
        }
        max_width = max_width.max(norm(&s));
    }
    let bound = factorial(j) * d_list.iter().cloned().fold(0.0, f64::max);
    Ok(ParallelotopeWidth {
        width,
        max_width,
        bound,
        holds: max_width <= bound * (1.0 + 1e-12),
    })
}

pub fn parallelotope_generators(v_list: &[Vec<f64>], d_list: &[f64]) -> Result<Vec<Vec<f64>>> {
    let ft = crate::schedule::f_tilde_vectors(v_list)?;
    Ok(ft
        .iter()
        .zip(v_list)
        .zip(d_list)
        .map(|((f, v), dd)| crate::linalg::scale(f, dd / dot(f, v)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `vol_d(G_{i,j}) ≤ (2L_{k,1})^{d−k} vol_{d−k}(G_j) Π gap_α / ⟨f̃_α, v_{j_α}⟩`.
pub fn verify_volume_bound(part: &Partition, c: usize) -> BoundCheck {
    let cell = &part.cells[c];
    let info = &part.faces[cell.face_index];
    let d = part.dim;
    let k = cell.k;
    let s = &part.schedule;
    let mut rhs = (2.0 * part.l_k1[k]).powi((d - k) as i32) * info.volume;
    if let Some(cs) = &info.constants {
        let hs = part.domain.halfspaces();
        for (a, (f, jj)) in cs.f_tilde.iter().zip(&cell.j_tuple).enumerate() {
            let i = cell.i_tuple[a];
            rhs *= (s.delta[i + 1] - s.delta[i]) / dot(f, &hs[*jj].normal);
        }
    }
    BoundCheck {
        lhs: cell.volume,
        rhs,
        holds: cell.volume <= rhs * (1.0 + 1e-3),
    }
}

/// Widths of the cell along `e_α` against `R_{i,j}` (tangential axes: the
/// basis-width bound; lateral axes: `2 L_{k,1} ρ_{j,α}`).
pub fn verify_widths(part: &Partition, c: usize) -> Vec<BoundCheck> {
    let cell = &part.cells[c];
    cell.widths()
        .iter()
        .zip(&cell.rect_half)
        .map(|(w, h)| BoundCheck {
            lhs: *w,
            rhs: *h,
            holds: *w <= h * (1.0 + 1e-9) + 1e-12,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub points: usize,
    /// Points in zero or several cells.
    pub exceptions: usize,
    pub unclassified: usize,
    pub multiple: usize,
    pub cell_volume_sum: f64,
    pub domain_volume: f64,
    pub relative_volume_error: f64,
}

/// Draws `n` seeded uniform points of `D` and counts how many cells each
/// one belongs to.
pub fn audit(part: &Partition, n: usize, seed: u64) -> Result<AuditReport> {
    let d = part.dim;
    let bbox = part.domain.bounding_box().to_vec();
    let chunks = 64usize;
    let per = n.div_ceil(chunks);
    let tallies: Vec<(usize, usize, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let want = per.min(n.saturating_sub(c * per));
            let (mut got, mut none, mut many) = (0, 0, 0);
            let mut x = vec![0.0; d];
            while got < want {
                for (xi, (a, b)) in x.iter_mut().zip(&bbox) {
                    *xi = rng.random_range(*a..*b);
                }
                if !part.domain.contains(&x, 0.0) {
                    continue;
                }
                got += 1;
                let hits = (0..part.cells.len()).filter(|ci| part.in_cell(*ci, &x)).count();
                if hits == 0 {
                    none += 1;
                } else if hits > 1 {
                    many += 1;
                }
            }
            (got, none, many)
        })
        .collect();
    let points = tallies.iter().map(|t| t.0).sum();
    let unclassified = tallies.iter().map(|t| t.1).sum::<usize>();
    let multiple = tallies.iter().map(|t| t.2).sum::<usize>();
    let dv = volume(&part.domain)?;
    let cv = part.total_volume();
    Ok(AuditReport {
        points,
        exceptions: unclassified + multiple,
        unclassified,
        multiple,
        cell_volume_sum: cv,
        domain_volume: dv,
        relative_volume_error: (cv - dv).abs() / dv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::*;

    #[test]
    fn basis_examples() {
        let b = cell_basis(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0, 1], &[]).unwrap();
        assert_eq!(b.e, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let b = cell_basis(&[vec![1.0, 0.0], vec![s, s]], &[0, 1], &[]).unwrap();
        assert!((b.e[1][1] - 1.0).abs() < 1e-12 && b.e[1][0].abs() < 1e-12);
        let b = cell_basis(&[], &[], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(b.e.len(), 2);
    }

    #[test]
    fn certificate_formula() {
        let s = build_schedule(0.1, 1.0, 0.25, 1).unwrap();
        let g = lipschitz_certificate(&s, &[1], &[0], 2, 1.0).unwrap();
        assert!((g[0] - 20.0).abs() < 1e-12);
        assert_eq!(g[1], 8.0);
        assert_eq!(lipschitz_certificate(&s, &[], &[], 2, 1.0).unwrap(), vec![8.0, 8.0]);
        assert!(matches!(
            lipschitz_certificate(&s, &[0], &[0], 2, 1.0),
            Err(Error::NoCertificate(_))
        ));
    }

    #[test]
    fn rectangle_formula() {
        assert_eq!(cell_rectangle(&[0.1, 0.2], &[], 1.0), vec![0.1, 0.4]);
        assert_eq!(cell_rectangle(&[0.1], &[1.0], 1.0), vec![0.1, 2.0]);
    }

    #[test]
    fn parallelotope_examples() {
        let w = parallelotope_width(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert_eq!(w.width, 1.0);
        assert!((w.max_width - 2f64.sqrt()).abs() < 1e-12);
        assert!(w.holds);
        let w = parallelotope_width(&[vec![1.0]], &[1.0], &[1.0]).unwrap();
        assert_eq!((w.width, w.bound), (1.0, 1.0));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let g = parallelotope_generators(&[vec![1.0, 0.0], vec![s, s]], &[1.0, 1.0]).unwrap();
        // f_1 = (1, −1), f_2 = (0, √2).
        assert!((g[0][0] - 1.0).abs() < 1e-12 && (g[0][1] + 1.0).abs() < 1e-12);
        assert!(g[1][0].abs() < 1e-12 && (g[1][1] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn square_partition_volume() {
        let sq = unit_square();
        let part = build_partition(&sq, 0.125, 2.0, 1.0, 0.25).unwrap();
        let a = part.schedule.a_count;
        assert_eq!(part.cells.len(), 1 + 4 * (a + 1) + 4 * (a + 1) * (a + 1));
        assert!((part.total_volume() - 1.0).abs() < 1e-9);
        let x = [0.5, 0.5];
        let c = part.classify(&x).unwrap();
        assert_eq!(part.cells[c].k, 0);
        assert!(part.in_cell(c, &x));
    }

    #[test]
    fn classification_matches_brute_force_grid() {
        let part = build_partition(&unit_square(), 0.125, 2.0, 1.0, 0.25).unwrap();
        for a in 0..200 {
            for b in 0..200 {
                let x = [(a as f64 + 0.5) / 200.0, (b as f64 + 0.5) / 200.0];
                let hits: Vec<usize> = (0..part.cells.len()).filter(|c| part.in_cell(*c, &x)).collect();
                assert_eq!(hits.len(), 1);
                assert_eq!(part.classify(&x), Some(hits[0]));
            }
        }
    }

    #[test]
    fn boundary_cells_are_trivial() {
        let part = build_partition(&unit_triangle(), 0.125, 2.0, 1.0, 0.25).unwrap();
        for c in &part.cells {
            assert_eq!(c.is_trivial(), c.i_tuple.contains(&0));
        }
    }
}
