use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::count::CountBound;
use super::grid::{lipschitz_bracket_family, LipschitzFamily, Rect};
use super::{lp_size, ConvexFn};
use crate::error::{Error, Result};
use crate::geometry::triangulate;
use crate::partition::Partition;
use crate::sampler::sample_points;
use crate::schedule::build_schedule;

/// Bracket family attached to one cell.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellFamily {
    /// `[−B, B]`.
    Trivial {
        b: f64,
    },
    Grid(LipschitzFamily),
}

impl CellFamily {
    /// Sup-norm gap `upper − lower`.
    pub fn width(&self) -> f64 {
        match self {
            CellFamily::Trivial { b } => 2.0 * b,
            CellFamily::Grid(f) => f.eps,
        }
    }

    pub fn n_nodes(&self) -> usize {
        match self {
            CellFamily::Trivial { .. } => 0,
            CellFamily::Grid(f) => f.n_nodes,
        }
    }

    pub fn count_bound(&self) -> CountBound {
        match self {
            CellFamily::Trivial { .. } => CountBound::Enumerated(1.0),
            CellFamily::Grid(f) => f.count_bound(),
        }
    }
}

/// Product family over a partition: one bracket per cell.
#[derive(Debug, Clone, Serialize)]
pub struct GlobalFamily {
    pub eps: f64,
    pub p: f64,
    pub b: f64,
    pub families: Vec<CellFamily>,
    #[serde(skip)]
    pub partition: Partition,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyCount {
    pub samples: usize,
    pub distinct: usize,
    /// Product of per-cell enumerated bounds when every cell is enumerable.
    pub enumerated: Option<f64>,
    /// Node evaluations spent separating the keys.
    pub evaluations: u64,
    /// Key class of every sample; equal labels mean equal keys.
    #[serde(skip)]
    pub labels: Vec<u32>,
}

/// Sup-norm bracket width assigned to each cell: `B·ε` on the interior
/// cell, `B·∏ a_{i_β}` on cells away from the boundary, `2B` otherwise.
pub fn cell_widths(part: &Partition, eps: f64, p: f64) -> Result<Vec<f64>> {
    let d = part.dim;
    let scheds = (1..=d)
        .map(|k| build_schedule(eps, p, part.u, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(part
        .cells
        .iter()
        .map(|c| {
            if c.is_trivial() {
                2.0 * part.b
            } else if c.k == 0 {
                part.b * eps
            } else {
                let s = &scheds[c.k - 1];
                part.b * c.i_tuple.iter().map(|i| s.a_weights[*i]).product::<f64>()
            }
        })
        .collect())
}

/// Assembles per-cell families into the global family, auditing that
/// every sampled point of the domain lands in a cell whose family covers it.
pub fn combine_families(part: Partition, families: Vec<CellFamily>, eps: f64, p: f64) -> Result<GlobalFamily> {
    if families.len() != part.cells.len() {
        return Err(Error::Coverage(format!(
            "{} families for {} cells",
            families.len(),
            part.cells.len()
        )));
    }
    let g = GlobalFamily {
        eps,
        p,
        b: part.b,
        families,
        partition: part,
    };
    let pts = sample_points(g.partition.domain(), 2000, 0x5eed, 0)?;
    for x in &pts {
        let Some(c) = g.partition.classify(x) else {
            return Err(Error::Coverage(format!("point {x:?} lies in no cell")));
        };
        if let CellFamily::Grid(f) = &g.families[c] {
            let y = f.rect.coords(x);
            let inside = (0..y.len()).all(|a| y[a] >= f.rect.lo[a] - 1e-9 && y[a] <= f.rect.hi[a] + 1e-9);
            if !inside {
                return Err(Error::Coverage(format!("point {x:?} leaves the rectangle of cell {c}")));
            }
        }
    }
    Ok(g)
}

impl GlobalFamily {
    /// Builds the grid family of every certified cell and the trivial
    /// bracket elsewhere.
    pub fn build(part: Partition, eps: f64, p: f64) -> Result<GlobalFamily> {
        let widths = cell_widths(&part, eps, p)?;
        let families = part
            .cells
            .par_iter()
            .zip(&widths)
            .map(|(c, w)| match &c.lipschitz {
                None => Ok(CellFamily::Trivial { b: part.b }),
                Some(gamma) => {
                    let rect = Rect {
                        frame: c.basis.e.clone(),
                        lo: c.e_bounds.iter().map(|b| b.0).collect(),
                        hi: c.e_bounds.iter().map(|b| b.1).collect(),
                    };
                    Ok(CellFamily::Grid(lipschitz_bracket_family(rect, part.b, gamma, *w, p)?))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        combine_families(part, families, eps, p)
    }

    pub fn widths(&self) -> Vec<f64> {
        self.families.iter().map(|f| f.width()).collect()
    }

    /// `(Σ η_c^p vol(c))^{1/p}` for the constant per-cell gaps.
    pub fn size(&self) -> f64 {
        let cells = &self.partition.cells;
        if self.p.is_infinite() {
            return self.widths().into_iter().fold(0.0, f64::max);
        }
        let s: f64 = self
            .families
            .iter()
            .zip(cells)
            .map(|(f, c)| f.width().powf(self.p) * c.volume)
            .sum();
        s.powf(1.0 / self.p)
    }

    /// The same size by integrating the node gaps over a triangulation of
    /// every cell.
    pub fn size_by_integration(&self) -> Result<f64> {
        let mut pieces = Vec::new();
        for (f, c) in self.families.iter().zip(&self.partition.cells) {
            for s in triangulate(&c.polytope)? {
                let g = vec![f.width(); s.vertices.len()];
                pieces.push((s, g));
            }
        }
        lp_size(&pieces, self.p)
    }

    /// Admissible pieces of `f` per grid cell; errors if a certified cell
    /// admits none.
    fn admissible(&self, f: &ConvexFn) -> Result<Vec<Vec<usize>>> {
        self.families
            .iter()
            .zip(&self.partition.cells)
            .enumerate()
            .map(|(ci, (fam, c))| match fam {
                CellFamily::Trivial { .. } => Ok(Vec::new()),
                CellFamily::Grid(g) => {
                    let a = f.admissible_pieces(&c.basis.e, &g.gamma);
                    if a.is_empty() {
                        Err(Error::Certificate(format!(
                            "no piece satisfies the Lipschitz bound of cell {ci}"
                        )))
                    } else {
                        Ok(a)
                    }
                }
            })
            .collect()
    }

    /// `(lower, upper)` of the canonical bracket of `f` at `x`.
    pub fn bracket_at(&self, f: &ConvexFn, x: &[f64]) -> Result<(f64, f64)> {
        let c = self
            .partition
            .classify(x)
            .ok_or_else(|| Error::Coverage(format!("point {x:?} lies in no cell")))?;
        match &self.families[c] {
            CellFamily::Trivial { b } => Ok((-b, *b)),
            CellFamily::Grid(g) => {
                let a = f.admissible_pieces(&self.partition.cells[c].basis.e, &g.gamma);
                if a.is_empty() {
                    return Err(Error::Certificate(format!(
                        "no piece satisfies the Lipschitz bound of cell {c}"
                    )));
                }
                Ok(g.bracket_at(&|y| f.eval_pieces(&a, y), x))
            }
        }
    }

    /// Whether `lower ≤ f ≤ upper` at every probe point.
    pub fn covers(&self, f: &ConvexFn, probes: &[Vec<f64>]) -> Result<bool> {
        for x in probes {
            let (lo, hi) = self.bracket_at(f, x)?;
            let v = f.eval(x);
            let tol = 1e-12 * (1.0 + v.abs());
            if v < lo - tol || v > hi + tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn enumerated_total(&self) -> Option<f64> {
        self.families.iter().map(|f| f.count_bound().value()).product()
    }

    /// Number of distinct global keys among `fns`.
    ///
    /// Refines groups of samples node by node, visiting the grid nodes of
    /// all cells in a fixed scrambled order and discarding groups that have
    /// become singletons, so only as many nodes are evaluated as needed to
    /// separate the samples.
    pub fn count_keys(&self, fns: &[ConvexFn]) -> Result<KeyCount> {
        let adm = fns.par_iter().map(|f| self.admissible(f)).collect::<Result<Vec<_>>>()?;
        let grid: Vec<usize> = (0..self.families.len())
            .filter(|c| self.families[*c].n_nodes() > 0)
            .collect();
        let mut offsets = Vec::with_capacity(grid.len() + 1);
        let mut total: u128 = 0;
        for c in &grid {
            offsets.push(total);
            total += self.families[*c].n_nodes() as u128;
        }
        let mut evaluations = 0u64;
        // Identical representations share every key.
        let mut first: HashMap<Vec<u64>, u32> = HashMap::new();
        let mut rep_of = Vec::with_capacity(fns.len());
        for (s, f) in fns.iter().enumerate() {
            let bits: Vec<u64> = f
                .slopes
                .iter()
                .flatten()
                .chain(&f.intercepts)
                .chain(std::iter::once(&f.cap))
                .map(|v| v.to_bits())
                .collect();
            rep_of.push(*first.entry(bits).or_insert(s as u32));
        }
        let reps: Vec<u32> = (0..fns.len() as u32).filter(|s| rep_of[*s as usize] == *s).collect();
        let mut label = vec![u32::MAX; fns.len()];
        let mut next_label = 0u32;
        let mut groups: Vec<Vec<u32>> = Vec::new();
        if reps.len() >= 2 {
            groups.push(reps);
        } else if let Some(r) = reps.first() {
            label[*r as usize] = 0;
            next_label = 1;
        }
        let step = scramble_step(total);
        let mut t: u128 = 0;
        while !groups.is_empty() && t < total {
            let idx = (t * step) % total;
            t += 1;
            let slot = offsets.partition_point(|o| *o <= idx) - 1;
            let c = grid[slot];
            let node = (idx - offsets[slot]) as usize;
            let CellFamily::Grid(fam) = &self.families[c] else {
                unreachable!()
            };
            let x = fam.node_point(node);
            evaluations += groups.iter().map(|g| g.len() as u64).sum::<u64>();
            let split: Vec<Vec<Vec<u32>>> = groups
                .par_iter()
                .map(|g| {
                    let mut keyed: Vec<(i64, u32)> = g
                        .iter()
                        .map(|s| (fam.quantize(fns[*s as usize].eval_pieces(&adm[*s as usize][c], &x)), *s))
                        .collect();
                    keyed.sort_unstable();
                    keyed
                        .chunk_by(|a, b| a.0 == b.0)
                        .map(|ch| ch.iter().map(|e| e.1).collect())
                        .collect()
                })
                .collect();
            groups.clear();
            for g in split.into_iter().flatten() {
                if g.len() == 1 {
                    label[g[0] as usize] = next_label;
                    next_label += 1;
                } else {
                    groups.push(g);
                }
            }
        }
        for g in groups {
            for s in g {
                label[s as usize] = next_label;
            }
            next_label += 1;
        }
        for s in 0..fns.len() {
            label[s] = label[rep_of[s] as usize];
        }
        Ok(KeyCount {
            samples: fns.len(),
            distinct: next_label as usize,
            enumerated: self.enumerated_total(),
            evaluations,
            labels: label,
        })
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A stride coprime to `n` near the golden-ratio fraction of `n`.
fn scramble_step(n: u128) -> u128 {
    if n <= 2 {
        return 1;
    }
    let mut s = ((n as f64) * 0.618_033_988_749_894_9) as u128 | 1;
    while gcd(s, n) != 1 {
        s += 2;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::unit_square;
    use crate::partition::build_partition;

    fn square_family(eps: f64, p: f64) -> GlobalFamily {
        let part = build_partition(&unit_square(), eps, p, 1.0, 0.25).unwrap();
        GlobalFamily::build(part, eps, p).unwrap()
    }

    #[test]
    fn scramble_visits_every_index() {
        for n in [1u128, 2, 3, 10, 97, 360] {
            let s = scramble_step(n);
            let mut seen: Vec<u128> = (0..n).map(|t| (t * s) % n).collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn nine_cell_square_size_matches_integration() {
        // δ_1 = ε^p exceeds u, so only the boundary bands and the interior remain.
        let g = square_family(0.5, 1.0);
        assert_eq!(g.partition.cells.len(), 9);
        let a = g.size();
        let b = g.size_by_integration().unwrap();
        assert!((a - b).abs() <= 1e-9 * a, "{a} vs {b}");
    }

    #[test]
    fn zero_function_has_one_key() {
        let g = square_family(0.25, 2.0);
        let f = ConvexFn::new(vec![vec![0.0, 0.0]], vec![0.0], 1.0).unwrap();
        let k = g.count_keys(std::slice::from_ref(&f)).unwrap();
        assert_eq!(k.distinct, 1);
        let k = g.count_keys(&[f.clone(), f.clone()]).unwrap();
        assert_eq!(k.distinct, 1);
        assert_eq!(k.labels, vec![0, 0]);
        let pts = sample_points(g.partition.domain(), 200, 1, 0).unwrap();
        assert!(g.covers(&f, &pts).unwrap());
    }

    #[test]
    fn shifted_constants_separate() {
        let g = square_family(0.25, 2.0);
        let fs: Vec<ConvexFn> = (0..5)
            .map(|i| ConvexFn::new(vec![vec![0.0, 0.0]], vec![-0.5 + 0.25 * i as f64], 1.0).unwrap())
            .collect();
        let mut all = fs.clone();
        all.push(fs[2].clone());
        let k = g.count_keys(&all).unwrap();
        assert_eq!(k.distinct, 5);
        assert_eq!(k.labels[5], k.labels[2]);
        let mut l = k.labels[..5].to_vec();
        l.sort_unstable();
        assert_eq!(l, vec![0, 1, 2, 3, 4]);
    }
}
