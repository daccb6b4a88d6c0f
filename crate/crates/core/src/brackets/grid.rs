use serde::Serialize;

use super::count::{count_bound_1d, CountBound};
use super::Bracket;
use crate::error::{Error, Result};
use crate::linalg::dot;

/// `{x : lo_α ≤ ⟨e_α, x⟩ ≤ hi_α}` for an orthonormal frame `e`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rect {
    pub frame: Vec<Vec<f64>>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Rect {
    pub fn axis_aligned(bounds: &[(f64, f64)]) -> Result<Rect> {
        let d = bounds.len();
        if bounds.iter().any(|(a, b)| !(b >= a)) {
            return Err(Error::Argument("rectangle bounds must satisfy lo ≤ hi".into()));
        }
        let frame = (0..d).map(|i| crate::linalg::unit_vector(d, i)).collect();
        Ok(Rect {
            frame,
            lo: bounds.iter().map(|b| b.0).collect(),
            hi: bounds.iter().map(|b| b.1).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    pub fn coords(&self, x: &[f64]) -> Vec<f64> {
        self.frame.iter().map(|e| dot(e, x)).collect()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }
}

/// Grid-quantized brackets for `Γ`-Lipschitz functions on a rectangle.
#[derive(Debug, Clone, Serialize)]
pub struct LipschitzFamily {
    pub rect: Rect,
    pub b: f64,
    pub gamma: Vec<f64>,
    pub eps: f64,
    pub p: f64,
    /// Grid pitch per axis (infinite on single-node axes).
    pub pitch: Vec<f64>,
    /// Number of grid intervals per axis.
    pub intervals: Vec<usize>,
    pub quantum: f64,
    /// Row-major strides, last axis fastest.
    pub strides: Vec<usize>,
    pub n_nodes: usize,
}

pub fn lipschitz_bracket_family(rect: Rect, b: f64, gamma: &[f64], eps: f64, p: f64) -> Result<LipschitzFamily> {
    let d = rect.dim();
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Argument(format!("eps = {eps} must be positive")));
    }
    if gamma.len() != d || gamma.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
        return Err(Error::Argument(
            "Γ must be finite, nonnegative and match the dimension".into(),
        ));
    }
    let mut pitch = Vec::with_capacity(d);
    let mut intervals = Vec::with_capacity(d);
    for (a, &g) in gamma.iter().enumerate() {
        let len = rect.hi[a] - rect.lo[a];
        if g == 0.0 || len == 0.0 {
            pitch.push(f64::INFINITY);
            intervals.push(0);
            continue;
        }
        let h = eps / (4.0 * g * d as f64);
        let n = ((len / h) * (1.0 - 1e-12)).ceil().max(1.0);
        if n > 1e9 {
            return Err(Error::Argument(format!(
                "grid with {n} intervals on axis {a} is too fine"
            )));
        }
        pitch.push(h);
        intervals.push(n as usize);
    }
    let mut strides = vec![1usize; d];
    let mut total: usize = 1;
    for a in (0..d).rev() {
        strides[a] = total;
        total = total
            .checked_mul(intervals[a] + 1)
            .ok_or_else(|| Error::Argument("grid node count overflows".into()))?;
    }
    Ok(LipschitzFamily {
        rect,
        b,
        gamma: gamma.to_vec(),
        eps,
        p,
        pitch,
        intervals,
        quantum: eps / 4.0,
        strides,
        n_nodes: total,
    })
}

impl LipschitzFamily {
    pub fn dim(&self) -> usize {
        self.rect.dim()
    }

    pub fn half_width(&self) -> f64 {
        self.eps / 2.0
    }

    pub fn multi_index(&self, mut n: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|s| {
                let m = n / s;
                n %= s;
                m
            })
            .collect()
    }

    /// Frame coordinates of a node.
    pub fn node_coords(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(a, i)| {
                if self.intervals[a] == 0 {
                    self.rect.lo[a]
                } else {
                    self.rect.lo[a] + *i as f64 * self.pitch[a]
                }
            })
            .collect()
    }

    pub fn node_point(&self, n: usize) -> Vec<f64> {
        let y = self.node_coords(&self.multi_index(n));
        let mut x = vec![0.0; self.dim()];
        for (c, e) in y.iter().zip(&self.rect.frame) {
            crate::linalg::axpy(&mut x, *c, e);
        }
        x
    }

    pub fn quantize(&self, v: f64) -> i64 {
        (v / self.quantum).floor() as i64
    }

    /// Quantized value of `f` at node `n`.
    pub fn node_key(&self, f: &dyn Fn(&[f64]) -> f64, n: usize) -> i64 {
        self.quantize(f(&self.node_point(n)))
    }

    /// Full canonical bracket of `f`, evaluating every node.
    pub fn canonical_map(&self, f: &dyn Fn(&[f64]) -> f64) -> Result<Bracket> {
        if self.n_nodes > 50_000_000 {
            return Err(Error::Argument(format!(
                "{} nodes is too many to materialize",
                self.n_nodes
            )));
        }
        let key = (0..self.n_nodes).map(|n| self.node_key(f, n)).collect();
        Ok(Bracket {
            key,
            quantum: self.quantum,
            half_width: self.half_width(),
        })
    }

    /// Kuhn simplex containing `x`: node indices with barycentric weights.
    pub fn kuhn_simplex(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let d = self.dim();
        let y = self.rect.coords(x);
        let mut base = vec![0usize; d];
        let mut t = vec![0.0; d];
        for a in 0..d {
            let n = self.intervals[a];
            if n == 0 {
                continue;
            }
            let s = ((y[a] - self.rect.lo[a]) / self.pitch[a]).clamp(0.0, n as f64);
            let b = (s.floor() as usize).min(n - 1);
            base[a] = b;
            t[a] = (s - b as f64).clamp(0.0, 1.0);
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|i, j| t[*j].total_cmp(&t[*i]).then(i.cmp(j)));
        let mut node: usize = base.iter().zip(&self.strides).map(|(b, s)| b * s).sum();
        let mut out = Vec::with_capacity(d + 1);
        let first = if d == 0 { 1.0 } else { 1.0 - t[order[0]] };
        out.push((node, first));
        for m in 0..d {
            let a = order[m];
            if self.intervals[a] > 0 {
                node += self.strides[a];
            }
            let next = if m + 1 < d { t[order[m + 1]] } else { 0.0 };
            out.push((node, t[a] - next));
        }
        out
    }

    /// Interpolated quantized value at `x` given node keys on demand.
    pub fn interpolate(&self, key: &dyn Fn(usize) -> i64, x: &[f64]) -> f64 {
        self.kuhn_simplex(x)
            .iter()
            .map(|(n, w)| w * key(*n) as f64 * self.quantum)
            .sum()
    }

    /// `(lower, upper)` of the canonical bracket of `f` at `x`.
    pub fn bracket_at(&self, f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> (f64, f64) {
        let c = self.interpolate(&|n| self.node_key(f, n), x);
        (c - self.half_width(), c + self.half_width())
    }

    /// `L_p` size over the rectangle (the gap is constant).
    pub fn lp_size(&self) -> f64 {
        if self.p.is_infinite() {
            self.eps
        } else {
            self.eps * self.rect.volume().powf(1.0 / self.p)
        }
    }

    /// Upper bound on the number of distinct canonical brackets of convex
    /// `Γ`-Lipschitz functions bounded by `B`.
    pub fn count_bound(&self) -> CountBound {
        if self.dim() != 1 || self.intervals[0] + 1 > 12 {
            return CountBound::NotEnumerated;
        }
        let n = self.intervals[0] + 1;
        let step = if n == 1 {
            0.0
        } else {
            self.gamma[0] * self.pitch[0] / self.quantum
        };
        CountBound::Enumerated(count_bound_1d(n, step, self.quantize(-self.b), self.quantize(self.b)))
    }
}
