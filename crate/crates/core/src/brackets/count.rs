use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum CountBound {
    Enumerated(f64),
    NotEnumerated,
}

impl CountBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            CountBound::Enumerated(v) => Some(*v),
            CountBound::NotEnumerated => None,
        }
    }
}

/// Number of integer sequences `z_0..z_{n−1}` in `[zmin, zmax]` with
/// nondecreasing differences (discrete convexity).
///
/// Dynamic programme over (last value, last difference) with prefix sums
/// in the difference, `O(n · Z · 2Z)`.
pub fn convex_profile_count(n: usize, zmin: i64, zmax: i64) -> f64 {
    let z = (zmax - zmin + 1).max(0) as usize;
    if n == 0 || z == 0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if n == 1 {
        return z as f64;
    }
    let nd = 2 * z - 1;
    let off = z - 1;
    // cnt[v * nd + (diff + off)]
    let mut cnt = vec![0.0f64; z * nd];
    for v0 in 0..z {
        for v1 in 0..z {
            let dd = v1 as i64 - v0 as i64 + off as i64;
            cnt[v1 * nd + dd as usize] += 1.0;
        }
    }
    let mut next = vec![0.0f64; z * nd];
    for _ in 2..n {
        // Prefix sums over the difference axis, in place.
        for v in 0..z {
            let row = &mut cnt[v * nd..(v + 1) * nd];
            for i in 1..nd {
                row[i] += row[i - 1];
            }
        }
        next.iter_mut().for_each(|x| *x = 0.0);
        for v1 in 0..z {
            for di in 0..nd {
                let dd = di as i64 - off as i64;
                let v0 = v1 as i64 - dd;
                if v0 < 0 || v0 >= z as i64 {
                    continue;
                }
                next[v1 * nd + di] = cnt[v0 as usize * nd + di];
            }
        }
        std::mem::swap(&mut cnt, &mut next);
    }
    cnt.iter().sum()
}

/// Number of integer profiles on `n` equally spaced nodes that can arise
/// as `⌊f/q⌋` of a convex function with `|f| ≤ B` and node-to-node change
/// at most `step·q`.
///
/// Enumerates sequences obeying the necessary conditions
/// `(k−i) z_j < (k−j) z_i + (j−i) z_k + (k−i)` for `i < j < k`,
/// `|z_{i+1} − z_i| ≤ ⌈step⌉` and `zmin ≤ z ≤ zmax`, so the result
/// bounds the number of canonical keys from above.
pub fn count_bound_1d(n: usize, step: f64, zmin: i64, zmax: i64) -> f64 {
    let s = step.ceil() as i64;
    let mut z = Vec::with_capacity(n);
    let mut total = 0.0;
    fn rec(z: &mut Vec<i64>, n: usize, s: i64, zmin: i64, zmax: i64, total: &mut f64) {
        let k = z.len();
        if k == n {
            *total += 1.0;
            return;
        }
        let (lo, hi) = match z.last() {
            Some(l) => ((l - s).max(zmin), (l + s).min(zmax)),
            None => (zmin, zmax),
        };
        for v in lo..=hi {
            let ok = (0..k).all(|i| {
                (i + 1..k).all(|j| {
                    let (ki, kj, ji) = ((k - i) as i64, (k - j) as i64, (j - i) as i64);
                    ki * z[j] < kj * z[i] + ji * v + ki
                })
            });
            if ok {
                z.push(v);
                rec(z, n, s, zmin, zmax, total);
                z.pop();
            }
        }
    }
    rec(&mut z, n, s, zmin, zmax, &mut total);
    total
}
