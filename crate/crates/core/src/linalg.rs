//! Small dense vector helpers. Points and directions are plain `[f64]`
//! slices; `nalgebra` is used for solves and decompositions.

use nalgebra::{DMatrix, DVector};

pub const TOL: f64 = 1e-9;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    if n <= 1e-300 || !n.is_finite() {
        None
    } else {
        Some(scale(a, 1.0 / n))
    }
}

/// Flips `v` so that its first coordinate with magnitude above `1e-12` is positive.
pub fn canonical_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

pub fn unit_vector(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

/// Orthonormalizes `vectors` in order (modified Gram-Schmidt, two passes),
/// dropping those whose residual falls below `drop_tol`.
pub fn gram_schmidt(vectors: &[Vec<f64>], drop_tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = dot(&w, q);
                axpy(&mut w, -c, q);
            }
        }
        let n = norm(&w);
        if n > drop_tol {
            out.push(scale(&w, 1.0 / n));
        }
    }
    out
}

/// Orthonormal basis of the orthogonal complement of `span(rows)` in R^d.
///
/// Built by projecting the standard basis onto the complement and
/// orthonormalizing in coordinate order, so the result does not depend on
/// the ordering of `rows`. Each vector gets the canonical sign.
pub fn complement_basis(rows: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    let span = gram_schmidt(rows, 1e-10);
    let target = d - span.len();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        if basis.len() == target {
            break;
        }
        let mut w = unit_vector(d, i);
        for _ in 0..2 {
            for q in span.iter().chain(basis.iter()) {
                let c = dot(&w, q);
                axpy(&mut w, -c, q);
            }
        }
        let n = norm(&w);
        if n > 1e-8 {
            let mut w = scale(&w, 1.0 / n);
            canonical_sign(&mut w);
            basis.push(w);
        }
    }
    basis
}

pub fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Numerical rank via singular values relative to the largest one.
pub fn rank(rows: &[Vec<f64>], ncols: usize, rel_tol: f64) -> usize {
    if rows.is_empty() || ncols == 0 {
        return 0;
    }
    let m = matrix_from_rows(rows, ncols);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax <= 1e-300 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * smax.max(1.0)).count()
}

/// Solves the square system `rows * x = rhs`; `None` when singular.
pub fn solve_square(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let m = matrix_from_rows(rows, n);
    let b = DVector::from_column_slice(rhs);
    let lu = m.lu();
    let x = lu.solve(&b)?;
    if x.iter().all(|v| v.is_finite()) {
        Some(x.as_slice().to_vec())
    } else {
        None
    }
}

/// Minimum-norm solution of the underdetermined system `rows * x = rhs`
/// (rows assumed linearly independent).
pub fn min_norm_solution(rows: &[Vec<f64>], rhs: &[f64], d: usize) -> Option<Vec<f64>> {
    let k = rows.len();
    if k == 0 {
        return Some(vec![0.0; d]);
    }
    let gram: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| dot(&rows[i], &rows[j])).collect())
        .collect();
    let y = solve_square(&gram, rhs)?;
    let mut x = vec![0.0; d];
    for (yi, r) in y.iter().zip(rows) {
        axpy(&mut x, *yi, r);
    }
    Some(x)
}

pub fn determinant(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    if n == 0 {
        return 1.0;
    }
    matrix_from_rows(rows, n).determinant()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// All strictly increasing `k`-tuples drawn from `0..n`, in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 && idx[0] == n - k {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Lexicographic comparison with tolerance-free total order on coordinates.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_count_and_order() {
        let c = combinations(5, 2);
        assert_eq!(c.len(), 10);
        assert_eq!(c[0], vec![0, 1]);
        assert_eq!(c[9], vec![3, 4]);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert!(combinations(2, 3).is_empty());
    }

    #[test]
    fn complement_of_axis() {
        let b = complement_basis(&[vec![1.0, 0.0, 0.0]], 3);
        assert_eq!(b.len(), 2);
        assert!((b[0][1] - 1.0).abs() < 1e-12);
        assert!((b[1][2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gram_schmidt_drops_dependent() {
        let q = gram_schmidt(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![0.0, 1.0]], 1e-10);
        assert_eq!(q.len(), 2);
        assert!(dot(&q[0], &q[1]).abs() < 1e-12);
    }

    #[test]
    fn min_norm_solution_on_plane() {
        let x = min_norm_solution(&[vec![1.0, 1.0]], &[2.0], 2).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
