//! Seeded generators for convex test functions, random simple polytopes
//! and points in a polytope. Every draw is a pure function of
//! `(seed, index)`: a ChaCha20 stream keyed by the seed, with the index
//! selecting the stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::brackets::ConvexFn;
use crate::error::{Error, Result};
use crate::geometry::{check_simple, enumerate_faces, Halfspace, Polytope};
use crate::linalg::normalized;
use crate::lp::{Cmp, LinearProgram, LpOutcome};

pub const RETRIES: usize = 100;
pub const GENERATOR: &str = "ChaCha20 (rand_chacha), stream = sample index";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub n_pieces: usize,
    pub slope_scale: f64,
    pub b: f64,
    /// Lipschitz bounds along `basis` (standard basis when absent).
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
    #[serde(default)]
    pub basis: Option<Vec<Vec<f64>>>,
}

impl SamplerConfig {
    pub fn new(seed: u64, n_pieces: usize, slope_scale: f64, b: f64) -> Self {
        SamplerConfig {
            seed,
            n_pieces,
            slope_scale,
            b,
            gamma: None,
            basis: None,
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if self.n_pieces == 0 {
            return Err(Error::Argument("need at least one affine piece".into()));
        }
        if !(self.slope_scale > 0.0) || !(self.b > 0.0) {
            return Err(Error::Argument("slope scale and B must be positive".into()));
        }
        if let Some(g) = &self.gamma {
            if g.len() != d || g.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::Argument(
                    "Γ must be finite, nonnegative and match the dimension".into(),
                ));
            }
        }
        Ok(())
    }
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// `n` uniform points of `p` by rejection from its bounding box.
pub fn sample_points(p: &Polytope, n: usize, seed: u64, stream: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = rng_for(seed, stream);
    let bbox = p.bounding_box().to_vec();
    let mut out = Vec::with_capacity(n);
    let mut tries = 0usize;
    while out.len() < n {
        tries += 1;
        if tries > 1000 * (n + 10) {
            return Err(Error::Sampling("rejection sampling in the bounding box stalled".into()));
        }
        let x: Vec<f64> = bbox
            .iter()
            .map(|(a, b)| if b > a { rng.random_range(*a..*b) } else { *a })
            .collect();
        if p.contains(&x, 0.0) {
            out.push(x);
        }
    }
    Ok(out)
}

/// `(min, max)` of `max_j ⟨g_j, x⟩ + c_j` over `p`.
pub fn range_over(f: &ConvexFn, p: &Polytope) -> Result<(f64, f64)> {
    let d = p.dim();
    let mut lp = LinearProgram::new(d + 1);
    let mut obj = vec![0.0; d];
    obj.push(1.0);
    lp.set_objective(&obj);
    for h in p.halfspaces() {
        let mut n = h.normal.clone();
        n.push(0.0);
        lp.add(n, Cmp::Ge, h.offset);
    }
    for (g, c) in f.slopes.iter().zip(&f.intercepts) {
        let mut n: Vec<f64> = g.iter().map(|v| -v).collect();
        n.push(1.0);
        lp.add(n, Cmp::Ge, *c);
    }
    let lo = match lp.minimize() {
        LpOutcome::Optimal { value, .. } => value,
        _ => return Err(Error::Sampling("minimum of the sampled function is unavailable".into())),
    };
    let hi = p
        .vertices()
        .iter()
        .map(|v| f.raw(&v.point))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

fn gauss(rng: &mut ChaCha20Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Places the range of `f` uniformly at random inside `[−B, B]`, or
/// returns `None` when the oscillation exceeds `2B`.
fn calibrate(mut f: ConvexFn, p: &Polytope, b: f64, rng: &mut ChaCha20Rng) -> Result<Option<ConvexFn>> {
    let (lo, hi) = range_over(&f, p)?;
    let room = 2.0 * b - (hi - lo);
    if room < 0.0 {
        return Ok(None);
    }
    let shift = -b - lo + room * rng.random::<f64>();
    for c in &mut f.intercepts {
        *c += shift;
    }
    // Guard against rounding at the two ends.
    let (lo, hi) = range_over(&f, p)?;
    if lo < -b || hi > b {
        let fix = if lo < -b { -b - lo } else { b - hi };
        for c in &mut f.intercepts {
            *c += fix;
        }
    }
    Ok(Some(f))
}

/// Function number `index` of `C(D, B)`: Gaussian slopes, intercepts
/// shifted so the range lies in `[−B, B]`.
pub fn sample_convex_fn(cfg: &SamplerConfig, domain: &Polytope, index: u64) -> Result<ConvexFn> {
    let d = domain.dim();
    cfg.validate(d)?;
    let mut rng = rng_for(cfg.seed, index);
    for _ in 0..RETRIES {
        let slopes: Vec<Vec<f64>> = (0..cfg.n_pieces)
            .map(|_| (0..d).map(|_| cfg.slope_scale * gauss(&mut rng)).collect())
            .collect();
        let intercepts: Vec<f64> = (0..cfg.n_pieces).map(|_| cfg.slope_scale * gauss(&mut rng)).collect();
        let f = ConvexFn::new(slopes, intercepts, cfg.b)?;
        if let Some(f) = calibrate(f, domain, cfg.b, &mut rng)? {
            return Ok(f);
        }
    }
    Err(Error::Sampling(format!("no admissible function after {RETRIES} draws")))
}

/// Function number `index` of `C(D, B, Γ, v)`: slope coordinates along
/// `v_i` rejection-filtered to `[−Γ_i, Γ_i]`.
pub fn sample_lipschitz_convex(cfg: &SamplerConfig, domain: &Polytope, index: u64) -> Result<ConvexFn> {
    let d = domain.dim();
    cfg.validate(d)?;
    let gamma = cfg
        .gamma
        .clone()
        .ok_or_else(|| Error::Argument("Γ is required".into()))?;
    let basis = cfg
        .basis
        .clone()
        .unwrap_or_else(|| (0..d).map(|i| crate::linalg::unit_vector(d, i)).collect());
    let mut rng = rng_for(cfg.seed, index);
    for _ in 0..RETRIES {
        let mut slopes = Vec::with_capacity(cfg.n_pieces);
        for _ in 0..cfg.n_pieces {
            let mut g = vec![0.0; d];
            for (v, gm) in basis.iter().zip(&gamma) {
                if *gm == 0.0 {
                    continue;
                }
                let y = truncated_gauss(&mut rng, cfg.slope_scale, *gm)?;
                crate::linalg::axpy(&mut g, y, v);
            }
            slopes.push(g);
        }
        let intercepts: Vec<f64> = (0..cfg.n_pieces).map(|_| cfg.slope_scale * gauss(&mut rng)).collect();
        let f = ConvexFn::new(slopes, intercepts, cfg.b)?;
        if let Some(f) = calibrate(f, domain, cfg.b, &mut rng)? {
            return Ok(f);
        }
    }
    Err(Error::Sampling(format!("no admissible function after {RETRIES} draws")))
}

/// `N(0, s²)` conditioned on `|y| ≤ g`. Rejection from the normal when
/// `g ≥ s`, from the uniform on `[−g, g]` otherwise; either accepts at
/// least 60% of proposals.
fn truncated_gauss(rng: &mut ChaCha20Rng, s: f64, g: f64) -> Result<f64> {
    for _ in 0..RETRIES {
        if g >= s {
            let y = s * gauss(rng);
            if y.abs() <= g {
                return Ok(y);
            }
        } else {
            let y = rng.random_range(-g..=g);
            if rng.random::<f64>() <= (-0.5 * (y / s).powi(2)).exp() {
                return Ok(y);
            }
        }
    }
    Err(Error::Sampling("slope filter exhausted its budget".into()))
}

/// Finite-difference scan: `|f(x + h v_i) − f(x)| ≤ (Γ_i + 1e-12) h` at
/// `n` seeded points of `domain`.
pub fn lipschitz_scan(
    f: &ConvexFn,
    domain: &Polytope,
    basis: &[Vec<f64>],
    gamma: &[f64],
    n: usize,
    seed: u64,
) -> Result<bool> {
    let pts = sample_points(domain, n, seed, 0)?;
    let h = 1e-3;
    for x in &pts {
        for (v, g) in basis.iter().zip(gamma) {
            let y: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
            if (f.raw(&y) - f.raw(x)).abs() > (g + 1e-12) * h * (1.0 + 1e-12) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Whether `|f| ≤ B` on `domain` (exact: LP minimum and vertex maximum).
pub fn within_bound(f: &ConvexFn, domain: &Polytope) -> Result<bool> {
    let (lo, hi) = range_over(f, domain)?;
    Ok(lo >= -f.cap && hi <= f.cap)
}

fn irredundant(p: &Polytope) -> Result<Polytope> {
    let keep: Vec<usize> = enumerate_faces(p, 1)?.into_iter().map(|f| f.j_tuple[0]).collect();
    let hs: Vec<Halfspace> = keep.iter().map(|i| p.halfspaces()[*i].clone()).collect();
    Polytope::new(p.dim(), hs)
}

/// Random simple polytope with `n_facets` facets containing the unit ball:
/// unit normals with offsets `−(1 + 0.3U)`. Draws with redundant
/// halfspaces or unbounded intersections are redrawn; non-simple draws
/// get offset jitter of `1e-3`.
pub fn sample_simple_polytope(seed: u64, d: usize, n_facets: usize) -> Result<Polytope> {
    if !(2..=3).contains(&d) || n_facets < d + 1 {
        return Err(Error::Argument(format!(
            "need d ∈ {{2,3}} and at least d+1 facets, got d={d}, n={n_facets}"
        )));
    }
    let mut rng = rng_for(seed, 0);
    for _ in 0..RETRIES {
        let mut hs: Vec<Halfspace> = (0..n_facets)
            .map(|_| {
                let v: Vec<f64> = (0..d).map(|_| gauss(&mut rng)).collect();
                let n = normalized(&v).unwrap_or_else(|| crate::linalg::unit_vector(d, 0));
                Halfspace {
                    normal: n,
                    offset: -(1.0 + 0.3 * rng.random::<f64>()),
                }
            })
            .collect();
        let Ok(p) = Polytope::new(d, hs.clone()) else { continue };
        let Ok(q) = irredundant(&p) else { continue };
        if q.n_facets() != n_facets {
            continue;
        }
        if let Ok(q) = jitter_until_simple(&mut hs, d, &mut rng) {
            return Ok(q);
        }
    }
    Err(Error::Sampling(format!(
        "no simple polytope with {n_facets} facets after {RETRIES} draws"
    )))
}

fn jitter_until_simple(hs: &mut [Halfspace], d: usize, rng: &mut ChaCha20Rng) -> Result<Polytope> {
    for _ in 0..RETRIES {
        let cand = Polytope::new(d, hs.to_vec())?;
        if check_simple(&cand)?.simple {
            return Ok(cand);
        }
        for h in hs.iter_mut() {
            h.offset -= 1e-3 * rng.random::<f64>();
        }
    }
    Err(Error::Sampling("offset jitter did not reach a simple polytope".into()))
}

/// Perturbs the offsets of `p` until it is simple.
pub fn make_simple(p: &Polytope, seed: u64) -> Result<Polytope> {
    let mut rng = rng_for(seed, 0);
    let mut hs = p.halfspaces().to_vec();
    jitter_until_simple(&mut hs, p.dim(), &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes::{square_pyramid, unit_cube, unit_square};

    #[test]
    fn reproducible() {
        let cfg = SamplerConfig::new(7, 4, 1.0, 1.0);
        let d = unit_square();
        let a = sample_convex_fn(&cfg, &d, 3).unwrap();
        let b = sample_convex_fn(&cfg, &d, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_convex_fn(&cfg, &d, 4).unwrap());
    }

    #[test]
    fn samples_in_class() {
        let cfg = SamplerConfig::new(11, 5, 2.0, 1.0);
        let d = unit_square();
        for i in 0..200 {
            let f = sample_convex_fn(&cfg, &d, i).unwrap();
            assert!(within_bound(&f, &d).unwrap());
        }
    }

    #[test]
    fn hinge_is_bounded_by_half() {
        let f = ConvexFn::new(vec![vec![0.0], vec![1.0]], vec![0.0, -0.5], 1.0).unwrap();
        let (lo, hi) = range_over(&f, &unit_cube(1)).unwrap();
        assert_eq!((lo, hi), (0.0, 0.5));
    }

    #[test]
    fn zero_gamma_gives_constants() {
        let mut cfg = SamplerConfig::new(3, 3, 1.0, 1.0);
        cfg.gamma = Some(vec![0.0, 0.0]);
        let f = sample_lipschitz_convex(&cfg, &unit_square(), 0).unwrap();
        assert!(f.slopes.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn hinge_passes_lipschitz_scan() {
        let f = ConvexFn::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![-0.5, 0.5], 1.0).unwrap();
        let e = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(lipschitz_scan(&f, &unit_square(), &e, &[1.0, 1.0], 500, 1).unwrap());
        assert!(!lipschitz_scan(&f, &unit_square(), &e, &[0.5, 1.0], 500, 1).unwrap());
    }

    #[test]
    fn lipschitz_filter() {
        let mut cfg = SamplerConfig::new(5, 4, 2.0, 1.0);
        cfg.gamma = Some(vec![1.0, 0.5]);
        let d = unit_square();
        let e = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        for i in 0..100 {
            let f = sample_lipschitz_convex(&cfg, &d, i).unwrap();
            assert!(lipschitz_scan(&f, &d, &e, &[1.0, 0.5], 50, i).unwrap());
        }
    }

    #[test]
    fn random_polytopes_are_simple_and_contain_ball() {
        for (d, n) in [(2, 5), (3, 6), (3, 8)] {
            let p = sample_simple_polytope(d as u64 * 100 + n as u64, d, n).unwrap();
            assert_eq!(p.n_facets(), n);
            assert!(check_simple(&p).unwrap().simple);
            let mut rng = rng_for(1, 1);
            for _ in 0..100 {
                let v: Vec<f64> = (0..d).map(|_| gauss(&mut rng)).collect();
                let u = normalized(&v).unwrap();
                assert!(p.support(&u).unwrap() >= 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn pyramid_is_perturbed_to_simple() {
        let p = square_pyramid();
        assert!(!check_simple(&p).unwrap().simple);
        let q = make_simple(&p, 9).unwrap();
        assert!(check_simple(&q).unwrap().simple);
        assert_eq!(q.n_facets(), 5);
    }
}
