//! Empirical bracketing counts over an ε sweep and the log-log slope fit.
//!
//! Distinct canonical keys among sampled functions bound the number of
//! brackets needed from below; exact enumeration bounds it from above on
//! grids small enough to enumerate.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brackets::{convex_profile_count, size_certificate, theoretical_count, ConvexFn, GlobalFamily, KeyCount};
use crate::error::{Error, Result};
use crate::geometry::Polytope;
use crate::partition::build_partition;
use crate::sampler::{rng_for, sample_convex_fn, sample_points, SamplerConfig, GENERATOR};
use crate::schedule::{compute_u, UMode};

/// Distinct keys and coverage for one family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalCount {
    pub samples: usize,
    pub distinct_keys: usize,
    pub enumerated_total: Option<f64>,
    pub coverage: f64,
    #[serde(skip)]
    pub labels: Vec<u32>,
}

/// Samples `n` functions of `C(D, B)` and counts their distinct keys,
/// checking each against its bracket at `probes` seeded points.
pub fn count_family(family: &GlobalFamily, sampler: &SamplerConfig, n: usize, probes: usize) -> Result<EmpiricalCount> {
    let domain = family.partition.domain();
    let fns: Vec<ConvexFn> = (0..n as u64)
        .into_par_iter()
        .map(|i| sample_convex_fn(sampler, domain, i))
        .collect::<Result<_>>()?;
    let pts = sample_points(domain, probes, sampler.seed ^ 0x9e37_79b9_7f4a_7c15, 0)?;
    let covered = fns
        .par_iter()
        .map(|f| family.covers(f, &pts).map(usize::from))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    let coverage = if n == 0 { 1.0 } else { covered as f64 / n as f64 };
    if covered < n {
        return Err(Error::Construction(format!(
            "{} of {n} sampled functions escape their brackets",
            n - covered
        )));
    }
    let KeyCount {
        distinct,
        enumerated,
        labels,
        ..
    } = family.count_keys(&fns)?;
    Ok(EmpiricalCount {
        samples: n,
        distinct_keys: distinct,
        enumerated_total: enumerated,
        coverage,
        labels,
    })
}

/// Builds the global family for `(D, B, p, ε, u)` and counts keys of `n`
/// functions drawn with `seed`.
pub fn empirical_count(
    p: &Polytope,
    b: f64,
    pexp: f64,
    eps: f64,
    u: f64,
    n: usize,
    seed: u64,
) -> Result<EmpiricalCount> {
    let part = build_partition(p, eps, pexp, b, u)?;
    let fam = GlobalFamily::build(part, eps, pexp)?;
    count_family(&fam, &SamplerConfig::new(seed, 5, 1.0, b), n, 64)
}

/// Exact number of convex quantized profiles on `[0,1]` at pitch and
/// quantum `ε/4` with values in `[−B, B]`.
pub fn dp_count(eps: f64, b: f64) -> f64 {
    let q = eps / 4.0;
    let n = (1.0 / q).round() as usize + 1;
    let zmin = (-b / q).floor() as i64;
    let zmax = (b / q).floor() as i64;
    convex_profile_count(n, zmin, zmax)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    /// Bootstrap percentile interval (2.5 %, 97.5 %) when batches exist.
    pub ci: Option<(f64, f64)>,
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Least squares of `log log N` on `log(1/ε)`.
pub fn fit_slope(eps: &[f64], counts: &[f64]) -> Result<SlopeFit> {
    if eps.len() != counts.len() || eps.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "need at least 4 (ε, N) pairs, got {}",
            eps.len().min(counts.len())
        )));
    }
    if let Some(c) = counts.iter().find(|c| !(**c >= 2.0)) {
        return Err(Error::InsufficientData(format!("count {c} is below 2")));
    }
    let x: Vec<f64> = eps.iter().map(|e| (1.0 / e).ln()).collect();
    let y: Vec<f64> = counts.iter().map(|c| c.ln().ln()).collect();
    let (slope, intercept, residual) = least_squares(&x, &y);
    Ok(SlopeFit {
        slope,
        intercept,
        residual,
        ci: None,
    })
}

/// Slope fit with a bootstrap over batches of sampled functions: each
/// resample draws batches with replacement and recounts distinct labels.
pub fn fit_slope_bootstrap(
    eps: &[f64],
    labels: &[Vec<u32>],
    batches: usize,
    resamples: usize,
    seed: u64,
) -> Result<SlopeFit> {
    let counts: Vec<f64> = labels.iter().map(|l| distinct(l.iter()) as f64).collect();
    let mut fit = fit_slope(eps, &counts)?;
    let n = labels.first().map(|l| l.len()).unwrap_or(0);
    if batches < 2 || n < batches {
        return Ok(fit);
    }
    let size = n / batches;
    let mut slopes: Vec<f64> = (0..resamples)
        .into_par_iter()
        .filter_map(|r| {
            let mut rng = rng_for(seed, r as u64);
            let pick: Vec<usize> = (0..batches).map(|_| rng.random_range(0..batches)).collect();
            let mut used = pick.clone();
            used.sort_unstable();
            used.dedup();
            let c: Vec<f64> = labels
                .iter()
                .map(|l| distinct(used.iter().flat_map(|b| l[b * size..(b + 1) * size].iter())) as f64)
                .collect();
            fit_slope(eps, &c).ok().map(|f| f.slope)
        })
        .collect();
    if !slopes.is_empty() {
        slopes.sort_by(f64::total_cmp);
        let q = |t: f64| slopes[((slopes.len() - 1) as f64 * t).round() as usize];
        fit.ci = Some((q(0.025), q(0.975)));
    }
    Ok(fit)
}

fn distinct<'a>(it: impl Iterator<Item = &'a u32>) -> usize {
    let mut v: Vec<u32> = it.copied().collect();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Geometric sweep from `eps_max` down to `eps_min`.
pub fn eps_sweep(eps_min: f64, eps_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(eps_min > 0.0 && eps_min < eps_max && eps_max < 1.0) || steps < 2 {
        return Err(Error::Argument(format!(
            "invalid sweep [{eps_min}, {eps_max}] with {steps} steps"
        )));
    }
    let r = (eps_min / eps_max).ln() / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i == 0 {
                eps_max
            } else if i == steps - 1 {
                eps_min
            } else {
                eps_max * (r * i as f64).exp()
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub b: f64,
    pub p: f64,
    pub eps: Vec<f64>,
    pub mode: UMode,
    pub seed: u64,
    pub n_samples: usize,
    pub n_pieces: usize,
    pub slope_scale: f64,
    pub probes: usize,
    pub batches: usize,
    pub resamples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            b: 1.0,
            p: 2.0,
            eps: vec![0.25, 0.125, 0.0625, 0.03125],
            mode: UMode::Empirical,
            seed: 1,
            n_samples: 1000,
            n_pieces: 5,
            slope_scale: 1.0,
            probes: 64,
            batches: 20,
            resamples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyRow {
    pub eps: f64,
    pub cells: usize,
    pub nodes: u128,
    /// Lower bound on the bracketing number; absent in theoretical mode.
    pub distinct_keys: Option<usize>,
    pub enumerated_total: Option<f64>,
    pub coverage: Option<f64>,
    pub size: f64,
    pub size_bound: f64,
    pub theoretical_log_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub config: ExperimentConfig,
    pub u: f64,
    pub rows: Vec<EntropyRow>,
    /// Fit of the distinct-key counts (empirical mode) or of the
    /// theoretical log-count bound (theoretical mode).
    pub fit: Option<SlopeFit>,
    pub fit_error: Option<String>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub eps: f64,
    pub wall_ms: f64,
}

/// Full pipeline: `u`, partition, families, counts and fit per `ε`.
pub fn run_experiment(domain: &Polytope, cfg: &ExperimentConfig) -> Result<(EntropyReport, Vec<Timing>)> {
    if cfg.eps.len() < 2 {
        return Err(Error::Argument("need at least two ε values".into()));
    }
    let stage = |s: &'static str| move |e: Error| Error::Construction(format!("{s}: {e}"));
    let ur = compute_u(domain, cfg.p, cfg.mode).map_err(stage("offset u"))?;
    let sampler = SamplerConfig::new(cfg.seed, cfg.n_pieces, cfg.slope_scale, cfg.b);
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let mut labels = Vec::new();
    for &eps in &cfg.eps {
        let t0 = Instant::now();
        let part = build_partition(domain, eps, cfg.p, cfg.b, ur.u).map_err(stage("partition"))?;
        let theory = theoretical_count(&part, eps, cfg.p).map_err(stage("theoretical count"))?;
        let cells = part.cells.len();
        let (size, nodes, count) = match cfg.mode {
            UMode::Empirical => {
                let fam = GlobalFamily::build(part.clone(), eps, cfg.p).map_err(stage("families"))?;
                let nodes = fam.families.iter().map(|f| f.n_nodes() as u128).sum();
                let c = count_family(&fam, &sampler, cfg.n_samples, cfg.probes).map_err(stage("counting"))?;
                (fam.size_by_integration().map_err(stage("size"))?, nodes, Some(c))
            }
            UMode::Theoretical => (f64::NAN, 0, None),
        };
        let cert = size_certificate(&part, eps, cfg.p, if size.is_nan() { 0.0 } else { size })
            .map_err(stage("size certificate"))?;
        rows.push(EntropyRow {
            eps,
            cells,
            nodes,
            distinct_keys: count.as_ref().map(|c| c.distinct_keys),
            enumerated_total: count.as_ref().and_then(|c| c.enumerated_total),
            coverage: count.as_ref().map(|c| c.coverage),
            size,
            size_bound: cert.formula,
            theoretical_log_count: theory.total,
        });
        if let Some(c) = count {
            labels.push(c.labels);
        }
        timings.push(Timing {
            eps,
            wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        });
    }
    let fit = match cfg.mode {
        UMode::Empirical => fit_slope_bootstrap(&cfg.eps, &labels, cfg.batches, cfg.resamples, cfg.seed),
        UMode::Theoretical => {
            let c: Vec<f64> = rows.iter().map(|r| r.theoretical_log_count.exp()).collect();
            fit_slope(&cfg.eps, &c)
        }
    };
    let (fit, fit_error) = match fit {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let note = match cfg.mode {
        UMode::Empirical => "distinct_keys counts distinct canonical brackets hit by the samples and is a lower bound on the size of the constructed family".into(),
        UMode::Theoretical => "theoretical mode reports the proof's log-count bound only; its offset u makes the grids too fine to materialize".into(),
    };
    Ok((
        EntropyReport {
            config: cfg.clone(),
            u: ur.u,
            rows,
            fit,
            fit_error,
            note,
        },
        timings,
    ))
}

/// 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

/// `eps,distinct_keys,enumerated_total,coverage`.
pub fn report_csv(r: &EntropyReport) -> String {
    let mut s = String::from("eps,distinct_keys,enumerated_total,coverage\n");
    for row in &r.rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_num(row.eps),
            row.distinct_keys.map(|k| k.to_string()).unwrap_or_default(),
            opt_num(row.enumerated_total),
            opt_num(row.coverage)
        );
    }
    s
}

/// `log_inv_eps,log_log_count,fitted` for external plotting.
pub fn plot_csv(r: &EntropyReport) -> String {
    let mut s = String::from("log_inv_eps,log_log_count,fitted\n");
    for row in &r.rows {
        let x = (1.0 / row.eps).ln();
        let y = match row.distinct_keys {
            Some(k) => (k as f64).ln().ln(),
            None => row.theoretical_log_count.ln(),
        };
        let f = r.fit.as_ref().map(|f| f.intercept + f.slope * x);
        let _ = writeln!(s, "{},{},{}", fmt_num(x), fmt_num(y), opt_num(f));
    }
    s
}

pub fn timing_csv(t: &[Timing]) -> String {
    let mut s = String::from("eps,wall_ms\n");
    for r in t {
        let _ = writeln!(s, "{},{}", fmt_num(r.eps), fmt_num(r.wall_ms));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleManifest<'a> {
    pub generator: &'static str,
    pub seed: u64,
    pub n_pieces: usize,
    pub slope_scale: f64,
    pub b: f64,
    pub samples_per_eps: usize,
    pub eps_count: usize,
    pub config: &'a ExperimentConfig,
}

/// Writes `report.json`, `report.csv`, `plot.csv` and `manifest.json`,
/// which depend only on the configuration, and `timing.csv` separately.
pub fn write_outputs(dir: &Path, r: &EntropyReport, timings: &[Timing]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), crate::json_17(r)?)?;
    std::fs::write(dir.join("report.csv"), report_csv(r))?;
    std::fs::write(dir.join("plot.csv"), plot_csv(r))?;
    let m = SampleManifest {
        generator: GENERATOR,
        seed: r.config.seed,
        n_pieces: r.config.n_pieces,
        slope_scale: r.config.slope_scale,
        b: r.config.b,
        samples_per_eps: r.config.n_samples,
        eps_count: r.config.eps.len(),
        config: &r.config,
    };
    std::fs::write(dir.join("manifest.json"), crate::json_17(&m)?)?;
    std::fs::write(dir.join("timing.csv"), timing_csv(timings))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_half_slope() {
        let eps = [0.25, 0.125, 0.0625, 0.03125, 0.015625];
        let c: Vec<f64> = eps.iter().map(|e: &f64| (3.0 * e.powf(-0.5)).exp()).collect();
        let f = fit_slope(&eps, &c).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-6);
        let c: Vec<f64> = eps.iter().map(|e: &f64| (0.7 / e).exp()).collect();
        assert!((fit_slope(&eps, &c).unwrap().slope - 1.0).abs() < 1e-9);
    }

    #[test]
    fn small_counts_rejected() {
        let eps = [0.5, 0.25, 0.125, 0.0625];
        assert!(fit_slope(&eps, &[1.0, 4.0, 8.0, 16.0]).is_err());
        assert!(fit_slope(&eps[..3], &[4.0, 8.0, 16.0]).is_err());
    }

    #[test]
    fn sweep_is_geometric() {
        let s = eps_sweep(0.03125, 0.25, 4).unwrap();
        assert_eq!(s, vec![0.25, 0.125, 0.0625, 0.03125]);
        assert!(eps_sweep(0.5, 0.25, 4).is_err());
    }

    #[test]
    fn dp_count_small_grid() {
        // ε = 2: q = 1/2, nodes {0, 1/2, 1}, values in [−2, 2].
        assert_eq!(dp_count(2.0, 1.0), convex_profile_count(3, -2, 2));
    }

    #[test]
    fn zero_function_single_key() {
        use crate::geometry::shapes::unit_square;
        let part = build_partition(&unit_square(), 0.25, 2.0, 1.0, 0.25).unwrap();
        let fam = GlobalFamily::build(part, 0.25, 2.0).unwrap();
        let f = ConvexFn::new(vec![vec![0.0, 0.0]], vec![0.0], 1.0).unwrap();
        let k = fam.count_keys(std::slice::from_ref(&f)).unwrap();
        assert_eq!(k.distinct, 1);
        let pts = sample_points(fam.partition.domain(), 100, 3, 0).unwrap();
        assert!(fam.covers(&f, &pts).unwrap());
    }
}
