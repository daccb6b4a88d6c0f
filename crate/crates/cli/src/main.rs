mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use convex_brackets::brackets::{size_certificate, theoretical_count, CellFamily, GlobalFamily};
use convex_brackets::entropy::{run_experiment, write_outputs};
use convex_brackets::geometry::{check_simple, enumerate_faces, shapes, volume, Polytope, PolytopeFile};
use convex_brackets::john::{john_ellipsoid, john_face, verify_face_john, verify_john};
use convex_brackets::partition::{audit, build_partition, verify_volume_bound, verify_widths};
use convex_brackets::sampler::{sample_convex_fn, SamplerConfig};
use convex_brackets::schedule::{build_schedule, compute_l_constants, compute_u, level_constants, UMode};
use convex_brackets::{json_17, Error};
use serde::Serialize;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "cbrackets",
    version,
    about = "Bracketing families for bounded convex functions on polytopes"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Domain {
    /// Polytope file (halfspace JSON).
    #[arg(long, conflicts_with = "shape")]
    polytope: Option<PathBuf>,
    /// Built-in domain: square, triangle, pentagon, hexagon, cube.
    #[arg(long)]
    shape: Option<String>,
}

#[derive(Args, Clone)]
struct Params {
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long = "B", default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 0.125)]
    eps: f64,
    #[arg(long, default_value = "empirical")]
    mode: UMode,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check that the polytope is bounded and simple.
    Check {
        #[command(flatten)]
        domain: Domain,
    },
    /// List the faces `G_j` with their dimensions and volumes.
    Faces {
        #[command(flatten)]
        domain: Domain,
    },
    /// Face constants `L`, the offset `u` in both modes, and the band schedule.
    Constants {
        #[command(flatten)]
        domain: Domain,
        #[command(flatten)]
        params: Params,
    },
    /// Cells of the partition, optionally with a point audit.
    Partition {
        #[command(flatten)]
        domain: Domain,
        #[command(flatten)]
        params: Params,
        /// Audit points (0 skips the audit).
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Family manifest; `--dump` writes one sampled function's bracket.
    Brackets {
        #[command(flatten)]
        domain: Domain,
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        index: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run an ε sweep and write reports.
    Entropy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mode: Option<UMode>,
        #[arg(long = "eps-min")]
        eps_min: Option<f64>,
        #[arg(long = "eps-max")]
        eps_max: Option<f64>,
        #[arg(long = "eps-steps")]
        eps_steps: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long = "B")]
        b: Option<f64>,
    },
    /// Check the construction invariants and the geometric inequalities.
    Verify {
        #[command(flatten)]
        domain: Domain,
        #[command(flatten)]
        params: Params,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Summarize a report directory written by `entropy`.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

/// A construction invariant failed.
#[derive(Debug)]
struct Violation(String);

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invariant violated: {}", self.0)
    }
}

impl std::error::Error for Violation {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Violation>().is_some() {
        return 2;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Certificate(_) | Error::Coverage(_) | Error::Construction(_)) => 2,
        _ => 1,
    }
}

fn load_domain(d: &Domain) -> Result<Polytope> {
    match (&d.polytope, &d.shape) {
        (Some(path), _) => Ok(PolytopeFile::load(path).with_context(|| format!("loading {}", path.display()))?),
        (None, Some(s)) => Ok(match s.as_str() {
            "square" => shapes::unit_square(),
            "triangle" => shapes::unit_triangle(),
            "pentagon" => shapes::pentagon(),
            "hexagon" => shapes::unit_hexagon(),
            "cube" => shapes::unit_cube(3),
            other => bail!("unknown shape {other:?}"),
        }),
        (None, None) => bail!("one of --polytope or --shape is required"),
    }
}

fn emit<T: Serialize>(json: bool, value: &T, human: impl FnOnce() -> String) -> Result<()> {
    if json {
        print!("{}", json_17(value)?);
    } else {
        println!("{}", human());
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckOut {
    simple: bool,
    dim: usize,
    facets: usize,
    volume: f64,
    violations: Vec<(Vec<usize>, usize)>,
}

fn cmd_check(json: bool, domain: &Domain) -> Result<()> {
    let p = load_domain(domain)?;
    let r = check_simple(&p)?;
    let out = CheckOut {
        simple: r.simple,
        dim: p.dim(),
        facets: p.n_facets(),
        volume: volume(&p)?,
        violations: r.violations,
    };
    emit(json, &out, || {
        format!(
            "simple: {}\ndim: {}\nfacets: {}\nvolume: {:.16e}",
            out.simple, out.dim, out.facets, out.volume
        )
    })?;
    if !out.simple {
        bail!(Error::Assumption(format!("violating faces {:?}", out.violations)));
    }
    Ok(())
}

#[derive(Serialize)]
struct FaceOut {
    j_tuple: Vec<usize>,
    k: usize,
    dim: usize,
    volume: f64,
    inradius: f64,
}

fn cmd_faces(json: bool, domain: &Domain) -> Result<()> {
    let p = load_domain(domain)?;
    let mut out = Vec::new();
    for k in 1..=p.dim() {
        for f in enumerate_faces(&p, k)? {
            out.push(FaceOut {
                volume: f.volume(&p)?,
                dim: f.dim(),
                inradius: f.inradius,
                k,
                j_tuple: f.j_tuple,
            });
        }
    }
    emit(json, &out, || {
        out.iter()
            .map(|f| format!("k={} j={:?} dim={} volume={:.16e}", f.k, f.j_tuple, f.dim, f.volume))
            .collect::<Vec<_>>()
            .join("\n")
    })
}

#[derive(Serialize)]
struct ConstantsOut {
    u_theoretical: f64,
    ln_u_theoretical: f64,
    u_theoretical_cap: f64,
    u_empirical: f64,
    u_empirical_cap: f64,
    #[serde(rename = "L_k1")]
    l_k1: Vec<f64>,
    #[serde(rename = "L_k2")]
    l_k2: Vec<f64>,
    faces: Vec<convex_brackets::schedule::LConstants>,
    schedule: convex_brackets::schedule::DeltaSchedule,
}

fn cmd_constants(json: bool, domain: &Domain, params: &Params) -> Result<()> {
    let p = load_domain(domain)?;
    let th = compute_u(&p, params.p, UMode::Theoretical)?;
    let em = compute_u(&p, params.p, UMode::Empirical)?;
    let mut faces = Vec::new();
    for k in 1..=p.dim() {
        for f in enumerate_faces(&p, k)? {
            faces.push(compute_l_constants(&p, &f)?);
        }
    }
    let (l_k1, l_k2) = level_constants(&faces, p.dim());
    let u = if params.mode == UMode::Theoretical { th.u } else { em.u };
    let schedule = build_schedule(params.eps, params.p, u, 1)?;
    let out = ConstantsOut {
        u_theoretical: th.u,
        ln_u_theoretical: th.ln_u,
        u_theoretical_cap: th.cap,
        u_empirical: em.u,
        u_empirical_cap: em.cap,
        l_k1,
        l_k2,
        faces,
        schedule,
    };
    emit(json, &out, || {
        format!(
            "u_theoretical: {:.16e} (cap {:.16e})\nu_empirical: {:.16e}\nL_k1: {:?}\nL_k2: {:?}\nA: {}",
            out.u_theoretical, out.u_theoretical_cap, out.u_empirical, out.l_k1, out.l_k2, out.schedule.a_count
        )
    })
}

fn offset(p: &Polytope, params: &Params) -> Result<f64> {
    Ok(compute_u(p, params.p, params.mode)?.u)
}

#[derive(Serialize)]
struct CellOut {
    j_tuple: Vec<usize>,
    i_tuple: Vec<usize>,
    k: usize,
    trivial: bool,
    volume: f64,
    lipschitz: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct PartitionOut {
    u: f64,
    a_count: usize,
    cells: Vec<CellOut>,
    total_volume: f64,
    audit: Option<convex_brackets::partition::AuditReport>,
}

fn cmd_partition(json: bool, domain: &Domain, params: &Params, samples: usize, seed: u64) -> Result<()> {
    let p = load_domain(domain)?;
    let u = offset(&p, params)?;
    let part = build_partition(&p, params.eps, params.p, params.b, u)?;
    let audit = if samples > 0 {
        Some(audit(&part, samples, seed)?)
    } else {
        None
    };
    let out = PartitionOut {
        u,
        a_count: part.schedule.a_count,
        total_volume: part.total_volume(),
        cells: part
            .cells
            .iter()
            .map(|c| CellOut {
                j_tuple: c.j_tuple.clone(),
                i_tuple: c.i_tuple.clone(),
                k: c.k,
                trivial: c.is_trivial(),
                volume: c.volume,
                lipschitz: c.lipschitz.clone(),
            })
            .collect(),
        audit,
    };
    emit(json, &out, || {
        let mut s = format!(
            "u: {:.16e}\nA: {}\ncells: {}\nvolume: {:.16e}",
            out.u,
            out.a_count,
            out.cells.len(),
            out.total_volume
        );
        if let Some(a) = &out.audit {
            s += &format!("\naudit: {} points, {} exceptions", a.points, a.exceptions);
        }
        s
    })
}

#[derive(Serialize)]
struct FamilyOut {
    j_tuple: Vec<usize>,
    i_tuple: Vec<usize>,
    width: f64,
    quantum: Option<f64>,
    pitch: Option<Vec<f64>>,
    intervals: Option<Vec<usize>>,
    nodes: usize,
    count_bound: convex_brackets::brackets::CountBound,
}

#[derive(Serialize)]
struct BracketsOut {
    eps: f64,
    p: f64,
    u: f64,
    size: f64,
    size_certificate: convex_brackets::brackets::SizeCertificate,
    theoretical: convex_brackets::brackets::TheoreticalCount,
    cells: Vec<FamilyOut>,
}

fn cmd_brackets(
    json: bool,
    domain: &Domain,
    params: &Params,
    dump: Option<&Path>,
    index: u64,
    seed: u64,
) -> Result<()> {
    let p = load_domain(domain)?;
    let u = offset(&p, params)?;
    let part = build_partition(&p, params.eps, params.p, params.b, u)?;
    let theoretical = theoretical_count(&part, params.eps, params.p)?;
    let fam = GlobalFamily::build(part, params.eps, params.p)?;
    let size = fam.size();
    let cert = size_certificate(&fam.partition, params.eps, params.p, size)?;
    let cells = fam
        .families
        .iter()
        .zip(&fam.partition.cells)
        .map(|(f, c)| {
            let g = match f {
                CellFamily::Grid(g) => Some(g),
                CellFamily::Trivial { .. } => None,
            };
            FamilyOut {
                j_tuple: c.j_tuple.clone(),
                i_tuple: c.i_tuple.clone(),
                width: f.width(),
                quantum: g.map(|g| g.quantum),
                pitch: g.map(|g| g.pitch.clone()),
                intervals: g.map(|g| g.intervals.clone()),
                nodes: f.n_nodes(),
                count_bound: f.count_bound(),
            }
        })
        .collect();
    if let Some(path) = dump {
        let total: usize = fam.families.iter().map(|f| f.n_nodes()).sum();
        if total > 50_000_000 {
            bail!(Error::Argument(format!("{total} nodes is too many to dump")));
        }
        let f = sample_convex_fn(
            &SamplerConfig::new(seed, 5, 1.0, params.b),
            fam.partition.domain(),
            index,
        )?;
        let mut bytes = Vec::with_capacity(total * 16);
        for (fm, c) in fam.families.iter().zip(&fam.partition.cells) {
            if let CellFamily::Grid(g) = fm {
                let adm = f.admissible_pieces(&c.basis.e, &g.gamma);
                if adm.is_empty() {
                    bail!(Error::Certificate("sampled function has no admissible piece".into()));
                }
                bytes.extend(g.canonical_map(&|x| f.eval_pieces(&adm, x))?.to_le_bytes());
            }
        }
        std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    let out = BracketsOut {
        eps: params.eps,
        p: params.p,
        u,
        size,
        size_certificate: cert,
        theoretical,
        cells,
    };
    emit(json, &out, || {
        format!(
            "cells: {}\nnodes: {}\nsize: {:.16e}\nsize bound: {:.16e} ({})\ntheoretical log-count: {:.16e}",
            out.cells.len(),
            out.cells.iter().map(|c| c.nodes).sum::<usize>(),
            out.size,
            out.size_certificate.formula,
            if out.size_certificate.holds {
                "holds"
            } else {
                "violated"
            },
            out.theoretical.total
        )
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_entropy(
    json: bool,
    config: &Path,
    out: Option<PathBuf>,
    samples: Option<usize>,
    seed: Option<u64>,
    mode: Option<UMode>,
    eps: (Option<f64>, Option<f64>, Option<usize>),
    p: Option<f64>,
    b: Option<f64>,
) -> Result<()> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(o) = out {
        cfg.out = o;
    }
    cfg.samples = samples.unwrap_or(cfg.samples);
    cfg.seed = seed.unwrap_or(cfg.seed);
    cfg.mode = mode.unwrap_or(cfg.mode);
    cfg.eps.min = eps.0.unwrap_or(cfg.eps.min);
    cfg.eps.max = eps.1.unwrap_or(cfg.eps.max);
    cfg.eps.steps = eps.2.unwrap_or(cfg.eps.steps);
    cfg.p = p.unwrap_or(cfg.p);
    cfg.b = b.unwrap_or(cfg.b);
    cfg.validate()?;
    let domain = PolytopeFile::load(&cfg.polytope)?;
    let exp = cfg.experiment()?;
    let (report, timings) = run_experiment(&domain, &exp)?;
    write_outputs(&cfg.out, &report, &timings)?;
    emit(json, &report, || summary(&report))
}

fn summary(r: &convex_brackets::entropy::EntropyReport) -> String {
    let mut s = format!("u: {:.16e}\n", r.u);
    for row in &r.rows {
        s += &format!(
            "eps={:.6e} cells={} distinct_keys={} coverage={}\n",
            row.eps,
            row.cells,
            row.distinct_keys.map(|k| k.to_string()).unwrap_or_else(|| "-".into()),
            row.coverage.map(|c| c.to_string()).unwrap_or_else(|| "-".into())
        );
    }
    match (&r.fit, &r.fit_error) {
        (Some(f), _) => {
            s += &format!("slope: {:.6}", f.slope);
            if let Some((lo, hi)) = f.ci {
                s += &format!(" ci: [{lo:.6}, {hi:.6}]");
            }
        }
        (None, Some(e)) => s += &format!("slope: unavailable ({e})"),
        _ => {}
    }
    s
}

#[derive(Serialize, Default)]
struct VerifyOut {
    john_failures: Vec<Vec<usize>>,
    audit: Option<convex_brackets::partition::AuditReport>,
    size_holds: bool,
    size: f64,
    size_bound: f64,
    volume_bound_failures: usize,
    width_failures: usize,
    width_checks: usize,
}

fn cmd_verify(json: bool, domain: &Domain, params: &Params, samples: usize, seed: u64) -> Result<()> {
    let p = load_domain(domain)?;
    let d = p.dim() as f64;
    let mut out = VerifyOut::default();
    if !verify_john(&p, &john_ellipsoid(&p)?, d).ok {
        out.john_failures.push(Vec::new());
    }
    for k in 1..p.dim() {
        for f in enumerate_faces(&p, k)? {
            let e = john_face(&p, &f)?;
            if !verify_face_john(&p, &f, &e, d)?.ok {
                out.john_failures.push(f.j_tuple.clone());
            }
        }
    }
    let u = offset(&p, params)?;
    let part = build_partition(&p, params.eps, params.p, params.b, u)?;
    let a = audit(&part, samples, seed)?;
    for c in 0..part.cells.len() {
        if !verify_volume_bound(&part, c).holds {
            out.volume_bound_failures += 1;
        }
        for w in verify_widths(&part, c) {
            out.width_checks += 1;
            if !w.holds {
                out.width_failures += 1;
            }
        }
    }
    let fam = GlobalFamily::build(part, params.eps, params.p)?;
    out.size = fam.size_by_integration()?;
    let cert = size_certificate(&fam.partition, params.eps, params.p, out.size)?;
    out.size_holds = cert.holds;
    out.size_bound = cert.formula;
    let audit_ok = a.exceptions <= 10 && a.relative_volume_error <= 1e-6;
    out.audit = Some(a);
    emit(json, &out, || {
        format!(
            "john failures: {}\naudit ok: {}\nsize: {:.16e} ≤ {:.16e}: {}\nvolume bound failures: {}\nwidth failures: {}/{}",
            out.john_failures.len(),
            audit_ok,
            out.size,
            out.size_bound,
            out.size_holds,
            out.volume_bound_failures,
            out.width_failures,
            out.width_checks
        )
    })?;
    if !out.john_failures.is_empty() || !audit_ok || !out.size_holds {
        return Err(anyhow!(Violation("construction check failed".into())));
    }
    Ok(())
}

fn cmd_report(json: bool, dir: &Path) -> Result<()> {
    let path = dir.join("report.json");
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    if json {
        print!("{}", json_17(&v)?);
        return Ok(());
    }
    let csv = std::fs::read_to_string(dir.join("report.csv"))?;
    println!("{}", csv.trim_end());
    match v.get("fit").filter(|f| !f.is_null()) {
        Some(f) => println!("slope: {} ci: {}", f["slope"], f["ci"]),
        None => println!("slope: unavailable ({})", v["fit_error"]),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global()?;
    }
    let json = cli.json;
    match cli.cmd {
        Cmd::Check { domain } => cmd_check(json, &domain),
        Cmd::Faces { domain } => cmd_faces(json, &domain),
        Cmd::Constants { domain, params } => cmd_constants(json, &domain, &params),
        Cmd::Partition {
            domain,
            params,
            samples,
            seed,
        } => cmd_partition(json, &domain, &params, samples, seed),
        Cmd::Brackets {
            domain,
            params,
            dump,
            index,
            seed,
        } => cmd_brackets(json, &domain, &params, dump.as_deref(), index, seed),
        Cmd::Entropy {
            config,
            out,
            samples,
            seed,
            mode,
            eps_min,
            eps_max,
            eps_steps,
            p,
            b,
        } => cmd_entropy(
            json,
            &config,
            out,
            samples,
            seed,
            mode,
            (eps_min, eps_max, eps_steps),
            p,
            b,
        ),
        Cmd::Verify {
            domain,
            params,
            samples,
            seed,
        } => cmd_verify(json, &domain, &params, samples, seed),
        Cmd::Report { out } => cmd_report(json, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
