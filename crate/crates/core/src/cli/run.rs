use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::cache::{hash_of, io_err, Cache, CellKey, Lookup};
use super::config::{Command, ExperimentConfig, Format};
use crate::cell::{radial_capacity, solve_phi, CellResult};
use crate::energy::{
    default_schedule, g_limit, shared, validate_growth, AmplitudeGrid, Density, EnvelopeApprox, GLimitOptions, InnerSolver, ReducedDensity,
};
use crate::error::{Error, Result};
use crate::mesh::Field;
use crate::regime::{build_film, classify, direct_film_energy, gamma_trend, poincare_check};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Floats in CSV files.
pub fn fmt_f(v: f64) -> String {
    format!("{v:.12e}")
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides `output.directory`.
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    /// Overrides `seed`.
    pub seed: Option<u64>,
    pub no_cache: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OperationRecord {
    pub name: String,
    pub cache: Lookup,
    pub converged: bool,
    pub diagnostics: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub operation: String,
    pub seconds: f64,
}

/// Written as `manifest.json`. Only `timestamp` and the `timing` section
/// change between re-runs of one config.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub version: String,
    pub command: Command,
    pub seed: Option<u64>,
    pub timestamp: String,
    pub converged: bool,
    pub operations: Vec<OperationRecord>,
    pub outputs: Vec<String>,
    pub timing: Vec<Timing>,
}

struct Writer {
    dir: PathBuf,
    formats: Vec<Format>,
    outputs: Vec<String>,
}

impl Writer {
    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        if !self.formats.contains(&Format::Csv) {
            return Ok(());
        }
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        self.outputs.push(name.into());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if !self.formats.contains(&Format::Json) {
            return Ok(());
        }
        let path = self.dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| io_err(&path, e))?;
        self.outputs.push(name.into());
        Ok(())
    }
}

/// Outcome of [`execute`].
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub manifest: RunManifest,
    pub out_dir: PathBuf,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    cache: Cache,
    writer: Writer,
    ops: Vec<OperationRecord>,
    timing: Vec<Timing>,
    seed: Option<u64>,
}

impl Ctx<'_> {
    fn timed<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f(self)?;
        self.timing.push(Timing { operation: name.into(), seconds: t.elapsed().as_secs_f64() });
        Ok(out)
    }

    fn record(&mut self, name: impl Into<String>, cache: Lookup, converged: bool, diagnostics: Value) {
        self.ops.push(OperationRecord { name: name.into(), cache, converged, diagnostics });
    }
}

/// Runs one configured experiment, writing its outputs and `manifest.json`.
pub fn execute(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = opts.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let cache_dir = (!opts.no_cache).then(|| dir.join("cache"));
    let mut ctx = Ctx {
        cfg,
        cache: Cache::new(cache_dir),
        writer: Writer { dir: dir.clone(), formats: cfg.output.formats.clone(), outputs: Vec::new() },
        ops: Vec::new(),
        timing: Vec::new(),
        seed: opts.seed.or(cfg.seed),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = opts.workers {
        pool = pool.num_threads(k.max(1));
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| match cfg.command {
        Command::Capacity => capacity(&mut ctx),
        Command::Cell | Command::Sweep => cells(&mut ctx),
        Command::Relax => relax(&mut ctx),
        Command::Regime => regime(&mut ctx),
        Command::Film => film(&mut ctx),
        Command::Trend => trend(&mut ctx),
        Command::Poincare => poincare(&mut ctx),
    })?;
    let mut effective = cfg.clone();
    effective.seed = ctx.seed;
    let manifest = RunManifest {
        config_hash: hash_of(&effective),
        version: VERSION.into(),
        command: cfg.command,
        seed: ctx.seed,
        timestamp: chrono::Utc::now().to_rfc3339(),
        converged: ctx.ops.iter().all(|o| o.converged),
        operations: ctx.ops,
        outputs: ctx.writer.outputs,
        timing: ctx.timing,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| io_err(&path, e))?;
    Ok(RunSummary { manifest, out_dir: dir })
}

fn capacity(ctx: &mut Ctx) -> Result<()> {
    let c = ctx.cfg.capacity.clone().unwrap();
    let rows = ctx.timed("capacity", |_| {
        c.r_out
            .iter()
            .map(|&r| Ok(vec![c.d.to_string(), fmt_f(c.p), fmt_f(c.r_in), fmt_f(r), fmt_f(radial_capacity(c.d, c.p, c.r_in, r)?)]))
            .collect::<Result<Vec<_>>>()
    })?;
    ctx.record("capacity", Lookup::Disabled, true, json!({ "values": rows.len() }));
    ctx.writer.csv("capacity.csv", &["d", "p", "r_in", "r_out", "capacity"], &rows)
}

fn cells(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let points: Vec<(f64, Vec<f64>)> = match cfg.command {
        Command::Cell => {
            let c = cfg.cell.as_ref().unwrap();
            vec![(c.ell, c.z.clone())]
        }
        _ => {
            let s = cfg.sweep.as_ref().unwrap();
            s.ell.iter().flat_map(|&l| s.z.iter().map(move |z| (l, z.clone()))).collect()
        }
    };
    let (density, geometry, solver) = (cfg.density.as_ref().unwrap(), cfg.geometry.as_ref().unwrap(), cfg.solver());
    let keys: Vec<String> =
        points.iter().map(|(ell, z)| CellKey { version: VERSION, density, geometry, solver: &solver, ell: *ell, z }.hash()).collect();
    let looked: Vec<(Option<CellResult>, Lookup)> = keys.iter().map(|k| ctx.cache.lookup(k)).collect();
    let results: Vec<(CellResult, Lookup)> = ctx.timed("cell solves", |_| {
        points
            .par_iter()
            .zip(looked)
            .map(|((ell, z), (hit, how))| match hit {
                Some(r) => Ok((r, how)),
                None => Ok((solve_phi(&cfg.cell_spec(*ell, z)?)?, how)),
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::new();
    for ((key, (ell, z)), (res, how)) in keys.iter().zip(&points).zip(&results) {
        if *how == Lookup::Miss {
            ctx.cache.store(key, res)?;
        }
        let z_norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        let residual = res.extrapolation.as_ref().map_or(0.0, |e| e.residual);
        for (n, phi) in res.n_list.iter().zip(&res.phi_by_n) {
            rows.push(vec![
                res.regime.label().into(),
                fmt_f(*ell),
                fmt_f(z_norm),
                fmt_f(*n),
                fmt_f(*phi),
                fmt_f(res.phi_extrapolated),
                fmt_f(residual),
                fmt_f(res.trace_mean_dev),
            ]);
        }
        let diag = json!({ "key": key, "phi_extrapolated": res.phi_extrapolated, "iterations": res.diagnostics.iter().map(|d| d.iterations.iter().sum::<usize>()).collect::<Vec<_>>() });
        ctx.record(format!("cell {} z={z:?}", res.regime.label()), *how, res.converged, diag);
    }
    let header = ["regime", "ell", "z_norm", "N", "phi", "phi_extrap", "residual", "trace_dev"];
    ctx.writer.csv("cell.csv", &header, &rows)?;
    let all: Vec<&CellResult> = results.iter().map(|(r, _)| r).collect();
    ctx.writer.json("cell.json", &all)
}

fn relax(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let r = cfg.relax.clone().unwrap();
    let w = cfg.density.as_ref().unwrap().build()?;
    let (m, n) = (w.m(), w.n());
    let seed = ctx.seed.ok_or_else(|| Error::Config("relax needs a seed".into()))?;
    let growth = ctx.timed("growth", |_| Ok(validate_growth(&w, r.growth_samples, r.growth_radius, seed)))?;
    ctx.record("validate_growth", Lookup::Disabled, true, json!({ "passed": growth.passed, "samples": growth.samples }));
    let mut rows = Vec::new();
    if !r.wbar.is_empty() {
        let reduced = ReducedDensity::new(w.clone(), InnerSolver::default())?;
        let bar = shared(reduced.clone());
        let env = if bar.is_convex() {
            None
        } else {
            let lam = &r.lamination;
            let grid = AmplitudeGrid::centered(m * (n - 1), lam.half_width, lam.points | 1);
            Some(ctx.timed("lamination", |_| EnvelopeApprox::new(bar.clone(), lam.depth, lam.direction_budget, grid))?)
        };
        for (i, f) in r.wbar.iter().enumerate() {
            let fm = DMatrix::from_column_slice(m, n - 1, f);
            rows.push(vec!["wbar".into(), i.to_string(), fmt_f(reduced.reduce_wbar(&fm)?)]);
            let q = match &env {
                Some(e) => e.laminate_envelope(&fm)?.value,
                None => bar.value(f, 0.0),
            };
            rows.push(vec!["q_wbar".into(), i.to_string(), fmt_f(q)]);
        }
    }
    let schedule = r.g_schedule.clone().unwrap_or_else(default_schedule);
    for (i, f) in r.g_limit.iter().enumerate() {
        let fm = DMatrix::from_column_slice(m, n, f);
        match ctx.timed("g_limit", |_| g_limit(&w, &fm, &schedule, &GLimitOptions::default())) {
            Ok(gl) => {
                rows.push(vec!["g".into(), i.to_string(), fmt_f(gl.value)]);
                let diag = json!({ "residual": gl.residual, "rate": gl.rate, "raw": gl.raw });
                ctx.record(format!("g_limit {i}"), Lookup::Disabled, gl.lower_ok && gl.upper_ok, diag);
            }
            Err(Error::LimitNotResolved(why)) => {
                log::warn!("g_limit at point {i}: {why}");
                rows.push(vec!["g".into(), i.to_string(), fmt_f(f64::NAN)]);
                ctx.record(format!("g_limit {i}"), Lookup::Disabled, false, json!({ "error": why }));
            }
            Err(e) => return Err(e),
        }
    }
    ctx.writer.csv("relax.csv", &["quantity", "index", "value"], &rows)?;
    ctx.writer.json(
        "growth.json",
        &json!({
            "samples": growth.samples,
            "w_at_zero": growth.w_at_zero,
            "lower_violations": growth.lower_violations,
            "upper_violations": growth.upper_violations,
            "beta_affine": growth.beta_affine,
            "beta_homogeneous": growth.beta_homogeneous,
            "lipschitz": growth.lipschitz,
            "passed": growth.passed,
        }),
    )
}

fn regime(ctx: &mut Ctx) -> Result<()> {
    let s = ctx.cfg.regime.clone().unwrap();
    let rep = classify(&s)?;
    ctx.record("classify", Lookup::Disabled, true, serde_json::to_value(&rep)?);
    let label = serde_json::to_value(rep.label)?.as_str().unwrap_or_default().to_string();
    let row = vec![
        label,
        fmt_f(rep.ell.as_f64()),
        fmt_f(rep.r_ell.as_f64()),
        fmt_f(rep.r_zero.as_f64()),
        rep.consistency.map(fmt_f).unwrap_or_default(),
    ];
    ctx.writer.csv("regime.csv", &["label", "ell", "r_ell", "r_zero", "consistency"], &[row])?;
    ctx.writer.json("regime.json", &rep)
}

fn film(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let f = cfg.film.clone().unwrap();
    let spec = cfg.film_spec()?;
    let w = cfg.density.as_ref().unwrap().build()?;
    let (energy, voxels) = ctx.timed("film", |_| {
        let film = build_film(&spec, f.max_voxels)?;
        let [gx, gy] = f.gradient;
        let [up, lo] = f.offset;
        let u = Field::from_fn(&film.mesh, 1, |_, x, side, o| o[0] = gx * x[0] + gy * x[1] + if side >= 0 { up } else { lo });
        Ok((direct_film_energy(&film, &w, &u)?, film.voxels))
    })?;
    let closed = 2.0 * spec.area() * w.value(&[f.gradient[0], f.gradient[1], 0.0], 0.0);
    ctx.record("direct_film_energy", Lookup::Disabled, true, json!({ "energy": energy, "closed_form": closed, "voxels": voxels }));
    let row = vec![fmt_f(spec.eps), fmt_f(spec.delta), fmt_f(spec.r), fmt_f(spec.h), voxels.to_string(), fmt_f(energy), fmt_f(closed)];
    ctx.writer.csv("film.csv", &["eps", "delta", "r", "h", "voxels", "energy", "closed_form"], &[row])?;
    ctx.writer.json("film.json", &json!({ "spec": spec, "voxels": voxels, "energy": energy, "closed_form": closed }))
}

fn trend(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let t = cfg.trend.clone().unwrap();
    let s = cfg.regime.clone().unwrap();
    let w = cfg.density.as_ref().unwrap().build()?;
    let rep = ctx.timed("gamma_trend", |_| gamma_trend(&s, &t.j, (t.u_plus, t.u_minus), &w, &t.options))?;
    ctx.record("gamma_trend", Lookup::Disabled, true, json!({ "passed": rep.passed, "monotone": rep.monotone, "skipped": rep.skipped }));
    let rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                r.j.to_string(),
                fmt_f(r.eps),
                fmt_f(r.delta),
                fmt_f(r.r),
                fmt_f(r.n_cell),
                r.voxels.to_string(),
                fmt_f(r.film),
                fmt_f(r.limit),
                fmt_f(r.gap),
            ]
        })
        .collect();
    ctx.writer.csv("trend.csv", &["j", "eps", "delta", "r", "n_cell", "voxels", "film", "limit", "gap"], &rows)?;
    ctx.writer.json("trend.json", &rep)
}

fn poincare(ctx: &mut Ctx) -> Result<()> {
    let q = ctx.cfg.poincare.clone().unwrap();
    let rep = ctx.timed("poincare", |_| poincare_check(q.shape, q.p, &q.rho, &q.delta, &q.profiles, q.order))?;
    ctx.record("poincare_check", Lookup::Disabled, true, json!({ "variation": rep.variation, "passed": rep.passed }));
    let rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| {
            let profile = serde_json::to_value(r.profile).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            vec![fmt_f(r.rho), fmt_f(r.delta), profile, fmt_f(r.lhs), fmt_f(r.rhs), fmt_f(r.ratio)]
        })
        .collect();
    ctx.writer.csv("poincare.csv", &["rho", "delta", "profile", "lhs", "rhs", "ratio"], &rows)?;
    ctx.writer.json("poincare.json", &rep)
}

/// Exit status for an error: 2 for invalid input, 3 for numerical
/// failure, 1 for I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Csv(_) | Error::Json(_) => 1,
        Error::BlowUp | Error::NonMonotone { .. } | Error::LimitNotResolved(_) | Error::SpanTooSmall { .. } => 3,
        _ => 2,
    }
}

pub fn output_path(summary: &RunSummary, name: &str) -> PathBuf {
    Path::new(&summary.out_dir).join(name)
}
