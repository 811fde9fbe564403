//! Command line front end.
//!
//! Every subcommand reads an optional TOML configuration and applies flag
//! overrides on top of it before validation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{parse_config, RunConfig};
use crate::diag::{effective_mode, error_norms, theorem_norms, ErrorHistories, RateReport};
use crate::error::{Error, Result};
use crate::grid::{read_snapshot, write_snapshot, Grid, SnapshotHeader, SpectralField};
use crate::jinxin::{simulate, ModelParams, RelaxState, Stepper};
use crate::limit::{darcy_reconstruct, LimitState, LimitStepper};
use crate::lp::{threshold, BesovSpec, DyadicFilter, Range, SumExp};
use crate::sweep::{initial_limit, initial_state, run_sweep, write_sweep, SweepPlan};
use crate::symbol::{eigenvalues, SymbolParams};

#[derive(Debug, Parser)]
#[command(name = "jinxin", version, about = "Jin-Xin relaxation system and its diffusive limit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the relaxation system, writing snapshots and a norm CSV.
    Simulate(RunArgs),
    /// Run the limit viscous conservation law.
    Limit(RunArgs),
    /// Error norms between paired relaxation and limit snapshot directories.
    Compare(CompareArgs),
    /// ε-sweep from `sweep.eps` in the configuration.
    Sweep(RunArgs),
    /// Eigenvalues of the per-mode symbol along the first axis.
    Spectrum(SpectrumArgs),
    /// Block and Besov norms of one snapshot.
    Norms(NormsArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML configuration; flags below override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub d: Option<i64>,
    #[arg(long)]
    pub n: Option<i64>,
    /// Points per axis.
    #[arg(long = "points")]
    pub points: Option<i64>,
    #[arg(long)]
    pub k0: Option<i64>,
    #[arg(long)]
    pub scheme: Option<String>,
    /// zero, quadratic, burgers1d or polynomial.
    #[arg(long)]
    pub flux: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub flux_coeffs: Option<Vec<f64>>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub stride: Option<i64>,
    #[arg(long)]
    pub seed: Option<i64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Configuration shared by both runs (model and grid).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Relaxation snapshot directories, one per ε.
    #[arg(long = "relax", required = true, num_args = 1..)]
    pub relax: Vec<PathBuf>,
    /// Limit snapshot directories, paired in order with `--relax`.
    #[arg(long = "limit", required = true, num_args = 1..)]
    pub limit: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    /// Wave speeds, one per axis.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    pub a: Vec<f64>,
    #[arg(long, default_value_t = 0.125)]
    pub xi_min: f64,
    #[arg(long, default_value_t = 1024.0)]
    pub xi_max: f64,
    /// Log-spaced samples of `|ξ|`.
    #[arg(long, default_value_t = 65)]
    pub count: usize,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sum {
    One,
    Inf,
}

#[derive(Debug, Clone, Args)]
pub struct NormsArgs {
    pub snapshot: PathBuf,
    /// Regularity indices.
    #[arg(long = "s", value_delimiter = ',', allow_hyphen_values = true, default_value = "0")]
    pub s: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Sum::One)]
    pub r: Sum,
    /// Snapshot components to measure; all when absent.
    #[arg(long, value_delimiter = ',')]
    pub components: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_text(path: &Option<PathBuf>) -> Result<String> {
    match path {
        Some(p) => Ok(fs::read_to_string(p)?),
        None => Ok(String::new()),
    }
}

fn set(table: &mut toml::Table, path: &str, value: toml::Value) {
    let (head, key) = path.split_once('.').expect("dotted key");
    let section = table
        .entry(head.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    if let toml::Value::Table(t) = section {
        t.insert(key.to_string(), value);
    }
}

/// Configuration from `--config` plus flag overrides.
pub fn load_config(args: &RunArgs) -> Result<RunConfig> {
    let text = read_text(&args.config)?;
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Format(e.message().to_string()))?;
    let float = |x: f64| toml::Value::Float(x);
    let int = |x: i64| toml::Value::Integer(x);
    let mut overrides: Vec<(&str, toml::Value)> = Vec::new();
    if let Some(x) = args.eps {
        overrides.push(("model.eps", float(x)));
    }
    if let Some(x) = args.d {
        overrides.push(("model.d", int(x)));
        let has_a = table.get("model").and_then(|m| m.get("a")).is_some();
        if !has_a && x >= 1 {
            overrides.push(("model.a", toml::Value::Array(vec![float(1.0); x as usize])));
        }
    }
    if let Some(x) = args.n {
        overrides.push(("model.n", int(x)));
    }
    if let Some(x) = args.points {
        overrides.push(("grid.N", int(x)));
    }
    if let Some(x) = args.k0 {
        overrides.push(("lp.k0", int(x)));
    }
    if let Some(x) = &args.scheme {
        overrides.push(("solver.scheme", toml::Value::String(x.clone())));
    }
    if let Some(x) = &args.flux {
        overrides.push(("model.flux", toml::Value::String(x.clone())));
    }
    if let Some(x) = &args.flux_coeffs {
        overrides.push(("model.flux_coeffs", toml::Value::Array(x.iter().map(|&c| float(c)).collect())));
    }
    if let Some(x) = args.dt {
        overrides.push(("time.dt", float(x)));
    }
    if let Some(x) = args.t_final {
        overrides.push(("time.t_final", float(x)));
    }
    if let Some(x) = args.stride {
        overrides.push(("time.stride", int(x)));
    }
    if let Some(x) = args.seed {
        overrides.push(("init.seed", int(x)));
    }
    if let Some(x) = &args.out {
        overrides.push(("output.dir", toml::Value::String(x.display().to_string())));
    }
    for (path, value) in overrides {
        set(&mut table, path, value);
    }
    parse_config(&table.to_string())
}

fn snapshot_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("snap_{k:06}.bin"))
}

/// Snapshot files of a directory in index order.
pub fn list_snapshots(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("snap_") && n.ends_with(".bin"))
        })
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(Error::invalid(format!("{}: no snapshots", dir.display())));
    }
    Ok(out)
}

/// Writes `u` then `v` ((d+1)·n components) in physical space.
fn write_uv(path: &Path, grid: &Arc<Grid>, t: f64, eps: f64, u: &SpectralField, v: &SpectralField) -> Result<()> {
    let header = SnapshotHeader {
        dim: grid.dim() as u64,
        components: (u.ncomp() + v.ncomp()) as u64,
        points: grid.points() as u64,
        box_scale: grid.box_scale(),
        time: t,
        eps,
    };
    write_snapshot(path, &header, &SpectralField::stack(u, v).to_physical())
}

/// Reads a snapshot as `(t, ε, u - ū, ε(v - v̄))` on `grid`.
fn read_uv(path: &Path, grid: &Arc<Grid>, params: &ModelParams) -> Result<(f64, f64, SpectralField, SpectralField)> {
    let (h, samples) = read_snapshot(path)?;
    let (d, n) = (params.dim(), params.n());
    if h.dim as usize != grid.dim() || h.points as usize != grid.points() || h.components as usize != (d + 1) * n {
        return Err(Error::Format(format!("{}: snapshot shape differs from the configuration", path.display())));
    }
    let all = grid.forward(&samples, (d + 1) * n)?;
    let mut m = all.components(0..n);
    let mut w = all.components(n..(d + 1) * n);
    for c in 0..n {
        m.comp_mut(c)[0] -= params.ubar();
    }
    for c in 0..d * n {
        w.comp_mut(c)[0] -= params.vbar();
    }
    Ok((h.time, h.eps, m, w.scaled(h.eps)))
}

const NORM_COLUMNS: &str = "t,mean_u,u_l2,v_l2,u_besov_lo,u_besov_hi,z_besov";

fn norm_row(t: f64, filter: &DyadicFilter, m: &SpectralField, w: &SpectralField, z: Option<&SpectralField>, params: &ModelParams) -> String {
    let h = params.dim() as f64 / 2.0;
    let lo = filter.besov_norm(m, &BesovSpec::b21(h - 1.0));
    let hi = filter.besov_norm(m, &BesovSpec::b21(h));
    let zb = z.map_or(0.0, |z| filter.besov_norm(z, &BesovSpec::b21(h - 1.0)));
    let mean = m.mean(0) + params.ubar();
    format!(
        "{t:e},{mean:e},{:e},{:e},{lo:e},{hi:e},{zb:e}\n",
        m.l2_norm(),
        w.l2_norm() / params.eps()
    )
}

fn run_simulate(cfg: &RunConfig) -> Result<()> {
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let filter = cfg.filter(&grid)?;
    let (dt, steps) = cfg.schedule();
    let dir = &cfg.output;
    fs::create_dir_all(dir)?;
    let m0 = initial_limit(cfg, &grid)?;
    let mut state = initial_state(cfg, &params, &m0)?;
    let stepper = Stepper::new(&params, &grid, cfg.scheme, dt)?;
    let mut csv = format!("{NORM_COLUMNS}\n");
    let mut k = 0;
    simulate(&mut state, &stepper, steps, cfg.time.stride, |st: &RelaxState| {
        write_uv(&snapshot_path(dir, k), &grid, st.t, params.eps(), &st.u_field(&params), &st.v_field(&params))?;
        let z = effective_mode(st, &params);
        csv.push_str(&norm_row(st.t, &filter, &st.m, &st.w, Some(&z), &params));
        k += 1;
        Ok(())
    })?;
    fs::write(dir.join("norms.csv"), csv)?;
    Ok(())
}

fn run_limit(cfg: &RunConfig) -> Result<()> {
    let params = cfg.params()?;
    let grid = cfg.grid()?;
    let filter = cfg.filter(&grid)?;
    let (dt, steps) = cfg.schedule();
    let dir = &cfg.output;
    fs::create_dir_all(dir)?;
    let mut state = LimitState::new(0.0, initial_limit(cfg, &grid)?);
    let stepper = LimitStepper::new(&params, &grid, dt)?;
    let mut csv = format!("{NORM_COLUMNS}\n");
    let emit = |k: usize, st: &LimitState, csv: &mut String| -> Result<()> {
        let mut v = darcy_reconstruct(&st.m, &params);
        let w = v.scaled(params.eps());
        for c in 0..v.ncomp() {
            v.comp_mut(c)[0] += params.vbar();
        }
        write_uv(&snapshot_path(dir, k), &grid, st.t, params.eps(), &st.u_field(&params), &v)?;
        csv.push_str(&norm_row(st.t, &filter, &st.m, &w, None, &params));
        Ok(())
    };
    emit(0, &state, &mut csv)?;
    let mut k = 1;
    for step in 1..=steps {
        stepper.step(&mut state)?;
        state.t = step as f64 * dt;
        if step % cfg.time.stride == 0 {
            emit(k, &state, &mut csv)?;
            k += 1;
        }
    }
    fs::write(dir.join("norms.csv"), csv)?;
    Ok(())
}

/// Norms of one relaxation/limit directory pair.
fn compare_pair(cfg: &RunConfig, relax: &Path, limit: &Path, series: &mut String) -> Result<(f64, BTreeMap<String, f64>)> {
    let grid = cfg.grid()?;
    let filter = cfg.filter(&grid)?;
    let (a, b) = (list_snapshots(relax)?, list_snapshots(limit)?);
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "{} has {} snapshots, {} has {}",
            relax.display(),
            a.len(),
            limit.display(),
            b.len()
        )));
    }
    let eps = read_snapshot(&a[0])?.0.eps;
    let params = cfg.params_at(eps)?;
    let mut hist = ErrorHistories::new(filter.j_min());
    for (pa, pb) in a.iter().zip(&b) {
        let (t, e, m, w) = read_uv(pa, &grid, &params)?;
        let (ts, _, m_star, _) = read_uv(pb, &grid, &params)?;
        if (t - ts).abs() > 1e-12 * t.abs().max(1.0) || e != eps {
            return Err(Error::invalid(format!("schedule mismatch at {} and {}", pa.display(), pb.display())));
        }
        let st = RelaxState::new(t, m, w, &params)?;
        hist.record(&filter, &st, &m_star, &params)?;
        let v_err = st.w.scaled(1.0 / eps).sub(&darcy_reconstruct(&m_star, &params));
        writeln!(
            series,
            "{eps:e},{t:e},{:e},{:e},{:e}",
            st.m.sub(&m_star).l2_norm(),
            v_err.l2_norm(),
            effective_mode(&st, &params).l2_norm()
        )
        .expect("string write");
    }
    let norms = error_norms(&hist, &theorem_norms(params.dim(), &cfg.sigmas, threshold(eps, cfg.k0)?))?;
    Ok((eps, norms))
}

fn run_compare(args: &CompareArgs) -> Result<()> {
    if args.relax.len() != args.limit.len() {
        return Err(Error::invalid("--relax and --limit need the same number of directories"));
    }
    let cfg = load_config(&RunArgs {
        config: args.config.clone(),
        ..Default::default()
    })?;
    let mut series = String::from("eps,t,u_err_l2,v_err_l2,z_l2\n");
    let mut eps = Vec::new();
    let mut runs = Vec::new();
    for (r, l) in args.relax.iter().zip(&args.limit) {
        let (e, norms) = compare_pair(&cfg, r, l, &mut series)?;
        eps.push(e);
        runs.push(Ok(norms));
    }
    let report = RateReport::assemble(&eps, &runs);
    fs::create_dir_all(&args.out)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(args.out.join("report.json"), json + "\n")?;
    fs::write(args.out.join("series.csv"), series)?;
    Ok(())
}

fn run_sweep_cmd(cfg: &RunConfig) -> Result<()> {
    let plan = SweepPlan::from_config(cfg)?;
    let result = run_sweep(&plan);
    write_sweep(&cfg.output, &result)?;
    if let Some((e, msg)) = result.report.failures.first() {
        return Err(Error::Numerical {
            t: f64::NAN,
            what: format!("{} of {} runs failed, first at ε = {e}: {msg}", result.report.failures.len(), plan.eps().len()),
        });
    }
    Ok(())
}

/// CSV of `λ₃, λ₄` over log-spaced `|ξ|` along the first axis.
pub fn spectrum_csv(args: &SpectrumArgs) -> Result<String> {
    if !(args.xi_min > 0.0 && args.xi_max >= args.xi_min) || args.count < 2 {
        return Err(Error::invalid("need 0 < xi_min <= xi_max and count >= 2"));
    }
    let d = args.a.len();
    let mut out = String::new();
    let names: Vec<String> = (1..=d).map(|i| format!("xi{i}")).collect();
    writeln!(out, "{},eps,re_lambda3,im_lambda3,re_lambda4,im_lambda4,regime", names.join(",")).expect("string write");
    for &eps in &args.eps {
        let p = SymbolParams::new(eps, args.a.clone())?;
        for k in 0..args.count {
            let r = args.xi_min * (args.xi_max / args.xi_min).powf(k as f64 / (args.count - 1) as f64);
            let mut xi = vec![0.0; d];
            xi[0] = r;
            let e = eigenvalues(&xi, &p);
            let coords: Vec<String> = xi.iter().map(|x| format!("{x:e}")).collect();
            writeln!(
                out,
                "{},{eps:e},{:e},{:e},{:e},{:e},{}",
                coords.join(","),
                e.lambda3().re,
                e.lambda3().im,
                e.lambda4().re,
                e.lambda4().im,
                e.regime.label()
            )
            .expect("string write");
        }
    }
    Ok(out)
}

/// CSV of block norms (`kind = block`) and Besov norms (`kind = besov`) of a snapshot.
pub fn norms_csv(args: &NormsArgs) -> Result<String> {
    let (h, samples) = read_snapshot(&args.snapshot)?;
    let ncomp = h.components as usize;
    let grid = Grid::new(h.dim as usize, ncomp, h.points as usize, h.box_scale)?;
    let field = grid.forward(&samples, ncomp)?;
    let comps = args.components.clone().unwrap_or_else(|| (0..ncomp).collect());
    if let Some(bad) = comps.iter().find(|&&c| c >= ncomp) {
        return Err(Error::invalid(format!("component {bad} out of range (snapshot has {ncomp})")));
    }
    let mut sel = SpectralField::zeros(&grid, comps.len());
    for (k, &c) in comps.iter().enumerate() {
        sel.comp_mut(k).copy_from_slice(field.comp(c));
    }
    let filter = DyadicFilter::covering(&grid)?;
    let mut out = String::from("kind,j,s,r,value\n");
    for (k, b) in filter.block_norms(&sel).iter().enumerate() {
        writeln!(out, "block,{},,,{b:e}", filter.j_min() + k as i32).expect("string write");
    }
    let (sum, label) = match args.r {
        Sum::One => (SumExp::One, "1"),
        Sum::Inf => (SumExp::Inf, "inf"),
    };
    for &s in &args.s {
        let v = filter.besov_norm(&sel, &BesovSpec::new(s, sum, Range::All));
        writeln!(out, "besov,,{s},{label},{v:e}").expect("string write");
    }
    Ok(out)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => run_simulate(&load_config(&a)?),
        Command::Limit(a) => run_limit(&load_config(&a)?),
        Command::Compare(a) => run_compare(&a),
        Command::Sweep(a) => run_sweep_cmd(&load_config(&a)?),
        Command::Spectrum(a) => emit(&a.out, &spectrum_csv(&a)?),
        Command::Norms(a) => emit(&a.out, &norms_csv(&a)?),
    }
}
