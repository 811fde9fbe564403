//! Run configuration: a TOML document of dotted keys.
//!
//! ```toml
//! model.d = 2
//! model.eps = 0.0625
//! model.a = [1.0, 1.0]
//! model.flux = "quadratic"
//! model.flux_coeffs = [1.0, 1.0]
//! grid.N = 64
//! time.t_final = 1.0
//! solver.scheme = "etd"
//! init.amplitude = 0.01
//! sweep.eps = [0.125, 0.0625, 0.03125]
//! ```
//!
//! Every violation is collected with its key path before the document is rejected.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::grid::Grid;
use crate::jinxin::{FluxSpec, ModelParams, Scheme};
use crate::lp::DyadicFilter;
use crate::symbol::SymbolParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// Random field in a dyadic band, scaled in `Ḃ^{d/2-1}_{2,1} ∩ Ḃ^{d/2}_{2,1}`.
    Random,
    /// `amplitude · cos(k·x)` for one integer wavevector.
    Mode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prepared {
    /// `v₀ = -A∂u₀ + f(u₀)`.
    Well,
    /// `ε(v₀ - v̄)` an independent field of the same size as `u₀ - ū`.
    Ill,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d: usize,
    pub n: usize,
    pub eps: f64,
    pub a: Vec<f64>,
    pub ubar: f64,
    pub vbar: f64,
    pub flux: FluxSpec,
    pub theorem_mode: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    /// Requested step; `None` selects `min(0.5 Δx² / max a_i, dt_max)`.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub stride: usize,
    pub dt_max: f64,
    /// Split the first step geometrically below `ε²` so the initial layer is sampled.
    pub resolve_layer: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    pub kind: InitKind,
    pub seed: u64,
    pub amplitude: f64,
    pub band: (i32, i32),
    pub mode: Vec<i64>,
    pub prepared: Prepared,
    /// Relative size of an extra `O(ε)` discrepancy `u₀ - u₀*`.
    pub discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub points: usize,
    pub box_scale: f64,
    pub time: TimeConfig,
    pub k0: i32,
    pub j_range: Option<(i32, i32)>,
    pub scheme: Scheme,
    pub init: InitConfig,
    pub output: PathBuf,
    pub sweep_eps: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub eta: Option<f64>,
}

impl RunConfig {
    pub fn params(&self) -> Result<ModelParams> {
        self.params_at(self.model.eps)
    }

    pub fn params_at(&self, eps: f64) -> Result<ModelParams> {
        let m = &self.model;
        ModelParams::new(SymbolParams::new(eps, m.a.clone())?, m.n, m.ubar, m.vbar, m.flux.clone(), m.theorem_mode)
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Grid::new(self.model.d, self.model.n, self.points, self.box_scale)
    }

    pub fn filter(&self, grid: &Arc<Grid>) -> Result<DyadicFilter> {
        match self.j_range {
            Some((lo, hi)) => DyadicFilter::build(grid, lo, hi),
            None => DyadicFilter::covering(grid),
        }
    }

    /// Step size and count: the step divides `t_final` exactly.
    pub fn schedule(&self) -> (f64, usize) {
        let t = &self.time;
        let dx = 2.0 * std::f64::consts::PI * self.box_scale / self.points as f64;
        let amax = self.model.a.iter().cloned().fold(0.0, f64::max);
        let target = t.dt.unwrap_or_else(|| (0.5 * dx * dx / amax).min(t.dt_max)).min(t.dt_max);
        let steps = (t.t_final / target * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (t.t_final / steps as f64, steps)
    }
}

/// Dotted-path view of a TOML document that records every violation.
struct Fields {
    values: BTreeMap<String, toml::Value>,
    violations: Vec<Violation>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&path, t, out),
            other => {
                out.insert(path, other.clone());
            }
        }
    }
}

fn as_f64(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(x) => Some(*x),
        toml::Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl Fields {
    fn fail(&mut self, path: &str, reason: impl Into<String>) {
        self.violations.push(Violation {
            path: path.to_string(),
            reason: reason.into(),
        });
    }

    fn take(&mut self, path: &str) -> Option<toml::Value> {
        self.values.remove(path)
    }

    fn float(&mut self, path: &str) -> Option<f64> {
        let v = self.take(path)?;
        match as_f64(&v) {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.fail(path, format!("expected a finite number, got {v}"));
                None
            }
        }
    }

    fn int(&mut self, path: &str) -> Option<i64> {
        let v = self.take(path)?;
        match v {
            toml::Value::Integer(i) => Some(i),
            other => {
                self.fail(path, format!("expected an integer, got {other}"));
                None
            }
        }
    }

    fn string(&mut self, path: &str) -> Option<String> {
        let v = self.take(path)?;
        match v {
            toml::Value::String(s) => Some(s),
            other => {
                self.fail(path, format!("expected a string, got {other}"));
                None
            }
        }
    }

    fn boolean(&mut self, path: &str) -> Option<bool> {
        let v = self.take(path)?;
        match v {
            toml::Value::Boolean(b) => Some(b),
            other => {
                self.fail(path, format!("expected true or false, got {other}"));
                None
            }
        }
    }

    fn floats(&mut self, path: &str) -> Option<Vec<f64>> {
        let v = self.take(path)?;
        let parsed = match &v {
            toml::Value::Array(items) => items.iter().map(|x| as_f64(x).filter(|x| x.is_finite())).collect::<Option<Vec<_>>>(),
            _ => None,
        };
        if parsed.is_none() {
            self.fail(path, format!("expected an array of numbers, got {v}"));
        }
        parsed
    }

    fn ints(&mut self, path: &str) -> Option<Vec<i64>> {
        let v = self.take(path)?;
        let parsed = match &v {
            toml::Value::Array(items) => items.iter().map(|x| x.as_integer()).collect::<Option<Vec<_>>>(),
            _ => None,
        };
        if parsed.is_none() {
            self.fail(path, format!("expected an array of integers, got {v}"));
        }
        parsed
    }

    fn table(&mut self, path: &str) -> Option<Vec<Vec<f64>>> {
        let v = self.take(path)?;
        let parsed = match &v {
            toml::Value::Array(rows) => rows
                .iter()
                .map(|r| match r {
                    toml::Value::Array(items) => items.iter().map(as_f64).collect::<Option<Vec<_>>>(),
                    _ => None,
                })
                .collect::<Option<Vec<_>>>(),
            _ => None,
        };
        if parsed.is_none() {
            self.fail(path, format!("expected an array of number arrays, got {v}"));
        }
        parsed
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        Error::Config(vec![Violation {
            path: "<document>".into(),
            reason: e.message().to_string(),
        }])
    })?;
    let mut values = BTreeMap::new();
    flatten("", &doc, &mut values);
    let mut f = Fields {
        values,
        violations: Vec::new(),
    };

    let d = f.int("model.d").unwrap_or(2);
    if !(1..=3).contains(&d) {
        f.fail("model.d", format!("dimension {d} not in {{1, 2, 3}}"));
    }
    let d = d.clamp(1, 3) as usize;
    let n = f.int("model.n").unwrap_or(1);
    if n < 1 {
        f.fail("model.n", format!("component count {n} must be positive"));
    }
    let n = n.max(1) as usize;
    let eps = f.float("model.eps").unwrap_or(0.1);
    if !(eps > 0.0 && eps < 1.0) {
        f.fail("model.eps", format!("ε ∉ (0,1): got {eps}"));
    }
    let a = f.floats("model.a").unwrap_or_else(|| vec![1.0; d]);
    if a.len() != d {
        f.fail("model.a", format!("expected {d} coefficients, got {}", a.len()));
    }
    for (i, &ai) in a.iter().enumerate() {
        if ai <= 0.0 {
            f.fail(&format!("model.a[{}]", i + 1), format!("a_{} = {ai} must be positive", i + 1));
        }
    }
    let ubar = f.float("model.ubar").unwrap_or(0.0);
    let vbar = f.float("model.vbar").unwrap_or(0.0);
    for (key, val) in [("model.ubar", ubar), ("model.vbar", vbar)] {
        if val < 0.0 {
            f.fail(key, format!("equilibrium value {val} must be non-negative"));
        }
    }
    let theorem_mode = f.boolean("model.theorem_mode").unwrap_or(true);
    let flux_kind = f.string("model.flux").unwrap_or_else(|| "zero".into());
    let coeffs = f.floats("model.flux_coeffs");
    let table = f.table("model.flux_table");
    let flux = match flux_kind.as_str() {
        "zero" => Some(FluxSpec::Zero),
        "burgers1d" => Some(FluxSpec::Burgers1d),
        "quadratic" => Some(FluxSpec::Quadratic {
            coeffs: coeffs.unwrap_or_else(|| vec![1.0; d]),
        }),
        "polynomial" => match table {
            Some(table) => Some(FluxSpec::Polynomial { table }),
            None => {
                f.fail("model.flux_table", "polynomial flux needs a coefficient table");
                None
            }
        },
        other => {
            f.fail("model.flux", format!("unknown flux kind {other:?}"));
            None
        }
    };

    let points = f.int("grid.N").unwrap_or(64);
    if points < 8 || !(points as u64).is_power_of_two() {
        f.fail("grid.N", format!("points per axis {points} must be a power of two >= 8"));
    }
    let box_scale = f.float("grid.L").unwrap_or(1.0);
    if box_scale <= 0.0 {
        f.fail("grid.L", format!("box scale {box_scale} must be positive"));
    }

    let dt = f.float("time.dt");
    if let Some(dt) = dt {
        if dt <= 0.0 {
            f.fail("time.dt", format!("time step {dt} must be positive"));
        }
    }
    let t_final = f.float("time.t_final").unwrap_or(1.0);
    if t_final <= 0.0 {
        f.fail("time.t_final", format!("final time {t_final} must be positive"));
    }
    let stride = f.int("time.stride").unwrap_or(1);
    if stride < 1 {
        f.fail("time.stride", format!("stride {stride} must be at least 1"));
    }
    let dt_max = f.float("time.dt_max").unwrap_or(1e-2);
    if dt_max <= 0.0 {
        f.fail("time.dt_max", format!("maximal step {dt_max} must be positive"));
    }

    let resolve_layer = f.boolean("time.resolve_layer").unwrap_or(true);

    let k0 = f.int("lp.k0").unwrap_or(2);
    if k0 < 0 {
        f.fail("lp.k0", format!("k₀ = {k0} must be non-negative"));
    }
    let j_min = f.int("lp.j_min");
    let j_max = f.int("lp.j_max");
    let j_range = match (j_min, j_max) {
        (Some(lo), Some(hi)) => Some((lo as i32, hi as i32)),
        (None, None) => None,
        _ => {
            f.fail("lp", "lp.j_min and lp.j_max must be given together");
            None
        }
    };

    let scheme = match f.string("solver.scheme") {
        None => Scheme::StrangAp,
        Some(s) => Scheme::parse(&s).unwrap_or_else(|_| {
            f.fail("solver.scheme", format!("unknown scheme {s:?} (strang_ap, etd, strang_rh)"));
            Scheme::StrangAp
        }),
    };

    let kind = match f.string("init.kind").as_deref() {
        None | Some("random") => InitKind::Random,
        Some("mode") => InitKind::Mode,
        Some(other) => {
            f.fail("init.kind", format!("unknown initial data kind {other:?}"));
            InitKind::Random
        }
    };
    let seed = f.int("init.seed").unwrap_or(0);
    if seed < 0 {
        f.fail("init.seed", "seed must be non-negative");
    }
    let amplitude = f.float("init.amplitude").unwrap_or(1e-2);
    if amplitude < 0.0 {
        f.fail("init.amplitude", format!("amplitude {amplitude} must be non-negative"));
    }
    let band = f.ints("init.band").unwrap_or_else(|| vec![0, 2]);
    let band = if band.len() == 2 && band[0] <= band[1] {
        (band[0] as i32, band[1] as i32)
    } else {
        f.fail("init.band", "expected [j_lo, j_hi] with j_lo <= j_hi");
        (0, 2)
    };
    let mode = f.ints("init.mode").unwrap_or_else(|| {
        let mut k = vec![0; d];
        k[0] = 1;
        k
    });
    if kind == InitKind::Mode && (mode.len() != d || mode.iter().all(|&k| k == 0)) {
        f.fail("init.mode", format!("expected a nonzero integer wavevector of length {d}"));
    }
    let prepared = match f.string("init.prepared").as_deref() {
        None | Some("well") => Prepared::Well,
        Some("ill") => Prepared::Ill,
        Some(other) => {
            f.fail("init.prepared", format!("expected \"well\" or \"ill\", got {other:?}"));
            Prepared::Well
        }
    };
    let discrepancy = f.float("init.discrepancy").unwrap_or(0.0);

    let output = PathBuf::from(f.string("output.dir").unwrap_or_else(|| "out".into()));

    let sweep_eps = f.floats("sweep.eps").unwrap_or_default();
    for (i, &e) in sweep_eps.iter().enumerate() {
        if !(e > 0.0 && e < 1.0) {
            f.fail(&format!("sweep.eps[{}]", i + 1), format!("ε ∉ (0,1): got {e}"));
        }
    }
    let sigmas = f.floats("sweep.sigmas").unwrap_or_else(|| vec![0.5]);
    for &s in &sigmas {
        if !(s > 0.0 && s < 1.0) {
            f.fail("sweep.sigmas", format!("σ = {s} ∉ (0,1)"));
        }
    }
    let eta = f.float("diag.eta");
    if let Some(e) = eta {
        if e < 0.0 {
            f.fail("diag.eta", "mixing weight must be non-negative");
        }
    }

    let unknown: Vec<String> = f.values.keys().cloned().collect();
    for key in unknown {
        f.fail(&key, "unknown key");
    }

    let cfg = RunConfig {
        model: ModelConfig {
            d,
            n,
            eps,
            a,
            ubar,
            vbar,
            flux: flux.clone().unwrap_or(FluxSpec::Zero),
            theorem_mode,
        },
        points: points.max(0) as usize,
        box_scale,
        time: TimeConfig {
            dt,
            t_final,
            stride: stride.max(1) as usize,
            dt_max,
            resolve_layer,
        },
        k0: k0 as i32,
        j_range,
        scheme,
        init: InitConfig {
            kind,
            seed: seed.max(0) as u64,
            amplitude,
            band,
            mode,
            prepared,
            discrepancy,
        },
        output,
        sweep_eps,
        sigmas,
        eta,
    };
    if f.violations.is_empty() && flux.is_some() {
        if let Err(e) = cfg.params() {
            f.fail("model.flux", e.to_string());
        } else if let Err(e) = cfg.grid().and_then(|g| cfg.filter(&g)) {
            f.fail("lp", e.to_string());
        }
    }
    if f.violations.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(f.violations))
    }
}
