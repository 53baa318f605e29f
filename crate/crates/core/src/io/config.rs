//! TOML run configuration.
//!
//! ```toml
//! [grid]
//! nx = 64
//! ny = 64
//! nz = 512
//! h = 0.2
//! origin = [-6.4, -6.4, 1.0]   # optional; snapped onto the h-lattice
//!
//! [init]
//! R = 5.0
//! D = 3
//! amplitude = 1.0
//! lambda = [ [[..D..], [..], [..]],    # axis 1: components 1..3
//!            [[..], [..], [..]],       # axis 2
//!            [[..], [..], [..]] ]      # axis 3
//!
//! [time]
//! dt = 0.001
//! t_max = 0.06
//!
//! [output]
//! dir = "out"
//! ```

use std::path::PathBuf;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::hermite::{HermiteInitSpec, Lambda};
use crate::integrator::{RunConfig, DEFAULT_BLOWUP_RATIO};
use crate::scalar::Scalar;

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    grid: Option<RawGrid>,
    init: Option<RawInit>,
    time: Option<RawTime>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    nx: Option<i64>,
    ny: Option<i64>,
    nz: Option<i64>,
    h: Option<f64>,
    origin: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawInit {
    #[serde(rename = "R")]
    r: Option<f64>,
    #[serde(rename = "D")]
    d: Option<i64>,
    amplitude: Option<f64>,
    normalize: Option<bool>,
    project: Option<bool>,
    convention: Option<String>,
    seed: Option<u64>,
    lambda: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawTime {
    dt: Option<f64>,
    t_max: Option<f64>,
    blowup_ratio: Option<f64>,
    method: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    trace: Option<String>,
    snapshot_every: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub trace_file: String,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), trace_file: "energy.csv".into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile<T> {
    pub run: RunConfig<T>,
    pub output: OutputSettings,
}

/// 1-based line of `key` inside `[section]`, else of the section header, else 1.
fn line_of(text: &str, section: &str, key: &str) -> usize {
    let mut current = "";
    let mut header = None;
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim();
            if current == section {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some(rest) = l.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return i + 1;
                }
            }
        }
    }
    header.unwrap_or(1)
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn err(&self, section: &str, key: &str, reason: impl Into<String>) -> Error {
        Error::Config { key: format!("{section}.{key}"), line: line_of(self.text, section, key), reason: reason.into() }
    }

    fn need<V>(&self, v: Option<V>, section: &str, key: &str) -> Result<V> {
        v.ok_or_else(|| self.err(section, key, "missing required key"))
    }

    fn positive(&self, v: f64, section: &str, key: &str) -> Result<f64> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(section, key, format!("must be positive and finite, got {v}")))
        }
    }

    fn count(&self, v: i64, min: i64, section: &str, key: &str) -> Result<usize> {
        if v >= min {
            Ok(v as usize)
        } else {
            Err(self.err(section, key, format!("must be at least {min}, got {v}")))
        }
    }
}

/// Parses and validates a configuration, including the `[output]` section.
pub fn parse_config_file<T: Scalar>(text: &str) -> Result<ConfigFile<T>> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1).unwrap_or(1);
        Error::ConfigSyntax(format!("line {line}: {}", e.message()))
    })?;
    let cx = Ctx { text };

    let g = raw.grid.ok_or_else(|| cx.err("grid", "nx", "missing [grid] section"))?;
    let dims = [
        cx.count(cx.need(g.nx, "grid", "nx")?, 2, "grid", "nx")?,
        cx.count(cx.need(g.ny, "grid", "ny")?, 2, "grid", "ny")?,
        cx.count(cx.need(g.nz, "grid", "nz")?, 2, "grid", "nz")?,
    ];
    let h = cx.positive(cx.need(g.h, "grid", "h")?, "grid", "h")?;
    let origin = match g.origin {
        Some(o) if o.len() == 3 && o.iter().all(|x| x.is_finite()) => [o[0], o[1], o[2]],
        Some(o) => return Err(cx.err("grid", "origin", format!("expected 3 finite numbers, got {o:?}"))),
        None => [-h * (dims[0] / 2) as f64, -h * (dims[1] / 2) as f64, 1.0],
    };
    let grid = GridSpec::aligned(dims, T::of(h), origin.map(T::of)).map_err(|e| cx.err("grid", "h", e.to_string()))?;

    let i = raw.init.ok_or_else(|| cx.err("init", "lambda", "missing [init] section"))?;
    let r = cx.positive(cx.need(i.r, "init", "R")?, "init", "R")?;
    let table = cx.need(i.lambda, "init", "lambda")?;
    let table: Vec<Vec<Vec<T>>> =
        table.into_iter().map(|a| a.into_iter().map(|b| b.into_iter().map(T::of).collect()).collect()).collect();
    let lambda = Lambda::from_table(&table).map_err(|e| cx.err("init", "lambda", e.to_string()))?;
    if let Some(d) = i.d {
        if d < 1 || d as usize != lambda.max_order() {
            return Err(cx.err(
                "init",
                "lambda",
                format!("table has D = {} orders but D = {d} was declared", lambda.max_order()),
            ));
        }
    }
    let amplitude = i.amplitude.unwrap_or(1.0);
    if !amplitude.is_finite() {
        return Err(cx.err("init", "amplitude", "must be finite"));
    }
    let mut init = HermiteInitSpec::new(T::of(r), lambda, T::of(amplitude));
    init.normalize_m0 = i.normalize.unwrap_or(true);
    init.project = i.project.unwrap_or(true);
    init.seed = i.seed;
    if let Some(c) = i.convention {
        init.convention = c.parse().map_err(|e: String| cx.err("init", "convention", e))?;
    }
    if amplitude != 0.0 && init.lambda.is_all_zero() {
        return Err(cx.err("init", "lambda", "all coefficients are zero"));
    }

    let tm = raw.time.ok_or_else(|| cx.err("time", "dt", "missing [time] section"))?;
    let dt = cx.positive(cx.need(tm.dt, "time", "dt")?, "time", "dt")?;
    let t_max = cx.positive(cx.need(tm.t_max, "time", "t_max")?, "time", "t_max")?;
    let ratio = tm.blowup_ratio.unwrap_or(DEFAULT_BLOWUP_RATIO);
    if !(ratio > 1.0) {
        return Err(cx.err("time", "blowup_ratio", format!("must exceed 1, got {ratio}")));
    }
    let method = match tm.method {
        Some(m) => m.parse().map_err(|e: String| cx.err("time", "method", e))?,
        None => Default::default(),
    };

    let o = raw.output.unwrap_or_default();
    let snapshot_every = match o.snapshot_every {
        Some(n) => cx.count(n, 0, "output", "snapshot_every")?,
        None => 0,
    };
    let mut output = OutputSettings::default();
    if let Some(d) = o.dir {
        output.dir = PathBuf::from(d);
    }
    if let Some(t) = o.trace {
        output.trace_file = t;
    }

    let mut run = RunConfig::new(grid, init, T::of(dt), T::of(t_max));
    run.blowup_ratio = T::of(ratio);
    run.method = method;
    run.snapshot_every = snapshot_every;
    Ok(ConfigFile { run, output })
}

pub fn parse_config<T: Scalar>(text: &str) -> Result<RunConfig<T>> {
    parse_config_file(text).map(|c| c.run)
}
