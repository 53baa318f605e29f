use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use tornado::fields::DEFAULT_CLOUD_WIDTH;
use tornado::integrator::{self, BisectOptions, RunOutcome, SweepRow, Termination};
use tornado::io::{self, Axis, ConfigFile, SliceSelector};
use tornado::series::{DEFAULT_P_MAX, DEFAULT_SAMPLES};
use tornado::{build_initial_data, detect_clouds, fit_blowup, random_lambda, ConvolutionPlan, Series};

#[derive(Parser)]
#[command(name = "tornado", version, about = "Fourier-space Navier-Stokes blow-up experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configuration, writing the energy trace and snapshots.
    Run {
        config: PathBuf,
        /// Overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a geometric range of amplitudes as decay or blow-up.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        amin: f64,
        #[arg(long)]
        amax: f64,
        /// Number of amplitudes, log-spaced between amin and amax.
        #[arg(long)]
        steps: usize,
        /// Refine the decay/blow-up threshold by geometric bisection.
        #[arg(long)]
        bisect: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the truncated amplitude series against the integrator.
    SeriesCheck {
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_P_MAX)]
        pmax: usize,
        /// Comma-separated amplitudes.
        #[arg(long, value_delimiter = ',', required = true)]
        amplitudes: Vec<f64>,
        /// Time-quadrature intervals on [0, t].
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        /// Comparison time; defaults to `[time] t_max`.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Fit E(t) ~ (T_cr - t)^-alpha to the growth tail of an energy trace.
    Fit {
        trace: PathBuf,
        /// Share of the trace, by record count, searched for the trailing growth run.
        #[arg(long, default_value_t = integrator::DEFAULT_FIT_TAIL)]
        tail: f64,
    },
    /// Export |v| over a plane or an aggregated index range.
    Slice {
        snapshot: PathBuf,
        #[arg(long)]
        axis: Axis,
        #[arg(long, conflicts_with = "range", required_unless_present = "range")]
        at: Option<usize>,
        /// Half-open index range `lo:hi`.
        #[arg(long)]
        range: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a seeded random λ table as TOML for the `[init]` section.
    Lambda {
        #[arg(long = "D")]
        d: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Report the z-band ("cloud") decomposition of a snapshot.
    Clouds {
        snapshot: PathBuf,
        #[arg(long = "R")]
        r: f64,
        #[arg(long)]
        pmax: usize,
        /// Band half-width is `width * sqrt(pR)`.
        #[arg(long, default_value_t = DEFAULT_CLOUD_WIDTH)]
        width: f64,
    },
}

fn main() -> ExitCode {
    tornado::init_threads();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Command::Run { config, out } => cmd_run(&config, out),
        Command::Sweep { config, amin, amax, steps, bisect, out } => cmd_sweep(&config, amin, amax, steps, bisect, out),
        Command::SeriesCheck { config, pmax, amplitudes, samples, t } => {
            cmd_series_check(&config, pmax, &amplitudes, samples, t)
        }
        Command::Fit { trace, tail } => cmd_fit(&trace, tail),
        Command::Slice { snapshot, axis, at, range, out } => cmd_slice(&snapshot, axis, at, range, out),
        Command::Clouds { snapshot, r, pmax, width } => cmd_clouds(&snapshot, r, pmax, width),
        Command::Lambda { d, seed } => cmd_lambda(d, seed),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &Path) -> Result<ConfigFile<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    io::parse_config_file(&text).with_context(|| format!("in {}", path.display()))
}

fn termination_label(t: Termination) -> &'static str {
    match t {
        Termination::Horizon => "horizon",
        Termination::Threshold => "blowup-threshold",
        Termination::Overflow => "blowup-overflow",
    }
}

fn summarize(out: &RunOutcome<f64>) {
    let min = out.trace.minimum().expect("trace has t = 0");
    println!("termination: {}", termination_label(out.termination));
    println!("steps: {}  final t: {}", out.steps, out.final_t);
    println!("min mynorm: {} at t = {}", min.mynorm, min.t);
    if let Some(last) = out.trace.last() {
        println!("final mynorm: {}", last.mynorm);
    }
    let worst = out.diagnostics.iter().map(|d| d.boundary_fraction).fold(0.0, f64::max);
    println!("max boundary energy fraction: {worst:.3e}");
    if out.termination.is_blowup() {
        match fit_blowup(&out.trace, integrator::DEFAULT_FIT_TAIL) {
            Ok(f) => println!("fit: T_cr = {:.6}  alpha = {:.3}  ({} points)", f.t_cr, f.alpha, f.points),
            Err(e) => println!("fit: unavailable ({e})"),
        }
    }
}

fn cmd_run(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = load(config)?;
    let dir = out.unwrap_or(cfg.output.dir.clone());
    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir).with_context(|| format!("creating {}", snap_dir.display()))?;
    let outcome = integrator::run(&cfg.run, &mut |s| {
        let path = if s.is_final { dir.join("final.bin") } else { snap_dir.join(format!("step_{:07}.bin", s.step)) };
        io::write_snapshot(s.field, s.t, path)
    })?;
    let trace_path = dir.join(&cfg.output.trace_file);
    io::write_energy_csv(&outcome.trace, &trace_path)?;
    println!("trace: {}", trace_path.display());
    summarize(&outcome);
    Ok(())
}

fn geometric(amin: f64, amax: f64, steps: usize) -> Result<Vec<f64>> {
    if !(amin > 0.0 && amax >= amin) || steps == 0 {
        bail!("need 0 < amin <= amax and steps >= 1");
    }
    if steps == 1 {
        return Ok(vec![amin]);
    }
    let ratio = (amax / amin).ln() / (steps - 1) as f64;
    Ok((0..steps).map(|i| if i + 1 == steps { amax } else { amin * (ratio * i as f64).exp() }).collect())
}

fn cmd_sweep(config: &Path, amin: f64, amax: f64, steps: usize, bisect: bool, out: Option<PathBuf>) -> Result<()> {
    let cfg = load(config)?;
    let dir = out.unwrap_or(cfg.output.dir.clone()).join("sweep");
    fs::create_dir_all(&dir)?;
    let amps = geometric(amin, amax, steps)?;
    println!("amplitude,outcome,t_cr,t_end");
    let mut on_run = |row: &SweepRow<f64>, run: &RunOutcome<f64>| -> tornado::Result<()> {
        let sub = dir.join(format!("A_{:.6e}", row.amplitude));
        fs::create_dir_all(&sub)?;
        io::write_energy_csv(&run.trace, sub.join(&cfg.output.trace_file))?;
        println!("{}", sweep_line(row));
        Ok(())
    };
    let report = integrator::sweep(&cfg.run, &amps, bisect.then(BisectOptions::default), &mut on_run)?;
    let mut csv = String::from("amplitude,outcome,t_cr,t_end\n");
    for row in &report.rows {
        csv.push_str(&sweep_line(row));
        csv.push('\n');
    }
    fs::write(dir.join("sweep.csv"), csv)?;
    if let Some((lo, hi)) = report.bracket {
        println!("threshold bracket: [{lo}, {hi}]");
    } else if bisect {
        println!("threshold bracket: none (no decay/blow-up transition in range)");
    }
    Ok(())
}

fn sweep_line(row: &SweepRow<f64>) -> String {
    let t_cr = row.t_cr.map(|t| t.to_string()).unwrap_or_default();
    format!("{},{},{},{}", row.amplitude, row.outcome, t_cr, row.t_end)
}

fn cmd_series_check(config: &Path, pmax: usize, amplitudes: &[f64], samples: usize, t: Option<f64>) -> Result<()> {
    let cfg = load(config)?.run;
    let t = t.unwrap_or(cfg.t_max);
    let steps = (t / cfg.dt).round();
    if steps < 1.0 || (steps * cfg.dt - t).abs() > 1e-9 * t {
        bail!("t = {t} is not a whole number of steps of dt = {}", cfg.dt);
    }
    if pmax < 1 {
        bail!("--pmax must be at least 1");
    }
    // The configured amplitude scales c0; each `A` multiplies it again.
    let c0 = build_initial_data(&cfg.init, &cfg.grid)?;
    let plan = ConvolutionPlan::new(cfg.grid, cfg.method)?;
    let series = Series::build(c0, t, samples, pmax, &plan)?;

    println!("p,center_z,radius99");
    for row in series.support_report(cfg.init.r) {
        println!("{},{},{}", row.p, row.center_z, row.radius99);
    }
    println!("amplitude,discrepancy,relative_discrepancy,ratio_to_previous");
    let mut run_cfg = cfg.clone();
    run_cfg.t_max = t;
    run_cfg.blowup_ratio = f64::INFINITY;
    let mut prev: Option<f64> = None;
    for &a in amplitudes {
        let out = integrator::run(&run_cfg.with_amplitude(a * cfg.init.amplitude), &mut integrator::no_snapshots)?;
        if out.termination != Termination::Horizon {
            bail!("integrator did not reach t = {t} at amplitude {a}");
        }
        let approx = series.series_solution(a, t, pmax)?;
        let err = approx.distance(&out.final_field)?;
        let rel = err / out.final_field.norm();
        let ratio = prev.map(|p| (p / err).to_string()).unwrap_or_default();
        println!("{a},{err},{rel},{ratio}");
        prev = Some(err);
    }
    Ok(())
}

fn cmd_fit(trace: &Path, tail: f64) -> Result<()> {
    let trace = io::read_energy_csv::<f64>(trace)?;
    let f = fit_blowup(&trace, tail)?;
    println!("t_cr={}", f.t_cr);
    println!("alpha={}", f.alpha);
    println!("window=[{}, {}]", f.window.0, f.window.1);
    println!("points={}", f.points);
    println!("residual={}", f.residual);
    Ok(())
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let (lo, hi) = s.split_once(':').context("range must look like lo:hi")?;
    Ok((lo.trim().parse()?, hi.trim().parse()?))
}

fn cmd_slice(
    snapshot: &Path,
    axis: Axis,
    at: Option<usize>,
    range: Option<String>,
    out: Option<PathBuf>,
) -> Result<()> {
    let (v, t) = io::read_snapshot(snapshot)?;
    let (selector, tag) = match (at, range) {
        (Some(i), _) => (SliceSelector::At(i), format!("{i}")),
        (None, Some(r)) => {
            let (lo, hi) = parse_range(&r)?;
            (SliceSelector::Range(lo, hi), format!("{lo}-{hi}"))
        }
        (None, None) => bail!("one of --at or --range is required"),
    };
    let out = out.unwrap_or_else(|| {
        let stem = snapshot.file_stem().and_then(|s| s.to_str()).unwrap_or("snapshot");
        snapshot.with_file_name(format!("{stem}.{axis:?}{tag}.csv").to_lowercase())
    });
    let paths = io::export_slice(&v, axis, selector, &out)?;
    println!("t = {t}");
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_clouds(snapshot: &Path, r: f64, pmax: usize, width: f64) -> Result<()> {
    let (v, t) = io::read_snapshot(snapshot)?;
    let clouds = detect_clouds(&v.z_marginal(), v.grid(), r, pmax, width)?;
    println!("# t = {t}");
    println!("p,z_center,mass_fraction,contrast");
    for c in clouds {
        println!("{},{},{},{}", c.p, c.z_center, c.mass_fraction, c.contrast);
    }
    Ok(())
}

fn cmd_lambda(d: usize, seed: u64) -> Result<()> {
    if d == 0 {
        bail!("--D must be at least 1");
    }
    print!("{}", lambda_toml(&random_lambda::<f64>(d, seed).to_table(), d, seed));
    Ok(())
}

fn lambda_toml(table: &[Vec<Vec<f64>>], d: usize, seed: u64) -> String {
    let row = |v: &Vec<f64>| format!("[{}]", v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", "));
    let axes: Vec<String> =
        table.iter().map(|axis| format!("  [{}]", axis.iter().map(row).collect::<Vec<_>>().join(",\n   "))).collect();
    format!("D = {d}\nseed = {seed}\nlambda = [\n{}\n]\n", axes.join(",\n"))
}
