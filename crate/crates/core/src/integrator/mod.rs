//! Exponential Euler integration of the Duhamel equation
//!
//! ```text
//! v(t + dt) = e^{-dt |k|^2} (v(t) + dt B(v(t)))
//! ```
//!
//! with blow-up detection, amplitude sweeps and power-law fitting of the
//! energy growth.

mod fit;

pub use fit::{fit_blowup, BlowupFit, MIN_GROWTH_POINTS};

use crate::error::{Error, Result};
use crate::fields::{EnergyTrace, VectorField};
use crate::grid::GridSpec;
use crate::hermite::{build_initial_data, HermiteInitSpec};
use crate::nonlinear::{ConvolutionDiagnostics, ConvolutionPlan, Method};
use crate::scalar::Scalar;

pub const DEFAULT_BLOWUP_RATIO: f64 = 1e4;

/// `e^{-t |k|^2}` at every grid point.
pub fn heat_factor<T: Scalar>(grid: &GridSpec<T>, t: T) -> Vec<T> {
    grid.k_squared().into_iter().map(|kk| (-t * kk).exp()).collect()
}

/// Exact heat flow `e^{-t |k|^2} v(k)`.
pub fn heat<T: Scalar>(v: &VectorField<T>, t: T) -> VectorField<T> {
    let mut out = v.clone();
    out.mul_pointwise(&heat_factor(v.grid(), t));
    out
}

/// One integrator step with a fixed `dt`; caches the heat factor.
pub struct Stepper<T: Scalar> {
    plan: ConvolutionPlan<T>,
    dt: T,
    decay: Vec<T>,
}

impl<T: Scalar> Stepper<T> {
    pub fn new(plan: ConvolutionPlan<T>, dt: T) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidParameter { name: "dt", reason: format!("must be positive, got {dt}") });
        }
        let decay = heat_factor(plan.grid(), dt);
        Ok(Self { plan, dt, decay })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn plan(&self) -> &ConvolutionPlan<T> {
        &self.plan
    }

    /// Advances `v` from time `t` (used only for error reporting).
    pub fn step(&self, v: &VectorField<T>, t: T) -> Result<(VectorField<T>, ConvolutionDiagnostics)> {
        let overflow = || Error::Overflow { t: (t + self.dt).to_f64_lossy() };
        if !v.all_finite() {
            return Err(overflow());
        }
        let (b, diag) = self.plan.bilinear_pair_with_diagnostics(v, v)?;
        let mut next = v.clone();
        next.axpy(self.dt, &b)?;
        next.mul_pointwise(&self.decay);
        if !next.all_finite() || !next.energy().is_finite() {
            return Err(overflow());
        }
        Ok((next, diag))
    }
}

/// Single step `v' = e^{-dt|k|^2} (v + dt B(v))`.
pub fn step<T: Scalar>(v: &VectorField<T>, dt: T, plan: &ConvolutionPlan<T>) -> Result<VectorField<T>> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidParameter { name: "dt", reason: format!("must be positive, got {dt}") });
    }
    let b = plan.bilinear_term(v)?;
    let mut next = v.clone();
    next.axpy(dt, &b)?;
    next.mul_pointwise(&heat_factor(v.grid(), dt));
    if !next.all_finite() {
        return Err(Error::Overflow { t: dt.to_f64_lossy() });
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub grid: GridSpec<T>,
    pub init: HermiteInitSpec<T>,
    pub dt: T,
    pub t_max: T,
    /// Snapshot cadence in steps; 0 writes only the final state.
    pub snapshot_every: usize,
    /// Stop once `M` exceeds this multiple of the smallest `M` seen so far.
    pub blowup_ratio: T,
    pub method: Method,
}

impl<T: Scalar> RunConfig<T> {
    pub fn new(grid: GridSpec<T>, init: HermiteInitSpec<T>, dt: T, t_max: T) -> Self {
        Self {
            grid,
            init,
            dt,
            t_max,
            snapshot_every: 0,
            blowup_ratio: T::of(DEFAULT_BLOWUP_RATIO),
            method: Method::Fast,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| Err(Error::InvalidParameter { name, reason: reason.into() });
        if !(self.dt > T::zero()) {
            return bad("dt", "must be positive");
        }
        if !(self.t_max > T::zero()) {
            return bad("t_max", "must be positive");
        }
        if !(self.blowup_ratio > T::one()) {
            return bad("blowup_ratio", "must exceed 1");
        }
        self.init.validate()
    }

    /// Number of steps needed to reach `t_max`.
    pub fn steps(&self) -> usize {
        (self.t_max / self.dt - T::of(1e-9)).ceil().to_usize().unwrap_or(0)
    }

    pub fn with_amplitude(&self, amplitude: T) -> Self {
        let mut c = self.clone();
        c.init.amplitude = amplitude;
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached `t_max`.
    Horizon,
    /// `M` grew past `blowup_ratio * min M`.
    Threshold,
    /// A non-finite value appeared; the last finite state is kept.
    Overflow,
}

impl Termination {
    pub fn is_blowup(self) -> bool {
        !matches!(self, Self::Horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics<T> {
    pub t: T,
    pub discarded_fraction: f64,
    pub boundary_fraction: T,
}

#[derive(Debug, Clone)]
pub struct RunOutcome<T> {
    pub trace: EnergyTrace<T>,
    pub termination: Termination,
    pub final_t: T,
    pub final_field: VectorField<T>,
    pub steps: usize,
    pub diagnostics: Vec<StepDiagnostics<T>>,
}

/// A state handed to the snapshot sink.
pub struct Snapshot<'a, T> {
    pub step: usize,
    pub t: T,
    pub field: &'a VectorField<T>,
    pub is_final: bool,
}

/// Builds the initial field from `cfg.init` and integrates it.
pub fn run<T: Scalar>(
    cfg: &RunConfig<T>,
    sink: &mut dyn FnMut(Snapshot<'_, T>) -> Result<()>,
) -> Result<RunOutcome<T>> {
    cfg.validate()?;
    let v0 = build_initial_data(&cfg.init, &cfg.grid)?;
    let stepper = Stepper::new(ConvolutionPlan::new(cfg.grid, cfg.method)?, cfg.dt)?;
    evolve(v0, &stepper, cfg.steps(), cfg.blowup_ratio, cfg.snapshot_every, sink)
}

/// Integrates `v0` for up to `steps` steps, stopping early on blow-up.
pub fn evolve<T: Scalar>(
    v0: VectorField<T>,
    stepper: &Stepper<T>,
    steps: usize,
    blowup_ratio: T,
    snapshot_every: usize,
    sink: &mut dyn FnMut(Snapshot<'_, T>) -> Result<()>,
) -> Result<RunOutcome<T>> {
    let dt = stepper.dt();
    let mut trace = EnergyTrace::new();
    let mut diagnostics = Vec::new();
    let mut v = v0;
    let mut t = T::zero();
    let e0 = v.energy();
    trace.push(t, e0)?;
    let mut m_min = e0.sqrt();
    if snapshot_every > 0 {
        sink(Snapshot { step: 0, t, field: &v, is_final: false })?;
    }

    let mut termination = Termination::Horizon;
    let mut done = 0;
    for n in 1..=steps {
        let (next, diag) = match stepper.step(&v, t) {
            Ok(r) => r,
            Err(Error::Overflow { .. }) => {
                termination = Termination::Overflow;
                break;
            }
            Err(e) => return Err(e),
        };
        v = next;
        t = dt * T::of_usize(n);
        done = n;
        let e = v.energy();
        trace.push(t, e)?;
        diagnostics.push(StepDiagnostics {
            t,
            discarded_fraction: diag.discarded_fraction,
            boundary_fraction: v.boundary_energy_fraction(),
        });
        let m = e.sqrt();
        m_min = m_min.min(m);
        if m_min > T::zero() && m > blowup_ratio * m_min {
            termination = Termination::Threshold;
            break;
        }
        if snapshot_every > 0 && n % snapshot_every == 0 && n != steps {
            sink(Snapshot { step: n, t, field: &v, is_final: false })?;
        }
    }
    sink(Snapshot { step: done, t, field: &v, is_final: true })?;
    Ok(RunOutcome { trace, termination, final_t: t, final_field: v, steps: done, diagnostics })
}

/// Discards every snapshot.
pub fn no_snapshots<T>(_: Snapshot<'_, T>) -> Result<()> {
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Decay,
    Blowup,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Decay => "decay",
            Self::Blowup => "blowup",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub amplitude: T,
    pub outcome: Outcome,
    /// Fitted blow-up time, when the growth tail admits a fit.
    pub t_cr: Option<T>,
    /// Time at which the run stopped.
    pub t_end: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectOptions {
    /// Stop once `hi / lo - 1` is at most this.
    pub rel_width: f64,
    pub max_steps: usize,
}

impl Default for BisectOptions {
    fn default() -> Self {
        Self { rel_width: 0.05, max_steps: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport<T> {
    pub rows: Vec<SweepRow<T>>,
    /// `(largest decaying, smallest blowing)` amplitude after bisection.
    pub bracket: Option<(T, T)>,
}

/// Share of the trace, by record count, searched for the trailing growth run.
pub const DEFAULT_FIT_TAIL: f64 = 1.0;

/// Runs `base` at one amplitude and classifies the result.
pub fn classify<T: Scalar>(
    base: &RunConfig<T>,
    amplitude: T,
    on_run: &mut dyn FnMut(&SweepRow<T>, &RunOutcome<T>) -> Result<()>,
) -> Result<SweepRow<T>> {
    let out = run(&base.with_amplitude(amplitude), &mut no_snapshots)?;
    let outcome = if out.termination.is_blowup() { Outcome::Blowup } else { Outcome::Decay };
    let t_cr = match outcome {
        Outcome::Blowup => fit_blowup(&out.trace, DEFAULT_FIT_TAIL).ok().map(|f| f.t_cr),
        Outcome::Decay => None,
    };
    let row = SweepRow { amplitude, outcome, t_cr, t_end: out.final_t };
    on_run(&row, &out)?;
    Ok(row)
}

/// Classifies each amplitude, then optionally bisects the decay/blow-up threshold.
///
/// Bisection is geometric between the largest decaying amplitude and the
/// smallest blowing one that exceeds it.
pub fn sweep<T: Scalar>(
    base: &RunConfig<T>,
    amplitudes: &[T],
    bisect: Option<BisectOptions>,
    on_run: &mut dyn FnMut(&SweepRow<T>, &RunOutcome<T>) -> Result<()>,
) -> Result<SweepReport<T>> {
    if amplitudes.iter().any(|a| !(*a > T::zero())) {
        return Err(Error::InvalidParameter { name: "amplitudes", reason: "must be positive".into() });
    }
    if amplitudes.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter { name: "amplitudes", reason: "must be sorted".into() });
    }
    let mut rows = Vec::with_capacity(amplitudes.len());
    for &a in amplitudes {
        rows.push(classify(base, a, on_run)?);
    }

    let mut bracket = None;
    if let Some(opts) = bisect {
        let lo = rows
            .iter()
            .filter(|r| r.outcome == Outcome::Decay)
            .map(|r| r.amplitude)
            .fold(None, |m: Option<T>, a| Some(m.map_or(a, |m| m.max(a))));
        if let Some(mut lo) = lo {
            let hi = rows
                .iter()
                .filter(|r| r.outcome == Outcome::Blowup && r.amplitude > lo)
                .map(|r| r.amplitude)
                .fold(None, |m: Option<T>, a| Some(m.map_or(a, |m| m.min(a))));
            if let Some(mut hi) = hi {
                let (bracketed, b_rows) = bisect_threshold(base, lo, hi, opts, on_run)?;
                (lo, hi) = bracketed;
                rows.extend(b_rows);
                bracket = Some((lo, hi));
            }
        }
    }
    Ok(SweepReport { rows, bracket })
}

/// Geometric bisection of a `(decay, blowup)` amplitude bracket.
pub fn bisect_threshold<T: Scalar>(
    base: &RunConfig<T>,
    lo: T,
    hi: T,
    opts: BisectOptions,
    on_run: &mut dyn FnMut(&SweepRow<T>, &RunOutcome<T>) -> Result<()>,
) -> Result<((T, T), Vec<SweepRow<T>>)> {
    let mut rows = Vec::new();
    let bracket = bisect_with(lo, hi, opts, |a| {
        let row = classify(base, a, on_run)?;
        let outcome = row.outcome;
        rows.push(row);
        Ok(outcome)
    })?;
    Ok((bracket, rows))
}

/// Bisection driver over an arbitrary classifier.
pub fn bisect_with<T: Scalar>(
    mut lo: T,
    mut hi: T,
    opts: BisectOptions,
    mut classify: impl FnMut(T) -> Result<Outcome>,
) -> Result<(T, T)> {
    for _ in 0..opts.max_steps {
        if (hi / lo - T::one()).to_f64_lossy() <= opts.rel_width {
            break;
        }
        let mid = (lo * hi).sqrt();
        match classify(mid)? {
            Outcome::Decay => lo = mid,
            Outcome::Blowup => hi = mid,
        }
    }
    Ok((lo, hi))
}
