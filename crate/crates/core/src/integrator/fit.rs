//! Power-law fit `E(t) ≈ C / (T_cr - t)^α` of the growing tail of a trace.

use crate::error::{Error, Result};
use crate::fields::EnergyTrace;
use crate::scalar::Scalar;

/// Minimum number of monotonically growing samples the fit accepts.
pub const MIN_GROWTH_POINTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupFit<T> {
    pub t_cr: T,
    /// Exponent of `E` (not of `M = sqrt(E)`).
    pub alpha: T,
    pub window: (T, T),
    /// RMS residual of the log-log regression.
    pub residual: T,
    pub points: usize,
}

/// Least squares of `ln E = ln C - α ln(T - t)` for a fixed `T`; returns `(α, ln C, rms)`.
fn regress(ts: &[f64], log_e: &[f64], t_cr: f64) -> (f64, f64, f64) {
    let n = ts.len() as f64;
    let xs: Vec<f64> = ts.iter().map(|&t| (t_cr - t).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = log_e.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(log_e) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ss: f64 = xs.iter().zip(log_e).map(|(x, y)| (y - icept - slope * x).powi(2)).sum();
    (-slope, icept, (ss / n).sqrt())
}

/// Fits the trailing growth window.
///
/// The window is the last `tail_fraction` of the trace, cut further to its
/// trailing run of strictly increasing energy. `T_cr` is found by a log-spaced
/// scan of the gap `T_cr - t_hi` followed by golden-section refinement of the
/// RMS residual.
pub fn fit_blowup<T: Scalar>(trace: &EnergyTrace<T>, tail_fraction: f64) -> Result<BlowupFit<T>> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "tail_fraction",
            reason: format!("must lie in (0, 1], got {tail_fraction}"),
        });
    }
    let recs = trace.records();
    let tail = ((recs.len() as f64 * tail_fraction).ceil() as usize).min(recs.len());
    let tail = &recs[recs.len() - tail..];

    let mut start = tail.len().saturating_sub(1);
    while start > 0 && tail[start - 1].energy < tail[start].energy && tail[start - 1].energy > T::zero() {
        start -= 1;
    }
    let window = &tail[start..];
    if window.len() < MIN_GROWTH_POINTS || window.iter().any(|r| !(r.energy > T::zero())) {
        return Err(Error::NoBlowupSignature(format!(
            "{} growing points in the tail, need at least {MIN_GROWTH_POINTS}",
            window.len()
        )));
    }

    let ts: Vec<f64> = window.iter().map(|r| r.t.to_f64_lossy()).collect();
    let log_e: Vec<f64> = window.iter().map(|r| r.energy.to_f64_lossy().ln()).collect();
    if log_e.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("energy trace"));
    }
    let (t_lo, t_hi) = (ts[0], *ts.last().unwrap());
    let width = t_hi - t_lo;

    let rms_at = |log_gap: f64| regress(&ts, &log_e, t_hi + log_gap.exp()).2;
    let (lo, hi) = ((width * 1e-7).ln(), (width * 10.0).ln());
    const SCAN: usize = 200;
    let grid: Vec<f64> = (0..=SCAN).map(|i| lo + (hi - lo) * i as f64 / SCAN as f64).collect();
    let best = (0..=SCAN).min_by(|&a, &b| rms_at(grid[a]).total_cmp(&rms_at(grid[b]))).unwrap();
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(SCAN)]);

    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (rms_at(c), rms_at(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = rms_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = rms_at(d);
        }
    }
    let t_cr = t_hi + (0.5 * (a + b)).exp();
    let (alpha, _, residual) = regress(&ts, &log_e, t_cr);
    if !alpha.is_finite() {
        return Err(Error::NonFinite("fitted exponent"));
    }
    Ok(BlowupFit {
        t_cr: T::of(t_cr),
        alpha: T::of(alpha),
        window: (T::of(t_lo), T::of(t_hi)),
        residual: T::of(residual),
        points: window.len(),
    })
}
