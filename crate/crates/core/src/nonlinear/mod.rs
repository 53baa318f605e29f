//! The quadratic term of the Duhamel equation,
//!
//! ```text
//! B(f, g)(k) = P_k h^3 Σ_l <l, f(k - l)> g(l),
//! ```
//!
//! summed over every lattice point `l` for which both `l` and `k - l` lie in
//! the box. Values outside the box are zero. `B(v) = B(v, v)` is the
//! Navier-Stokes nonlinearity; the asymmetric form is what the power-series
//! coefficients need.
//!
//! Two routes compute the same sum: a zero-padded FFT convolution
//! ([`Method::Fast`]) and a literal double loop ([`Method::Direct`]) that
//! serves as its oracle.

mod fft3;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{sum_squares, VectorField};
use crate::grid::GridSpec;
use crate::scalar::Scalar;

use fft3::{next_smooth, RealFft3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Fast,
    Direct,
    /// `B ≡ 0`; reduces the integrator to the exact heat flow.
    Disabled,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fast" => Ok(Self::Fast),
            "direct" => Ok(Self::Direct),
            "disabled" | "off" => Ok(Self::Disabled),
            other => Err(format!("unknown convolution method `{other}` (fast|direct|disabled)")),
        }
    }
}

/// Side information from one evaluation of the bilinear term.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConvolutionDiagnostics {
    /// Share of the raw (unprojected) convolution energy that landed outside
    /// the box and was dropped. Only the fast path measures it; zero otherwise.
    pub discarded_fraction: f64,
}

/// Immutable, shareable description of how to evaluate `B` on one grid.
pub struct ConvolutionPlan<T: Scalar> {
    grid: GridSpec<T>,
    method: Method,
    offset: [i64; 3],
    fft: Option<RealFft3<T>>,
    /// Wavenumber component `l_c` at every grid point.
    weights: [Vec<T>; 3],
}

impl<T: Scalar> std::fmt::Debug for ConvolutionPlan<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvolutionPlan")
            .field("grid", &self.grid)
            .field("method", &self.method)
            .field("padded", &self.padded())
            .finish()
    }
}

impl<T: Scalar> ConvolutionPlan<T> {
    pub fn new(grid: GridSpec<T>, method: Method) -> Result<Self> {
        let offset = grid.lattice_offset()?;
        let fft = match method {
            Method::Fast => {
                let padded = grid.dims().map(|n| next_smooth(2 * n - 1));
                Some(RealFft3::new(padded))
            }
            _ => None,
        };
        let weights = [0, 1, 2].map(|axis| {
            let mut w = Vec::with_capacity(grid.len());
            for idx in 0..grid.len() {
                w.push(grid.coord(axis, grid.unflat(idx)[axis]));
            }
            w
        });
        Ok(Self { grid, method, offset, fft, weights })
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Padded FFT extents (fast method only); each is at least `2n - 1`.
    pub fn padded(&self) -> Option<[usize; 3]> {
        self.fft.as_ref().map(|f| f.padded)
    }

    /// `B(v) = B(v, v)`.
    pub fn bilinear_term(&self, v: &VectorField<T>) -> Result<VectorField<T>> {
        self.bilinear_pair(v, v)
    }

    pub fn bilinear_pair(&self, f: &VectorField<T>, g: &VectorField<T>) -> Result<VectorField<T>> {
        self.bilinear_pair_with_diagnostics(f, g).map(|(b, _)| b)
    }

    pub fn bilinear_pair_with_diagnostics(
        &self,
        f: &VectorField<T>,
        g: &VectorField<T>,
    ) -> Result<(VectorField<T>, ConvolutionDiagnostics)> {
        for v in [f, g] {
            if !v.grid().same_as(&self.grid) {
                return Err(Error::GridMismatch);
            }
            if !v.all_finite() {
                return Err(Error::NonFinite("bilinear term input"));
            }
        }
        let (mut raw, diag) = match self.method {
            Method::Fast => self.raw_fast(f, g),
            Method::Direct => (self.raw_direct(f, g), ConvolutionDiagnostics::default()),
            Method::Disabled => (VectorField::zeros(self.grid), ConvolutionDiagnostics::default()),
        };
        raw.scale(self.grid.cell_volume());
        raw.leray_project_in_place();
        Ok((raw, diag))
    }

    /// `Σ_c conv(f_c, l_c g_i)` for each output component `i`, via FFT.
    fn raw_fast(&self, f: &VectorField<T>, g: &VectorField<T>) -> (VectorField<T>, ConvolutionDiagnostics) {
        let fft = self.fft.as_ref().expect("fast plan carries an FFT");
        let n = self.grid.dims();
        let [px, py, pz] = fft.padded;
        let f_hat: Vec<_> = (0..3).map(|c| fft.forward(f.component(c), n, None)).collect();

        let mut out = VectorField::zeros(self.grid);
        let (mut kept, mut dropped) = (0.0f64, 0.0f64);
        for i in 0..3 {
            let mut acc = vec![num_complex::Complex::new(T::zero(), T::zero()); fft.spectrum_len()];
            for (c, fc) in f_hat.iter().enumerate() {
                let w_hat = fft.forward(g.component(i), n, Some(&self.weights[c]));
                acc.par_iter_mut().zip(fc.par_iter().zip(w_hat.par_iter())).for_each(|(a, (&x, &y))| *a = *a + x * y);
            }
            let lin = fft.inverse(acc);

            // Output index a reads the linear convolution at a - offset.
            let dst = out.component_mut(i);
            let window = |axis: usize, len: usize| -> Vec<Option<usize>> {
                (0..len)
                    .map(|a| {
                        let m = a as i64 - self.offset[axis];
                        (m >= 0 && m <= 2 * n[axis] as i64 - 2).then_some(m as usize)
                    })
                    .collect()
            };
            let (wx, wy, wz) = (window(0, n[0]), window(1, n[1]), window(2, n[2]));
            let mut inside = 0.0f64;
            for (a, mx) in wx.iter().enumerate() {
                let Some(mx) = mx else { continue };
                for (b, my) in wy.iter().enumerate() {
                    let Some(my) = my else { continue };
                    let src = (mx * py + my) * pz;
                    let base = (a * n[1] + b) * n[2];
                    for (c, mz) in wz.iter().enumerate() {
                        if let Some(mz) = mz {
                            let val = lin[src + mz];
                            dst[base + c] = val;
                            inside += (val * val).to_f64_lossy();
                        }
                    }
                }
            }
            let total = sum_squares(&lin);
            debug_assert!(px * py * pz == lin.len());
            kept += inside;
            dropped += (total - inside).max(0.0);
        }
        let all = kept + dropped;
        let diag = ConvolutionDiagnostics { discarded_fraction: if all > 0.0 { dropped / all } else { 0.0 } };
        (out, diag)
    }

    /// The same sum as [`Self::raw_fast`] by brute force over `(k, l)` pairs.
    fn raw_direct(&self, f: &VectorField<T>, g: &VectorField<T>) -> VectorField<T> {
        let grid = self.grid;
        let n = grid.dims().map(|x| x as i64);
        let o = self.offset;
        let vals: Vec<[T; 3]> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let a = grid.unflat(idx).map(|x| x as i64);
                // k - l = h (a - b) must be the wavenumber of index a - b - o.
                let range = |ax: usize| {
                    let lo = (a[ax] - o[ax] - n[ax] + 1).max(0);
                    let hi = (a[ax] - o[ax]).min(n[ax] - 1);
                    lo..=hi
                };
                let mut acc = [T::zero(); 3];
                for bx in range(0) {
                    for by in range(1) {
                        for bz in range(2) {
                            let c = [a[0] - bx - o[0], a[1] - by - o[1], a[2] - bz - o[2]];
                            let fi = grid.flat(c[0] as usize, c[1] as usize, c[2] as usize);
                            let gi = grid.flat(bx as usize, by as usize, bz as usize);
                            let l = grid.wavenumber_unchecked([bx as usize, by as usize, bz as usize]);
                            let fv = f.get(fi);
                            let inner = l[0] * fv[0] + l[1] * fv[1] + l[2] * fv[2];
                            let gv = g.get(gi);
                            for i in 0..3 {
                                acc[i] = acc[i] + inner * gv[i];
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        let mut out = VectorField::zeros(grid);
        for (idx, v) in vals.into_iter().enumerate() {
            out.set(idx, v);
        }
        out
    }
}

/// `B(v)` evaluated with an existing plan.
pub fn bilinear_term<T: Scalar>(v: &VectorField<T>, plan: &ConvolutionPlan<T>) -> Result<VectorField<T>> {
    plan.bilinear_term(v)
}

/// `B(v)` by literal double summation. Intended for grids up to about 24^3.
pub fn bilinear_term_direct<T: Scalar>(v: &VectorField<T>) -> Result<VectorField<T>> {
    ConvolutionPlan::new(*v.grid(), Method::Direct)?.bilinear_term(v)
}
