//! Zero-padded 3D real FFT used by the fast convolution path.
//!
//! Real arrays are `[px][py][pz]` with z fastest; spectra are
//! `[px][py][pz/2 + 1]`. The forward transform skips lines that are known to
//! be zero padding.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::scalar::Scalar;

/// Smallest `m >= n` whose prime factors are all in {2, 3, 5}.
pub(crate) fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Number of columns gathered per batch for the strided x-axis pass.
const X_BATCH: usize = 256;

pub(crate) struct RealFft3<T: Scalar> {
    pub(crate) padded: [usize; 3],
    hz: usize,
    r2c: Arc<dyn RealToComplex<T>>,
    c2r: Arc<dyn ComplexToReal<T>>,
    fy: Arc<dyn Fft<T>>,
    fy_inv: Arc<dyn Fft<T>>,
    fx: Arc<dyn Fft<T>>,
    fx_inv: Arc<dyn Fft<T>>,
}

impl<T: Scalar> RealFft3<T> {
    pub(crate) fn new(padded: [usize; 3]) -> Self {
        let mut rp = RealFftPlanner::<T>::new();
        let mut cp = FftPlanner::<T>::new();
        Self {
            padded,
            hz: padded[2] / 2 + 1,
            r2c: rp.plan_fft_forward(padded[2]),
            c2r: rp.plan_fft_inverse(padded[2]),
            fy: cp.plan_fft_forward(padded[1]),
            fy_inv: cp.plan_fft_inverse(padded[1]),
            fx: cp.plan_fft_forward(padded[0]),
            fx_inv: cp.plan_fft_inverse(padded[0]),
        }
    }

    pub(crate) fn spectrum_len(&self) -> usize {
        self.padded[0] * self.padded[1] * self.hz
    }

    pub(crate) fn real_len(&self) -> usize {
        self.padded[0] * self.padded[1] * self.padded[2]
    }

    /// Transform of `input` (dims `n`, z fastest) zero-padded to the plan extents.
    ///
    /// `weight`, when given, multiplies the input pointwise before transforming.
    pub(crate) fn forward(&self, input: &[T], n: [usize; 3], weight: Option<&[T]>) -> Vec<Complex<T>> {
        let [_, py, pz] = self.padded;
        let hz = self.hz;
        let mut spec = vec![Complex::new(T::zero(), T::zero()); self.spectrum_len()];

        // z: real-to-complex on the occupied lines only.
        spec.par_chunks_mut(py * hz).take(n[0]).enumerate().for_each_init(
            || (vec![T::zero(); pz], self.r2c.make_scratch_vec()),
            |(line, scratch), (x, plane)| {
                for y in 0..n[1] {
                    let src = (x * n[1] + y) * n[2];
                    let row = &input[src..src + n[2]];
                    match weight {
                        Some(w) => {
                            let wr = &w[src..src + n[2]];
                            for (d, (&a, &b)) in line.iter_mut().zip(row.iter().zip(wr)) {
                                *d = a * b;
                            }
                        }
                        None => line[..n[2]].copy_from_slice(row),
                    }
                    line[n[2]..].fill(T::zero());
                    let out = &mut plane[y * hz..(y + 1) * hz];
                    self.r2c.process_with_scratch(line, out, scratch).expect("real FFT buffer sizes are consistent");
                }
            },
        );

        // y: only planes x < n[0] carry data.
        spec.par_chunks_mut(py * hz).take(n[0]).for_each(|plane| self.pass_y(plane, &*self.fy));

        self.pass_x(&mut spec, &*self.fx);
        spec
    }

    /// Inverse transform normalized by `1/(px py pz)`, over the full padded box.
    pub(crate) fn inverse(&self, mut spec: Vec<Complex<T>>) -> Vec<T> {
        let [_, py, pz] = self.padded;
        let hz = self.hz;
        self.pass_x(&mut spec, &*self.fx_inv);
        spec.par_chunks_mut(py * hz).for_each(|plane| self.pass_y(plane, &*self.fy_inv));

        let scale = T::one() / T::of_usize(self.real_len());
        let mut out = vec![T::zero(); self.real_len()];
        let nyquist = pz % 2 == 0;
        out.par_chunks_mut(pz).zip(spec.par_chunks_mut(hz)).for_each_init(
            || self.c2r.make_scratch_vec(),
            |scratch, (dst, src)| {
                // Round-off leaves tiny imaginary parts on the self-conjugate bins.
                src[0].im = T::zero();
                if nyquist {
                    src[hz - 1].im = T::zero();
                }
                self.c2r.process_with_scratch(src, dst, scratch).expect("real FFT buffer sizes are consistent");
                for x in dst.iter_mut() {
                    *x = *x * scale;
                }
            },
        );
        out
    }

    fn pass_y(&self, plane: &mut [Complex<T>], fft: &dyn Fft<T>) {
        let py = self.padded[1];
        let hz = self.hz;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); py * hz];
        for y in 0..py {
            for kz in 0..hz {
                buf[kz * py + y] = plane[y * hz + kz];
            }
        }
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(&mut buf, &mut scratch);
        for y in 0..py {
            for kz in 0..hz {
                plane[y * hz + kz] = buf[kz * py + y];
            }
        }
    }

    fn pass_x(&self, spec: &mut [Complex<T>], fft: &dyn Fft<T>) {
        let px = self.padded[0];
        let stride = self.padded[1] * self.hz;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); px * X_BATCH];
        let mut col = 0;
        while col < stride {
            let width = X_BATCH.min(stride - col);
            let b = &mut buf[..px * width];
            for x in 0..px {
                let row = &spec[x * stride + col..x * stride + col + width];
                for (c, &v) in row.iter().enumerate() {
                    b[c * px + x] = v;
                }
            }
            b.par_chunks_mut(px).for_each_init(
                || vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()],
                |scratch, line| fft.process_with_scratch(line, scratch),
            );
            for x in 0..px {
                let row = &mut spec[x * stride + col..x * stride + col + width];
                for (c, v) in row.iter_mut().enumerate() {
                    *v = b[c * px + x];
                }
            }
            col += width;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_sizes() {
        assert_eq!(next_smooth(31), 32);
        assert_eq!(next_smooth(127), 128);
        assert_eq!(next_smooth(1023), 1024);
        assert_eq!(next_smooth(47), 48);
        assert_eq!(next_smooth(7), 8);
        assert_eq!(next_smooth(11), 12);
    }

    #[test]
    fn forward_inverse_roundtrip() {
        let n = [3, 4, 5];
        let fft = RealFft3::<f64>::new([6, 8, 10]);
        let input: Vec<f64> = (0..60).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let back = fft.inverse(fft.forward(&input, n, None));
        for x in 0..6 {
            for y in 0..8 {
                for z in 0..10 {
                    let got = back[(x * 8 + y) * 10 + z];
                    let want = if x < 3 && y < 4 && z < 5 { input[(x * 4 + y) * 5 + z] } else { 0.0 };
                    assert!((got - want).abs() < 1e-12, "{x},{y},{z}: {got} vs {want}");
                }
            }
        }
    }
}
