//! Amplitude power series of the solution,
//!
//! ```text
//! v_A(k, t) = A e^{-t|k|^2} c0(k) + ∫_0^t e^{-(t-s)|k|^2} Σ_{p>1} A^p h_p(k, s) ds,
//! ```
//!
//! used as an independent oracle for the time integrator.
//!
//! With `u_1(s) = e^{-s|k|^2} c0` and `u_p(s) = ∫_0^s e^{-(s-σ)|k|^2} h_p(σ) dσ`,
//! the recurrence for the coefficients is
//!
//! ```text
//! h_p(s) = Σ_{p1 + p2 = p} B(u_{p1}(s), u_{p2}(s)),   p1, p2 >= 1,
//! ```
//!
//! where `B(f, g)(k) = P_k h^3 Σ_l <l, f(k-l)> g(l)`. For `p = 2` this is the
//! Gaussian-weighted self-interaction of `c0`; for `p >= 3` the `p1 = 1` and
//! `p2 = 1` terms are the two single time integrals and the remaining terms the
//! double integrals over independent `s1, s2 ∈ [0, s]`. Because `B` is
//! bilinear, applying the trapezoidal rule to `u_p` before forming `B` gives
//! exactly the nested quadrature of the recurrence on the same samples.

use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::integrator::heat;
use crate::nonlinear::ConvolutionPlan;
use crate::scalar::Scalar;

pub const DEFAULT_SAMPLES: usize = 32;
pub const DEFAULT_P_MAX: usize = 3;

/// `h_2(k, s)` evaluated directly.
pub fn compute_h2<T: Scalar>(c0: &VectorField<T>, s: T, plan: &ConvolutionPlan<T>) -> Result<VectorField<T>> {
    if s < T::zero() {
        return Err(Error::InvalidParameter { name: "s", reason: "must be non-negative".into() });
    }
    let w = heat(c0, s);
    plan.bilinear_pair(&w, &w)
}

/// Coefficients `h_p(·, s_q)` on uniform samples `s_q = q t / Q`.
#[derive(Debug, Clone)]
pub struct SeriesSet<T> {
    c0: VectorField<T>,
    times: Vec<T>,
    /// `h[p - 2][q]`.
    h: Vec<Vec<VectorField<T>>>,
    /// `u[p - 1][q]`, with `u_1(s) = e^{-s|k|^2} c0`.
    u: Vec<Vec<VectorField<T>>>,
}

impl<T: Scalar> SeriesSet<T> {
    /// Sets up `Q + 1` samples on `[0, t_end]`; no coefficients are computed yet.
    pub fn new(c0: VectorField<T>, t_end: T, samples: usize) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidParameter { name: "samples", reason: "need at least one interval".into() });
        }
        if !(t_end > T::zero()) {
            return Err(Error::InvalidParameter { name: "t_end", reason: "must be positive".into() });
        }
        let times: Vec<T> = (0..=samples).map(|q| t_end * T::of_usize(q) / T::of_usize(samples)).collect();
        let u1 = times.iter().map(|&s| heat(&c0, s)).collect();
        Ok(Self { c0, times, h: Vec::new(), u: vec![u1] })
    }

    /// [`Self::new`] followed by every coefficient up to `p_max`.
    pub fn build(
        c0: VectorField<T>,
        t_end: T,
        samples: usize,
        p_max: usize,
        plan: &ConvolutionPlan<T>,
    ) -> Result<Self> {
        let mut set = Self::new(c0, t_end, samples)?;
        for p in 2..=p_max {
            set.compute_hp(p, plan)?;
        }
        Ok(set)
    }

    pub fn c0(&self) -> &VectorField<T> {
        &self.c0
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    /// Highest coefficient index available.
    pub fn p_max(&self) -> usize {
        self.h.len() + 1
    }

    /// `h_p` at every sample, if computed.
    pub fn coefficient(&self, p: usize) -> Option<&[VectorField<T>]> {
        p.checked_sub(2).and_then(|i| self.h.get(i)).map(Vec::as_slice)
    }

    /// Computes `h_p` on every sample; needs `h_2..h_{p-1}` already present.
    pub fn compute_hp(&mut self, p: usize, plan: &ConvolutionPlan<T>) -> Result<&[VectorField<T>]> {
        if p < 2 {
            return Err(Error::InvalidParameter { name: "p", reason: "coefficients start at p = 2".into() });
        }
        if self.p_max() + 1 < p {
            return Err(Error::MissingCoefficient(p));
        }
        if p <= self.p_max() {
            return Ok(self.coefficient(p).expect("computed"));
        }

        let mut hp = Vec::with_capacity(self.times.len());
        for q in 0..self.times.len() {
            let mut acc = VectorField::zeros(*self.c0.grid());
            for p1 in 1..p {
                let p2 = p - p1;
                let term = plan.bilinear_pair(&self.u[p1 - 1][q], &self.u[p2 - 1][q])?;
                acc.axpy(T::one(), &term)?;
            }
            acc.leray_project_in_place();
            hp.push(acc);
        }
        let up = self.accumulate(&hp);
        self.h.push(hp);
        self.u.push(up);
        Ok(self.h.last().expect("just pushed"))
    }

    /// Trapezoidal `∫_0^{s_q} e^{-(s_q - σ)|k|^2} f(σ) dσ` for every sample `q`.
    fn accumulate(&self, f: &[VectorField<T>]) -> Vec<VectorField<T>> {
        let ds = if self.times.len() > 1 { self.times[1] - self.times[0] } else { T::zero() };
        let half = T::of(0.5);
        (0..self.times.len())
            .map(|q| {
                let mut acc = VectorField::zeros(*self.c0.grid());
                for j in 0..=q {
                    if q == 0 {
                        break;
                    }
                    let w = if j == 0 || j == q { half * ds } else { ds };
                    let damped = heat(&f[j], self.times[q] - self.times[j]);
                    acc.axpy(w, &damped).expect("shared grid");
                }
                acc
            })
            .collect()
    }

    /// Index of the sample equal to `t`, within rounding.
    fn sample_index(&self, t: T) -> Result<usize> {
        let end = *self.times.last().expect("non-empty");
        let tol = T::of(1e-9) * end;
        self.times.iter().position(|&s| (s - t).abs() <= tol).ok_or_else(|| Error::InvalidParameter {
            name: "t",
            reason: format!("{t} is not one of the series time samples on [0, {end}]"),
        })
    }

    /// Truncated series `A u_1(t) + Σ_{p=2}^{P} A^p u_p(t)` at a sampled time.
    pub fn series_solution(&self, amplitude: T, t: T, truncation: usize) -> Result<VectorField<T>> {
        if truncation > self.p_max() {
            return Err(Error::MissingCoefficient(truncation));
        }
        let q = self.sample_index(t)?;
        let mut out = self.u[0][q].scaled(amplitude);
        let mut a_pow = amplitude;
        for p in 2..=truncation {
            a_pow = a_pow * amplitude;
            out.axpy(a_pow, &self.u[p - 1][q])?;
        }
        Ok(out)
    }

    /// Centroid and 99% radius of `|h_p|^2` at the last sample, for each computed `p`.
    pub fn support_report(&self, r: T) -> Vec<SupportRow<T>> {
        (2..=self.p_max())
            .map(|p| {
                let hp = self.coefficient(p).expect("computed").last().expect("non-empty");
                let center = [T::zero(), T::zero(), T::of_usize(p) * r];
                SupportRow {
                    p,
                    center_z: energy_centroid_z(hp),
                    radius99: crate::hermite::energy_radius(hp, center, 0.99),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportRow<T> {
    pub p: usize,
    pub center_z: T,
    pub radius99: T,
}

/// Energy-weighted mean of the z wavenumber.
pub fn energy_centroid_z<T: Scalar>(v: &VectorField<T>) -> T {
    let profile = v.z_marginal();
    let zs = v.grid().axis_coords(2);
    let (mut m, mut mz) = (T::zero(), T::zero());
    for (z, e) in zs.into_iter().zip(profile) {
        m = m + e;
        mz = mz + z * e;
    }
    if m > T::zero() {
        mz / m
    } else {
        T::zero()
    }
}

/// Share of `|v|^2` with `|z - center| <= half_width`.
pub fn z_band_fraction<T: Scalar>(v: &VectorField<T>, center: T, half_width: T) -> T {
    let profile = v.z_marginal();
    let zs = v.grid().axis_coords(2);
    let (mut inside, mut total) = (T::zero(), T::zero());
    for (z, e) in zs.into_iter().zip(profile) {
        total = total + e;
        if (z - center).abs() <= half_width {
            inside = inside + e;
        }
    }
    if total > T::zero() {
        inside / total
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::leray_project_point;
    use crate::grid::GridSpec;
    use crate::nonlinear::Method;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> GridSpec<f64> {
        GridSpec::covering([-1.5, -1.5, 0.5], [1.5, 1.5, 4.0], 0.5).unwrap()
    }

    fn random_c0(g: GridSpec<f64>, seed: u64) -> VectorField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = [0, 1, 2].map(|_| (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect());
        VectorField::from_components(g, comps).unwrap().leray_project()
    }

    #[test]
    fn zero_c0_gives_zero_coefficients() {
        let g = grid();
        let plan = ConvolutionPlan::new(g, Method::Fast).unwrap();
        let set = SeriesSet::build(VectorField::zeros(g), 0.01, 4, 3, &plan).unwrap();
        for p in 2..=3 {
            assert!(set.coefficient(p).unwrap().iter().all(|h| h.energy() == 0.0));
        }
        assert_eq!(set.series_solution(1.0, 0.01, 3).unwrap().energy(), 0.0);
    }

    #[test]
    fn h2_at_zero_time_is_the_bilinear_term() {
        let g = grid();
        let plan = ConvolutionPlan::new(g, Method::Fast).unwrap();
        let c0 = random_c0(g, 4);
        let h2 = compute_h2(&c0, 0.0, &plan).unwrap();
        let b = plan.bilinear_term(&c0).unwrap();
        assert!(h2.distance(&b).unwrap() <= 1e-14 * b.norm());
    }

    #[test]
    fn h2_of_single_point() {
        let g = GridSpec::new([6, 6, 6], 1.0, [-2.0, -2.0, 1.0]).unwrap();
        let plan = ConvolutionPlan::new(g, Method::Direct).unwrap();
        let k0 = [1.0, 0.0, 2.0];
        let w = [0.5, 1.0, -0.25];
        let mut c0 = VectorField::zeros(g);
        c0.set(g.flat(3, 2, 1), w);
        let s = 0.03;
        let h2 = compute_h2(&c0, s, &plan).unwrap();
        let k2 = k0.map(|x| 2.0 * x);
        let inner = k0[0] * w[0] + k0[1] * w[1] + k0[2] * w[2];
        let kk = k0.iter().map(|x| x * x).sum::<f64>();
        let want = leray_project_point(k2, w.map(|x| inner * x * (-2.0 * s * kk).exp()));
        let at = g.index_of(k2).unwrap();
        let got = h2.get(g.flat(at[0], at[1], at[2]));
        for c in 0..3 {
            assert_relative_eq!(got[c], want[c], epsilon = 1e-15);
        }
        assert_relative_eq!(h2.energy(), want.iter().map(|x| x * x).sum::<f64>(), max_relative = 1e-12);
    }

    #[test]
    fn h3_vanishes_at_zero_time() {
        let g = grid();
        let plan = ConvolutionPlan::new(g, Method::Fast).unwrap();
        let set = SeriesSet::build(random_c0(g, 5), 0.01, 4, 3, &plan).unwrap();
        assert_eq!(set.coefficient(3).unwrap()[0].energy(), 0.0);
        assert!(set.coefficient(3).unwrap()[4].energy() > 0.0);
    }

    #[test]
    fn missing_lower_coefficient_is_an_error() {
        let g = grid();
        let plan = ConvolutionPlan::new(g, Method::Fast).unwrap();
        let mut set = SeriesSet::new(random_c0(g, 5), 0.01, 4).unwrap();
        assert!(matches!(set.compute_hp(3, &plan), Err(Error::MissingCoefficient(3))));
        assert!(set.series_solution(1.0, 0.01, 2).is_err());
    }

    #[test]
    fn truncation_one_is_heat_flow() {
        let g = grid();
        let plan = ConvolutionPlan::new(g, Method::Fast).unwrap();
        let c0 = random_c0(g, 6);
        let set = SeriesSet::build(c0.clone(), 0.02, 4, 2, &plan).unwrap();
        let v = set.series_solution(0.3, 0.02, 1).unwrap();
        let want = heat(&c0, 0.02).scaled(0.3);
        assert!(v.distance(&want).unwrap() <= 1e-15 * want.norm());
        assert_eq!(set.series_solution(0.0, 0.02, 2).unwrap().energy(), 0.0);
        assert!(set.series_solution(0.3, 0.013, 1).is_err());
    }

    #[test]
    fn coefficients_are_solenoidal() {
        let g = grid();
        let plan = ConvolutionPlan::new(g, Method::Fast).unwrap();
        let set = SeriesSet::build(random_c0(g, 8), 0.01, 4, 4, &plan).unwrap();
        for p in 2..=4 {
            for h in set.coefficient(p).unwrap() {
                assert!(h.max_divergence_ratio() <= 1e-12);
            }
        }
    }
}
