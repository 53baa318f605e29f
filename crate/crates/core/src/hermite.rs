//! Initial data built from products of Hermite functions centred at `k0 = (0, 0, R)`:
//!
//! ```text
//! v^j(k) = A * Π_{i=1..3} Σ_{m=1..D} λ_{ijm} He^{(m)}(3 (k^i - k0^i) / sqrt(R))
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::grid::GridSpec;
use crate::scalar::Scalar;

/// Polynomial family and matching Gaussian weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HermiteConvention {
    /// `He_m(x) exp(-x^2/4)`, `He_{m+1} = x He_m - m He_{m-1}`.
    #[default]
    Probabilists,
    /// `H_m(x) exp(-x^2/2)`, `H_{m+1} = 2x H_m - 2m H_{m-1}`.
    Physicists,
}

impl std::str::FromStr for HermiteConvention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "probabilists" => Ok(Self::Probabilists),
            "physicists" => Ok(Self::Physicists),
            other => Err(format!("unknown Hermite convention `{other}`")),
        }
    }
}

/// Hermite function of order `m` in the probabilists' convention.
pub fn hermite_function<T: Scalar>(m: usize, x: T) -> T {
    hermite_function_with(HermiteConvention::Probabilists, m, x)
}

pub fn hermite_function_with<T: Scalar>(conv: HermiteConvention, m: usize, x: T) -> T {
    let (scale, weight) = match conv {
        HermiteConvention::Probabilists => (T::one(), (-x * x / T::of(4.0)).exp()),
        HermiteConvention::Physicists => (T::of(2.0), (-x * x / T::of(2.0)).exp()),
    };
    if m == 0 {
        return weight;
    }
    let (mut prev, mut cur) = (T::one(), scale * x);
    for n in 1..m {
        let next = scale * (x * cur - T::of_usize(n) * prev);
        prev = cur;
        cur = next;
    }
    cur * weight
}

/// Coefficients `λ_{ijm}` for axis `i`, component `j` and order `m = 1..=D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lambda<T> {
    d: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> Lambda<T> {
    /// From a nested table `table[i][j][m - 1]`.
    pub fn from_table(table: &[Vec<Vec<T>>]) -> Result<Self> {
        let bad = |reason: String| Error::InvalidParameter { name: "lambda", reason };
        if table.len() != 3 {
            return Err(bad(format!("expected 3 axis rows, found {}", table.len())));
        }
        let d = table[0].first().map_or(0, Vec::len);
        if d == 0 {
            return Err(bad("maximal order D must be at least 1".into()));
        }
        let mut coeffs = Vec::with_capacity(9 * d);
        for (i, row) in table.iter().enumerate() {
            if row.len() != 3 {
                return Err(bad(format!("axis {} has {} component entries, expected 3", i + 1, row.len())));
            }
            for (j, orders) in row.iter().enumerate() {
                if orders.len() != d {
                    return Err(bad(format!(
                        "entry [{}][{}] has {} orders, expected D = {d}",
                        i + 1,
                        j + 1,
                        orders.len()
                    )));
                }
                if orders.iter().any(|x| !x.is_finite()) {
                    return Err(bad(format!("entry [{}][{}] is not finite", i + 1, j + 1)));
                }
                coeffs.extend_from_slice(orders);
            }
        }
        Ok(Self { d, coeffs })
    }

    pub fn zeros(d: usize) -> Self {
        Self { d, coeffs: vec![T::zero(); 9 * d] }
    }

    pub fn max_order(&self) -> usize {
        self.d
    }

    /// `λ_{ijm}` with zero-based axis and component and one-based order.
    pub fn get(&self, i: usize, j: usize, m: usize) -> T {
        self.coeffs[(i * 3 + j) * self.d + (m - 1)]
    }

    pub fn set(&mut self, i: usize, j: usize, m: usize, value: T) {
        self.coeffs[(i * 3 + j) * self.d + (m - 1)] = value;
    }

    pub fn to_table(&self) -> Vec<Vec<Vec<T>>> {
        (0..3).map(|i| (0..3).map(|j| (1..=self.d).map(|m| self.get(i, j, m)).collect()).collect()).collect()
    }

    pub fn is_all_zero(&self) -> bool {
        self.coeffs.iter().all(|&x| x == T::zero())
    }
}

/// Deterministic coefficients uniform in `[-1, 1]`.
pub fn random_lambda<T: Scalar>(d: usize, seed: u64) -> Lambda<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..9 * d.max(1)).map(|_| T::of(rng.random_range(-1.0..=1.0))).collect();
    Lambda { d: d.max(1), coeffs }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermiteInitSpec<T> {
    pub r: T,
    pub lambda: Lambda<T>,
    pub amplitude: T,
    /// Rescale to `M(0) = 1` before applying the amplitude.
    pub normalize_m0: bool,
    pub project: bool,
    pub convention: HermiteConvention,
    /// Seed the coefficients were drawn from, when they were drawn.
    pub seed: Option<u64>,
}

impl<T: Scalar> HermiteInitSpec<T> {
    pub fn new(r: T, lambda: Lambda<T>, amplitude: T) -> Self {
        Self {
            r,
            lambda,
            amplitude,
            normalize_m0: true,
            project: true,
            convention: HermiteConvention::Probabilists,
            seed: None,
        }
    }

    pub fn max_order(&self) -> usize {
        self.lambda.max_order()
    }

    pub fn center(&self) -> [T; 3] {
        [T::zero(), T::zero(), self.r]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > T::zero()) {
            return Err(Error::InvalidParameter { name: "R", reason: "must be positive".into() });
        }
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter { name: "amplitude", reason: "must be finite".into() });
        }
        if self.amplitude != T::zero() && self.lambda.is_all_zero() {
            return Err(Error::DegenerateInitialData);
        }
        Ok(())
    }
}

/// Evaluates the Hermite-product data on `grid`, then projects, normalizes
/// and scales as the flags in `spec` request.
pub fn build_initial_data<T: Scalar>(spec: &HermiteInitSpec<T>, grid: &GridSpec<T>) -> Result<VectorField<T>> {
    if spec.lambda.is_all_zero() && spec.normalize_m0 {
        return Err(Error::DegenerateInitialData);
    }
    spec.validate()?;
    if spec.amplitude == T::zero() {
        return Ok(VectorField::zeros(*grid));
    }

    // Per-axis factor tables: sums[i][j][n] = Σ_m λ_ijm He^(m)(x_n).
    let k0 = spec.center();
    let stretch = T::of(3.0) / spec.r.sqrt();
    let dims = grid.dims();
    let sums: Vec<Vec<Vec<T>>> = (0..3)
        .map(|i| {
            let xs: Vec<T> = grid.axis_coords(i).iter().map(|&k| stretch * (k - k0[i])).collect();
            (0..3)
                .map(|j| {
                    xs.iter()
                        .map(|&x| {
                            (1..=spec.max_order()).fold(T::zero(), |acc, m| {
                                acc + spec.lambda.get(i, j, m) * hermite_function_with(spec.convention, m, x)
                            })
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut v = VectorField::zeros(*grid);
    for j in 0..3 {
        let comp = v.component_mut(j);
        for a in 0..dims[0] {
            let fa = sums[0][j][a];
            for b in 0..dims[1] {
                let fab = fa * sums[1][j][b];
                let base = (a * dims[1] + b) * dims[2];
                for (c, &fc) in sums[2][j].iter().enumerate() {
                    comp[base + c] = fab * fc;
                }
            }
        }
    }

    if spec.project {
        v.leray_project_in_place();
    }
    if spec.normalize_m0 {
        let m = v.norm();
        if !(m > T::zero()) {
            return Err(Error::DegenerateInitialData);
        }
        v.scale(T::one() / m);
    }
    v.scale(spec.amplitude);
    Ok(v)
}

/// Smallest radius about `center` holding `fraction` of the field's energy.
pub fn energy_radius<T: Scalar>(v: &VectorField<T>, center: [T; 3], fraction: f64) -> T {
    let g = v.grid();
    let mut pts: Vec<(f64, f64)> = (0..g.len())
        .map(|idx| {
            let k = g.wavenumber_unchecked(g.unflat(idx));
            let d = ((k[0] - center[0]).powi(2) + (k[1] - center[1]).powi(2) + (k[2] - center[2]).powi(2))
                .sqrt()
                .to_f64_lossy();
            let w = v.get(idx).iter().map(|x| (*x * *x).to_f64_lossy()).sum::<f64>();
            (d, w)
        })
        .collect();
    let total: f64 = pts.iter().map(|p| p.1).sum();
    if total == 0.0 {
        return T::zero();
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = 0.0;
    for (d, w) in pts {
        acc += w;
        if acc >= fraction * total {
            return T::of(d);
        }
    }
    T::infinity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// `exp(-x^2/4) He_m(x)` from the explicit polynomials.
    fn he_explicit(m: usize, x: f64) -> f64 {
        let p = match m {
            0 => 1.0,
            1 => x,
            2 => x * x - 1.0,
            3 => x.powi(3) - 3.0 * x,
            4 => x.powi(4) - 6.0 * x * x + 3.0,
            _ => unreachable!(),
        };
        p * (-x * x / 4.0).exp()
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite_function(0, 0.0f64), 1.0);
        assert_eq!(hermite_function(2, 0.0f64), -1.0);
        assert_relative_eq!(hermite_function(3, 2.0f64), 2.0 * (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(hermite_function(3, 2.0f64), 0.73576, max_relative = 1e-5);
    }

    #[test]
    fn physicists_convention() {
        // H_2(x) = 4x^2 - 2
        let x = 0.7f64;
        assert_relative_eq!(
            hermite_function_with(HermiteConvention::Physicists, 2, x),
            (4.0 * x * x - 2.0) * (-x * x / 2.0).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn hermite_decays() {
        for m in 0..6 {
            assert!(hermite_function(m, 40.0f64).abs() < 1e-150);
            assert!(hermite_function(m, -40.0f64).is_finite());
        }
    }

    proptest! {
        #[test]
        fn recurrence_matches_explicit_polynomials(m in 0usize..5, x in -8.0f64..8.0) {
            let a = hermite_function(m, x);
            let b = he_explicit(m, x);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    fn small_grid() -> GridSpec<f64> {
        GridSpec::covering([-4.0, -4.0, 1.0], [4.0, 4.0, 9.0], 0.25).unwrap()
    }

    #[test]
    fn zero_amplitude_gives_zero_field() {
        let spec = HermiteInitSpec::new(5.0, random_lambda(3, 1), 0.0);
        assert_eq!(build_initial_data(&spec, &small_grid()).unwrap().energy(), 0.0);
    }

    #[test]
    fn degenerate_lambda_is_rejected() {
        let spec = HermiteInitSpec::new(5.0, Lambda::zeros(3), 1.0);
        assert!(matches!(build_initial_data(&spec, &small_grid()), Err(Error::DegenerateInitialData)));
    }

    #[test]
    fn normalized_data_has_unit_norm() {
        let spec = HermiteInitSpec::new(5.0, random_lambda(3, 11), 1.0);
        let v = build_initial_data(&spec, &small_grid()).unwrap();
        assert_relative_eq!(v.energy(), 1.0, max_relative = 1e-12);
        assert!(v.max_divergence_ratio() <= 1e-12);
        let v3 = build_initial_data(&HermiteInitSpec { amplitude: 3.0, ..spec }, &small_grid()).unwrap();
        assert_relative_eq!(v3.norm(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn order_one_profile_is_centred_on_k0() {
        let mut lambda = Lambda::zeros(1);
        for i in 0..3 {
            for j in 0..3 {
                lambda.set(i, j, 1, 1.0);
            }
        }
        let mut spec = HermiteInitSpec::new(5.0, lambda, 1.0);
        spec.project = false;
        let g = small_grid();
        let v = build_initial_data(&spec, &g).unwrap();
        // |v|^2 is even about k0 in every axis, so its centroid sits on k0.
        let mut centroid = [0.0; 3];
        for idx in 0..g.len() {
            let k = g.wavenumber_unchecked(g.unflat(idx));
            let w: f64 = v.get(idx).iter().map(|x| x * x).sum();
            for a in 0..3 {
                centroid[a] += k[a] * w * g.cell_volume();
            }
        }
        let k0 = spec.center();
        for a in 0..3 {
            assert!((centroid[a] - k0[a]).abs() <= g.h, "axis {a}: {}", centroid[a]);
        }
    }

    #[test]
    fn component_permutation_permutes_unprojected_field() {
        let g = small_grid();
        let base = random_lambda::<f64>(2, 5);
        let mut swapped = base.clone();
        let perm = [2, 0, 1];
        for i in 0..3 {
            for j in 0..3 {
                for m in 1..=2 {
                    swapped.set(i, perm[j], m, base.get(i, j, m));
                }
            }
        }
        let mk = |l: Lambda<f64>| {
            let mut s = HermiteInitSpec::new(5.0, l, 1.0);
            s.project = false;
            s.normalize_m0 = false;
            build_initial_data(&s, &g).unwrap()
        };
        let (a, b) = (mk(base), mk(swapped));
        for j in 0..3 {
            assert_eq!(a.component(j), b.component(perm[j]));
        }
    }

    #[test]
    fn random_lambda_is_seeded() {
        let a = random_lambda::<f64>(3, 42);
        assert_eq!(a, random_lambda(3, 42));
        assert_ne!(a, random_lambda(3, 43));
        assert!(a.coeffs.iter().all(|x| x.abs() <= 1.0));
    }

    #[test]
    fn lambda_table_validation() {
        let ok = vec![vec![vec![1.0, 2.0]; 3]; 3];
        let l = Lambda::from_table(&ok).unwrap();
        assert_eq!(l.max_order(), 2);
        assert_eq!(l.to_table(), ok);
        let mut bad = ok.clone();
        bad[1][2].push(3.0);
        assert!(Lambda::from_table(&bad).is_err());
        assert!(Lambda::from_table(&ok[..2]).is_err());
    }
}
