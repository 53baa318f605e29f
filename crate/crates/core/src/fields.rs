//! Three-component real fields on the wavenumber lattice and their diagnostics.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scalar::{dot3, norm_sq3, Scalar};

/// `Σ x^2` in `f64`, with a fixed reduction order so results do not depend on
/// the worker count.
pub(crate) fn sum_squares<T: Scalar>(xs: &[T]) -> f64 {
    const CHUNK: usize = 1 << 14;
    let partial: Vec<f64> = xs.par_chunks(CHUNK).map(|c| c.iter().map(|&x| (x * x).to_f64_lossy()).sum()).collect();
    partial.into_iter().sum()
}

/// Leray projector `P_k w = w - k <k,w> / |k|^2`; the zero map at `k = 0`.
#[inline]
pub fn leray_project_point<T: Scalar>(k: [T; 3], w: [T; 3]) -> [T; 3] {
    let kk = norm_sq3(k);
    if kk == T::zero() {
        return [T::zero(); 3];
    }
    let c = dot3(k, w) / kk;
    [w[0] - c * k[0], w[1] - c * k[1], w[2] - c * k[2]]
}

/// Real 3-vector field `v(k)`, one value per lattice point and component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<T> {
    grid: GridSpec<T>,
    comps: [Vec<T>; 3],
    solenoidal: bool,
}

impl<T: Scalar> VectorField<T> {
    pub fn zeros(grid: GridSpec<T>) -> Self {
        let n = grid.len();
        Self { grid, comps: [vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]], solenoidal: false }
    }

    pub fn from_components(grid: GridSpec<T>, comps: [Vec<T>; 3]) -> Result<Self> {
        if comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, comps, solenoidal: false })
    }

    /// Evaluates `f(k)` at every lattice wavenumber.
    pub fn from_fn(grid: GridSpec<T>, f: impl Fn([T; 3]) -> [T; 3] + Sync) -> Self {
        let mut out = Self::zeros(grid);
        let vals: Vec<[T; 3]> =
            (0..grid.len()).into_par_iter().map(|idx| f(grid.wavenumber_unchecked(grid.unflat(idx)))).collect();
        for (idx, v) in vals.into_iter().enumerate() {
            out.set(idx, v);
        }
        out
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[T] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [T] {
        self.solenoidal = false;
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<T>; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [Vec<T>; 3] {
        self.comps
    }

    #[inline]
    pub fn get(&self, idx: usize) -> [T; 3] {
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }

    #[inline]
    pub fn set(&mut self, idx: usize, v: [T; 3]) {
        self.solenoidal = false;
        for c in 0..3 {
            self.comps[c][idx] = v[c];
        }
    }

    /// Whether the field was produced by a Leray projection.
    pub fn is_solenoidal(&self) -> bool {
        self.solenoidal
    }

    pub fn all_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|x| x.is_finite()))
    }

    pub fn scaled(&self, alpha: T) -> Self {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    /// In-place `self *= alpha`; keeps the solenoidal flag.
    pub fn scale(&mut self, alpha: T) {
        for c in &mut self.comps {
            c.par_iter_mut().for_each(|x| *x = *x * alpha);
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: T, other: &Self) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let keep = self.solenoidal && other.solenoidal;
        for (dst, src) in self.comps.iter_mut().zip(other.comps.iter()) {
            dst.par_iter_mut().zip(src.par_iter()).for_each(|(d, &s)| *d = *d + alpha * s);
        }
        self.solenoidal = keep;
        Ok(())
    }

    /// Pointwise multiplication by a scalar lattice, e.g. a heat factor.
    pub fn mul_pointwise(&mut self, weights: &[T]) {
        assert_eq!(weights.len(), self.grid.len());
        for c in &mut self.comps {
            c.par_iter_mut().zip(weights.par_iter()).for_each(|(x, &w)| *x = *x * w);
        }
    }

    pub fn leray_project(&self) -> Self {
        let mut out = self.clone();
        out.leray_project_in_place();
        out
    }

    pub fn leray_project_in_place(&mut self) {
        let g = self.grid;
        let [a, b, c] = &mut self.comps;
        a.par_iter_mut().zip(b.par_iter_mut()).zip(c.par_iter_mut()).enumerate().for_each(|(idx, ((x, y), z))| {
            let k = g.wavenumber_unchecked(g.unflat(idx));
            let p = leray_project_point(k, [*x, *y, *z]);
            *x = p[0];
            *y = p[1];
            *z = p[2];
        });
        self.solenoidal = true;
    }

    /// `E = h^3 Σ |v|^2`.
    pub fn energy(&self) -> T {
        let s: f64 = self.comps.iter().map(|c| sum_squares(c)).sum();
        T::of(s) * self.grid.cell_volume()
    }

    /// `M = sqrt(E)`.
    pub fn norm(&self) -> T {
        self.energy().sqrt()
    }

    /// Energy norm of `self - other`.
    pub fn distance(&self, other: &Self) -> Result<T> {
        let mut d = self.clone();
        d.axpy(-T::one(), other)?;
        Ok(d.norm())
    }

    /// Largest `|<k, v(k)>| / (|k| |v(k)|)` over points with `k != 0, v != 0`.
    pub fn max_divergence_ratio(&self) -> T {
        (0..self.grid.len())
            .into_par_iter()
            .map(|idx| {
                let k = self.grid.wavenumber_unchecked(self.grid.unflat(idx));
                let v = self.get(idx);
                let denom = (norm_sq3(k) * norm_sq3(v)).sqrt();
                if denom > T::zero() {
                    dot3(k, v).abs() / denom
                } else {
                    T::zero()
                }
            })
            .reduce(T::zero, T::max)
    }

    /// Per-layer energy `e(l) = h^2 Σ_{i,j} |v(i,j,l)|^2`, so that `Σ e(l) h = E`.
    pub fn z_marginal(&self) -> Vec<T> {
        let g = &self.grid;
        let mut acc = vec![0.0f64; g.nz];
        for c in &self.comps {
            for col in c.chunks_exact(g.nz) {
                for (a, &x) in acc.iter_mut().zip(col) {
                    *a += (x * x).to_f64_lossy();
                }
            }
        }
        let w = g.h * g.h;
        acc.into_iter().map(|a| T::of(a) * w).collect()
    }

    /// Fraction of the energy sitting on the outermost layer of the box.
    pub fn boundary_energy_fraction(&self) -> T {
        let g = &self.grid;
        let total = self.energy();
        if total == T::zero() {
            return T::zero();
        }
        let mut edge = 0.0f64;
        for idx in 0..g.len() {
            let [i, j, l] = g.unflat(idx);
            if i == 0 || j == 0 || l == 0 || i + 1 == g.nx || j + 1 == g.ny || l + 1 == g.nz {
                edge += norm_sq3(self.get(idx)).to_f64_lossy();
            }
        }
        T::of(edge) * g.cell_volume() / total
    }

    /// Converts the field to another scalar type.
    pub fn cast<U: Scalar>(&self) -> VectorField<U> {
        VectorField {
            grid: self.grid.cast(),
            comps: self.comps.clone().map(|c| c.into_iter().map(|x| U::of(x.to_f64_lossy())).collect()),
            solenoidal: self.solenoidal,
        }
    }
}

/// One band `|z - pR| <= c sqrt(pR)` of a z-marginal profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cloud<T> {
    pub p: usize,
    pub z_center: T,
    pub mass_fraction: T,
    /// Mean profile density within `R/4` of `pR` over the geometric mean of the
    /// densities within `R/4` of the midpoints `(p ± 1/2)R`. An exponential
    /// ramp scores about 1; infinite when the gaps are empty.
    pub contrast: T,
}

impl<T: Scalar> Cloud<T> {
    /// Band centered within `tol` of `pR` and standing out from its gaps by `min_contrast`.
    pub fn is_distinct(&self, r: T, tol: T, min_contrast: T) -> bool {
        (self.z_center - T::of_usize(self.p) * r).abs() <= tol && self.contrast >= min_contrast
    }
}

/// Mean of `profile` over `|z - center| <= half`, if any point falls there.
fn window_mean<T: Scalar>(zs: &[T], profile: &[T], center: T, half: T) -> Option<T> {
    let (sum, n) = zs
        .iter()
        .zip(profile)
        .filter(|(&z, _)| (z - center).abs() <= half)
        .fold((T::zero(), 0usize), |(s, n), (_, &e)| (s + e, n + 1));
    (n > 0).then(|| sum / T::of_usize(n))
}

pub const DEFAULT_CLOUD_WIDTH: f64 = 3.0;

/// Mass captured by the band around each multiple `pR`, `p = 1..=p_max`.
///
/// `width` is the constant `c` in the half-width `c sqrt(pR)`. An all-zero
/// profile yields zero mass everywhere and a band center at `pR`.
pub fn detect_clouds<T: Scalar>(
    profile: &[T],
    grid: &GridSpec<T>,
    r: T,
    p_max: usize,
    width: T,
) -> Result<Vec<Cloud<T>>> {
    if profile.is_empty() {
        return Err(Error::EmptyProfile);
    }
    if profile.len() != grid.nz {
        return Err(Error::GridMismatch);
    }
    if !(r > T::zero()) {
        return Err(Error::InvalidParameter { name: "R", reason: "must be positive".into() });
    }
    let total: T = profile.iter().fold(T::zero(), |a, &e| a + e);
    let zs = grid.axis_coords(2);
    Ok((1..=p_max)
        .map(|p| {
            let center = T::of_usize(p) * r;
            let half = width * center.sqrt();
            let (mut mass, mut moment) = (T::zero(), T::zero());
            for (&z, &e) in zs.iter().zip(profile) {
                if (z - center).abs() <= half {
                    mass = mass + e;
                    moment = moment + z * e;
                }
            }
            let quarter = r * T::of(0.25);
            let core = window_mean(&zs, profile, center, quarter).unwrap_or(T::zero());
            let gaps: Vec<T> = [center - r * T::of(0.5), center + r * T::of(0.5)]
                .iter()
                .filter_map(|&g| window_mean(&zs, profile, g, quarter))
                .collect();
            let gap = match gaps[..] {
                [a, b] => (a * b).sqrt(),
                [a] => a,
                _ => T::zero(),
            };
            let contrast = if gap > T::zero() {
                core / gap
            } else if core > T::zero() {
                T::infinity()
            } else {
                T::zero()
            };
            Cloud {
                p,
                z_center: if mass > T::zero() { moment / mass } else { center },
                mass_fraction: if total > T::zero() { mass / total } else { T::zero() },
                contrast,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRecord<T> {
    pub t: T,
    pub energy: T,
    pub mynorm: T,
}

/// Time series of `(t, E, sqrt(E))` with strictly increasing `t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyTrace<T> {
    records: Vec<EnergyRecord<T>>,
}

impl<T: Scalar> EnergyTrace<T> {
    pub fn new() -> Self {
        Self { records: Vec::new() }
    }

    /// Appends `(t, E, sqrt(E))`.
    pub fn push(&mut self, t: T, energy: T) -> Result<()> {
        self.push_record(EnergyRecord { t, energy, mynorm: energy.sqrt() })
    }

    /// Appends a record verbatim after checking the trace invariants.
    pub fn push_record(&mut self, rec: EnergyRecord<T>) -> Result<()> {
        if let Some(last) = self.records.last() {
            if !(rec.t > last.t) {
                return Err(Error::InvalidParameter {
                    name: "t",
                    reason: format!("trace times must increase ({} after {})", rec.t, last.t),
                });
            }
        }
        if !(rec.energy >= T::zero()) {
            return Err(Error::InvalidParameter {
                name: "energy",
                reason: format!("must be non-negative, got {}", rec.energy),
            });
        }
        self.records.push(rec);
        Ok(())
    }

    pub fn records(&self) -> &[EnergyRecord<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&EnergyRecord<T>> {
        self.records.last()
    }

    /// Record with the smallest `M`.
    pub fn minimum(&self) -> Option<&EnergyRecord<T>> {
        self.records.iter().min_by(|a, b| a.mynorm.partial_cmp(&b.mynorm).unwrap_or(std::cmp::Ordering::Equal))
    }
}

impl<T: Scalar> FromIterator<(T, T)> for EnergyTrace<T> {
    /// Builds a trace from `(t, E)` pairs; panics on non-increasing times.
    fn from_iter<I: IntoIterator<Item = (T, T)>>(iter: I) -> Self {
        let mut tr = Self::new();
        for (t, e) in iter {
            tr.push(t, e).expect("valid trace records");
        }
        tr
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> GridSpec<f64> {
        GridSpec::aligned([6, 5, 7], 0.5, [-1.5, -1.0, -1.0]).unwrap()
    }

    fn random_field(g: GridSpec<f64>, seed: u64) -> VectorField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = [0, 1, 2].map(|_| (0..g.len()).map(|_| rng.random_range(-1.0..1.0)).collect());
        VectorField::from_components(g, comps).unwrap()
    }

    #[test]
    fn projector_closed_forms() {
        assert_eq!(leray_project_point([0.0, 0.0, 1.0], [0.0, 0.0, 5.0]), [0.0, 0.0, 0.0]);
        assert_eq!(leray_project_point([1.0, 0.0, 0.0], [0.0, 2.0, 0.0]), [0.0, 2.0, 0.0]);
        let p = leray_project_point([1.0, 1.0, 0.0], [1.0, 0.0, 0.0]);
        assert_relative_eq!(p[0], 0.5);
        assert_relative_eq!(p[1], -0.5);
        assert_eq!(p[2], 0.0);
        assert_eq!(leray_project_point([0.0; 3], [1.0, 2.0, 3.0]), [0.0; 3]);
    }

    #[test]
    fn projecting_zero_and_gradient_fields() {
        let g = grid();
        let z = VectorField::zeros(g).leray_project();
        assert_eq!(z.energy(), 0.0);
        assert!(z.is_solenoidal());
        let grad = VectorField::from_fn(g, |k| k).leray_project();
        assert!(grad.components().iter().flatten().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn projection_is_idempotent_orthogonal_and_contracting() {
        let v = random_field(grid(), 7);
        let p = v.leray_project();
        let pp = p.leray_project();
        assert!(p.distance(&pp).unwrap() <= 1e-12 * p.norm());
        assert!(p.max_divergence_ratio() <= 1e-12);
        assert!(p.energy() <= v.energy());
    }

    #[test]
    fn energy_of_single_point() {
        let g = GridSpec::new([3, 3, 3], 1.0, [0.0; 3]).unwrap();
        let mut v = VectorField::zeros(g);
        assert_eq!(v.energy(), 0.0);
        v.set(g.flat(1, 2, 0), [3.0, 4.0, 0.0]);
        assert_eq!(v.energy(), 25.0);
        assert_eq!(v.norm(), 5.0);
    }

    #[test]
    fn z_marginal_of_zero_and_single_layer() {
        let g = grid();
        assert!(VectorField::zeros(g).z_marginal().iter().all(|&e| e == 0.0));
        let mut v = VectorField::zeros(g);
        v.set(g.flat(2, 3, 4), [1.0, -2.0, 0.5]);
        v.set(g.flat(0, 1, 4), [0.0, 1.0, 0.0]);
        let e = v.z_marginal();
        for (l, &x) in e.iter().enumerate() {
            assert_eq!(x != 0.0, l == 4);
        }
    }

    #[test]
    fn clouds_of_zero_profile() {
        let g = grid();
        let clouds = detect_clouds(&vec![0.0; g.nz], &g, 1.0, 3, 3.0).unwrap();
        assert_eq!(clouds.len(), 3);
        assert!(clouds.iter().all(|c| c.mass_fraction == 0.0));
    }

    #[test]
    fn clouds_capture_gaussian_bump() {
        let r = 5.0f64;
        let g = GridSpec::covering([-1.0, -1.0, 1.0], [1.0, 1.0, 40.0], 0.1).unwrap();
        let profile: Vec<f64> =
            g.axis_coords(2).iter().map(|&z| (-(z - 2.0 * r).powi(2) / (2.0 * 0.8f64.powi(2))).exp()).collect();
        let clouds = detect_clouds(&profile, &g, r, 4, DEFAULT_CLOUD_WIDTH).unwrap();
        assert!(clouds[1].mass_fraction >= 0.99, "{:?}", clouds[1]);
        assert_relative_eq!(clouds[1].z_center, 2.0 * r, max_relative = 1e-6);
        assert!(clouds[1].contrast > 5.0);
        assert!(clouds[1].is_distinct(r, r.sqrt(), 2.0));
        assert!(!clouds[0].is_distinct(r, r.sqrt(), 2.0));
    }

    #[test]
    fn smooth_ramp_has_no_distinct_bands() {
        let r = 5.0f64;
        let g = GridSpec::covering([-1.0, -1.0, 1.0], [1.0, 1.0, 60.0], 0.1).unwrap();
        let profile: Vec<f64> = g.axis_coords(2).iter().map(|&z| (0.3f64 * z).exp()).collect();
        let clouds = detect_clouds(&profile, &g, r, 10, 0.5).unwrap();
        for c in &clouds[..10] {
            assert!(c.contrast < 2.0, "{c:?}");
        }
    }

    #[test]
    fn comb_profile_separates_bands() {
        let r = 5.0f64;
        let g = GridSpec::covering([-1.0, -1.0, 1.0], [1.0, 1.0, 30.0], 0.1).unwrap();
        let profile: Vec<f64> = g
            .axis_coords(2)
            .iter()
            .map(|&z| (1..=5).map(|p| 10f64.powi(-(p as i32)) * (-(z - p as f64 * r).powi(2)).exp()).sum())
            .collect();
        let clouds = detect_clouds(&profile, &g, r, 5, 0.5).unwrap();
        for c in &clouds {
            assert!(c.is_distinct(r, 0.2, 3.0), "{c:?}");
        }
    }

    #[test]
    fn clouds_reject_empty_profile() {
        assert!(matches!(detect_clouds::<f64>(&[], &grid(), 1.0, 2, 3.0), Err(Error::EmptyProfile)));
    }

    #[test]
    fn trace_enforces_invariants() {
        let mut tr = EnergyTrace::new();
        tr.push(0.0, 4.0).unwrap();
        assert_eq!(tr.records()[0].mynorm, 2.0);
        assert!(tr.push(0.0, 1.0).is_err());
        assert!(tr.push(1.0, -1.0).is_err());
        tr.push(1.0, 1.0).unwrap();
        assert_eq!(tr.minimum().unwrap().t, 1.0);
    }

    proptest! {
        #[test]
        fn z_marginal_mass_matches_energy(seed in 0u64..1000) {
            let v = random_field(grid(), seed);
            let g = v.grid();
            let mass: f64 = v.z_marginal().iter().map(|e| e * g.h).sum();
            prop_assert!((mass - v.energy()).abs() <= 1e-12 * v.energy());
        }

        #[test]
        fn projected_random_fields_are_orthogonal(seed in 0u64..1000) {
            let v = random_field(grid(), seed).leray_project();
            prop_assert!(v.max_divergence_ratio() <= 1e-12);
        }
    }
}
