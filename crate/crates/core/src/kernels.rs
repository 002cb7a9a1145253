//! Covariance kernels for the field classes handled by the library.
//!
//! Coordinates of `[0,1]^d` are split into `k` consecutive components by a
//! [`Decomposition`]; component `j` carries its own smoothness exponent
//! `alpha_j` in `(0, 2)`. The anisotropic quasi-norm
//! `||s||_alpha = sum_j ||s^j||^alpha_j` uses Euclidean norms within each
//! component.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Increment variances in `[-NEGATIVE_TOLERANCE, 0)` are clamped to zero.
pub const NEGATIVE_TOLERANCE: f64 = 1e-10;

/// Real-valued function on the unit cube.
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Covariance function `r(t, s)`.
pub type KernelFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Partition of the `d` coordinates into `k` consecutive blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    sizes: Vec<usize>,
    // cumulative sums L_0 = 0, ..., L_k = d
    offsets: Vec<usize>,
}

impl Decomposition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidDecomposition("no components".into()));
        }
        if let Some(j) = sizes.iter().position(|&l| l == 0) {
            return Err(Error::InvalidDecomposition(format!(
                "component {j} has size 0"
            )));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        offsets.push(0);
        for &l in &sizes {
            offsets.push(offsets.last().unwrap() + l);
        }
        Ok(Self { sizes, offsets })
    }

    /// Single component covering all `d` coordinates.
    pub fn isotropic(d: usize) -> Result<Self> {
        Self::new(vec![d])
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn components(&self) -> usize {
        self.sizes.len()
    }

    /// Coordinate indices (0-based) belonging to component `j`.
    pub fn range(&self, j: usize) -> Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    /// Component owning the 0-based coordinate `i`.
    pub fn component_of(&self, i: usize) -> usize {
        debug_assert!(i < self.dim());
        self.offsets.partition_point(|&o| o <= i) - 1
    }

    /// Index of the last coordinate of component `j` (0-based), i.e. `L_j - 1`.
    pub fn last_coordinate(&self, j: usize) -> usize {
        self.offsets[j + 1] - 1
    }

    pub fn slice<'a>(&self, s: &'a [f64], j: usize) -> &'a [f64] {
        &s[self.range(j)]
    }
}

/// Per-component smoothness exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct Smoothness {
    alpha: Vec<f64>,
}

impl Smoothness {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if let Some(&a) = alpha.iter().find(|&&a| !(a > 0.0 && a < 2.0)) {
            return Err(Error::InvalidSmoothness(a));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Per-coordinate exponents `alpha*`.
    pub fn expand(&self, decomposition: &Decomposition) -> Vec<f64> {
        let mut out = Vec::with_capacity(decomposition.dim());
        for (j, &l) in decomposition.sizes().iter().enumerate() {
            out.extend(std::iter::repeat_n(self.alpha[j], l));
        }
        out
    }

    fn check(&self, decomposition: &Decomposition) -> Result<()> {
        if self.alpha.len() != decomposition.components() {
            return Err(Error::DimensionMismatch {
                expected: decomposition.components(),
                got: self.alpha.len(),
            });
        }
        Ok(())
    }
}

/// Local variance scales `c_1, ..., c_k` of a locally stationary field.
#[derive(Clone)]
pub struct LocalStationarity {
    scales: Vec<ScalarField>,
}

impl LocalStationarity {
    pub fn new(scales: Vec<ScalarField>) -> Self {
        Self { scales }
    }

    pub fn constant(k: usize, value: f64) -> Self {
        Self {
            scales: (0..k)
                .map(|_| Arc::new(move |_: &[f64]| value) as ScalarField)
                .collect(),
        }
    }

    pub fn components(&self) -> usize {
        self.scales.len()
    }

    pub fn scale(&self, j: usize) -> &ScalarField {
        &self.scales[j]
    }

    pub fn eval(&self, j: usize, t: &[f64]) -> f64 {
        (self.scales[j])(t)
    }
}

impl fmt::Debug for LocalStationarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LocalStationarity({} components)", self.scales.len())
    }
}

/// User-supplied covariance kernel with declared field class.
#[derive(Clone)]
pub struct CustomKernel {
    pub kernel: KernelFn,
    pub local: Option<LocalStationarity>,
    pub decomposition: Decomposition,
    pub smoothness: Smoothness,
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel")
            .field("decomposition", &self.decomposition)
            .field("smoothness", &self.smoothness)
            .field("local", &self.local)
            .finish_non_exhaustive()
    }
}

/// Covariance model of a zero-mean field on `[0,1]^d`.
#[derive(Debug, Clone)]
pub enum CovarianceModel {
    /// Fractional Brownian field with anisotropic variogram `||t - s||_alpha`.
    DecomposedFbf {
        decomposition: Decomposition,
        smoothness: Smoothness,
    },
    /// `g(t) g(s) exp(-||t - s||)` on `[0,1]^2` with `g(t) = 1 / (||t||^2 + 0.1)`.
    DampedExponential,
    Custom(CustomKernel),
}

fn damped_weight(t: &[f64]) -> f64 {
    1.0 / (t.iter().map(|x| x * x).sum::<f64>() + 0.1)
}

fn euclidean_distance(t: &[f64], s: &[f64]) -> f64 {
    t.iter()
        .zip(s)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

impl CovarianceModel {
    pub fn fbf(sizes: Vec<usize>, alpha: Vec<f64>) -> Result<Self> {
        let decomposition = Decomposition::new(sizes)?;
        let smoothness = Smoothness::new(alpha)?;
        smoothness.check(&decomposition)?;
        Ok(Self::DecomposedFbf {
            decomposition,
            smoothness,
        })
    }

    /// Standard Brownian motion on `[0,1]`.
    pub fn brownian() -> Self {
        Self::fbf(vec![1], vec![1.0]).expect("valid parameters")
    }

    pub fn custom(
        kernel: KernelFn,
        local: Option<LocalStationarity>,
        decomposition: Decomposition,
        smoothness: Smoothness,
    ) -> Result<Self> {
        smoothness.check(&decomposition)?;
        if let Some(c) = &local {
            if c.components() != decomposition.components() {
                return Err(Error::DimensionMismatch {
                    expected: decomposition.components(),
                    got: c.components(),
                });
            }
        }
        Ok(Self::Custom(CustomKernel {
            kernel,
            local,
            decomposition,
            smoothness,
        }))
    }

    /// Identically zero kernel on `[0,1]^d`.
    pub fn zero(d: usize) -> Result<Self> {
        Self::custom(
            Arc::new(|_: &[f64], _: &[f64]| 0.0),
            None,
            Decomposition::isotropic(d)?,
            Smoothness::new(vec![1.0])?,
        )
    }

    pub fn decomposition(&self) -> Decomposition {
        match self {
            Self::DecomposedFbf { decomposition, .. } => decomposition.clone(),
            Self::DampedExponential => Decomposition::isotropic(2).unwrap(),
            Self::Custom(c) => c.decomposition.clone(),
        }
    }

    pub fn smoothness(&self) -> Smoothness {
        match self {
            Self::DecomposedFbf { smoothness, .. } => smoothness.clone(),
            Self::DampedExponential => Smoothness::new(vec![1.0]).unwrap(),
            Self::Custom(c) => c.smoothness.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::DecomposedFbf { decomposition, .. } => decomposition.dim(),
            Self::DampedExponential => 2,
            Self::Custom(c) => c.decomposition.dim(),
        }
    }

    /// Local variance scales, when known analytically.
    pub fn local_stationarity(&self) -> Option<LocalStationarity> {
        match self {
            Self::DecomposedFbf { decomposition, .. } => {
                Some(LocalStationarity::constant(decomposition.components(), 1.0))
            }
            Self::DampedExponential => Some(LocalStationarity::new(vec![Arc::new(|t: &[f64]| {
                let g = damped_weight(t);
                2.0 * g * g
            })])),
            Self::Custom(c) => c.local.clone(),
        }
    }

    fn check_dims(&self, t: &[f64], s: &[f64]) -> Result<()> {
        let d = self.dim();
        for len in [t.len(), s.len()] {
            if len != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: len,
                });
            }
        }
        Ok(())
    }

    /// `r(t, s)`.
    pub fn covariance(&self, t: &[f64], s: &[f64]) -> Result<f64> {
        self.check_dims(t, s)?;
        Ok(self.covariance_unchecked(t, s))
    }

    pub(crate) fn covariance_unchecked(&self, t: &[f64], s: &[f64]) -> f64 {
        match self {
            Self::DecomposedFbf {
                decomposition,
                smoothness,
            } => {
                let nt = anisotropic_norm(t, None, decomposition, smoothness);
                let ns = anisotropic_norm(s, None, decomposition, smoothness);
                let nd = anisotropic_norm(t, Some(s), decomposition, smoothness);
                0.5 * (nt + ns - nd)
            }
            Self::DampedExponential => {
                damped_weight(t) * damped_weight(s) * (-euclidean_distance(t, s)).exp()
            }
            Self::Custom(c) => (c.kernel)(t, s),
        }
    }

    /// `E (X(t) - X(s))^2`, with small negative round-off clamped to zero.
    pub fn increment_variance(&self, t: &[f64], s: &[f64]) -> Result<f64> {
        self.check_dims(t, s)?;
        clamp_nonnegative(self.variogram_unchecked(t, s))
    }

    /// Raw increment variance; may be slightly negative for custom kernels.
    pub(crate) fn variogram_unchecked(&self, t: &[f64], s: &[f64]) -> f64 {
        match self {
            Self::DecomposedFbf {
                decomposition,
                smoothness,
            } => anisotropic_norm(t, Some(s), decomposition, smoothness),
            Self::DampedExponential => {
                let gt = damped_weight(t);
                let gs = damped_weight(s);
                // (g_t - g_s)^2 + 2 g_t g_s (1 - e^{-|t-s|}), free of cancellation
                (gt - gs) * (gt - gs) - 2.0 * gt * gs * (-euclidean_distance(t, s)).exp_m1()
            }
            Self::Custom(c) => {
                (c.kernel)(t, t) + (c.kernel)(s, s) - 2.0 * (c.kernel)(t, s)
            }
        }
    }
}

pub(crate) fn clamp_nonnegative(value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -NEGATIVE_TOLERANCE {
        Ok(0.0)
    } else {
        Err(Error::NotPositiveSemidefinite(value))
    }
}

/// `sum_j ||(t - s)^j||^alpha_j`, or of `t` alone when `s` is `None`.
fn anisotropic_norm(
    t: &[f64],
    s: Option<&[f64]>,
    decomposition: &Decomposition,
    smoothness: &Smoothness,
) -> f64 {
    let mut total = 0.0;
    for (j, &a) in smoothness.alpha().iter().enumerate() {
        let mut sq = 0.0;
        for i in decomposition.range(j) {
            let x = match s {
                Some(s) => t[i] - s[i],
                None => t[i],
            };
            sq += x * x;
        }
        if sq > 0.0 {
            total += sq.powf(0.5 * a);
        }
    }
    total
}

/// `||s||_alpha = sum_j ||s^j||^alpha_j` with Euclidean component norms.
pub fn alpha_norm(s: &[f64], decomposition: &Decomposition, smoothness: &Smoothness) -> Result<f64> {
    if s.len() != decomposition.dim() {
        return Err(Error::DimensionMismatch {
            expected: decomposition.dim(),
            got: s.len(),
        });
    }
    smoothness.check(decomposition)?;
    Ok(anisotropic_norm(s, None, decomposition, smoothness))
}

/// Extreme eigenvalues `(min, max)` of the Gram matrix of `model` at `points`.
pub fn gram_spectrum(model: &CovarianceModel, points: &[Vec<f64>]) -> Result<(f64, f64)> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty point set".into()));
    }
    let mut gram = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..=a {
            let r = model.covariance(&points[a], &points[b])?;
            gram[(a, b)] = r;
            gram[(b, a)] = r;
        }
    }
    let eig = SymmetricEigen::new(gram);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max))
}

/// One sample of the local-stationarity diagnostic.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StationarityProbe {
    pub point: Vec<f64>,
    pub direction: usize,
    pub ratio: f64,
}

/// Ratios `increment_variance(t, t+s) / sum_j c_j(t) ||s^j||^alpha_j` at
/// `||s|| = step` over a regular grid of base points `t`.
///
/// Directions probed: the first axis of each component, then the diagonal.
/// Steps are mirrored to stay inside the cube. Returns `None` when the model
/// has no declared local scales.
pub fn stationarity_ratios(
    model: &CovarianceModel,
    step: f64,
    grid_per_axis: usize,
) -> Result<Option<Vec<StationarityProbe>>> {
    let Some(local) = model.local_stationarity() else {
        return Ok(None);
    };
    let decomposition = model.decomposition();
    let smoothness = model.smoothness();
    let d = decomposition.dim();
    let k = decomposition.components();
    if grid_per_axis < 1 {
        return Err(Error::InvalidArgument("empty probe grid".into()));
    }

    let mut directions: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; d];
            e[decomposition.range(j).start] = 1.0;
            e
        })
        .collect();
    if d > 1 {
        directions.push(vec![1.0 / (d as f64).sqrt(); d]);
    }

    let coords: Vec<f64> = if grid_per_axis == 1 {
        vec![0.5]
    } else {
        (0..grid_per_axis)
            .map(|i| i as f64 / (grid_per_axis - 1) as f64)
            .collect()
    };

    let total = grid_per_axis.pow(d as u32);
    let mut probes = Vec::with_capacity(total * directions.len());
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let t: Vec<f64> = idx.iter().map(|&i| coords[i]).collect();
        for (dir_index, dir) in directions.iter().enumerate() {
            let shift: Vec<f64> = t
                .iter()
                .zip(dir)
                .map(|(&x, &u)| if x + step * u <= 1.0 { step * u } else { -step * u })
                .collect();
            let moved: Vec<f64> = t.iter().zip(&shift).map(|(a, b)| a + b).collect();
            let num = model.increment_variance(&t, &moved)?;
            let mut den = 0.0;
            for j in 0..k {
                let sq: f64 = shift[decomposition.range(j)].iter().map(|x| x * x).sum();
                if sq > 0.0 {
                    den += local.eval(j, &t) * sq.powf(0.5 * smoothness.alpha()[j]);
                }
            }
            probes.push(StationarityProbe {
                point: t.clone(),
                direction: dir_index,
                ratio: num / den,
            });
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < grid_per_axis {
                break;
            }
            *slot = 0;
        }
    }
    Ok(Some(probes))
}

/// Largest relative change of `c_j` under swaps of coordinates within
/// component `j`, sampled at the given points.
pub fn permutation_defect(
    local: &LocalStationarity,
    decomposition: &Decomposition,
    points: &[Vec<f64>],
) -> f64 {
    let mut worst: f64 = 0.0;
    for p in points {
        for j in 0..decomposition.components() {
            let base = local.eval(j, p);
            let r = decomposition.range(j);
            for a in r.clone() {
                for b in (a + 1)..r.end {
                    let mut q = p.clone();
                    q.swap(a, b);
                    let v = local.eval(j, &q);
                    worst = worst.max((v - base).abs() / base.abs().max(f64::MIN_POSITIVE));
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example4() -> CovarianceModel {
        CovarianceModel::fbf(vec![1, 2], vec![0.5, 1.5]).unwrap()
    }

    #[test]
    fn decomposition_bookkeeping() {
        let dec = Decomposition::new(vec![1, 2]).unwrap();
        assert_eq!(dec.dim(), 3);
        assert_eq!(dec.components(), 2);
        assert_eq!(dec.offsets(), &[0, 1, 3]);
        assert_eq!(dec.component_of(0), 0);
        assert_eq!(dec.component_of(1), 1);
        assert_eq!(dec.component_of(2), 1);
        assert_eq!(dec.last_coordinate(1), 2);
        assert!(Decomposition::new(vec![1, 0]).is_err());
        assert!(Decomposition::new(vec![]).is_err());
    }

    #[test]
    fn smoothness_range_and_expansion() {
        assert!(Smoothness::new(vec![0.0]).is_err());
        assert!(Smoothness::new(vec![2.0]).is_err());
        let dec = Decomposition::new(vec![1, 2]).unwrap();
        let sm = Smoothness::new(vec![0.5, 1.5]).unwrap();
        assert_eq!(sm.expand(&dec), vec![0.5, 1.5, 1.5]);
    }

    #[test]
    fn alpha_norm_examples() {
        let dec = Decomposition::new(vec![1, 2]).unwrap();
        let sm = Smoothness::new(vec![0.5, 1.5]).unwrap();
        assert_eq!(alpha_norm(&[0.0; 3], &dec, &sm).unwrap(), 0.0);
        assert_eq!(alpha_norm(&[1.0, 0.0, 0.0], &dec, &sm).unwrap(), 1.0);
        let v = alpha_norm(&[0.25, 0.3, 0.4], &dec, &sm).unwrap();
        assert!((v - (0.5 + 0.5f64.powf(1.5))).abs() < 1e-15);
        assert!((v - 0.853553).abs() < 1e-6);
        assert!(matches!(
            alpha_norm(&[0.0; 2], &dec, &sm),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn covariance_examples() {
        let m = example4();
        assert_eq!(m.covariance(&[0.3, 0.2, 0.9], &[0.0; 3]).unwrap(), 0.0);
        let bm = CovarianceModel::brownian();
        assert!((bm.covariance(&[0.5], &[1.0]).unwrap() - 0.5).abs() < 1e-15);
        let e5 = CovarianceModel::DampedExponential;
        assert!((e5.covariance(&[0.0, 0.0], &[0.0, 0.0]).unwrap() - 100.0).abs() < 1e-12);
        assert!(m.covariance(&[0.0; 2], &[0.0; 3]).is_err());
    }

    #[test]
    fn increment_variance_examples() {
        let m = example4();
        let t = [0.4, 0.1, 0.7];
        assert_eq!(m.increment_variance(&t, &t).unwrap(), 0.0);
        let v = m.increment_variance(&[0.0; 3], &[0.25, 0.3, 0.4]).unwrap();
        assert!((v - 0.853553).abs() < 1e-6);

        let e5 = CovarianceModel::DampedExponential;
        let got = e5.increment_variance(&[0.0, 0.0], &[0.0, 0.1]).unwrap();
        let g1 = 1.0 / 0.1;
        let g2 = 1.0 / 0.11;
        let expected = g1 * g1 + g2 * g2 - 2.0 * g1 * g2 * (-0.1f64).exp();
        assert!(got > 0.0);
        assert!((got - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn non_psd_custom_kernel_is_rejected() {
        // r(t,s) = -1 off the diagonal, 0 on it: variogram 2 > 0; flip sign to go negative
        let bad = CovarianceModel::custom(
            Arc::new(|t: &[f64], s: &[f64]| if t == s { 0.0 } else { 1.0 }),
            None,
            Decomposition::isotropic(1).unwrap(),
            Smoothness::new(vec![1.0]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            bad.increment_variance(&[0.1], &[0.2]),
            Err(Error::NotPositiveSemidefinite(_))
        ));
        let noisy = CovarianceModel::custom(
            Arc::new(|t: &[f64], s: &[f64]| if t == s { 0.0 } else { 1e-12 }),
            None,
            Decomposition::isotropic(1).unwrap(),
            Smoothness::new(vec![1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(noisy.increment_variance(&[0.1], &[0.2]).unwrap(), 0.0);
    }

    #[test]
    fn builtin_gram_matrices_are_psd() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for model in [example4(), CovarianceModel::DampedExponential, CovarianceModel::brownian()] {
            for size in [4usize, 16, 32] {
                let pts: Vec<Vec<f64>> = (0..size)
                    .map(|_| (0..model.dim()).map(|_| rng.gen::<f64>()).collect())
                    .collect();
                let (min, max) = gram_spectrum(&model, &pts).unwrap();
                assert!(min >= -1e-8 * max, "min {min} max {max}");
            }
        }
    }

    #[test]
    fn damped_exponential_is_locally_stationary() {
        let probes = stationarity_ratios(&CovarianceModel::DampedExponential, 1e-4, 6)
            .unwrap()
            .unwrap();
        assert!(!probes.is_empty());
        for p in probes {
            assert!((p.ratio - 1.0).abs() < 0.05, "{p:?}");
        }
    }

    #[test]
    fn fbf_ratios_are_exactly_one() {
        let probes = stationarity_ratios(&example4(), 1e-3, 3).unwrap().unwrap();
        for p in probes {
            assert!((p.ratio - 1.0).abs() < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn builtin_scales_are_permutation_invariant() {
        let e5 = CovarianceModel::DampedExponential;
        let pts = vec![vec![0.1, 0.7], vec![0.9, 0.2], vec![0.5, 0.5]];
        let defect = permutation_defect(
            &e5.local_stationarity().unwrap(),
            &e5.decomposition(),
            &pts,
        );
        assert!(defect < 1e-15);
        let skewed = LocalStationarity::new(vec![Arc::new(|t: &[f64]| 1.0 + t[0])]);
        let defect = permutation_defect(&skewed, &Decomposition::isotropic(2).unwrap(), &pts);
        assert!(defect > 0.1);
    }

    fn unit_point(d: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..=1.0, d)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn covariance_is_symmetric(t in unit_point(3), s in unit_point(3), u in unit_point(2), v in unit_point(2)) {
            let m = example4();
            prop_assert_eq!(m.covariance(&t, &s).unwrap(), m.covariance(&s, &t).unwrap());
            let e5 = CovarianceModel::DampedExponential;
            prop_assert_eq!(e5.covariance(&u, &v).unwrap(), e5.covariance(&v, &u).unwrap());
        }

        #[test]
        fn fbf_variogram_identity(t in unit_point(3), s in unit_point(3)) {
            let m = example4();
            let diff: Vec<f64> = t.iter().zip(&s).map(|(a, b)| a - b).collect();
            let expected = alpha_norm(&diff, &m.decomposition(), &m.smoothness()).unwrap();
            let via_cov = m.covariance(&t, &t).unwrap() + m.covariance(&s, &s).unwrap()
                - 2.0 * m.covariance(&t, &s).unwrap();
            prop_assert!((m.increment_variance(&t, &s).unwrap() - expected).abs() <= 1e-12);
            prop_assert!((via_cov - expected).abs() <= 1e-12);
        }
    }
}
