//! Alpha-stable distributions: exact samplers, characteristic functions and
//! tail-index estimation.
//!
//! Univariate draws use the Chambers–Mallows–Stuck transform, which is exact
//! and rejection-free. Isotropic multivariate draws use the sub-Gaussian
//! scale-mixture construction `X = loc + scale * sqrt(2A) * Z`, where `Z` is
//! standard Gaussian and `A` is a totally skewed positive (alpha/2)-stable
//! variable with scale `cos(pi*alpha/4)^(2/alpha)`. Both constructions are in
//! the 1-parameterization, so a symmetric law with scale `sigma` has
//! characteristic function `exp(-sigma^alpha * |u|^alpha)`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::{Error, Result};

/// Parameters of a univariate stable law S(alpha, skew, scale, loc; 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableLaw {
    alpha: f64,
    skew: f64,
    scale: f64,
    loc: f64,
}

impl StableLaw {
    /// Validates `0 < alpha <= 2`, `|skew| <= 1`, `scale > 0`.
    pub fn new(alpha: f64, skew: f64, scale: f64, loc: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidStableParam(format!(
                "alpha must lie in (0, 2], got {alpha}"
            )));
        }
        if !(-1.0..=1.0).contains(&skew) || skew.is_nan() {
            return Err(Error::InvalidStableParam(format!(
                "skew must lie in [-1, 1], got {skew}"
            )));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidStableParam(format!(
                "scale must be positive, got {scale}"
            )));
        }
        if !loc.is_finite() {
            return Err(Error::InvalidStableParam(format!(
                "loc must be finite, got {loc}"
            )));
        }
        Ok(Self { alpha, skew, scale, loc })
    }

    /// Symmetric standard law S(alpha, 0, 1, 0).
    pub fn symmetric(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.0, 1.0, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn skew(&self) -> f64 {
        self.skew
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn loc(&self) -> f64 {
        self.loc
    }
}

/// Rotationally invariant stable law on R^dim with characteristic function
/// `exp(i * loc.u - scale^alpha * ||u||^alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotropicStableLaw {
    alpha: f64,
    dim: usize,
    scale: f64,
    loc: Array1<f64>,
}

impl IsotropicStableLaw {
    pub fn new(alpha: f64, dim: usize, scale: f64, loc: Array1<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidStableParam(format!(
                "alpha must lie in (0, 2], got {alpha}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidStableParam("dim must be positive".into()));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidStableParam(format!(
                "scale must be positive, got {scale}"
            )));
        }
        if loc.len() != dim {
            return Err(Error::Shape(format!(
                "loc has length {}, expected dim {dim}",
                loc.len()
            )));
        }
        Ok(Self { alpha, dim, scale, loc })
    }

    /// Centered standard law with scale 1.
    pub fn standard(alpha: f64, dim: usize) -> Result<Self> {
        Self::new(alpha, dim, 1.0, Array1::zeros(dim))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn loc(&self) -> &Array1<f64> {
        &self.loc
    }
}

/// One draw from the standard law S(alpha, skew, 1, 0; 1), alpha in (0, 2).
///
/// Chambers–Mallows–Stuck: U uniform on (-pi/2, pi/2), W standard
/// exponential.
fn cms_standard(alpha: f64, skew: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
    let w: f64 = rng.sample(Exp1);
    if (alpha - 1.0).abs() < 1e-12 {
        let h = FRAC_PI_2 + skew * u;
        (2.0 / PI) * (h * u.tan() - skew * ((FRAC_PI_2 * w * u.cos()) / h).ln())
    } else {
        let ta = (FRAC_PI_2 * alpha).tan();
        let b = (skew * ta).atan() / alpha;
        let s = (1.0 + skew * skew * ta * ta).powf(1.0 / (2.0 * alpha));
        let t1 = (alpha * (u + b)).sin() / u.cos().powf(1.0 / alpha);
        let t2 = ((u - alpha * (u + b)).cos() / w).powf((1.0 - alpha) / alpha);
        s * t1 * t2
    }
}

/// One draw from a totally skewed positive (alpha/2)-stable variable with
/// scale `cos(pi*alpha/4)^(2/alpha)`, the mixing weight of the sub-Gaussian
/// representation. Requires alpha < 2.
fn mixing_variable(alpha: f64, rng: &mut impl Rng) -> f64 {
    let half = alpha / 2.0;
    let scale = (PI * alpha / 4.0).cos().powf(2.0 / alpha);
    scale * cms_standard(half, 1.0, rng)
}

fn draw_univariate(law: &StableLaw, rng: &mut impl Rng) -> f64 {
    if law.alpha == 2.0 {
        // Gaussian with variance 2*scale^2; CMS degenerates here.
        let z: f64 = rng.sample(StandardNormal);
        law.loc + law.scale * std::f64::consts::SQRT_2 * z
    } else if (law.alpha - 1.0).abs() < 1e-12 {
        let z = cms_standard(law.alpha, law.skew, rng);
        law.loc + law.scale * z + law.skew * (2.0 / PI) * law.scale * law.scale.ln()
    } else {
        law.loc + law.scale * cms_standard(law.alpha, law.skew, rng)
    }
}

/// Draws `n` i.i.d. univariate stable variates. Deterministic given `seed`.
pub fn sample_univariate_stable(law: &StableLaw, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidStableParam("sample count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| draw_univariate(law, &mut rng)).collect())
}

/// Draws `n` i.i.d. rows from an isotropic stable law. Deterministic given
/// `seed`.
pub fn sample_isotropic_stable(
    law: &IsotropicStableLaw,
    n: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    if n == 0 {
        return Err(Error::InvalidStableParam("sample count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Array2::zeros((n, law.dim));
    for mut row in out.rows_mut() {
        draw_isotropic_into(law, &mut row, &mut rng);
    }
    Ok(out)
}

/// Fills `row` with one isotropic stable draw using the caller's RNG stream.
pub(crate) fn draw_isotropic_into(
    law: &IsotropicStableLaw,
    row: &mut ndarray::ArrayViewMut1<f64>,
    rng: &mut impl Rng,
) {
    if law.alpha == 2.0 {
        let factor = law.scale * std::f64::consts::SQRT_2;
        for (x, m) in row.iter_mut().zip(law.loc.iter()) {
            let z: f64 = rng.sample(StandardNormal);
            *x = m + factor * z;
        }
    } else {
        let a = mixing_variable(law.alpha, rng);
        let factor = law.scale * (2.0 * a).sqrt();
        for (x, m) in row.iter_mut().zip(law.loc.iter()) {
            let z: f64 = rng.sample(StandardNormal);
            *x = m + factor * z;
        }
    }
}

/// Closed-form characteristic function of an isotropic stable law at `u`.
pub fn stable_char_fn(law: &IsotropicStableLaw, u: ArrayView1<f64>) -> Result<Complex64> {
    if u.len() != law.dim {
        return Err(Error::Shape(format!(
            "frequency has length {}, expected dim {}",
            u.len(),
            law.dim
        )));
    }
    let norm = u.dot(&u).sqrt();
    let magnitude = (-(law.scale.powf(law.alpha) * norm.powf(law.alpha))).exp();
    let phase = law.loc.dot(&u);
    Ok(Complex64::from_polar(magnitude, phase))
}

/// Empirical characteristic function: mean over rows of `exp(i * u.x)`.
pub fn empirical_char_fn(samples: ArrayView2<f64>, u: ArrayView1<f64>) -> Result<Complex64> {
    let n = samples.nrows();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if samples.ncols() != u.len() {
        return Err(Error::Shape(format!(
            "samples have {} columns, frequency has length {}",
            samples.ncols(),
            u.len()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for row in samples.rows() {
        let phase = row.dot(&u);
        acc += Complex64::new(phase.cos(), phase.sin());
    }
    Ok(acc / n as f64)
}

/// Hill estimate of the polynomial tail index from the `k` largest absolute
/// values: `k / sum_{i=1..k} log(|X|_(n-i+1) / |X|_(n-k))`.
pub fn hill_tail_index(samples: &[f64], k: usize) -> Result<f64> {
    let n = samples.len();
    if k < 2 || k >= n {
        return Err(Error::Hill(format!("k must satisfy 2 <= k < n, got k={k}, n={n}")));
    }
    let mut abs: Vec<f64> = samples.iter().map(|x| x.abs()).collect();
    abs.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN samples"));
    let pivot = abs[n - k - 1];
    if pivot <= 0.0 {
        return Err(Error::Hill("order statistic at n-k is not positive".into()));
    }
    let sum: f64 = abs[n - k..].iter().map(|x| (x / pivot).ln()).sum();
    if sum <= 0.0 {
        return Err(Error::Hill("degenerate upper tail: all order statistics equal".into()));
    }
    Ok(k as f64 / sum)
}

/// Default order-statistic count for [`hill_tail_index`]: `floor(n^0.6)`.
pub fn hill_default_k(n: usize) -> usize {
    (n as f64).powf(0.6).floor() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn variance(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn gaussian_case_has_variance_two_sigma_squared() {
        let law = StableLaw::new(2.0, 0.0, 1.0, 0.0).unwrap();
        let xs = sample_univariate_stable(&law, 100_000, 7).unwrap();
        let v = variance(&xs);
        assert!((v - 2.0).abs() < 0.1, "variance {v} not within 5% of 2");
    }

    #[test]
    fn univariate_cf_matches_closed_form() {
        let law = StableLaw::symmetric(1.7).unwrap();
        let xs = sample_univariate_stable(&law, 100_000, 11).unwrap();
        let m = Array2::from_shape_vec((xs.len(), 1), xs).unwrap();
        let phi = empirical_char_fn(m.view(), array![1.0].view()).unwrap();
        let expected = (-1.0f64).exp();
        assert!(
            (phi.re - expected).abs() < 0.01 && phi.im.abs() < 0.01,
            "empirical CF {phi} vs exp(-1)"
        );
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(StableLaw::new(0.0, 0.0, 1.0, 0.0).is_err());
        assert!(StableLaw::new(2.5, 0.0, 1.0, 0.0).is_err());
        assert!(StableLaw::new(1.5, 1.5, 1.0, 0.0).is_err());
        assert!(StableLaw::new(1.5, 0.0, 0.0, 0.0).is_err());
        let law = StableLaw::symmetric(1.5).unwrap();
        assert!(sample_univariate_stable(&law, 0, 1).is_err());
        assert!(IsotropicStableLaw::standard(1.5, 0).is_err());
    }

    #[test]
    fn isotropic_gaussian_case_per_coordinate_variance() {
        let law = IsotropicStableLaw::standard(2.0, 3).unwrap();
        let m = sample_isotropic_stable(&law, 100_000, 3).unwrap();
        for j in 0..3 {
            let col: Vec<f64> = m.column(j).to_vec();
            let v = variance(&col);
            assert!((v - 2.0).abs() < 0.1, "column {j} variance {v}");
        }
    }

    #[test]
    fn isotropic_cf_along_basis_direction() {
        let law = IsotropicStableLaw::standard(1.7, 30).unwrap();
        let m = sample_isotropic_stable(&law, 100_000, 5).unwrap();
        let mut u = Array1::zeros(30);
        u[0] = 1.0;
        let phi = empirical_char_fn(m.view(), u.view()).unwrap();
        let expected = (-1.0f64).exp();
        assert!(
            (phi.re - expected).abs() < 0.01 && phi.im.abs() < 0.01,
            "empirical CF {phi} vs exp(-1)"
        );
    }

    #[test]
    fn rotational_invariance_of_projections() {
        let dim = 30;
        let law = IsotropicStableLaw::standard(1.7, dim).unwrap();
        let m = sample_isotropic_stable(&law, 100_000, 13).unwrap();
        // Two fixed orthonormal directions.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut a = Array1::from_shape_fn(dim, |_| rng.sample::<f64, _>(StandardNormal));
        let mut b = Array1::from_shape_fn(dim, |_| rng.sample::<f64, _>(StandardNormal));
        a /= a.dot(&a).sqrt();
        b -= &(&a * a.dot(&b));
        b /= b.dot(&b).sqrt();
        for scale in [0.5, 1.0, 2.0] {
            let pa = empirical_char_fn(m.view(), (&a * scale).view()).unwrap();
            let pb = empirical_char_fn(m.view(), (&b * scale).view()).unwrap();
            let tol = 3.0 / (m.nrows() as f64).sqrt();
            assert!(
                (pa - pb).norm() < 2.0 * tol,
                "projections differ at scale {scale}: {pa} vs {pb}"
            );
        }
    }

    #[test]
    fn cf_match_at_fixed_frequencies() {
        let n = 100_000;
        let tol = 3.0 / (n as f64).sqrt();
        for (alpha, dim) in [(1.3, 5), (1.7, 30), (2.0, 3)] {
            let law = IsotropicStableLaw::standard(alpha, dim).unwrap();
            let m = sample_isotropic_stable(&law, n, 17).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(23);
            for _ in 0..10 {
                let mut u = Array1::from_shape_fn(dim, |_| rng.sample::<f64, _>(StandardNormal));
                let norm = u.dot(&u).sqrt();
                u /= norm;
                u *= rng.random_range(0.1..2.0);
                let emp = empirical_char_fn(m.view(), u.view()).unwrap();
                let exact = stable_char_fn(&law, u.view()).unwrap();
                assert!(
                    (emp - exact).norm() <= tol,
                    "CF mismatch at alpha={alpha}, dim={dim}: |{emp} - {exact}|"
                );
            }
        }
    }

    #[test]
    fn char_fn_trivial_values() {
        let law = IsotropicStableLaw::standard(1.7, 2).unwrap();
        let one = stable_char_fn(&law, array![0.0, 0.0].view()).unwrap();
        assert!((one - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let phi = stable_char_fn(&law, array![1.0, 0.0].view()).unwrap();
        assert!((phi.re - (-1.0f64).exp()).abs() < 1e-15);

        let gauss = IsotropicStableLaw::standard(2.0, 1).unwrap();
        for t in [0.3, 1.0, 1.7] {
            let phi = stable_char_fn(&gauss, array![t].view()).unwrap();
            assert!((phi.re - (-t * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_cf_trivial_values() {
        let single = Array2::zeros((1, 2));
        let phi = empirical_char_fn(single.view(), array![3.0, -1.0].view()).unwrap();
        assert!((phi - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        let pair = array![[PI], [-PI]];
        let phi = empirical_char_fn(pair.view(), array![1.0].view()).unwrap();
        assert!((phi - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        let empty = Array2::zeros((0, 2));
        assert!(empirical_char_fn(empty.view(), array![1.0, 1.0].view()).is_err());
    }

    #[test]
    fn hill_recovers_pareto_index() {
        // Inverse-CDF Pareto(gamma=2) generator as independent oracle.
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| {
                let u: f64 = rng.random::<f64>();
                (1.0 - u).powf(-0.5)
            })
            .collect();
        let gamma = hill_tail_index(&xs, 1000).unwrap();
        assert!((gamma - 2.0).abs() < 0.2, "Hill estimate {gamma} not within 10% of 2");
    }

    #[test]
    fn hill_recovers_stable_index() {
        let law = StableLaw::symmetric(1.7).unwrap();
        let xs = sample_univariate_stable(&law, 100_000, 43).unwrap();
        let k = hill_default_k(xs.len());
        let gamma = hill_tail_index(&xs, k).unwrap();
        assert!(
            (gamma - 1.7).abs() < 0.255,
            "Hill estimate {gamma} not within 15% of 1.7"
        );
    }

    #[test]
    fn hill_guards() {
        let xs = vec![1.0; 100];
        assert!(hill_tail_index(&xs, 10).is_err(), "constant tail must error");
        let xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert!(hill_tail_index(&xs, 1).is_err());
        assert!(hill_tail_index(&xs, 100).is_err());
        let with_zeros = vec![0.0; 100];
        assert!(hill_tail_index(&with_zeros, 10).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let law = IsotropicStableLaw::standard(1.7, 4).unwrap();
        let a = sample_isotropic_stable(&law, 100, 77).unwrap();
        let b = sample_isotropic_stable(&law, 100, 77).unwrap();
        assert_eq!(a, b);
        let c = sample_isotropic_stable(&law, 100, 78).unwrap();
        assert_ne!(a, c);
    }
}
