//! Tail-sensitive evaluation metrics: MMD-RBF and tail-coverage error (TCE).
//!
//! MMD-RBF is the unbiased U-statistic with a Gaussian kernel
//! `exp(-||x-y||^2 / (2 h^2))`; by unbiasedness it may be slightly negative.
//! TCE compares the empirical exceedance probability of generated samples
//! against the nominal level at thresholds fitted on the reference set. The
//! exceedance statistic is `r(x) = ||x - med_ref||` with `med_ref` the
//! coordinatewise median of the reference — robust to heavy tails, where the
//! mean may not exist.

use ndarray::{Array1, ArrayView1, ArrayView2};

use crate::{Error, Result};

/// Rows used at most for the median-bandwidth heuristic.
const BANDWIDTH_POOL_CAP: usize = 2000;

/// Result of an MMD evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MmdEstimate {
    /// Unbiased estimate of squared MMD.
    pub value: f64,
    /// Set when the median pairwise distance was zero (all pooled points
    /// identical); the value is then defined as 0.
    pub degenerate_bandwidth: bool,
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Median pairwise Euclidean distance of the pooled sample, with the pool
/// capped at [`BANDWIDTH_POOL_CAP`] rows (X rows first, then Y rows).
pub fn median_heuristic_bandwidth(x: ArrayView2<f64>, y: ArrayView2<f64>) -> f64 {
    let mut pool: Vec<ArrayView1<f64>> = Vec::new();
    for r in x.rows() {
        if pool.len() >= BANDWIDTH_POOL_CAP {
            break;
        }
        pool.push(r);
    }
    for r in y.rows() {
        if pool.len() >= BANDWIDTH_POOL_CAP {
            break;
        }
        pool.push(r);
    }
    let mut dists = Vec::with_capacity(pool.len() * (pool.len() - 1) / 2);
    for i in 0..pool.len() {
        for j in i + 1..pool.len() {
            dists.push(sq_dist(pool[i], pool[j]).sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    if dists.is_empty() {
        return 0.0;
    }
    dists[dists.len() / 2]
}

/// Unbiased U-statistic estimate of squared MMD with a Gaussian RBF kernel.
///
/// `bandwidth` defaults to the median heuristic on the pooled sample. If the
/// pooled sample is fully degenerate (median distance 0) the estimate is 0
/// with `degenerate_bandwidth` set.
pub fn mmd_rbf(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    bandwidth: Option<f64>,
) -> Result<MmdEstimate> {
    let m = x.nrows();
    let n = y.nrows();
    if m < 2 || n < 2 {
        return Err(Error::Metric(format!(
            "need at least 2 rows per side, got {m} and {n}"
        )));
    }
    if x.ncols() != y.ncols() {
        return Err(Error::Shape(format!(
            "column mismatch: {} vs {}",
            x.ncols(),
            y.ncols()
        )));
    }
    if let Some(h) = bandwidth {
        if !(h > 0.0) {
            return Err(Error::Metric(format!("bandwidth must be positive, got {h}")));
        }
    }
    let h = match bandwidth {
        Some(h) => h,
        None => {
            let h = median_heuristic_bandwidth(x, y);
            if h == 0.0 {
                return Ok(MmdEstimate { value: 0.0, degenerate_bandwidth: true });
            }
            h
        }
    };
    let inv = 1.0 / (2.0 * h * h);
    let kernel = |a: ArrayView1<f64>, b: ArrayView1<f64>| (-sq_dist(a, b) * inv).exp();

    let mut kxx = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                kxx += kernel(x.row(i), x.row(j));
            }
        }
    }
    let mut kyy = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                kyy += kernel(y.row(i), y.row(j));
            }
        }
    }
    let mut kxy = 0.0;
    for i in 0..m {
        for j in 0..n {
            kxy += kernel(x.row(i), y.row(j));
        }
    }
    let value = kxx / (m as f64 * (m as f64 - 1.0)) + kyy / (n as f64 * (n as f64 - 1.0))
        - 2.0 * kxy / (m as f64 * n as f64);
    Ok(MmdEstimate { value, degenerate_bandwidth: false })
}

/// Ordered exceedance levels for TCE, each in (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct TceLevels {
    levels: Vec<f64>,
}

impl TceLevels {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Metric("levels must be nonempty".into()));
        }
        for w in levels.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Metric("levels must be strictly increasing".into()));
            }
        }
        if levels.iter().any(|&q| !(0.0 < q && q < 1.0)) {
            return Err(Error::Metric("levels must lie in (0, 1)".into()));
        }
        Ok(Self { levels })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.levels
    }
}

impl Default for TceLevels {
    fn default() -> Self {
        Self { levels: vec![0.90, 0.95, 0.99] }
    }
}

/// Coordinatewise median of the rows. For even counts, the lower of the two
/// central order statistics is averaged with the upper.
fn coordinatewise_median(m: ArrayView2<f64>) -> Array1<f64> {
    let mut med = Array1::zeros(m.ncols());
    let mut buf: Vec<f64> = Vec::with_capacity(m.nrows());
    for j in 0..m.ncols() {
        buf.clear();
        buf.extend(m.column(j).iter());
        buf.sort_by(|a, b| a.partial_cmp(b).expect("finite entries"));
        let n = buf.len();
        med[j] = if n % 2 == 1 {
            buf[n / 2]
        } else {
            0.5 * (buf[n / 2 - 1] + buf[n / 2])
        };
    }
    med
}

fn centered_norms(m: ArrayView2<f64>, center: &Array1<f64>) -> Vec<f64> {
    m.rows()
        .into_iter()
        .map(|r| {
            r.iter()
                .zip(center.iter())
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Empirical q-quantiles of the centered norm `r(x) = ||x - med_ref||` over
/// the reference set, one per level. Quantile convention: the order
/// statistic at rank `ceil(q * n)` (no interpolation).
pub fn tail_thresholds(reference: ArrayView2<f64>, levels: &TceLevels) -> Result<Vec<f64>> {
    if reference.nrows() == 0 {
        return Err(Error::EmptySample);
    }
    let med = coordinatewise_median(reference);
    let mut r = centered_norms(reference, &med);
    r.sort_by(|a, b| a.partial_cmp(b).expect("finite norms"));
    let n = r.len();
    Ok(levels
        .as_slice()
        .iter()
        .map(|&q| {
            let rank = (q * n as f64).ceil() as usize;
            r[rank.clamp(1, n) - 1]
        })
        .collect())
}

/// Tail-coverage error at a single level:
/// `TCE(q) = |p_gen / (1 - q) - 1|` where `p_gen` is the fraction of
/// generated centered norms strictly exceeding the reference threshold.
pub fn tce(generated: ArrayView2<f64>, reference: ArrayView2<f64>, level: f64) -> Result<f64> {
    let levels = TceLevels::new(vec![level])?;
    Ok(tce_at_levels(generated, reference, &levels)?[0])
}

/// TCE at every level, sharing one threshold fit on the reference.
pub fn tce_at_levels(
    generated: ArrayView2<f64>,
    reference: ArrayView2<f64>,
    levels: &TceLevels,
) -> Result<Vec<f64>> {
    if generated.nrows() == 0 || reference.nrows() == 0 {
        return Err(Error::EmptySample);
    }
    if generated.ncols() != reference.ncols() {
        return Err(Error::Shape(format!(
            "column mismatch: {} vs {}",
            generated.ncols(),
            reference.ncols()
        )));
    }
    let thresholds = tail_thresholds(reference, levels)?;
    let med = coordinatewise_median(reference);
    let r_gen = centered_norms(generated, &med);
    let n = r_gen.len() as f64;
    Ok(levels
        .as_slice()
        .iter()
        .zip(thresholds.iter())
        .map(|(&q, &t)| {
            let exceed = r_gen.iter().filter(|&&r| r > t).count() as f64;
            let p_gen = exceed / n;
            (p_gen / (1.0 - q) - 1.0).abs()
        })
        .collect())
}
