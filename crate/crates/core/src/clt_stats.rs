//! Samples of normalized Birkhoff sums, Kolmogorov–Smirnov distance to the
//! normal law, and a batch-means variance estimator.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map_core::MapParams;
use crate::observable::Observable;
use crate::sim::{
    burn_in as orbit_burn_in, dithered_step, induced_burn_in, induced_step, stream_rng,
    uniform_unit, uniform_y, DEFAULT_RETURN_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    FullMap,
    InducedMap,
}

/// `M` values of `S_n ψ̂ / √n` from independent trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltSample {
    pub alpha: f64,
    pub n: usize,
    pub values: Vec<f64>,
    pub seed: u64,
    pub burn_in: usize,
    pub which: Which,
}

impl CltSample {
    /// Unbiased sample variance and its standard error
    /// `sqrt((m4 - s⁴) / M)`.
    pub fn variance(&self) -> (f64, f64) {
        let m = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / m;
        let s2 = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let m4 = self.values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / m;
        (s2, ((m4 - s2 * s2).max(0.0) / m).sqrt())
    }
}

/// Trajectory `t` uses stream `t` of `seed`; starts are Lebesgue on `[0, 1]`
/// (full map) or on `Y` (induced map), followed by `burn_in` steps of the
/// same map.
pub fn birkhoff_samples(
    p: &MapParams,
    psi: &Observable,
    n: usize,
    m: usize,
    burn_in: usize,
    seed: u64,
    which: Which,
) -> Result<CltSample> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!("n = {n}, M = {m}")));
    }
    let norm = (n as f64).sqrt();
    let values = (0..m as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            if psi.is_constant() {
                return Ok(0.0);
            }
            let mut sum = 0.0;
            match which {
                Which::FullMap => {
                    let x0 = uniform_unit(&mut rng);
                    let mut x = orbit_burn_in(p, x0, burn_in, &mut rng);
                    for _ in 0..n {
                        sum += psi.centered_value(x);
                        x = dithered_step(p, x, &mut rng);
                    }
                }
                Which::InducedMap => {
                    let x0 = uniform_y(&mut rng);
                    let mut x = induced_burn_in(p, x0, burn_in, &mut rng, DEFAULT_RETURN_CAP)?;
                    for _ in 0..n {
                        let s = induced_step(p, psi, x, &mut rng, DEFAULT_RETURN_CAP)?;
                        sum += s.block;
                        x = s.next;
                    }
                }
            }
            Ok(sum / norm)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CltSample {
        alpha: p.alpha(),
        n,
        values,
        seed,
        burn_in,
        which,
    })
}

/// `M` exact draws from `N(0, σ²)`, the control for [`ks_normal`].
pub fn synthetic_normal_sample(m: usize, sigma_sq: f64, seed: u64) -> CltSample {
    let mut rng = stream_rng(seed, 0);
    let s = sigma_sq.sqrt();
    let values = (0..m)
        .map(|_| s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect();
    CltSample {
        alpha: f64::NAN,
        n: 0,
        values,
        seed,
        burn_in: 0,
        which: Which::FullMap,
    }
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// The 95% band `1.36 / √M` of the Kolmogorov–Smirnov statistic.
pub fn ks_critical_95(m: usize) -> f64 {
    1.36 / (m as f64).sqrt()
}

/// `sup_x |F_M(x) - Φ(x)|` for the sample scaled by `1/√σ²`.
pub fn ks_normal(sample: &CltSample, sigma_sq: f64) -> Result<f64> {
    if !(sigma_sq > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma_sq = {sigma_sq}")));
    }
    let first = sample.values.first().copied().unwrap_or(0.0);
    if sample.values.iter().all(|&v| v == first) {
        return Err(Error::DegenerateSample(format!(
            "{} identical values",
            sample.values.len()
        )));
    }
    let s = sigma_sq.sqrt();
    let mut z: Vec<f64> = sample.values.iter().map(|v| v / s).collect();
    z.sort_by(f64::total_cmp);
    let m = z.len() as f64;
    let d = z
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            ((i + 1) as f64 / m - f).max(f - i as f64 / m)
        })
        .fold(0.0, f64::max);
    Ok(d)
}

/// Batch-means estimate of `σ²` from one orbit of `total_steps` steps after
/// `burn_in`, split into `n_batches` batches of length `L`: `L · Var(batch
/// means)`, with a jackknife standard error over batches.
pub fn batch_means_variance(
    p: &MapParams,
    psi: &Observable,
    total_steps: usize,
    n_batches: usize,
    burn_in: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_batches < 2 || total_steps / n_batches < 1000 {
        return Err(Error::InvalidParameter(format!(
            "{total_steps} steps in {n_batches} batches"
        )));
    }
    if psi.is_constant() {
        return Ok((0.0, 0.0));
    }
    let len = total_steps / n_batches;
    let mut rng = stream_rng(seed, 0);
    let mut x = orbit_burn_in(p, uniform_unit(&mut rng), burn_in, &mut rng);
    let mut means = Vec::with_capacity(n_batches);
    for _ in 0..n_batches {
        let mut s = 0.0;
        for _ in 0..len {
            s += psi.value(x);
            x = dithered_step(p, x, &mut rng);
        }
        means.push(s / len as f64);
    }
    let l = len as f64;
    let estimate = |skip: Option<usize>| {
        let it = || {
            means
                .iter()
                .enumerate()
                .filter(move |(i, _)| Some(*i) != skip)
                .map(|(_, v)| *v)
        };
        let k = it().count() as f64;
        let mean = it().sum::<f64>() / k;
        l * it().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)
    };
    let full = estimate(None);
    let b = n_batches as f64;
    let loo: Vec<f64> = (0..n_batches).map(|i| estimate(Some(i))).collect();
    let loo_mean = loo.iter().sum::<f64>() / b;
    let jk = ((b - 1.0) / b * loo.iter().map(|v| (v - loo_mean).powi(2)).sum::<f64>()).sqrt();
    Ok((full, jk))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_094_5).abs() < 1e-16);
    }

    #[test]
    fn constant_observable_gives_zeros() {
        let p = MapParams::new(0.2).unwrap();
        let c = Observable::constant(2.0).with_center(2.0);
        let s = birkhoff_samples(&p, &c, 100, 50, 10, 1, Which::FullMap).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
        assert!(matches!(
            ks_normal(&s, 1.0),
            Err(Error::DegenerateSample(_))
        ));
        assert_eq!(
            batch_means_variance(&p, &c, 10_000, 10, 0, 1).unwrap(),
            (0.0, 0.0)
        );
    }

    #[test]
    fn synthetic_control_calibration() {
        let crit = ks_critical_95(10_000);
        let passes = (0..100)
            .filter(|&seed| {
                ks_normal(&synthetic_normal_sample(10_000, 2.0, seed), 2.0).unwrap() < crit
            })
            .count();
        assert!(passes >= 90, "{passes}/100 inside the band");
    }

    #[test]
    fn samples_are_reproducible() {
        let p = MapParams::new(0.3).unwrap();
        let psi = Observable::identity().with_center(0.45);
        for which in [Which::FullMap, Which::InducedMap] {
            let a = birkhoff_samples(&p, &psi, 200, 64, 50, 5, which).unwrap();
            let b = birkhoff_samples(&p, &psi, 200, 64, 50, 5, which).unwrap();
            assert_eq!(a.values, b.values);
            assert_eq!(a.values.len(), 64);
        }
    }

    #[test]
    fn batch_means_on_doubling_map() {
        let p = MapParams::new(0.0).unwrap();
        let (est, se) =
            batch_means_variance(&p, &Observable::identity(), 4_000_000, 100, 1000, 3).unwrap();
        assert!((est - 0.25).abs() < 3.0 * se, "{est} ± {se}");
        assert!(batch_means_variance(&p, &Observable::identity(), 5000, 10, 0, 3).is_err());
    }
}
