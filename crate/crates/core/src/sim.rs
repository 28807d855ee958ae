//! Orbit simulation shared by the Monte Carlo estimators.
//!
//! Every trajectory draws from its own ChaCha8 stream derived from a master
//! seed and the trajectory index, so results do not depend on scheduling.
//! Right-branch steps `x ↦ 2x - 1` shift out one bit of the mantissa; a
//! dither of one ulp at 1 (reflected into `[0, 1]`) keeps orbits from
//! collapsing onto the fixed points in floating point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::map_core::MapParams;
use crate::observable::Observable;

/// Default cap on a single return time in simulations.
pub const DEFAULT_RETURN_CAP: usize = 100_000_000;

const DITHER: f64 = f64::EPSILON;

/// The generator for trajectory `stream` under `master`.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

/// One step of the map with the right-branch dither.
#[inline]
pub fn dithered_step(p: &MapParams, x: f64, rng: &mut ChaCha8Rng) -> f64 {
    if x <= 0.5 {
        p.step(x)
    } else {
        let y = 2.0 * x - 1.0 + (rng.random::<f64>() - 0.5) * DITHER;
        if y < 0.0 {
            -y
        } else if y > 1.0 {
            2.0 - y
        } else {
            y
        }
    }
}

/// Lebesgue-uniform point of `(1/2, 1]`.
pub fn uniform_y(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - 0.5 * rng.random::<f64>()
}

/// Lebesgue-uniform point of `[0, 1]`.
pub fn uniform_unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.random::<f64>()
}

/// Result of one induced step from `x ∈ Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedStep {
    pub next: f64,
    pub tau: usize,
    /// `Σ_{j<τ} ψ̂(f^j x)`, i.e. `Ψ̂(x)`.
    pub block: f64,
}

/// `F(x)` along the dithered orbit together with `τ(x)` and `Ψ̂(x)`.
pub fn induced_step(
    p: &MapParams,
    psi: &Observable,
    x: f64,
    rng: &mut ChaCha8Rng,
    cap: usize,
) -> Result<InducedStep> {
    let mut y = x;
    let mut block = 0.0;
    for tau in 1..=cap {
        block += psi.centered_value(y);
        y = dithered_step(p, y, rng);
        if y > 0.5 {
            return Ok(InducedStep {
                next: y,
                tau,
                block,
            });
        }
    }
    Err(Error::TailOverflow { x, n_max: cap })
}

/// Advance `n` induced steps, discarding the blocks.
pub fn induced_burn_in(
    p: &MapParams,
    x: f64,
    n: usize,
    rng: &mut ChaCha8Rng,
    cap: usize,
) -> Result<f64> {
    let psi = Observable::constant(0.0);
    let mut y = x;
    for _ in 0..n {
        y = induced_step(p, &psi, y, rng, cap)?.next;
    }
    Ok(y)
}

/// Advance `n` steps of the map.
pub fn burn_in(p: &MapParams, x: f64, n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut y = x;
    for _ in 0..n {
        y = dithered_step(p, y, rng);
    }
    y
}

/// Mean and standard error of the mean, treating `values` as independent.
pub(crate) fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
