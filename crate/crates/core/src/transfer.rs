//! Pullbacks along the left branch and the transfer operator of the induced
//! map.
//!
//! For a target point `z ∈ Y` the preimage of `z` under the `n`-th branch of
//! `F` is `x = (z_{n-1} + 1)/2` with `z_k = g^k(z)`, and the branch Jacobian
//! is `G_n(z) = z'_{n-1}/2`. The induced transfer operator is
//!
//! ```text
//! (P φ)(z) = Σ_n φ((z_{n-1} + 1)/2) · G_n(z)
//! ```
//!
//! Branches `n ≤ N` are resolved on a cylinder-aligned mesh; the remaining
//! branches only see the value of `φ` next to 1/2 and enter through tail
//! moments computed from Gauss nodes pulled back to the full marker depth,
//! followed by a power-law extrapolation `m(I_n) ≈ A n^(-1-1/α)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inducing::{check_y, MarkerTable, DEFAULT_MARKER_DEPTH};
use crate::map_core::MapParams;
use crate::observable::Observable;
use crate::sim::{burn_in, dithered_step, stream_rng, uniform_unit};

/// One step of the pullback recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PullbackState {
    /// `z_n = g^n(z_0)`
    pub z: f64,
    /// `z'_n = d z_n / d z_0`
    pub dz: f64,
    /// `∂_α z_n`
    pub dalpha: f64,
    pub n: usize,
}

/// The states `k = 0..=n` of
///
/// ```text
/// z_k = g(z_{k-1}),  z'_k = z'_{k-1} / f'(z_k),
/// ∂_α z_k = (∂_α z_{k-1} - ∂_α f(z_k)) / f'(z_k)
/// ```
///
/// seeded with `(z0, 1, 0)`; each line differentiates `f(z_k) = z_{k-1}`.
pub fn pullback_sequence(p: &MapParams, z0: f64, n: usize) -> Result<Vec<PullbackState>> {
    check_y(z0)?;
    let mut out = Vec::with_capacity(n + 1);
    let mut s = PullbackState {
        z: z0,
        dz: 1.0,
        dalpha: 0.0,
        n: 0,
    };
    out.push(s);
    for k in 1..=n {
        let z = p.left_inverse(s.z)?;
        let slope = p.derivative_unchecked(z);
        s = PullbackState {
            z,
            dz: s.dz / slope,
            dalpha: (s.dalpha - p.alpha_partial_unchecked(z)) / slope,
            n: k,
        };
        out.push(s);
    }
    Ok(out)
}

/// Bounds on pullbacks along the left branch that are checked numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LemmaBound {
    /// `|z'_n| ≤ 1`
    K0,
    /// `|z'_n| ≤ C n^(-(α+1)/α)`
    K1,
    /// `|z''_n / z'_n| ≤ C`, finite differences of `z'_n`.
    K2,
    /// `|z'''_n / z'_n| ≤ C`, finite differences of `z'_n`.
    K3,
    /// `|∂_α z_n| ≤ C n^(-1/α) (log n)²`
    K4,
    /// `|∂_α z'_n / z'_n| ≤ C (log n)³`, finite differences of `z'_n` in α.
    K5,
    /// `‖∂_α F_n^{-1}‖_∞ ≤ C n^(-1/α) (log n)²`
    K6,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecadeSup {
    pub n_lo: usize,
    pub n_hi: usize,
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub which: LemmaBound,
    pub alpha: f64,
    /// Supremum of the scaled quantity over the whole sample.
    pub sup_scaled: f64,
    /// `(n, z_0)` where the supremum is attained.
    pub argmax: (usize, f64),
    /// Suprema over `[10^k, 10^(k+1))` pieces of the range.
    pub decades: Vec<DecadeSup>,
}

impl BoundReport {
    pub fn decade_containing(&self, n: usize) -> Option<&DecadeSup> {
        self.decades.iter().find(|d| d.n_lo <= n && n <= d.n_hi)
    }
}

/// `(log n)` clamped below by 1 so the scaled bounds stay finite at n < 3.
fn log_factor(n: usize) -> f64 {
    (n as f64).ln().max(1.0)
}

/// Supremum over `z_samples × n_range` of the scaled quantity of `which`,
/// e.g. `|z'_n| n^((α+1)/α)` for K1. Bounded suprema that do not grow across
/// decades of `n` are the numerical counterpart of the bound.
pub fn lemma_bound_check(
    p: &MapParams,
    which: LemmaBound,
    n_range: std::ops::RangeInclusive<usize>,
    z_samples: &[f64],
) -> Result<BoundReport> {
    let alpha = p.alpha();
    let (n_lo, n_hi) = (*n_range.start(), *n_range.end());
    if n_lo == 0 || n_hi < n_lo || z_samples.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "bound check over n ∈ [{n_lo}, {n_hi}] with {} samples",
            z_samples.len()
        )));
    }
    if alpha == 0.0 && !matches!(which, LemmaBound::K0 | LemmaBound::K2 | LemmaBound::K3) {
        return Err(Error::InvalidParameter(
            "scaled pullback bounds need alpha > 0".into(),
        ));
    }
    let per_sample: Vec<Vec<f64>> = z_samples
        .par_iter()
        .map(|&z0| scaled_series(p, which, z0, n_hi))
        .collect::<Result<_>>()?;

    let mut sup = f64::NEG_INFINITY;
    let mut argmax = (n_lo, z_samples[0]);
    for (series, &z0) in per_sample.iter().zip(z_samples) {
        for n in n_lo..=n_hi {
            let v = series[n];
            if v > sup {
                sup = v;
                argmax = (n, z0);
            }
        }
    }
    let mut decades = Vec::new();
    let mut lo = n_lo;
    while lo <= n_hi {
        let mut hi = 10usize.pow((lo as f64).log10().floor() as u32 + 1) - 1;
        hi = hi.min(n_hi);
        let s = per_sample
            .iter()
            .flat_map(|series| series[lo..=hi].iter().copied())
            .fold(f64::NEG_INFINITY, f64::max);
        decades.push(DecadeSup {
            n_lo: lo,
            n_hi: hi,
            sup: s,
        });
        lo = hi + 1;
    }
    Ok(BoundReport {
        which,
        alpha,
        sup_scaled: sup,
        argmax,
        decades,
    })
}

/// Scaled quantity of `which` for `n = 0..=n_max` along the pullback of `z0`.
fn scaled_series(p: &MapParams, which: LemmaBound, z0: f64, n_max: usize) -> Result<Vec<f64>> {
    let alpha = p.alpha();
    let seq = pullback_sequence(p, z0, n_max)?;
    let mut out = vec![0.0; n_max + 1];
    match which {
        LemmaBound::K0 => {
            for s in &seq {
                out[s.n] = s.dz.abs();
            }
        }
        LemmaBound::K1 => {
            let e = (alpha + 1.0) / alpha;
            for s in &seq {
                out[s.n] = s.dz.abs() * (s.n as f64).powf(e);
            }
        }
        LemmaBound::K4 => {
            for s in &seq {
                let n = s.n.max(1);
                out[s.n] = s.dalpha.abs() * (n as f64).powf(1.0 / alpha) / log_factor(n).powi(2);
            }
        }
        LemmaBound::K6 => {
            // F_n^{-1}(z) = (z_{n-1} + 1)/2; the first branch is α-free.
            for n in 1..=n_max {
                let d = 0.5 * seq[n - 1].dalpha.abs();
                out[n] = if d == 0.0 {
                    0.0
                } else {
                    d * (n as f64).powf(1.0 / alpha) / log_factor(n).powi(2)
                };
            }
        }
        LemmaBound::K2 | LemmaBound::K3 => {
            let h = 1e-4;
            let z_lo = (z0 - 2.0 * h).max(0.5 + 1e-12);
            let z_hi = (z0 + 2.0 * h).min(1.0);
            let c = 0.5 * (z_lo + z_hi);
            let h = 0.25 * (z_hi - z_lo);
            let pts: Vec<Vec<PullbackState>> = (-2..=2)
                .map(|k| pullback_sequence(p, c + k as f64 * h, n_max))
                .collect::<Result<_>>()?;
            for n in 0..=n_max {
                let d: Vec<f64> = pts.iter().map(|s| s[n].dz).collect();
                let mid = d[2];
                out[n] = if which == LemmaBound::K2 {
                    ((d[3] - d[1]) / (2.0 * h) / mid).abs()
                } else {
                    ((d[4] - 2.0 * d[2] + d[0]) / (4.0 * h * h) / mid).abs()
                };
            }
        }
        LemmaBound::K5 => {
            let h = 1e-6;
            let plus = MapParams::raw(alpha + h);
            let minus = MapParams::raw((alpha - h).max(0.0));
            let span = alpha + h - (alpha - h).max(0.0);
            let sp = pullback_sequence(&plus, z0, n_max)?;
            let sm = pullback_sequence(&minus, z0, n_max)?;
            for n in 0..=n_max {
                let rel = (sp[n].dz - sm[n].dz) / span / seq[n].dz;
                out[n] = rel.abs() / log_factor(n.max(1)).powi(3);
            }
        }
    }
    Ok(out)
}

/// Discretization settings shared by the induced operator and everything
/// built on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec {
    /// Number of resolved branches `N`.
    pub n_branch: usize,
    /// `L` in `max(min_cells, ⌈L m(I_n)/m(I_1)⌉)` cells per cylinder.
    pub cells_scale: usize,
    pub min_cells: usize,
    /// Marker depth used for the tail moments.
    pub marker_depth: usize,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self {
            n_branch: 400,
            cells_scale: 64,
            min_cells: 4,
            marker_depth: DEFAULT_MARKER_DEPTH,
        }
    }
}

impl MeshSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_branch < 2 || self.cells_scale == 0 || self.min_cells == 0 {
            return Err(Error::InvalidParameter(format!("mesh settings {self:?}")));
        }
        if self.marker_depth < self.n_branch + 2 {
            return Err(Error::InvalidParameter(format!(
                "marker depth {} must exceed n_branch + 1 = {}",
                self.marker_depth,
                self.n_branch + 1
            )));
        }
        Ok(())
    }
}

/// Cylinder-aligned mesh over `(y_{N+1}, 1]`, stored through offsets
/// `w = 2x - 1`. Cylinder `I_n` is `w ∈ (x_n, x_{n-1}]`, split uniformly.
/// Cells are ordered by increasing `w`; cell 0 borders the unresolved
/// tail `(1/2, y_{N+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    alpha: f64,
    n_branch: usize,
    breaks: Vec<f64>,
    mids: Vec<f64>,
    lens: Vec<f64>,
    cylinder: Vec<u32>,
    /// First cell of cylinder `n`, indexed by `n` (entry 0 unused).
    first_cell: Vec<usize>,
    cells_in: Vec<usize>,
    /// `x_n` for `n = 0..=N+1`.
    x: Vec<f64>,
    /// `x_{n-1} - x_n` for `n = 0..=N+1` (entry 0 unused).
    width: Vec<f64>,
    tail_len: f64,
}

impl Mesh {
    pub fn new(markers: &MarkerTable, n_branch: usize, spec: &MeshSpec) -> Result<Self> {
        if n_branch + 1 > markers.n_max() {
            return Err(Error::TailOverflow {
                x: f64::NAN,
                n_max: markers.n_max(),
            });
        }
        let m1 = markers.cylinder_length(1);
        let x: Vec<f64> = markers.xs()[..=n_branch + 1].to_vec();
        let mut width = vec![0.0; n_branch + 2];
        for (n, w) in width.iter_mut().enumerate().skip(1) {
            *w = 2.0 * markers.cylinder_length(n);
        }
        let mut breaks = vec![x[n_branch]];
        let mut first_cell = vec![0; n_branch + 1];
        let mut cells_in = vec![0; n_branch + 1];
        let mut cylinder = Vec::new();
        for n in (1..=n_branch).rev() {
            let ratio = markers.cylinder_length(n) / m1;
            let k = spec
                .min_cells
                .max((spec.cells_scale as f64 * ratio).ceil() as usize);
            first_cell[n] = cylinder.len();
            cells_in[n] = k;
            for j in 1..=k {
                let b = if j == k {
                    x[n - 1]
                } else {
                    x[n] + width[n] * j as f64 / k as f64
                };
                breaks.push(b);
                cylinder.push(n as u32);
            }
        }
        let mids: Vec<f64> = breaks.windows(2).map(|b| 0.5 * (b[0] + b[1])).collect();
        let lens: Vec<f64> = (0..mids.len())
            .map(|c| {
                let n = cylinder[c] as usize;
                0.5 * width[n] / cells_in[n] as f64
            })
            .collect();
        Ok(Self {
            alpha: markers.alpha(),
            n_branch,
            breaks,
            mids,
            lens,
            cylinder,
            first_cell,
            cells_in,
            tail_len: 0.5 * x[n_branch],
            x,
            width,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_branch(&self) -> usize {
        self.n_branch
    }

    pub fn len(&self) -> usize {
        self.mids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mids.is_empty()
    }

    /// Breakpoint offsets `w`, increasing from `x_N` to 1.
    pub fn break_offsets(&self) -> &[f64] {
        &self.breaks
    }

    /// Breakpoints in `(1/2, 1]`.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.breaks.iter().map(|w| 0.5 * (w + 1.0)).collect()
    }

    pub fn mid_offsets(&self) -> &[f64] {
        &self.mids
    }

    /// Cell midpoint in `(1/2, 1]`.
    pub fn mid(&self, c: usize) -> f64 {
        0.5 * (self.mids[c] + 1.0)
    }

    /// Lebesgue lengths of the cells, the midpoint quadrature weights.
    pub fn quad_weights(&self) -> &[f64] {
        &self.lens
    }

    pub fn cylinder_of_cell(&self, c: usize) -> usize {
        self.cylinder[c] as usize
    }

    pub fn cells_in(&self, n: usize) -> usize {
        self.cells_in[n]
    }

    /// Measure of the unresolved part `(1/2, y_{N+1}]` of `Y`.
    pub fn tail_len(&self) -> f64 {
        self.tail_len
    }

    /// `Σ weights + tail`, which equals `1/2` up to rounding.
    pub fn total_len(&self) -> f64 {
        self.lens.iter().sum::<f64>() + self.tail_len
    }

    /// Linear interpolation stencil `(lo, hi, t)` at offset `w` known to lie
    /// in cylinder `n`. Values below the first midpoint take the first cell;
    /// above the last midpoint the last two cells are extrapolated.
    fn stencil(&self, n: usize, w: f64) -> (u32, u32, f64) {
        let k = self.cells_in[n];
        let rel = (w - self.x[n]) / self.width[n];
        let j = ((rel * k as f64).floor().max(0.0) as usize).min(k - 1);
        let c = self.first_cell[n] + j;
        let last = self.len() - 1;
        let (a, b) = if w < self.mids[c] {
            if c == 0 {
                return (0, 0, 0.0);
            }
            (c - 1, c)
        } else if c == last {
            (last - 1, last)
        } else {
            (c, c + 1)
        };
        let t = (w - self.mids[a]) / (self.mids[b] - self.mids[a]);
        (a as u32, b as u32, t)
    }
}

/// A function on `Y` sampled at the mesh midpoints. Beyond the resolved
/// cylinders it takes the value of cell 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a mesh of {} cells",
                values.len(),
                mesh.len()
            )));
        }
        Ok(Self { mesh, values })
    }

    pub fn constant(mesh: Arc<Mesh>, c: f64) -> Self {
        let values = vec![c; mesh.len()];
        Self { mesh, values }
    }

    /// Samples `f` at the midpoints (arguments in `(1/2, 1]`).
    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..mesh.len()).map(|c| f(mesh.mid(c))).collect();
        Self { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn quad_weights(&self) -> &[f64] {
        self.mesh.quad_weights()
    }

    /// Value used on the unresolved tail next to 1/2.
    pub fn tail_value(&self) -> f64 {
        self.values[0]
    }

    /// Midpoint rule over `Y`, including the unresolved tail.
    pub fn integral(&self) -> f64 {
        integrate(&self.mesh, &self.values)
    }

    /// `∫ |self - other| dm`
    pub fn l1_distance(&self, other: &GridFunction) -> f64 {
        let diff: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .collect();
        integrate(&self.mesh, &diff)
    }

    /// Piecewise-linear evaluation at `x ∈ Y`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_y(x)?;
        let w = 2.0 * x - 1.0;
        if w <= self.mesh.x[self.mesh.n_branch] {
            return Ok(self.tail_value());
        }
        let above = self.mesh.x.partition_point(|&m| m >= w);
        let (a, b, t) = self.mesh.stencil(above, w);
        Ok(self.values[a as usize] * (1.0 - t) + self.values[b as usize] * t)
    }

    /// Largest second difference quotient `|Δ²φ| / Δw²` over interior
    /// cells of cylinders `1..=n_upto`, in `x` units.
    pub fn max_second_difference(&self, n_upto: usize) -> f64 {
        let m = &self.mesh;
        let mut worst: f64 = 0.0;
        for c in 1..m.len() - 1 {
            if m.cylinder_of_cell(c) > n_upto {
                continue;
            }
            let (xl, xc, xr) = (m.mid(c - 1), m.mid(c), m.mid(c + 1));
            let (fl, fc, fr) = (self.values[c - 1], self.values[c], self.values[c + 1]);
            let d = 2.0 * ((fr - fc) / (xr - xc) - (fc - fl) / (xc - xl)) / (xr - xl);
            worst = worst.max(d.abs());
        }
        worst
    }
}

fn integrate(mesh: &Mesh, values: &[f64]) -> f64 {
    values
        .iter()
        .zip(mesh.quad_weights())
        .map(|(v, w)| v * w)
        .sum::<f64>()
        + values[0] * mesh.tail_len()
}

/// `Σ_{n>N} ∫_{I_n} τ^p dm` for `p = 0, 1, 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailMoments {
    pub mass: f64,
    pub tau: f64,
    pub tau2: f64,
}

/// `Σ_{n>N} ∫_{I_n} w dm` for `w = Ψ, τΨ, Ψ²`, with `Ψ` the un-centered
/// block sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableTail {
    pub psi: f64,
    pub tau_psi: f64,
    pub psi2: f64,
}

impl ObservableTail {
    /// `Σ_{n>N} ∫ Ψ̂ dm` with `Ψ̂ = Ψ - c τ`.
    pub fn centered(&self, m: &TailMoments, c: f64) -> f64 {
        self.psi - c * m.tau
    }

    /// `Σ_{n>N} ∫ Ψ̂² dm`.
    pub fn centered_sq(&self, m: &TailMoments, c: f64) -> f64 {
        self.psi2 - 2.0 * c * self.tau_psi + c * c * m.tau2
    }
}

/// 6-point Gauss–Legendre rule on `[-1, 1]`.
const GAUSS_NODES: [f64; 6] = [
    -0.932_469_514_203_152,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152,
];
const GAUSS_WEIGHTS: [f64; 6] = [
    0.171_324_492_379_170_3,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691,
    0.467_913_934_572_691,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_3,
];

/// `Σ_{n>M} n^(-q)` by Euler–Maclaurin, `q > 1`.
fn zeta_tail(m: f64, q: f64) -> f64 {
    m.powf(1.0 - q) / (q - 1.0) - 0.5 * m.powf(-q) + q * m.powf(-q - 1.0) / 12.0
}

/// Gauss nodes in `z` pulled back to the full marker depth; carries the
/// unresolved branches `N < n ≤ L` of the tail integrals.
#[derive(Debug, Clone, PartialEq)]
struct TailNodes {
    /// Branches `N+1..=L` are covered.
    first: usize,
    last: usize,
    /// Per node: `z_k` for `k = 0..L` (offsets of branch `k+1` preimages).
    z: Vec<Vec<f64>>,
    /// Per node and branch `n` (index `n - first`): Gauss weight times `G_n`.
    weight: Vec<Vec<f64>>,
    /// `A` in `m(I_n) ≈ A n^(-s)` beyond `L`, and `s`.
    amplitude: f64,
    exponent: f64,
}

impl TailNodes {
    fn new(p: &MapParams, markers: &MarkerTable, n_branch: usize) -> Result<Self> {
        let last = markers.n_max();
        let first = n_branch + 1;
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..GAUSS_NODES.len())
            .into_par_iter()
            .map(|q| {
                let z0 = 0.75 + 0.25 * GAUSS_NODES[q];
                let gw = 0.25 * GAUSS_WEIGHTS[q];
                let mut zs = Vec::with_capacity(last);
                let mut ws = Vec::with_capacity(last + 1 - first);
                let (mut z, mut dz) = (z0, 1.0);
                for k in 0..last {
                    // Branch k+1 has offset z_k and Jacobian z'_k / 2.
                    zs.push(z);
                    if k + 1 >= first {
                        ws.push(gw * 0.5 * dz);
                    }
                    let next = p.left_inverse(z)?;
                    dz /= p.derivative_unchecked(next);
                    z = next;
                }
                Ok((zs, ws))
            })
            .collect::<Result<_>>()?;
        let (z, weight) = rows.into_iter().unzip();
        let (amplitude, exponent) = if p.alpha() > 0.0 {
            let s = 1.0 + 1.0 / p.alpha();
            (markers.cylinder_length(last) * (last as f64).powf(s), s)
        } else {
            (0.0, f64::INFINITY)
        };
        Ok(Self {
            first,
            last,
            z,
            weight,
            amplitude,
            exponent,
        })
    }

    /// `Σ_{n>M} n^p m(I_n)` from the power law, `M = last`.
    fn extrapolated(&self, p: i32) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        self.amplitude * zeta_tail(self.last as f64, self.exponent - p as f64)
    }

    fn moments(&self) -> TailMoments {
        let mut m = TailMoments {
            mass: 0.0,
            tau: 0.0,
            tau2: 0.0,
        };
        for ws in &self.weight {
            for (i, w) in ws.iter().enumerate() {
                let n = (self.first + i) as f64;
                m.mass += w;
                m.tau += n * w;
                m.tau2 += n * n * w;
            }
        }
        m.mass += self.extrapolated(0);
        m.tau += self.extrapolated(1);
        m.tau2 += self.extrapolated(2);
        m
    }

    fn observable(&self, psi: &Observable) -> ObservableTail {
        let mut t = ObservableTail {
            psi: 0.0,
            tau_psi: 0.0,
            psi2: 0.0,
        };
        let mut offset_sum = 0.0;
        let mut offset_weight = 0.0;
        for (zs, ws) in self.z.iter().zip(&self.weight) {
            // prefix = Σ_{j=1}^{n-1} ψ(z_j)
            let mut prefix = 0.0;
            for n in 1..=self.last {
                if n >= 2 {
                    prefix += psi.value(zs[n - 1]);
                }
                if n < self.first {
                    continue;
                }
                let block = psi.value(0.5 * (zs[n - 1] + 1.0)) + prefix;
                let w = ws[n - self.first];
                let nf = n as f64;
                t.psi += w * block;
                t.tau_psi += w * nf * block;
                t.psi2 += w * block * block;
                if n == self.last {
                    offset_sum += w * (block - psi.value(0.0) * nf);
                    offset_weight += w;
                }
            }
        }
        if self.amplitude > 0.0 && offset_weight > 0.0 {
            // Beyond the table Ψ_n ≈ ψ(0) n + K.
            let slope = psi.value(0.0);
            let k = offset_sum / offset_weight;
            let (z0, z1, z2) = (
                self.extrapolated(0),
                self.extrapolated(1),
                self.extrapolated(2),
            );
            t.psi += slope * z1 + k * z0;
            t.tau_psi += slope * z2 + k * z1;
            t.psi2 += slope * slope * z2 + 2.0 * slope * k * z1 + k * k * z0;
        }
        t
    }
}

/// Discretized induced transfer operator for one α.
#[derive(Debug, Clone)]
pub struct InducedOperator {
    params: MapParams,
    markers: Arc<MarkerTable>,
    mesh: Arc<Mesh>,
    n: usize,
    /// Row-major `[cell][branch - 1]`: preimage offsets `z_{n-1}(z_c)`.
    pre: Vec<f64>,
    /// Interpolation stencil per preimage and its two coefficients
    /// `G_n (1-t)` and `G_n t`, where `G_n(z_c) = z'_{n-1}(z_c)/2`.
    lo: Vec<u32>,
    hi: Vec<u32>,
    a: Vec<f64>,
    b: Vec<f64>,
    /// Shape of the unresolved branches at each target, integrating to 1.
    tail_shape: Vec<f64>,
    correction: f64,
    tail_nodes: TailNodes,
    tail: TailMoments,
}

impl InducedOperator {
    pub fn new(p: &MapParams, spec: &MeshSpec) -> Result<Self> {
        spec.validate()?;
        let markers = Arc::new(MarkerTable::new(p, spec.marker_depth)?);
        // Small α exhausts the floating-point range before the nominal depth.
        let n = spec.n_branch.min(markers.n_max().saturating_sub(2)).max(1);
        let mesh = Arc::new(Mesh::new(&markers, n, spec)?);
        let m = mesh.len();
        let x_n = markers.x(n);
        let x_n1 = markers.x(n + 1);
        let rows: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..m)
            .into_par_iter()
            .map(|c| {
                let mut pre = Vec::with_capacity(n);
                let mut jac = Vec::with_capacity(n);
                let (mut z, mut dz) = (mesh.mid(c), 1.0);
                for _ in 0..n {
                    pre.push(z);
                    jac.push(0.5 * dz);
                    let next = p.left_inverse(z)?;
                    dz /= p.derivative_unchecked(next);
                    z = next;
                }
                Ok((pre, jac, dz / (x_n - x_n1)))
            })
            .collect::<Result<_>>()?;
        let mut pre = Vec::with_capacity(m * n);
        let mut jac = Vec::with_capacity(m * n);
        let mut tail_shape = Vec::with_capacity(m);
        for (a, b, s) in rows {
            pre.extend(a);
            jac.extend(b);
            tail_shape.push(s);
        }
        let mut lo = Vec::with_capacity(m * n);
        let mut hi = Vec::with_capacity(m * n);
        let mut t = Vec::with_capacity(m * n);
        for c in 0..m {
            for k in 0..n {
                let (a, b, s) = mesh.stencil(k + 1, pre[c * n + k]);
                lo.push(a);
                hi.push(b);
                t.push(s);
            }
        }
        let tail_nodes = TailNodes::new(p, &markers, n)?;
        let tail = tail_nodes.moments();

        // Mass received by each source cell under the midpoint rule; its
        // mismatch with the cell length is a second-order error indicator.
        let lens = mesh.quad_weights();
        let mut received = vec![0.0; m];
        for c in 0..m {
            for i in c * n..(c + 1) * n {
                received[lo[i] as usize] += lens[c] * jac[i] * (1.0 - t[i]);
                received[hi[i] as usize] += lens[c] * jac[i] * t[i];
            }
            received[0] += lens[c] * tail.mass * tail_shape[c];
        }
        let correction = (0..m)
            .map(|j| {
                let target = lens[j] + if j == 0 { mesh.tail_len() } else { 0.0 };
                (received[j] / target - 1.0).abs()
            })
            .fold(0.0, f64::max);
        let a: Vec<f64> = (0..m * n).map(|i| jac[i] * (1.0 - t[i])).collect();
        let b: Vec<f64> = (0..m * n).map(|i| jac[i] * t[i]).collect();
        Ok(Self {
            params: *p,
            markers,
            mesh,
            n,
            pre,
            lo,
            hi,
            a,
            b,
            tail_shape,
            correction,
            tail_nodes,
            tail,
        })
    }

    pub fn params(&self) -> &MapParams {
        &self.params
    }

    pub fn markers(&self) -> &Arc<MarkerTable> {
        &self.markers
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    /// Resolved branches `N` (may be below the requested count for small α).
    pub fn n_branch(&self) -> usize {
        self.n
    }

    pub fn tail_moments(&self) -> &TailMoments {
        &self.tail
    }

    /// Mass of the branches beyond `N`, carried by the tail closure.
    pub fn truncation_deficit(&self) -> f64 {
        self.tail.mass
    }

    /// Largest relative mismatch between the mass a cell receives under
    /// the midpoint rule and its length; a second-order error indicator.
    pub fn mass_correction(&self) -> f64 {
        self.correction
    }

    /// `P φ`.
    pub fn apply(&self, phi: &GridFunction) -> GridFunction {
        self.apply_weighted(phi, None, self.tail.mass)
    }

    /// `P(w φ)` where `w` is given per `(cell, branch)` at the preimages and
    /// `tail_w = Σ_{n>N} ∫_{I_n} w dm`.
    pub(crate) fn apply_weighted(
        &self,
        phi: &GridFunction,
        weight: Option<&[f64]>,
        tail_w: f64,
    ) -> GridFunction {
        let n = self.n;
        let v = phi.values();
        let tail_v = phi.tail_value();
        let out: Vec<f64> = (0..self.mesh.len())
            .into_par_iter()
            .map(|c| {
                let row = c * n..(c + 1) * n;
                let mut acc = 0.0;
                for i in row {
                    let val =
                        v[self.lo[i] as usize] * self.a[i] + v[self.hi[i] as usize] * self.b[i];
                    acc += weight.map_or(val, |w| w[i] * val);
                }
                acc + tail_v * tail_w * self.tail_shape[c]
            })
            .collect();
        GridFunction {
            mesh: Arc::clone(&self.mesh),
            values: out,
        }
    }

    /// Return times `τ = n` at the preimages, in the layout of
    /// [`Self::apply_weighted`].
    pub(crate) fn return_times(&self) -> Vec<f64> {
        let n = self.n;
        (0..self.mesh.len() * n)
            .map(|i| (i % n + 1) as f64)
            .collect()
    }

    /// Un-centered block sums `Ψ` at every preimage and their tail moments.
    pub fn block_table(&self, psi: &Observable) -> BlockTable {
        let n = self.n;
        let blocks: Vec<f64> = self
            .pre
            .par_chunks(n)
            .flat_map_iter(|row| {
                let mut prefix = 0.0;
                (0..n).map(move |k| {
                    if k >= 1 {
                        prefix += psi.value(row[k]);
                    }
                    psi.value(0.5 * (row[k] + 1.0)) + prefix
                })
            })
            .collect();
        BlockTable {
            blocks,
            tail: self.tail_nodes.observable(psi),
        }
    }
}

/// Block sums of an observable on the preimage grid of an
/// [`InducedOperator`].
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTable {
    blocks: Vec<f64>,
    tail: ObservableTail,
}

impl BlockTable {
    pub fn tail(&self) -> &ObservableTail {
        &self.tail
    }

    /// `Ψ̂ = Ψ - c τ` per preimage.
    pub fn centered(&self, n_branch: usize, center: f64) -> Vec<f64> {
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| b - center * (i % n_branch + 1) as f64)
            .collect()
    }

    pub fn raw(&self) -> &[f64] {
        &self.blocks
    }
}

/// Histogram with explicit bin edges; `density[i] = mass[i] / width[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub mass: Vec<f64>,
    pub density: Vec<f64>,
    pub samples: u64,
}

impl Histogram {
    /// `bins` cells on `[0, 1]`: half geometric on `[0, 1/2]` down to
    /// `1e-8` (plus `[0, 1e-8]`), half uniform on `[1/2, 1]`.
    pub fn graded_edges(bins: usize) -> Vec<f64> {
        let left = bins / 2;
        let right = bins - left;
        let (lo, hi) = (1e-8_f64.ln(), 0.5_f64.ln());
        let mut edges = vec![0.0];
        for i in 0..left {
            edges.push((lo + (hi - lo) * i as f64 / (left - 1) as f64).exp());
        }
        *edges.last_mut().unwrap() = 0.5;
        for i in 1..=right {
            edges.push(0.5 + 0.5 * i as f64 / right as f64);
        }
        edges
    }

    pub fn from_mass(edges: Vec<f64>, mass: Vec<f64>, samples: u64) -> Self {
        let density = mass
            .iter()
            .zip(edges.windows(2))
            .map(|(m, e)| m / (e[1] - e[0]))
            .collect();
        Self {
            edges,
            mass,
            density,
            samples,
        }
    }

    pub fn bin_of(edges: &[f64], x: f64) -> usize {
        edges
            .partition_point(|&e| e <= x)
            .saturating_sub(1)
            .min(edges.len() - 2)
    }

    /// Mass of `[0, eps)` summed over whole bins.
    pub fn mass_below(&self, eps: f64) -> f64 {
        self.edges
            .windows(2)
            .zip(&self.mass)
            .filter(|(e, _)| e[1] <= eps)
            .map(|(_, m)| m)
            .sum()
    }

    /// `∫ f dρ` by the bin-midpoint rule.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.edges
            .windows(2)
            .zip(&self.mass)
            .map(|(e, m)| m * f(0.5 * (e[0] + e[1])))
            .sum()
    }
}

/// Induced invariant density and Kac normalization.
#[derive(Debug, Clone)]
pub struct DensityReport {
    /// Density of `μ_α` on `Y`, `∫_Y h dm = 1`.
    pub h: GridFunction,
    /// `∫ τ dμ_α`
    pub kac: f64,
    /// `ν_α(Y) = 1 / kac`
    pub nu_y: f64,
    /// Push-forward of `h` along the return blocks; approximates `ρ_α`.
    pub rho_hist: Histogram,
    /// `‖P h - h‖₁`
    pub residual: f64,
    pub iterations: usize,
    /// L¹ increments of the power iteration.
    pub increments: Vec<f64>,
    /// Mass of `Y` not covered by resolved branches.
    pub tail_deficit: f64,
    pub operator: Arc<InducedOperator>,
}

impl DensityReport {
    pub fn alpha(&self) -> f64 {
        self.operator.params().alpha()
    }
}

pub const DEFAULT_DENSITY_TOL: f64 = 1e-13;
pub const DEFAULT_DENSITY_MAX_ITER: usize = 2000;

/// `P_F φ` for the operator assembled with `n_branch` resolved branches.
pub fn induced_transfer_apply(
    p: &MapParams,
    phi: &GridFunction,
    n_branch: usize,
) -> Result<GridFunction> {
    let spec = MeshSpec {
        n_branch,
        ..MeshSpec::default()
    };
    let op = InducedOperator::new(p, &spec)?;
    if op.mesh().as_ref() != phi.mesh().as_ref() {
        return Err(Error::InvalidParameter(
            "grid function lives on a different mesh".into(),
        ));
    }
    Ok(op.apply(phi))
}

/// Power iteration `φ ← Pφ / ∫Pφ` from the uniform density.
pub fn invariant_density_induced(
    p: &MapParams,
    spec: &MeshSpec,
    tol: f64,
    max_iter: usize,
) -> Result<DensityReport> {
    let op = Arc::new(InducedOperator::new(p, spec)?);
    invariant_density_with(op, tol, max_iter)
}

pub fn invariant_density_with(
    op: Arc<InducedOperator>,
    tol: f64,
    max_iter: usize,
) -> Result<DensityReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tol}")));
    }
    let mesh = Arc::clone(op.mesh());
    let mut h = GridFunction::constant(Arc::clone(&mesh), 2.0);
    let mut increments = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let mut next = op.apply(&h);
        let mass = next.integral();
        next.values.iter_mut().for_each(|v| *v /= mass);
        let inc = next.l1_distance(&h);
        increments.push(inc);
        h = next;
        if inc < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: "induced invariant density",
            iterations: max_iter,
            residual: increments.last().copied().unwrap_or(f64::NAN),
        });
    }
    let residual = op.apply(&h).l1_distance(&h);
    let tau = op.return_times();
    let kac = op.apply_weighted(&h, Some(&tau), op.tail.tau).integral();
    let rho_hist = pushforward_histogram(&op, &h, kac, 64);
    Ok(DensityReport {
        kac,
        nu_y: 1.0 / kac,
        rho_hist,
        residual,
        iterations: increments.len(),
        increments,
        tail_deficit: op.truncation_deficit(),
        h,
        operator: op,
    })
}

/// `ρ_α` from `ν_α = (1/kac) Σ_k f^k_*(μ_α|{τ > k})`, each cell carrying its
/// `μ_α`-mass along its return block.
fn pushforward_histogram(
    op: &InducedOperator,
    h: &GridFunction,
    kac: f64,
    bins: usize,
) -> Histogram {
    let edges = Histogram::graded_edges(bins);
    let mesh = op.mesh();
    let p = op.params();
    let mut mass = vec![0.0; bins];
    for c in 0..mesh.len() {
        let weight = h.values()[c] * mesh.quad_weights()[c] / kac;
        let mut x = mesh.mid(c);
        for _ in 0..mesh.cylinder_of_cell(c) {
            mass[Histogram::bin_of(&edges, x)] += weight;
            x = p.step(x);
        }
    }
    Histogram::from_mass(edges, mass, mesh.len() as u64)
}

/// Independent orbits behind [`full_density_histogram`].
pub const HISTOGRAM_STREAMS: u64 = 16;

/// Birkhoff-average histogram of `ρ_α` on graded bins from
/// `HISTOGRAM_STREAMS` orbits of `n_steps / HISTOGRAM_STREAMS` steps each,
/// started Lebesgue-uniform and burned in for `burn_in` steps.
pub fn full_density_histogram(
    p: &MapParams,
    bins: usize,
    n_steps: usize,
    burn_in_steps: usize,
    seed: u64,
) -> Result<Histogram> {
    if bins < 10 || (n_steps as u64) < HISTOGRAM_STREAMS {
        return Err(Error::InvalidParameter(format!(
            "histogram with {bins} bins from {n_steps} steps"
        )));
    }
    let edges = Histogram::graded_edges(bins);
    let per = n_steps / HISTOGRAM_STREAMS as usize;
    let counts: Vec<Vec<u64>> = (0..HISTOGRAM_STREAMS)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, s);
            let mut x = burn_in(p, uniform_unit(&mut rng), burn_in_steps, &mut rng);
            let mut c = vec![0u64; bins];
            for _ in 0..per {
                c[Histogram::bin_of(&edges, x)] += 1;
                x = dithered_step(p, x, &mut rng);
            }
            c
        })
        .collect();
    let total = (per as u64 * HISTOGRAM_STREAMS) as f64;
    let mass = (0..bins)
        .map(|b| counts.iter().map(|c| c[b]).sum::<u64>() as f64 / total)
        .collect();
    Ok(Histogram::from_mass(edges, mass, total as u64))
}
