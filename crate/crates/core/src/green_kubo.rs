//! Correlations of the induced observable and the diffusion coefficient.
//!
//! With `Ψ̂` the centered block sum over one excursion,
//!
//! ```text
//! σ̃² = ∫ Ψ̂² dμ + 2 Σ_{k≥1} ∫ Ψ̂ · Ψ̂∘F^k dμ,    σ² = σ̃² / ∫ τ dμ.
//! ```
//!
//! On the operator side `∫ Ψ̂ · Ψ̂∘F^k dμ = ∫ Ψ̂ P^{k-1} P(Ψ̂ h) dm`, and every
//! integral of the form `∫ w φ dm` is taken as `∫ P(w φ) dm` so that `Ψ̂` is
//! only ever evaluated at exact branch preimages.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inducing::linear_fit;
use crate::map_core::MapParams;
use crate::observable::Observable;
use crate::sim::{
    dithered_step, induced_burn_in, induced_step, mean_stderr, stream_rng, uniform_unit, uniform_y,
    DEFAULT_RETURN_CAP,
};
use crate::transfer::{
    invariant_density_induced, DensityReport, GridFunction, InducedOperator, MeshSpec,
    DEFAULT_DENSITY_MAX_ITER, DEFAULT_DENSITY_TOL,
};

pub const DEFAULT_K_MAX: usize = 200;
pub const DEFAULT_ABS_TOL: f64 = 1e-10;
/// Consecutive terms below `abs_tol` that end the correlation sum.
pub const TRUNCATION_RUN: usize = 3;
/// First lag used in the geometric fit.
pub const FIT_START: usize = 5;

const MC_STREAMS: u64 = 16;
const MC_BATCHES_PER_STREAM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimator {
    Operator,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTerm {
    pub k: usize,
    pub value: f64,
    pub stderr: Option<f64>,
    pub method: Estimator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitStatus {
    /// Geometric decay fitted on the tail.
    Geometric,
    /// Too few nonzero terms to fit (e.g. a constant observable).
    Trivial,
    /// The fitted ratio is not below 1.
    NoDecay,
}

/// Least-squares line through `(k, ln|C_k|)` on `k ∈ [FIT_START, truncation]`
/// and the envelope `|C_k| ≤ envelope · ratio^k` over all computed `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricFit {
    pub ratio: f64,
    pub envelope: f64,
    pub r_squared: f64,
    pub k_first: usize,
    pub k_last: usize,
    pub status: FitStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub terms: Vec<CorrelationTerm>,
    /// `1 - ratio` of the geometric fit.
    pub gap_theta_fit: f64,
    pub truncation_k: usize,
    /// `|C_K| r / (1 - r)` at the truncation lag `K`.
    pub tail_bound: f64,
    pub fit: GeometricFit,
}

impl CorrelationSeries {
    /// `C_0 + 2 Σ_{1≤k≤K} C_k`.
    pub fn sigma_tilde_sq(&self) -> f64 {
        self.terms
            .iter()
            .take_while(|t| t.k <= self.truncation_k)
            .map(|t| if t.k == 0 { t.value } else { 2.0 * t.value })
            .sum()
    }

    /// Bound on `Σ_{k>K} |C_k|`: the larger of `tail_bound` and the
    /// envelope's geometric tail.
    pub fn remainder_bound(&self) -> f64 {
        let r = self.fit.ratio;
        match self.fit.status {
            FitStatus::Trivial => self.tail_bound,
            FitStatus::NoDecay => f64::INFINITY,
            FitStatus::Geometric => {
                let env = self.fit.envelope * r.powi(self.truncation_k as i32 + 1) / (1.0 - r);
                self.tail_bound.max(env)
            }
        }
    }

    /// True when `|C_k| ≤ envelope · ratio^k` for every computed term.
    pub fn envelope_holds(&self) -> bool {
        self.terms.iter().all(|t| {
            t.value.abs() <= self.fit.envelope * self.fit.ratio.powi(t.k as i32) * (1.0 + 1e-12)
        })
    }

    pub fn values(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.value).collect()
    }

    fn from_values(
        values: Vec<f64>,
        stderr: Option<Vec<f64>>,
        method: Estimator,
        truncation_k: usize,
    ) -> Self {
        let terms = values
            .iter()
            .enumerate()
            .map(|(k, &value)| CorrelationTerm {
                k,
                value,
                stderr: stderr.as_ref().map(|s| s[k]),
                method,
            })
            .collect();
        let fit = fit_geometric(&values, truncation_k);
        let tail_bound = match fit.status {
            FitStatus::Geometric => values[truncation_k].abs() * fit.ratio / (1.0 - fit.ratio),
            FitStatus::Trivial => 0.0,
            FitStatus::NoDecay => f64::INFINITY,
        };
        Self {
            terms,
            gap_theta_fit: 1.0 - fit.ratio,
            truncation_k,
            tail_bound,
            fit,
        }
    }
}

fn fit_geometric(values: &[f64], truncation_k: usize) -> GeometricFit {
    let k_first = FIT_START.min(truncation_k);
    let pts: Vec<(f64, f64)> = (k_first..=truncation_k)
        .filter(|&k| values[k] != 0.0)
        .map(|k| (k as f64, values[k].abs().ln()))
        .collect();
    if pts.len() < 3 {
        return GeometricFit {
            ratio: 0.0,
            envelope: values.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
            r_squared: 1.0,
            k_first,
            k_last: truncation_k,
            status: FitStatus::Trivial,
        };
    }
    let (_, slope, r_squared) = linear_fit(&pts);
    let ratio = slope.exp();
    if ratio >= 1.0 {
        return GeometricFit {
            ratio,
            envelope: f64::INFINITY,
            r_squared,
            k_first,
            k_last: truncation_k,
            status: FitStatus::NoDecay,
        };
    }
    let envelope = values
        .iter()
        .enumerate()
        .map(|(k, v)| v.abs() / ratio.powi(k as i32))
        .fold(0.0, f64::max);
    GeometricFit {
        ratio,
        envelope,
        r_squared,
        k_first,
        k_last: truncation_k,
        status: FitStatus::Geometric,
    }
}

fn check_alpha(p: &MapParams, density: &DensityReport) -> Result<()> {
    if p.alpha() != density.alpha() {
        return Err(Error::InvalidParameter(format!(
            "density computed for alpha = {}, requested {}",
            density.alpha(),
            p.alpha()
        )));
    }
    Ok(())
}

/// `∫ ψ dν_α = (∫_Y Ψ h dm) / kac`.
pub fn drift_coefficient(p: &MapParams, phi: &Observable, density: &DensityReport) -> Result<f64> {
    check_alpha(p, density)?;
    if phi.is_constant() {
        return Ok(phi.value(0.5));
    }
    let op = &density.operator;
    let table = op.block_table(phi);
    let integral = op
        .apply_weighted(&density.h, Some(table.raw()), table.tail().psi)
        .integral();
    Ok(integral / density.kac)
}

/// `ψ` with its center set to `∫ ψ dν_α`.
pub fn center_observable(
    p: &MapParams,
    psi: Observable,
    density: &DensityReport,
) -> Result<Observable> {
    let c = drift_coefficient(p, &psi, density)?;
    Ok(psi.with_center(c))
}

/// Correlations `C_k`, `k = 0..=k_max`, from the discretized operator.
/// The sum stops after `TRUNCATION_RUN` consecutive `|C_k| < abs_tol`.
pub fn correlation_operator(
    p: &MapParams,
    psi: &Observable,
    k_max: usize,
    abs_tol: f64,
    density: &DensityReport,
) -> Result<CorrelationSeries> {
    check_alpha(p, density)?;
    if psi.is_constant() {
        return Ok(CorrelationSeries::from_values(
            vec![0.0; k_max + 1],
            None,
            Estimator::Operator,
            0,
        ));
    }
    let op: &InducedOperator = &density.operator;
    let n = op.n_branch();
    let table = op.block_table(psi);
    let tm = op.tail_moments();
    let c = psi.center();
    let w1 = table.centered(n, c);
    let w2: Vec<f64> = w1.iter().map(|v| v * v).collect();
    let t1 = table.tail().centered(tm, c);
    let t2 = table.tail().centered_sq(tm, c);

    let h = &density.h;
    let mut values = vec![op.apply_weighted(h, Some(&w2), t2).integral()];
    let mut phi: GridFunction = op.apply_weighted(h, Some(&w1), t1);
    let mut small = 0;
    let mut truncation_k = k_max;
    for k in 1..=k_max {
        let ck = op.apply_weighted(&phi, Some(&w1), t1).integral();
        values.push(ck);
        small = if ck.abs() < abs_tol { small + 1 } else { 0 };
        if small == TRUNCATION_RUN {
            truncation_k = k;
            break;
        }
        phi = op.apply(&phi);
    }
    Ok(CorrelationSeries::from_values(
        values,
        None,
        Estimator::Operator,
        truncation_k,
    ))
}

/// Monte Carlo correlations with batch statistics of the derived estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCorrelation {
    pub series: CorrelationSeries,
    pub center: f64,
    pub kac: f64,
    pub kac_stderr: f64,
    pub sigma_tilde_sq: f64,
    pub sigma_tilde_sq_stderr: f64,
    pub sigma_sq: f64,
    pub sigma_sq_stderr: f64,
    pub batches: usize,
}

/// Induced orbits from `MC_STREAMS` Lebesgue-on-`Y` starts, each burned in
/// for `burn_in` induced steps, giving `n_samples` blocks in total. `center`
/// overrides the observable's center; `None` uses the ratio estimate
/// `Σ Ψ / Σ τ` of the same run.
pub fn correlation_mc_with(
    p: &MapParams,
    psi: &Observable,
    k_max: usize,
    n_samples: usize,
    burn_in: usize,
    seed: u64,
    center: Option<f64>,
) -> Result<McCorrelation> {
    let per_stream = n_samples / MC_STREAMS as usize;
    let batch_len = per_stream / MC_BATCHES_PER_STREAM;
    if batch_len < 10 * (k_max + 1) {
        return Err(Error::InvalidParameter(format!(
            "{n_samples} samples are too few for k_max = {k_max}"
        )));
    }
    let raw = psi.clone().with_center(0.0);
    // Per stream: raw block sums and return times, k_max blocks of lookahead.
    let streams: Vec<(Vec<f64>, Vec<f64>)> = (0..MC_STREAMS)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, s);
            let x0 = uniform_y(&mut rng);
            let mut x = induced_burn_in(p, x0, burn_in, &mut rng, DEFAULT_RETURN_CAP)?;
            let len = per_stream + k_max;
            let mut blocks = Vec::with_capacity(len);
            let mut taus = Vec::with_capacity(len);
            for _ in 0..len {
                let st = induced_step(p, &raw, x, &mut rng, DEFAULT_RETURN_CAP)?;
                blocks.push(st.block);
                taus.push(st.tau as f64);
                x = st.next;
            }
            Ok((blocks, taus))
        })
        .collect::<Result<_>>()?;

    let c = match center {
        Some(c) => c,
        None => {
            let (sp, st) = streams.iter().fold((0.0, 0.0), |(a, b), (bl, ta)| {
                (
                    a + bl[..per_stream].iter().sum::<f64>(),
                    b + ta[..per_stream].iter().sum::<f64>(),
                )
            });
            sp / st
        }
    };

    // Batch estimates of C_k, kac, σ̃², σ².
    let mut batch_c: Vec<Vec<f64>> = Vec::new();
    let mut batch_kac = Vec::new();
    for (blocks, taus) in &streams {
        let centered: Vec<f64> = blocks.iter().zip(taus).map(|(b, t)| b - c * t).collect();
        for b in 0..MC_BATCHES_PER_STREAM {
            let start = b * batch_len;
            let mut ck = vec![0.0; k_max + 1];
            for i in start..start + batch_len {
                for (k, acc) in ck.iter_mut().enumerate() {
                    *acc += centered[i] * centered[i + k];
                }
            }
            ck.iter_mut().for_each(|v| *v /= batch_len as f64);
            batch_c.push(ck);
            batch_kac.push(taus[start..start + batch_len].iter().sum::<f64>() / batch_len as f64);
        }
    }
    let nb = batch_c.len();
    let mut values = Vec::with_capacity(k_max + 1);
    let mut errs = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let col: Vec<f64> = batch_c.iter().map(|b| b[k]).collect();
        let (m, e) = mean_stderr(&col);
        values.push(m);
        errs.push(e);
    }
    let st_batches: Vec<f64> = batch_c
        .iter()
        .map(|b| b[0] + 2.0 * b[1..].iter().sum::<f64>())
        .collect();
    let s2_batches: Vec<f64> = st_batches
        .iter()
        .zip(&batch_kac)
        .map(|(s, k)| s / k)
        .collect();
    let (kac, kac_stderr) = mean_stderr(&batch_kac);
    let (st, st_err) = mean_stderr(&st_batches);
    let (_, s2_err) = mean_stderr(&s2_batches);
    let series = CorrelationSeries::from_values(values, Some(errs), Estimator::MonteCarlo, k_max);
    Ok(McCorrelation {
        series,
        center: c,
        kac,
        kac_stderr,
        sigma_tilde_sq: st,
        sigma_tilde_sq_stderr: st_err,
        sigma_sq: st / kac,
        sigma_sq_stderr: s2_err,
        batches: nb,
    })
}

/// Monte Carlo correlations of the centered observable `psi`.
pub fn correlation_mc(
    p: &MapParams,
    psi: &Observable,
    k_max: usize,
    n_samples: usize,
    burn_in: usize,
    seed: u64,
) -> Result<CorrelationSeries> {
    if psi.is_constant() {
        return Ok(CorrelationSeries::from_values(
            vec![0.0; k_max + 1],
            Some(vec![0.0; k_max + 1]),
            Estimator::MonteCarlo,
            k_max,
        ));
    }
    Ok(correlation_mc_with(p, psi, k_max, n_samples, burn_in, seed, Some(psi.center()))?.series)
}

/// Fraction of a full-map orbit in `Y`, with a batch-means standard error.
pub fn nu_y_orbit(p: &MapParams, n_steps: usize, burn_in: usize, seed: u64) -> Result<(f64, f64)> {
    const BATCHES: usize = 100;
    if n_steps < BATCHES {
        return Err(Error::InvalidParameter(format!("{n_steps} orbit steps")));
    }
    let mut rng = stream_rng(seed, 0);
    let mut x = uniform_unit(&mut rng);
    for _ in 0..burn_in {
        x = dithered_step(p, x, &mut rng);
    }
    let len = n_steps / BATCHES;
    let mut fractions = Vec::with_capacity(BATCHES);
    for _ in 0..BATCHES {
        let mut hits = 0usize;
        for _ in 0..len {
            x = dithered_step(p, x, &mut rng);
            hits += (x > 0.5) as usize;
        }
        fractions.push(hits as f64 / len as f64);
    }
    Ok(mean_stderr(&fractions))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Operator,
    Mc,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub k_max: usize,
    pub n_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            k_max: 30,
            n_samples: 1_000_000,
            burn_in: 1000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaSettings {
    pub method: Method,
    pub mesh: MeshSpec,
    pub k_max: usize,
    pub abs_tol: f64,
    pub density_tol: f64,
    pub density_max_iter: usize,
    /// Rerun on a mesh with half the cell scale to estimate the
    /// discretization error.
    pub discretization_check: bool,
    pub mc: McSettings,
}

impl Default for SigmaSettings {
    fn default() -> Self {
        Self {
            method: Method::Operator,
            mesh: MeshSpec::default(),
            k_max: DEFAULT_K_MAX,
            abs_tol: DEFAULT_ABS_TOL,
            density_tol: DEFAULT_DENSITY_TOL,
            density_max_iter: DEFAULT_DENSITY_MAX_ITER,
            discretization_check: true,
            mc: McSettings::default(),
        }
    }
}

impl SigmaSettings {
    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        if self.k_max == 0 || !(self.abs_tol > 0.0) || !(self.density_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub alpha: f64,
    pub observable: String,
    pub method: Method,
    pub center: f64,
    pub sigma_tilde_sq: f64,
    pub kac: f64,
    pub nu_y: f64,
    pub sigma_sq: f64,
    /// Half-width of the error bracket on `sigma_sq`.
    pub sigma_sq_error: f64,
    /// Contribution of the truncated correlation tail to `sigma_sq_error`.
    pub tail_error: f64,
    /// Contribution of the mesh to `sigma_sq_error`.
    pub discretization_error: f64,
    pub density_residual: f64,
    pub series: CorrelationSeries,
    pub mc: Option<McCorrelation>,
    /// `|operator - MC|` for `sigma_sq` when both ran.
    pub method_agreement: Option<f64>,
}

struct OperatorRun {
    center: f64,
    series: CorrelationSeries,
    sigma_tilde_sq: f64,
    kac: f64,
    residual: f64,
}

fn operator_run(
    p: &MapParams,
    psi: &Observable,
    s: &SigmaSettings,
    mesh: &MeshSpec,
) -> Result<OperatorRun> {
    let density = invariant_density_induced(p, mesh, s.density_tol, s.density_max_iter)?;
    let centered = center_observable(p, psi.clone(), &density)?;
    let series = correlation_operator(p, &centered, s.k_max, s.abs_tol, &density)?;
    Ok(OperatorRun {
        center: centered.center(),
        sigma_tilde_sq: series.sigma_tilde_sq(),
        series,
        kac: density.kac,
        residual: density.residual,
    })
}

/// Density, centering, correlations and the Kac conversion
/// `σ² = σ̃² / kac`, with an error bracket.
pub fn sigma_sq(
    p: &MapParams,
    psi: &Observable,
    settings: &SigmaSettings,
) -> Result<VarianceReport> {
    settings.validate()?;
    let alpha = p.alpha();
    let mc_run = |center: Option<f64>| {
        let m = &settings.mc;
        correlation_mc_with(p, psi, m.k_max, m.n_samples, m.burn_in, m.seed, center)
    };
    if settings.method == Method::Mc {
        let mc = if psi.is_constant() {
            None
        } else {
            Some(mc_run(None)?)
        };
        let (center, st, kac, s2, err, series) = match &mc {
            Some(m) => (
                m.center,
                m.sigma_tilde_sq,
                m.kac,
                m.sigma_sq,
                3.0 * m.sigma_sq_stderr,
                m.series.clone(),
            ),
            None => (
                psi.value(0.5),
                0.0,
                f64::NAN,
                0.0,
                0.0,
                correlation_mc(p, psi, settings.mc.k_max, 0, 0, 0)?,
            ),
        };
        return Ok(VarianceReport {
            alpha,
            observable: psi.label().to_string(),
            method: Method::Mc,
            center,
            sigma_tilde_sq: st,
            kac,
            nu_y: 1.0 / kac,
            sigma_sq: s2,
            sigma_sq_error: err,
            tail_error: 0.0,
            discretization_error: 0.0,
            density_residual: f64::NAN,
            series,
            mc,
            method_agreement: None,
        });
    }

    let run = operator_run(p, psi, settings, &settings.mesh)?;
    let sigma_sq = run.sigma_tilde_sq / run.kac;
    let tail_error = 2.0 * run.series.remainder_bound() / run.kac;
    let discretization_error = if settings.discretization_check && !psi.is_constant() {
        let coarse = MeshSpec {
            cells_scale: (settings.mesh.cells_scale / 2).max(1),
            ..settings.mesh
        };
        let c = operator_run(p, psi, settings, &coarse)?;
        (c.sigma_tilde_sq / c.kac - sigma_sq).abs()
    } else {
        0.0
    };
    let sigma_sq_error = tail_error + discretization_error + run.residual * sigma_sq.abs();

    let (mc, method_agreement) = if settings.method == Method::Both && !psi.is_constant() {
        let m = mc_run(None)?;
        let agreement = (m.sigma_sq - sigma_sq).abs();
        (Some(m), Some(agreement))
    } else {
        (None, None)
    };
    Ok(VarianceReport {
        alpha,
        observable: psi.label().to_string(),
        method: settings.method,
        center: run.center,
        sigma_tilde_sq: run.sigma_tilde_sq,
        kac: run.kac,
        nu_y: 1.0 / run.kac,
        sigma_sq,
        sigma_sq_error,
        tail_error,
        discretization_error,
        density_residual: run.residual,
        series: run.series,
        mc,
        method_agreement,
    })
}

/// Shared density for callers that evaluate several observables at one α.
pub fn density_for(p: &MapParams, settings: &SigmaSettings) -> Result<Arc<DensityReport>> {
    Ok(Arc::new(invariant_density_induced(
        p,
        &settings.mesh,
        settings.density_tol,
        settings.density_max_iter,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64) -> MapParams {
        MapParams::new(a).unwrap()
    }

    fn fast() -> SigmaSettings {
        SigmaSettings {
            discretization_check: false,
            ..SigmaSettings::default()
        }
    }

    /// `∫_0^1 (x - 1/2)({2^k x} - 1/2) dx = 2^{-k}/12`, integrated exactly
    /// piece by piece over the `2^k` linear pieces.
    fn doubling_correlation(k: u32) -> f64 {
        let m = 2f64.powi(k as i32);
        let mut total = 0.0;
        for j in 0..(1u64 << k) {
            let (a, b) = (j as f64 / m, (j + 1) as f64 / m);
            // (x - 1/2)(m x - j - 1/2), exact antiderivative.
            let f = |x: f64| {
                m * x.powi(3) / 3.0 - (j as f64 + 0.5 + 0.5 * m) * x * x / 2.0
                    + 0.5 * (j as f64 + 0.5) * x
            };
            total += f(b) - f(a);
        }
        total
    }

    #[test]
    fn doubling_oracle() {
        for k in 0..8 {
            assert!((doubling_correlation(k) - 2f64.powi(-(k as i32)) / 12.0).abs() < 1e-14);
        }
        // Lags beyond 16 add at most 2 · 2^{-16}/12.
        let sigma: f64 =
            doubling_correlation(0) + 2.0 * (1..=16).map(doubling_correlation).sum::<f64>();
        assert!((sigma - 0.25).abs() < 2.6e-6);
    }

    #[test]
    fn doubling_sigma_sq() {
        let r = sigma_sq(&p(0.0), &Observable::identity(), &SigmaSettings::default()).unwrap();
        assert!((r.sigma_sq - 0.25).abs() < 1e-3, "{}", r.sigma_sq);
        assert!((r.center - 0.5).abs() < 1e-10);
        assert!((r.kac - 2.0).abs() < 1e-8);
        assert_eq!(r.sigma_sq, r.sigma_tilde_sq / r.kac);
    }

    #[test]
    fn constants_have_no_variance() {
        for a in [0.0, 0.2] {
            let r = sigma_sq(&p(a), &Observable::constant(3.0), &fast()).unwrap();
            assert_eq!(r.sigma_sq, 0.0);
            assert_eq!(r.center, 3.0);
            assert!(r.series.values().iter().all(|&v| v == 0.0));
        }
        let s = correlation_mc(&p(0.2), &Observable::constant(1.0), 5, 1000, 10, 3).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn drift_anchors() {
        let d0 = density_for(&p(0.0), &fast()).unwrap();
        assert!(
            (drift_coefficient(&p(0.0), &Observable::identity(), &d0).unwrap() - 0.5).abs() < 1e-10
        );
        let d = density_for(&p(0.3), &fast()).unwrap();
        assert_eq!(
            drift_coefficient(&p(0.3), &Observable::constant(1.0), &d).unwrap(),
            1.0
        );
        let one = Observable::custom("one", |_| 1.0, |_| 0.0, |_| 0.0);
        assert!((drift_coefficient(&p(0.3), &one, &d).unwrap() - 1.0).abs() < 1e-12);
        assert!(drift_coefficient(&p(0.2), &one, &d).is_err());
    }

    #[test]
    fn shift_and_scale() {
        let base = sigma_sq(&p(0.2), &Observable::identity(), &fast()).unwrap();
        let shifted = sigma_sq(&p(0.2), &Observable::identity().shifted(1.7), &fast()).unwrap();
        let scaled = sigma_sq(&p(0.2), &Observable::identity().scaled(-3.0), &fast()).unwrap();
        assert!((shifted.sigma_sq - base.sigma_sq).abs() < 1e-10);
        for (a, b) in base.series.values().iter().zip(shifted.series.values()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((scaled.sigma_sq - 9.0 * base.sigma_sq).abs() < 1e-10);
    }

    #[test]
    fn geometric_decay_at_alpha_02() {
        let d = density_for(&p(0.2), &fast()).unwrap();
        let psi = center_observable(&p(0.2), Observable::identity(), &d).unwrap();
        let s = correlation_operator(&p(0.2), &psi, 200, 1e-10, &d).unwrap();
        assert_eq!(s.fit.status, FitStatus::Geometric);
        assert!(s.fit.r_squared >= 0.95, "R² = {}", s.fit.r_squared);
        assert!(s.envelope_holds());
        assert!(s.truncation_k < 200);
        assert!(s.sigma_tilde_sq() > 0.0);
        assert!(s.tail_bound >= 0.0);
    }

    #[test]
    fn mc_is_reproducible() {
        let psi = Observable::identity().with_center(0.4);
        let a = correlation_mc(&p(0.2), &psi, 5, 20_000, 100, 9).unwrap();
        let b = correlation_mc(&p(0.2), &psi, 5, 20_000, 100, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.terms[0].value >= 0.0);
    }
}
