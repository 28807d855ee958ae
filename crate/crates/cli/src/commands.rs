//! The pipelines behind each subcommand.

use std::sync::Arc;

use clap::Args;
use serde_json::{json, Value};

use lsv_core::clt_stats::{
    batch_means_variance, birkhoff_samples, ks_critical_95, ks_normal, Which,
};
use lsv_core::green_kubo::{
    nu_y_orbit, sigma_sq, McSettings, Method, SigmaSettings, DEFAULT_ABS_TOL, DEFAULT_K_MAX,
};
use lsv_core::inducing::{tail_exponent_fit, MarkerTable, DEFAULT_MARKER_DEPTH};
use lsv_core::sweep::{
    smoothness_report_with, sweep_sigma, uniform_grid, DEFAULT_GAP_THRESHOLD, DEFAULT_TV_FACTOR,
};
use lsv_core::transfer::{
    full_density_histogram, invariant_density_with, lemma_bound_check, InducedOperator, LemmaBound,
    MeshSpec, DEFAULT_DENSITY_MAX_ITER, DEFAULT_DENSITY_TOL,
};
use lsv_core::{Error, MapParams, Observable};

use crate::config::Resolver;
use crate::output::{Cell, Table};
use crate::{CliError, IoArgs, Report};

#[derive(Debug, Clone, Args)]
pub struct MeshArgs {
    /// Resolved branches of the induced map.
    #[arg(long)]
    pub n_branch: Option<usize>,
    /// Cells in the first cylinder.
    #[arg(long)]
    pub cells_scale: Option<usize>,
    #[arg(long)]
    pub min_cells: Option<usize>,
    /// Marker depth for the tail moments.
    #[arg(long)]
    pub marker_depth: Option<usize>,
    #[arg(long)]
    pub density_tol: Option<f64>,
    #[arg(long)]
    pub density_max_iter: Option<usize>,
}

impl MeshArgs {
    fn resolve(&self, r: &mut Resolver) -> Result<(MeshSpec, f64, usize), CliError> {
        let d = MeshSpec::default();
        let spec = MeshSpec {
            n_branch: r.get("n-branch", self.n_branch, d.n_branch)?,
            cells_scale: r.get("cells-scale", self.cells_scale, d.cells_scale)?,
            min_cells: r.get("min-cells", self.min_cells, d.min_cells)?,
            marker_depth: r.get("marker-depth", self.marker_depth, d.marker_depth)?,
        };
        let tol = r.get("density-tol", self.density_tol, DEFAULT_DENSITY_TOL)?;
        let max_iter = r.get(
            "density-max-iter",
            self.density_max_iter,
            DEFAULT_DENSITY_MAX_ITER,
        )?;
        Ok((spec, tol, max_iter))
    }
}

#[derive(Debug, Clone, Args)]
pub struct CorrArgs {
    /// Largest correlation lag.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Correlations below this count as zero for truncation.
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// Rerun on a coarser mesh to estimate the discretization error.
    #[arg(long)]
    pub discretization_check: Option<bool>,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    /// Induced blocks for the Monte Carlo correlations.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub mc_k_max: Option<usize>,
    #[arg(long)]
    pub mc_burn_in: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn sigma_settings(
    method: Method,
    mesh: &MeshArgs,
    corr: &CorrArgs,
    mc: Option<&McArgs>,
    r: &mut Resolver,
) -> Result<SigmaSettings, CliError> {
    let (mesh, density_tol, density_max_iter) = mesh.resolve(r)?;
    let mut s = SigmaSettings {
        method,
        mesh,
        k_max: r.get("k-max", corr.k_max, DEFAULT_K_MAX)?,
        abs_tol: r.get("abs-tol", corr.abs_tol, DEFAULT_ABS_TOL)?,
        density_tol,
        density_max_iter,
        discretization_check: r.get("discretization-check", corr.discretization_check, true)?,
        mc: McSettings::default(),
    };
    if let Some(m) = mc.filter(|_| method != Method::Operator) {
        let d = McSettings::default();
        s.mc = McSettings {
            k_max: r.get("mc-k-max", m.mc_k_max, d.k_max)?,
            n_samples: r.get("mc-samples", m.mc_samples, d.n_samples)?,
            burn_in: r.get("mc-burn-in", m.mc_burn_in, d.burn_in)?,
            seed: r.get("seed", m.seed, d.seed)?,
        };
    }
    Ok(s)
}

fn params(r: &mut Resolver, flag: Option<f64>) -> Result<MapParams, CliError> {
    let alpha = r.require("alpha", flag)?;
    MapParams::new(alpha).map_err(|e| CliError::Usage(e.to_string()))
}

fn observable(
    r: &mut Resolver,
    key: &str,
    flag: Option<String>,
    default: &str,
) -> Result<Observable, CliError> {
    let s: String = r.get(key, flag, default.to_string())?;
    s.parse().map_err(|e: Error| CliError::Usage(e.to_string()))
}

fn parse_method(s: &str) -> Result<Method, CliError> {
    serde_json::from_value(Value::String(s.to_string()))
        .map_err(|_| CliError::Usage(format!("unknown method {s:?} (operator, mc or both)")))
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(v)?)
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// Also histogram a long full-map orbit with this many steps.
    #[arg(long)]
    pub orbit_steps: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub io: IoArgs,
}

pub fn density(a: &DensityArgs, r: &mut Resolver) -> Result<Report, CliError> {
    let p = params(r, a.alpha)?;
    let (spec, tol, max_iter) = a.mesh.resolve(r)?;
    let orbit_steps = r.get("orbit-steps", a.orbit_steps, 0)?;
    let (orbit, seeds) = if orbit_steps > 0 {
        let bins = r.get("bins", a.bins, 64)?;
        let burn_in = r.get("burn-in", a.burn_in, 1000)?;
        let seed = r.get("seed", a.seed, 1)?;
        let h = full_density_histogram(&p, bins, orbit_steps, burn_in, seed)?;
        (Some(h), json!({ "seed": seed }))
    } else {
        (None, json!({}))
    };
    let op = Arc::new(InducedOperator::new(&p, &spec)?);
    let d = invariant_density_with(op, tol, max_iter)?;
    let mesh = d.h.mesh();
    let bp = mesh.breakpoints();

    let mut table = Table::new(vec![
        "cell", "cylinder", "x_left", "x_right", "x_mid", "weight", "h",
    ]);
    for c in 0..mesh.len() {
        table.push(vec![
            c.into(),
            mesh.cylinder_of_cell(c).into(),
            bp[c].into(),
            bp[c + 1].into(),
            mesh.mid(c).into(),
            mesh.quad_weights()[c].into(),
            d.h.values()[c].into(),
        ]);
    }
    let results = json!({
        "alpha": p.alpha(),
        "kac": d.kac,
        "nu_y": d.nu_y,
        "residual": d.residual,
        "iterations": d.iterations,
        "tail_deficit": d.tail_deficit,
        "mass_correction": d.operator.mass_correction(),
        "cells": mesh.len(),
        "orbit_mean_x": orbit.as_ref().map(|h| h.expectation(|x| x)),
    });
    let json = json!({
        "summary": results,
        "x_mid": (0..mesh.len()).map(|c| mesh.mid(c)).collect::<Vec<_>>(),
        "h": d.h.values(),
        "increments": d.increments,
        "rho_pushforward": to_value(&d.rho_hist)?,
        "rho_orbit": orbit.as_ref().map(to_value).transpose()?,
    });
    Ok(Report {
        table,
        json,
        results,
        seeds,
    })
}

#[derive(Debug, Clone, Args)]
pub struct KacArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// Full-map orbit length for an independent estimate of ν(Y); 0 skips it.
    #[arg(long)]
    pub orbit_steps: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub io: IoArgs,
}

pub fn kac(a: &KacArgs, r: &mut Resolver) -> Result<Report, CliError> {
    let p = params(r, a.alpha)?;
    let (spec, tol, max_iter) = a.mesh.resolve(r)?;
    let orbit_steps = r.get("orbit-steps", a.orbit_steps, 0)?;
    let d = invariant_density_with(Arc::new(InducedOperator::new(&p, &spec)?), tol, max_iter)?;
    let (orbit, seeds) = if orbit_steps > 0 {
        let burn_in = r.get("burn-in", a.burn_in, 1000)?;
        let seed = r.get("seed", a.seed, 1)?;
        (
            Some(nu_y_orbit(&p, orbit_steps, burn_in, seed)?),
            json!({ "seed": seed }),
        )
    } else {
        (None, json!({}))
    };
    let (nu_mc, nu_se) = orbit.unzip();
    let identity = nu_mc.map(|v| d.kac * v);
    let mut table = Table::new(vec![
        "alpha",
        "kac",
        "nu_y",
        "residual",
        "tail_deficit",
        "nu_y_orbit",
        "nu_y_orbit_stderr",
        "kac_times_nu_y_orbit",
    ]);
    table.push(vec![
        p.alpha().into(),
        d.kac.into(),
        d.nu_y.into(),
        d.residual.into(),
        d.tail_deficit.into(),
        nu_mc.into(),
        nu_se.into(),
        identity.into(),
    ]);
    let results = json!({
        "alpha": p.alpha(),
        "kac": d.kac,
        "nu_y": d.nu_y,
        "residual": d.residual,
        "tail_deficit": d.tail_deficit,
        "nu_y_orbit": nu_mc,
        "nu_y_orbit_stderr": nu_se,
        "kac_times_nu_y_orbit": identity,
    });
    Ok(Report {
        table,
        json: results.clone(),
        results,
        seeds,
    })
}

#[derive(Debug, Clone, Args)]
pub struct SigmaArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    /// x, x2, cos2pi, const:c, poly:a0,a1,... or trig:a1,a2,...;b1,b2,...
    #[arg(long)]
    pub obs: Option<String>,
    /// operator, mc or both.
    #[arg(long)]
    pub method: Option<String>,
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub corr: CorrArgs,
    #[command(flatten)]
    pub mc: McArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

pub const SIGMA_COLUMNS: [&str; 13] = [
    "alpha",
    "observable",
    "method",
    "center",
    "sigma_tilde_sq",
    "kac",
    "nu_y",
    "sigma_sq",
    "sigma_sq_error",
    "tail_error",
    "discretization_error",
    "density_residual",
    "method_agreement",
];

pub fn sigma(a: &SigmaArgs, r: &mut Resolver) -> Result<Report, CliError> {
    let p = params(r, a.alpha)?;
    let psi = observable(r, "obs", a.obs.clone(), "x")?;
    let method = parse_method(&r.get("method", a.method.clone(), "operator".to_string())?)?;
    let settings = sigma_settings(method, &a.mesh, &a.corr, Some(&a.mc), r)?;
    let v = sigma_sq(&p, &psi, &settings)?;
    let method_name = to_value(&v.method)?
        .as_str()
        .unwrap_or_default()
        .to_string();
    let mut table = Table::new(SIGMA_COLUMNS.to_vec());
    table.push(vec![
        v.alpha.into(),
        v.observable.clone().into(),
        method_name.into(),
        v.center.into(),
        v.sigma_tilde_sq.into(),
        v.kac.into(),
        v.nu_y.into(),
        v.sigma_sq.into(),
        v.sigma_sq_error.into(),
        v.tail_error.into(),
        v.discretization_error.into(),
        v.density_residual.into(),
        v.method_agreement.into(),
    ]);
    let seeds = if method == Method::Operator {
        json!({})
    } else {
        json!({ "seed": settings.mc.seed })
    };
    let results = json!({
        "alpha": v.alpha,
        "observable": v.observable,
        "method": v.method,
        "center": v.center,
        "sigma_sq": v.sigma_sq,
        "sigma_sq_error": v.sigma_sq_error,
        "sigma_tilde_sq": v.sigma_tilde_sq,
        "kac": v.kac,
        "truncation_k": v.series.truncation_k,
        "gap_theta_fit": v.series.gap_theta_fit,
        "fit_r_squared": v.series.fit.r_squared,
        "mc_sigma_sq": v.mc.as_ref().map(|m| m.sigma_sq),
        "mc_sigma_sq_stderr": v.mc.as_ref().map(|m| m.sigma_sq_stderr),
        "method_agreement": v.method_agreement,
    });
    Ok(Report {
        table,
        json: to_value(&v)?,
        results,
        seeds,
    })
}

#[derive(Debug, Clone, Args)]
pub struct CltArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub obs: Option<String>,
    /// Length of each Birkhoff sum.
    #[arg(short, long)]
    pub n: Option<usize>,
    /// Number of independent trajectories.
    #[arg(short, long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// full or induced.
    #[arg(long)]
    pub which: Option<String>,
    /// Orbit length for the batch-means estimate; 0 skips it.
    #[arg(long)]
    pub batch_steps: Option<usize>,
    #[arg(long)]
    pub batches: Option<usize>,
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub corr: CorrArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

pub fn clt(a: &CltArgs, r: &mut Resolver) -> Result<Report, CliError> {
    let p = params(r, a.alpha)?;
    let psi = observable(r, "obs", a.obs.clone(), "x")?;
    let n = r.get("n", a.n, 10_000)?;
    let m = r.get("m", a.m, 10_000)?;
    let burn_in = r.get("burn-in", a.burn_in, 1000)?;
    let seed = r.get("seed", a.seed, 1)?;
    let which_name: String = r.get("which", a.which.clone(), "full".to_string())?;
    let which = match which_name.as_str() {
        "full" => Which::FullMap,
        "induced" => Which::InducedMap,
        s => {
            return Err(CliError::Usage(format!(
                "unknown map {s:?} (full or induced)"
            )))
        }
    };
    let batch_steps = r.get("batch-steps", a.batch_steps, 0)?;
    let batches = r.get("batches", a.batches, 100)?;
    let settings = sigma_settings(Method::Operator, &a.mesh, &a.corr, None, r)?;

    let v = sigma_sq(&p, &psi, &settings)?;
    let centered = psi.clone().with_center(v.center);
    let sample = birkhoff_samples(&p, &centered, n, m, burn_in, seed, which)?;
    let (target, target_err) = match which {
        Which::FullMap => (v.sigma_sq, v.sigma_sq_error),
        Which::InducedMap => (v.sigma_tilde_sq, v.sigma_sq_error * v.kac),
    };
    let ks = match ks_normal(&sample, target) {
        Ok(d) => Some(d),
        Err(Error::DegenerateSample(_)) => None,
        Err(Error::InvalidParameter(_)) if !(target > 0.0) => None,
        Err(e) => return Err(e.into()),
    };
    let crit = ks_critical_95(m);
    let (s2, s2_se) = sample.variance();
    let batch = (batch_steps > 0)
        .then(|| batch_means_variance(&p, &psi, batch_steps, batches, burn_in, seed))
        .transpose()?;
    let (bm, bm_se) = batch.unzip();

    let mut table = Table::new(vec![
        "alpha",
        "observable",
        "which",
        "n",
        "m",
        "seed",
        "burn_in",
        "center",
        "sample_variance",
        "sample_variance_stderr",
        "operator_variance",
        "operator_variance_error",
        "ks_distance",
        "ks_critical_95",
        "degenerate",
        "batch_means_variance",
        "batch_means_stderr",
    ]);
    table.push(vec![
        p.alpha().into(),
        psi.label().into(),
        which_name.clone().into(),
        n.into(),
        m.into(),
        seed.into(),
        burn_in.into(),
        v.center.into(),
        s2.into(),
        s2_se.into(),
        target.into(),
        target_err.into(),
        ks.into(),
        crit.into(),
        ks.is_none().into(),
        bm.into(),
        bm_se.into(),
    ]);
    let results = json!({
        "alpha": p.alpha(),
        "observable": psi.label(),
        "which": which_name,
        "center": v.center,
        "sample_variance": s2,
        "sample_variance_stderr": s2_se,
        "operator_variance": target,
        "operator_variance_error": target_err,
        "ks_distance": ks,
        "ks_critical_95": crit,
        "degenerate": ks.is_none(),
        "batch_means_variance": bm,
        "batch_means_stderr": bm_se,
    });
    let json = json!({ "summary": results, "values": sample.values });
    Ok(Report {
        table,
        json,
        results,
        seeds: json!({ "seed": seed }),
    })
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma-separated list from K0..K6.
    #[arg(long)]
    pub bound: Option<String>,
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Midpoint grid of this many starting points in (1/2, 1].
    #[arg(long)]
    pub z_samples: Option<usize>,
    #[command(flatten)]
    pub io: IoArgs,
}

pub fn bounds(a: &BoundsArgs, r: &mut Resolver) -> Result<Report, CliError> {
    let p = params(r, a.alpha)?;
    let list: String = r.get("bound", a.bound.clone(), "K0,K1,K4,K6".to_string())?;
    let n_min = r.get("n-min", a.n_min, 10)?;
    let n_max = r.get("n-max", a.n_max, 10_000)?;
    let z = r.get("z-samples", a.z_samples, 32)?;
    let which: Vec<LemmaBound> = list
        .split(',')
        .map(|s| {
            serde_json::from_value(Value::String(s.trim().to_string()))
                .map_err(|_| CliError::Usage(format!("unknown bound {s:?}")))
        })
        .collect::<Result<_, _>>()?;
    let zs: Vec<f64> = (0..z)
        .map(|i| 0.5 + 0.5 * (i as f64 + 0.5) / z as f64)
        .collect();
    let reports = which
        .iter()
        .map(|&w| lemma_bound_check(&p, w, n_min..=n_max, &zs))
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(vec!["bound", "alpha", "n_lo", "n_hi", "sup_scaled"]);
    let mut summary = serde_json::Map::new();
    for rep in &reports {
        let name = to_value(&rep.which)?
            .as_str()
            .unwrap_or_default()
            .to_string();
        for d in &rep.decades {
            table.push(vec![
                name.clone().into(),
                p.alpha().into(),
                d.n_lo.into(),
                d.n_hi.into(),
                d.sup.into(),
            ]);
        }
        let last = rep.decades.last().map(|d| d.sup);
        let mid = rep.decade_containing((n_min + n_max) / 2).map(|d| d.sup);
        summary.insert(
            name,
            json!({
                "sup_scaled": rep.sup_scaled,
                "argmax_n": rep.argmax.0,
                "argmax_z": rep.argmax.1,
                "last_decade_sup": last,
                "mid_decade_sup": mid,
            }),
        );
    }
    Ok(Report {
        table,
        json: to_value(&reports)?,
        results: json!({ "alpha": p.alpha(), "bounds": summary }),
        seeds: json!({}),
    })
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub obs: Option<String>,
    /// Observable for the drift column; defaults to --obs.
    #[arg(long)]
    pub drift_obs: Option<String>,
    #[arg(long)]
    pub gap_threshold: Option<f64>,
    #[arg(long)]
    pub tv_factor: Option<f64>,
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[command(flatten)]
    pub corr: CorrArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

pub const SWEEP_COLUMNS: [&str; 10] = [
    "alpha",
    "sigma_sq",
    "sigma_tilde_sq",
    "kac",
    "drift",
    "sigma_sq_error",
    "tail_error",
    "discretization_error",
    "valid",
    "error",
];

pub fn sweep(a: &SweepArgs, r: &mut Resolver) -> Result<Report, CliError> {
    let lo = r.get("alpha-min", a.alpha_min, 0.05)?;
    let hi = r.get("alpha-max", a.alpha_max, 0.45)?;
    let points = r.get("points", a.points, 21)?;
    let obs_name: String = r.get("obs", a.obs.clone(), "x".to_string())?;
    let psi: Observable = obs_name
        .parse()
        .map_err(|e: Error| CliError::Usage(e.to_string()))?;
    let drift_obs = observable(r, "drift-obs", a.drift_obs.clone(), &obs_name)?;
    let gap = r.get("gap-threshold", a.gap_threshold, DEFAULT_GAP_THRESHOLD)?;
    let tv = r.get("tv-factor", a.tv_factor, DEFAULT_TV_FACTOR)?;
    let settings = sigma_settings(Method::Operator, &a.mesh, &a.corr, None, r)?;
    if points == 0 || !(lo < hi || points == 1) {
        return Err(CliError::Usage(format!(
            "grid [{lo}, {hi}] with {points} points"
        )));
    }
    for x in [lo, hi] {
        MapParams::new(x).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let grid = uniform_grid(lo, hi, points);
    let table = sweep_sigma(&grid, &psi, &drift_obs, &settings)?;
    let smooth = match smoothness_report_with(&table, gap, tv) {
        Ok(s) => Some(s),
        Err(Error::GridTooSmall { .. }) => None,
        Err(e) => return Err(e.into()),
    };

    let mut csv = Table::new(SWEEP_COLUMNS.to_vec());
    for row in &table.rows {
        csv.push(vec![
            row.alpha.into(),
            row.sigma_sq.into(),
            row.sigma_tilde_sq.into(),
            row.kac.into(),
            row.drift.into(),
            row.sigma_sq_error.into(),
            row.tail_error.into(),
            row.discretization_error.into(),
            row.valid.into(),
            row.error.clone().map_or(Cell::Empty, Cell::S),
        ]);
    }
    let results = json!({
        "rows": table.rows.len(),
        "invalid_rows": table.rows.iter().filter(|r| !r.valid).count(),
        "smoothness": smooth.as_ref().map(to_value).transpose()?,
    });
    Ok(Report {
        table: csv,
        json: json!({ "table": to_value(&table)?, "smoothness": results["smoothness"] }),
        results,
        seeds: json!({}),
    })
}

#[derive(Debug, Clone, Args)]
pub struct TailsArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub r_min: Option<usize>,
    #[arg(long)]
    pub r_max: Option<usize>,
    #[command(flatten)]
    pub io: IoArgs,
}

pub fn tails(a: &TailsArgs, r: &mut Resolver) -> Result<Report, CliError> {
    let p = params(r, a.alpha)?;
    let r_min = r.get("r-min", a.r_min, 50)?;
    let r_max = r.get("r-max", a.r_max, 2000)?;
    let markers = MarkerTable::new(&p, r_max.clamp(1, DEFAULT_MARKER_DEPTH))?;
    let fit = tail_exponent_fit(&p, &markers, r_min, r_max)?;
    let mut table = Table::new(vec!["r", "x_r", "cylinder_length"]);
    for k in r_min..=r_max {
        table.push(vec![
            k.into(),
            markers.x(k).into(),
            markers.cylinder_length(k).into(),
        ]);
    }
    let results = to_value(&fit)?;
    Ok(Report {
        table,
        json: json!({
            "fit": results,
            "r": (r_min..=r_max).collect::<Vec<_>>(),
            "cylinder_length": (r_min..=r_max).map(|k| markers.cylinder_length(k)).collect::<Vec<_>>(),
        }),
        results,
        seeds: json!({}),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names() {
        assert_eq!(parse_method("both").unwrap(), Method::Both);
        assert!(parse_method("Operator").is_err());
    }
}
