//! Sweeps over α of `σ²`, `σ̃²`, `∫τ dμ` and a drift coefficient, with
//! finite-difference derivatives and a smoothness diagnostic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green_kubo::{density_for, drift_coefficient, sigma_sq, Method, SigmaSettings};
use crate::map_core::MapParams;
use crate::observable::Observable;

pub const SMOOTHNESS_LABEL: &str = "numerical diagnostic consistent with C¹, not a proof";
pub const DEFAULT_GAP_THRESHOLD: f64 = 0.05;
pub const DEFAULT_TV_FACTOR: f64 = 3.0;
const SLOPE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub sigma_sq: f64,
    pub sigma_tilde_sq: f64,
    pub kac: f64,
    pub drift: f64,
    /// Half-width of the bracket on `sigma_sq`.
    pub sigma_sq_error: f64,
    pub tail_error: f64,
    pub discretization_error: f64,
    pub valid: bool,
    pub error: Option<String>,
}

impl SweepRow {
    fn invalid(alpha: f64, e: &Error) -> Self {
        Self {
            alpha,
            sigma_sq: f64::NAN,
            sigma_tilde_sq: f64::NAN,
            kac: f64::NAN,
            drift: f64::NAN,
            sigma_sq_error: f64::NAN,
            tail_error: f64::NAN,
            discretization_error: f64::NAN,
            valid: false,
            error: Some(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub observable: String,
    pub drift_observable: String,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    SigmaSq,
    SigmaTildeSq,
    Kac,
    Drift,
}

impl SweepTable {
    /// A table from bare columns, all rows valid with zero brackets.
    pub fn from_columns(alphas: &[f64], sigma_sq: &[f64], kac: &[f64], drift: &[f64]) -> Self {
        let rows = alphas
            .iter()
            .enumerate()
            .map(|(i, &alpha)| SweepRow {
                alpha,
                sigma_sq: sigma_sq[i],
                sigma_tilde_sq: sigma_sq[i] * kac[i],
                kac: kac[i],
                drift: drift[i],
                sigma_sq_error: 0.0,
                tail_error: 0.0,
                discretization_error: 0.0,
                valid: true,
                error: None,
            })
            .collect();
        Self {
            observable: String::new(),
            drift_observable: String::new(),
            rows,
        }
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.alpha).collect()
    }

    pub fn column(&self, column: Column) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match column {
                Column::SigmaSq => r.sigma_sq,
                Column::SigmaTildeSq => r.sigma_tilde_sq,
                Column::Kac => r.kac,
                Column::Drift => r.drift,
            })
            .collect()
    }
}

/// `n` equally spaced points from `lo` to `hi`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// One row per grid point, all with the same settings. A failing row is
/// kept, marked invalid, and the sweep continues.
pub fn sweep_sigma(
    grid: &[f64],
    psi: &Observable,
    drift_obs: &Observable,
    settings: &SigmaSettings,
) -> Result<SweepTable> {
    if settings.method != Method::Operator {
        return Err(Error::InvalidParameter(
            "sweeps use the operator method".into(),
        ));
    }
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("grid must be increasing".into()));
    }
    if let Some(a) = grid.iter().find(|&&a| !(a > 0.0 && a < 0.5)) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {a} outside (0, 1/2)"
        )));
    }
    settings.validate()?;
    let rows = grid
        .par_iter()
        .map(|&alpha| {
            row(alpha, psi, drift_obs, settings).unwrap_or_else(|e| SweepRow::invalid(alpha, &e))
        })
        .collect();
    Ok(SweepTable {
        observable: psi.label().to_string(),
        drift_observable: drift_obs.label().to_string(),
        rows,
    })
}

fn row(
    alpha: f64,
    psi: &Observable,
    drift_obs: &Observable,
    s: &SigmaSettings,
) -> Result<SweepRow> {
    let p = MapParams::new(alpha)?;
    let r = sigma_sq(&p, psi, s)?;
    let density = density_for(&p, s)?;
    let drift = drift_coefficient(&p, drift_obs, &density)?;
    Ok(SweepRow {
        alpha,
        sigma_sq: r.sigma_sq,
        sigma_tilde_sq: r.sigma_tilde_sq,
        kac: r.kac,
        drift,
        sigma_sq_error: r.sigma_sq_error,
        tail_error: r.tail_error,
        discretization_error: r.discretization_error,
        valid: true,
        error: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdPoint {
    pub alpha: f64,
    /// Central difference with step `h`.
    pub slope: f64,
    /// Central difference with step `2h`, where the grid allows it.
    pub slope_2h: Option<f64>,
    /// `|slope(h) - slope(2h)| / max(|slope(h)|, ε)`.
    pub two_scale_gap: Option<f64>,
}

/// Central differences of `column` at the interior grid points.
pub fn fd_derivative(table: &SweepTable, column: Column) -> Result<Vec<FdPoint>> {
    let a = table.alphas();
    let v = table.column(column);
    let n = a.len();
    if n < 5 {
        return Err(Error::GridTooSmall { needed: 5, got: n });
    }
    let h = (a[n - 1] - a[0]) / (n - 1) as f64;
    if a.windows(2)
        .any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0))
    {
        return Err(Error::InvalidParameter("grid is not uniform".into()));
    }
    Ok((1..n - 1)
        .map(|i| {
            let slope = (v[i + 1] - v[i - 1]) / (2.0 * h);
            let slope_2h = (i >= 2 && i + 2 < n).then(|| (v[i + 2] - v[i - 2]) / (4.0 * h));
            let two_scale_gap =
                slope_2h.map(|s2| (slope - s2).abs() / slope.abs().max(SLOPE_FLOOR));
            FdPoint {
                alpha: a[i],
                slope,
                slope_2h,
                two_scale_gap,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub label: String,
    /// `max |σ²(α_{i+1}) - σ²(α_i)|`
    pub modulus_sigma_sq: f64,
    /// `max |s_{i+1} - s_i|` over the FD slopes.
    pub modulus_derivative: f64,
    pub derivative: Vec<FdPoint>,
    pub max_two_scale_gap: f64,
    pub derivative_total_variation: f64,
    pub derivative_range: f64,
    pub gap_threshold: f64,
    pub tv_factor: f64,
    pub kac_increasing: bool,
    pub all_rows_valid: bool,
    pub flags: Vec<String>,
    pub pass: bool,
}

pub fn smoothness_report(table: &SweepTable) -> Result<SmoothnessReport> {
    smoothness_report_with(table, DEFAULT_GAP_THRESHOLD, DEFAULT_TV_FACTOR)
}

pub fn smoothness_report_with(
    table: &SweepTable,
    gap_threshold: f64,
    tv_factor: f64,
) -> Result<SmoothnessReport> {
    let s = table.column(Column::SigmaSq);
    let kac = table.column(Column::Kac);
    let derivative = fd_derivative(table, Column::SigmaSq)?;
    let slopes: Vec<f64> = derivative.iter().map(|d| d.slope).collect();
    let max_abs_diff = |v: &[f64]| {
        v.windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
    };
    let modulus_sigma_sq = max_abs_diff(&s);
    let modulus_derivative = max_abs_diff(&slopes);
    let max_two_scale_gap = derivative
        .iter()
        .filter_map(|d| d.two_scale_gap)
        .fold(0.0, f64::max);
    let derivative_total_variation: f64 = slopes.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let (lo, hi) = slopes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let derivative_range = hi - lo;
    let all_rows_valid = table.rows.iter().all(|r| r.valid);
    let kac_tol: Vec<f64> = table
        .rows
        .iter()
        .map(|r| r.sigma_sq_error.max(0.0))
        .collect();
    let kac_increasing = kac
        .windows(2)
        .enumerate()
        .all(|(i, w)| w[1] > w[0] - 1e-9 - kac_tol[i] - kac_tol[i + 1]);

    let mut flags = Vec::new();
    if !all_rows_valid {
        flags.push("invalid rows in sweep".to_string());
    }
    let gaps_ok = max_two_scale_gap <= gap_threshold && max_two_scale_gap.is_finite();
    if !gaps_ok {
        for d in &derivative {
            if let Some(g) = d.two_scale_gap.filter(|g| !(*g <= gap_threshold)) {
                flags.push(format!("two-scale gap {g:.4} at alpha = {}", d.alpha));
            }
        }
    }
    let tv_ok = derivative_total_variation <= tv_factor * derivative_range + 1e-15;
    if !tv_ok {
        flags.push(format!(
            "derivative total variation {derivative_total_variation:.4e} exceeds {tv_factor} x range {derivative_range:.4e}"
        ));
    }
    if !kac_increasing {
        flags.push("kac not increasing in alpha".to_string());
    }
    Ok(SmoothnessReport {
        label: SMOOTHNESS_LABEL.to_string(),
        modulus_sigma_sq,
        modulus_derivative,
        derivative,
        max_two_scale_gap,
        derivative_total_variation,
        derivative_range,
        gap_threshold,
        tv_factor,
        kac_increasing,
        all_rows_valid,
        pass: all_rows_valid && gaps_ok && tv_ok,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> SweepTable {
        let a = uniform_grid(0.05, 0.45, 21);
        let s: Vec<f64> = a.iter().map(|&x| f(x)).collect();
        let kac: Vec<f64> = a.iter().map(|&x| 2.0 + x).collect();
        SweepTable::from_columns(&a, &s, &kac, &s)
    }

    #[test]
    fn affine_column_has_exact_slope() {
        let t = synthetic(|a| 3.0 * a - 1.0);
        let d = fd_derivative(&t, Column::Kac).unwrap();
        for p in &d {
            assert!((p.slope - 1.0).abs() < 1e-12);
            if let Some(g) = p.two_scale_gap {
                assert!(g < 1e-10);
            }
        }
        assert_eq!(d.len(), 19);
        assert!(d[0].two_scale_gap.is_none() && d[1].two_scale_gap.is_some());
    }

    #[test]
    fn grid_too_small() {
        let t = SweepTable::from_columns(&[0.1, 0.2, 0.3, 0.4], &[1.0; 4], &[2.0; 4], &[0.0; 4]);
        assert_eq!(
            fd_derivative(&t, Column::SigmaSq).unwrap_err(),
            Error::GridTooSmall { needed: 5, got: 4 }
        );
    }

    #[test]
    fn constant_column_passes() {
        let r = smoothness_report(&synthetic(|_| 0.7)).unwrap();
        assert_eq!(r.modulus_sigma_sq, 0.0);
        assert_eq!(r.modulus_derivative, 0.0);
        assert!(r.pass);
        assert_eq!(r.label, SMOOTHNESS_LABEL);
    }

    #[test]
    fn jump_is_flagged() {
        let r = smoothness_report(&synthetic(|a| if a < 0.25 { a } else { a + 0.1 })).unwrap();
        assert!(!r.pass);
        assert!(r.modulus_derivative > 1.0);
        assert!(!r.flags.is_empty());
    }

    #[test]
    fn smooth_column_passes() {
        let r = smoothness_report(&synthetic(|a| (2.0 * a).exp())).unwrap();
        assert!(r.pass, "{:?}", r.flags);
        assert!(r.kac_increasing);
    }

    #[test]
    fn sweep_validates_inputs() {
        let s = SigmaSettings::default();
        let x = Observable::identity();
        assert!(sweep_sigma(&[0.0, 0.1], &x, &x, &s).is_err());
        assert!(sweep_sigma(&[0.2, 0.1], &x, &x, &s).is_err());
        let mc = SigmaSettings {
            method: Method::Mc,
            ..s
        };
        assert!(sweep_sigma(&[0.1], &x, &x, &mc).is_err());
    }

    #[test]
    fn single_row_matches_direct_call() {
        let s = SigmaSettings {
            discretization_check: false,
            ..SigmaSettings::default()
        };
        let x = Observable::identity();
        let t = sweep_sigma(&[0.1], &x, &x, &s).unwrap();
        let direct = sigma_sq(&MapParams::new(0.1).unwrap(), &x, &s).unwrap();
        assert_eq!(t.rows[0].sigma_sq, direct.sigma_sq);
        assert!((t.rows[0].drift - direct.center).abs() < 1e-15);
    }
}
