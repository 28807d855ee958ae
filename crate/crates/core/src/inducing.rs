//! First returns to `Y = (1/2, 1]`.
//!
//! The markers `x_0 = 1`, `x_{n+1} = g(x_n)` and `y_{n+1} = (x_n + 1)/2`
//! cut `Y` into the cylinders `I_n = (y_{n+1}, y_n]` on which the return time
//! equals `n`. A point `x ∈ Y` is located through its offset `w = 2x - 1`,
//! which lies in `(x_n, x_{n-1}]` exactly when `x ∈ I_n`. Working with the
//! offset keeps full relative precision for cylinders that accumulate at 1/2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map_core::MapParams;
use crate::observable::Observable;

pub const DEFAULT_MARKER_DEPTH: usize = 100_000;

/// Return-time structure of `f_α` on `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerTable {
    alpha: f64,
    /// `x[n]` for `n = 0..=n_max`, strictly decreasing from `x[0] = 1`.
    x: Vec<f64>,
}

impl MarkerTable {
    /// Tabulates the markers up to depth `n_max`. The table stops early if
    /// the markers leave the normal floating-point range, which only
    /// happens for α close to 0 where the cylinders shrink geometrically.
    pub fn new(p: &MapParams, n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::InvalidParameter(format!(
                "marker depth {n_max} must be at least 2"
            )));
        }
        let mut x = Vec::with_capacity(n_max + 1);
        x.push(1.0);
        Self::grow(p, &mut x, n_max)?;
        Ok(Self {
            alpha: p.alpha(),
            x,
        })
    }

    fn grow(p: &MapParams, x: &mut Vec<f64>, n_max: usize) -> Result<()> {
        while x.len() <= n_max {
            let next = p.left_inverse(*x.last().unwrap())?;
            if next < f64::MIN_POSITIVE {
                break;
            }
            x.push(next);
        }
        Ok(())
    }

    /// A deeper copy of this table; existing markers are reused.
    pub fn extended(&self, p: &MapParams, n_max: usize) -> Result<Self> {
        if (p.alpha() - self.alpha).abs() > 0.0 {
            return Err(Error::InvalidParameter(
                "marker table belongs to a different alpha".into(),
            ));
        }
        let mut x = self.x.clone();
        Self::grow(p, &mut x, n_max)?;
        Ok(Self {
            alpha: self.alpha,
            x,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Deepest tabulated marker index.
    pub fn n_max(&self) -> usize {
        self.x.len() - 1
    }

    /// `x_n`, `0 ≤ n ≤ n_max`.
    pub fn x(&self, n: usize) -> f64 {
        self.x[n]
    }

    pub fn xs(&self) -> &[f64] {
        &self.x
    }

    /// `y_n = (x_{n-1} + 1)/2`, `1 ≤ n ≤ n_max + 1`.
    pub fn y(&self, n: usize) -> f64 {
        assert!(n >= 1, "y_n is defined for n >= 1");
        0.5 * (self.x[n - 1] + 1.0)
    }

    /// Lebesgue measure of `I_n`, `(x_{n-1} - x_n)/2 = x_n (2 x_n)^α / 2`.
    pub fn cylinder_length(&self, n: usize) -> f64 {
        let xn = self.x[n];
        0.5 * xn * dilation(self.alpha, xn)
    }

    /// Measure of `(1/2, y_{n+1}]`, the part of `Y` returning after more
    /// than `n` steps.
    pub fn tail_measure(&self, n: usize) -> f64 {
        0.5 * self.x[n]
    }

    /// Cylinder index of a point with offset `w = 2x - 1 ∈ (0, 1]`.
    pub fn cylinder_of_offset(&self, w: f64) -> Result<usize> {
        if !(w > 0.0 && w <= 1.0) {
            return Err(Error::Domain {
                x: 0.5 * (w + 1.0),
                domain: "(1/2, 1]",
            });
        }
        // `x` is decreasing: count markers strictly above w.
        let above = self.x.partition_point(|&m| m >= w);
        // w ∈ (x_n, x_{n-1}] ⇔ above = n.
        if above >= self.n_max() {
            return Err(Error::TailOverflow {
                x: 0.5 * (w + 1.0),
                n_max: self.n_max(),
            });
        }
        Ok(above)
    }

    /// Cylinder index of `x ∈ Y`.
    pub fn cylinder_of(&self, x: f64) -> Result<usize> {
        check_y(x)?;
        self.cylinder_of_offset(2.0 * x - 1.0)
    }
}

#[inline]
fn dilation(alpha: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (alpha * (2.0 * x).ln()).exp()
    }
}

pub(crate) fn check_y(x: f64) -> Result<()> {
    if x > 0.5 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            x,
            domain: "(1/2, 1]",
        })
    }
}

/// Return time `τ(x)` by marker lookup.
pub fn return_time(_p: &MapParams, x: f64, markers: &MarkerTable) -> Result<usize> {
    markers.cylinder_of(x)
}

/// Return time by iterating the map until the orbit re-enters `Y`.
/// `cap` bounds the number of steps.
pub fn return_time_direct(p: &MapParams, x: f64, cap: usize) -> Result<usize> {
    check_y(x)?;
    let mut z = p.step(x);
    let mut n = 1;
    while z <= 0.5 {
        if n >= cap {
            return Err(Error::TailOverflow { x, n_max: cap });
        }
        z = p.step(z);
        n += 1;
    }
    Ok(n)
}

/// `F(x) = f^τ(x)(x)`.
pub fn induced_apply(p: &MapParams, x: f64, markers: &MarkerTable) -> Result<f64> {
    let tau = return_time(p, x, markers)?;
    let mut z = p.step(x);
    for _ in 1..tau {
        z = p.step(z);
    }
    // Rounding can leave a boundary point marginally on the wrong side.
    while z <= 0.5 {
        z = p.step(z);
    }
    Ok(z)
}

/// `F'(x)`, the product of `f'` along the return block.
pub fn induced_derivative(p: &MapParams, x: f64, markers: &MarkerTable) -> Result<f64> {
    let tau = return_time(p, x, markers)?;
    let mut z = x;
    let mut d = 1.0;
    for _ in 0..tau {
        d *= p.derivative_unchecked(z);
        z = p.step(z);
    }
    Ok(d)
}

/// Inverse of `F` restricted to `I_n`, returned as the offset
/// `w = g^(n-1)(z)` of the preimage `x = (w + 1)/2`.
pub fn branch_inverse_offset(p: &MapParams, n: usize, z: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("branch index starts at 1".into()));
    }
    check_y(z)?;
    let mut w = z;
    for _ in 1..n {
        w = p.left_inverse(w)?;
    }
    Ok(w)
}

/// The unique `x ∈ I_n` with `F(x) = z`, `x = (g^(n-1)(z) + 1)/2`.
pub fn branch_inverse(p: &MapParams, n: usize, z: f64) -> Result<f64> {
    Ok(0.5 * (branch_inverse_offset(p, n, z)? + 1.0))
}

/// Un-centered block sum `Σ_{k<τ(x)} ψ(f^k x)` and the return time.
pub fn block_sum(
    p: &MapParams,
    psi: &Observable,
    x: f64,
    markers: &MarkerTable,
) -> Result<(f64, usize)> {
    let tau = return_time(p, x, markers)?;
    let mut z = x;
    let mut acc = 0.0;
    for _ in 0..tau {
        acc += psi.value(z);
        z = p.step(z);
    }
    Ok((acc, tau))
}

/// Induced observable `Ψ̂(x) = Σ_{k<τ(x)} ψ̂(f^k x)` with `ψ̂ = ψ - center`.
pub fn induced_observable(
    p: &MapParams,
    psi: &Observable,
    x: f64,
    markers: &MarkerTable,
) -> Result<f64> {
    let (sum, tau) = block_sum(p, psi, x, markers)?;
    Ok(sum - psi.center() * tau as f64)
}

/// Least `n` such that `F^n x` and `F^n y` lie in different cylinders, or
/// `None` when they have not separated after `cap` induced steps.
pub fn separation_time(
    p: &MapParams,
    x: f64,
    y: f64,
    markers: &MarkerTable,
    cap: usize,
) -> Result<Option<usize>> {
    check_y(x)?;
    check_y(y)?;
    let (mut a, mut b) = (x, y);
    for n in 0..cap {
        if a == b {
            return Ok(None);
        }
        if markers.cylinder_of(a)? != markers.cylinder_of(b)? {
            return Ok(Some(n));
        }
        a = induced_apply(p, a, markers)?;
        b = induced_apply(p, b, markers)?;
    }
    Ok(None)
}

/// Pairs sampled per cylinder by [`lip_seminorm_estimate`].
pub const LIP_SAMPLE_PAIRS: usize = 200;

/// Empirical lower bound for `|Ψ̂|_Lip(I_r)`: the largest
/// `|Ψ̂(x) - Ψ̂(y)| θ^s(x,y)` over quasi-uniform pairs `x, y ∈ I_r`.
pub fn lip_seminorm_estimate(
    p: &MapParams,
    psi: &Observable,
    r: usize,
    metric_theta: f64,
    samples: usize,
    markers: &MarkerTable,
) -> Result<f64> {
    if !(metric_theta > 1.0 && metric_theta <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "metric base {metric_theta} must lie in (1, 2]"
        )));
    }
    if r == 0 || r + 1 >= markers.n_max() {
        return Err(Error::TailOverflow {
            x: f64::NAN,
            n_max: markers.n_max(),
        });
    }
    if psi.is_constant() {
        return Ok(0.0);
    }
    let (lo, hi) = (markers.x(r), markers.x(r - 1));
    // R2 low-discrepancy sequence on the unit square.
    const G1: f64 = 0.754_877_666_246_692_8;
    const G2: f64 = 0.569_840_290_998_053_3;
    let cap = 60;
    let mut best = 0.0_f64;
    for i in 0..samples {
        let u = (0.5 + G1 * (i + 1) as f64).fract();
        let v = (0.5 + G2 * (i + 1) as f64).fract();
        let wa = lo + (hi - lo) * u.max(1e-12);
        let wb = lo + (hi - lo) * v.max(1e-12);
        let (xa, xb) = (0.5 * (wa + 1.0), 0.5 * (wb + 1.0));
        if xa == xb {
            continue;
        }
        let s = match separation_time(p, xa, xb, markers, cap) {
            Ok(Some(s)) => s,
            Ok(None) => continue,
            Err(Error::TailOverflow { .. }) => continue,
            Err(e) => return Err(e),
        };
        let da = block_sum(p, psi, xa, markers)?.0;
        let db = block_sum(p, psi, xb, markers)?.0;
        best = best.max((da - db).abs() * metric_theta.powi(s as i32));
    }
    Ok(best)
}

/// Log-log regression of the cylinder lengths `m(I_r)` against `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `-(1 + 1/α)`, or `-∞` at α = 0.
    pub expected_slope: f64,
    pub points: usize,
    /// Whether the data look like a power law (`R² ≥ POWER_LAW_R2`).
    pub power_law: bool,
}

pub const POWER_LAW_R2: f64 = 0.999;

pub fn tail_exponent_fit(
    p: &MapParams,
    markers: &MarkerTable,
    r_min: usize,
    r_max: usize,
) -> Result<TailFit> {
    if r_min == 0 || r_max <= r_min {
        return Err(Error::InvalidParameter(format!(
            "tail fit range [{r_min}, {r_max}]"
        )));
    }
    if r_max > markers.n_max() {
        return Err(Error::TailOverflow {
            x: f64::NAN,
            n_max: markers.n_max(),
        });
    }
    let pts: Vec<(f64, f64)> = (r_min..=r_max)
        .map(|r| (r as f64, markers.cylinder_length(r)))
        .filter(|&(_, m)| m > 0.0)
        .map(|(r, m)| (r.ln(), m.ln()))
        .collect();
    let (slope, intercept, r_squared) = linear_fit(&pts);
    let expected_slope = if p.alpha() > 0.0 {
        -(1.0 + 1.0 / p.alpha())
    } else {
        f64::NEG_INFINITY
    };
    Ok(TailFit {
        slope,
        intercept,
        r_squared,
        expected_slope,
        points: pts.len(),
        power_law: r_squared >= POWER_LAW_R2,
    })
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, R²)`.
pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN, 0.0);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    (a, b, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(alpha: f64, depth: usize) -> (MapParams, MarkerTable) {
        let p = MapParams::new(alpha).unwrap();
        let m = MarkerTable::new(&p, depth).unwrap();
        (p, m)
    }

    #[test]
    fn marker_invariants() {
        for a in [0.0, 0.1, 0.25, 0.45] {
            let (p, m) = setup(a, 2000);
            assert_eq!(m.x(0), 1.0);
            assert_eq!(m.x(1), 0.5);
            assert_eq!(m.y(1), 1.0);
            assert_eq!(m.y(2), 0.75);
            for n in 1..m.n_max() {
                assert!(m.x(n + 1) < m.x(n));
                let back = p.step(m.x(n + 1));
                assert!((back - m.x(n)).abs() <= 1e-12 * m.x(n));
                assert_eq!(m.y(n + 1), (m.x(n) + 1.0) / 2.0);
                // The subtraction loses digits deep in the table.
                let direct = (m.x(n - 1) - m.x(n)) / 2.0;
                assert!((m.cylinder_length(n) - direct).abs() <= 1e-9 * direct);
            }
        }
    }

    #[test]
    fn doubling_markers_stop_before_underflow() {
        let (_, m) = setup(0.0, 100_000);
        assert!(m.n_max() < 1100);
        assert!(m.xs().iter().all(|&x| x >= f64::MIN_POSITIVE));
        assert_eq!(m.x(10), 2f64.powi(-10));
    }

    #[test]
    fn partition_sum_approaches_half() {
        let (_, m) = setup(0.3, 20_000);
        let total: f64 = (1..=m.n_max()).map(|r| m.cylinder_length(r)).sum();
        let deficit = 0.5 - total;
        assert!(deficit > 0.0);
        assert!((deficit - m.tail_measure(m.n_max())).abs() < 1e-12);
        // Deficit decays like n_max^(-1/α).
        let scaled: Vec<f64> = [100, 1000, 10_000, 20_000]
            .iter()
            .map(|&n| m.tail_measure(n) * (n as f64).powf(1.0 / 0.3))
            .collect();
        assert!(
            scaled.windows(2).all(|w| (w[1] / w[0] - 1.0).abs() < 0.2),
            "{scaled:?}"
        );
    }

    #[test]
    fn return_time_examples() {
        let (p, m) = setup(0.2, 1000);
        assert_eq!(return_time(&p, 0.8, &m).unwrap(), 1);
        assert_eq!(return_time(&p, 1.0, &m).unwrap(), 1);
        assert_eq!(return_time(&p, 0.75, &m).unwrap(), 2);

        let p1 = MapParams::raw(1.0);
        let m1 = MarkerTable::new(&p1, 50).unwrap();
        let x2 = (5f64.sqrt() - 1.0) / 4.0;
        assert!((m1.y(3) - (x2 + 1.0) / 2.0).abs() < 1e-15);
        assert_eq!(return_time(&p1, 0.7, &m1).unwrap(), 2);
        assert_eq!(return_time_direct(&p1, 0.7, 100).unwrap(), 2);
    }

    #[test]
    fn return_time_tail_overflow() {
        let (p, m) = setup(0.3, 10);
        let deep = 0.5 + 0.25 * m.x(m.n_max());
        assert!(matches!(
            return_time(&p, deep, &m),
            Err(Error::TailOverflow { .. })
        ));
        assert!(return_time(&p, 0.4, &m).is_err());
    }

    #[test]
    fn induced_apply_examples() {
        let (p, m) = setup(0.3, 1000);
        assert!((induced_apply(&p, 0.8, &m).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(induced_apply(&p, 1.0, &m).unwrap(), 1.0);

        let (p, m) = setup(0.25, 1000);
        assert_eq!(return_time(&p, 0.70, &m).unwrap(), 2);
        let twice = p.step(p.step(0.70));
        assert_eq!(induced_apply(&p, 0.70, &m).unwrap(), twice);
        assert!(twice > 0.5 && twice <= 1.0);
    }

    #[test]
    fn branch_inverse_examples() {
        let p = MapParams::new(0.3).unwrap();
        for z in [0.51, 0.7, 1.0] {
            assert_eq!(branch_inverse(&p, 1, z).unwrap(), (z + 1.0) / 2.0);
        }
        let p1 = MapParams::raw(1.0);
        assert_eq!(branch_inverse(&p1, 2, 1.0).unwrap(), 0.75);
    }

    #[test]
    fn branch_inverse_inverts_induced_map() {
        let (p, m) = setup(0.35, 5000);
        for n in [1, 2, 3, 7, 20, 100] {
            for i in 1..20 {
                let z = 0.5 + 0.5 * (i as f64 + 0.37) / 20.0;
                let x = branch_inverse(&p, n, z).unwrap();
                assert_eq!(return_time(&p, x, &m).unwrap(), n);
                // F' grows like 1/m(I_n), so the forward check is only
                // well conditioned on the first few branches.
                if n <= 3 {
                    let back = induced_apply(&p, x, &m).unwrap();
                    assert!((back - z).abs() < 1e-12, "n={n} z={z} back={back}");
                }
            }
        }
        // The contracting direction holds to 1e-12 on every branch.
        for i in 0..500 {
            let x = 0.5 + 0.5 * (i as f64 + 0.5) / 500.0;
            let n = return_time(&p, x, &m).unwrap();
            let z = induced_apply(&p, x, &m).unwrap();
            let x_back = branch_inverse(&p, n, z).unwrap();
            assert!((x_back - x).abs() < 1e-12, "x={x} n={n}");
        }
    }

    #[test]
    fn induced_observable_examples() {
        let (p, m) = setup(0.2, 1000);
        let c = Observable::constant(2.5).with_center(2.5);
        for x in [0.55, 0.8, 0.999] {
            assert_eq!(induced_observable(&p, &c, x, &m).unwrap(), 0.0);
        }
        let nu_y = 0.4;
        let g = Observable::custom(
            "kac",
            move |x| if x > 0.5 { 1.0 - 1.0 / nu_y } else { 1.0 },
            |_| 0.0,
            |_| 0.0,
        );
        for x in [0.52, 0.6, 0.7, 0.9] {
            let tau = return_time(&p, x, &m).unwrap() as f64;
            let v = induced_observable(&p, &g, x, &m).unwrap();
            assert!((v - (tau - 1.0 / nu_y)).abs() < 1e-12);
        }
        let (p0, m0) = setup(0.0, 100);
        let psi = Observable::identity().with_center(0.5);
        assert!((induced_observable(&p0, &psi, 0.8, &m0).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn separation_time_examples() {
        let (p, m) = setup(0.25, 10_000);
        assert_eq!(separation_time(&p, 0.9, 0.9, &m, 40).unwrap(), None);
        assert_eq!(separation_time(&p, 0.9, 0.7, &m, 40).unwrap(), Some(0));
        let s = separation_time(&p, 0.9, 0.9 + 1e-9, &m, 200)
            .unwrap()
            .unwrap();
        // Brute force: iterate f and compare return blocks.
        let brute = {
            let (mut a, mut b) = (0.9_f64, 0.9 + 1e-9);
            let mut n = 0;
            loop {
                let ta = return_time_direct(&p, a, 1 << 30).unwrap();
                let tb = return_time_direct(&p, b, 1 << 30).unwrap();
                if ta != tb {
                    break n;
                }
                for _ in 0..ta {
                    a = p.step(a);
                    b = p.step(b);
                }
                n += 1;
            }
        };
        assert_eq!(s, brute);
        // At least two-fold expansion per induced step bounds s by
        // log2(1e9) ≈ 30; typical induced expansion is stronger.
        assert_eq!(s, 13);
    }

    #[test]
    fn lip_seminorm_examples() {
        let (p, m) = setup(0.25, 10_000);
        let c = Observable::constant(1.0);
        assert_eq!(lip_seminorm_estimate(&p, &c, 3, 2.0, 50, &m).unwrap(), 0.0);
        let psi = Observable::identity();
        let r1 = lip_seminorm_estimate(&p, &psi, 1, 2.0, LIP_SAMPLE_PAIRS, &m).unwrap();
        assert!(r1 > 0.0 && r1 <= 4.0, "r1 = {r1}");
        let mut worst: f64 = 0.0;
        for r in 1..=50 {
            let est = lip_seminorm_estimate(&p, &psi, r, 1.5, LIP_SAMPLE_PAIRS, &m).unwrap();
            worst = worst.max(est / r as f64);
        }
        assert!(worst.is_finite() && worst < 10.0, "sup est/r = {worst}");
    }

    #[test]
    fn tail_exponent_examples() {
        // Frozen from an independent 40-digit computation of the markers.
        // The log correction in x_n^(-α) ≈ α2^α n + ((α+1)2^α/2) ln n
        // steepens the finite-range slope.
        for (a, expected, oracle) in [(0.25, -5.0, -5.061_505_185), (0.4, -3.5, -3.543_695_642)] {
            let (p, m) = setup(a, 2000);
            let fit = tail_exponent_fit(&p, &m, 50, 2000).unwrap();
            assert_eq!(fit.expected_slope, expected);
            assert!((fit.slope - oracle).abs() <= 1e-6, "alpha {a}: {fit:?}");
            assert!(fit.power_law);
        }
        // The slope converges to -(1 + 1/α) on deeper ranges.
        let (p, m) = setup(0.25, 100_000);
        let fit = tail_exponent_fit(&p, &m, 20_000, 100_000).unwrap();
        assert!((fit.slope + 5.0).abs() < 0.005, "{fit:?}");
        let (p, m) = setup(0.0, 2000);
        let fit = tail_exponent_fit(&p, &m, 50, m.n_max()).unwrap();
        assert!(!fit.power_law, "{fit:?}");
    }

    #[test]
    fn marker_lookup_agrees_with_direct_iteration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for a in [0.1, 0.3, 0.45] {
            let (p, m) = setup(a, 100_000);
            for _ in 0..10_000 {
                let x: f64 = 0.5 + 0.5 * rng.random::<f64>();
                if x <= 0.5 || x <= m.y(m.n_max()) {
                    continue;
                }
                let a1 = return_time(&p, x, &m).unwrap();
                let a2 = return_time_direct(&p, x, 1 << 40).unwrap();
                assert_eq!(a1, a2, "x = {x}");
            }
        }
    }

    #[test]
    fn induced_map_expands() {
        let (p, m) = setup(0.4, 10_000);
        for i in 0..2000 {
            let x = 0.5 + 0.5 * (i as f64 + 0.5) / 2000.0;
            assert!(induced_derivative(&p, x, &m).unwrap() >= 2.0);
        }
    }

    #[test]
    fn extension_reuses_prefix() {
        let (p, m) = setup(0.3, 100);
        let deeper = m.extended(&p, 500).unwrap();
        assert_eq!(deeper.n_max(), 500);
        assert_eq!(&deeper.xs()[..101], m.xs());
        let q = MapParams::new(0.2).unwrap();
        assert!(m.extended(&q, 200).is_err());
    }
}
