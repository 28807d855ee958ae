//! The Liverani–Saussol–Vaienti map
//!
//! ```text
//! f(x) = x (1 + (2x)^α)   0 ≤ x ≤ 1/2
//! f(x) = 2x - 1           1/2 < x ≤ 1
//! ```
//!
//! together with its derivative, its α-partial and the inverse `g` of the
//! left branch. The point 1/2 belongs to the left branch, so `f(1/2) = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_NEWTON_TOL: f64 = 1e-14;
pub const DEFAULT_NEWTON_MAX_ITER: usize = 100;

/// Parameter α together with the settings of the left-branch inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    alpha: f64,
    newton_tol: f64,
    newton_max_iter: usize,
}

impl MapParams {
    /// Validated constructor, `0 ≤ alpha < 1/2`.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha} is outside [0, 1/2)"
            )));
        }
        Ok(Self::raw(alpha))
    }

    /// Skips the range check on α. Only meant for closed-form checks at
    /// parameters such as α = 1 where the left branch is a quadratic.
    #[doc(hidden)]
    pub fn raw(alpha: f64) -> Self {
        Self {
            alpha,
            newton_tol: DEFAULT_NEWTON_TOL,
            newton_max_iter: DEFAULT_NEWTON_MAX_ITER,
        }
    }

    pub fn with_newton(mut self, tol: f64, max_iter: usize) -> Result<Self> {
        if !(tol > 0.0) || max_iter == 0 {
            return Err(Error::InvalidParameter(format!(
                "newton_tol = {tol}, newton_max_iter = {max_iter}"
            )));
        }
        self.newton_tol = tol;
        self.newton_max_iter = max_iter;
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn newton_tol(&self) -> f64 {
        self.newton_tol
    }

    pub fn newton_max_iter(&self) -> usize {
        self.newton_max_iter
    }

    /// `(2x)^α`, with the value at `x = 0` fixed to 0 (also for α = 0).
    #[inline]
    pub(crate) fn dilation(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            (self.alpha * (2.0 * x).ln()).exp()
        }
    }

    /// Map evaluation without the domain check.
    #[inline]
    pub fn step(&self, x: f64) -> f64 {
        if x <= 0.5 {
            x * (1.0 + self.dilation(x))
        } else {
            2.0 * x - 1.0
        }
    }

    #[inline]
    pub(crate) fn derivative_unchecked(&self, x: f64) -> f64 {
        if x <= 0.5 {
            1.0 + (self.alpha + 1.0) * self.dilation(x)
        } else {
            2.0
        }
    }

    #[inline]
    pub(crate) fn alpha_partial_unchecked(&self, x: f64) -> f64 {
        if x <= 0.0 || x > 0.5 {
            0.0
        } else {
            x * self.dilation(x) * (2.0 * x).ln()
        }
    }

    pub fn apply(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.step(x))
    }

    /// `f'(x)`; equals 1 at the neutral fixed point and 2 on the right branch.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.derivative_unchecked(x))
    }

    /// `∂f/∂α (x) = 2^α x^(α+1) ln(2x)` on the left branch, 0 on the right.
    pub fn alpha_partial(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.alpha_partial_unchecked(x))
    }

    /// The unique `x ∈ [0, 1/2]` with `f(x) = y`.
    ///
    /// Safeguarded Newton iteration on the bracket `[0, 1/2]`; an iterate
    /// leaving the current bracket is replaced by the bisection point. The
    /// residual criterion is relative, `|f(x) - y| ≤ tol · y`, so deep
    /// pullbacks towards 0 keep full precision.
    pub fn left_inverse(&self, y: f64) -> Result<f64> {
        check_unit(y)?;
        if y == 0.0 {
            return Ok(0.0);
        }
        if y == 1.0 {
            return Ok(0.5);
        }
        let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
        let mut x = y / (1.0 + self.dilation(y));
        let mut residual = f64::INFINITY;
        for _ in 0..self.newton_max_iter {
            let d = self.dilation(x);
            residual = x * (1.0 + d) - y;
            // The absolute floor covers subnormal targets.
            if residual.abs() <= self.newton_tol * y + 2.0 * f64::from_bits(1) {
                return Ok(x);
            }
            if residual > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let slope = 1.0 + (self.alpha + 1.0) * d;
            let mut next = x - residual / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if next == x {
                // Converged to working precision.
                return Ok(x);
            }
            x = next;
        }
        Err(Error::NonConvergence {
            what: "left-branch inversion",
            iterations: self.newton_max_iter,
            residual,
        })
    }

    /// `(x0, f(x0), …, f^(n-1)(x0))`.
    pub fn orbit(&self, x0: f64, n: usize) -> Result<Vec<f64>> {
        check_unit(x0)?;
        let mut out = Vec::with_capacity(n);
        let mut x = x0;
        for _ in 0..n {
            out.push(x);
            x = self.step(x);
        }
        Ok(out)
    }
}

/// Which monotone branch of the map a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `[0, 1/2]`
    Left,
    /// `(1/2, 1]`
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub value: f64,
    pub branch: Branch,
}

impl BranchPoint {
    pub fn classify(value: f64) -> Result<Self> {
        check_unit(value)?;
        let branch = if value <= 0.5 {
            Branch::Left
        } else {
            Branch::Right
        };
        Ok(Self { value, branch })
    }
}

pub(crate) fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain {
            x,
            domain: "[0, 1]",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(alpha: f64) -> MapParams {
        MapParams::new(alpha).unwrap()
    }

    #[test]
    fn apply_examples() {
        for a in [0.0, 0.1, 0.25, 0.49] {
            assert_eq!(p(a).apply(0.5).unwrap(), 1.0);
            assert_eq!(p(a).apply(0.75).unwrap(), 0.5);
        }
        // 0.25 (1 + sqrt(2) / 2)
        let v = MapParams::raw(0.5).apply(0.25).unwrap();
        assert!((v - 0.426_776_695_3).abs() < 1e-10);
    }

    #[test]
    fn domain_errors() {
        let m = p(0.2);
        assert!(matches!(m.apply(-0.1), Err(Error::Domain { .. })));
        assert!(matches!(m.apply(1.5), Err(Error::Domain { .. })));
        assert!(m.derivative(f64::NAN).is_err());
        assert!(m.left_inverse(1.01).is_err());
        assert!(MapParams::new(0.5).is_err());
        assert!(MapParams::new(-0.01).is_err());
        assert!(p(0.1).with_newton(0.0, 10).is_err());
    }

    #[test]
    fn derivative_examples() {
        for a in [0.0, 0.3] {
            assert_eq!(p(a).derivative(0.9).unwrap(), 2.0);
            assert_eq!(p(a).derivative(0.0).unwrap(), 1.0);
        }
        let v = MapParams::raw(0.5).derivative(0.25).unwrap();
        assert!((v - 2.060_660_171_8).abs() < 1e-10);
    }

    #[test]
    fn alpha_partial_examples() {
        assert_eq!(p(0.3).alpha_partial(0.9).unwrap(), 0.0);
        assert!(p(0.3).alpha_partial(0.5).unwrap().abs() < 1e-16);
        assert_eq!(p(0.3).alpha_partial(0.0).unwrap(), 0.0);
        let expected = 2f64.powf(0.25) * 0.25f64.powf(1.25) * (2f64.ln() + 0.25f64.ln());
        let v = p(0.25).alpha_partial(0.25).unwrap();
        assert!((v - expected).abs() < 1e-15);
        assert!((v + 0.145_716_244_8).abs() < 1e-9);
        let h = 1e-6;
        let fd = (p(0.25 + h).step(0.25) - p(0.25 - h).step(0.25)) / (2.0 * h);
        assert!((fd - v).abs() < 1e-8);
    }

    #[test]
    fn left_inverse_examples() {
        for a in [0.0, 0.2, 0.45] {
            assert_eq!(p(a).left_inverse(1.0).unwrap(), 0.5);
            assert_eq!(p(a).left_inverse(0.0).unwrap(), 0.0);
        }
        let x = MapParams::raw(1.0).left_inverse(0.5).unwrap();
        assert!((x - (5f64.sqrt() - 1.0) / 4.0).abs() < 1e-14);
        assert!((x - 0.309_016_994_4).abs() < 1e-10);
    }

    #[test]
    fn left_inverse_reports_exhausted_iterations() {
        let m = p(0.3).with_newton(1e-300, 1).unwrap();
        assert!(matches!(
            m.left_inverse(0.3),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn deep_pullback_keeps_relative_precision() {
        let m = p(0.05);
        let y = 1e-25;
        let x = m.left_inverse(y).unwrap();
        assert!(((m.step(x) - y) / y).abs() < 1e-13);
    }

    #[test]
    fn orbit_examples() {
        assert_eq!(p(0.2).orbit(0.0, 3).unwrap(), vec![0.0, 0.0, 0.0]);
        assert_eq!(p(0.2).orbit(0.75, 3).unwrap(), vec![0.75, 0.5, 1.0]);
        let o = p(0.0).orbit(0.3, 3).unwrap();
        for (a, b) in o.iter().zip([0.3, 0.6, 0.2]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn branch_classification() {
        assert_eq!(BranchPoint::classify(0.5).unwrap().branch, Branch::Left);
        assert_eq!(
            BranchPoint::classify(0.5000001).unwrap().branch,
            Branch::Right
        );
        assert_eq!(BranchPoint::classify(1.0).unwrap().branch, Branch::Right);
        assert_eq!(BranchPoint::classify(0.0).unwrap().branch, Branch::Left);
    }

    #[test]
    fn inverse_round_trip_uniform_sample() {
        for a in [0.1, 0.2, 0.3, 0.4] {
            let m = p(a);
            for i in 0..1000 {
                let y = (i as f64 + 0.5) / 1000.0;
                let x = m.left_inverse(y).unwrap();
                assert!(x <= 0.5);
                assert!((m.step(x) - y).abs() <= 10.0 * m.newton_tol());
            }
        }
    }

    #[test]
    fn finite_difference_agreement() {
        let grid: Vec<f64> = (0..=48)
            .map(|i| 0.01 + 0.01 * i as f64)
            .chain((0..=48).map(|i| 0.51 + 0.01 * i as f64))
            .collect();
        let h = 1e-6;
        for a in [0.1, 0.25, 0.4] {
            let m = p(a);
            for &x in &grid {
                let fd = (m.step(x + h) - m.step(x - h)) / (2.0 * h);
                assert!((fd - m.derivative(x).unwrap()).abs() < 1e-6, "x={x}");
                let fda = (p(a + h).step(x) - p(a - h).step(x)) / (2.0 * h);
                assert!((fda - m.alpha_partial(x).unwrap()).abs() < 1e-7, "x={x}");
            }
        }
    }

    #[test]
    fn doubling_anchor() {
        let m = p(0.0);
        for i in 0..=500 {
            let x = i as f64 / 1000.0;
            assert!((m.step(x) - (2.0 * x) % 1.0).abs() < 1e-15 || x == 0.5);
        }
    }

    #[test]
    fn monotone_on_each_branch() {
        let m = p(0.35);
        let left: Vec<f64> = (0..=500).map(|i| m.step(i as f64 / 1000.0)).collect();
        assert!(left.windows(2).all(|w| w[1] > w[0]));
        let right: Vec<f64> = (501..=1000).map(|i| m.step(i as f64 / 1000.0)).collect();
        assert!(right.windows(2).all(|w| w[1] > w[0]));
    }
}
