//! C² test functions `ψ: [0, 1] → ℝ` together with their centering constant.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::Error;

type Rule = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Constant(f64),
    /// `a0 + a1 x + a2 x² + …`
    Polynomial(Vec<f64>),
    /// `Σ_k a_k cos(2πkx) + b_k sin(2πkx)`, `k = 1, 2, …`
    Trigonometric {
        cos: Vec<f64>,
        sin: Vec<f64>,
    },
    Custom {
        value: Rule,
        d1: Rule,
        d2: Rule,
    },
}

/// An observable `ψ`, stored as `scale · base + offset`, and the constant
/// `center` subtracted to form `ψ̂ = ψ - center`.
#[derive(Clone)]
pub struct Observable {
    kind: Kind,
    scale: f64,
    offset: f64,
    center: f64,
    label: String,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("label", &self.label)
            .field("scale", &self.scale)
            .field("offset", &self.offset)
            .field("center", &self.center)
            .finish()
    }
}

impl Observable {
    fn from_kind(kind: Kind, label: impl Into<String>) -> Self {
        Self {
            kind,
            scale: 1.0,
            offset: 0.0,
            center: 0.0,
            label: label.into(),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_kind(Kind::Constant(c), format!("const:{c}"))
    }

    /// `ψ(x) = x`
    pub fn identity() -> Self {
        Self::from_kind(Kind::Polynomial(vec![0.0, 1.0]), "x")
    }

    /// `ψ(x) = x²`
    pub fn square() -> Self {
        Self::from_kind(Kind::Polynomial(vec![0.0, 0.0, 1.0]), "x2")
    }

    /// `ψ(x) = cos(2πx)`
    pub fn cos_two_pi() -> Self {
        Self::from_kind(
            Kind::Trigonometric {
                cos: vec![1.0],
                sin: vec![],
            },
            "cos2pi",
        )
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let label = format!(
            "poly:{}",
            coeffs
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
        Self::from_kind(Kind::Polynomial(coeffs), label)
    }

    pub fn trigonometric(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        let join = |v: &[f64]| {
            v.iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let label = format!("trig:{};{}", join(&cos), join(&sin));
        Self::from_kind(Kind::Trigonometric { cos, sin }, label)
    }

    /// An observable given by explicit value and derivative rules.
    pub fn custom(
        label: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::from_kind(
            Kind::Custom {
                value: Arc::new(value),
                d1: Arc::new(d1),
                d2: Arc::new(d2),
            },
            label,
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn with_center(mut self, center: f64) -> Self {
        self.center = center;
        self
    }

    /// `ψ + c`. The center is reset.
    pub fn shifted(mut self, c: f64) -> Self {
        self.offset += c;
        self.center = 0.0;
        self.label = format!("({})+{c}", self.label);
        self
    }

    /// `c · ψ`. The center is reset.
    pub fn scaled(mut self, c: f64) -> Self {
        self.scale *= c;
        self.offset *= c;
        self.center = 0.0;
        self.label = format!("{c}*({})", self.label);
        self
    }

    /// True when `ψ` is constant, so that every centered quantity vanishes.
    pub fn is_constant(&self) -> bool {
        let base_constant = match &self.kind {
            Kind::Constant(_) => true,
            Kind::Polynomial(c) => c.iter().skip(1).all(|&a| a == 0.0),
            Kind::Trigonometric { cos, sin } => cos.iter().chain(sin).all(|&a| a == 0.0),
            Kind::Custom { .. } => false,
        };
        base_constant || self.scale == 0.0
    }

    fn base(&self, x: f64, order: u8) -> f64 {
        match &self.kind {
            Kind::Constant(c) => {
                if order == 0 {
                    *c
                } else {
                    0.0
                }
            }
            Kind::Polynomial(coeffs) => poly_eval(coeffs, x, order),
            Kind::Trigonometric { cos, sin } => {
                let mut acc = 0.0;
                for (k, (&a, &b)) in pad(cos, sin).enumerate() {
                    let w = TAU * (k + 1) as f64;
                    let (s, c) = (w * x).sin_cos();
                    acc += match order {
                        0 => a * c + b * s,
                        1 => w * (-a * s + b * c),
                        _ => -w * w * (a * c + b * s),
                    };
                }
                acc
            }
            Kind::Custom { value, d1, d2 } => match order {
                0 => value(x),
                1 => d1(x),
                _ => d2(x),
            },
        }
    }

    /// `ψ(x)`
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.scale * self.base(x, 0) + self.offset
    }

    /// `ψ̂(x) = ψ(x) - center`
    #[inline]
    pub fn centered_value(&self, x: f64) -> f64 {
        self.value(x) - self.center
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.scale * self.base(x, 1)
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.scale * self.base(x, 2)
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, Error> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad coefficient {t:?}")))
        })
        .collect()
}

/// Parses the selectors `x`, `x2`, `cos2pi`, `const:c`, `poly:a0,a1,…` and
/// `trig:a1,a2,…;b1,b2,…` (cosine and sine coefficients of `2πkx`).
impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        match s {
            "x" => return Ok(Self::identity()),
            "x2" => return Ok(Self::square()),
            "cos2pi" => return Ok(Self::cos_two_pi()),
            _ => {}
        }
        let (head, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("unknown observable {s:?}")))?;
        match head {
            "const" => {
                let c = rest
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad constant {rest:?}")))?;
                Ok(Self::constant(c))
            }
            "poly" => {
                let c = parse_list(rest)?;
                if c.is_empty() {
                    return Err(Error::InvalidParameter("empty polynomial".into()));
                }
                Ok(Self::polynomial(c))
            }
            "trig" => {
                let (a, b) = rest.split_once(';').unwrap_or((rest, ""));
                Ok(Self::trigonometric(parse_list(a)?, parse_list(b)?))
            }
            _ => Err(Error::InvalidParameter(format!("unknown observable {s:?}"))),
        }
    }
}

fn pad<'a>(a: &'a [f64], b: &'a [f64]) -> impl Iterator<Item = (&'a f64, &'a f64)> {
    let n = a.len().max(b.len());
    (0..n).map(move |i| (a.get(i).unwrap_or(&0.0), b.get(i).unwrap_or(&0.0)))
}

fn poly_eval(coeffs: &[f64], x: f64, order: u8) -> f64 {
    let mut acc = 0.0;
    for (k, &a) in coeffs.iter().enumerate().rev() {
        let factor = match order {
            0 => 1.0,
            1 => k as f64,
            _ => (k * k.saturating_sub(1)) as f64,
        };
        let power = k.saturating_sub(order as usize);
        if factor != 0.0 {
            acc += a * factor * x.powi(power as i32);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_derivatives(psi: &Observable) {
        let h = 1e-5;
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let fd1 = (psi.value(x + h) - psi.value(x - h)) / (2.0 * h);
            let fd2 = (psi.d1(x + h) - psi.d1(x - h)) / (2.0 * h);
            assert!((fd1 - psi.d1(x)).abs() < 1e-6, "{} d1 at {x}", psi.label());
            assert!(
                (fd2 - psi.d2(x)).abs() < 1e-6 * (1.0 + psi.d2(x).abs()),
                "{} d2 at {x}",
                psi.label()
            );
        }
    }

    #[test]
    fn builtin_derivatives_match_finite_differences() {
        check_derivatives(&Observable::identity());
        check_derivatives(&Observable::square());
        check_derivatives(&Observable::cos_two_pi());
        check_derivatives(&Observable::polynomial(vec![0.3, -1.0, 2.0, 0.5]));
        check_derivatives(&Observable::trigonometric(vec![0.2, 0.1], vec![0.0, -0.4]));
        check_derivatives(&Observable::cos_two_pi().scaled(3.0).shifted(1.5));
    }

    #[test]
    fn selectors_round_trip() {
        for sel in [
            "x",
            "x2",
            "cos2pi",
            "const:1.5",
            "poly:0.5,-1,2",
            "trig:1,0.25;0,-0.5",
        ] {
            let psi: Observable = sel.parse().unwrap();
            assert_eq!(psi.label(), sel);
            let again: Observable = psi.label().parse().unwrap();
            assert_eq!(again.value(0.3), psi.value(0.3));
        }
        let t: Observable = "trig:0;1".parse().unwrap();
        assert!((t.value(0.25) - 1.0).abs() < 1e-15);
        for bad in ["", "y", "poly:", "poly:a", "const:", "trig:1;x"] {
            assert!(bad.parse::<Observable>().is_err(), "{bad}");
        }
    }

    #[test]
    fn centering_and_affine_changes() {
        let psi = Observable::identity().with_center(0.5);
        assert_eq!(psi.centered_value(0.8), 0.8 - 0.5);
        let shifted = Observable::identity().shifted(2.0);
        assert_eq!(shifted.value(0.25), 2.25);
        assert_eq!(shifted.center(), 0.0);
        let scaled = Observable::square().scaled(-2.0);
        assert_eq!(scaled.value(0.5), -0.5);
        assert!(Observable::constant(3.0).is_constant());
        assert!(Observable::polynomial(vec![1.0, 0.0]).is_constant());
        assert!(!Observable::cos_two_pi().is_constant());
    }
}
