//! Coupling nonlinearities `F(x, s, t)` together with their partials.
//!
//! Partials are always supplied, never differentiated symbolically; the
//! functional's finite-difference check is what catches an inconsistent pair.

use std::fmt;
use std::sync::Arc;

use crate::expr::{Expr, ParseError};

/// `F`, `F_s`, `F_t` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Values {
    pub f: f64,
    pub fs: f64,
    pub ft: f64,
}

impl Values {
    pub const ZERO: Values = Values { f: 0.0, fs: 0.0, ft: 0.0 };

    pub fn is_finite(&self) -> bool {
        self.f.is_finite() && self.fs.is_finite() && self.ft.is_finite()
    }
}

pub type CustomFn = dyn Fn(usize, f64, f64) -> Values + Send + Sync;

/// Three parsed expressions for `F`, `F_s`, `F_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprTriple {
    pub f: Expr,
    pub fs: Expr,
    pub ft: Expr,
}

impl ExprTriple {
    pub fn parse(f: &str, fs: &str, ft: &str) -> Result<Self, ExprTripleError> {
        let wrap = |which: &'static str| move |source| ExprTripleError { which, source };
        Ok(Self {
            f: Expr::parse(f).map_err(wrap("F"))?,
            fs: Expr::parse(fs).map_err(wrap("Fs"))?,
            ft: Expr::parse(ft).map_err(wrap("Ft"))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("expression {which}: {source}")]
pub struct ExprTripleError {
    pub which: &'static str,
    #[source]
    pub source: ParseError,
}

#[derive(Clone)]
pub enum Nonlinearity {
    Zero,
    /// `(3/5)(s^{5/3} + t^{5/3})` with odd roots on `support`, zero elsewhere.
    FractionalPower { support: Vec<bool> },
    /// `M ln(1 + Q) Q` with `Q = s^4 + t^4`, at every vertex.
    LogQuartic { m: f64 },
    /// `M ln(1 + s^2) |s|^3`, independent of `t`.
    LogCubic { m: f64 },
    /// Parsed expressions, zero off `support` when one is given.
    Expression { exprs: Box<ExprTriple>, support: Option<Vec<bool>> },
    Custom { label: String, func: Arc<CustomFn> },
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// `sign(s) |s|^γ`.
pub fn odd_power(s: f64, gamma: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s.signum() * s.abs().powf(gamma)
    }
}

impl Nonlinearity {
    pub fn label(&self) -> String {
        match self {
            Nonlinearity::Zero => "zero".into(),
            Nonlinearity::FractionalPower { .. } => "fractional".into(),
            Nonlinearity::LogQuartic { m } => format!("log-quartic(M={m})"),
            Nonlinearity::LogCubic { m } => format!("log-cubic(M={m})"),
            Nonlinearity::Expression { exprs, .. } => format!("expr({})", exprs.f),
            Nonlinearity::Custom { label, .. } => label.clone(),
        }
    }

    pub fn custom(label: impl Into<String>, func: impl Fn(usize, f64, f64) -> Values + Send + Sync + 'static) -> Self {
        Nonlinearity::Custom { label: label.into(), func: Arc::new(func) }
    }

    /// `F + c_s s + c_t t`, with partials shifted consistently.
    pub fn plus_linear(self, c_s: f64, c_t: f64) -> Self {
        let label = format!("{}+{c_s}s+{c_t}t", self.label());
        Nonlinearity::custom(label, move |x, s, t| {
            let base = self.eval(x, s, t);
            Values { f: base.f + c_s * s + c_t * t, fs: base.fs + c_s, ft: base.ft + c_t }
        })
    }

    /// `F + c`, breaking `F(x,0,0) = 0` when `c != 0`.
    pub fn plus_constant(self, c: f64) -> Self {
        let label = format!("{}+{c}", self.label());
        Nonlinearity::custom(label, move |x, s, t| {
            let base = self.eval(x, s, t);
            Values { f: base.f + c, ..base }
        })
    }

    pub fn eval(&self, x: usize, s: f64, t: f64) -> Values {
        match self {
            Nonlinearity::Zero => Values::ZERO,
            Nonlinearity::FractionalPower { support } => {
                if !support.get(x).copied().unwrap_or(false) {
                    return Values::ZERO;
                }
                Values {
                    f: 0.6 * (odd_power(s, 5.0 / 3.0) + odd_power(t, 5.0 / 3.0)),
                    fs: s.abs().powf(2.0 / 3.0),
                    ft: t.abs().powf(2.0 / 3.0),
                }
            }
            Nonlinearity::LogQuartic { m } => {
                let (s3, t3) = (s * s * s, t * t * t);
                let q = s3 * s + t3 * t;
                let log = q.ln_1p();
                let ratio = q / (1.0 + q);
                Values {
                    f: m * log * q,
                    fs: m * 4.0 * s3 * (ratio + log),
                    ft: m * 4.0 * t3 * (ratio + log),
                }
            }
            Nonlinearity::LogCubic { m } => {
                let s2 = s * s;
                let log = s2.ln_1p();
                let abs3 = s2 * s.abs();
                Values {
                    f: m * log * abs3,
                    fs: m * (2.0 * s / (1.0 + s2) * abs3 + 3.0 * log * s * s.abs()),
                    ft: 0.0,
                }
            }
            Nonlinearity::Expression { exprs, support } => {
                if let Some(mask) = support {
                    if !mask.get(x).copied().unwrap_or(false) {
                        return Values::ZERO;
                    }
                }
                Values { f: exprs.f.eval(s, t), fs: exprs.fs.eval(s, t), ft: exprs.ft.eval(s, t) }
            }
            Nonlinearity::Custom { func, .. } => func(x, s, t),
        }
    }

    /// First vertex where `F(x,0,0)` is not exactly zero.
    pub fn first_nonzero_at_origin(&self, n: usize) -> Option<(usize, f64)> {
        (0..n).map(|x| (x, self.eval(x, 0.0, 0.0).f)).find(|&(_, f)| f != 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn central(f: impl Fn(f64) -> f64, at: f64) -> f64 {
        let h = 1e-6;
        (f(at + h) - f(at - h)) / (2.0 * h)
    }

    #[test]
    fn fractional_power_partials() {
        let nl = Nonlinearity::FractionalPower { support: vec![true, false] };
        let v = nl.eval(0, 8.0, 0.0);
        assert_abs_diff_eq!(v.fs, 4.0, epsilon = 1e-12);
        assert_eq!(nl.eval(1, 3.0, -2.0), Values::ZERO);
        assert_eq!(nl.eval(0, 0.0, 0.0).f, 0.0);
        let fd = central(|s| nl.eval(0, s, 0.7).f, -1.3);
        assert_abs_diff_eq!(nl.eval(0, -1.3, 0.7).fs, fd, epsilon = 1e-8);
    }

    #[test]
    fn log_quartic_partials_and_superlinearity_identity() {
        let m = 4.75;
        let nl = Nonlinearity::LogQuartic { m };
        for &(s, t) in &[(0.3, -0.8), (-1.2, 0.4), (2.0, 2.0)] {
            let v = nl.eval(0, s, t);
            assert_abs_diff_eq!(v.fs, central(|a| nl.eval(0, a, t).f, s), epsilon = 1e-6 * (1.0 + v.fs.abs()));
            assert_abs_diff_eq!(v.ft, central(|b| nl.eval(0, s, b).f, t), epsilon = 1e-6 * (1.0 + v.ft.abs()));
            let q: f64 = s.powi(4) + t.powi(4);
            let lhs = 4.0 * v.f - v.fs * s - v.ft * t;
            assert_abs_diff_eq!(lhs, -4.0 * m * q * q / (1.0 + q), epsilon = 1e-10 * (1.0 + lhs.abs()));
            assert!(lhs <= 0.0);
        }
    }

    #[test]
    fn log_cubic_partial() {
        let nl = Nonlinearity::LogCubic { m: 2.0 };
        for s in [-1.7, -0.2, 0.0, 0.9] {
            assert_abs_diff_eq!(nl.eval(0, s, 5.0).fs, central(|a| nl.eval(0, a, 5.0).f, s), epsilon = 1e-6);
            assert_eq!(nl.eval(0, s, 5.0).ft, 0.0);
        }
    }

    #[test]
    fn expression_with_support() {
        let exprs = ExprTriple::parse("s^2*t", "2*s*t", "s^2").unwrap();
        let nl = Nonlinearity::Expression { exprs: Box::new(exprs), support: Some(vec![false, true]) };
        assert_eq!(nl.eval(0, 1.0, 1.0), Values::ZERO);
        assert_eq!(nl.eval(1, 2.0, 3.0), Values { f: 12.0, fs: 12.0, ft: 4.0 });
    }

    #[test]
    fn shifted_variants() {
        let nl = Nonlinearity::Zero.plus_linear(1.0, 0.0);
        assert_eq!(nl.eval(0, 2.0, 0.0), Values { f: 2.0, fs: 1.0, ft: 0.0 });
        assert_eq!(nl.first_nonzero_at_origin(3), None);
        let broken = Nonlinearity::Zero.plus_constant(1.0);
        assert_eq!(broken.first_nonzero_at_origin(3), Some((0, 1.0)));
    }
}
