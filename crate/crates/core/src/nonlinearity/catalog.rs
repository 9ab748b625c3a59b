//! Named nonlinearities: the double power, the log-critical growth example,
//! and the two piecewise examples with finite zeros of `f`.

use std::fmt;
use std::str::FromStr;

use super::{check_operator, Kind, Nonlinearity, Piece, Piecewise, Symmetry, Term};
use crate::error::{Error, Result};

/// Tail used for `g1`/`g2` on `[8, ∞)`: `h(x) = (8 - x)/(x - 7)`, continuous
/// with `h(8) = 0` and bounded by 1.
pub const BOUNDED_TAIL: &str = "(8 - x)/(x - 7)";

fn tail_terms() -> Vec<Term> {
    vec![Term::new(-1.0, 0.0), Term::odd(1.0, -1.0).shifted(7.0)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CatalogSpec {
    DoublePower { p: f64, q: f64 },
    G1,
    G2,
    LogCritical { lambda: f64 },
}

impl fmt::Display for CatalogSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogSpec::DoublePower { p, q } => write!(f, "double_power({p},{q})"),
            CatalogSpec::G1 => write!(f, "g1"),
            CatalogSpec::G2 => write!(f, "g2"),
            CatalogSpec::LogCritical { lambda } => write!(f, "log_critical({lambda})"),
        }
    }
}

impl FromStr for CatalogSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) => {
                let close = s
                    .rfind(')')
                    .ok_or_else(|| Error::Parse(format!("unbalanced parentheses in {s:?}")))?;
                let args = s[open + 1..close]
                    .split(',')
                    .map(|a| a.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{a:?}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                (s[..open].trim(), args)
            }
            None => (s, Vec::new()),
        };
        match (name, args.as_slice()) {
            ("double_power", [p, q]) => Ok(CatalogSpec::DoublePower { p: *p, q: *q }),
            ("g1", []) => Ok(CatalogSpec::G1),
            ("g2", []) => Ok(CatalogSpec::G2),
            ("log_critical", [lambda]) => Ok(CatalogSpec::LogCritical { lambda: *lambda }),
            _ => Err(Error::Parse(format!(
                "unknown nonlinearity {s:?}; expected double_power(p,q), g1, g2 or log_critical(lambda)"
            ))),
        }
    }
}

impl CatalogSpec {
    pub fn build(&self, m: f64, n: f64) -> Result<Nonlinearity> {
        check_operator(m, n)?;
        match *self {
            CatalogSpec::DoublePower { p, q } => Nonlinearity::double_power(p, q, m, n),
            CatalogSpec::G1 => Nonlinearity::g1(m, n),
            CatalogSpec::G2 => Nonlinearity::g2(m, n),
            CatalogSpec::LogCritical { lambda } => Nonlinearity::log_critical(lambda, m, n),
        }
    }
}

impl Nonlinearity {
    /// `f(s) = |s|^{p-2}s - |s|^{q-2}s` with `1 < q < p`.
    pub fn double_power(p: f64, q: f64, m: f64, n: f64) -> Result<Self> {
        if !(q > 1.0 && p > q) {
            return Err(Error::Config(format!("double_power needs 1 < q < p, got p={p}, q={q}")));
        }
        let def = Piecewise::new(
            vec![Piece::new(
                f64::NEG_INFINITY,
                vec![Term::odd(1.0, p - 1.0), Term::odd(-1.0, q - 1.0)],
            )],
            Symmetry::None,
        )?;
        Ok(Nonlinearity::from_piecewise(&format!("double_power({p},{q})"), def, m, n)?
            .with_kind(Kind::DoublePower { p, q }))
    }

    /// Odd extension of `x³ - √(2x)` on `[0,2]`, `8 - x` on `[2,8]`, bounded tail beyond.
    pub fn g1(m: f64, n: f64) -> Result<Self> {
        let def = Piecewise::new(
            vec![
                Piece::new(0.0, vec![Term::odd(1.0, 3.0), Term::new(-(2f64.sqrt()), 0.5)]),
                Piece::new(2.0, vec![Term::new(8.0, 0.0), Term::odd(-1.0, 1.0)]),
                Piece::new(8.0, tail_terms()),
            ],
            Symmetry::Odd,
        )?;
        Ok(Nonlinearity::from_piecewise("g1", def, m, n)?.with_kind(Kind::G1))
    }

    /// `6|x+1|^{-1/3}(x+1)^{-1}` below -2, `x³ - x` on `[-2,2]`, `8 - x` on `[2,8]`, bounded tail beyond.
    pub fn g2(m: f64, n: f64) -> Result<Self> {
        let def = Piecewise::new(
            vec![
                Piece::new(f64::NEG_INFINITY, vec![Term::odd(6.0, -4.0 / 3.0).shifted(-1.0)]),
                Piece::new(-2.0, vec![Term::odd(1.0, 3.0), Term::odd(-1.0, 1.0)]),
                Piece::new(2.0, vec![Term::new(8.0, 0.0), Term::odd(-1.0, 1.0)]),
                Piece::new(8.0, tail_terms()),
            ],
            Symmetry::None,
        )?;
        Ok(Nonlinearity::from_piecewise("g2", def, m, n)?.with_kind(Kind::G2))
    }

    /// Odd `f` equal to `|s|^{m*-2}s / (ln|s|)^λ` for `|s| >= s0`, glued
    /// continuously at `s0` to `A|s|^{m*-2}s - |s|^{m-2}s`, with
    /// `s0 > max(2e, 2β⁺)`. Requires `N > m`.
    pub fn log_critical(lambda: f64, m: f64, n: f64) -> Result<Self> {
        check_operator(m, n)?;
        if n == m {
            return Err(Error::Config("log_critical needs N > m (finite critical exponent)".into()));
        }
        if !(lambda > 0.0) {
            return Err(Error::Config(format!("log_critical needs lambda > 0, got {lambda}")));
        }
        let ms = n * m / (n - m);
        let coef = |s0: f64| s0.ln().powf(-lambda) + s0.powf(m - ms);
        let beta = |a: f64| (ms / (m * a)).powf(1.0 / (ms - m));
        let mut s0 = 2.0 * std::f64::consts::E * 1.1;
        for _ in 0..200 {
            let need = 2.0 * beta(coef(s0)) * 1.05;
            if s0 > need {
                break;
            }
            s0 = need;
        }
        let a = coef(s0);
        let def = Piecewise::new(
            vec![
                Piece::new(0.0, vec![Term::odd(a, ms - 1.0), Term::odd(-1.0, m - 1.0)]),
                Piece::new(s0, vec![Term::odd(1.0, ms - 1.0).with_log(-lambda)]),
            ],
            Symmetry::Odd,
        )?;
        Ok(Nonlinearity::from_piecewise(&format!("log_critical({lambda})"), def, m, n)?
            .with_kind(Kind::LogCritical { lambda, s0 }))
    }
}
