//! Nonlinearities `f`, their primitives `F`, the Pohozaev integrand `Q`, and
//! the landmark/hypothesis machinery built on top of them.

mod catalog;
mod hypotheses;
mod landmarks;
mod piecewise;

pub use catalog::{CatalogSpec, BOUNDED_TAIL};
pub use hypotheses::{
    breakpoint_jump, check_hypotheses, f3_product, f4_ratio, sc_ratio, CheckerConfig, HypothesisReport, Relation, SampleRange, SideLimit, Verdict,
    Witness,
};
pub use landmarks::{find_landmarks, Landmarks};
pub use piecewise::{Piece, Piecewise, Symmetry, Term};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default search box for landmark extraction.
pub const DEFAULT_SEARCH_BOX: (f64, f64) = (-100.0, 100.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Kind {
    DoublePower { p: f64, q: f64 },
    G1,
    G2,
    LogCritical { lambda: f64, s0: f64 },
    Piecewise,
}

/// A scalar nonlinearity together with the operator parameters `m` and `N`.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    pub name: String,
    pub kind: Kind,
    pub m: f64,
    pub n: f64,
    /// Interval on which `f` may be evaluated.
    pub domain: (f64, f64),
    pub search_box: (f64, f64),
    def: Piecewise,
}

/// `φ_p(x) = |x|^{p-2} x` with `φ_p(0) = 0`.
#[inline]
pub fn phi(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if p == 2.0 {
        x
    } else if p == 3.0 {
        x.abs() * x
    } else {
        x.abs().powf(p - 2.0) * x
    }
}

pub fn check_operator(m: f64, n: f64) -> Result<()> {
    if !(m > 1.0) || !m.is_finite() {
        return Err(Error::Config(format!("m must satisfy m > 1, got {m}")));
    }
    if !(n >= m) || !n.is_finite() {
        return Err(Error::Config(format!("N must satisfy N >= m, got N = {n}, m = {m}")));
    }
    Ok(())
}

impl Nonlinearity {
    pub fn from_piecewise(name: &str, def: Piecewise, m: f64, n: f64) -> Result<Self> {
        check_operator(m, n)?;
        let domain = (def.lower_limit(), f64::INFINITY);
        Ok(Nonlinearity {
            name: name.to_string(),
            kind: Kind::Piecewise,
            m,
            n,
            domain,
            search_box: DEFAULT_SEARCH_BOX,
            def,
        })
    }

    pub(crate) fn with_kind(mut self, kind: Kind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < 0.0 && hi > 0.0) {
            return Err(Error::Config("domain must contain the origin".into()));
        }
        self.domain = (lo.max(self.def.lower_limit()), hi);
        Ok(self)
    }

    pub fn with_search_box(mut self, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < 0.0 && hi > 0.0) {
            return Err(Error::Config("search box must contain the origin".into()));
        }
        self.search_box = (lo, hi);
        Ok(self)
    }

    pub fn definition(&self) -> &Piecewise {
        &self.def
    }

    /// Conjugate exponent `m' = m/(m-1)`.
    pub fn m_prime(&self) -> f64 {
        self.m / (self.m - 1.0)
    }

    /// Critical exponent `Nm/(N-m)`, infinite when `N = m`.
    pub fn m_star(&self) -> f64 {
        if self.n == self.m {
            f64::INFINITY
        } else {
            self.n * self.m / (self.n - self.m)
        }
    }

    pub fn in_domain(&self, s: f64) -> bool {
        s >= self.domain.0 && s <= self.domain.1
    }

    fn domain_error(&self, s: f64) -> Error {
        Error::Domain {
            s,
            lo: self.domain.0,
            hi: self.domain.1,
        }
    }

    /// Unchecked `f(s)`; NaN outside the definition.
    #[inline]
    pub fn f(&self, s: f64) -> f64 {
        self.def.f(s).unwrap_or(f64::NAN)
    }

    pub fn eval_f(&self, s: f64) -> Result<f64> {
        if !self.in_domain(s) {
            return Err(self.domain_error(s));
        }
        self.def.f(s).ok_or_else(|| self.domain_error(s))
    }

    /// `F(s) = ∫_0^s f`. Quadrature-backed pieces report non-convergence.
    pub fn eval_primitive(&self, s: f64) -> Result<f64> {
        if !self.in_domain(s) {
            return Err(self.domain_error(s));
        }
        self.def.primitive(s).ok_or_else(|| self.domain_error(s))?
    }

    /// Best available `F(s)`; NaN outside the definition.
    pub fn primitive(&self, s: f64) -> f64 {
        self.def.primitive_estimate(s).unwrap_or(f64::NAN)
    }

    /// `Q(s) = mN F(s) - (N - m) s f(s)`.
    pub fn eval_q(&self, s: f64) -> Result<f64> {
        let big_f = self.eval_primitive(s)?;
        let f = self.eval_f(s)?;
        Ok(self.m * self.n * big_f - (self.n - self.m) * s * f)
    }

    pub fn q(&self, s: f64) -> f64 {
        self.m * self.n * self.primitive(s) - (self.n - self.m) * s * self.f(s)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.def.breakpoints()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_inverse_round_trip() {
        for &m in &[1.5, 2.0, 3.0, 4.5] {
            let mp = m / (m - 1.0);
            for &v in &[-3.0, -1e-7, 0.0, 2e-9, 0.5, 17.0] {
                let back = phi(phi(v, mp), m);
                assert!((back - v).abs() <= 1e-12 * v.abs(), "m={m} v={v} back={back}");
            }
        }
    }

    #[test]
    fn operator_constraints() {
        assert!(check_operator(1.0, 3.0).is_err());
        assert!(check_operator(3.0, 2.0).is_err());
        assert!(check_operator(3.0, 3.0).is_ok());
    }
}
