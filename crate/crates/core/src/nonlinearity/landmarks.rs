use serde::{Deserialize, Serialize};

use super::Nonlinearity;
use crate::error::{Error, Result};
use crate::roots::{bisect_predicate, scan_min};

const SCAN_POINTS: usize = 4000;

/// Landmark constants of a nonlinearity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landmarks {
    pub beta_minus: f64,
    pub beta_plus: f64,
    /// `-inf` when `f < 0` all the way to the search-box edge.
    #[serde(with = "crate::ext")]
    pub gamma_minus: f64,
    /// `+inf` when `f > 0` all the way to the search-box edge.
    #[serde(with = "crate::ext")]
    pub gamma_plus: f64,
    pub beta_bar: f64,
    /// `-min F` over `[β⁻, β⁺]`.
    pub f_bar: f64,
    pub f_bar_at: f64,
    #[serde(with = "crate::ext")]
    pub m_star: f64,
    /// Limit of `F` at `γ⁺`.
    #[serde(with = "crate::ext")]
    pub l_limit: f64,
    /// Limit of `F` at `γ⁻`.
    #[serde(with = "crate::ext")]
    pub l_limit_minus: f64,
    pub search_box: (f64, f64),
}

impl Landmarks {
    /// Overrides the default barrier level.
    pub fn with_beta_bar(mut self, beta_bar: f64) -> Result<Self> {
        if !(beta_bar > self.beta_plus) || beta_bar >= self.gamma_plus {
            return Err(Error::Config(format!(
                "beta_bar must lie in (beta+, gamma+) = ({}, {}), got {beta_bar}",
                self.beta_plus, self.gamma_plus
            )));
        }
        self.beta_bar = beta_bar;
        Ok(self)
    }

    /// `min(β⁺, |β⁻|)`: turning inside this radius certifies negative energy.
    pub fn barrier(&self) -> f64 {
        self.beta_plus.min(-self.beta_minus)
    }
}

/// Scan grid on `(0, edge]`, quadratically refined toward the origin.
fn scan_grid(edge: f64) -> impl Iterator<Item = f64> {
    (1..=SCAN_POINTS).map(move |i| {
        let t = i as f64 / SCAN_POINTS as f64;
        edge * t * t
    })
}

/// First zero of `F` on the side `dir` (±1).
fn beta(nl: &Nonlinearity, dir: f64, edge: f64) -> Result<f64> {
    let big_f = |s: f64| nl.primitive(dir * s);
    let mut prev = 0.0;
    for s in scan_grid(edge) {
        let v = big_f(s);
        if v >= 0.0 {
            if prev == 0.0 {
                break;
            }
            let (lo, hi) = bisect_predicate(|x| big_f(x) < 0.0, prev, s, 1e-16);
            let root = if big_f(lo).abs() < big_f(hi).abs() { lo } else { hi };
            return Ok(dir * root);
        }
        prev = s;
    }
    Err(Error::Hypothesis {
        condition: "(f2)(i)".into(),
        detail: format!(
            "F has no sign change from negative to non-negative on the {} side of 0 within the search box",
            if dir > 0.0 { "positive" } else { "negative" }
        ),
    })
}

/// First zero of `f` beyond `β` on side `dir`, or an infinite flag.
fn gamma(nl: &Nonlinearity, dir: f64, beta: f64, edge: f64) -> f64 {
    let b = beta.abs();
    let signed = |s: f64| dir * nl.f(dir * s);
    let width = edge - b;
    if width <= 0.0 {
        return dir * f64::INFINITY;
    }
    let mut prev = b;
    for i in 1..=SCAN_POINTS {
        let s = b + width * i as f64 / SCAN_POINTS as f64;
        if !(signed(s) > 0.0) {
            let lo_start = if signed(prev) > 0.0 { prev } else { b + (s - b) * 1e-9 };
            let (_, hi) = bisect_predicate(|x| signed(x) > 0.0, lo_start, s, 1e-16);
            return dir * hi;
        }
        prev = s;
    }
    dir * f64::INFINITY
}

/// Limit of `F` toward `gamma` (finite or infinite).
pub(crate) fn side_limit(nl: &Nonlinearity, gamma: f64, edge: f64) -> f64 {
    if gamma.is_finite() {
        return nl.primitive(gamma);
    }
    let dir = gamma.signum();
    let mut s = edge.abs().max(1.0);
    let mut history: Vec<f64> = Vec::new();
    while s < 1e50 {
        let v = nl.primitive(dir * s);
        if !v.is_finite() {
            break;
        }
        history.push(v);
        s *= 4.0;
    }
    let n = history.len();
    if n >= 4 {
        let settled = history[n - 4..]
            .windows(2)
            .all(|w| (w[1] - w[0]).abs() <= 1e-6 * (1.0 + w[1].abs()));
        if settled {
            return history[n - 1];
        }
    }
    f64::INFINITY
}

fn beta_bar_default(nl: &Nonlinearity, beta_plus: f64, beta_minus: f64, gp: f64, gm: f64, bx: (f64, f64)) -> f64 {
    if gp.is_finite() {
        return 0.5 * (beta_plus + gp);
    }
    // smallest grid point past β with Q >= 0 on every later sample
    let threshold = |dir: f64, beta: f64, edge: f64| -> f64 {
        let n = 2000;
        let pts: Vec<f64> = (0..=n).map(|i| beta + (edge - beta) * i as f64 / n as f64).collect();
        let mut idx = n;
        for i in (0..=n).rev() {
            if nl.q(dir * pts[i]) >= 0.0 {
                idx = i;
            } else {
                break;
            }
        }
        let idx = idx.max(1);
        pts[idx.min(n)]
    };
    let mut bb = threshold(1.0, beta_plus, bx.1);
    if gm == f64::NEG_INFINITY {
        bb = bb.max(threshold(-1.0, -beta_minus, -bx.0));
    }
    bb
}

/// Extracts `β±`, `γ±`, `F̄`, `β̄` and the limits of `F` inside `search_box`.
pub fn find_landmarks(nl: &Nonlinearity, search_box: (f64, f64)) -> Result<Landmarks> {
    let (lo, hi) = search_box;
    if !(lo < 0.0 && hi > 0.0) {
        return Err(Error::Config("search box must contain 0".into()));
    }
    let hi = hi.min(nl.domain.1);
    let lo = lo.max(nl.domain.0);
    let beta_plus = beta(nl, 1.0, hi)?;
    let beta_minus = beta(nl, -1.0, -lo)?;
    let gamma_plus = gamma(nl, 1.0, beta_plus, hi);
    let gamma_minus = gamma(nl, -1.0, beta_minus, -lo);
    let neg = scan_min(|s| nl.primitive(s), beta_minus, 0.0, 400);
    let pos = scan_min(|s| nl.primitive(s), 0.0, beta_plus, 400);
    let (f_bar_at, f_min) = if neg.1 < pos.1 { neg } else { pos };
    let beta_bar = beta_bar_default(nl, beta_plus, beta_minus, gamma_plus, gamma_minus, (lo, hi));
    Ok(Landmarks {
        beta_minus,
        beta_plus,
        gamma_minus,
        gamma_plus,
        beta_bar,
        f_bar: -f_min,
        f_bar_at,
        m_star: nl.m_star(),
        l_limit: side_limit(nl, gamma_plus, hi),
        l_limit_minus: side_limit(nl, gamma_minus, lo),
        search_box: (lo, hi),
    })
}
