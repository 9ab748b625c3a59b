//! Adaptive Simpson quadrature.
//!
//! Used as the fallback primitive for nonlinearities whose antiderivative has
//! no closed form. Intervals spanning many orders of magnitude on one side of
//! the origin are split geometrically before refinement, so integrands that
//! grow like a power of `t` are resolved with a uniform relative accuracy.

use crate::error::{Error, Result};

/// Default absolute tolerance for primitives.
pub const ABS_TOL: f64 = 1e-12;
/// Relative floor applied when the integral itself is large.
pub const REL_TOL: f64 = 1e-14;
/// Maximum number of accepted subintervals before giving up.
pub const MAX_INTERVALS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of the local Richardson error estimates.
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

impl Quadrature {
    pub fn into_result(self, requested: f64) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::Quadrature {
                achieved: self.error,
                requested,
            })
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Adaptive bisected Simpson on a single interval with an explicit stack.
fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, budget: &mut usize) -> Quadrature {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    let mut stack = vec![Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        tol: abs_tol.max(REL_TOL * whole.abs()),
        depth: 0,
    }];
    let mut value = 0.0;
    let mut error = 0.0;
    let mut intervals = 0usize;
    let mut exhausted = false;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;
        let tol = p.tol.max(REL_TOL * (left + right).abs());
        let tiny = (p.b - p.a).abs() <= 4.0 * f64::EPSILON * m.abs().max(1e-300);
        if delta.abs() <= 15.0 * tol || p.depth >= 60 || tiny || *budget == 0 {
            if *budget == 0 {
                exhausted = true;
            }
            value += left + right + delta / 15.0;
            error += delta.abs() / 15.0;
            intervals += 1;
            *budget = budget.saturating_sub(1);
        } else {
            let half = 0.5 * p.tol;
            stack.push(Panel {
                a: m,
                b: p.b,
                fa: p.fm,
                fm: frm,
                fb: p.fb,
                whole: right,
                tol: half,
                depth: p.depth + 1,
            });
            stack.push(Panel {
                a: p.a,
                b: m,
                fa: p.fa,
                fm: flm,
                fb: p.fm,
                whole: left,
                tol: half,
                depth: p.depth + 1,
            });
        }
    }
    // Panels that hit the depth floor are accepted; only the aggregate error
    // estimate decides convergence.
    let converged = !exhausted && error <= abs_tol.max(REL_TOL * value.abs());
    Quadrature {
        value,
        error,
        intervals,
        converged,
    }
}

/// Integrates `f` over `[a, b]` (either orientation) to absolute tolerance
/// `abs_tol`, relaxed to a relative floor of `REL_TOL` for large integrals.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Quadrature {
    integrate_dyn(&f, a, b, abs_tol)
}

fn integrate_dyn(f: &dyn Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> Quadrature {
    if a == b {
        return Quadrature {
            value: 0.0,
            error: 0.0,
            intervals: 0,
            converged: true,
        };
    }
    if b < a {
        let q = integrate_dyn(f, b, a, abs_tol);
        return Quadrature { value: -q.value, ..q };
    }
    let segments = split(a, b);
    let per_segment = abs_tol / segments.len() as f64;
    let mut budget = MAX_INTERVALS;
    let mut total = Quadrature {
        value: 0.0,
        error: 0.0,
        intervals: 0,
        converged: true,
    };
    for w in segments.windows(2) {
        let q = adapt(&f, w[0], w[1], per_segment, &mut budget);
        total.value += q.value;
        total.error += q.error;
        total.intervals += q.intervals;
        total.converged &= q.converged;
    }
    total
}

/// Breakpoints for `[a, b]`: geometric doubling when the interval lies on one
/// side of zero and spans more than a factor of four, otherwise just the ends.
fn split(a: f64, b: f64) -> Vec<f64> {
    let mut pts = vec![a];
    if a > 0.0 && b / a > 4.0 {
        let mut x = 2.0 * a;
        while x < b {
            pts.push(x);
            x *= 2.0;
        }
    } else if b < 0.0 && a / b > 4.0 {
        let mirrored = split(-b, -a);
        return mirrored.iter().rev().map(|x| -x).collect();
    }
    pts.push(b);
    pts
}

/// Composite Simpson on tabulated, possibly non-uniform samples.
/// `xs` must be increasing and have an odd number of points grouped in pairs
/// of equal-width panels; otherwise the trapezoid rule closes the last panel.
pub fn simpson_samples(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mut acc = 0.0;
    let mut i = 0;
    while i + 2 < xs.len() {
        let h0 = xs[i + 1] - xs[i];
        let h1 = xs[i + 2] - xs[i + 1];
        // Simpson for unequal panels.
        let hs = h0 + h1;
        acc += hs / 6.0
            * (ys[i] * (2.0 - h1 / h0) + ys[i + 1] * hs * hs / (h0 * h1) + ys[i + 2] * (2.0 - h0 / h1));
        i += 2;
    }
    if i + 1 < xs.len() {
        acc += 0.5 * (xs[i + 1] - xs[i]) * (ys[i] + ys[i + 1]);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|t| t * t * t - 2.0 * t, 0.0, 3.0, ABS_TOL);
        assert!(q.converged);
        assert!((q.value - (81.0 / 4.0 - 9.0)).abs() < 1e-12);
    }

    #[test]
    fn reversed_orientation_flips_sign() {
        let q = integrate(|t| t.exp(), 1.0, 0.0, ABS_TOL);
        assert!((q.value + (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn sqrt_singularity_converges() {
        let q = integrate(|t: f64| t.sqrt(), 0.0, 2.0, ABS_TOL);
        assert!(q.converged);
        assert!((q.value - 2.0 / 3.0 * 2f64.powf(1.5)).abs() < 1e-10);
    }

    #[test]
    fn wide_range_power_keeps_relative_accuracy() {
        let q = integrate(|t: f64| t.powi(5), 1.0, 1e12, ABS_TOL);
        let exact = (1e72 - 1.0) / 6.0;
        assert!(((q.value - exact) / exact).abs() < 1e-12);
        let q = integrate(|t: f64| t.powi(4), -1e8, -1.0, ABS_TOL);
        let exact = (1e40 - 1.0) / 5.0;
        assert!(((q.value - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn samples_rule_handles_unequal_panels() {
        let xs = [0.0, 0.1, 0.35, 0.5, 1.0];
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!((simpson_samples(&xs, &ys) - 1.0 / 3.0).abs() < 1e-14);
    }
}
