//! Fixed-step classical RK4 on the same system, used as an independent
//! cross-check of the adaptive integrator.

use super::{energy_i, series_start, ShootState};
use crate::error::Result;
use crate::nonlinearity::{phi, Nonlinearity};

/// What stopped a reference run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    End,
    /// `u` changed sign this many times.
    Zeros(usize),
    /// `I` fell below the floor.
    NegativeEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRun {
    pub end: ShootState,
    pub zeros: usize,
    pub stop: Stop,
}

/// RK4 with step `h` from the series start at `r_start` to `r_end`,
/// stopping early after `zero_limit` sign changes of `u` or once
/// `I < -energy_floor`.
pub fn rk4(
    nl: &Nonlinearity,
    alpha: f64,
    r_start: f64,
    r_end: f64,
    h: f64,
    zero_limit: Option<usize>,
    energy_floor: Option<f64>,
) -> Result<ReferenceRun> {
    let s0 = series_start(nl, alpha, r_start, None)?.state;
    let (mp, n1) = (nl.m_prime(), nl.n - 1.0);
    let f = |r: f64, u: f64, v: f64| (phi(v, mp), -n1 / r * v - nl.f(u));
    let (mut r, mut u, mut v) = (s0.r, s0.u, s0.v);
    let mut zeros = 0;
    let steps = ((r_end - r) / h).ceil() as usize;
    for i in 0..steps {
        let step = if i + 1 == steps { r_end - r } else { h };
        let (a1, b1) = f(r, u, v);
        let (a2, b2) = f(r + 0.5 * step, u + 0.5 * step * a1, v + 0.5 * step * b1);
        let (a3, b3) = f(r + 0.5 * step, u + 0.5 * step * a2, v + 0.5 * step * b2);
        let (a4, b4) = f(r + step, u + step * a3, v + step * b3);
        let un = u + step / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += step / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        r = s0.r + (i + 1) as f64 * h;
        if i + 1 == steps {
            r = r_end;
        }
        if un != 0.0 && u != 0.0 && un.signum() != u.signum() {
            zeros += 1;
        }
        u = un;
        let state = ShootState::new(r, u, v);
        if zero_limit.is_some_and(|z| zeros >= z) {
            return Ok(ReferenceRun { end: state, zeros, stop: Stop::Zeros(zeros) });
        }
        if energy_floor.is_some_and(|fl| energy_i(nl, &state) < -fl) {
            return Ok(ReferenceRun { end: state, zeros, stop: Stop::NegativeEnergy });
        }
    }
    Ok(ReferenceRun { end: ShootState::new(r, u, v), zeros, stop: Stop::End })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_order_convergence() {
        let nl = Nonlinearity::double_power(4.0, 2.0, 2.0, 3.0).unwrap();
        let fine = rk4(&nl, 2.0, 1e-4, 2.0, 1e-4, None, None).unwrap().end.u;
        let e1 = (rk4(&nl, 2.0, 1e-4, 2.0, 4e-3, None, None).unwrap().end.u - fine).abs();
        let e2 = (rk4(&nl, 2.0, 1e-4, 2.0, 2e-3, None, None).unwrap().end.u - fine).abs();
        assert!(e1 / e2 > 10.0, "{e1} {e2}");
    }
}
