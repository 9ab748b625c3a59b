use serde::{Deserialize, Serialize};

use super::{ShootState, Trajectory};
use crate::nonlinearity::Nonlinearity;
use crate::quadrature;

/// `I = |u'|^m / m' + F(u)`, using `|u'|^m = |v|^{m'}`.
pub fn energy_i(nl: &Nonlinearity, s: &ShootState) -> f64 {
    let mp = nl.m_prime();
    s.v.abs().powf(mp) / mp + nl.primitive(s.u)
}

/// `E = m r^N I + (N - m) r^{N-1} v u`.
pub fn pohozaev_e(nl: &Nonlinearity, s: &ShootState) -> f64 {
    let (m, n) = (nl.m, nl.n);
    let rn1 = s.r.powf(n - 1.0);
    m * rn1 * s.r * energy_i(nl, s) + (n - m) * rn1 * s.v * s.u
}

/// Worst-case residuals of the energy and Pohozaev identities along a
/// trajectory, each scaled by `1 + |value|`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IdentityCheck {
    /// Largest increase of `I` between consecutive samples.
    pub energy_increase: f64,
    pub energy_increase_at: f64,
    /// Largest mismatch between `ΔI` and `∫ -((N-1)/t)|u'|^m` per sample interval.
    pub energy_balance: f64,
    pub energy_balance_at: f64,
    /// Largest mismatch between `E(r)` and `∫_0^r t^{N-1} Q(u)`.
    pub pohozaev: f64,
    pub pohozaev_at: f64,
}

/// Integrates `g(state)` over `[a, b]` along the trajectory.
fn along<G: Fn(&ShootState) -> f64>(tr: &Trajectory, a: f64, b: f64, g: G) -> f64 {
    let eval = |t: f64| g(&tr.state_at(t).expect("inside trajectory"));
    quadrature::integrate(eval, a, b, 1e-15).value
}

pub fn check_identities(nl: &Nonlinearity, tr: &Trajectory) -> IdentityCheck {
    let mut out = IdentityCheck::default();
    let s = &tr.samples;
    if s.is_empty() {
        return out;
    }
    let (n, mp) = (nl.n, nl.m_prime());
    let energies: Vec<f64> = s.iter().map(|x| energy_i(nl, x)).collect();
    let r0 = s[0].r;
    let mut j = r0.powf(n) * nl.q(tr.alpha) / n;
    let e0 = pohozaev_e(nl, &s[0]);
    out.pohozaev = (e0 - j).abs() / (1.0 + e0.abs());
    out.pohozaev_at = r0;
    for i in 0..s.len() - 1 {
        let (a, b) = (s[i].r, s[i + 1].r);
        let (ia, ib) = (energies[i], energies[i + 1]);
        let scale = 1.0 + ia.abs();

        let inc = (ib - ia) / scale;
        if inc > out.energy_increase {
            out.energy_increase = inc;
            out.energy_increase_at = b;
        }

        let dissipation = along(tr, a, b, |x| -(n - 1.0) / x.r * x.v.abs().powf(mp));
        let bal = ((ib - ia) - dissipation).abs() / scale;
        if bal > out.energy_balance {
            out.energy_balance = bal;
            out.energy_balance_at = b;
        }

        j += along(tr, a, b, |x| x.r.powf(n - 1.0) * nl.q(x.u));
        let e = pohozaev_e(nl, &s[i + 1]);
        let res = (e - j).abs() / (1.0 + e.abs());
        if res > out.pohozaev {
            out.pohozaev = res;
            out.pohozaev_at = b;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_hand_values() {
        let nl = Nonlinearity::double_power(4.0, 2.0, 2.0, 3.0).unwrap();
        assert_eq!(energy_i(&nl, &ShootState::new(1.0, 0.0, 1.0)), 0.5);
        let b = 2f64.sqrt();
        assert!(energy_i(&nl, &ShootState::new(3.0, b, 0.0)).abs() < 1e-15);
    }

    #[test]
    fn pohozaev_vanishes_at_origin() {
        let nl = Nonlinearity::g2(2.0, 3.0).unwrap();
        assert_eq!(pohozaev_e(&nl, &ShootState::new(0.0, 3.0, 0.0)), 0.0);
    }

    #[test]
    fn pohozaev_degenerate_operator() {
        let nl = Nonlinearity::double_power(4.0, 2.0, 3.0, 3.0).unwrap();
        let s = ShootState::new(1.3, 0.7, -0.4);
        let e = pohozaev_e(&nl, &s);
        assert!((e - 3.0 * 1.3f64.powi(3) * energy_i(&nl, &s)).abs() < 1e-14);
    }
}
