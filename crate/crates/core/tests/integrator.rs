use nodal_core::integrator::reference::rk4;
use nodal_core::integrator::{
    check_identities, energy_i, integrate, rhs, series_start, EventKind, IntegratorConfig, ShootState, Termination,
    Trajectory,
};
use nodal_core::nonlinearity::{phi, DEFAULT_SEARCH_BOX};
use nodal_core::{find_landmarks, Nonlinearity};
use proptest::prelude::*;

fn g2() -> Nonlinearity {
    Nonlinearity::g2(2.0, 3.0).unwrap()
}

/// Largest `|s|` on the sublevel set `{F <= level}` connected to the origin,
/// scanned inside the search box.
fn sublevel_radius(nl: &Nonlinearity, level: f64) -> f64 {
    let (lo, hi) = DEFAULT_SEARCH_BOX;
    let steps = 200_000;
    let mut reach = 0.0f64;
    for (edge, sign) in [(hi, 1.0), (-lo, -1.0)] {
        for i in 1..=steps {
            let s = sign * edge * i as f64 / steps as f64;
            let big_f = nl.primitive(s);
            if !(big_f <= level) {
                break;
            }
            reach = reach.max(s.abs());
        }
    }
    reach
}

#[test]
fn rhs_hand_values() {
    let nl = Nonlinearity::double_power(4.0, 2.0, 2.0, 3.0).unwrap();
    assert_eq!(rhs(&nl, &ShootState::new(1.0, 2.0, 0.0)).unwrap(), (0.0, -6.0));
    assert_eq!(rhs(&nl, &ShootState::new(1.0, 0.0, 0.0)).unwrap(), (0.0, 0.0));
    let nl = Nonlinearity::double_power(4.0, 2.0, 3.0, 3.0).unwrap();
    assert_eq!(rhs(&nl, &ShootState::new(1.0, 0.0, 4.0)).unwrap(), (2.0, -8.0));
}

#[test]
fn degenerate_start_at_finite_gamma() {
    assert!(series_start(&g2(), 8.0, 1e-6, None).is_err());
}

#[test]
fn beta_plus_start_turns_without_crossing() {
    let nl = g2();
    let tr = integrate(&nl, 2f64.sqrt(), &IntegratorConfig::new(50.0)).unwrap();
    assert_eq!(tr.zeros().count(), 0);
    let turn = tr.events.iter().find(|e| e.kind == EventKind::VZero).expect("a turning point");
    assert!(turn.state.u > 0.0 && turn.state.u < 2f64.sqrt());
}

#[test]
fn near_gamma_has_several_zeros_like_the_oracle() {
    let nl = g2();
    let cfg = IntegratorConfig::new(100.0);
    let tr = integrate(&nl, 7.9, &cfg).unwrap();
    let adaptive = tr.zeros().count();
    let oracle = rk4(&nl, 7.9, cfg.r_start, tr.r_end(), 1e-5, None, None).unwrap();
    assert!(adaptive >= 2, "{adaptive} zeros");
    assert_eq!(adaptive, oracle.zeros);
}

#[test]
fn series_start_limit() {
    for m in [1.5, 2.0, 3.0] {
        let nl = Nonlinearity::double_power(4.0, 2.0, m, 3.0).unwrap();
        let mp = nl.m_prime();
        let alpha = 2.0;
        let coef = (nl.f(alpha) / nl.n).powf(mp - 1.0) / mp;
        let cfg = IntegratorConfig { r_start: 1e-7, ..IntegratorConfig::new(1.0) };
        let tr = integrate(&nl, alpha, &cfg).unwrap();
        let mut last = f64::INFINITY;
        for r in [1e-1, 3e-2, 1e-2] {
            let s = tr.state_at(r).unwrap();
            let err = ((alpha - s.u) / r.powf(mp) - coef).abs() / coef;
            assert!(err < last, "m={m} r={r}: {err} did not shrink from {last}");
            last = err;
        }
        assert!(last < 1e-2, "m={m}: {last}");
    }
}

#[test]
fn energy_starts_at_primitive_of_alpha() {
    let nl = g2();
    let alpha = 3.0;
    for r in [1e-3, 1e-5, 1e-7] {
        let s = series_start(&nl, alpha, r, None).unwrap().state;
        let gap = (energy_i(&nl, &s) - nl.primitive(alpha)).abs();
        assert!(gap < 50.0 * r, "r={r}: {gap}");
    }
}

#[test]
fn profile_csv_round_trip() {
    let nl = g2();
    let tr = integrate(&nl, 4.3, &IntegratorConfig::new(20.0)).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&nl, &mut buf).unwrap();
    let back = Trajectory::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.trajectory.samples, tr.samples);
    assert_eq!(back.trajectory.termination, tr.termination);
    assert_eq!(back.trajectory.alpha, tr.alpha);
    for (i, s) in back.trajectory.samples.iter().enumerate() {
        let (e, p) = (energy_i(&nl, s), nodal_core::integrator::pohozaev_e(&nl, s));
        assert!((e - back.energy[i]).abs() <= 1e-12 * e.abs().max(f64::MIN_POSITIVE));
        assert!((p - back.pohozaev[i]).abs() <= 1e-12 * p.abs().max(f64::MIN_POSITIVE));
    }
    assert_eq!(
        back.trajectory.zeros().count(),
        tr.zeros().count(),
        "sample interpolation should find the same zeros"
    );
}

#[test]
fn csv_rejects_wrong_version() {
    let text = "# nodal-profile v0\n# alpha=1 m=2 N=3 f=x termination=reached_r_max\nr,u,uprime,v,I,E\n";
    assert!(Trajectory::read_csv(text.as_bytes()).is_err());
}

#[test]
fn termination_tags_round_trip() {
    for t in Termination::ALL {
        assert_eq!(t.as_str().parse::<Termination>().unwrap(), t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flux_map_inverts(m in 1.1f64..6.0, v in -1e3f64..1e3) {
        let mp = m / (m - 1.0);
        let back = phi(phi(v, mp), m);
        prop_assert!((back - v).abs() <= 1e-12 * v.abs());
    }

    #[test]
    fn trajectory_invariants(alpha in 1.4143f64..7.99, m_idx in 0usize..3) {
        let m = [1.5, 2.0, 3.0][m_idx];
        let nl = Nonlinearity::g2(m, 3.0).unwrap();
        let lm = find_landmarks(&nl, DEFAULT_SEARCH_BOX).unwrap();
        prop_assume!(alpha > lm.beta_plus);
        let cfg = IntegratorConfig::new(20.0);
        let tr = integrate(&nl, alpha, &cfg).unwrap();

        prop_assert!(tr.samples.windows(2).all(|w| w[1].r > w[0].r));
        // initial decrease until the first event
        let first = tr.events.first().map_or(tr.r_end(), |e| e.state.r);
        for s in tr.samples.iter().skip(1).filter(|s| s.r < first) {
            prop_assert!(s.v < 0.0);
        }
        for e in &tr.events {
            let (x, label) = match e.kind {
                EventKind::UZero => (e.state.u, "u"),
                EventKind::VZero => (e.state.v, "v"),
            };
            prop_assert!(x.abs() <= cfg.event_tol, "{label}({}) = {x}", e.state.r);
            let comp = |s: &ShootState| if e.kind == EventKind::UZero { s.u } else { s.v };
            let before = tr.samples.iter().rev().find(|s| s.r < e.state.r && comp(s) != 0.0);
            let after = tr.samples.iter().find(|s| s.r > e.state.r && comp(s) != 0.0);
            if let (Some(b), Some(a)) = (before, after) {
                prop_assert!(comp(b).signum() != comp(a).signum(), "{label} keeps its sign at {}", e.state.r);
            }
        }
        let level = nl.primitive(alpha);
        let reach = sublevel_radius(&nl, level);
        for s in &tr.samples {
            prop_assert!(s.u.abs() <= reach + 1e-3, "|u({})| = {} beyond {reach}", s.r, s.u.abs());
        }
        let id = check_identities(&nl, &tr);
        prop_assert!(id.energy_increase <= 1e-8, "{id:?}");
        prop_assert!(id.pohozaev <= 1e-6, "{id:?}");
    }
}

#[test]
fn converged_to_ell_is_flat() {
    let nl = Nonlinearity::double_power(4.0, 2.0, 2.0, 3.0).unwrap();
    let lm = find_landmarks(&nl, DEFAULT_SEARCH_BOX).unwrap();
    let cfg = IntegratorConfig::new(400.0);
    for i in 1..40 {
        let alpha = lm.beta_plus + 0.05 * i as f64;
        let tr = integrate(&nl, alpha, &cfg).unwrap();
        if tr.termination == Termination::ConvergedToEll {
            let end = tr.end();
            assert!(end.uprime(nl.m).abs() <= cfg.tol_flat && nl.f(end.u).abs() <= cfg.tol_flat, "{end:?}");
        }
    }
}
