//! Adaptive integration of the radial problem as the first-order system
//! `u' = φ_{m'}(v)`, `v' = -((N-1)/r) v - f(u)` with `v = φ_m(u')`.

mod dopri;
mod energy;
pub mod reference;
mod trajectory;

pub use energy::{check_identities, energy_i, pohozaev_e, IdentityCheck};
pub use trajectory::{Event, EventKind, ProfileCsv, Segment, Trajectory, CSV_VERSION};

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::{phi, Nonlinearity};
use dopri::{attempt, dense_eval, Controller, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootState {
    pub r: f64,
    pub u: f64,
    /// Flux `φ_m(u')`.
    pub v: f64,
}

impl ShootState {
    pub fn new(r: f64, u: f64, v: f64) -> Self {
        ShootState { r, u, v }
    }

    /// `u' = φ_{m'}(v)`.
    pub fn uprime(&self, m: f64) -> f64 {
        phi(self.v, m / (m - 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReachedRMax,
    DoubleZero,
    FlatAtFMax,
    ConvergedToEll,
    StepUnderflow,
    /// `max_steps` accepted steps without reaching `r_max`.
    StepLimit,
    /// Stopped once the requested number of zeros was seen.
    ZeroLimit,
    /// Stopped once the energy fell below the requested floor.
    NegativeEnergy,
}

impl Termination {
    pub const ALL: [Termination; 8] = [
        Termination::ReachedRMax,
        Termination::DoubleZero,
        Termination::FlatAtFMax,
        Termination::ConvergedToEll,
        Termination::StepUnderflow,
        Termination::StepLimit,
        Termination::ZeroLimit,
        Termination::NegativeEnergy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ReachedRMax => "reached_r_max",
            Termination::DoubleZero => "double_zero",
            Termination::FlatAtFMax => "flat_at_F_max",
            Termination::ConvergedToEll => "converged_to_ell",
            Termination::StepUnderflow => "step_underflow",
            Termination::StepLimit => "step_limit",
            Termination::ZeroLimit => "zero_limit",
            Termination::NegativeEnergy => "negative_energy",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Termination {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Termination::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown termination tag {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    /// Radius at which the series start hands over to the stepper.
    pub r_start: f64,
    pub r_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Residual bound for located zeros of `u` and `v`.
    pub event_tol: f64,
    pub tol_flat: f64,
    /// Accepted steps in the plateau window.
    pub plateau_steps: usize,
    /// Minimum radial extent of the plateau window.
    pub plateau_span: f64,
    pub max_steps: usize,
    /// `β⁺`: when set, the start radius is halved until the series correction
    /// stays below `1e-3 |α - β⁺|`.
    pub start_anchor: Option<f64>,
    /// Stop after this many zeros of `u`.
    pub zero_limit: Option<usize>,
    /// Stop once `I < -energy_floor`.
    pub energy_floor: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig::new(50.0)
    }
}

impl IntegratorConfig {
    pub fn new(r_max: f64) -> Self {
        IntegratorConfig {
            r_start: 1e-6 * r_max.max(1.0),
            r_max,
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            min_step: 1e-13,
            max_step: 0.01 * r_max.max(1.0),
            event_tol: 1e-10,
            tol_flat: 1e-9,
            plateau_steps: 50,
            plateau_span: 1.0,
            max_steps: 5_000_000,
            start_anchor: None,
            zero_limit: None,
            energy_floor: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("min_step", self.min_step),
            ("max_step", self.max_step),
            ("event_tol", self.event_tol),
            ("tol_flat", self.tol_flat),
            ("r_max", self.r_max),
        ];
        for (name, x) in positive {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::Config(format!("{name} must be positive and finite, got {x}")));
            }
        }
        if !(self.r_start > 0.0 && self.r_start <= 1e-3 * self.r_max) {
            return Err(Error::Config(format!(
                "r_start must lie in (0, 1e-3 r_max], got {} with r_max = {}",
                self.r_start, self.r_max
            )));
        }
        Ok(())
    }

    /// All tolerances divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        IntegratorConfig {
            rel_tol: self.rel_tol / factor,
            abs_tol: self.abs_tol / factor,
            event_tol: self.event_tol / factor,
            tol_flat: self.tol_flat / factor,
            min_step: self.min_step / factor,
            ..self.clone()
        }
    }
}

/// Right-hand side of the first-order system.
pub fn rhs(nl: &Nonlinearity, s: &ShootState) -> Result<(f64, f64)> {
    if !(s.r > 0.0) {
        return Err(Error::Singularity);
    }
    let du = phi(s.v, nl.m_prime());
    let dv = -(nl.n - 1.0) / s.r * s.v - nl.eval_f(s.u)?;
    Ok((du, dv))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesStart {
    pub state: ShootState,
    /// `α - u(r_start)`, kept separately to avoid cancellation.
    pub displacement: f64,
}

/// Leading-order expansion of the solution near the origin:
/// `u = α - (1/m') (f(α)/N)^{m'-1} r^{m'}`, `v = -f(α) r / N`.
pub fn series_start(nl: &Nonlinearity, alpha: f64, r_start: f64, anchor: Option<f64>) -> Result<SeriesStart> {
    let fa = nl.eval_f(alpha)?;
    if fa == 0.0 {
        return Err(Error::DegenerateStart { alpha });
    }
    if !(r_start > 0.0) {
        return Err(Error::Config(format!("r_start must be positive, got {r_start}")));
    }
    let mp = nl.m_prime();
    let coef = (fa.abs() / nl.n).powf(mp - 1.0) / mp;
    let mut r = r_start;
    if let Some(b) = anchor {
        let limit = 1e-3 * (alpha - b).abs();
        if limit > 0.0 {
            while coef * r.powf(mp) > limit && r > 1e-300 {
                r *= 0.5;
            }
        }
    }
    let displacement = fa.signum() * coef * r.powf(mp);
    Ok(SeriesStart {
        state: ShootState {
            r,
            u: alpha - displacement,
            v: -fa * r / nl.n,
        },
        displacement,
    })
}

#[inline]
fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Width of the step that crosses a flux zero when m != 2.
const TURN_GAP: f64 = 1e-9;
const TURN_FRACTION: f64 = 0.25;

const PROBES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Zeros of component `comp` (minus `offset`) of the dense polynomial on
/// `(0, 1]`, as `θ` values. `y0` and `y1` are the shifted end values.
fn locate(c: &[Vec2; 5], y0: Vec2, y1: Vec2, comp: usize, offset: f64) -> Vec<f64> {
    let val = |t: f64| {
        if t == 0.0 {
            y0[comp]
        } else if t == 1.0 {
            y1[comp]
        } else {
            dense_eval(c, t)[comp] - offset
        }
    };
    let mut out = Vec::new();
    for w in PROBES.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (sa, sb) = (sign(val(a)), sign(val(b)));
        if sb == 0 && sa != 0 {
            out.push(b);
            continue;
        }
        if sa == 0 || sa == sb {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let sm = sign(val(mid));
            if sm == 0 {
                a = mid;
                b = mid;
                break;
            }
            if sm == sa {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push(if val(a).abs() <= val(b).abs() { a } else { b });
    }
    out
}

/// Integrates from the series start to `r_max` or an earlier termination.
pub fn integrate(nl: &Nonlinearity, alpha: f64, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let start = series_start(nl, alpha, cfg.r_start, cfg.start_anchor)?;
    let mp = nl.m_prime();
    let n1 = nl.n - 1.0;
    let f = |r: f64, y: Vec2| -> Vec2 { [phi(y[1], mp), -n1 / r * y[1] - nl.f(y[0])] };

    let mut tr = Trajectory::empty(alpha, nl.m, nl.n, &nl.name);
    tr.displacement = start.displacement;
    tr.samples.push(start.state);

    let mut r = start.state.r;
    let mut y = [start.state.u, start.state.v];
    let mut k1 = f(r, y);
    let mut h = r.min(cfg.max_step);
    let mut ctrl = Controller::default();
    let mut plateau: VecDeque<f64> = VecDeque::new();
    let mut zeros = 0usize;
    let kinks: Vec<f64> = nl.breakpoints().into_iter().filter(|b| *b != 0.0).collect();

    let termination = loop {
        if r >= cfg.r_max {
            break Termination::ReachedRMax;
        }
        if tr.steps >= cfg.max_steps {
            break Termination::StepLimit;
        }
        h = h.min(cfg.max_step);
        let remaining = cfg.r_max - r;
        if h >= remaining || remaining - h < 1e-12 * cfg.r_max {
            h = remaining;
        }
        if h < cfg.min_step && h < remaining {
            break Termination::StepUnderflow;
        }
        if nl.m != 2.0 && sign(k1[1]) == -sign(y[1]) {
            let d = (y[1] / k1[1]).abs();
            if d > TURN_GAP * r.max(1.0) {
                h = h.min(TURN_FRACTION * d);
            }
        }
        let a = attempt(&f, r, y, k1, h, cfg.rel_tol, cfg.abs_tol);
        // Near a zero of the flux the right-hand side is only Hölder when
        // m != 2 and the embedded estimate is optimistic there; compare with
        // two half steps instead.
        let near_turn = nl.m != 2.0 && sign(y[1]) != sign(a.y1[1]);
        let err = if near_turn && a.err.is_finite() {
            let first = attempt(&f, r, y, k1, 0.5 * h, cfg.rel_tol, cfg.abs_tol);
            let second = attempt(&f, r + 0.5 * h, first.y1, first.k7, 0.5 * h, cfg.rel_tol, cfg.abs_tol);
            let doubling = (0..2)
                .map(|i| {
                    let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(a.y1[i].abs());
                    (second.y1[i] - a.y1[i]).abs() / sc
                })
                .fold(0.0, f64::max);
            a.err.max(doubling)
        } else {
            a.err
        };
        if !(err <= 1.0) || !a.y1[0].is_finite() || !a.y1[1].is_finite() {
            tr.rejected += 1;
            h = ctrl.reject(h, err);
            continue;
        }
        // Land exactly on crossings of breakpoints of f, where the solution
        // loses smoothness, so that no step straddles one.
        let kink = kinks
            .iter()
            .flat_map(|&b| locate(&a.dense, [y[0] - b, 0.0], [a.y1[0] - b, 0.0], 0, b))
            .filter(|t| *t > 1e-6 && *t < 1.0 - 1e-6 && t * h > 10.0 * cfg.min_step)
            .min_by(|p, q| p.partial_cmp(q).unwrap());
        if let Some(k) = kink {
            h *= k;
            continue;
        }
        // Approach a flux zero geometrically and cross it with a tiny step.
        if nl.m != 2.0 {
            let gap = TURN_GAP * r.max(1.0);
            if let Some(t) = locate(&a.dense, y, a.y1, 1, 0.0).into_iter().find(|t| *t < 1.0) {
                if t * h > gap {
                    h *= 0.5 * t;
                    continue;
                }
            }
        }
        let r1 = if h == remaining { cfg.r_max } else { r + h };
        tr.steps += 1;
        tr.segments.push(Segment { r0: r, h, c: a.dense });

        let mut found: Vec<(f64, EventKind)> = locate(&a.dense, y, a.y1, 0, 0.0)
            .into_iter()
            .map(|t| (t, EventKind::UZero))
            .chain(locate(&a.dense, y, a.y1, 1, 0.0).into_iter().map(|t| (t, EventKind::VZero)))
            .collect();
        found.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        let mut stop_at_zero = false;
        for (theta, kind) in found {
            let s = if theta == 1.0 { a.y1 } else { dense_eval(&a.dense, theta) };
            let re = if theta == 1.0 { r1 } else { r + theta * h };
            let state = ShootState::new(re, s[0], s[1]);
            tr.events.push(Event { kind, state });
            if re > tr.samples.last().unwrap().r && re < r1 {
                tr.samples.push(state);
            }
            if kind == EventKind::UZero {
                zeros += 1;
                if cfg.zero_limit.is_some_and(|z| zeros >= z) {
                    stop_at_zero = true;
                }
            }
        }
        tr.samples.push(ShootState::new(r1, a.y1[0], a.y1[1]));
        h = ctrl.accept(h, err);
        r = r1;
        y = a.y1;
        k1 = a.k7;

        if stop_at_zero {
            break Termination::ZeroLimit;
        }
        let up = phi(y[1], mp).abs();
        if let Some(floor) = cfg.energy_floor {
            if energy_i(nl, &ShootState::new(r, y[0], y[1])) < -floor {
                break Termination::NegativeEnergy;
            }
        }
        if y[0].abs() <= cfg.tol_flat && up <= cfg.tol_flat {
            break Termination::DoubleZero;
        }
        if up <= cfg.tol_flat && nl.f(y[0]).abs() <= cfg.tol_flat && y[0].abs() > cfg.tol_flat {
            let d = 1e-6 * (1.0 + y[0].abs());
            if nl.f(y[0] - d) >= 0.0 && nl.f(y[0] + d) <= 0.0 {
                break Termination::FlatAtFMax;
            }
            plateau.push_back(r);
            if plateau.len() > cfg.plateau_steps {
                plateau.pop_front();
            }
            if plateau.len() >= cfg.plateau_steps && r - plateau[0] >= cfg.plateau_span {
                break Termination::ConvergedToEll;
            }
        } else {
            plateau.clear();
        }
    };
    tr.termination = termination;
    Ok(tr)
}
