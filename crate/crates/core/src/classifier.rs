//! Event bookkeeping and the N/P/G classification of a shooting parameter.
//!
//! Labels count zeros from 1: `N(k)` means the k-th zero of `u` is simple,
//! `P(k)` means the solution is trapped at negative energy after `k - 1`
//! zeros, `G_candidate(k)` means the k-th zero looks double. A bound state
//! with `k` sign changes therefore sits on the `G_candidate(k + 1)` boundary.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{energy_i, EventKind, ShootState, Termination, Trajectory};
use crate::nonlinearity::{Landmarks, Nonlinearity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroEvent {
    /// 1-based.
    pub k: usize,
    pub r: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningEvent {
    /// Number of zeros before this turning, so `T_k` follows `Z_k`.
    pub k: usize,
    pub r: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventEnergy {
    pub r: f64,
    pub kind: EventKind,
    pub energy: f64,
}

/// Zeros, turnings and energies of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTrace {
    pub alpha: f64,
    pub zeros: Vec<ZeroEvent>,
    /// The last flux zero in each sign lobe.
    pub turnings: Vec<TurningEvent>,
    /// Earlier flux zeros in a lobe that already has a later one.
    pub nuisance: Vec<TurningEvent>,
    pub terminal: Termination,
    pub energies: Vec<EventEnergy>,
    /// Smallest sampled energy and where it occurs.
    pub energy_min: f64,
    pub energy_min_at: f64,
    pub max_abs_uprime: f64,
    pub end: ShootState,
    pub end_uprime: f64,
}

impl EventTrace {
    pub fn zero_radii(&self) -> Vec<f64> {
        self.zeros.iter().map(|z| z.r).collect()
    }

    pub fn turning_radii(&self) -> Vec<f64> {
        self.turnings.iter().map(|t| t.r).collect()
    }
}

pub fn extract_events(nl: &Nonlinearity, tr: &Trajectory) -> Result<EventTrace> {
    let m = tr.m;
    let mut zeros = Vec::new();
    let mut lobes: Vec<Vec<TurningEvent>> = vec![Vec::new()];
    let mut energies = Vec::new();
    for e in &tr.events {
        let s = e.state;
        energies.push(EventEnergy { r: s.r, kind: e.kind, energy: energy_i(nl, &s) });
        match e.kind {
            EventKind::UZero => {
                let k = zeros.len() + 1;
                if k >= 2 && lobes[k - 1].is_empty() {
                    return Err(Error::Consistency(format!(
                        "zeros at r = {} and r = {} with no turning between (event_tol too loose?)",
                        zeros.last().map_or(0.0, |z: &ZeroEvent| z.r),
                        s.r
                    )));
                }
                zeros.push(ZeroEvent { k, r: s.r, slope: s.uprime(m) });
                lobes.push(Vec::new());
            }
            EventKind::VZero => {
                let k = zeros.len();
                lobes[k].push(TurningEvent { k, r: s.r, value: s.u });
            }
        }
    }
    let mut turnings = Vec::new();
    let mut nuisance = Vec::new();
    for mut lobe in lobes {
        if let Some(last) = lobe.pop() {
            turnings.push(last);
        }
        nuisance.extend(lobe);
    }

    let (mut energy_min, mut energy_min_at) = (f64::INFINITY, tr.r_start());
    for s in &tr.samples {
        let i = energy_i(nl, s);
        if i < energy_min {
            energy_min = i;
            energy_min_at = s.r;
        }
    }
    let end = tr.end();
    Ok(EventTrace {
        alpha: tr.alpha,
        zeros,
        turnings,
        nuisance,
        terminal: tr.termination,
        energies,
        energy_min,
        energy_min_at,
        max_abs_uprime: tr.max_abs_uprime(),
        end,
        end_uprime: end.uprime(m),
    })
}

/// Radii interleave `Z_1 < T_1 < Z_2 < …` and signs alternate.
pub fn check_trace(trace: &EventTrace) -> Result<()> {
    let mut seq: Vec<(f64, char, usize)> = trace
        .zeros
        .iter()
        .map(|z| (z.r, 'Z', z.k))
        .chain(trace.turnings.iter().filter(|t| t.k >= 1).map(|t| (t.r, 'T', t.k)))
        .collect();
    seq.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in seq.windows(2) {
        let ok = match (w[0].1, w[1].1) {
            ('Z', 'T') => w[1].2 == w[0].2,
            ('T', 'Z') => w[1].2 == w[0].2 + 1,
            _ => false,
        };
        if !ok || !(w[1].0 > w[0].0) {
            return Err(Error::Consistency(format!(
                "{}{} at r = {} followed by {}{} at r = {}",
                w[0].1, w[0].2, w[0].0, w[1].1, w[1].2, w[1].0
            )));
        }
    }
    for z in &trace.zeros {
        let expect = if z.k % 2 == 1 { -1.0 } else { 1.0 };
        if z.slope * expect < 0.0 {
            return Err(Error::Consistency(format!("slope {} at zero {} has the wrong sign", z.slope, z.k)));
        }
    }
    for t in &trace.turnings {
        let expect = if t.k % 2 == 0 { 1.0 } else { -1.0 };
        if t.value * expect < 0.0 {
            return Err(Error::Consistency(format!("turning value {} after zero {} has the wrong sign", t.value, t.k)));
        }
    }
    Ok(())
}

/// Thresholds separating simple zeros from near-double ones and negative
/// energy from round-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub slope: f64,
    pub class: f64,
}

impl Margins {
    pub fn new(trace: &EventTrace, lm: &Landmarks) -> Self {
        Margins {
            slope: 1e-6 * trace.max_abs_uprime,
            class: 1e-10 * (1.0 + lm.f_bar),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Class {
    N(usize),
    P(usize),
    GCandidate(usize),
    Undecided,
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Class::N(k) => write!(f, "N({k})"),
            Class::P(k) => write!(f, "P({k})"),
            Class::GCandidate(k) => write!(f, "G_candidate({k})"),
            Class::Undecided => f.write_str("undecided"),
        }
    }
}

impl FromStr for Class {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "undecided" {
            return Ok(Class::Undecided);
        }
        let bad = || Error::Parse(format!("bad class label {s:?}"));
        let (head, rest) = s.split_once('(').ok_or_else(bad)?;
        let k: usize = rest.strip_suffix(')').ok_or_else(bad)?.parse().map_err(|_| bad())?;
        match head {
            "N" => Ok(Class::N(k)),
            "P" => Ok(Class::P(k)),
            "G_candidate" => Ok(Class::GCandidate(k)),
            _ => Err(bad()),
        }
    }
}

impl From<Class> for String {
    fn from(c: Class) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for Class {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "evidence", rename_all = "snake_case")]
pub enum Evidence {
    INegativeAt { r: f64, energy: f64 },
    TurnedInsideBarrierAt { r: f64, u: f64 },
    DoubleZeroAt { r: f64 },
    RMaxReached { r: f64 },
    SimpleZero { k: usize, r: f64, slope: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassLabel {
    pub class: Class,
    /// Leading zeros whose slope clears the margin.
    pub zero_count: usize,
    pub evidence: Vec<Evidence>,
    pub margins: Margins,
}

impl ClassLabel {
    /// Zeros seen, counting a near-double final zero.
    pub fn zeros_at_least(&self) -> usize {
        match self.class {
            Class::GCandidate(k) => k,
            _ => self.zero_count,
        }
    }
}

pub fn classify(trace: &EventTrace, lm: &Landmarks, margins: Margins) -> ClassLabel {
    let clear: Vec<&ZeroEvent> = trace.zeros.iter().take_while(|z| z.slope.abs() > margins.slope).collect();
    let zero_count = clear.len();
    let zeros_before = |r: f64| trace.zeros.iter().filter(|z| z.r < r).count();
    let simple = |upto: usize| -> Vec<Evidence> {
        clear
            .iter()
            .take(upto)
            .map(|z| Evidence::SimpleZero { k: z.k, r: z.r, slope: z.slope })
            .collect()
    };

    // Negative energy: earliest certificate wins.
    let barrier = lm.barrier();
    let turned = trace
        .turnings
        .iter()
        .chain(&trace.nuisance)
        .filter(|t| t.value != 0.0 && t.value.abs() < barrier)
        .filter(|t| {
            trace
                .energies
                .iter()
                .find(|e| e.r == t.r && e.kind == EventKind::VZero)
                .is_some_and(|e| e.energy < -margins.class)
        })
        .min_by(|a, b| a.r.partial_cmp(&b.r).unwrap());
    let negative = (trace.energy_min < -margins.class).then_some((trace.energy_min_at, trace.energy_min));
    let p = match (turned, negative) {
        (Some(t), Some((r, _))) if t.r <= r => Some((t.r, Evidence::TurnedInsideBarrierAt { r: t.r, u: t.value })),
        (Some(t), None) => Some((t.r, Evidence::TurnedInsideBarrierAt { r: t.r, u: t.value })),
        (_, Some((r, energy))) => Some((r, Evidence::INegativeAt { r, energy })),
        (None, None) => None,
    };
    if let Some((r, ev)) = p {
        let before = zeros_before(r).min(zero_count);
        let mut evidence = simple(before);
        evidence.push(ev);
        return ClassLabel { class: Class::P(before + 1), zero_count: before, evidence, margins };
    }

    let mut evidence = simple(zero_count);
    if trace.terminal == Termination::DoubleZero && zero_count + 1 >= trace.zeros.len() {
        evidence.push(Evidence::DoubleZeroAt { r: trace.end.r });
        return ClassLabel { class: Class::GCandidate(zero_count + 1), zero_count, evidence, margins };
    }
    if zero_count >= 1 {
        return ClassLabel { class: Class::N(zero_count), zero_count, evidence, margins };
    }
    if trace.terminal == Termination::ReachedRMax {
        evidence.push(Evidence::RMaxReached { r: trace.end.r });
    }
    ClassLabel { class: Class::Undecided, zero_count, evidence, margins }
}

/// Extract, check and classify in one go.
pub fn classify_trajectory(nl: &Nonlinearity, lm: &Landmarks, tr: &Trajectory) -> Result<(EventTrace, ClassLabel)> {
    let trace = extract_events(nl, tr)?;
    check_trace(&trace)?;
    let margins = Margins::new(&trace, lm);
    let label = classify(&trace, lm, margins);
    Ok((trace, label))
}

/// Re-evaluates the evidence of a label on the trajectory it came from.
pub fn verify_label(nl: &Nonlinearity, lm: &Landmarks, tr: &Trajectory, label: &ClassLabel) -> Result<()> {
    let fail = |msg: String| Err(Error::Consistency(format!("{}: {msg}", label.class)));
    let at = |r: f64| tr.state_at(r).ok_or_else(|| Error::Consistency(format!("radius {r} outside trajectory")));
    let mut simple = 0;
    let mut certified = false;
    for ev in &label.evidence {
        match *ev {
            Evidence::SimpleZero { r, .. } => {
                let s = at(r)?;
                let slope = s.uprime(tr.m);
                if !(slope.abs() > label.margins.slope) {
                    return fail(format!("zero at r = {r} has slope {slope} below margin {}", label.margins.slope));
                }
                if s.u.abs() > 1e-6 * (1.0 + slope.abs()) {
                    return fail(format!("u({r}) = {} is not a zero", s.u));
                }
                simple += 1;
            }
            Evidence::INegativeAt { r, .. } => {
                let i = energy_i(nl, &at(r)?);
                if !(i < 0.0) {
                    return fail(format!("I({r}) = {i} is not negative"));
                }
                certified = true;
            }
            Evidence::TurnedInsideBarrierAt { r, .. } => {
                let s = at(r)?;
                let i = energy_i(nl, &s);
                if !(s.u.abs() < lm.barrier() && i < 0.0) {
                    return fail(format!("turning at r = {r} has u = {}, I = {i}", s.u));
                }
                certified = true;
            }
            Evidence::DoubleZeroAt { r } => {
                let s = at(r)?;
                if !(s.u.abs() <= 1e-6 && s.uprime(tr.m).abs() <= 1e-6) {
                    return fail(format!("no double zero at r = {r}"));
                }
            }
            Evidence::RMaxReached { .. } => {}
        }
    }
    match label.class {
        Class::N(k) if simple != k => fail(format!("{simple} certified zeros")),
        Class::P(k) if !certified || simple + 1 != k => fail(format!("certified = {certified}, {simple} zeros")),
        _ => Ok(()),
    }
}

/// Threshold radius beyond which crossing `β̄` forces one more zero.
pub fn diag_c_bar(nl: &Nonlinearity, lm: &Landmarks) -> Result<f64> {
    let b = lm.beta_bar;
    let (fp, fm) = (nl.eval_primitive(b)?, nl.eval_primitive(-b)?);
    if !(fp > 0.0 && fm > 0.0) {
        return Err(Error::NotApplicable(format!(
            "F(beta_bar) = {fp}, F(-beta_bar) = {fm}; both must be positive"
        )));
    }
    let mp = nl.m_prime();
    let side = |fb: f64| (lm.f_bar + fb).powf(1.0 / mp) / fb;
    Ok((nl.n - 1.0) * mp.powf(1.0 / mp) * b * side(fp).max(side(fm)))
}

/// `H = r^{m'(N-1)} I`.
pub fn diag_h(nl: &Nonlinearity, s: &ShootState) -> f64 {
    s.r.powf(nl.m_prime() * (nl.n - 1.0)) * energy_i(nl, s)
}
