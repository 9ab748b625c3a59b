//! Sweep, bracket and bisect on the shooting parameter for bound states
//! with a prescribed number of sign changes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{classify_trajectory, Class, ClassLabel, Margins};
use crate::error::{Error, Result};
use crate::integrator::{check_identities, energy_i, integrate, IdentityCheck, IntegratorConfig, Trajectory};
use crate::nonlinearity::{Landmarks, Nonlinearity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub integrator: IntegratorConfig,
    pub grid: usize,
    /// Shooting range; defaults to `(β⁺, γ⁺)` or `(β⁺, 4β⁺]` when `γ⁺ = ∞`.
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    /// Upper limit for doubling the shooting box when `γ⁺ = ∞`.
    pub alpha_cap: f64,
    pub tol_alpha: f64,
    pub max_iter: usize,
    /// Re-runs of an undecided midpoint, each 10x tighter.
    pub escalations: usize,
    pub tail_tol: f64,
    pub tail_energy_tol: f64,
    pub residual_tol: f64,
    pub checkpoints: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            integrator: IntegratorConfig::new(50.0),
            grid: 200,
            alpha_min: None,
            alpha_max: None,
            alpha_cap: 1e4,
            tol_alpha: 1e-10,
            max_iter: 200,
            escalations: 3,
            tail_tol: 1e-4,
            tail_energy_tol: 1e-6,
            residual_tol: 1e-5,
            checkpoints: 100,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        self.integrator.validate()?;
        for (name, x) in [
            ("tol_alpha", self.tol_alpha),
            ("tail_tol", self.tail_tol),
            ("tail_energy_tol", self.tail_energy_tol),
            ("residual_tol", self.residual_tol),
        ] {
            if !(x > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {x}")));
            }
        }
        if let (Some(a), Some(b)) = (self.alpha_min, self.alpha_max) {
            if !(a <= b) {
                return Err(Error::Config(format!("empty shooting range [{a}, {b}]")));
            }
        }
        Ok(())
    }

    /// Shooting range before any box expansion.
    pub fn alpha_range(&self, lm: &Landmarks) -> (f64, f64) {
        let span = if lm.gamma_plus.is_finite() { lm.gamma_plus - lm.beta_plus } else { 3.0 * lm.beta_plus };
        let lo = self.alpha_min.unwrap_or(lm.beta_plus + 1e-6 * span);
        let hi = self.alpha_max.unwrap_or(lm.beta_plus + span * (1.0 - 1e-6));
        (lo, hi)
    }

    /// Integrator settings for classification runs.
    pub fn shooting(&self, lm: &Landmarks) -> IntegratorConfig {
        let mut cfg = self.integrator.clone();
        cfg.start_anchor.get_or_insert(lm.beta_plus);
        cfg.energy_floor.get_or_insert(1e-10 * (1.0 + lm.f_bar));
        cfg
    }
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn alpha_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub label: ClassLabel,
    pub zeros: Vec<f64>,
    pub turnings: Vec<f64>,
    pub energy_min: f64,
    pub termination: crate::integrator::Termination,
}

impl SweepPoint {
    /// Simple zeros; `None` when undecided.
    pub fn zero_count(&self) -> Option<usize> {
        (self.label.class != Class::Undecided).then_some(self.label.zero_count)
    }
}

fn shoot(nl: &Nonlinearity, lm: &Landmarks, cfg: &IntegratorConfig, alpha: f64) -> Result<(Trajectory, SweepPoint)> {
    let tr = integrate(nl, alpha, cfg)?;
    let (trace, label) = classify_trajectory(nl, lm, &tr)?;
    let point = SweepPoint {
        alpha,
        zeros: trace.zero_radii(),
        turnings: trace.turning_radii(),
        energy_min: trace.energy_min,
        termination: tr.termination,
        label,
    };
    Ok((tr, point))
}

/// Classifies every grid point in parallel; output is in grid order.
pub fn sweep(nl: &Nonlinearity, lm: &Landmarks, cfg: &IntegratorConfig, alphas: &[f64]) -> Result<Vec<SweepPoint>> {
    alphas.par_iter().map(|&a| shoot(nl, lm, cfg, a).map(|(_, p)| p)).collect()
}

/// Adjacent grid pairs where the zero count changes, skipping undecided points.
pub fn transitions(points: &[SweepPoint]) -> Vec<(usize, usize)> {
    let decided: Vec<usize> = (0..points.len()).filter(|&i| points[i].zero_count().is_some()).collect();
    decided
        .windows(2)
        .filter(|w| points[w[0]].zero_count() != points[w[1]].zero_count())
        .map(|w| (w[0], w[1]))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionProblem {
    pub k: usize,
    /// At most `k` simple zeros.
    pub lo: f64,
    /// At least `k + 1` simple zeros.
    pub hi: f64,
    pub tol_alpha: f64,
    pub max_iter: usize,
}

/// The highest adjacent pair going from `≤ k` to `≥ k + 1` zeros.
pub fn bracket(points: &[SweepPoint], k: usize) -> Result<BisectionProblem> {
    let defaults = SolverConfig::default();
    transitions(points)
        .into_iter()
        .rev()
        .find(|&(i, j)| points[i].zero_count().unwrap() <= k && points[j].zero_count().unwrap() > k)
        .map(|(i, j)| BisectionProblem {
            k,
            lo: points[i].alpha,
            hi: points[j].alpha,
            tol_alpha: defaults.tol_alpha,
            max_iter: defaults.max_iter,
        })
        .ok_or_else(|| {
            let top = points.iter().filter_map(|p| p.zero_count()).max();
            Error::NotFound(format!(
                "no grid point with at most {k} zeros is followed by one with more (largest count {top:?}); \
                 widen the shooting box or refine the grid"
            ))
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reasons", rename_all = "snake_case")]
pub enum Validation {
    Accepted,
    Flagged(Vec<String>),
}

impl Validation {
    pub fn accepted(&self) -> bool {
        matches!(self, Validation::Accepted)
    }
}

/// Accepted (or flagged) k-nodal profile.
#[derive(Debug, Clone)]
pub struct BoundState {
    pub k: usize,
    pub alpha_star: f64,
    pub lo: f64,
    pub bracket_width: f64,
    pub iterations: usize,
    /// Midpoints still undecided after all escalations.
    pub undecided: usize,
    pub escalated: usize,
    /// Profile up to the closest approach to `u = u' = 0` before the
    /// `(k+1)`-th zero.
    pub trajectory: Trajectory,
    pub r_cut: f64,
    pub tail_norm: f64,
    pub tail_slope: f64,
    pub tail_energy: f64,
    pub zero_count: usize,
    pub zeros: Vec<f64>,
    pub identities: IdentityCheck,
    pub equation_residual: f64,
    pub validation: Validation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundStateSummary {
    pub k: usize,
    pub alpha_star: f64,
    pub bracket_width: f64,
    pub iterations: usize,
    pub r_cut: f64,
    pub tail_norm: f64,
    pub tail_energy: f64,
    pub energy_increase: f64,
    pub energy_balance: f64,
    pub pohozaev: f64,
    pub equation_residual: f64,
}

impl BoundState {
    pub fn summary(&self) -> BoundStateSummary {
        BoundStateSummary {
            k: self.k,
            alpha_star: self.alpha_star,
            bracket_width: self.bracket_width,
            iterations: self.iterations,
            r_cut: self.r_cut,
            tail_norm: self.tail_norm,
            tail_energy: self.tail_energy,
            energy_increase: self.identities.energy_increase,
            energy_balance: self.identities.energy_balance,
            pohozaev: self.identities.pohozaev,
            equation_residual: self.equation_residual,
        }
    }
}

/// Zero count at `alpha` under the bisection settings, escalating
/// tolerances on undecided runs. `None` after all escalations fail.
fn count_at(
    nl: &Nonlinearity,
    lm: &Landmarks,
    base: &IntegratorConfig,
    escalations: usize,
    alpha: f64,
    escalated: &mut usize,
) -> Result<Option<usize>> {
    let mut cfg = base.clone();
    for round in 0..=escalations {
        if round > 0 {
            *escalated += 1;
            cfg = cfg.tightened(10.0);
        }
        let (_, p) = shoot(nl, lm, &cfg, alpha)?;
        if let Some(c) = p.zero_count() {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Largest `|v' + ((N-1)/r) v + f(u)| / (1 + |f(u)|)` at evenly spaced
/// interior checkpoints, with `v'` by central differences.
pub fn equation_residual(nl: &Nonlinearity, tr: &Trajectory, checkpoints: usize) -> f64 {
    let (a, b) = (tr.r_start(), tr.r_end());
    let mut worst: f64 = 0.0;
    for i in 1..=checkpoints {
        let r = a + (b - a) * i as f64 / (checkpoints + 1) as f64;
        let h = 1e-6 * r.max(1.0);
        let (Some(lo), Some(mid), Some(hi)) = (tr.state_at(r - h), tr.state_at(r), tr.state_at(r + h)) else {
            continue;
        };
        let dv = (hi.v - lo.v) / (2.0 * h);
        let fu = nl.f(mid.u);
        let res = (dv + (nl.n - 1.0) / r * mid.v + fu).abs() / (1.0 + fu.abs());
        worst = worst.max(res);
    }
    worst
}

pub fn bisect(nl: &Nonlinearity, lm: &Landmarks, cfg: &SolverConfig, prob: &BisectionProblem) -> Result<BoundState> {
    cfg.validate()?;
    let k = prob.k;
    if !(lm.beta_plus < prob.lo && prob.lo < prob.hi && prob.hi < lm.gamma_plus) {
        return Err(Error::Config(format!(
            "bracket [{}, {}] must satisfy beta+ < lo < hi < gamma+",
            prob.lo, prob.hi
        )));
    }
    let mut base = cfg.shooting(lm);
    base.zero_limit = Some(k + 1);
    let mut escalated = 0;
    let lo_count = count_at(nl, lm, &base, cfg.escalations, prob.lo, &mut escalated)?;
    let hi_count = count_at(nl, lm, &base, cfg.escalations, prob.hi, &mut escalated)?;
    if lo_count.unwrap_or(0) > k || hi_count.is_none_or(|c| c <= k) {
        return Err(Error::Consistency(format!(
            "bracket labels do not hold: lo = {} has {lo_count:?} zeros, hi = {} has {hi_count:?}, k = {k}",
            prob.lo, prob.hi
        )));
    }

    let (mut lo, mut hi) = (prob.lo, prob.hi);
    let mut iterations = 0;
    let mut undecided = 0;
    while hi - lo > prob.tol_alpha && iterations < prob.max_iter {
        let mid = lo + 0.5 * (hi - lo);
        if !(mid > lo && mid < hi) {
            break;
        }
        iterations += 1;
        match count_at(nl, lm, &base, cfg.escalations, mid, &mut escalated)? {
            Some(c) if c > k => hi = mid,
            Some(_) => lo = mid,
            None => {
                undecided += 1;
                lo = mid;
            }
        }
        if !(lo < hi) {
            return Err(Error::Consistency(format!("bracket collapsed at iteration {iterations}: [{lo}, {hi}]")));
        }
    }

    let full = integrate(nl, hi, &base)?;
    let (trace, _) = classify_trajectory(nl, lm, &full)?;
    let next = trace
        .zeros
        .get(k)
        .ok_or_else(|| Error::Consistency(format!("hi = {hi} lost its zero {}", k + 1)))?
        .r;
    let from = trace.turnings.iter().filter(|t| t.k == k && t.r < next).map(|t| t.r).last().unwrap_or(full.r_start());
    let m = nl.m;
    let closeness = |s: &crate::integrator::ShootState| s.u.abs().max(s.uprime(m).abs());
    let cut = full
        .samples
        .iter()
        .filter(|s| s.r > from && s.r < next)
        .min_by(|a, b| closeness(a).partial_cmp(&closeness(b)).unwrap())
        .copied()
        .unwrap_or(full.end());
    let trajectory = full.truncated(cut.r);
    let end = trajectory.end();
    let (cut_trace, cut_label) = classify_trajectory(nl, lm, &trajectory)?;
    let margins = Margins::new(&cut_trace, lm);
    let zero_count = cut_trace.zeros.iter().filter(|z| z.slope.abs() > margins.slope).count();
    let identities = check_identities(nl, &trajectory);
    let residual = equation_residual(nl, &trajectory, cfg.checkpoints);

    let bound = BoundState {
        k,
        alpha_star: hi,
        lo,
        bracket_width: hi - lo,
        iterations,
        undecided,
        escalated,
        r_cut: end.r,
        tail_norm: end.u.abs(),
        tail_slope: end.uprime(m).abs(),
        tail_energy: energy_i(nl, &end),
        zero_count,
        zeros: cut_trace.zero_radii(),
        identities,
        equation_residual: residual,
        trajectory,
        validation: Validation::Accepted,
    };
    let mut reasons = Vec::new();
    if bound.bracket_width > prob.tol_alpha {
        reasons.push(format!("bracket width {:e} above {:e} after {iterations} iterations", bound.bracket_width, prob.tol_alpha));
    }
    if zero_count != k || cut_trace.zeros.len() != k {
        reasons.push(format!("profile has {zero_count} simple zeros ({} total), expected {k}", cut_trace.zeros.len()));
    }
    if matches!(cut_label.class, Class::P(_)) {
        reasons.push(format!("profile is labeled {}", cut_label.class));
    }
    if !(bound.tail_norm <= cfg.tail_tol) {
        reasons.push(format!("tail |u| = {:e} above {:e}", bound.tail_norm, cfg.tail_tol));
    }
    if !(bound.tail_energy.abs() <= cfg.tail_energy_tol) {
        reasons.push(format!("tail energy {:e} outside ±{:e}", bound.tail_energy, cfg.tail_energy_tol));
    }
    if !(residual <= cfg.residual_tol) {
        reasons.push(format!("equation residual {residual:e} above {:e}", cfg.residual_tol));
    }
    if !(identities.energy_increase <= 1e-8) {
        reasons.push(format!("energy increases by {:e}", identities.energy_increase));
    }
    if !(identities.pohozaev <= 1e-6) {
        reasons.push(format!("Pohozaev residual {:e}", identities.pohozaev));
    }
    Ok(BoundState {
        validation: if reasons.is_empty() { Validation::Accepted } else { Validation::Flagged(reasons) },
        ..bound
    })
}

/// Sweep, bracket and bisect for the k-nodal bound state, doubling the
/// shooting box when `γ⁺ = ∞` and no bracket is found.
#[derive(Debug, Clone)]
pub struct Solution {
    pub points: Vec<SweepPoint>,
    pub problem: BisectionProblem,
    pub bound: BoundState,
}

pub fn solve(nl: &Nonlinearity, lm: &Landmarks, cfg: &SolverConfig, k: usize) -> Result<Solution> {
    cfg.validate()?;
    let mut shooting = cfg.shooting(lm);
    shooting.zero_limit = Some(k + 1);
    let (lo, mut hi) = cfg.alpha_range(lm);
    loop {
        let points = sweep(nl, lm, &shooting, &alpha_grid(lo, hi, cfg.grid))?;
        match bracket(&points, k) {
            Ok(mut problem) => {
                problem.tol_alpha = cfg.tol_alpha;
                problem.max_iter = cfg.max_iter;
                let bound = bisect(nl, lm, cfg, &problem)?;
                return Ok(Solution { points, problem, bound });
            }
            Err(e) => {
                let expandable = !lm.gamma_plus.is_finite() && cfg.alpha_max.is_none();
                if !expandable || 2.0 * hi > cfg.alpha_cap {
                    return Err(e);
                }
                hi *= 2.0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::find_landmarks;

    fn g2() -> (Nonlinearity, Landmarks) {
        let nl = Nonlinearity::g2(2.0, 3.0).unwrap();
        let lm = find_landmarks(&nl, (-100.0, 100.0)).unwrap();
        (nl, lm)
    }

    fn point(alpha: f64, class: Class, zero_count: usize) -> SweepPoint {
        SweepPoint {
            alpha,
            label: ClassLabel {
                class,
                zero_count,
                evidence: vec![],
                margins: Margins { slope: 0.0, class: 0.0 },
            },
            zeros: vec![],
            turnings: vec![],
            energy_min: 0.0,
            termination: crate::integrator::Termination::ReachedRMax,
        }
    }

    #[test]
    fn grid_endpoints() {
        assert!(alpha_grid(1.0, 2.0, 0).is_empty());
        assert_eq!(alpha_grid(1.0, 2.0, 1), vec![1.0]);
        assert_eq!(alpha_grid(1.0, 2.0, 3), vec![1.0, 1.5, 2.0]);
    }

    #[test]
    fn bracket_picks_adjacent_pair() {
        let pts = [point(2.0, Class::P(1), 0), point(4.0, Class::P(2), 1), point(6.0, Class::N(2), 2)];
        let p = bracket(&pts, 1).unwrap();
        assert_eq!((p.lo, p.hi), (4.0, 6.0));
        let p = bracket(&pts, 0).unwrap();
        assert_eq!((p.lo, p.hi), (2.0, 4.0));
    }

    #[test]
    fn bracket_skips_undecided() {
        let pts = [point(2.0, Class::P(1), 0), point(3.0, Class::Undecided, 0), point(4.0, Class::N(1), 1)];
        let p = bracket(&pts, 0).unwrap();
        assert_eq!((p.lo, p.hi), (2.0, 4.0));
    }

    #[test]
    fn bracket_not_found() {
        let pts = [point(2.0, Class::P(1), 0), point(3.0, Class::P(1), 0)];
        assert!(matches!(bracket(&pts, 0), Err(Error::NotFound(_))));
        assert!(matches!(bracket(&[], 0), Err(Error::NotFound(_))));
    }

    #[test]
    fn empty_sweep() {
        let (nl, lm) = g2();
        assert!(sweep(&nl, &lm, &IntegratorConfig::new(20.0), &[]).unwrap().is_empty());
    }

    #[test]
    fn just_above_beta_plus_is_p1() {
        let (nl, lm) = g2();
        let cfg = SolverConfig::default().shooting(&lm);
        let pts = sweep(&nl, &lm, &cfg, &[lm.beta_plus + 1e-9]).unwrap();
        assert_eq!(pts[0].label.class, Class::P(1));
    }

    #[test]
    fn inverted_range_rejected() {
        let cfg = SolverConfig { alpha_min: Some(3.0), alpha_max: Some(2.0), ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn integrated_profile_satisfies_equation() {
        let (nl, _) = g2();
        let tr = integrate(&nl, 3.0, &IntegratorConfig::new(10.0)).unwrap();
        let res = equation_residual(&nl, &tr, 100);
        assert!(res < 1e-6, "{res}");
    }
}
