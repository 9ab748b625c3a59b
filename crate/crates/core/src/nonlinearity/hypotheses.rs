//! Sampled audit of the structural hypotheses on `f`.
//!
//! Limits at infinity cannot be decided from samples, so every verdict here
//! is advisory and tagged "on samples". Failures carry a witness point that
//! can be re-evaluated with the public helpers of this module.

use serde::{Deserialize, Serialize};

use super::{phi, Landmarks, Nonlinearity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckerConfig {
    /// Interval ratio in the (f3)(ii) infimum.
    pub theta: f64,
    /// Grid points per `[θs, s]` when taking the infimum.
    pub inf_grid: usize,
    /// Geometric samples per decade for growth conditions.
    pub per_decade: usize,
    /// Largest `|s|` sampled for conditions at infinity.
    pub max_abs_s: f64,
    /// (SC) holds when the estimated limsup is at most `m* - sc_margin`.
    pub sc_margin: f64,
    /// Minimum log-log growth rate of the (f3) product against `ln s`.
    pub kappa_min: f64,
    /// Dyadic refinement levels toward finite `γ±`.
    pub f4_levels: usize,
    /// Linear samples for sign and continuity checks.
    pub sign_samples: usize,
}

impl Default for CheckerConfig {
    fn default() -> Self {
        CheckerConfig {
            theta: 0.5,
            inf_grid: 21,
            per_decade: 4,
            max_abs_s: 1e50,
            sc_margin: 0.05,
            kappa_min: 0.05,
            f4_levels: 40,
            sign_samples: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Le,
    Ge,
    Lt,
    Gt,
}

impl Relation {
    pub fn holds(self, value: f64, bound: f64) -> bool {
        match self {
            Relation::Le => value <= bound,
            Relation::Ge => value >= bound,
            Relation::Lt => value < bound,
            Relation::Gt => value > bound,
        }
    }
}

/// A sampled counterexample: the stated inequality `value <relation> bound`
/// fails at `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub s: f64,
    pub value: f64,
    #[serde(with = "crate::ext")]
    pub bound: f64,
    pub relation: Relation,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    HoldsOnSamples,
    FailsAt(Witness),
    NotApplicable { reason: String },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::HoldsOnSamples)
    }

    pub fn fails(&self) -> bool {
        matches!(self, Verdict::FailsAt(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::FailsAt(w) => Some(w),
            _ => None,
        }
    }

    fn na(reason: &str) -> Self {
        Verdict::NotApplicable {
            reason: reason.to_string(),
        }
    }

    fn fail(s: f64, value: f64, bound: f64, relation: Relation, detail: impl Into<String>) -> Self {
        Verdict::FailsAt(Witness {
            s,
            value,
            bound,
            relation,
            detail: detail.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRange {
    pub condition: String,
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

/// Growth diagnostics for one side at infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideLimit {
    /// Estimated `limsup s f(s)/F(s)`.
    pub sc_limsup: f64,
    /// Last sampled value of the (f3) product.
    pub f3_product_last: f64,
    /// Fitted growth exponent of the (f3) product against `ln s`.
    pub f3_kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub nonlinearity: String,
    pub m: f64,
    pub n: f64,
    pub theta: f64,
    pub landmarks: Landmarks,
    pub f1: Verdict,
    pub f2_i: Verdict,
    pub f2_ii: Verdict,
    pub f2_iii: Verdict,
    pub f3a_i: Verdict,
    pub f3a_ii: Verdict,
    pub f3b_i: Verdict,
    pub f3b_ii: Verdict,
    pub f4a: Verdict,
    pub f4b: Verdict,
    pub sc: Verdict,
    /// Empirical `sup f(s)/(γ⁺-s)^{m-1}` near a finite `γ⁺`.
    #[serde(with = "crate::ext::option")]
    pub l0_plus: Option<f64>,
    #[serde(with = "crate::ext::option")]
    pub l0_minus: Option<f64>,
    pub growth_plus: Option<SideLimit>,
    pub growth_minus: Option<SideLimit>,
    pub samples: Vec<SampleRange>,
}

impl HypothesisReport {
    /// (f1) and all parts of (f2) hold on samples.
    pub fn basic_hypotheses_hold(&self) -> bool {
        self.f1.holds() && self.f2_i.holds() && self.f2_ii.holds() && self.f2_iii.holds()
    }

    pub fn f2_holds(&self) -> bool {
        self.f2_i.holds() && self.f2_ii.holds() && self.f2_iii.holds()
    }

    pub fn verdicts(&self) -> Vec<(&'static str, &Verdict)> {
        vec![
            ("(f1)", &self.f1),
            ("(f2)(i)", &self.f2_i),
            ("(f2)(ii)", &self.f2_ii),
            ("(f2)(iii)", &self.f2_iii),
            ("(f3)(a)(i)", &self.f3a_i),
            ("(f3)(a)(ii)", &self.f3a_ii),
            ("(f3)(b)(i)", &self.f3b_i),
            ("(f3)(b)(ii)", &self.f3b_ii),
            ("(f4)(a)", &self.f4a),
            ("(f4)(b)", &self.f4b),
            ("(SC)", &self.sc),
        ]
    }
}

/// `s f(s) / F(s)`.
pub fn sc_ratio(nl: &Nonlinearity, s: f64) -> f64 {
    s * nl.f(s) / nl.primitive(s)
}

/// `inf_{s1,s2 ∈ [θs, s]} Q(s2) (φ_m(s)/f(s1))^{N/m}` on a grid of `grid`
/// points (the interval is `[s, θs]` for negative `s`).
pub fn f3_product(nl: &Nonlinearity, s: f64, theta: f64, grid: usize) -> f64 {
    let grid = grid.max(2);
    let a = theta * s;
    let pts = (0..grid).map(|i| a + (s - a) * i as f64 / (grid - 1) as f64);
    let mut q_min = f64::INFINITY;
    let mut g_min = f64::INFINITY;
    let mut g_max = f64::NEG_INFINITY;
    let top = phi(s, nl.m);
    for t in pts {
        q_min = q_min.min(nl.q(t));
        let base = top / nl.f(t);
        let g = if base > 0.0 { base.powf(nl.n / nl.m) } else { f64::NAN };
        g_min = g_min.min(g);
        g_max = g_max.max(g);
    }
    if g_min.is_nan() || g_max.is_nan() {
        return f64::NAN;
    }
    if q_min >= 0.0 {
        q_min * g_min
    } else {
        q_min * g_max
    }
}

/// `f(s)/(γ-s)^{m-1}` for finite `γ > 0`, `-f(s)/(s-γ)^{m-1}` for finite `γ < 0`.
pub fn f4_ratio(nl: &Nonlinearity, s: f64, gamma: f64) -> f64 {
    let d = (gamma - s).abs();
    gamma.signum() * nl.f(s) / d.powf(nl.m - 1.0)
}

/// `|f(b + h) - f(b - h)|` with `h = rel * (1 + |b|)`.
pub fn breakpoint_jump(nl: &Nonlinearity, b: f64, rel: f64) -> f64 {
    let h = rel * (1.0 + b.abs());
    (nl.f(b + h) - nl.f(b - h)).abs()
}

/// Geometric samples `dir * s` from `start` up to `cfg.max_abs_s`.
fn geometric(start: f64, cfg: &CheckerConfig) -> Vec<f64> {
    let step = 10f64.powf(1.0 / cfg.per_decade as f64);
    let mut out = Vec::new();
    let mut s = start;
    while s <= cfg.max_abs_s {
        out.push(s);
        s *= step;
    }
    out
}

fn linear(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (1..n).map(move |i| a + (b - a) * i as f64 / n as f64)
}

/// Least-squares fit of `y ≈ c0 + c1 x + c2 x²`; returns `c0`.
fn quadratic_intercept(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let basis = [1.0, x, x * x];
        for i in 0..3 {
            b[i] += basis[i] * y;
            for j in 0..3 {
                a[i][j] += basis[i] * basis[j];
            }
        }
    }
    // Cramer's rule on the 3x3 normal equations
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&a);
    if d == 0.0 || !d.is_finite() {
        return ys.last().copied().unwrap_or(f64::NAN);
    }
    let mut a0 = a;
    for i in 0..3 {
        a0[i][0] = b[i];
    }
    det(&a0) / d
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

struct Ctx<'a> {
    nl: &'a Nonlinearity,
    lm: &'a Landmarks,
    cfg: &'a CheckerConfig,
    samples: Vec<SampleRange>,
}

impl Ctx<'_> {
    fn record(&mut self, condition: &str, from: f64, to: f64, count: usize) {
        self.samples.push(SampleRange {
            condition: condition.to_string(),
            from,
            to,
            count,
        });
    }

    fn f1(&mut self) -> Verdict {
        let nl = self.nl;
        let (lo, hi) = self.lm.search_box;
        let mut count = 0;
        for s in linear(lo, hi, self.cfg.sign_samples) {
            count += 1;
            if !nl.f(s).is_finite() {
                self.record("(f1)", lo, hi, count);
                return Verdict::fail(s, nl.f(s), f64::INFINITY, Relation::Lt, "f is not finite");
            }
        }
        for b in nl.breakpoints() {
            count += 1;
            let jump = breakpoint_jump(nl, b, 1e-10);
            let tol = 1e-6 * (1.0 + nl.f(b).abs());
            // a Hölder cusp shrinks under refinement, a jump does not
            let shrink = 0.5 * breakpoint_jump(nl, b, 1e-6);
            let bound = tol.max(shrink);
            if !(jump <= bound) {
                self.record("(f1)", lo, hi, count);
                return Verdict::fail(b, jump, bound, Relation::Le, "jump across breakpoint");
            }
        }
        self.record("(f1)", lo, hi, count);
        Verdict::HoldsOnSamples
    }

    fn f2_i(&mut self) -> Verdict {
        let nl = self.nl;
        let lm = self.lm;
        let n = self.cfg.sign_samples;
        let (bl, br) = lm.search_box;
        for s in linear(lm.beta_minus, lm.beta_plus, n) {
            if s != 0.0 && !(nl.primitive(s) < 0.0) {
                return Verdict::fail(s, nl.primitive(s), 0.0, Relation::Lt, "F must be negative in (β⁻, β⁺)");
            }
        }
        let right = lm.gamma_plus.min(br);
        for s in linear(lm.beta_plus, right, n) {
            if !(nl.f(s) > 0.0) {
                return Verdict::fail(s, nl.f(s), 0.0, Relation::Gt, "f must be positive in (β⁺, γ⁺)");
            }
        }
        let left = lm.gamma_minus.max(bl);
        for s in linear(left, lm.beta_minus, n) {
            if !(nl.f(s) < 0.0) {
                return Verdict::fail(s, nl.f(s), 0.0, Relation::Lt, "f must be negative in (γ⁻, β⁻)");
            }
        }
        self.record("(f2)(i)", left, right, 3 * n);
        Verdict::HoldsOnSamples
    }

    fn f2_ii(&mut self) -> Verdict {
        let (lp, lm_) = (self.lm.l_limit, self.lm.l_limit_minus);
        let equal = if lp.is_infinite() || lm_.is_infinite() {
            lp == lm_
        } else {
            (lp - lm_).abs() <= 1e-6 * (1.0 + lp.abs())
        };
        if equal {
            Verdict::HoldsOnSamples
        } else {
            Verdict::fail(
                self.lm.gamma_plus,
                lp,
                lm_,
                Relation::Ge,
                format!("limits of F differ: {lp} at γ⁺ and {lm_} at γ⁻"),
            )
        }
    }

    fn f2_iii(&mut self) -> Verdict {
        let nl = self.nl;
        let lm = self.lm;
        let (bl, br) = lm.search_box;
        let right = lm.gamma_plus.min(br);
        let left = lm.gamma_minus.max(bl);
        let n = self.cfg.sign_samples / 4;
        let mut count = 0;
        for (a, b) in [(left, 0.0), (0.0, right)] {
            let span = b - a;
            for s in linear(a + 1e-3 * span, b - 1e-3 * span, n) {
                count += 1;
                let coarse = (nl.f(s + 1e-4) - nl.f(s)).abs() / 1e-4;
                let fine = (nl.f(s + 1e-7) - nl.f(s)).abs() / 1e-7;
                let bound = 10.0 * coarse + 10.0;
                if !(fine <= bound) {
                    self.record("(f2)(iii)", left, right, count);
                    return Verdict::fail(s, fine, bound, Relation::Le, "difference quotient blows up under refinement");
                }
            }
        }
        self.record("(f2)(iii)", left, right, count);
        Verdict::HoldsOnSamples
    }

    fn f3_i(&mut self, dir: f64) -> Verdict {
        let label = if dir > 0.0 { "(f3)(a)(i)" } else { "(f3)(b)(i)" };
        let nl = self.nl;
        let bb = self.lm.beta_bar;
        let mut pts: Vec<f64> = linear(bb, 10.0 * bb, 500).collect();
        pts.insert(0, bb);
        pts.extend(geometric(10.0 * bb, self.cfg));
        let mut count = 0;
        for &t in &pts {
            let q = nl.q(dir * t);
            if !q.is_finite() {
                break;
            }
            count += 1;
            if q < 0.0 {
                self.record(label, bb, t, count);
                return Verdict::fail(dir * t, q, 0.0, Relation::Ge, "Q must be non-negative beyond β̄");
            }
        }
        self.record(label, bb, pts.last().copied().unwrap_or(bb), count);
        Verdict::HoldsOnSamples
    }

    fn f3_ii(&mut self, dir: f64) -> (Verdict, f64, f64) {
        let label = if dir > 0.0 { "(f3)(a)(ii)" } else { "(f3)(b)(ii)" };
        let nl = self.nl;
        let cfg = self.cfg;
        let start = self.lm.beta_bar.max(1.0) / cfg.theta;
        let mut ss = Vec::new();
        let mut ps = Vec::new();
        for s in geometric(start, cfg) {
            let p = f3_product(nl, dir * s, cfg.theta, cfg.inf_grid);
            if !p.is_finite() {
                break;
            }
            ss.push(s);
            ps.push(p);
        }
        let n = ps.len();
        self.record(label, dir * start, dir * ss.last().copied().unwrap_or(start), n);
        if n < 8 {
            return (
                Verdict::fail(dir * start, n as f64, 8.0, Relation::Ge, "too few finite samples"),
                f64::NAN,
                f64::NAN,
            );
        }
        let tail = n / 2;
        for j in tail..n {
            if !(ps[j] > 0.0) {
                return (
                    Verdict::fail(dir * ss[j], ps[j], 0.0, Relation::Gt, "product must be positive"),
                    ps[n - 1],
                    f64::NAN,
                );
            }
        }
        let lx: Vec<f64> = ss[tail..].iter().map(|s| s.ln().ln()).collect();
        let ly: Vec<f64> = ps[tail..].iter().map(|p| p.ln()).collect();
        let kappa = slope(&lx, &ly);
        for j in tail + 1..n {
            if ps[j] < ps[j - 1] * (1.0 - 1e-9) {
                return (
                    Verdict::fail(
                        dir * ss[j],
                        ps[j],
                        ps[j - 1],
                        Relation::Ge,
                        format!("product decreases on the tail (previous sample at {:e})", dir * ss[j - 1]),
                    ),
                    ps[n - 1],
                    kappa,
                );
            }
        }
        if !(kappa >= cfg.kappa_min) {
            return (
                Verdict::fail(
                    dir * ss[n - 1],
                    kappa,
                    cfg.kappa_min,
                    Relation::Ge,
                    "product growth against ln s is too slow to indicate divergence",
                ),
                ps[n - 1],
                kappa,
            );
        }
        (Verdict::HoldsOnSamples, ps[n - 1], kappa)
    }

    fn sc_side(&mut self, dir: f64) -> (Verdict, f64) {
        let nl = self.nl;
        let cfg = self.cfg;
        let start = self.lm.beta_bar.max(1.0);
        let mut ss = Vec::new();
        let mut rs = Vec::new();
        for s in geometric(start, cfg) {
            let x = dir * s;
            let (f, big_f) = (nl.f(x), nl.primitive(x));
            if !(f * x).is_finite() || !big_f.is_finite() {
                break;
            }
            ss.push(s);
            rs.push(x * f / big_f);
        }
        let n = rs.len();
        self.record("(SC)", dir * start, dir * ss.last().copied().unwrap_or(start), n);
        if n < 8 {
            return (
                Verdict::fail(dir * start, n as f64, 8.0, Relation::Ge, "too few finite samples"),
                f64::NAN,
            );
        }
        let tail = n / 2;
        for j in tail..n {
            let x = dir * ss[j];
            if !(x * nl.f(x) >= 0.0 && nl.primitive(x) >= 0.0) {
                return (
                    Verdict::fail(x, nl.primitive(x), 0.0, Relation::Ge, "need s f(s) >= 0 and F(s) >= 0 for large |s|"),
                    f64::NAN,
                );
            }
        }
        let inv_log: Vec<f64> = ss[tail..].iter().map(|s| 1.0 / s.ln()).collect();
        let fit = quadratic_intercept(&inv_log, &rs[tail..]);
        let tail_max = rs[tail..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let limsup = fit.max(tail_max);
        let m_star = nl.m_star();
        let bound = m_star - cfg.sc_margin;
        if limsup <= bound || (m_star.is_infinite() && limsup.is_finite()) {
            (Verdict::HoldsOnSamples, limsup)
        } else {
            (
                Verdict::fail(
                    dir * ss[n - 1],
                    limsup,
                    bound,
                    Relation::Le,
                    format!("estimated limsup of s f/F is {limsup:.4}, m* = {m_star}"),
                ),
                limsup,
            )
        }
    }

    fn f4(&mut self, dir: f64) -> (Verdict, Option<f64>) {
        let label = if dir > 0.0 { "(f4)(a)" } else { "(f4)(b)" };
        let gamma = if dir > 0.0 { self.lm.gamma_plus } else { self.lm.gamma_minus };
        if gamma.is_infinite() {
            return (Verdict::na("γ is infinite"), None);
        }
        let nl = self.nl;
        let bb = dir * self.lm.beta_bar;
        let levels = self.cfg.f4_levels;
        let pts: Vec<f64> = (0..=levels).map(|j| gamma - (gamma - bb) * 0.5f64.powi(j as i32)).collect();
        let ratios: Vec<f64> = pts.iter().map(|&s| f4_ratio(nl, s, gamma)).collect();
        self.record(label, bb, pts[levels], levels + 1);
        let split = 2 * levels / 3;
        let coarse = ratios[..split].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let l0 = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let bound = 2.0 * coarse.max(0.0) + 1e-12;
        for j in split..=levels {
            if !(ratios[j] <= bound) {
                return (
                    Verdict::fail(pts[j], ratios[j], bound, Relation::Le, "f/(γ-s)^{m-1} grows toward γ"),
                    None,
                );
            }
        }
        (Verdict::HoldsOnSamples, Some(l0.max(0.0)))
    }
}

/// Audits (f1)–(f4) and (SC) on samples.
pub fn check_hypotheses(nl: &Nonlinearity, lm: &Landmarks, cfg: &CheckerConfig) -> HypothesisReport {
    let mut ctx = Ctx {
        nl,
        lm,
        cfg,
        samples: Vec::new(),
    };
    let f1 = ctx.f1();
    let f2_i = ctx.f2_i();
    let f2_ii = ctx.f2_ii();
    let f2_iii = ctx.f2_iii();

    let not_inf = "γ is finite; (f4) applies instead";
    let (f3a_i, f3a_ii, growth_plus_f3) = if lm.gamma_plus.is_infinite() {
        let i = ctx.f3_i(1.0);
        let (ii, last, kappa) = ctx.f3_ii(1.0);
        (i, ii, Some((last, kappa)))
    } else {
        (Verdict::na(not_inf), Verdict::na(not_inf), None)
    };
    let (f3b_i, f3b_ii, growth_minus_f3) = if lm.gamma_minus.is_infinite() {
        let i = ctx.f3_i(-1.0);
        let (ii, last, kappa) = ctx.f3_ii(-1.0);
        (i, ii, Some((last, kappa)))
    } else {
        (Verdict::na(not_inf), Verdict::na(not_inf), None)
    };
    let (f4a, l0_plus) = ctx.f4(1.0);
    let (f4b, l0_minus) = ctx.f4(-1.0);

    let mut sc_verdicts = Vec::new();
    let mut growth_plus = None;
    let mut growth_minus = None;
    if let Some((last, kappa)) = growth_plus_f3 {
        let (v, limsup) = ctx.sc_side(1.0);
        sc_verdicts.push(v);
        growth_plus = Some(SideLimit {
            sc_limsup: limsup,
            f3_product_last: last,
            f3_kappa: kappa,
        });
    }
    if let Some((last, kappa)) = growth_minus_f3 {
        let (v, limsup) = ctx.sc_side(-1.0);
        sc_verdicts.push(v);
        growth_minus = Some(SideLimit {
            sc_limsup: limsup,
            f3_product_last: last,
            f3_kappa: kappa,
        });
    }
    let sc = if sc_verdicts.is_empty() {
        Verdict::na("both γ± are finite")
    } else {
        sc_verdicts
            .into_iter()
            .find(Verdict::fails)
            .unwrap_or(Verdict::HoldsOnSamples)
    };

    HypothesisReport {
        nonlinearity: nl.name.clone(),
        m: nl.m,
        n: nl.n,
        theta: cfg.theta,
        landmarks: lm.clone(),
        f1,
        f2_i,
        f2_ii,
        f2_iii,
        f3a_i,
        f3a_ii,
        f3b_i,
        f3b_ii,
        f4a,
        f4b,
        sc,
        l0_plus,
        l0_minus,
        growth_plus,
        growth_minus,
        samples: ctx.samples,
    }
}
