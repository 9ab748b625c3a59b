//! The `solve`, `sweep` and `check` commands.

use std::path::PathBuf;

use anyhow::{bail, Result};
use serde::Serialize;

use nodal_core::integrator::IntegratorConfig;
use nodal_core::nonlinearity::{check_hypotheses, HypothesisReport};
use nodal_core::solver::{alpha_grid, solve, sweep, transitions, BisectionProblem, BoundStateSummary, Validation};
use nodal_core::{Error, Landmarks};

use crate::config::RunConfig;
use crate::emit;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_NOT_FOUND: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

/// Result of a command: exit status, lines for the terminal, files written.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub code: i32,
    pub messages: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    fn say(&mut self, msg: impl Into<String>) {
        self.messages.push(msg.into());
    }
}

fn failed_verdicts(report: &HypothesisReport) -> Vec<String> {
    report
        .verdicts()
        .into_iter()
        .filter(|(_, v)| v.fails())
        .map(|(name, v)| match v.witness() {
            Some(w) => format!("{name} fails on samples at s = {:e}: {}", w.s, w.detail),
            None => format!("{name} fails on samples"),
        })
        .collect()
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    nonlinearity: &'a str,
    m: f64,
    #[serde(rename = "N")]
    n: f64,
    k: usize,
    alpha_star: f64,
    bracket: [f64; 2],
    zeros: &'a [f64],
    summary: BoundStateSummary,
    validation: &'a Validation,
    undecided_midpoints: usize,
    escalations: usize,
    initial_bracket: &'a BisectionProblem,
    landmarks: &'a Landmarks,
    hypothesis_warnings: &'a [String],
    integrator: &'a IntegratorConfig,
    profile: Option<String>,
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let nl = cfg.nonlinearity()?;
    let lm = cfg.landmarks(&nl)?;
    let report = check_hypotheses(&nl, &lm, &cfg.checker);
    let warnings = failed_verdicts(&report);
    for w in &warnings {
        out.say(format!("warning: {w}"));
    }
    std::fs::create_dir_all(&cfg.out)?;
    if !report.f2_holds() {
        let path = cfg.out.join("check.json");
        emit::write_json(&report, &path)?;
        out.artifacts.push(path);
        out.say("aborting: (f2) fails on samples");
        out.code = EXIT_HYPOTHESIS;
        return Ok(out);
    }

    let k = cfg.k;
    let sol = match solve(&nl, &lm, &cfg.solver, k) {
        Ok(s) => s,
        Err(Error::NotFound(msg)) => {
            out.say(format!("no bracket for k = {k}: {msg}"));
            out.code = EXIT_NOT_FOUND;
            return Ok(out);
        }
        Err(e) => return Err(e.into()),
    };
    let b = &sol.bound;
    out.say(format!(
        "{} m={} N={} k={k}: alpha* = {:.12} (bracket width {:.1e}, {} iterations)",
        nl.name, nl.m, nl.n, b.alpha_star, b.bracket_width, b.iterations
    ));
    out.say(format!(
        "  zeros {:?}, tail |u| = {:.2e} at r = {:.3}, I = {:.2e}",
        b.zeros, b.tail_norm, b.r_cut, b.tail_energy
    ));

    let stem = format!("profile_k{k}");
    let csv_name = format!("{stem}.csv");
    if cfg.emit.csv {
        let path = cfg.out.join(&csv_name);
        emit::write_profile(&nl, &b.trajectory, &path)?;
        out.artifacts.push(path);
    }
    if cfg.emit.gnuplot {
        let path = cfg.out.join(format!("{stem}.gp"));
        let title = format!("{} m={} N={} k={k} alpha*={:.10}", nl.name, nl.m, nl.n, b.alpha_star);
        emit::write_text(&emit::profile_script(&csv_name, &title), &path)?;
        out.artifacts.push(path);
    }
    if cfg.emit.json {
        let path = cfg.out.join(format!("solve_k{k}.json"));
        let summary = SolveSummary {
            nonlinearity: &nl.name,
            m: nl.m,
            n: nl.n,
            k,
            alpha_star: b.alpha_star,
            bracket: [b.lo, b.alpha_star],
            zeros: &b.zeros,
            summary: b.summary(),
            validation: &b.validation,
            undecided_midpoints: b.undecided,
            escalations: b.escalated,
            initial_bracket: &sol.problem,
            landmarks: &lm,
            hypothesis_warnings: &warnings,
            integrator: &cfg.solver.integrator,
            profile: cfg.emit.csv.then(|| csv_name.clone()),
        };
        emit::write_json(&summary, &path)?;
        out.artifacts.push(path);
    }
    match &b.validation {
        Validation::Accepted => out.code = EXIT_OK,
        Validation::Flagged(reasons) => {
            for r in reasons {
                out.say(format!("validation: {r}"));
            }
            out.code = EXIT_VALIDATION;
        }
    }
    Ok(out)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let nl = cfg.nonlinearity()?;
    let lm = cfg.landmarks(&nl)?;
    let (lo, hi) = cfg.solver.alpha_range(&lm);
    if !(lo > lm.beta_plus && hi < lm.gamma_plus) {
        bail!(
            "alpha range [{lo}, {hi}] must lie inside (beta+, gamma+) = ({}, {})",
            lm.beta_plus,
            lm.gamma_plus
        );
    }
    let grid = if lo == hi { vec![lo] } else { alpha_grid(lo, hi, cfg.solver.grid) };
    let points = sweep(&nl, &lm, &cfg.solver.shooting(&lm), &grid)?;

    for (i, j) in transitions(&points) {
        out.say(format!(
            "zero count {:?} -> {:?} between alpha = {:.6} and {:.6}",
            points[i].zero_count().unwrap_or(0),
            points[j].zero_count().unwrap_or(0),
            points[i].alpha,
            points[j].alpha
        ));
    }
    let undecided = points.iter().filter(|p| p.zero_count().is_none()).count();
    if undecided > 0 {
        out.say(format!("{undecided} undecided grid points"));
    }
    out.say(format!("{} points on [{lo}, {hi}]", points.len()));

    std::fs::create_dir_all(&cfg.out)?;
    let csv_name = "sweep.csv";
    if cfg.emit.csv {
        let path = cfg.out.join(csv_name);
        emit::write_sweep(&nl, &points, std::fs::File::create(&path)?)?;
        out.artifacts.push(path);
    }
    if cfg.emit.gnuplot {
        let path = cfg.out.join("sweep.gp");
        let title = format!("{} m={} N={}", nl.name, nl.m, nl.n);
        emit::write_text(&emit::sweep_script(csv_name, &title), &path)?;
        out.artifacts.push(path);
    }
    if cfg.emit.json {
        let path = cfg.out.join("sweep.json");
        emit::write_json(&points, &path)?;
        out.artifacts.push(path);
    }
    Ok(out)
}

pub fn cmd_check(cfg: &RunConfig) -> Result<Outcome> {
    let mut out = Outcome::default();
    let nl = cfg.nonlinearity()?;
    let lm = cfg.landmarks(&nl)?;
    let report = check_hypotheses(&nl, &lm, &cfg.checker);
    out.say(format!(
        "{} m={} N={}: beta- = {:.12}, beta+ = {:.12}, gamma- = {}, gamma+ = {}, F_bar = {:.6e}, m* = {}",
        nl.name, nl.m, nl.n, lm.beta_minus, lm.beta_plus, lm.gamma_minus, lm.gamma_plus, lm.f_bar, lm.m_star
    ));
    for (name, v) in report.verdicts() {
        let text = if v.holds() {
            "holds on samples".to_string()
        } else if let Some(w) = v.witness() {
            format!("fails at s = {:e} ({})", w.s, w.detail)
        } else {
            "not applicable".to_string()
        };
        out.say(format!("  {name:<12} {text}"));
    }
    std::fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("check.json");
    emit::write_json(&report, &path)?;
    out.artifacts.push(path);
    out.code = if report.basic_hypotheses_hold() { EXIT_OK } else { EXIT_HYPOTHESIS };
    Ok(out)
}
