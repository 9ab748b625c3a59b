//! Run configuration: a TOML file, overridden field by field by CLI flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use nodal_core::nonlinearity::{check_operator, CheckerConfig, Piecewise};
use nodal_core::{find_landmarks, CatalogSpec, Landmarks, Nonlinearity, SolverConfig};

/// A user-supplied piecewise nonlinearity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSpec {
    pub name: String,
    #[serde(flatten)]
    pub definition: Piecewise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Emit {
    pub csv: bool,
    pub json: bool,
    pub gnuplot: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Emit { csv: true, json: true, gnuplot: true }
    }
}

impl Emit {
    /// Parses a comma-separated list such as `csv,json`.
    pub fn parse_list(s: &str) -> Result<Emit> {
        let mut e = Emit { csv: false, json: false, gnuplot: false };
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match item {
                "csv" => e.csv = true,
                "json" | "json_summary" => e.json = true,
                "gnuplot" | "gnuplot_script" => e.gnuplot = true,
                "none" => {}
                other => bail!("unknown emit kind {other:?}; expected csv, json, gnuplot or none"),
            }
        }
        Ok(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Catalog name, bare (`double_power`, with `p`, `q`) or with arguments
    /// (`double_power(4,2)`).
    pub f: String,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub lambda: Option<f64>,
    /// Replaces the catalog entry when present.
    pub piecewise: Option<PiecewiseSpec>,
    pub m: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub k: usize,
    pub search_box: (f64, f64),
    pub beta_bar: Option<f64>,
    pub solver: SolverConfig,
    pub checker: CheckerConfig,
    pub out: PathBuf,
    pub emit: Emit,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            f: "g2".into(),
            p: None,
            q: None,
            lambda: None,
            piecewise: None,
            m: 2.0,
            n: 3.0,
            k: 0,
            search_box: nodal_core::nonlinearity::DEFAULT_SEARCH_BOX,
            beta_bar: None,
            solver: SolverConfig::default(),
            checker: CheckerConfig::default(),
            out: PathBuf::from("out"),
            emit: Emit::default(),
        }
    }
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub f: Option<String>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub lambda: Option<f64>,
    pub m: Option<f64>,
    pub n: Option<f64>,
    pub k: Option<usize>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub grid: Option<usize>,
    pub r_max: Option<f64>,
    pub tol_alpha: Option<f64>,
    pub out: Option<PathBuf>,
    pub emit: Option<Emit>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: Option<&Path>, over: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Self::from_toml(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => RunConfig::default(),
        };
        cfg.apply(over);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(f) = &o.f {
            self.f = f.clone();
            self.piecewise = None;
        }
        macro_rules! set {
            ($($dst:expr => $src:expr),* $(,)?) => { $( if let Some(v) = $src.clone() { $dst = v; } )* };
        }
        set!(
            self.m => o.m,
            self.n => o.n,
            self.k => o.k,
            self.solver.grid => o.grid,
            self.solver.tol_alpha => o.tol_alpha,
            self.out => o.out,
            self.emit => o.emit,
        );
        if o.p.is_some() {
            self.p = o.p;
        }
        if o.q.is_some() {
            self.q = o.q;
        }
        if o.lambda.is_some() {
            self.lambda = o.lambda;
        }
        if o.alpha_min.is_some() {
            self.solver.alpha_min = o.alpha_min;
        }
        if o.alpha_max.is_some() {
            self.solver.alpha_max = o.alpha_max;
        }
        if let Some(r) = o.r_max {
            // r_start and max_step scale with the horizon
            let i = &mut self.solver.integrator;
            i.r_max = r;
            i.r_start = 1e-6 * r.max(1.0);
            i.max_step = 0.01 * r.max(1.0);
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_operator(self.m, self.n)?;
        self.solver.validate()?;
        if self.solver.grid == 0 {
            bail!("grid must have at least one point");
        }
        let c = &self.checker;
        if !(c.theta > 0.0 && c.theta < 1.0) {
            bail!("checker.theta must lie in (0, 1), got {}", c.theta);
        }
        self.catalog()?;
        Ok(())
    }

    fn catalog(&self) -> Result<Option<CatalogSpec>> {
        if self.piecewise.is_some() {
            return Ok(None);
        }
        let name = self.f.trim();
        if name.contains('(') {
            return Ok(Some(name.parse()?));
        }
        let need = |x: Option<f64>, flag: &str| x.with_context(|| format!("{name} needs --{flag}"));
        let spec = match name {
            "double_power" => CatalogSpec::DoublePower { p: need(self.p, "p")?, q: need(self.q, "q")? },
            "log_critical" => CatalogSpec::LogCritical { lambda: need(self.lambda, "lambda")? },
            other => other.parse()?,
        };
        Ok(Some(spec))
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        let nl = match (&self.piecewise, self.catalog()?) {
            (Some(pw), _) => {
                let def = pw.definition.clone().finalize()?;
                Nonlinearity::from_piecewise(&pw.name, def, self.m, self.n)?
            }
            (None, Some(spec)) => spec.build(self.m, self.n)?,
            (None, None) => unreachable!(),
        };
        Ok(nl.with_search_box(self.search_box.0, self.search_box.1)?)
    }

    pub fn landmarks(&self, nl: &Nonlinearity) -> Result<Landmarks> {
        let lm = find_landmarks(nl, self.search_box)?;
        Ok(match self.beta_bar {
            Some(b) => lm.with_beta_bar(b)?,
            None => lm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let mut cfg = RunConfig::from_toml("f = \"g1\"\nm = 2.0\nN = 3.0\nk = 1\n[solver]\ngrid = 50\n").unwrap();
        assert_eq!(cfg.solver.grid, 50);
        cfg.apply(&Overrides { k: Some(2), grid: Some(10), ..Default::default() });
        assert_eq!((cfg.k, cfg.solver.grid, cfg.f.as_str()), (2, 10, "g1"));
    }

    #[test]
    fn bare_catalog_names_take_parameters() {
        let cfg = RunConfig { f: "double_power".into(), p: Some(4.0), q: Some(2.0), ..Default::default() };
        assert_eq!(cfg.nonlinearity().unwrap().name, "double_power(4,2)");
        let cfg = RunConfig { f: "double_power".into(), ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn operator_constraints() {
        let cfg = RunConfig { m: 1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig { m: 3.0, n: 2.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn piecewise_from_toml() {
        let text = r#"
            m = 2.0
            N = 3.0
            [piecewise]
            name = "cubic"
            symmetry = "odd"
            [[piecewise.pieces]]
            from = 0.0
            terms = [{ coef = 1.0, power = 3.0, odd = true }, { coef = -1.0, power = 1.0, odd = true }]
        "#;
        let cfg = RunConfig::from_toml(text).unwrap();
        cfg.validate().unwrap();
        let nl = cfg.nonlinearity().unwrap();
        assert_eq!(nl.f(2.0), 6.0);
        assert_eq!(nl.f(-2.0), -6.0);
        assert!((nl.primitive(2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn emit_list() {
        let e = Emit::parse_list("csv,gnuplot").unwrap();
        assert!(e.csv && e.gnuplot && !e.json);
        assert!(Emit::parse_list("png").is_err());
    }
}
