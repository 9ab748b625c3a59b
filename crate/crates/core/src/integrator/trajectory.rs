use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::dopri::{dense_eval, Vec2};
use super::{energy_i, pohozaev_e, ShootState, Termination};
use crate::error::{Error, Result};
use crate::nonlinearity::{phi, Nonlinearity};

/// Version tag written into the first comment line of profile CSV files.
pub const CSV_VERSION: &str = "nodal-profile v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// `u = 0`.
    UZero,
    /// `v = 0`, a critical point of `u`.
    VZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub state: ShootState,
}

/// Dense-output polynomial of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub r0: f64,
    pub h: f64,
    pub(super) c: [Vec2; 5],
}

impl Segment {
    pub fn eval(&self, r: f64) -> ShootState {
        let y = dense_eval(&self.c, ((r - self.r0) / self.h).clamp(0.0, 1.0));
        ShootState::new(r, y[0], y[1])
    }

    pub fn r1(&self) -> f64 {
        self.r0 + self.h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub alpha: f64,
    pub m: f64,
    pub n: f64,
    /// Name of the nonlinearity that produced it.
    pub source: String,
    /// Strictly increasing in `r`; located events are included.
    pub samples: Vec<ShootState>,
    pub events: Vec<Event>,
    /// Empty for trajectories rebuilt from samples.
    pub segments: Vec<Segment>,
    pub termination: Termination,
    /// `α - u(r_start)` from the series start.
    pub displacement: f64,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub(super) fn empty(alpha: f64, m: f64, n: f64, source: &str) -> Self {
        Trajectory {
            alpha,
            m,
            n,
            source: source.to_string(),
            samples: Vec::new(),
            events: Vec::new(),
            segments: Vec::new(),
            termination: Termination::ReachedRMax,
            displacement: 0.0,
            steps: 0,
            rejected: 0,
        }
    }

    /// Builds a trajectory from tabulated states. Events are located by
    /// Hermite interpolation for `u` and linear interpolation for `v`.
    pub fn from_samples(
        alpha: f64,
        m: f64,
        n: f64,
        source: &str,
        samples: Vec<ShootState>,
        termination: Termination,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Consistency("trajectory has no samples".into()));
        }
        if samples.windows(2).any(|w| !(w[1].r > w[0].r)) {
            return Err(Error::Consistency("sample radii must be strictly increasing".into()));
        }
        let mut tr = Trajectory::empty(alpha, m, n, source);
        tr.displacement = alpha - samples[0].u;
        tr.samples = samples;
        tr.termination = termination;
        tr.events = tr.scan_events();
        Ok(tr)
    }

    fn scan_events(&self) -> Vec<Event> {
        let mut out = Vec::new();
        for comp in 0..2 {
            let val = |s: &ShootState| if comp == 0 { s.u } else { s.v };
            let mut last: Option<usize> = None;
            for (i, s) in self.samples.iter().enumerate() {
                let x = val(s);
                if x == 0.0 {
                    continue;
                }
                if let Some(j) = last {
                    let prev = val(&self.samples[j]);
                    if prev.signum() != x.signum() {
                        let state = if j + 1 < i {
                            // exact zero samples in between
                            self.samples[j + 1]
                        } else {
                            self.root_between(j, comp)
                        };
                        let kind = if comp == 0 { EventKind::UZero } else { EventKind::VZero };
                        out.push(Event { kind, state });
                    }
                }
                last = Some(i);
            }
        }
        out.sort_by(|a, b| a.state.r.partial_cmp(&b.state.r).unwrap());
        out
    }

    fn root_between(&self, j: usize, comp: usize) -> ShootState {
        let (a, b) = (self.samples[j], self.samples[j + 1]);
        let target = |r: f64| {
            let s = self.interpolate(j, r);
            if comp == 0 {
                s.u
            } else {
                s.v
            }
        };
        let r = crate::roots::bisect_root(target, a.r, b.r, 1e-15);
        self.interpolate(j, r)
    }

    /// Cubic Hermite for `u` (slopes from `v`), linear for `v`, on sample
    /// interval `j`.
    fn interpolate(&self, j: usize, r: f64) -> ShootState {
        let (a, b) = (self.samples[j], self.samples[j + 1]);
        let h = b.r - a.r;
        let t = (r - a.r) / h;
        let (d0, d1) = (a.uprime(self.m) * h, b.uprime(self.m) * h);
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        let u = h00 * a.u + h10 * d0 + h01 * b.u + h11 * d1;
        let v = a.v + t * (b.v - a.v);
        ShootState::new(r, u, v)
    }

    pub fn r_start(&self) -> f64 {
        self.samples[0].r
    }

    pub fn r_end(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.r)
    }

    pub fn end(&self) -> ShootState {
        *self.samples.last().expect("trajectory has samples")
    }

    /// State at `r` inside `[r_start, r_end]` from dense output, or from
    /// sample interpolation when no dense output is stored.
    pub fn state_at(&self, r: f64) -> Option<ShootState> {
        if !(r >= self.r_start() && r <= self.r_end()) {
            return None;
        }
        if !self.segments.is_empty() {
            let k = self.segments.partition_point(|s| s.r0 <= r).max(1) - 1;
            return Some(self.segments[k].eval(r));
        }
        let j = self.samples.partition_point(|s| s.r <= r).max(1) - 1;
        if j + 1 >= self.samples.len() {
            return Some(self.end());
        }
        Some(self.interpolate(j, r))
    }

    pub fn zeros(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.kind == EventKind::UZero)
    }

    pub fn max_abs_uprime(&self) -> f64 {
        let mp = self.m / (self.m - 1.0);
        self.samples.iter().map(|s| phi(s.v, mp).abs()).fold(0.0, f64::max)
    }

    /// Copy restricted to `[r_start, r_cut]`, ending with the state at `r_cut`.
    pub fn truncated(&self, r_cut: f64) -> Trajectory {
        let mut out = self.clone();
        if r_cut >= self.r_end() {
            return out;
        }
        let end = self.state_at(r_cut).unwrap_or(self.samples[0]);
        out.samples.retain(|s| s.r < r_cut);
        if out.samples.is_empty() || end.r > out.r_end() {
            out.samples.push(end);
        }
        out.events.retain(|e| e.state.r <= r_cut);
        out.segments.retain(|s| s.r0 < r_cut);
        out
    }

    /// Writes `r,u,uprime,v,I,E` rows under a versioned comment header.
    pub fn write_csv<W: Write>(&self, nl: &Nonlinearity, w: W) -> Result<()> {
        let mut w = std::io::BufWriter::new(w);
        let io = |e: std::io::Error| Error::Parse(e.to_string());
        writeln!(w, "# {CSV_VERSION}").map_err(io)?;
        writeln!(
            w,
            "# alpha={:e} m={:e} N={:e} f={} termination={}",
            self.alpha,
            self.m,
            self.n,
            self.source.replace(char::is_whitespace, "_"),
            self.termination
        )
        .map_err(io)?;
        {
            let mut cw = csv::Writer::from_writer(&mut w);
            let csv_err = |e: csv::Error| Error::Parse(e.to_string());
            cw.write_record(["r", "u", "uprime", "v", "I", "E"]).map_err(csv_err)?;
            for s in &self.samples {
                let row = [s.r, s.u, s.uprime(self.m), s.v, energy_i(nl, s), pohozaev_e(nl, s)];
                cw.write_record(row.iter().map(|x| format!("{x:e}"))).map_err(csv_err)?;
            }
            cw.flush().map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_csv<R: Read>(mut r: R) -> Result<ProfileCsv> {
        let mut text = String::new();
        r.read_to_string(&mut text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut lines = text.lines();
        let version = lines.next().unwrap_or("");
        if version.trim_start_matches('#').trim() != CSV_VERSION {
            return Err(Error::Parse(format!("unsupported profile header {version:?}")));
        }
        let meta = lines.next().unwrap_or("").trim_start_matches('#');
        let (mut alpha, mut m, mut n, mut source, mut term) = (None, None, None, None, None);
        for kv in meta.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("malformed header field {kv:?}")))?;
            let num = || v.parse::<f64>().map_err(|e| Error::Parse(format!("{k}: {e}")));
            match k {
                "alpha" => alpha = Some(num()?),
                "m" => m = Some(num()?),
                "N" => n = Some(num()?),
                "f" => source = Some(v.to_string()),
                "termination" => term = Some(v.parse::<Termination>()?),
                _ => {}
            }
        }
        let missing = |what: &str| Error::Parse(format!("profile header lacks {what}"));
        let alpha = alpha.ok_or_else(|| missing("alpha"))?;
        let m = m.ok_or_else(|| missing("m"))?;
        let n = n.ok_or_else(|| missing("N"))?;
        let source = source.ok_or_else(|| missing("f"))?;
        let termination = term.ok_or_else(|| missing("termination"))?;

        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let mut samples = Vec::new();
        let mut energy = Vec::new();
        let mut pohozaev = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|x| x.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{x:?}: {e}"))))
                .collect::<Result<_>>()?;
            if vals.len() != 6 {
                return Err(Error::Parse(format!("expected 6 columns, found {}", vals.len())));
            }
            samples.push(ShootState::new(vals[0], vals[1], vals[3]));
            energy.push(vals[4]);
            pohozaev.push(vals[5]);
        }
        let trajectory = Trajectory::from_samples(alpha, m, n, &source, samples, termination)?;
        Ok(ProfileCsv {
            trajectory,
            energy,
            pohozaev,
        })
    }
}

/// A profile CSV read back from disk.
#[derive(Debug, Clone)]
pub struct ProfileCsv {
    pub trajectory: Trajectory,
    /// The `I` column as written.
    pub energy: Vec<f64>,
    /// The `E` column as written.
    pub pohozaev: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cosine() -> Trajectory {
        let samples: Vec<ShootState> = (0..=10_000)
            .map(|i| {
                let r = i as f64 * 1e-3;
                ShootState::new(r, r.cos(), -r.sin())
            })
            .collect();
        Trajectory::from_samples(1.0, 2.0, 3.0, "cos", samples, Termination::ReachedRMax).unwrap()
    }

    #[test]
    fn cosine_events() {
        let tr = cosine();
        let zeros: Vec<f64> = tr.zeros().map(|e| e.state.r).collect();
        let turns: Vec<f64> = tr
            .events
            .iter()
            .filter(|e| e.kind == EventKind::VZero)
            .map(|e| e.state.r)
            .collect();
        assert_eq!(zeros.len(), 3);
        assert_eq!(turns.len(), 3);
        for (k, z) in zeros.iter().enumerate() {
            assert!((z - (k as f64 + 0.5) * PI).abs() < 1e-9, "{z}");
        }
        for (k, t) in turns.iter().enumerate() {
            assert!((t - (k as f64 + 1.0) * PI).abs() < 1e-6, "{t}");
        }
    }

    #[test]
    fn rejects_non_increasing_radii() {
        let s = vec![ShootState::new(1.0, 0.0, 0.0), ShootState::new(1.0, 0.0, 0.0)];
        assert!(Trajectory::from_samples(1.0, 2.0, 3.0, "x", s, Termination::ReachedRMax).is_err());
    }

    #[test]
    fn truncation_keeps_prefix() {
        let tr = cosine().truncated(4.0);
        assert_eq!(tr.r_end(), 4.0);
        assert_eq!(tr.zeros().count(), 1);
    }
}
