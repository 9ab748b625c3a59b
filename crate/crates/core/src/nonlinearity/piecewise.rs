//! Piecewise nonlinearities built from power/log terms.
//!
//! A definition is a list of pieces, each starting at a breakpoint (closed on
//! the left) and running to the next breakpoint. A term evaluates to
//!
//! ```text
//! coef * |x - shift|^power * [sgn(x - shift) if odd] * ln|x - shift|^log_power
//! ```
//!
//! Pieces without log factors have closed-form primitives; the rest fall back
//! to adaptive quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

fn default_power() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    #[serde(default = "default_power")]
    pub power: f64,
    #[serde(default)]
    pub shift: f64,
    /// Multiply by `sgn(x - shift)`, i.e. `|y|^p sgn y` instead of `|y|^p`.
    #[serde(default)]
    pub odd: bool,
    #[serde(default)]
    pub log_power: f64,
}

impl Term {
    pub fn new(coef: f64, power: f64) -> Self {
        Term {
            coef,
            power,
            shift: 0.0,
            odd: false,
            log_power: 0.0,
        }
    }

    /// `coef * |x|^power * sgn(x)`.
    pub fn odd(coef: f64, power: f64) -> Self {
        Term {
            odd: true,
            ..Term::new(coef, power)
        }
    }

    pub fn shifted(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_log(mut self, log_power: f64) -> Self {
        self.log_power = log_power;
        self
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let y = x - self.shift;
        let a = y.abs();
        let mut v = if self.power == 0.0 {
            1.0
        } else if self.power == 1.0 {
            a
        } else if self.power == 2.0 {
            a * a
        } else if self.power == 3.0 {
            a * a * a
        } else {
            a.powf(self.power)
        };
        if self.odd {
            v *= sgn(y);
        }
        if self.log_power != 0.0 {
            v *= a.ln().powf(self.log_power);
        }
        self.coef * v
    }

    fn has_closed_primitive(&self) -> bool {
        self.log_power == 0.0
    }

    /// An antiderivative valid on any interval not containing `shift` (and
    /// through `shift` when `power > -1`).
    fn primitive(&self, x: f64) -> f64 {
        let y = x - self.shift;
        let a = y.abs();
        let p1 = self.power + 1.0;
        let g = if p1 == 0.0 { a.ln() } else { a.powf(p1) / p1 };
        let g = if self.odd { g } else { sgn(y) * g };
        self.coef * g
    }
}

#[inline]
fn sgn(y: f64) -> f64 {
    if y > 0.0 {
        1.0
    } else if y < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    /// Left breakpoint; the piece covers `[from, next.from)`.
    pub from: f64,
    pub terms: Vec<Term>,
}

impl Piece {
    pub fn new(from: f64, terms: Vec<Term>) -> Self {
        Piece { from, terms }
    }

    #[inline]
    fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    fn closed_form(&self) -> bool {
        self.terms.iter().all(Term::has_closed_primitive)
    }

    fn integral(&self, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        if self.closed_form() {
            Ok(self.terms.iter().map(|t| t.primitive(b) - t.primitive(a)).sum())
        } else {
            quadrature::integrate(|t| self.eval(t), a, b, quadrature::ABS_TOL).into_result(quadrature::ABS_TOL)
        }
    }

    fn integral_estimate(&self, a: f64, b: f64) -> f64 {
        if self.closed_form() {
            self.terms.iter().map(|t| t.primitive(b) - t.primitive(a)).sum()
        } else {
            quadrature::integrate(|t| self.eval(t), a, b, quadrature::ABS_TOL).value
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    #[default]
    None,
    /// Pieces describe `[0, ∞)`; `f(-x) = -f(x)`.
    Odd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piecewise {
    pub pieces: Vec<Piece>,
    #[serde(default)]
    pub symmetry: Symmetry,
    /// Primitive at the boundary of each piece nearest to the origin.
    #[serde(skip)]
    anchors: Vec<f64>,
    /// Cumulative integrals at doubling nodes for quadrature-backed pieces.
    #[serde(skip)]
    tables: Vec<Option<Table>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
struct Table {
    nodes: Vec<f64>,
    cum: Vec<f64>,
}

impl Table {
    fn build(piece: &Piece, base: f64, end: f64) -> Table {
        let mut nodes = vec![base];
        let mut cum = vec![0.0];
        let mut x = base;
        let mut acc = 0.0;
        loop {
            let next = 2.0 * x;
            if next.abs() >= end.abs() || next.abs() > 1e300 {
                break;
            }
            match piece.integral(x, next) {
                Ok(v) if (acc + v).is_finite() => acc += v,
                _ => break,
            }
            nodes.push(next);
            cum.push(acc);
            x = next;
        }
        Table { nodes, cum }
    }

    /// Largest node between the base and `x`, with its cumulative integral.
    fn floor(&self, x: f64) -> (f64, f64) {
        let k = self.nodes.partition_point(|n| n.abs() <= x.abs()).max(1) - 1;
        (self.nodes[k], self.cum[k])
    }
}

impl Piecewise {
    pub fn new(mut pieces: Vec<Piece>, symmetry: Symmetry) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Config("piecewise definition has no pieces".into()));
        }
        pieces.sort_by(|a, b| a.from.partial_cmp(&b.from).expect("NaN breakpoint"));
        if pieces.windows(2).any(|w| w[0].from == w[1].from) {
            return Err(Error::Config("duplicate breakpoint".into()));
        }
        if symmetry == Symmetry::Odd && pieces[0].from != 0.0 {
            return Err(Error::Config("odd definitions must start at 0".into()));
        }
        if pieces[0].from > 0.0 {
            return Err(Error::Config("definition must cover the origin".into()));
        }
        let mut pw = Piecewise {
            pieces,
            symmetry,
            anchors: Vec::new(),
            tables: Vec::new(),
        };
        pw.anchors = pw.compute_anchors()?;
        pw.tables = pw.build_tables();
        Ok(pw)
    }

    /// Rebuilds cached anchors after deserialization.
    pub fn finalize(self) -> Result<Self> {
        Piecewise::new(self.pieces, self.symmetry)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let pos: Vec<f64> = self.pieces.iter().map(|p| p.from).filter(|b| b.is_finite()).collect();
        match self.symmetry {
            Symmetry::None => pos,
            Symmetry::Odd => {
                let mut all: Vec<f64> = pos.iter().filter(|b| **b > 0.0).map(|b| -b).collect();
                all.extend(pos);
                all.sort_by(|a, b| a.partial_cmp(b).unwrap());
                all
            }
        }
    }

    /// Lowest point covered by the definition.
    pub fn lower_limit(&self) -> f64 {
        match self.symmetry {
            Symmetry::None => self.pieces[0].from,
            Symmetry::Odd => f64::NEG_INFINITY,
        }
    }

    fn origin_piece(&self) -> usize {
        self.index(0.0).expect("definition covers the origin")
    }

    #[inline]
    fn index(&self, x: f64) -> Option<usize> {
        if x < self.pieces[0].from {
            return None;
        }
        let mut i = 0;
        while i + 1 < self.pieces.len() && self.pieces[i + 1].from <= x {
            i += 1;
        }
        Some(i)
    }

    fn upper(&self, i: usize) -> f64 {
        self.pieces.get(i + 1).map_or(f64::INFINITY, |p| p.from)
    }

    fn compute_anchors(&self) -> Result<Vec<f64>> {
        let j = self.origin_piece();
        let n = self.pieces.len();
        let mut anchors = vec![0.0; n];
        // right of the origin piece: F at each left breakpoint
        let mut acc = 0.0;
        let mut left = 0.0;
        for i in j..n {
            if i > j {
                anchors[i] = acc;
                left = self.pieces[i].from;
            }
            let right = self.upper(i);
            if right.is_finite() {
                acc += self.pieces[i].integral(left, right)?;
            }
        }
        // left of the origin piece: F at each right breakpoint
        let mut acc = 0.0;
        let mut right = 0.0;
        for i in (0..j).rev() {
            let edge = self.upper(i);
            acc -= self.pieces[i + 1].integral(edge, right)?;
            anchors[i] = acc;
            right = edge;
        }
        Ok(anchors)
    }

    fn build_tables(&self) -> Vec<Option<Table>> {
        let j = self.origin_piece();
        (0..self.pieces.len())
            .map(|i| {
                let piece = &self.pieces[i];
                let (base, end) = match i.cmp(&j) {
                    std::cmp::Ordering::Greater => (piece.from, self.upper(i)),
                    std::cmp::Ordering::Less => (self.upper(i), piece.from),
                    std::cmp::Ordering::Equal => return None,
                };
                if piece.closed_form() || base == 0.0 || !base.is_finite() || (end / base).abs() <= 4.0 {
                    return None;
                }
                Some(Table::build(piece, base, end))
            })
            .collect()
    }

    /// Evaluates the piece containing `x`; `None` below the lowest breakpoint.
    #[inline]
    pub fn f(&self, x: f64) -> Option<f64> {
        match self.symmetry {
            Symmetry::None => self.index(x).map(|i| self.pieces[i].eval(x)),
            Symmetry::Odd => {
                let a = x.abs();
                self.index(a).map(|i| sgn_nonzero(x) * self.pieces[i].eval(a))
            }
        }
    }

    fn primitive_with<I>(&self, x: f64, integral: I) -> Option<std::result::Result<f64, Error>>
    where
        I: Fn(&Piece, f64, f64) -> Result<f64>,
    {
        let x = match self.symmetry {
            Symmetry::None => x,
            Symmetry::Odd => x.abs(),
        };
        let i = self.index(x)?;
        let j = self.origin_piece();
        let piece = &self.pieces[i];
        if i == j {
            return Some(integral(piece, 0.0, x));
        }
        let base = if i > j { piece.from } else { self.upper(i) };
        let (start, cum) = match &self.tables[i] {
            Some(t) => t.floor(x),
            None => (base, 0.0),
        };
        Some(integral(piece, start, x).map(|v| self.anchors[i] + cum + v))
    }

    /// `∫_0^x f`, or `None` outside the definition.
    pub fn primitive(&self, x: f64) -> Option<Result<f64>> {
        self.primitive_with(x, |p, a, b| p.integral(a, b))
    }

    /// Best estimate of the primitive even when quadrature hits its cap.
    pub fn primitive_estimate(&self, x: f64) -> Option<f64> {
        self.primitive_with(x, |p, a, b| Ok(p.integral_estimate(a, b)))
            .map(|r| r.expect("estimate is infallible"))
    }
}

#[inline]
fn sgn_nonzero(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}
