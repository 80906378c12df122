//! Named landmark ratios defined by a small expression language.
//!
//! A ratio is `numerator / denominator`, each side a signed sum of terms:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := measure | 'abs' '(' expr ')' | '(' expr ')'
//! measure := ('dist' | 'dx' | 'dy') '(' point ',' point ')' | 'iod'
//! point   := INDEX | 'mid' '(' INDEX ',' INDEX ')'
//! ```
//!
//! `dist` is Euclidean distance, `dx`/`dy` are absolute coordinate
//! differences and `iod` is the distance between the two eye centres.

use crate::data::{LandmarkSet, NUM_LANDMARKS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Index(usize),
    Mid(usize, usize),
}

impl Point {
    fn resolve(self, lm: &LandmarkSet) -> [f64; 2] {
        match self {
            Point::Index(i) => lm.point(i),
            Point::Mid(a, b) => {
                let (p, q) = (lm.point(a), lm.point(b));
                [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    Dist,
    Dx,
    Dy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Measure(MeasureKind, Point, Point),
    Iod,
    Abs(Expr),
    Group(Expr),
}

/// Signed sum of terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    terms: Vec<(f64, Term)>,
}

pub const LEFT_EYE_CENTRE: Point = Point::Mid(36, 39);
pub const RIGHT_EYE_CENTRE: Point = Point::Mid(42, 45);

/// Distance between the two eye centres.
pub fn inter_ocular_distance(lm: &LandmarkSet) -> f64 {
    let a = LEFT_EYE_CENTRE.resolve(lm);
    let b = RIGHT_EYE_CENTRE.resolve(lm);
    (b[0] - a[0]).hypot(b[1] - a[1])
}

impl Expr {
    pub fn eval(&self, lm: &LandmarkSet) -> f64 {
        self.terms.iter().map(|(sign, t)| sign * t.eval(lm)).sum()
    }
}

impl Term {
    fn eval(&self, lm: &LandmarkSet) -> f64 {
        match self {
            Term::Measure(kind, a, b) => {
                let (p, q) = (a.resolve(lm), b.resolve(lm));
                let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
                match kind {
                    MeasureKind::Dist => dx.hypot(dy),
                    MeasureKind::Dx => dx.abs(),
                    MeasureKind::Dy => dy.abs(),
                }
            }
            Term::Iod => inter_ocular_distance(lm),
            Term::Abs(e) => e.eval(lm).abs(),
            Term::Group(e) => e.eval(lm),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioDef {
    pub name: String,
    pub numerator: Expr,
    pub denominator: Expr,
}

impl RatioDef {
    /// Parses `numerator / denominator`.
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut p = Parser::new(text);
        let numerator = p.expr()?;
        p.expect('/')?;
        let denominator = p.expr()?;
        p.end()?;
        Ok(Self {
            name: name.to_string(),
            numerator,
            denominator,
        })
    }

    pub fn eval(&self, lm: &LandmarkSet) -> Result<f64> {
        let iod = inter_ocular_distance(lm);
        let den = self.denominator.eval(lm);
        if den.abs() <= 1e-12 * iod || iod == 0.0 {
            return Err(Error::Geometry(self.name.clone()));
        }
        Ok(self.numerator.eval(lm) / den)
    }
}

/// Evaluates every ratio; fails on the first degenerate denominator.
pub fn named_ratios(lm: &LandmarkSet, defs: &[RatioDef]) -> Result<Vec<f64>> {
    if inter_ocular_distance(lm) == 0.0 {
        return Err(Error::Geometry("inter-ocular distance".into()));
    }
    defs.iter().map(|d| d.eval(lm)).collect()
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Config(format!("{} (at column {} of `{}`)", msg.into(), self.pos + 1, self.src))
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn end(&mut self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(c) => Err(self.err(format!("unexpected `{c}`"))),
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        if len == 0 {
            return None;
        }
        self.pos += len;
        Some(&rest[..len])
    }

    fn index(&mut self) -> Result<usize> {
        let tok = self.ident().ok_or_else(|| self.err("expected landmark index"))?;
        let i: usize = tok.parse().map_err(|_| self.err(format!("bad landmark index `{tok}`")))?;
        if i >= NUM_LANDMARKS {
            return Err(self.err(format!("landmark index {i} out of range")));
        }
        Ok(i)
    }

    fn point(&mut self) -> Result<Point> {
        self.skip_ws();
        if self.src[self.pos..].starts_with("mid") {
            self.pos += 3;
            self.expect('(')?;
            let a = self.index()?;
            self.expect(',')?;
            let b = self.index()?;
            self.expect(')')?;
            Ok(Point::Mid(a, b))
        } else {
            Ok(Point::Index(self.index()?))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![(1.0, self.term()?)];
        loop {
            let sign = match self.peek() {
                Some('+') => 1.0,
                Some('-') => -1.0,
                _ => break,
            };
            self.pos += 1;
            terms.push((sign, self.term()?));
        }
        Ok(Expr { terms })
    }

    fn term(&mut self) -> Result<Term> {
        if self.peek() == Some('(') {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(')')?;
            return Ok(Term::Group(e));
        }
        let word = self.ident().ok_or_else(|| self.err("expected a measure"))?;
        let kind = match word {
            "iod" => return Ok(Term::Iod),
            "abs" => {
                self.expect('(')?;
                let e = self.expr()?;
                self.expect(')')?;
                return Ok(Term::Abs(e));
            }
            "dist" => MeasureKind::Dist,
            "dx" => MeasureKind::Dx,
            "dy" => MeasureKind::Dy,
            other => return Err(self.err(format!("unknown measure `{other}`"))),
        };
        self.expect('(')?;
        let a = self.point()?;
        self.expect(',')?;
        let b = self.point()?;
        self.expect(')')?;
        Ok(Term::Measure(kind, a, b))
    }
}
