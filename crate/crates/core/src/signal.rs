//! Declarative real-valued functions of time.
//!
//! Text form, as used in scenario files:
//!
//! ```text
//! constant(0.1)
//! linear(offset=0.2, slope=0.2)
//! quadratic(c0=0.3, c1=0, c2=0.3)
//! cosine(amplitude=2, omega=20, phase=0) + constant(0.1)
//! 0.25
//! ```
//!
//! A bare number is a constant. Terms are joined with `+`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum DriveSignal {
    Constant(f64),
    /// `offset + slope·t`
    Linear {
        offset: f64,
        slope: f64,
    },
    /// `c0 + c1·t + c2·t²`
    Quadratic {
        c0: f64,
        c1: f64,
        c2: f64,
    },
    /// `amplitude·cos(omega·t + phase)`
    Cosine {
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    Sum(Vec<DriveSignal>),
}

impl Default for DriveSignal {
    fn default() -> Self {
        DriveSignal::Constant(0.0)
    }
}

impl From<f64> for DriveSignal {
    fn from(v: f64) -> Self {
        DriveSignal::Constant(v)
    }
}

impl DriveSignal {
    pub fn constant(v: f64) -> Self {
        DriveSignal::Constant(v)
    }

    pub fn linear(offset: f64, slope: f64) -> Self {
        DriveSignal::Linear { offset, slope }
    }

    pub fn quadratic(c0: f64, c1: f64, c2: f64) -> Self {
        DriveSignal::Quadratic { c0, c1, c2 }
    }

    pub fn cosine(amplitude: f64, omega: f64, phase: f64) -> Self {
        DriveSignal::Cosine {
            amplitude,
            omega,
            phase,
        }
    }

    /// Flattened sum. A single term is returned unwrapped.
    pub fn sum(terms: Vec<DriveSignal>) -> Result<Self> {
        let mut flat = Vec::with_capacity(terms.len());
        for t in terms {
            match t {
                DriveSignal::Sum(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Err(Error::InvalidParameter(
                "a sum signal needs at least one term".into(),
            )),
            1 => Ok(flat.pop().expect("one term")),
            _ => Ok(DriveSignal::Sum(flat)),
        }
    }

    /// `self + other`, flattened.
    pub fn plus(&self, other: &DriveSignal) -> DriveSignal {
        DriveSignal::sum(vec![self.clone(), other.clone()]).expect("two terms")
    }

    /// Checks coefficient finiteness and that sums are non-empty.
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "non-finite signal coefficient {v}"
                )))
            }
        };
        match self {
            DriveSignal::Constant(v) => ok(*v),
            DriveSignal::Linear { offset, slope } => ok(*offset).and(ok(*slope)),
            DriveSignal::Quadratic { c0, c1, c2 } => ok(*c0).and(ok(*c1)).and(ok(*c2)),
            DriveSignal::Cosine {
                amplitude,
                omega,
                phase,
            } => ok(*amplitude).and(ok(*omega)).and(ok(*phase)),
            DriveSignal::Sum(terms) => {
                if terms.is_empty() {
                    return Err(Error::InvalidParameter(
                        "a sum signal needs at least one term".into(),
                    ));
                }
                terms.iter().try_for_each(|t| t.validate())
            }
        }
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        match self {
            DriveSignal::Constant(v) => *v,
            DriveSignal::Linear { offset, slope } => offset + slope * t,
            DriveSignal::Quadratic { c0, c1, c2 } => c0 + t * (c1 + t * c2),
            DriveSignal::Cosine {
                amplitude,
                omega,
                phase,
            } => amplitude * (omega * t + phase).cos(),
            DriveSignal::Sum(terms) => terms.iter().map(|s| s.evaluate(t)).sum(),
        }
    }

    /// Exact `∫_{t0}^{t1} s(t) dt`.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        let dt = t1 - t0;
        match self {
            DriveSignal::Constant(v) => v * dt,
            DriveSignal::Linear { offset, slope } => offset * dt + 0.5 * slope * dt * (t0 + t1),
            DriveSignal::Quadratic { c0, c1, c2 } => {
                c0 * dt + 0.5 * c1 * dt * (t0 + t1) + c2 * dt * (t0 * t0 + t0 * t1 + t1 * t1) / 3.0
            }
            DriveSignal::Cosine {
                amplitude,
                omega,
                phase,
            } => {
                if *omega == 0.0 {
                    amplitude * phase.cos() * dt
                } else {
                    // sin(b) − sin(a) = 2 cos((a+b)/2) sin((b−a)/2)
                    let mid = omega * 0.5 * (t0 + t1) + phase;
                    2.0 * amplitude / omega * mid.cos() * (0.5 * omega * dt).sin()
                }
            }
            DriveSignal::Sum(terms) => terms.iter().map(|s| s.integral(t0, t1)).sum(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            DriveSignal::Constant(_) => true,
            DriveSignal::Linear { slope, .. } => *slope == 0.0,
            DriveSignal::Quadratic { c1, c2, .. } => *c1 == 0.0 && *c2 == 0.0,
            DriveSignal::Cosine {
                amplitude, omega, ..
            } => *amplitude == 0.0 || *omega == 0.0,
            DriveSignal::Sum(terms) => terms.iter().all(DriveSignal::is_constant),
        }
    }

    /// Minimum over `samples` evenly spaced points of `[t0, t1]`.
    pub fn sampled_min(&self, t0: f64, t1: f64, samples: usize) -> f64 {
        let n = samples.max(2);
        (0..n)
            .map(|k| self.evaluate(t0 + (t1 - t0) * k as f64 / (n - 1) as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for DriveSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriveSignal::Constant(v) => write!(f, "constant({v:?})"),
            DriveSignal::Linear { offset, slope } => {
                write!(f, "linear(offset={offset:?}, slope={slope:?})")
            }
            DriveSignal::Quadratic { c0, c1, c2 } => {
                write!(f, "quadratic(c0={c0:?}, c1={c1:?}, c2={c2:?})")
            }
            DriveSignal::Cosine {
                amplitude,
                omega,
                phase,
            } => {
                write!(
                    f,
                    "cosine(amplitude={amplitude:?}, omega={omega:?}, phase={phase:?})"
                )
            }
            DriveSignal::Sum(terms) => {
                for (k, t) in terms.iter().enumerate() {
                    if k > 0 {
                        f.write_str(" + ")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
        }
    }
}

/// Error from parsing the text form, with a byte offset into the input.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalParseError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for SignalParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at offset {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for SignalParseError {}

impl FromStr for DriveSignal {
    type Err = SignalParseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let mut p = Parser { src: s, pos: 0 };
        let mut terms = vec![p.term()?];
        loop {
            p.skip_ws();
            if p.eat('+') {
                terms.push(p.term()?);
            } else {
                break;
            }
        }
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.err("unexpected trailing input"));
        }
        DriveSignal::sum(terms).map_err(|e| p.err(&e.to_string()))
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> SignalParseError {
        SignalParseError {
            offset: self.pos,
            message: msg.to_string(),
        }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, ch: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(ch) {
            self.pos += ch.len_utf8();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.rest().len());
        let word = self.rest()[..len].to_string();
        if len == 0 || !word.starts_with(|c: char| c.is_ascii_alphabetic()) {
            return None;
        }
        self.pos += len;
        Some(word)
    }

    fn number(&mut self) -> std::result::Result<f64, SignalParseError> {
        self.skip_ws();
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-')))
            .unwrap_or(self.rest().len());
        // a '+' right after a complete number separates terms
        let mut end = len;
        let text = &self.rest()[..len];
        for (i, ch) in text.char_indices().skip(1) {
            if ch == '+' || ch == '-' {
                let prev = text.as_bytes()[i - 1];
                if prev != b'e' && prev != b'E' {
                    end = i;
                    break;
                }
            }
        }
        let text = &self.rest()[..end];
        let v: f64 = text
            .parse()
            .map_err(|_| self.err(&format!("invalid number '{text}'")))?;
        if !v.is_finite() {
            return Err(self.err("non-finite number"));
        }
        self.pos += end;
        Ok(v)
    }

    fn term(&mut self) -> std::result::Result<DriveSignal, SignalParseError> {
        self.skip_ws();
        let start = self.pos;
        let Some(name) = self.ident() else {
            return Ok(DriveSignal::Constant(self.number()?));
        };
        if !self.eat('(') {
            return Err(self.err("expected '('"));
        }
        let mut positional = Vec::new();
        let mut named: Vec<(String, f64)> = Vec::new();
        if !self.eat(')') {
            loop {
                let save = self.pos;
                match self.ident() {
                    Some(key) if self.eat('=') => {
                        let v = self.number()?;
                        if named.iter().any(|(k, _)| *k == key) {
                            return Err(self.err(&format!("duplicate argument '{key}'")));
                        }
                        named.push((key, v));
                    }
                    _ => {
                        self.pos = save;
                        positional.push(self.number()?);
                    }
                }
                if self.eat(')') {
                    break;
                }
                if !self.eat(',') {
                    return Err(self.err("expected ',' or ')'"));
                }
            }
        }
        let keys: &[&str] = match name.as_str() {
            "constant" => &["value"],
            "linear" => &["offset", "slope"],
            "quadratic" => &["c0", "c1", "c2"],
            "cosine" => &["amplitude", "omega", "phase"],
            other => {
                self.pos = start;
                return Err(self.err(&format!("unknown signal kind '{other}'")));
            }
        };
        if positional.len() > keys.len() {
            return Err(self.err(&format!("too many arguments for '{name}'")));
        }
        let mut vals: Vec<Option<f64>> = keys.iter().map(|_| None).collect();
        for (i, v) in positional.into_iter().enumerate() {
            vals[i] = Some(v);
        }
        for (k, v) in named {
            let Some(i) = keys.iter().position(|kk| *kk == k) else {
                return Err(self.err(&format!("unknown argument '{k}' for '{name}'")));
            };
            if vals[i].is_some() {
                return Err(self.err(&format!("argument '{k}' given twice")));
            }
            vals[i] = Some(v);
        }
        // omitted phase defaults to zero, everything else is required
        let get = |i: usize| -> std::result::Result<f64, SignalParseError> {
            match vals[i] {
                Some(v) => Ok(v),
                None if name == "cosine" && keys[i] == "phase" => Ok(0.0),
                None => Err(self.err(&format!("missing argument '{}' for '{name}'", keys[i]))),
            }
        };
        Ok(match name.as_str() {
            "constant" => DriveSignal::Constant(get(0)?),
            "linear" => DriveSignal::Linear {
                offset: get(0)?,
                slope: get(1)?,
            },
            "quadratic" => DriveSignal::Quadratic {
                c0: get(0)?,
                c1: get(1)?,
                c2: get(2)?,
            },
            _ => DriveSignal::Cosine {
                amplitude: get(0)?,
                omega: get(1)?,
                phase: get(2)?,
            },
        })
    }
}
