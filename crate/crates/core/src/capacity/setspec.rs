//! Finite, enumerable index sets and their textual form.
//!
//! ```text
//! list:3,7,15
//! mersenne:mmax=20
//! B:p=2..16,s=log2
//! b:p=2..16,s=log2
//! pred:range=1..65536,nu>=3
//! ```
//!
//! Ranges are inclusive on both ends. The grammar is case-sensitive and admits no
//! whitespace.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dyadic block index a family may reach (`L_p` must fit in a `u64`).
pub const MAX_P: u32 = 63;

/// The threshold `s_p` as a function of the block index `p`, always clamped to `0..=p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SFunction {
    Const(u32),
    /// `ceil(a * p + b)`
    Linear {
        a: f64,
        b: f64,
    },
    /// `ceil(log2 p)`
    Log2,
    /// `ceil(sqrt p)`
    Sqrt,
}

impl SFunction {
    pub fn eval(&self, p: u32) -> u32 {
        let raw: i64 = match *self {
            SFunction::Const(c) => c as i64,
            SFunction::Linear { a, b } => {
                let v = (a * p as f64 + b).ceil();
                if v.is_nan() {
                    0
                } else {
                    v.clamp(i64::MIN as f64, i64::MAX as f64) as i64
                }
            }
            SFunction::Log2 => ceil_log2(p) as i64,
            SFunction::Sqrt => ceil_sqrt(p) as i64,
        };
        raw.clamp(0, p as i64) as u32
    }
}

fn ceil_log2(p: u32) -> u32 {
    if p <= 1 {
        0
    } else {
        32 - (p - 1).leading_zeros()
    }
}

fn ceil_sqrt(p: u32) -> u32 {
    let r = p.isqrt();
    if r * r == p {
        r
    } else {
        r + 1
    }
}

impl fmt::Display for SFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SFunction::Const(c) => write!(f, "{c}"),
            SFunction::Log2 => write!(f, "log2"),
            SFunction::Sqrt => write!(f, "sqrt"),
            SFunction::Linear { a, b } if b < 0.0 => write!(f, "{a}*p-{}", -b),
            SFunction::Linear { a, b } => write!(f, "{a}*p+{b}"),
        }
    }
}

type PredicateCtor = fn(u32) -> Predicate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Predicate {
    NuAtLeast(u32),
    NuAtMost(u32),
    BAtLeast(u32),
    BAtMost(u32),
    Even,
    Odd,
    PowerOfTwo,
    All,
}

impl Predicate {
    pub fn holds(&self, k: u64) -> bool {
        match *self {
            Predicate::NuAtLeast(t) => k.trailing_ones() >= t,
            Predicate::NuAtMost(t) => k.trailing_ones() <= t,
            Predicate::BAtLeast(t) => k.count_ones() >= t,
            Predicate::BAtMost(t) => k.count_ones() <= t,
            Predicate::Even => k.is_multiple_of(2),
            Predicate::Odd => k % 2 == 1,
            Predicate::PowerOfTwo => k.is_power_of_two(),
            Predicate::All => true,
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Predicate::NuAtLeast(t) => write!(f, "nu>={t}"),
            Predicate::NuAtMost(t) => write!(f, "nu<={t}"),
            Predicate::BAtLeast(t) => write!(f, "b>={t}"),
            Predicate::BAtMost(t) => write!(f, "b<={t}"),
            Predicate::Even => write!(f, "even"),
            Predicate::Odd => write!(f, "odd"),
            Predicate::PowerOfTwo => write!(f, "pow2"),
            Predicate::All => write!(f, "all"),
        }
    }
}

/// Which per-element quantity a family union thresholds on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    /// `B_p(s) = {k in L_p : nu(k) >= s}`
    TrailingOnes,
    /// `b_p(s) = {k in L_p : b(k) >= s}`
    DigitSum,
}

/// A finite subset of `{1, 2, 3, ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum IndexSetSpec {
    /// Sorted, duplicate-free, no zero.
    ExplicitList(Vec<u64>),
    /// `{2^m - 1 : 1 <= m <= m_max}`
    Mersenne { m_max: u32 },
    /// Union over `p_min..=p_max` of `B_p(s_p)` or `b_p(s_p)`.
    FamilyUnion {
        kind: FamilyKind,
        p_min: u32,
        p_max: u32,
        s: SFunction,
    },
    /// `{k in lo..=hi : predicate(k)}`
    PredicateOnRange {
        lo: u64,
        hi: u64,
        predicate: Predicate,
    },
}

/// Members of the dyadic block `L_p = [2^(p-1), 2^p)`.
pub fn dyadic_block(p: u32) -> std::ops::Range<u64> {
    debug_assert!((1..=MAX_P).contains(&p));
    (1u64 << (p - 1))..(1u64 << p)
}

/// `B_p(s)` in increasing order, generated without scanning `L_p`.
pub(crate) fn trailing_ones_slice(p: u32, s: u32) -> impl Iterator<Item = u64> {
    // Members are 1 (free bits) 1...1 with s low ones; s = p and s = p - 1 both give 2^p - 1.
    let s = s.min(p - 1);
    let top = 1u64 << (p - 1);
    let low = (1u64 << s) - 1;
    let free = p - 1 - s;
    (0..(1u64 << free)).map(move |x| top | (x << s) | low)
}

pub(crate) fn digit_sum_slice(p: u32, s: u32) -> impl Iterator<Item = u64> {
    let start = 1u64 << (p - 1);
    let end = start + (start - 1);
    (start..=end).filter(move |k| k.count_ones() >= s)
}

impl IndexSetSpec {
    pub fn explicit(mut members: Vec<u64>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.first() == Some(&0) {
            return Err(Error::Domain(
                "index sets live in {1, 2, ...}; 0 is not allowed".into(),
            ));
        }
        Ok(IndexSetSpec::ExplicitList(members))
    }

    pub fn mersenne(m_max: u32) -> Result<Self> {
        if m_max > 64 {
            return Err(Error::Domain(format!("mmax = {m_max} exceeds 64")));
        }
        Ok(IndexSetSpec::Mersenne { m_max })
    }

    pub fn family(kind: FamilyKind, p_min: u32, p_max: u32, s: SFunction) -> Result<Self> {
        if p_min < 2 || p_max > MAX_P || p_min > p_max {
            return Err(Error::Domain(format!(
                "family range p = {p_min}..{p_max} must satisfy 2 <= p_min <= p_max <= {MAX_P}"
            )));
        }
        Ok(IndexSetSpec::FamilyUnion {
            kind,
            p_min,
            p_max,
            s,
        })
    }

    pub fn predicate(lo: u64, hi: u64, predicate: Predicate) -> Result<Self> {
        if lo == 0 || lo > hi {
            return Err(Error::Domain(format!(
                "predicate range {lo}..{hi} must satisfy 1 <= lo <= hi"
            )));
        }
        Ok(IndexSetSpec::PredicateOnRange { lo, hi, predicate })
    }

    /// Members in strictly increasing order.
    pub fn iter(&self) -> Box<dyn Iterator<Item = u64> + Send + '_> {
        match self {
            IndexSetSpec::ExplicitList(v) => Box::new(v.iter().copied()),
            IndexSetSpec::Mersenne { m_max } => {
                Box::new((1..=*m_max).map(|m| if m == 64 { u64::MAX } else { (1u64 << m) - 1 }))
            }
            IndexSetSpec::FamilyUnion {
                kind,
                p_min,
                p_max,
                s,
            } => {
                let (kind, s) = (*kind, *s);
                Box::new((*p_min..=*p_max).flat_map(move |p| slice(kind, p, s.eval(p))))
            }
            IndexSetSpec::PredicateOnRange { lo, hi, predicate } => {
                let predicate = *predicate;
                Box::new((*lo..=*hi).filter(move |&k| predicate.holds(k)))
            }
        }
    }

    pub fn members(&self) -> Vec<u64> {
        self.iter().collect()
    }

    pub fn contains_zero(&self) -> bool {
        matches!(self, IndexSetSpec::ExplicitList(v) if v.first() == Some(&0))
            || matches!(self, IndexSetSpec::PredicateOnRange { lo: 0, .. })
    }

    pub fn parse(input: &str) -> Result<Self> {
        Parser::new(input).parse_set()
    }
}

/// One slice of a family union, `B_p(s)` or `b_p(s)`, boxed so both kinds share a type.
pub(crate) fn slice(kind: FamilyKind, p: u32, s: u32) -> Box<dyn Iterator<Item = u64> + Send> {
    match kind {
        FamilyKind::TrailingOnes => Box::new(trailing_ones_slice(p, s)),
        FamilyKind::DigitSum => Box::new(digit_sum_slice(p, s)),
    }
}

impl fmt::Display for IndexSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSetSpec::ExplicitList(v) => {
                write!(f, "list:")?;
                for (i, k) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{k}")?;
                }
                Ok(())
            }
            IndexSetSpec::Mersenne { m_max } => write!(f, "mersenne:mmax={m_max}"),
            IndexSetSpec::FamilyUnion {
                kind,
                p_min,
                p_max,
                s,
            } => {
                let tag = match kind {
                    FamilyKind::TrailingOnes => "B",
                    FamilyKind::DigitSum => "b",
                };
                write!(f, "{tag}:p={p_min}..{p_max},s={s}")
            }
            IndexSetSpec::PredicateOnRange { lo, hi, predicate } => {
                write!(f, "pred:range={lo}..{hi},{predicate}")
            }
        }
    }
}

impl std::str::FromStr for IndexSetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IndexSetSpec::parse(s)
    }
}

/// Comma-separated fields with byte offsets, for position-annotated errors.
pub(crate) fn fields(input: &str, start: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut offset = start;
    for piece in input[start..].split(',') {
        out.push((offset, piece));
        offset += piece.len() + 1;
    }
    out
}

struct Parser<'a> {
    input: &'a str,
}

impl<'a> Parser<'a> {
    fn new(input: &'a str) -> Self {
        Self { input }
    }

    fn err(&self, pos: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.input, pos, msg)
    }

    fn parse_set(&self) -> Result<IndexSetSpec> {
        let Some(colon) = self.input.find(':') else {
            return Err(self.err(
                0,
                "expected '<kind>:' with kind one of list, mersenne, B, b, pred",
            ));
        };
        let body = colon + 1;
        match &self.input[..colon] {
            "list" => self.parse_list(body),
            "mersenne" => self.parse_mersenne(body),
            "B" => self.parse_family(FamilyKind::TrailingOnes, body),
            "b" => self.parse_family(FamilyKind::DigitSum, body),
            "pred" => self.parse_pred(body),
            other => Err(self.err(0, format!("unknown set kind '{other}'"))),
        }
    }

    fn uint<T: std::str::FromStr>(&self, pos: usize, text: &str) -> Result<T> {
        if text.is_empty() || !text.bytes().all(|c| c.is_ascii_digit()) {
            return Err(self.err(pos, format!("expected an unsigned integer, found '{text}'")));
        }
        text.parse::<T>()
            .map_err(|_| self.err(pos, format!("integer '{text}' out of range")))
    }

    fn key_value(&self, pos: usize, field: &'a str, key: &str) -> Result<&'a str> {
        match field.split_once('=') {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(self.err(pos, format!("expected '{key}=...', found '{field}'"))),
        }
    }

    fn range<T: std::str::FromStr>(&self, pos: usize, text: &str) -> Result<(T, T)> {
        let Some((lo, hi)) = text.split_once("..") else {
            return Err(self.err(
                pos,
                format!("expected an inclusive range 'lo..hi', found '{text}'"),
            ));
        };
        let lo_v = self.uint(pos, lo)?;
        let hi_v = self.uint(pos + lo.len() + 2, hi)?;
        Ok((lo_v, hi_v))
    }

    fn expect_count(&self, fields: &[(usize, &str)], n: usize) -> Result<()> {
        if fields.len() != n {
            let pos = fields.get(n).map(|f| f.0).unwrap_or(self.input.len());
            return Err(self.err(
                pos,
                format!(
                    "expected {n} comma-separated field(s), found {}",
                    fields.len()
                ),
            ));
        }
        Ok(())
    }

    fn parse_list(&self, body: usize) -> Result<IndexSetSpec> {
        let mut members = Vec::new();
        for (pos, f) in fields(self.input, body) {
            let k: u64 = self.uint(pos, f)?;
            if k == 0 {
                return Err(self.err(pos, "0 is not a member of {1, 2, ...}"));
            }
            members.push(k);
        }
        IndexSetSpec::explicit(members)
    }

    fn parse_mersenne(&self, body: usize) -> Result<IndexSetSpec> {
        let fs = fields(self.input, body);
        self.expect_count(&fs, 1)?;
        let (pos, f) = fs[0];
        let v = self.key_value(pos, f, "mmax")?;
        let m_max: u32 = self.uint(pos + 5, v)?;
        IndexSetSpec::mersenne(m_max).map_err(|e| self.err(pos + 5, e.to_string()))
    }

    fn parse_family(&self, kind: FamilyKind, body: usize) -> Result<IndexSetSpec> {
        let fs = fields(self.input, body);
        self.expect_count(&fs, 2)?;
        let (ppos, pf) = fs[0];
        let pv = self.key_value(ppos, pf, "p")?;
        let (p_min, p_max) = self.range::<u32>(ppos + 2, pv)?;
        let (spos, sf) = fs[1];
        let sv = self.key_value(spos, sf, "s")?;
        let s = self.s_function(spos + 2, sv)?;
        IndexSetSpec::family(kind, p_min, p_max, s).map_err(|e| self.err(ppos + 2, e.to_string()))
    }

    fn s_function(&self, pos: usize, text: &str) -> Result<SFunction> {
        match text {
            "log2" => return Ok(SFunction::Log2),
            "sqrt" => return Ok(SFunction::Sqrt),
            "p" => return Ok(SFunction::Linear { a: 1.0, b: 0.0 }),
            _ => {}
        }
        if text.bytes().all(|c| c.is_ascii_digit()) && !text.is_empty() {
            return Ok(SFunction::Const(self.uint(pos, text)?));
        }
        let bad = || {
            self.err(
                pos,
                format!("expected s = <int> | log2 | sqrt | p | <a>*p | <a>*p+<b> | <a>*p-<b>, found '{text}'"),
            )
        };
        let (a_text, rest) = text.split_once("*p").ok_or_else(bad)?;
        let a: f64 = a_text.parse().map_err(|_| bad())?;
        let b: f64 = if rest.is_empty() {
            0.0
        } else if let Some(b) = rest.strip_prefix('+') {
            b.parse().map_err(|_| bad())?
        } else if let Some(b) = rest.strip_prefix('-') {
            -b.parse::<f64>().map_err(|_| bad())?
        } else {
            return Err(bad());
        };
        if !a.is_finite() || !b.is_finite() {
            return Err(bad());
        }
        Ok(SFunction::Linear { a, b })
    }

    fn parse_pred(&self, body: usize) -> Result<IndexSetSpec> {
        let fs = fields(self.input, body);
        self.expect_count(&fs, 2)?;
        let (rpos, rf) = fs[0];
        let rv = self.key_value(rpos, rf, "range")?;
        let (lo, hi) = self.range::<u64>(rpos + 6, rv)?;
        let (ppos, pf) = fs[1];
        let predicate = self.predicate(ppos, pf)?;
        IndexSetSpec::predicate(lo, hi, predicate).map_err(|e| self.err(rpos + 6, e.to_string()))
    }

    fn predicate(&self, pos: usize, text: &str) -> Result<Predicate> {
        let simple = match text {
            "even" => Some(Predicate::Even),
            "odd" => Some(Predicate::Odd),
            "pow2" => Some(Predicate::PowerOfTwo),
            "all" => Some(Predicate::All),
            _ => None,
        };
        if let Some(p) = simple {
            return Ok(p);
        }
        let forms: [(&str, PredicateCtor); 4] = [
            ("nu>=", Predicate::NuAtLeast),
            ("nu<=", Predicate::NuAtMost),
            ("b>=", Predicate::BAtLeast),
            ("b<=", Predicate::BAtMost),
        ];
        for (prefix, make) in forms {
            if let Some(rest) = text.strip_prefix(prefix) {
                return Ok(make(self.uint(pos + prefix.len(), rest)?));
            }
        }
        Err(self.err(
            pos,
            format!("unknown predicate '{text}' (expected nu>=N, nu<=N, b>=N, b<=N, even, odd, pow2, all)"),
        ))
    }
}
