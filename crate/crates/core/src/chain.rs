//! Two-state time-homogeneous Markov chains.
//!
//! The transition matrix is
//!
//! ```text
//! [ s     1-s ]
//! [ 1-p   p   ]
//! ```
//!
//! with `s = P(0 -> 0)` and `p = P(1 -> 1)`, both strictly inside `(0, 1)`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of the random generator, recorded in every output that depends on it.
pub const GENERATOR_ID: &str = "chacha20/rand_chacha-0.9/seed_from_u64+stream";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct ChainSpec {
    s: f64,
    p: f64,
    q1: f64,
    /// `s + p = 1`: both rows are the same law and are stored bit-identically.
    identical_rows: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainType {
    /// `s != p` and `s != 1 - p`
    TypeI,
    /// `s == p` or `s == 1 - p`
    TypeII,
}

impl fmt::Display for ChainType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChainType::TypeI => "I",
            ChainType::TypeII => "II",
        })
    }
}

impl ChainSpec {
    /// `q1` is the initial probability of state 1.
    pub fn new(s: f64, p: f64, q1: f64) -> Result<Self> {
        let open = |v: f64| v > 0.0 && v < 1.0;
        if !open(s) || !open(p) {
            return Err(Error::Domain(format!(
                "transition probabilities must satisfy 0 < s, p < 1 (got s = {s}, p = {p})"
            )));
        }
        if !(0.0..=1.0).contains(&q1) {
            return Err(Error::Domain(format!(
                "initial probability q1 = {q1} is outside [0, 1]"
            )));
        }
        let identical_rows = 1.0 - p == s || 1.0 - s == p || decimal_sum_is_one(s, p);
        Ok(Self {
            s,
            p,
            q1,
            identical_rows,
        })
    }

    /// Independent Bernoulli(`q`) bits, as the chain whose two rows are both `(1 - q, q)`.
    ///
    /// The initial law is Bernoulli(`q`) as well, so the process is i.i.d. from time 0.
    pub fn iid(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!(
                "i.i.d. success probability must satisfy 0 < q < 1 (got {q})"
            )));
        }
        Self::new(1.0 - q, q, q)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q1(&self) -> f64 {
        self.q1
    }

    /// True when `s + p = 1`, i.e. the chain is an i.i.d. Bernoulli sequence after time 0.
    pub fn has_identical_rows(&self) -> bool {
        self.identical_rows
    }

    pub fn initial(&self) -> [f64; 2] {
        [1.0 - self.q1, self.q1]
    }

    /// Same transition matrix, different initial one-probability.
    pub fn with_initial(&self, q1: f64) -> Result<Self> {
        Self::new(self.s, self.p, q1)
    }

    /// `P(next = y | current = x)`.
    #[inline]
    pub fn transition(&self, x: usize, y: usize) -> f64 {
        self.matrix()[x.min(1)][y.min(1)]
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        if self.identical_rows {
            let row = [1.0 - self.p, self.p];
            [row, row]
        } else {
            [[self.s, 1.0 - self.s], [1.0 - self.p, self.p]]
        }
    }

    /// One step of the forward equation, `dist * Q`.
    pub fn step(&self, dist: [f64; 2]) -> [f64; 2] {
        let q = self.matrix();
        [
            dist[0] * q[0][0] + dist[1] * q[1][0],
            dist[0] * q[0][1] + dist[1] * q[1][1],
        ]
    }

    /// `(P(xi_n = 0), P(xi_n = 1))`, by iterating the matrix `n` times.
    pub fn marginal_at(&self, n: u64) -> [f64; 2] {
        (0..n).fold(self.initial(), |d, _| self.step(d))
    }

    pub fn classify(&self, eq_tolerance: f64) -> ChainType {
        classify_type(self, eq_tolerance)
    }

    pub fn parse(input: &str) -> Result<Self> {
        let mut s = None;
        let mut p = None;
        let mut q1 = None;
        for (pos, field) in crate::capacity::fields(input, 0) {
            let Some((key, value)) = field.split_once('=') else {
                return Err(Error::parse(
                    input,
                    pos,
                    format!("expected key=value, found '{field}'"),
                ));
            };
            let slot = match key {
                "s" => &mut s,
                "p" => &mut p,
                "q1" => &mut q1,
                _ => {
                    return Err(Error::parse(
                        input,
                        pos,
                        format!("unknown chain key '{key}' (expected s, p, q1)"),
                    ))
                }
            };
            if slot.is_some() {
                return Err(Error::parse(input, pos, format!("duplicate key '{key}'")));
            }
            let v: f64 = value.parse().map_err(|_| {
                Error::parse(
                    input,
                    pos + key.len() + 1,
                    format!("'{value}' is not a number"),
                )
            })?;
            *slot = Some((v, pos + key.len() + 1));
        }
        let (Some((s, spos)), Some((p, ppos))) = (s, p) else {
            return Err(Error::parse(
                input,
                input.len(),
                "chain spec needs both s= and p=",
            ));
        };
        let (q1, qpos) = q1.unwrap_or((0.5, input.len()));
        let open = |v: f64| v > 0.0 && v < 1.0;
        if !open(s) {
            return Err(Error::parse(
                input,
                spos,
                "s must lie strictly between 0 and 1",
            ));
        }
        if !open(p) {
            return Err(Error::parse(
                input,
                ppos,
                "p must lie strictly between 0 and 1",
            ));
        }
        Self::new(s, p, q1).map_err(|e| Error::parse(input, qpos, e.to_string()))
    }

    /// A full path `xi_0, ..., xi_{length-1}` drawn from `rng`.
    pub fn sample_path_with<R: Rng + ?Sized>(&self, length: usize, rng: &mut R) -> Vec<u8> {
        let mut path = Vec::with_capacity(length);
        if length == 0 {
            return path;
        }
        let mut state = (rng.random::<f64>() < self.q1) as usize;
        path.push(state as u8);
        for _ in 1..length {
            state = self.next_state(state, rng);
            path.push(state as u8);
        }
        path
    }

    #[inline]
    pub(crate) fn next_state<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        let u = rng.random::<f64>();
        (u < self.matrix()[state][1]) as usize
    }

    /// Deterministic path for `seed`.
    pub fn sample_path(&self, length: usize, seed: u64) -> Result<Vec<u8>> {
        if length == 0 {
            return Err(Error::Domain("path length must be at least 1".into()));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        Ok(self.sample_path_with(length, &mut rng))
    }
}

impl fmt::Display for ChainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s={},p={},q1={}", self.s, self.p, self.q1)
    }
}

impl From<ChainSpec> for String {
    fn from(c: ChainSpec) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for ChainSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        ChainSpec::parse(&s)
    }
}

impl std::str::FromStr for ChainSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChainSpec::parse(s)
    }
}

/// Type II iff `s = p` or `s = 1 - p`.
///
/// With `eq_tolerance = 0` both equalities are decided exactly on the decimal values
/// the chain was written with (the shortest decimal form of each `f64`), so
/// `s=0.3,p=0.7` is type II even though `1.0 - 0.7 != 0.3` in binary floating point.
/// A positive tolerance compares `|s - p|` and `|s - (1 - p)|` against it instead.
pub fn classify_type(spec: &ChainSpec, eq_tolerance: f64) -> ChainType {
    let type_two = if eq_tolerance > 0.0 {
        (spec.s - spec.p).abs() <= eq_tolerance || (spec.s - (1.0 - spec.p)).abs() <= eq_tolerance
    } else {
        spec.s == spec.p || spec.identical_rows
    };
    if type_two {
        ChainType::TypeII
    } else {
        ChainType::TypeI
    }
}

/// Exact decimal test of `a + b == 1` for `a, b` in `(0, 1)`.
fn decimal_sum_is_one(a: f64, b: f64) -> bool {
    let frac = |x: f64| -> Option<Vec<u8>> {
        let text = x.to_string();
        let digits = text.strip_prefix("0.")?;
        Some(digits.bytes().map(|c| c - b'0').collect())
    };
    let (Some(mut x), Some(mut y)) = (frac(a), frac(b)) else {
        return false;
    };
    let len = x.len().max(y.len());
    x.resize(len, 0);
    y.resize(len, 0);
    // The fractional digits must add up to exactly 10^len.
    let mut carry = 0u8;
    for i in (0..len).rev() {
        let d = x[i] + y[i] + carry;
        if !d.is_multiple_of(10) {
            return false;
        }
        carry = d / 10;
    }
    carry == 1
}

/// Generator for block `stream` of a run seeded with `seed`.
pub fn block_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
