//! The k-th order absolute-difference operator and the exact law of its output.
//!
//! On bits `|a - b| = a XOR b`, so `k` difference steps collapse to
//!
//! ```text
//! xi^(k)_n = XOR over { i <= k : C(k, i) odd } of xi_{n+i}
//! ```
//!
//! and the law of `xi^(k)_n` is the law of a parity over a window of the chain.
//! [`exact_marginal`] computes it with one forward pass over the window that carries,
//! for each chain state `x`, the signed mass `E[(-1)^(partial parity); state = x]`.
//! The sum of the two entries at the end of the window is the signed deviation
//! `e = P(0) - P(1) = 1 - 2 P(1)` itself, so the tiny quantity the limit theorems
//! talk about is never obtained by subtracting from one half.

use serde::{Deserialize, Serialize};

use crate::bitkernel::odd_binomial;
use crate::chain::ChainSpec;
use crate::error::{Error, Result};

/// Largest order the brute-force oracle will enumerate (`2^(k+1)` windows).
pub const BRUTE_FORCE_MAX_K: u64 = 22;

/// Deviations below this magnitude are flagged as underflowed.
pub const UNDERFLOW_THRESHOLD: f64 = 1e-300;

const RESCALE_BELOW: f64 = 1.0 / (1u64 << 63) as f64 / (1u64 << 63) as f64; // 2^-126
const RESCALE_EXP: i64 = 126;

/// `output[i] = input[i] XOR input[i + 1]`.
pub fn difference_step(bits: &[u8]) -> Result<Vec<u8>> {
    if bits.len() < 2 {
        return Err(Error::Domain(format!(
            "a difference step needs at least 2 bits, got {}",
            bits.len()
        )));
    }
    Ok(bits.windows(2).map(|w| w[0] ^ w[1]).collect())
}

fn check_len(len: usize, k: u64) -> Result<()> {
    if (len as u64) < k.saturating_add(1) {
        return Err(Error::Domain(format!(
            "order k = {k} needs at least k + 1 bits, got {len}"
        )));
    }
    Ok(())
}

/// `k` successive applications of [`difference_step`].
pub fn difference_k(bits: &[u8], k: u64) -> Result<Vec<u8>> {
    check_len(bits.len(), k)?;
    let mut cur = bits.to_vec();
    for _ in 0..k {
        cur = difference_step(&cur)?;
    }
    Ok(cur)
}

/// The same operator through the Pascal-line mask: `output[n]` is the XOR of
/// `bits[n + i]` over the odd entries `i` of line `k`.
pub fn difference_k_masked(bits: &[u8], k: u64) -> Result<Vec<u8>> {
    check_len(bits.len(), k)?;
    let taps: Vec<usize> = crate::bitkernel::PascalLineView::new(k)
        .ones()
        .map(|i| i as usize)
        .collect();
    let out_len = bits.len() - k as usize;
    Ok((0..out_len)
        .map(|n| taps.iter().fold(0u8, |acc, &i| acc ^ bits[n + i]))
        .collect())
}

/// [`difference_k`] on a window packed into the low `len` bits of a word (bit `i` is
/// `xi_{n+i}`). Returns the low `len - k` bits of the result.
#[inline]
pub fn difference_k_packed(window: u64, len: u32, k: u32) -> u64 {
    debug_assert!(len <= 64 && k < len);
    let mut w = window;
    let mut width = len;
    for _ in 0..k {
        width -= 1;
        let keep = if width == 64 {
            u64::MAX
        } else {
            (1u64 << width) - 1
        };
        w = (w ^ (w >> 1)) & keep;
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceQuery {
    pub chain: ChainSpec,
    /// Time offset of the first window variable.
    pub n: u64,
    /// Difference order.
    pub k: u64,
}

impl DifferenceQuery {
    pub fn new(chain: ChainSpec, n: u64, k: u64) -> Self {
        Self { chain, n, k }
    }
}

/// Law of `xi^(k)_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalResult {
    pub probability_one: f64,
    /// `1 - 2 * probability_one`; 0.0 once it falls below the smallest subnormal.
    pub signed_deviation: f64,
    /// `ln |signed_deviation|`, kept finite far past `f64` underflow. `None` only when
    /// the deviation is exactly zero.
    pub log_abs_deviation: Option<f64>,
    /// `|signed_deviation| < 1e-300`.
    pub underflow: bool,
}

impl MarginalResult {
    fn from_scaled(mantissa: f64, exp2: i64) -> Self {
        let signed_deviation = ldexp(mantissa, exp2);
        let log_abs_deviation = if mantissa == 0.0 {
            None
        } else {
            Some(mantissa.abs().ln() + exp2 as f64 * std::f64::consts::LN_2)
        };
        let underflow = match log_abs_deviation {
            None => true,
            Some(l) => l < UNDERFLOW_THRESHOLD.ln(),
        };
        MarginalResult {
            probability_one: 0.5 - 0.5 * signed_deviation,
            signed_deviation,
            log_abs_deviation,
            underflow,
        }
    }

    fn from_probabilities(zero: f64, one: f64) -> Self {
        let e = zero - one;
        let mut r = Self::from_scaled(e, 0);
        r.probability_one = one;
        r
    }

    pub fn probability_zero(&self) -> f64 {
        1.0 - self.probability_one
    }

    pub fn abs_deviation(&self) -> f64 {
        self.signed_deviation.abs()
    }
}

/// `x * 2^e` without intermediate overflow or premature underflow.
fn ldexp(x: f64, e: i64) -> f64 {
    let mut x = x;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// Exact law of `xi^(k)_n` in `O(n + k)` time and `O(1)` memory.
///
/// The signed row vector `v = (v0, v1)` is carried in the left eigenbasis of the
/// transition matrix, `v = t * pi + b * (1, -1)`, where `pi` is the stationary law and
/// `lambda = s + p - 1` the second eigenvalue. `t = v0 + v1` is the signed deviation
/// of the parity so far. An unmasked step maps `(t, b)` to `(t, lambda b)`; a masked
/// step (one of `beta(k)`) maps it to
///
/// ```text
/// t' = (pi0 - pi1) t + 2 lambda b
/// b' = 2 pi0 pi1 t + (pi1 - pi0) lambda b
/// ```
///
/// Neither coordinate is ever recovered as a small difference of large entries, which
/// is what happens to `v0 + v1` in the plain basis once the transient part has decayed
/// below the stationary part.
pub fn exact_marginal(q: &DifferenceQuery) -> MarginalResult {
    let coeffs = EigenCoefficients::new(&q.chain);
    let k = q.k;
    let [d0, d1] = q.chain.marginal_at(q.n);
    // Index 0 of every line is odd, so the first variable always enters the parity:
    // v = (d0, -d1).
    let mut t = Scaled::new(d0 - d1);
    let mut b = Scaled::new(d0 * coeffs.pi1 + d1 * coeffs.pi0);
    let lambda = coeffs.lambda;
    for i in 1..=k {
        if odd_binomial(k, i) {
            let lb = b.mul(lambda);
            let t_next = t.mul(coeffs.pi_gap).add(lb.mul(2.0));
            b = t.mul(coeffs.two_pi_prod).add(lb.mul(-coeffs.pi_gap));
            t = t_next;
        } else {
            b = b.mul(lambda);
        }
    }
    MarginalResult::from_scaled(t.mantissa, t.exp2)
}

/// `mantissa * 2^exp2`, renormalized so the mantissa stays in the normal range.
///
/// The two eigen-coordinates decay at different rates, so each carries its own exponent.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    mantissa: f64,
    exp2: i64,
}

impl Scaled {
    fn new(x: f64) -> Self {
        Self {
            mantissa: x,
            exp2: 0,
        }
        .normalized()
    }

    #[inline]
    fn normalized(mut self) -> Self {
        let a = self.mantissa.abs();
        if a != 0.0 && a < RESCALE_BELOW {
            self.mantissa *= 2f64.powi(RESCALE_EXP as i32);
            self.exp2 -= RESCALE_EXP;
        } else if a > 1.0 / RESCALE_BELOW {
            self.mantissa *= RESCALE_BELOW;
            self.exp2 += RESCALE_EXP;
        }
        self
    }

    #[inline]
    fn mul(self, c: f64) -> Self {
        Self {
            mantissa: self.mantissa * c,
            exp2: self.exp2,
        }
        .normalized()
    }

    #[inline]
    fn add(self, other: Self) -> Self {
        if other.mantissa == 0.0 {
            return self;
        }
        if self.mantissa == 0.0 {
            return other;
        }
        let e = self.exp2.max(other.exp2);
        Self {
            mantissa: ldexp(self.mantissa, self.exp2 - e) + ldexp(other.mantissa, other.exp2 - e),
            exp2: e,
        }
        .normalized()
    }
}

/// Spectral constants of the transition matrix.
#[derive(Debug, Clone, Copy)]
struct EigenCoefficients {
    pi0: f64,
    pi1: f64,
    /// `pi0 - pi1`
    pi_gap: f64,
    /// `2 pi0 pi1`
    two_pi_prod: f64,
    /// `s + p - 1`
    lambda: f64,
}

impl EigenCoefficients {
    fn new(chain: &ChainSpec) -> Self {
        let (pi0, pi1, pi_gap, lambda) = if chain.has_identical_rows() {
            let row = chain.matrix()[0];
            (row[0], row[1], 1.0 - 2.0 * row[1], 0.0)
        } else {
            let (s, p) = (chain.s(), chain.p());
            let denom = (1.0 - s) + (1.0 - p);
            (
                (1.0 - p) / denom,
                (1.0 - s) / denom,
                (s - p) / denom,
                s + p - 1.0,
            )
        };
        Self {
            pi0,
            pi1,
            pi_gap,
            two_pi_prod: 2.0 * pi0 * pi1,
            lambda,
        }
    }
}

/// Independent oracle: sums the probability of every one of the `2^(k+1)` windows
/// starting at time `n` and applies the difference operator to each window literally.
pub fn brute_force_marginal(q: &DifferenceQuery) -> Result<MarginalResult> {
    if q.k > BRUTE_FORCE_MAX_K {
        return Err(Error::CostGuard(format!(
            "brute-force enumeration is capped at k = {BRUTE_FORCE_MAX_K} (got k = {})",
            q.k
        )));
    }
    let len = q.k as u32 + 1;
    let start = q.chain.marginal_at(q.n);
    let mut acc = [0.0f64; 2];
    for (x0, &p0) in start.iter().enumerate() {
        enumerate(&q.chain, len, q.k as u32, 1, x0, x0 as u64, p0, &mut acc);
    }
    Ok(MarginalResult::from_probabilities(acc[0], acc[1]))
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    chain: &ChainSpec,
    len: u32,
    k: u32,
    depth: u32,
    last: usize,
    window: u64,
    prob: f64,
    acc: &mut [f64; 2],
) {
    if depth == len {
        let bit = difference_k_packed(window, len, k) as usize;
        acc[bit] += prob;
        return;
    }
    for y in 0..2usize {
        let p = prob * chain.transition(last, y);
        enumerate(
            chain,
            len,
            k,
            depth + 1,
            y,
            window | ((y as u64) << depth),
            p,
            acc,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_examples() {
        assert_eq!(difference_step(&[0, 1, 1, 0]).unwrap(), vec![1, 0, 1]);
        assert_eq!(difference_step(&[1, 1, 1, 1]).unwrap(), vec![0, 0, 0]);
        assert_eq!(difference_step(&[0, 1]).unwrap(), vec![1]);
        assert!(difference_step(&[1]).is_err());
        assert!(difference_step(&[]).is_err());
    }

    #[test]
    fn order_k_examples() {
        let v = vec![1, 0, 1, 1, 0];
        assert_eq!(difference_k(&v, 0).unwrap(), v);
        assert_eq!(difference_k_masked(&v, 0).unwrap(), v);
        assert_eq!(difference_k(&[1, 0, 0, 1], 2).unwrap(), vec![1, 1]);
        assert_eq!(difference_k_masked(&[1, 0, 0, 1], 2).unwrap(), vec![1, 1]);
        assert!(difference_k(&[1, 0], 2).is_err());
        assert!(difference_k_masked(&[1, 0], 2).is_err());
    }

    #[test]
    fn packed_matches_vec() {
        for window in 0u64..(1 << 10) {
            let bits: Vec<u8> = (0..10).map(|i| ((window >> i) & 1) as u8).collect();
            for k in 0..10u32 {
                let want = difference_k(&bits, k as u64).unwrap();
                let got = difference_k_packed(window, 10, k);
                let got: Vec<u8> = (0..want.len()).map(|i| ((got >> i) & 1) as u8).collect();
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn iid_order_one() {
        let c = ChainSpec::iid(0.3).unwrap();
        for n in [0, 1, 9] {
            let r = exact_marginal(&DifferenceQuery::new(c, n, 1));
            assert!((r.probability_one - 0.42).abs() < 1e-15);
        }
    }

    #[test]
    fn iid_order_seven_all_ones_line() {
        let c = ChainSpec::iid(0.3).unwrap();
        let want = (1.0 - 0.4f64.powi(8)) / 2.0;
        let r = exact_marginal(&DifferenceQuery::new(c, 3, 7));
        assert!((r.probability_one - want).abs() < 1e-15);
        let b = brute_force_marginal(&DifferenceQuery::new(c, 3, 7)).unwrap();
        assert!((b.probability_one - want).abs() < 1e-15);
    }

    #[test]
    fn order_zero_is_the_marginal() {
        let c = ChainSpec::new(0.3, 0.8, 0.25).unwrap();
        assert_eq!(
            exact_marginal(&DifferenceQuery::new(c, 0, 0)).probability_one,
            0.25
        );
        let m = c.marginal_at(6);
        let r = exact_marginal(&DifferenceQuery::new(c, 6, 0));
        assert!((r.probability_one - m[1]).abs() < 1e-15);
    }

    #[test]
    fn brute_force_hand_sums() {
        // P(xi_0 = 0)(1 - s) + P(xi_0 = 1)(1 - p) with xi_0 = 0 surely.
        let c = ChainSpec::new(0.3, 0.8, 0.0).unwrap();
        let r = brute_force_marginal(&DifferenceQuery::new(c, 0, 1)).unwrap();
        assert!((r.probability_one - 0.7).abs() < 1e-15);
        let e = exact_marginal(&DifferenceQuery::new(c, 0, 1));
        assert!((e.probability_one - 0.7).abs() < 1e-15);

        let flip = ChainSpec::new(0.999, 0.001, 0.5).unwrap();
        let r = brute_force_marginal(&DifferenceQuery::new(flip, 0, 1)).unwrap();
        let want = 0.5 * 0.001 + 0.5 * 0.999;
        assert!((r.probability_one - want).abs() < 1e-15);
        let e = exact_marginal(&DifferenceQuery::new(flip, 0, 1));
        assert!((e.probability_one - want).abs() < 1e-15);
    }

    #[test]
    fn alternating_chain_order_one_near_certain() {
        // s = 0.001, p = 0.001: the chain almost always switches state.
        let c = ChainSpec::new(0.001, 0.001, 0.0).unwrap();
        let r = brute_force_marginal(&DifferenceQuery::new(c, 0, 1)).unwrap();
        assert!((r.probability_one - 0.999).abs() < 1e-15);
    }

    #[test]
    fn brute_force_cost_guard() {
        let c = ChainSpec::iid(0.3).unwrap();
        assert!(matches!(
            brute_force_marginal(&DifferenceQuery::new(c, 0, 23)),
            Err(Error::CostGuard(_))
        ));
    }

    #[test]
    fn deep_orders_keep_a_finite_log() {
        let c = ChainSpec::new(0.3, 0.8, 0.0).unwrap();
        let r = exact_marginal(&DifferenceQuery::new(c, 0, (1 << 16) - 1));
        assert!(r.underflow);
        assert_eq!(r.signed_deviation, 0.0);
        assert_eq!(r.probability_one, 0.5);
        let l = r.log_abs_deviation.unwrap();
        assert!(l.is_finite() && l < -10_000.0);
    }

    #[test]
    fn fair_coin_has_zero_deviation() {
        let c = ChainSpec::iid(0.5).unwrap();
        let r = exact_marginal(&DifferenceQuery::new(c, 0, 5));
        assert_eq!(r.signed_deviation, 0.0);
        assert_eq!(r.log_abs_deviation, None);
        assert!(r.underflow);
    }

    #[test]
    fn ldexp_ranges() {
        assert_eq!(ldexp(1.0, -1074), f64::from_bits(1));
        assert_eq!(ldexp(1.0, -1100), 0.0);
        assert_eq!(ldexp(0.75, 3000), f64::INFINITY);
        assert_eq!(ldexp(3.0, -2), 0.75);
        assert_eq!(ldexp(1.0, 2000 - 2000), 1.0);
    }
}
