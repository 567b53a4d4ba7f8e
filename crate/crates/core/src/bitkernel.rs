//! Digit-level combinatorics of natural numbers and the binary Pascal triangle.
//!
//! Line `k` of the triangle holds the parities of `C(k, 0), ..., C(k, k)`. By Lucas'
//! theorem `C(k, i)` is odd exactly when the bits of `i` are a subset of the bits of
//! `k`, so every entry is a constant-time mask test.
//!
//! `nu_of` and `mu_of` use the run-length convention: `nu_of(k)` counts the trailing
//! one-bits of `k` and `mu_of(k)` is the length of the initial run of ones in line `k`.
//! Under it `mu_of(k) == 2^nu_of(k)` and `beta_of(k) == 2^b_of(k)` hold for every `k`.

use crate::error::{Error, Result};

fn require_positive(k: u64, what: &str) -> Result<()> {
    if k == 0 {
        Err(Error::Domain(format!("{what} is undefined for k = 0")))
    } else {
        Ok(())
    }
}

/// Binary digits of `k`, least significant first. The last digit is always 1.
pub fn binary_expansion(k: u64) -> Result<Vec<u8>> {
    require_positive(k, "binary expansion")?;
    let len = 64 - k.leading_zeros() as usize;
    Ok((0..len).map(|i| ((k >> i) & 1) as u8).collect())
}

/// Digit sum of `k` (its popcount).
pub fn b_of(k: u64) -> Result<u32> {
    require_positive(k, "b(k)")?;
    Ok(k.count_ones())
}

/// Number of trailing one-bits of `k`; 0 for even `k`.
pub fn nu_of(k: u64) -> Result<u32> {
    require_positive(k, "nu(k)")?;
    Ok(k.trailing_ones())
}

/// Which reading of the "maximal m" definitions of ν and μ to use.
///
/// Only `RunLength` satisfies `μ = 2^ν`; `LiteralIndex` exists so the two readings can
/// be printed side by side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NuConvention {
    #[default]
    RunLength,
    /// Largest index `m` with digits `0..=m` all ones. Undefined (None) for even `k`.
    LiteralIndex,
}

pub fn nu_with(k: u64, convention: NuConvention) -> Result<Option<u32>> {
    let run = nu_of(k)?;
    Ok(match convention {
        NuConvention::RunLength => Some(run),
        NuConvention::LiteralIndex => run.checked_sub(1),
    })
}

/// Largest index `m` with `alpha(k, 0..=m)` all ones, or the run length, per `convention`.
pub fn mu_with(k: u64, convention: NuConvention) -> Option<u128> {
    let run = mu_by_scan(k);
    match convention {
        NuConvention::RunLength => Some(run),
        NuConvention::LiteralIndex => run.checked_sub(1),
    }
}

/// Entry `alpha(k, i)`: 1 iff `C(k, i)` is odd.
pub fn pascal_entry(k: u64, i: u64) -> Result<u8> {
    if i > k {
        return Err(Error::Domain(format!(
            "pascal entry index i = {i} exceeds line k = {k}"
        )));
    }
    Ok(odd_binomial(k, i) as u8)
}

/// Unchecked submask test, `i & !k == 0`. Only meaningful for `i <= k`.
#[inline]
pub fn odd_binomial(k: u64, i: u64) -> bool {
    i & !k == 0
}

/// Length of the initial run of ones of line `k`, `2^nu(k)` (1 for `k = 0`).
pub fn mu_of(k: u64) -> u128 {
    if k == 0 {
        return 1;
    }
    1u128 << k.trailing_ones()
}

/// Number of ones in line `k`, `2^b(k)`.
pub fn beta_of(k: u64) -> u128 {
    1u128 << k.count_ones()
}

/// `mu_of` computed by walking line `k` entry by entry. O(mu(k)).
pub fn mu_by_scan(k: u64) -> u128 {
    let mut run = 0u128;
    for i in 0..=k {
        if !odd_binomial(k, i) {
            break;
        }
        run += 1;
    }
    run
}

/// `beta_of` computed by counting the ones of line `k`. O(k).
pub fn beta_by_count(k: u64) -> u128 {
    (0..=k).filter(|&i| odd_binomial(k, i)).count() as u128
}

/// Lazy view of one line of the binary Pascal triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PascalLineView {
    k: u64,
}

impl PascalLineView {
    pub fn new(k: u64) -> Self {
        Self { k }
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn len(&self) -> u64 {
        self.k + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn entry(&self, i: u64) -> Result<u8> {
        pascal_entry(self.k, i)
    }

    pub fn entries(&self) -> impl Iterator<Item = u8> + '_ {
        (0..=self.k).map(move |i| odd_binomial(self.k, i) as u8)
    }

    /// Positions `i` with `alpha(k, i) = 1`, in increasing order.
    ///
    /// Walks the submasks of `k` directly, so the cost is `beta(k)` rather than `k`.
    pub fn ones(&self) -> impl Iterator<Item = u64> {
        let k = self.k;
        // Enumerate submasks in increasing order: next = ((cur | !k) + 1) & k.
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == k {
                None
            } else {
                Some((cur | !k).wrapping_add(1) & k)
            };
            Some(cur)
        })
    }

    pub fn mu(&self) -> u128 {
        mu_of(self.k)
    }

    pub fn beta(&self) -> u128 {
        beta_of(self.k)
    }
}

/// Lines of the triangle built with `alpha(k, i) = |alpha(k-1, i-1) - alpha(k-1, i)|`,
/// starting from line 0.
#[derive(Debug, Clone, Default)]
pub struct RecurrenceLines {
    current: Option<Vec<u8>>,
}

impl RecurrenceLines {
    pub fn new() -> Self {
        Self { current: None }
    }
}

impl Iterator for RecurrenceLines {
    type Item = Vec<u8>;

    fn next(&mut self) -> Option<Vec<u8>> {
        let line = match self.current.take() {
            None => vec![1],
            Some(prev) => {
                let k = prev.len();
                let mut line = Vec::with_capacity(k + 1);
                line.push(1);
                for i in 1..k {
                    line.push(prev[i - 1].abs_diff(prev[i]));
                }
                line.push(1);
                line
            }
        };
        self.current = Some(line.clone());
        Some(line)
    }
}
