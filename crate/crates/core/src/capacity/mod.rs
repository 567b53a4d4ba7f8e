//! Discrete capacities over finite index sets, the `B_p(s)` / `b_p(s)` families,
//! thickness partial sums and natural density.
//!
//! `capacity_big_c(e) = sum of nu(k)` and `capacity_small_c(e) = sum of b(k)` over `k in e`.
//! Direct summation over the enumerated set is the ground truth; the printed closed
//! forms are kept only for side-by-side comparison.

mod setspec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use setspec::fields;
pub use setspec::{dyadic_block, FamilyKind, IndexSetSpec, Predicate, SFunction, MAX_P};

fn check_no_zero(e: &IndexSetSpec) -> Result<()> {
    if e.contains_zero() {
        Err(Error::Domain(
            "capacity is undefined on sets containing 0".into(),
        ))
    } else {
        Ok(())
    }
}

/// `sum over k in e of nu(k)`.
pub fn capacity_big_c(e: &IndexSetSpec) -> Result<u64> {
    check_no_zero(e)?;
    Ok(e.iter().map(|k| k.trailing_ones() as u64).sum())
}

/// `sum over k in e of b(k)`.
pub fn capacity_small_c(e: &IndexSetSpec) -> Result<u64> {
    check_no_zero(e)?;
    Ok(e.iter().map(|k| k.count_ones() as u64).sum())
}

fn check_block(p: u32, s: u32) -> Result<()> {
    if !(2..=MAX_P).contains(&p) {
        return Err(Error::Domain(format!(
            "block index p = {p} must lie in 2..={MAX_P}"
        )));
    }
    if s > p {
        return Err(Error::Domain(format!("threshold s = {s} exceeds p = {p}")));
    }
    Ok(())
}

/// `B_p(s) = {k in L_p : nu(k) >= s}` as an explicit set.
pub fn build_big_bp(p: u32, s: u32) -> Result<IndexSetSpec> {
    check_block(p, s)?;
    Ok(IndexSetSpec::ExplicitList(
        setspec::trailing_ones_slice(p, s).collect(),
    ))
}

/// `b_p(s) = {k in L_p : b(k) >= s}` as an explicit set.
pub fn build_small_bp(p: u32, s: u32) -> Result<IndexSetSpec> {
    check_block(p, s)?;
    Ok(IndexSetSpec::ExplicitList(
        setspec::digit_sum_slice(p, s).collect(),
    ))
}

fn binomial(n: u32, k: u32) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// The printed formula `sum_{i=0}^{s} i * 2^(p-i)`, evaluated verbatim.
pub fn closed_form_big_c_bp(p: u32, s: u32) -> u128 {
    (0..=s.min(p)).map(|i| i as u128 * (1u128 << (p - i))).sum()
}

/// The printed formula `sum_{i=s}^{p} i * C(p, i)`, evaluated verbatim.
pub fn closed_form_small_c_bp(p: u32, s: u32) -> u128 {
    (s..=p).map(|i| i as u128 * binomial(p, i)).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedFormRow {
    pub p: u32,
    pub s: u32,
    pub direct_big_c: u64,
    pub printed_big_c: u128,
    pub direct_small_c: u64,
    pub printed_small_c: u128,
}

impl ClosedFormRow {
    pub fn big_c_difference(&self) -> i128 {
        self.printed_big_c as i128 - self.direct_big_c as i128
    }

    pub fn small_c_difference(&self) -> i128 {
        self.printed_small_c as i128 - self.direct_small_c as i128
    }
}

/// Direct capacities of `B_p(s)` and `b_p(s)` next to the printed closed forms,
/// for every `p` in `p_min..=p_max` and `0 <= s <= p`.
pub fn closed_form_comparison(p_min: u32, p_max: u32) -> Result<Vec<ClosedFormRow>> {
    let mut rows = Vec::new();
    for p in p_min..=p_max {
        for s in 0..=p {
            rows.push(ClosedFormRow {
                p,
                s,
                direct_big_c: capacity_big_c(&build_big_bp(p, s)?)?,
                printed_big_c: closed_form_big_c_bp(p, s),
                direct_small_c: capacity_small_c(&build_small_bp(p, s)?)?,
                printed_small_c: closed_form_small_c_bp(p, s),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessRow {
    pub p: u32,
    pub s_p: u32,
    pub slice_size: u64,
    pub slice_capacity: u64,
    /// `2^-p * slice_capacity`
    pub term: f64,
    pub partial_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpTrend {
    /// `s_p` ends no higher than it starts.
    #[serde(rename = "not diverging")]
    NotDiverging,
    /// `s_p` is nondecreasing and ends strictly higher.
    #[serde(rename = "growing")]
    Growing,
    /// Ends higher but dips somewhere in between.
    #[serde(rename = "irregular")]
    Irregular,
}

impl std::fmt::Display for SpTrend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpTrend::NotDiverging => "not diverging",
            SpTrend::Growing => "growing",
            SpTrend::Irregular => "irregular",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessReport {
    pub kind: FamilyKind,
    pub rows: Vec<ThicknessRow>,
    pub s_trend: SpTrend,
    pub partial_sums_strictly_increasing: bool,
}

/// Partial sums of `sum_p 2^-p * cap(slice_p)` for a family union, up to `p_max`.
///
/// The capacity is `C` for `B`-families and `c` for `b`-families. Divergence of the
/// infinite series is not decided; the report only shows how the prefix grows.
pub fn thickness_report(family: &IndexSetSpec, p_max: u32) -> Result<ThicknessReport> {
    let IndexSetSpec::FamilyUnion { kind, p_min, s, .. } = family else {
        return Err(Error::Domain(
            "thickness report needs a B- or b-family union".into(),
        ));
    };
    if p_max < *p_min {
        return Err(Error::Domain(format!(
            "p_max = {p_max} is below the family's first block p = {p_min}"
        )));
    }
    if p_max > MAX_P {
        return Err(Error::Domain(format!("p_max = {p_max} exceeds {MAX_P}")));
    }
    let mut rows = Vec::with_capacity((p_max - p_min + 1) as usize);
    let mut partial = 0.0;
    for p in *p_min..=p_max {
        let s_p = s.eval(p);
        let (size, cap) = setspec::slice(*kind, p, s_p).fold((0u64, 0u64), |(n, c), k| {
            let w = match kind {
                FamilyKind::TrailingOnes => k.trailing_ones(),
                FamilyKind::DigitSum => k.count_ones(),
            };
            (n + 1, c + w as u64)
        });
        let term = cap as f64 * (-(p as f64)).exp2();
        partial += term;
        rows.push(ThicknessRow {
            p,
            s_p,
            slice_size: size,
            slice_capacity: cap,
            term,
            partial_sum: partial,
        });
    }
    let first = rows[0].s_p;
    let last = rows[rows.len() - 1].s_p;
    let monotone = rows.windows(2).all(|w| w[0].s_p <= w[1].s_p);
    let s_trend = if last <= first {
        SpTrend::NotDiverging
    } else if monotone {
        SpTrend::Growing
    } else {
        SpTrend::Irregular
    };
    let partial_sums_strictly_increasing =
        rows.windows(2).all(|w| w[1].partial_sum > w[0].partial_sum);
    Ok(ThicknessReport {
        kind: *kind,
        rows,
        s_trend,
        partial_sums_strictly_increasing,
    })
}

/// `rho_m(e) = |e ∩ [1, m]| / m`, kept as the exact pair `(count, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Density {
    pub m: u64,
    pub count: u64,
}

impl Density {
    pub fn value(&self) -> f64 {
        self.count as f64 / self.m as f64
    }
}

pub fn density_rho(e: &IndexSetSpec, m: u64) -> Result<Density> {
    if m == 0 {
        return Err(Error::Domain("density needs m >= 1".into()));
    }
    let count = e.iter().take_while(|&k| k <= m).filter(|&k| k >= 1).count() as u64;
    Ok(Density { m, count })
}

/// `rho_m` at each of the increasing sample points `m_values`, in one pass over `e`.
pub fn density_trend(e: &IndexSetSpec, m_values: &[u64]) -> Result<Vec<Density>> {
    if m_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(
            "density sample points must be strictly increasing".into(),
        ));
    }
    if m_values.first() == Some(&0) {
        return Err(Error::Domain("density needs m >= 1".into()));
    }
    let mut out = Vec::with_capacity(m_values.len());
    let mut members = e.iter().filter(|&k| k >= 1).peekable();
    let mut count = 0u64;
    for &m in m_values {
        while members.next_if(|&k| k <= m).is_some() {
            count += 1;
        }
        out.push(Density { m, count });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub set: String,
    pub size: u64,
    pub big_c: u64,
    pub small_c: u64,
    pub densities: Vec<Density>,
    pub thickness: Option<ThicknessReport>,
}

impl CapacityReport {
    pub fn build(e: &IndexSetSpec, density_at: &[u64], thickness_to: Option<u32>) -> Result<Self> {
        check_no_zero(e)?;
        let (size, big_c, small_c) = e.iter().fold((0u64, 0u64, 0u64), |(n, big, small), k| {
            (
                n + 1,
                big + k.trailing_ones() as u64,
                small + k.count_ones() as u64,
            )
        });
        let thickness = match (e, thickness_to) {
            (IndexSetSpec::FamilyUnion { .. }, Some(p_max)) => Some(thickness_report(e, p_max)?),
            _ => None,
        };
        Ok(CapacityReport {
            set: e.to_string(),
            size,
            big_c,
            small_c,
            densities: density_trend(e, density_at)?,
            thickness,
        })
    }
}
