//! Finite-prefix checks of the fair-coin limit: deviation sweeps along index sets,
//! exponential-rate fits, a contrast against a capacity-violating control set, and
//! Monte Carlo cross-checks of the exact engine.
//!
//! Nothing here decides a limit. Every verdict states which finite thresholds the
//! computed prefix met.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitkernel::PascalLineView;
use crate::capacity::IndexSetSpec;
use crate::chain::{block_rng, ChainSpec, ChainType, GENERATOR_ID};
use crate::diffkernel::{exact_marginal, DifferenceQuery, MarginalResult, UNDERFLOW_THRESHOLD};
use crate::error::{Error, Result};

/// Default cap on the difference order accepted by sweeps and simulations.
pub const DEFAULT_K_MAX: u64 = 1 << 20;

/// Paths simulated per generator stream.
pub const MC_BLOCK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationRecord {
    pub k: u64,
    pub nu_k: u32,
    pub b_k: u32,
    pub deviation: f64,
    pub log_abs_deviation: Option<f64>,
    pub underflow: bool,
}

impl DeviationRecord {
    fn new(k: u64, r: &MarginalResult) -> Self {
        Self {
            k,
            nu_k: k.trailing_ones(),
            b_k: k.count_ones(),
            deviation: r.signed_deviation,
            log_abs_deviation: r.log_abs_deviation,
            underflow: r.underflow,
        }
    }

    /// `ln |e|` with exact zero mapped to `-inf`, for ordering.
    pub fn log_abs(&self) -> f64 {
        self.log_abs_deviation.unwrap_or(f64::NEG_INFINITY)
    }

    pub fn log10_abs(&self) -> f64 {
        self.log_abs() / std::f64::consts::LN_10
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSeries {
    pub chain: Option<ChainSpec>,
    pub n: u64,
    pub set: String,
    pub records: Vec<DeviationRecord>,
}

impl DeviationSeries {
    /// A series from externally supplied `(k, deviation)` pairs, e.g. synthetic data.
    pub fn from_deviations(points: &[(u64, f64)]) -> Result<Self> {
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Domain("k must be strictly increasing".into()));
        }
        let records = points
            .iter()
            .map(|&(k, e)| DeviationRecord {
                k,
                nu_k: k.trailing_ones(),
                b_k: k.count_ones(),
                deviation: e,
                log_abs_deviation: (e != 0.0).then(|| e.abs().ln()),
                underflow: e.abs() < UNDERFLOW_THRESHOLD,
            })
            .collect();
        Ok(Self {
            chain: None,
            n: 0,
            set: "synthetic".into(),
            records,
        })
    }

    pub fn last(&self) -> Option<&DeviationRecord> {
        self.records.last()
    }

    /// Smallest record index from which `|e|` is strictly decreasing to the end.
    pub fn monotone_from(&self) -> Option<usize> {
        if self.records.is_empty() {
            return None;
        }
        let mut start = self.records.len() - 1;
        while start > 0 && self.records[start - 1].log_abs() > self.records[start].log_abs() {
            start -= 1;
        }
        Some(start)
    }

    /// One CSV row per record: `k,nu_k,b_k,deviation,log_abs_deviation,underflow_flag`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "k,nu_k,b_k,deviation,log_abs_deviation,underflow_flag")?;
        for r in &self.records {
            let log = match r.log_abs_deviation {
                Some(l) => format!("{l:e}"),
                None => "-inf".to_string(),
            };
            writeln!(
                out,
                "{},{},{},{:e},{},{}",
                r.k, r.nu_k, r.b_k, r.deviation, log, r.underflow as u8
            )?;
        }
        Ok(())
    }
}

fn check_k(k: u64, k_max: u64) -> Result<()> {
    if k > k_max {
        return Err(Error::CostGuard(format!("k = {k} exceeds k_max = {k_max}")));
    }
    Ok(())
}

/// One exact marginal per member `k` of `e`, at fixed chain and offset `n`.
///
/// Members are evaluated in parallel; the output order and every value are independent
/// of scheduling.
pub fn sweep(spec: &ChainSpec, e: &IndexSetSpec, n: u64, k_max: u64) -> Result<DeviationSeries> {
    let ks = e.members();
    if ks.first() == Some(&0) {
        return Err(Error::Domain("sweeps need k >= 1".into()));
    }
    if let Some(&k) = ks.last() {
        check_k(k, k_max)?;
    }
    let records = ks
        .par_iter()
        .map(|&k| DeviationRecord::new(k, &exact_marginal(&DifferenceQuery::new(*spec, n, k))))
        .collect();
    Ok(DeviationSeries {
        chain: Some(*spec),
        n,
        set: e.to_string(),
        records,
    })
}

/// The control set `{2^m : 1 <= m <= m_max}`.
pub fn control_set(m_max: u32) -> Result<IndexSetSpec> {
    if m_max == 0 || m_max > 63 {
        return Err(Error::Domain(format!(
            "control m_max = {m_max} must lie in 1..=63"
        )));
    }
    IndexSetSpec::explicit((1..=m_max).map(|m| 1u64 << m).collect())
}

/// Deviations along the powers of two, where `nu(k) = 0` and `b(k) = 1`; neither
/// capacity grows there.
pub fn control_sweep(spec: &ChainSpec, n: u64, m_max: u32, k_max: u64) -> Result<DeviationSeries> {
    sweep(spec, &control_set(m_max)?, n, k_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RateFit {
    Fitted {
        /// `exp(slope)`
        delta_estimate: f64,
        slope: f64,
        intercept: f64,
        /// Coefficient of determination of the log-linear fit.
        goodness: f64,
        points: usize,
    },
    Insufficient {
        points: usize,
    },
}

impl RateFit {
    pub fn delta(&self) -> Option<f64> {
        match self {
            RateFit::Fitted { delta_estimate, .. } => Some(*delta_estimate),
            RateFit::Insufficient { .. } => None,
        }
    }

    pub fn goodness(&self) -> Option<f64> {
        match self {
            RateFit::Fitted { goodness, .. } => Some(*goodness),
            RateFit::Insufficient { .. } => None,
        }
    }
}

/// Ordinary least squares `y = intercept + slope * x`; returns `(slope, intercept, r^2)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Some((slope, intercept, r2))
}

/// Least-squares line through `(k, ln |e_k|)` over the non-underflow records.
pub fn fit_rate(series: &DeviationSeries) -> RateFit {
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .records
        .iter()
        .filter(|r| !r.underflow)
        .filter_map(|r| r.log_abs_deviation.map(|l| (r.k as f64, l)))
        .unzip();
    let points = xs.len();
    if points < 3 {
        return RateFit::Insufficient { points };
    }
    match least_squares(&xs, &ys) {
        Some((slope, intercept, goodness)) => RateFit::Fitted {
            delta_estimate: slope.exp(),
            slope,
            intercept,
            goodness,
            points,
        },
        None => RateFit::Insufficient { points },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub chain: ChainSpec,
    pub k: u64,
    pub n: u64,
    pub paths: u64,
    pub seed: u64,
    pub generator: String,
    pub ones: u64,
    pub frequency: f64,
    pub exact_probability_one: f64,
    /// `(freq - P) sqrt(paths) / sqrt(P (1 - P))`; `None` when `P (1 - P) = 0` and the
    /// sample disagrees with the degenerate law.
    pub z: Option<f64>,
}

/// Simulates `paths` independent windows `xi_n..xi_{n+k}` and compares the frequency of
/// `xi^(k)_n = 1` with the exact law.
///
/// Paths are grouped in blocks of [`MC_BLOCK`]; block `j` draws from stream `j` of the
/// generator seeded with `seed`, so the result does not depend on thread count.
pub fn monte_carlo_check(
    spec: &ChainSpec,
    k: u64,
    n: u64,
    paths: u64,
    seed: u64,
    k_max: u64,
) -> Result<MonteCarloReport> {
    if paths < 1000 {
        return Err(Error::Domain(format!(
            "Monte Carlo needs at least 1000 paths (got {paths})"
        )));
    }
    check_k(k, k_max)?;
    let exact = exact_marginal(&DifferenceQuery::new(*spec, n, k));
    let taps: Vec<usize> = PascalLineView::new(k).ones().map(|i| i as usize).collect();
    let window_len = (k + 1) as usize;
    let blocks = paths.div_ceil(MC_BLOCK);
    let ones: u64 = (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = block_rng(seed, block);
            let in_block = MC_BLOCK.min(paths - block * MC_BLOCK);
            let mut window = vec![0u8; window_len];
            let mut hits = 0u64;
            for _ in 0..in_block {
                let mut state = (rand::Rng::random::<f64>(&mut rng) < spec.q1()) as usize;
                for _ in 0..n {
                    state = spec.next_state(state, &mut rng);
                }
                window[0] = state as u8;
                for slot in window.iter_mut().skip(1) {
                    state = spec.next_state(state, &mut rng);
                    *slot = state as u8;
                }
                hits += taps.iter().fold(0u8, |acc, &i| acc ^ window[i]) as u64;
            }
            hits
        })
        .sum();
    let frequency = ones as f64 / paths as f64;
    let p = exact.probability_one;
    let var = p * (1.0 - p);
    let z = if var > 0.0 {
        Some((frequency - p) * (paths as f64).sqrt() / var.sqrt())
    } else if frequency == p {
        Some(0.0)
    } else {
        None
    };
    Ok(MonteCarloReport {
        chain: *spec,
        k,
        n,
        paths,
        seed,
        generator: GENERATOR_ID.to_string(),
        ones,
        frequency,
        exact_probability_one: p,
        z,
    })
}

/// `ln |e_k|` for i.i.d. Bernoulli(`q`) bits: `beta(k) ln |1 - 2q|`.
pub fn iid_log_abs_deviation(q: f64, k: u64) -> f64 {
    PascalLineView::new(k).beta() as f64 * (1.0 - 2.0 * q).abs().ln()
}

/// `ln |e_k|` for a symmetric chain (`s = p`), `k >= 1`: its increments are i.i.d.
/// Bernoulli(`1 - s`), so this is `beta(k - 1) ln |2s - 1|`.
pub fn symmetric_log_abs_deviation(s: f64, k: u64) -> f64 {
    debug_assert!(k >= 1);
    PascalLineView::new(k - 1).beta() as f64 * (2.0 * s - 1.0).abs().ln()
}

/// Whether each capacity grows along the enumerated prefix of a set: the minimum of
/// `nu` (resp. `b`) over the upper half of the members exceeds the minimum over the
/// lower half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityFlavor {
    pub big_c_growing: bool,
    pub small_c_growing: bool,
}

impl CapacityFlavor {
    pub fn of(members: &[u64]) -> Self {
        if members.len() < 2 {
            return Self {
                big_c_growing: false,
                small_c_growing: false,
            };
        }
        let (head, tail) = members.split_at(members.len() / 2);
        let grows = |f: fn(u64) -> u32| {
            let lo = head.iter().map(|&k| f(k)).min().unwrap_or(0);
            let hi = tail.iter().map(|&k| f(k)).min().unwrap_or(0);
            hi > lo
        };
        Self {
            big_c_growing: grows(u64::trailing_ones),
            small_c_growing: grows(u64::count_ones),
        }
    }

    /// Type I chains need `C` to grow along the set, type II chains need `c`.
    pub fn matches(&self, chain_type: ChainType) -> bool {
        match chain_type {
            ChainType::TypeI => self.big_c_growing,
            ChainType::TypeII => self.small_c_growing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// The final `|e|` of the sweep must fall below this.
    pub final_deviation: f64,
    /// Required ratio between the control's smallest `|e|` and the sweep's final `|e|`.
    pub control_factor: f64,
    /// Control set is `{2^m : m <= control_m_max}`.
    pub control_m_max: u32,
    pub eq_tolerance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            final_deviation: 1e-6,
            control_factor: 10.0,
            control_m_max: 14,
            eq_tolerance: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The final deviation is below threshold: the prefix is consistent with the
    /// fair-coin limit.
    ConsistentWithFairCoinLimit,
    /// The relevant capacity does not grow along the set and the deviation stays above
    /// threshold.
    NonConvergentControl,
    /// Capacity grows but the prefix has not reached the threshold.
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::ConsistentWithFairCoinLimit => "consistent-with-fair-coin-limit",
            Verdict::NonConvergentControl => "non-convergent-control",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlContrast {
    pub set: String,
    pub min_log10_abs_deviation: f64,
    /// `log10(min control |e| / final sweep |e|)`
    pub log10_ratio: f64,
    pub factor_met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub chain: ChainSpec,
    pub chain_type: ChainType,
    pub set: String,
    pub n: u64,
    pub thresholds: Thresholds,
    pub flavor: CapacityFlavor,
    pub warnings: Vec<String>,
    pub final_k: u64,
    pub final_log10_abs_deviation: f64,
    pub final_below_threshold: bool,
    /// First `k` from which `|e|` decreases strictly to the end of the sweep.
    pub monotone_from_k: Option<u64>,
    pub rate_fit: RateFit,
    pub control: ControlContrast,
    pub verdict: Verdict,
}

/// Sweep, rate fit and control contrast rolled into one descriptive verdict.
pub fn theorem_report(
    spec: &ChainSpec,
    e: &IndexSetSpec,
    n: u64,
    thresholds: &Thresholds,
    k_max: u64,
) -> Result<(TheoremReport, DeviationSeries)> {
    let series = sweep(spec, e, n, k_max)?;
    let Some(last) = series.last().copied() else {
        return Err(Error::Insufficient("the index set is empty".into()));
    };
    let chain_type = spec.classify(thresholds.eq_tolerance);
    let members: Vec<u64> = series.records.iter().map(|r| r.k).collect();
    let flavor = CapacityFlavor::of(&members);
    let mut warnings = Vec::new();
    if !flavor.matches(chain_type) {
        let needed = match chain_type {
            ChainType::TypeI => "C (sum of trailing-one counts)",
            ChainType::TypeII => "c (sum of digit sums)",
        };
        warnings.push(format!(
            "capacity {needed} does not grow along {} as a type {chain_type} chain requires",
            series.set
        ));
    }
    let final_log10 = last.log10_abs();
    let final_below_threshold = final_log10 < thresholds.final_deviation.log10();
    let monotone_from_k = match series.monotone_from() {
        Some(i) if series.records.len() >= 2 && i < series.records.len() - 1 => {
            Some(series.records[i].k)
        }
        _ => None,
    };

    let control_series = control_sweep(spec, n, thresholds.control_m_max, k_max)?;
    let min_control = control_series
        .records
        .iter()
        .map(DeviationRecord::log10_abs)
        .fold(f64::INFINITY, f64::min);
    let log10_ratio = min_control - final_log10;
    let control = ControlContrast {
        set: control_series.set.clone(),
        min_log10_abs_deviation: min_control,
        log10_ratio,
        factor_met: log10_ratio >= thresholds.control_factor.log10(),
    };

    let verdict = if final_below_threshold {
        Verdict::ConsistentWithFairCoinLimit
    } else if !flavor.matches(chain_type) {
        Verdict::NonConvergentControl
    } else {
        Verdict::Inconclusive
    };
    let report = TheoremReport {
        chain: *spec,
        chain_type,
        set: series.set.clone(),
        n,
        thresholds: *thresholds,
        flavor,
        warnings,
        final_k: last.k,
        final_log10_abs_deviation: final_log10,
        final_below_threshold,
        monotone_from_k,
        rate_fit: fit_rate(&series),
        control,
        verdict,
    };
    Ok((report, series))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn type_one() -> ChainSpec {
        ChainSpec::new(0.3, 0.8, 0.0).unwrap()
    }

    #[test]
    fn singleton_sweep_is_one_marginal() {
        let c = type_one();
        let s = sweep(
            &c,
            &IndexSetSpec::explicit(vec![9]).unwrap(),
            2,
            DEFAULT_K_MAX,
        )
        .unwrap();
        assert_eq!(s.records.len(), 1);
        let direct = exact_marginal(&DifferenceQuery::new(c, 2, 9));
        assert_eq!(s.records[0].deviation, direct.signed_deviation);
        assert_eq!(s.records[0].nu_k, 1);
        assert_eq!(s.records[0].b_k, 2);
    }

    #[test]
    fn mersenne_sweep_decreases() {
        let s = sweep(
            &type_one(),
            &IndexSetSpec::mersenne(20).unwrap(),
            0,
            DEFAULT_K_MAX,
        )
        .unwrap();
        let from = s.monotone_from().unwrap();
        assert!(s.records[from].k <= 7);
        assert!(s.last().unwrap().log10_abs() < -6.0);
    }

    #[test]
    fn sweep_cost_guard() {
        let e = IndexSetSpec::explicit(vec![3, 1 << 21]).unwrap();
        assert!(matches!(
            sweep(&type_one(), &e, 0, DEFAULT_K_MAX),
            Err(Error::CostGuard(_))
        ));
    }

    #[test]
    fn iid_sweep_matches_closed_form() {
        let c = ChainSpec::iid(0.3).unwrap();
        let s = sweep(&c, &IndexSetSpec::mersenne(10).unwrap(), 0, DEFAULT_K_MAX).unwrap();
        for r in &s.records {
            let want = iid_log_abs_deviation(0.3, r.k);
            assert!((r.log_abs_deviation.unwrap() - want).abs() < 1e-12);
            if !r.underflow {
                let closed = 0.4f64.powf(PascalLineView::new(r.k).beta() as f64);
                assert!((r.deviation.abs() - closed).abs() <= 1e-12 * closed);
            }
        }
    }

    #[test]
    fn iid_control_is_constant() {
        let c = ChainSpec::iid(0.3).unwrap();
        let s = control_sweep(&c, 0, 14, DEFAULT_K_MAX).unwrap();
        for r in &s.records {
            assert!((r.deviation.abs() - 0.16).abs() < 1e-15);
        }
        let first = exact_marginal(&DifferenceQuery::new(c, 0, 2));
        assert_eq!(s.records[0].deviation, first.signed_deviation);
    }

    #[test]
    fn exact_log_linear_fit() {
        let pts: Vec<(u64, f64)> = (1..=10).map(|k| (k, 0.5 * 0.4f64.powi(k as i32))).collect();
        let fit = fit_rate(&DeviationSeries::from_deviations(&pts).unwrap());
        match fit {
            RateFit::Fitted {
                delta_estimate,
                goodness,
                points,
                intercept,
                ..
            } => {
                assert!((delta_estimate - 0.4).abs() < 1e-10);
                assert!((goodness - 1.0).abs() < 1e-12);
                assert!((intercept - 0.5f64.ln()).abs() < 1e-10);
                assert_eq!(points, 10);
            }
            RateFit::Insufficient { .. } => panic!("expected a fit"),
        }
    }

    #[test]
    fn insufficient_fits() {
        let all_under =
            DeviationSeries::from_deviations(&[(1, 0.0), (2, 1e-320), (3, 0.0), (4, 0.0)]).unwrap();
        assert_eq!(fit_rate(&all_under), RateFit::Insufficient { points: 0 });
        let two = DeviationSeries::from_deviations(&[(1, 0.5), (2, 0.25)]).unwrap();
        assert_eq!(fit_rate(&two), RateFit::Insufficient { points: 2 });
        assert!(DeviationSeries::from_deviations(&[(2, 0.5), (2, 0.25)]).is_err());
    }

    #[test]
    fn least_squares_basics() {
        let (m, b, r2) = least_squares(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((m - 2.0).abs() < 1e-15 && (b - 1.0).abs() < 1e-15 && (r2 - 1.0).abs() < 1e-15);
        assert!(least_squares(&[1.0, 1.0], &[0.0, 1.0]).is_none());
        assert!(least_squares(&[1.0], &[0.0]).is_none());
    }

    #[test]
    fn monotone_from_cases() {
        let s =
            DeviationSeries::from_deviations(&[(1, 0.1), (2, 0.5), (3, 0.2), (4, 0.1)]).unwrap();
        assert_eq!(s.monotone_from(), Some(1));
        let flat = DeviationSeries::from_deviations(&[(1, 0.1), (2, 0.1)]).unwrap();
        assert_eq!(flat.monotone_from(), Some(1));
    }

    #[test]
    fn flavor_detection() {
        let mersenne = IndexSetSpec::mersenne(12).unwrap().members();
        let f = CapacityFlavor::of(&mersenne);
        assert!(f.big_c_growing && f.small_c_growing);
        let b_family = IndexSetSpec::parse("b:p=2..13,s=log2").unwrap().members();
        let f = CapacityFlavor::of(&b_family);
        assert!(!f.big_c_growing && f.small_c_growing);
        let powers = control_set(14).unwrap().members();
        let f = CapacityFlavor::of(&powers);
        assert!(!f.big_c_growing && !f.small_c_growing);
        assert!(!CapacityFlavor::of(&[7]).big_c_growing);
    }

    #[test]
    fn monte_carlo_degenerate_guard() {
        // k = 0, n = 0 and a surely-zero start: P(1) = 0 exactly.
        let c = ChainSpec::new(0.3, 0.8, 0.0).unwrap();
        let r = monte_carlo_check(&c, 0, 0, 2000, 1, DEFAULT_K_MAX).unwrap();
        assert_eq!(r.exact_probability_one, 0.0);
        assert_eq!(r.ones, 0);
        assert_eq!(r.z, Some(0.0));
    }

    #[test]
    fn monte_carlo_reproducible() {
        let c = type_one();
        let a = monte_carlo_check(&c, 5, 2, 5000, 99, DEFAULT_K_MAX).unwrap();
        let b = monte_carlo_check(&c, 5, 2, 5000, 99, DEFAULT_K_MAX).unwrap();
        assert_eq!(a, b);
        assert!(a.z.unwrap().abs() < 5.0);
        assert!(monte_carlo_check(&c, 5, 2, 999, 99, DEFAULT_K_MAX).is_err());
        assert!(matches!(
            monte_carlo_check(&c, 50, 2, 5000, 99, 10),
            Err(Error::CostGuard(_))
        ));
    }

    #[test]
    fn report_verdicts() {
        let t = Thresholds::default();
        let (rep, _) = theorem_report(
            &type_one(),
            &IndexSetSpec::mersenne(20).unwrap(),
            0,
            &t,
            DEFAULT_K_MAX,
        )
        .unwrap();
        assert_eq!(rep.chain_type, ChainType::TypeI);
        assert_eq!(rep.verdict, Verdict::ConsistentWithFairCoinLimit);
        assert!(rep.control.factor_met);
        assert!(rep.warnings.is_empty());

        let sym = ChainSpec::new(0.3, 0.3, 0.5).unwrap();
        let fam = IndexSetSpec::parse("b:p=2..13,s=log2").unwrap();
        let (rep, _) = theorem_report(&sym, &fam, 0, &t, DEFAULT_K_MAX).unwrap();
        assert_eq!(rep.chain_type, ChainType::TypeII);
        assert_eq!(rep.verdict, Verdict::ConsistentWithFairCoinLimit);

        let (rep, _) =
            theorem_report(&type_one(), &control_set(14).unwrap(), 0, &t, DEFAULT_K_MAX).unwrap();
        assert_eq!(rep.verdict, Verdict::NonConvergentControl);
        assert_eq!(rep.warnings.len(), 1);
    }

    #[test]
    fn csv_columns() {
        let s = DeviationSeries::from_deviations(&[(3, 0.25), (7, 0.0)]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "k,nu_k,b_k,deviation,log_abs_deviation,underflow_flag"
        );
        assert!(lines[1].starts_with("3,2,2,2.5e-1,"));
        assert!(lines[1].ends_with(",0"));
        assert_eq!(lines[2], "7,3,3,0e0,-inf,1");
    }
}
