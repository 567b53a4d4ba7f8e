//! Command execution behind the `diffchain` binary.
//!
//! Every output starts with the full [`RunConfig`] that produced it (a `# config:` line
//! in CSV, a `config` member in JSON), so [`replay`] can regenerate the file byte for
//! byte. Outputs contain no timestamps or host details.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::capacity::{
    closed_form_big_c_bp, closed_form_small_c_bp, thickness_report, CapacityReport, Density,
    FamilyKind, IndexSetSpec, ThicknessReport,
};
use crate::chain::{ChainSpec, ChainType, GENERATOR_ID};
use crate::convergence::{
    monte_carlo_check, theorem_report, MonteCarloReport, RateFit, Thresholds, DEFAULT_K_MAX,
};
use crate::diffkernel::{brute_force_marginal, exact_marginal, DifferenceQuery, MarginalResult};
use crate::error::{Error, Result};

pub const TOOL: &str = "diffchain";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Agreement required between `dist` and its brute-force oracle.
pub const ORACLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Caps,
    Dist,
    Converge,
    Simulate,
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Everything needed to reproduce one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub chain: Option<String>,
    pub set: Option<String>,
    pub n: u64,
    pub k: Option<u64>,
    pub k_max: u64,
    pub paths: Option<u64>,
    pub seed: Option<u64>,
    pub m: Vec<u64>,
    pub brute: bool,
    pub members: bool,
    pub tol: f64,
    pub threshold: f64,
    pub control_factor: f64,
    pub control_mmax: u32,
    pub format: Format,
    pub out: Option<String>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        let t = Thresholds::default();
        Self {
            command,
            chain: None,
            set: None,
            n: 0,
            k: None,
            k_max: DEFAULT_K_MAX,
            paths: None,
            seed: None,
            m: Vec::new(),
            brute: false,
            members: false,
            tol: t.eq_tolerance,
            threshold: t.final_deviation,
            control_factor: t.control_factor,
            control_mmax: t.control_m_max,
            format: Format::Csv,
            out: None,
        }
    }

    fn chain_spec(&self) -> Result<ChainSpec> {
        let text = self
            .chain
            .as_deref()
            .ok_or_else(|| usage("--chain is required"))?;
        ChainSpec::parse(text)
    }

    fn set_spec(&self) -> Result<IndexSetSpec> {
        let text = self
            .set
            .as_deref()
            .ok_or_else(|| usage("--set is required"))?;
        IndexSetSpec::parse(text)
    }

    fn order(&self) -> Result<u64> {
        self.k.ok_or_else(|| usage("--k is required"))
    }

    fn thresholds(&self) -> Thresholds {
        Thresholds {
            final_deviation: self.threshold,
            control_factor: self.control_factor,
            control_m_max: self.control_mmax,
            eq_tolerance: self.tol,
        }
    }
}

fn usage(msg: &str) -> Error {
    Error::Domain(msg.to_string())
}

/// Process exit code for an error: 2 for usage, parse and domain errors, 3 for
/// cost-guard refusals.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::CostGuard(_) => 3,
        Error::Io(_) => 1,
        Error::Parse { .. } | Error::Domain(_) | Error::Insufficient(_) => 2,
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    result: T,
}

fn json<T: Serialize>(config: &RunConfig, result: T) -> Result<String> {
    let env = Envelope {
        tool: TOOL,
        version: VERSION,
        config,
        result,
    };
    let mut text = serde_json::to_string_pretty(&env).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn csv_header(config: &RunConfig) -> Result<String> {
    let cfg = serde_json::to_string(config).map_err(|e| Error::Io(e.to_string()))?;
    Ok(format!("# {TOOL} {VERSION}\n# config: {cfg}\n"))
}

fn key_values(out: &mut String, section: &str, rows: &[(&str, String)]) {
    let _ = writeln!(out, "# section: {section}");
    let _ = writeln!(out, "key,value");
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{v}");
    }
}

/// Runs one command and returns the text to emit.
pub fn execute(config: &RunConfig) -> Result<String> {
    match config.command {
        Command::Caps => cmd_caps(config),
        Command::Dist => cmd_dist(config),
        Command::Converge => cmd_converge(config),
        Command::Simulate => cmd_simulate(config),
        Command::Density => cmd_density(config),
    }
}

/// Recovers the embedded configuration from a previously written output.
pub fn extract_config(text: &str) -> Result<RunConfig> {
    let bad = |msg: String| Error::Parse {
        input: String::new(),
        pos: 0,
        msg,
    };
    if text.trim_start().starts_with('{') {
        #[derive(Deserialize)]
        struct Head {
            config: RunConfig,
        }
        let head: Head = serde_json::from_str(text)
            .map_err(|e| bad(format!("not a {TOOL} JSON output: {e}")))?;
        return Ok(head.config);
    }
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix("# config: "))
        .ok_or_else(|| bad(format!("no '# config:' line; not a {TOOL} CSV output")))?;
    serde_json::from_str(line).map_err(|e| bad(format!("embedded config is malformed: {e}")))
}

/// Re-executes the configuration embedded in `text`.
pub fn replay(text: &str) -> Result<(RunConfig, String)> {
    let config = extract_config(text)?;
    let output = execute(&config)?;
    Ok((config, output))
}

#[derive(Serialize)]
struct MemberRow {
    k: u64,
    nu: u32,
    b: u32,
}

#[derive(Serialize)]
struct ClosedFormColumn {
    p: u32,
    s_p: u32,
    direct: u64,
    printed_closed_form: u128,
    difference: i128,
}

#[derive(Serialize)]
struct CapsResult {
    report: CapacityReport,
    members: Option<Vec<MemberRow>>,
    closed_form: Option<Vec<ClosedFormColumn>>,
}

fn closed_form_columns(thickness: &ThicknessReport) -> Vec<ClosedFormColumn> {
    thickness
        .rows
        .iter()
        .map(|row| {
            let printed = match thickness.kind {
                FamilyKind::TrailingOnes => closed_form_big_c_bp(row.p, row.s_p),
                FamilyKind::DigitSum => closed_form_small_c_bp(row.p, row.s_p),
            };
            ClosedFormColumn {
                p: row.p,
                s_p: row.s_p,
                direct: row.slice_capacity,
                printed_closed_form: printed,
                difference: printed as i128 - row.slice_capacity as i128,
            }
        })
        .collect()
}

fn cmd_caps(config: &RunConfig) -> Result<String> {
    let e = config.set_spec()?;
    let p_max = match &e {
        IndexSetSpec::FamilyUnion { p_max, .. } => Some(*p_max),
        _ => None,
    };
    let report = CapacityReport::build(&e, &config.m, p_max)?;
    let members = config.members.then(|| {
        e.iter()
            .map(|k| MemberRow {
                k,
                nu: k.trailing_ones(),
                b: k.count_ones(),
            })
            .collect::<Vec<_>>()
    });
    let closed_form = report.thickness.as_ref().map(closed_form_columns);
    let result = CapsResult {
        report,
        members,
        closed_form,
    };
    if config.format == Format::Json {
        return json(config, result);
    }
    let mut out = csv_header(config)?;
    let r = &result.report;
    key_values(
        &mut out,
        "capacity",
        &[
            ("set", r.set.clone()),
            ("size", r.size.to_string()),
            ("C", r.big_c.to_string()),
            ("c", r.small_c.to_string()),
        ],
    );
    if !r.densities.is_empty() {
        write_densities(&mut out, &r.densities);
    }
    if let (Some(t), Some(cf)) = (&r.thickness, &result.closed_form) {
        let _ = writeln!(out, "# section: thickness");
        let _ = writeln!(out, "# s_trend: {}", t.s_trend);
        let _ = writeln!(
            out,
            "p,s_p,slice_size,slice_capacity,term,partial_sum,printed_closed_form,closed_form_difference"
        );
        for (row, c) in t.rows.iter().zip(cf) {
            let _ = writeln!(
                out,
                "{},{},{},{},{:e},{:e},{},{}",
                row.p,
                row.s_p,
                row.slice_size,
                row.slice_capacity,
                row.term,
                row.partial_sum,
                c.printed_closed_form,
                c.difference
            );
        }
    }
    if let Some(members) = &result.members {
        let _ = writeln!(out, "# section: members");
        let _ = writeln!(out, "k,nu,b");
        for m in members {
            let _ = writeln!(out, "{},{},{}", m.k, m.nu, m.b);
        }
    }
    Ok(out)
}

fn write_densities(out: &mut String, densities: &[Density]) {
    let _ = writeln!(out, "# section: density");
    let _ = writeln!(out, "m,count,rho");
    for d in densities {
        let _ = writeln!(out, "{},{},{}", d.m, d.count, d.value());
    }
}

#[derive(Serialize)]
struct DistResult {
    chain: ChainSpec,
    chain_type: ChainType,
    n: u64,
    k: u64,
    exact: MarginalResult,
    brute: Option<MarginalResult>,
    oracle: Option<&'static str>,
}

fn cmd_dist(config: &RunConfig) -> Result<String> {
    let chain = config.chain_spec()?;
    let k = config.order()?;
    if k > config.k_max {
        return Err(Error::CostGuard(format!(
            "k = {k} exceeds k_max = {}",
            config.k_max
        )));
    }
    let q = DifferenceQuery::new(chain, config.n, k);
    let exact = exact_marginal(&q);
    let brute = if config.brute {
        Some(brute_force_marginal(&q)?)
    } else {
        None
    };
    let oracle = brute.map(|b| {
        if (b.probability_one - exact.probability_one).abs() <= ORACLE_TOLERANCE {
            "match"
        } else {
            "mismatch"
        }
    });
    let result = DistResult {
        chain,
        chain_type: chain.classify(config.tol),
        n: config.n,
        k,
        exact,
        brute,
        oracle,
    };
    if config.format == Format::Json {
        return json(config, result);
    }
    let mut out = csv_header(config)?;
    let mut rows = vec![
        ("chain", chain.to_string()),
        ("chain_type", result.chain_type.to_string()),
        ("n", config.n.to_string()),
        ("k", k.to_string()),
        ("probability_one", exact.probability_one.to_string()),
        ("probability_zero", exact.probability_zero().to_string()),
        ("deviation", format!("{:e}", exact.signed_deviation)),
        ("log_abs_deviation", fmt_log(exact.log_abs_deviation)),
        ("underflow_flag", (exact.underflow as u8).to_string()),
    ];
    if let (Some(b), Some(o)) = (brute, oracle) {
        rows.push(("brute_probability_one", b.probability_one.to_string()));
        rows.push(("oracle", o.to_string()));
    }
    key_values(&mut out, "marginal", &rows);
    Ok(out)
}

fn fmt_log(l: Option<f64>) -> String {
    match l {
        Some(v) => format!("{v:e}"),
        None => "-inf".into(),
    }
}

fn cmd_converge(config: &RunConfig) -> Result<String> {
    let chain = config.chain_spec()?;
    let e = config.set_spec()?;
    let (report, series) =
        theorem_report(&chain, &e, config.n, &config.thresholds(), config.k_max)?;
    if config.format == Format::Json {
        #[derive(Serialize)]
        struct ConvergeResult<'a> {
            report: &'a crate::convergence::TheoremReport,
            series: &'a crate::convergence::DeviationSeries,
        }
        return json(
            config,
            ConvergeResult {
                report: &report,
                series: &series,
            },
        );
    }
    let mut out = csv_header(config)?;
    let mut rows = vec![
        ("chain", chain.to_string()),
        ("chain_type", report.chain_type.to_string()),
        ("set", report.set.clone()),
        ("n", report.n.to_string()),
        ("verdict", report.verdict.to_string()),
        ("final_k", report.final_k.to_string()),
        (
            "final_log10_abs_deviation",
            format!("{:e}", report.final_log10_abs_deviation),
        ),
        (
            "final_below_threshold",
            report.final_below_threshold.to_string(),
        ),
        (
            "monotone_from_k",
            report
                .monotone_from_k
                .map_or("none".to_string(), |k| k.to_string()),
        ),
        ("big_c_growing", report.flavor.big_c_growing.to_string()),
        ("small_c_growing", report.flavor.small_c_growing.to_string()),
        ("control_set", report.control.set.clone()),
        (
            "control_min_log10_abs_deviation",
            format!("{:e}", report.control.min_log10_abs_deviation),
        ),
        (
            "control_log10_ratio",
            format!("{:e}", report.control.log10_ratio),
        ),
        ("control_factor_met", report.control.factor_met.to_string()),
    ];
    match report.rate_fit {
        RateFit::Fitted {
            delta_estimate,
            slope,
            intercept,
            goodness,
            points,
        } => {
            rows.push(("fit_delta_estimate", format!("{delta_estimate:e}")));
            rows.push(("fit_slope", format!("{slope:e}")));
            rows.push(("fit_intercept", format!("{intercept:e}")));
            rows.push(("fit_goodness", format!("{goodness:e}")));
            rows.push(("fit_points", points.to_string()));
        }
        RateFit::Insufficient { points } => {
            rows.push(("fit_delta_estimate", "insufficient".into()));
            rows.push(("fit_points", points.to_string()));
        }
    }
    for w in &report.warnings {
        let _ = writeln!(out, "# warning: {w}");
    }
    key_values(&mut out, "verdict", &rows);
    let _ = writeln!(out, "# section: series");
    let mut buf = Vec::new();
    series.write_csv(&mut buf)?;
    out.push_str(&String::from_utf8_lossy(&buf));
    Ok(out)
}

fn cmd_simulate(config: &RunConfig) -> Result<String> {
    let chain = config.chain_spec()?;
    let k = config.order()?;
    let paths = config.paths.ok_or_else(|| usage("--paths is required"))?;
    let seed = config.seed.ok_or_else(|| usage("--seed is required"))?;
    let report: MonteCarloReport =
        monte_carlo_check(&chain, k, config.n, paths, seed, config.k_max)?;
    if config.format == Format::Json {
        return json(config, report);
    }
    let mut out = csv_header(config)?;
    key_values(
        &mut out,
        "monte_carlo",
        &[
            ("chain", chain.to_string()),
            ("k", k.to_string()),
            ("n", config.n.to_string()),
            ("paths", paths.to_string()),
            ("seed", seed.to_string()),
            ("generator", GENERATOR_ID.to_string()),
            ("ones", report.ones.to_string()),
            ("frequency", report.frequency.to_string()),
            (
                "exact_probability_one",
                report.exact_probability_one.to_string(),
            ),
            ("z", report.z.map_or("undefined".into(), |z| z.to_string())),
        ],
    );
    Ok(out)
}

fn cmd_density(config: &RunConfig) -> Result<String> {
    let e = config.set_spec()?;
    if config.m.is_empty() {
        return Err(usage("--m needs at least one sample point"));
    }
    let densities = crate::capacity::density_trend(&e, &config.m)?;
    if config.format == Format::Json {
        #[derive(Serialize)]
        struct Row {
            m: u64,
            count: u64,
            rho: f64,
        }
        let rows: Vec<Row> = densities
            .iter()
            .map(|d| Row {
                m: d.m,
                count: d.count,
                rho: d.value(),
            })
            .collect();
        return json(config, rows);
    }
    let mut out = csv_header(config)?;
    let _ = writeln!(out, "# set: {e}");
    write_densities(&mut out, &densities);
    Ok(out)
}

/// Thickness table alone, for callers that only need the family partial sums.
pub fn thickness_table(set: &str, p_max: u32) -> Result<ThicknessReport> {
    thickness_report(&IndexSetSpec::parse(set)?, p_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn caps(set: &str) -> RunConfig {
        let mut c = RunConfig::new(Command::Caps);
        c.set = Some(set.into());
        c
    }

    fn kv(out: &str, key: &str) -> String {
        out.lines()
            .find_map(|l| l.strip_prefix(&format!("{key},")))
            .unwrap_or_else(|| panic!("missing {key} in\n{out}"))
            .to_string()
    }

    #[test]
    fn caps_list() {
        let out = execute(&caps("list:5,6,7")).unwrap();
        assert_eq!(kv(&out, "c"), "7");
        assert_eq!(kv(&out, "C"), "4");
    }

    #[test]
    fn caps_mersenne() {
        let out = execute(&caps("mersenne:mmax=4")).unwrap();
        assert_eq!(kv(&out, "C"), "10");
    }

    #[test]
    fn caps_rejects_zero() {
        let err = execute(&caps("list:0")).unwrap_err();
        assert_eq!(exit_code(&err), 2);
        assert!(matches!(err, Error::Parse { pos: 5, .. }));
    }

    #[test]
    fn caps_family_has_thickness_and_closed_forms() {
        let out = execute(&caps("B:p=2..6,s=log2")).unwrap();
        assert!(out.contains("# section: thickness"));
        assert!(out.contains("printed_closed_form"));
        let mut c = caps("list:3,4");
        c.members = true;
        let out = execute(&c).unwrap();
        assert!(out.contains("k,nu,b\n3,2,2\n4,0,1\n"));
    }

    fn dist(chain: &str, n: u64, k: u64) -> RunConfig {
        let mut c = RunConfig::new(Command::Dist);
        c.chain = Some(chain.into());
        c.n = n;
        c.k = Some(k);
        c
    }

    #[test]
    fn dist_iid() {
        let out = execute(&dist("s=0.7,p=0.3,q1=0.3", 0, 1)).unwrap();
        let p: f64 = kv(&out, "probability_one").parse().unwrap();
        assert!((p - 0.42).abs() < 1e-15);
        let out = execute(&dist("s=0.7,p=0.3,q1=0.3", 0, 0)).unwrap();
        let p: f64 = kv(&out, "probability_one").parse().unwrap();
        assert!((p - 0.3).abs() < 1e-15);
    }

    #[test]
    fn dist_brute_flag() {
        let mut c = dist("s=0.3,p=0.8,q1=0.5", 2, 9);
        c.brute = true;
        let out = execute(&c).unwrap();
        assert_eq!(kv(&out, "oracle"), "match");
        c.k = Some(23);
        assert_eq!(exit_code(&execute(&c).unwrap_err()), 3);
        let mut big = dist("s=0.3,p=0.8", 0, 1 << 21);
        assert_eq!(exit_code(&execute(&big).unwrap_err()), 3);
        big.k_max = 1 << 22;
        assert!(execute(&big).is_ok());
    }

    #[test]
    fn missing_arguments_are_usage_errors() {
        let c = RunConfig::new(Command::Dist);
        assert_eq!(exit_code(&execute(&c).unwrap_err()), 2);
        let mut c = dist("s=0.3,p=1.3", 0, 1);
        assert_eq!(exit_code(&execute(&c).unwrap_err()), 2);
        c.chain = Some("s=0.3,p=0.3".into());
        c.k = None;
        assert_eq!(exit_code(&execute(&c).unwrap_err()), 2);
    }

    #[test]
    fn replay_round_trip_csv_and_json() {
        let mut c = RunConfig::new(Command::Converge);
        c.chain = Some("s=0.3,p=0.8,q1=0".into());
        c.set = Some("mersenne:mmax=12".into());
        for format in [Format::Csv, Format::Json] {
            c.format = format;
            let first = execute(&c).unwrap();
            let (cfg, again) = replay(&first).unwrap();
            assert_eq!(cfg, c);
            assert_eq!(again, first);
        }
        assert!(extract_config("k,v\n1,2\n").is_err());
        assert!(extract_config("{\"nope\": 1}").is_err());
    }

    #[test]
    fn density_command() {
        let mut c = RunConfig::new(Command::Density);
        c.set = Some("pred:range=1..100,even".into());
        c.m = vec![10, 100];
        let out = execute(&c).unwrap();
        assert!(out.contains("m,count,rho\n10,5,0.5\n100,50,0.5\n"));
        c.m = vec![];
        assert!(execute(&c).is_err());
    }

    #[test]
    fn simulate_command() {
        let mut c = RunConfig::new(Command::Simulate);
        c.chain = Some("s=0.3,p=0.8,q1=0.5".into());
        c.k = Some(3);
        c.paths = Some(4000);
        c.seed = Some(5);
        let out = execute(&c).unwrap();
        assert_eq!(kv(&out, "generator"), GENERATOR_ID);
        let z: f64 = kv(&out, "z").parse().unwrap();
        assert!(z.abs() < 5.0);
    }
}
