//! Sweep engine and report builders behind the `distill` binary:
//! protocol families, parameter grids, deterministic CSV/JSON-lines
//! emission, security reports, and the verification driver.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use distill_core::{
    bb84_rate, critical_qber, dejmps_recursive, finite_envelope, read_transversal, repetition_ad,
    BellDiagonalState, EdConfig, EnvelopeProtocol, Error as CoreError, KeyRateInputs, Objective,
    PermSet, ProtocolEvaluator, SecurityFamily,
};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CACHE: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// CLI-level error carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Cache(String),
    Verify(String),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Cache(msg) => write!(f, "cache error: {msg}"),
            CliError::Verify(msg) => write!(f, "verification failure: {msg}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Cache(_) => EXIT_CACHE,
            CliError::Verify(_) => EXIT_VERIFY,
            CliError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Io(e)
    }
}

fn config_err(e: CoreError) -> CliError {
    CliError::Config(e.to_string())
}

/// An m-n-1 protocol family; n = 1 denotes the ED-only m-1 family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Family {
    pub m: usize,
    pub n: usize,
}

/// The nine families studied: ED-only plus the ED+AD concatenations.
pub const TABLE1_FAMILIES: [Family; 9] = [
    Family { m: 2, n: 1 },
    Family { m: 3, n: 1 },
    Family { m: 4, n: 1 },
    Family { m: 2, n: 2 },
    Family { m: 2, n: 3 },
    Family { m: 3, n: 2 },
    Family { m: 3, n: 3 },
    Family { m: 2, n: 4 },
    Family { m: 4, n: 2 },
];

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n == 1 {
            write!(f, "{}-1", self.m)
        } else {
            write!(f, "{}-{}-1", self.m, self.n)
        }
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Family, String> {
        let parts: Vec<&str> = s.split('-').collect();
        let family = match parts.as_slice() {
            [m, "1"] => Family { m: m.parse().map_err(|_| format!("bad family `{s}`"))?, n: 1 },
            [m, n, "1"] => Family {
                m: m.parse().map_err(|_| format!("bad family `{s}`"))?,
                n: n.parse().map_err(|_| format!("bad family `{s}`"))?,
            },
            _ => return Err(format!("bad family `{s}`; expected m-1 or m-n-1")),
        };
        if !TABLE1_FAMILIES.contains(&family) {
            return Err(format!(
                "family `{s}` is not one of the nine supported families"
            ));
        }
        Ok(family)
    }
}

/// A comma-separated family list, or "all".
#[derive(Clone, Debug)]
pub struct FamilyList(pub Vec<Family>);

impl FromStr for FamilyList {
    type Err = String;

    fn from_str(s: &str) -> Result<FamilyList, String> {
        if s == "all" {
            return Ok(FamilyList(TABLE1_FAMILIES.to_vec()));
        }
        s.split(',').map(|part| part.trim().parse()).collect::<Result<_, _>>().map(FamilyList)
    }
}

/// An inclusive a:b:step grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Grid, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, step] = parts.as_slice() else {
            return Err(format!("bad grid `{s}`; expected start:stop:step"));
        };
        let parse = |t: &str| t.parse::<f64>().map_err(|_| format!("bad grid value `{t}`"));
        let grid = Grid { start: parse(a)?, stop: parse(b)?, step: parse(step)? };
        let valid = grid.step.is_finite() && grid.step > 0.0 && grid.stop >= grid.start;
        if !valid {
            return Err(format!("bad grid `{s}`; need step > 0 and stop >= start"));
        }
        Ok(grid)
    }
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// Input noise model of a sweep; the grid parameter is the input
/// fidelity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseModel {
    Werner,
    Dephasing,
}

impl NoiseModel {
    pub fn state_at(&self, f_in: f64) -> Result<BellDiagonalState, CliError> {
        match self {
            NoiseModel::Werner => BellDiagonalState::werner(f_in).map_err(config_err),
            NoiseModel::Dephasing => BellDiagonalState::dephasing(1.0 - f_in).map_err(config_err),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::Werner => "werner",
            NoiseModel::Dephasing => "dephasing",
        }
    }

    /// Default sweep grid, dense enough to resolve the rate thresholds.
    pub fn default_grid(&self) -> Grid {
        match self {
            NoiseModel::Werner => Grid { start: 0.5, stop: 1.0, step: 0.002 },
            NoiseModel::Dephasing => Grid { start: 0.8, stop: 1.0, step: 0.001 },
        }
    }
}

impl FromStr for NoiseModel {
    type Err = String;

    fn from_str(s: &str) -> Result<NoiseModel, String> {
        match s {
            "werner" => Ok(NoiseModel::Werner),
            "dephasing" => Ok(NoiseModel::Dephasing),
            _ => Err(format!("unknown noise model `{s}`")),
        }
    }
}

pub fn parse_objective(s: &str) -> Result<Objective, String> {
    match s {
        "fidelity" => Ok(Objective::Fidelity),
        "keyrate" => Ok(Objective::Bb84Rate),
        _ => Err(format!("unknown objective `{s}`")),
    }
}

pub fn parse_perm_set(s: &str) -> Result<PermSet, String> {
    match s {
        "pauli4" => Ok(PermSet::Pauli4),
        "full24" => Ok(PermSet::Full24),
        _ => Err(format!("unknown permutation set `{s}`")),
    }
}

/// Output format of the sweep stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<OutputFormat, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            _ => Err(format!("unknown output format `{s}`")),
        }
    }
}

/// Full configuration of one sweep run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub noise: NoiseModel,
    pub families: Vec<Family>,
    pub objective: Objective,
    pub perm_set: PermSet,
    pub grid: Grid,
    pub workers: usize,
    pub cache_dir: PathBuf,
    pub dejmps_baseline: bool,
}

/// One row of a sweep: the optimizing (protocol, permutation) for a
/// family at a grid point.
#[derive(Clone, Copy, Debug)]
pub struct SweepRecord {
    pub family: Family,
    pub perm_id: u32,
    pub f_in: f64,
    pub f_out: f64,
    pub p_ed: f64,
    pub p_ad: f64,
    pub key_rate: f64,
    pub baseline: Option<f64>,
}

/// Conventional cache file name for the m-pair transversal.
pub fn cache_path(dir: &Path, m: usize) -> PathBuf {
    dir.join(format!("transversal_m{m}.blct"))
}

fn load_evaluators(
    cache_dir: &Path,
    families: &[Family],
) -> Result<BTreeMap<usize, ProtocolEvaluator>, CliError> {
    let mut evaluators = BTreeMap::new();
    for family in families {
        if evaluators.contains_key(&family.m) {
            continue;
        }
        let path = cache_path(cache_dir, family.m);
        let transversal = read_transversal(&path, family.m).map_err(|e| {
            CliError::Cache(format!(
                "{e} ({}): run `distill transversal --m {} --cache {}`",
                path.display(),
                family.m,
                cache_dir.display()
            ))
        })?;
        evaluators.insert(family.m, ProtocolEvaluator::new(&transversal));
    }
    Ok(evaluators)
}

fn record_for(
    config: &RunConfig,
    evaluators: &BTreeMap<usize, ProtocolEvaluator>,
    family: Family,
    f_in: f64,
) -> Result<SweepRecord, CliError> {
    let input = config.noise.state_at(f_in)?;
    let evaluator = &evaluators[&family.m];
    let best = evaluator
        .enumerate_best_seq(family.n, &input, config.objective, config.perm_set)
        .map_err(config_err)?;
    let key_rate = match best.outcome.state() {
        Some(s) => bb84_rate(&KeyRateInputs::for_state(
            s,
            best.p_ed,
            best.p_ad,
            family.m as u32,
            family.n as u32,
        )),
        None => 0.0,
    };
    let baseline = if config.dejmps_baseline {
        Some(dejmps_baseline_value(config.objective, family, &input)?)
    } else {
        None
    };
    Ok(SweepRecord {
        family,
        perm_id: best.perm_id,
        f_in,
        f_out: best.outcome.fidelity().unwrap_or(0.0),
        p_ed: best.p_ed,
        p_ad: best.p_ad,
        key_rate,
        baseline,
    })
}

/// Objective value of the recursive-DEJMPS counterpart of a family: the
/// ED stage is the m-1 recursive 2-to-1 protocol, with no intermediate
/// fix-up, followed by the same n-to-1 repetition stage.
pub fn dejmps_baseline_value(
    objective: Objective,
    family: Family,
    input: &BellDiagonalState,
) -> Result<f64, CliError> {
    let ed = dejmps_recursive(family.m, input).map_err(config_err)?;
    let Some(intermediate) = ed.state() else {
        return Ok(0.0);
    };
    let ad = repetition_ad(family.n, intermediate).map_err(config_err)?;
    let Some(final_state) = ad.state() else {
        return Ok(0.0);
    };
    Ok(match objective {
        Objective::Fidelity => final_state.fidelity(),
        Objective::Bb84Rate => bb84_rate(&KeyRateInputs::for_state(
            final_state,
            ed.success_prob(),
            ad.success_prob(),
            family.m as u32,
            family.n as u32,
        )),
    })
}

/// Runs a sweep: one record per (family, grid point), deterministic
/// ordering regardless of worker count.
pub fn run_sweep(config: &RunConfig) -> Result<Vec<SweepRecord>, CliError> {
    if config.families.is_empty() {
        return Err(CliError::Config("no families requested".into()));
    }
    let evaluators = load_evaluators(&config.cache_dir, &config.families)?;
    let points = config.grid.points();
    // Fail fast on grid points outside the noise model's domain.
    for &f in &points {
        config.noise.state_at(f)?;
    }
    let tasks: Vec<(Family, f64)> = config
        .families
        .iter()
        .flat_map(|&family| points.iter().map(move |&f| (family, f)))
        .collect();

    let run = || -> Result<Vec<SweepRecord>, CliError> {
        #[cfg(feature = "parallel")]
        {
            tasks
                .par_iter()
                .map(|&(family, f)| record_for(config, &evaluators, family, f))
                .collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            tasks
                .iter()
                .map(|&(family, f)| record_for(config, &evaluators, family, f))
                .collect()
        }
    };

    #[cfg(feature = "parallel")]
    if config.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?;
        return pool.install(run);
    }
    run()
}

/// Stable CSV header; the baseline column is appended only on request.
pub fn csv_header(baseline: bool) -> &'static str {
    if baseline {
        "family,m,n,perm_id,F_in,F_out,p_ed,p_ad,key_rate,dejmps_baseline"
    } else {
        "family,m,n,perm_id,F_in,F_out,p_ed,p_ad,key_rate"
    }
}

/// Writes records in the requested format; float fields use shortest
/// round-trip formatting, so identical runs are byte-identical.
pub fn write_records<W: Write>(
    out: &mut W,
    records: &[SweepRecord],
    format: OutputFormat,
    baseline: bool,
) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(out, "{}", csv_header(baseline))?;
            for r in records {
                write!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.family, r.family.m, r.family.n, r.perm_id, r.f_in, r.f_out, r.p_ed, r.p_ad,
                    r.key_rate
                )?;
                if baseline {
                    write!(out, ",{}", r.baseline.unwrap_or(0.0))?;
                }
                writeln!(out)?;
            }
        }
        OutputFormat::Jsonl => {
            for r in records {
                write!(
                    out,
                    "{{\"family\":\"{}\",\"m\":{},\"n\":{},\"perm_id\":{},\"F_in\":{},\"F_out\":{},\"p_ed\":{},\"p_ad\":{},\"key_rate\":{}",
                    r.family, r.family.m, r.family.n, r.perm_id, r.f_in, r.f_out, r.p_ed, r.p_ad,
                    r.key_rate
                )?;
                if baseline {
                    write!(out, ",\"dejmps_baseline\":{}", r.baseline.unwrap_or(0.0))?;
                }
                writeln!(out, "}}")?;
            }
        }
    }
    Ok(())
}

/// Options of the finite-envelope section of a security report.
#[derive(Clone, Copy, Debug)]
pub struct FiniteOptions {
    pub n_max: u32,
    pub qgrid: Grid,
}

fn parse_security_family(s: &str) -> Result<SecurityFamily, CliError> {
    SecurityFamily::ALL
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| CliError::Config(format!("unknown security family `{s}`")))
}

/// Builds the `security` report: critical QBER per family and, when
/// requested, the min/max mutual-information envelopes over AD rounds.
pub fn security_report(
    family: Option<&str>,
    finite: Option<FiniteOptions>,
) -> Result<String, CliError> {
    let families: Vec<SecurityFamily> = match family {
        Some(name) => vec![parse_security_family(name)?],
        None => SecurityFamily::ALL.to_vec(),
    };
    let mut out = String::new();
    for f in &families {
        let result = critical_qber(*f, 1e-6).map_err(|e| CliError::Config(e.to_string()))?;
        out.push_str(&format!("{:<16} Q* = {:.4}", f.name(), result.q));
        if let Some((id, perm)) = result.winning_perm {
            out.push_str(&format!("  (winning permutation {perm}, id {id})"));
        }
        out.push('\n');
    }
    if let Some(opts) = finite {
        let protocols: Vec<EnvelopeProtocol> = match family {
            Some(name) if name.starts_with("six_state") => vec![EnvelopeProtocol::SixState],
            Some(_) => vec![EnvelopeProtocol::Bb84],
            None => vec![EnvelopeProtocol::SixState, EnvelopeProtocol::Bb84],
        };
        for protocol in protocols {
            for config in EdConfig::for_protocol(protocol) {
                for q in opts.qgrid.points() {
                    match finite_envelope(protocol, config, opts.n_max, q) {
                        Ok((lo, hi)) => out.push_str(&format!(
                            "{:<10} {:<13} Q={:.4}  min={:+.6}  max={:+.6}\n",
                            protocol.name(),
                            config.name(),
                            q,
                            lo,
                            hi
                        )),
                        Err(e) => {
                            return Err(CliError::Config(format!(
                                "{} {} at Q={q}: {e}",
                                protocol.name(),
                                config.name()
                            )))
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Runs the oracle suite plus validation of any cache files found in
/// `cache_dir`. Returns the report lines and overall success.
pub fn run_verify(cache_dir: Option<&Path>) -> (String, bool) {
    let mut checks = distill_core::verify::run_standard_checks();
    if let Some(dir) = cache_dir {
        if dir.is_dir() {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
                .map(|entries| {
                    entries
                        .filter_map(|e| e.ok().map(|e| e.path()))
                        .filter(|p| p.extension().map(|x| x == "blct").unwrap_or(false))
                        .collect()
                })
                .unwrap_or_default();
            paths.sort();
            for path in paths {
                checks.push(distill_core::verify::check_cache_file(&path));
            }
        }
    }
    let mut report = String::new();
    let mut all_passed = true;
    for check in &checks {
        all_passed &= check.passed;
        report.push_str(&format!(
            "{} {} ({})\n",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        ));
    }
    (report, all_passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_parsing() {
        assert_eq!("2-1".parse::<Family>().unwrap(), Family { m: 2, n: 1 });
        assert_eq!("3-2-1".parse::<Family>().unwrap(), Family { m: 3, n: 2 });
        assert_eq!("2-4-1".parse::<Family>().unwrap(), Family { m: 2, n: 4 });
        assert!("5-1".parse::<Family>().is_err());
        assert!("2-2-2".parse::<Family>().is_err());
        assert!("junk".parse::<Family>().is_err());
        assert_eq!(Family { m: 4, n: 2 }.to_string(), "4-2-1");
        assert_eq!(Family { m: 3, n: 1 }.to_string(), "3-1");
        assert_eq!("all".parse::<FamilyList>().unwrap().0.len(), 9);
        assert_eq!("2-1, 3-2-1".parse::<FamilyList>().unwrap().0.len(), 2);
    }

    #[test]
    fn grid_points_inclusive() {
        let grid: Grid = "0.5:1.0:0.002".parse().unwrap();
        let points = grid.points();
        assert_eq!(points.len(), 251);
        assert_eq!(points[0], 0.5);
        assert!((points[250] - 1.0).abs() < 1e-12);
        assert!("1.0:0.5:0.1".parse::<Grid>().is_err());
        assert!("0.5:1.0:0".parse::<Grid>().is_err());
    }

    #[test]
    fn csv_schema_is_stable() {
        assert_eq!(csv_header(false), "family,m,n,perm_id,F_in,F_out,p_ed,p_ad,key_rate");
    }

    #[test]
    fn record_formatting() {
        let records = vec![SweepRecord {
            family: Family { m: 2, n: 3 },
            perm_id: 1,
            f_in: 0.75,
            f_out: 0.8125,
            p_ed: 0.5,
            p_ad: 0.25,
            key_rate: 0.0,
            baseline: None,
        }];
        let mut csv = Vec::new();
        write_records(&mut csv, &records, OutputFormat::Csv, false).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.ends_with("2-3-1,2,3,1,0.75,0.8125,0.5,0.25,0\n"));

        let mut jsonl = Vec::new();
        write_records(&mut jsonl, &records, OutputFormat::Jsonl, false).unwrap();
        let text = String::from_utf8(jsonl).unwrap();
        assert!(text.starts_with("{\"family\":\"2-3-1\",\"m\":2,\"n\":3,"));
    }

    #[test]
    fn missing_cache_instructs_transversal() {
        let config = RunConfig {
            noise: NoiseModel::Werner,
            families: vec![Family { m: 2, n: 1 }],
            objective: Objective::Fidelity,
            perm_set: PermSet::Pauli4,
            grid: "0.7:0.7:0.1".parse().unwrap(),
            workers: 0,
            cache_dir: PathBuf::from("/nonexistent-cache-dir"),
            dejmps_baseline: false,
        };
        match run_sweep(&config) {
            Err(CliError::Cache(msg)) => assert!(msg.contains("distill transversal --m 2")),
            other => panic!("expected cache error, got {other:?}"),
        }
    }

    #[test]
    fn security_report_contains_bounds() {
        let report = security_report(None, None).unwrap();
        assert!(report.contains("six_state_ad"));
        assert!(report.contains("Q* = 0.2764"));
        assert!(report.contains("Q* = 0.2000"));
        assert!(report.contains("Q* = 0.2500"));
    }
}
