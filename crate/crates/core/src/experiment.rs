//! Ensemble harness: configuration, replicate runs and their records.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bp::estimate_pair_from_graph;
use crate::compete::{run_competition, CompetitionConfig, Outcome, SpeedRatio, TieRule};
use crate::degrees::DegreeModel;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::numeric::{derive_seed, median};
use crate::predict::{predict, TheoryInputs, TheoryReport};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CMCOMPETE_OUT_DIR";

/// Attempts at drawing a source pair whose neighborhoods grow large enough.
pub const SOURCE_ATTEMPTS: usize = 200;

/// Degree law selection.
#[derive(Clone, Debug, PartialEq)]
pub enum FamilySpec {
    ParetoCeil,
    /// `(degree, probability)` pairs.
    Explicit(Vec<(u64, f64)>),
}

impl FamilySpec {
    pub fn model(&self, tau: f64) -> Result<DegreeModel> {
        match self {
            FamilySpec::ParetoCeil => DegreeModel::pareto_ceil(tau),
            FamilySpec::Explicit(pmf) => DegreeModel::explicit(tau, pmf),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("pareto") || s.eq_ignore_ascii_case("pareto_ceil") {
            return Ok(FamilySpec::ParetoCeil);
        }
        let body = s
            .strip_prefix("explicit:")
            .ok_or_else(|| field_err("family", format!("expected 'pareto' or 'explicit:k:p,...', got '{s}'")))?;
        let pmf = body
            .split(',')
            .map(|item| {
                let (k, p) =
                    item.split_once(':').ok_or_else(|| field_err("family", format!("bad pmf entry '{item}'")))?;
                let k = k.trim().parse().map_err(|_| field_err("family", format!("bad degree '{k}'")))?;
                let p = p.trim().parse().map_err(|_| field_err("family", format!("bad probability '{p}'")))?;
                Ok((k, p))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FamilySpec::Explicit(pmf))
    }

    fn render(&self) -> String {
        match self {
            FamilySpec::ParetoCeil => "pareto".into(),
            FamilySpec::Explicit(pmf) => {
                let items: Vec<String> = pmf.iter().map(|(k, p)| format!("{k}:{p}")).collect();
                format!("explicit:{}", items.join(","))
            }
        }
    }
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("{field}: {msg}"))
}

/// Ensemble parameters. Every key is optional in the text form.
///
/// | key | default |
/// |---|---|
/// | `n` | 100000 |
/// | `tau` | 2.5 |
/// | `family` | `pareto` (or `explicit:2:0.5,3:0.5`) |
/// | `lambda` | `2/1` |
/// | `tie_rule` | `AlwaysRed` |
/// | `rho` | 0.5 |
/// | `rho_prime` | `0.8 * rho * (tau-2)^2` |
/// | `clogn_constant` | `8 / c1`, or 8 when `c1 = 0` |
/// | `replicates` | 10 |
/// | `master_seed` | 1 |
/// | `out_dir` | `$CMCOMPETE_OUT_DIR`, else `.` |
/// | `records_csv` | `<out_dir>/runs.csv` |
/// | `summary_json` | `<out_dir>/summary.json` |
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: u64,
    pub tau: f64,
    pub family: FamilySpec,
    pub lambda: SpeedRatio,
    pub tie_rule: TieRule,
    pub rho: f64,
    pub rho_prime: Option<f64>,
    pub clogn_constant: Option<f64>,
    pub replicates: usize,
    pub master_seed: u64,
    pub out_dir: Option<PathBuf>,
    pub records_csv: Option<PathBuf>,
    pub summary_json: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 100_000,
            tau: 2.5,
            family: FamilySpec::ParetoCeil,
            lambda: SpeedRatio::new(2, 1).unwrap(),
            tie_rule: TieRule::AlwaysRed,
            rho: 0.5,
            rho_prime: None,
            clogn_constant: None,
            replicates: 10,
            master_seed: 1,
            out_dir: None,
            records_csv: None,
            summary_json: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| field_err(key, format!("cannot parse '{v}'")))
        }
        match key {
            "n" => self.n = num(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "family" => self.family = FamilySpec::parse(value)?,
            "lambda" => {
                self.lambda = value.parse().map_err(|e: Error| field_err(key, e))?;
            }
            "tie_rule" => self.tie_rule = value.parse().map_err(|e: Error| field_err(key, e))?,
            "rho" => self.rho = num(key, value)?,
            "rho_prime" => self.rho_prime = Some(num(key, value)?),
            "clogn_constant" | "C" => self.clogn_constant = Some(num(key, value)?),
            "replicates" | "replicate_count" => self.replicates = num(key, value)?,
            "master_seed" | "seed" => self.master_seed = num(key, value)?,
            "out_dir" => self.out_dir = Some(value.into()),
            "records_csv" => self.records_csv = Some(value.into()),
            "summary_json" => self.summary_json = Some(value.into()),
            _ => return Err(Error::InvalidParameter(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Text form accepted by [`ExperimentConfig::parse`].
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "tau = {}", self.tau);
        let _ = writeln!(s, "family = {}", self.family.render());
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "tie_rule = {}", self.tie_rule);
        let _ = writeln!(s, "rho = {}", self.rho);
        let _ = writeln!(s, "rho_prime = {}", self.rho_prime());
        if let Ok(c) = self.model().map(|m| self.clogn_constant_for(&m)) {
            let _ = writeln!(s, "clogn_constant = {c}");
        }
        let _ = writeln!(s, "replicates = {}", self.replicates);
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        s
    }

    pub fn rho_prime(&self) -> f64 {
        self.rho_prime.unwrap_or(0.8 * self.rho * (self.tau - 2.0).powi(2))
    }

    pub fn model(&self) -> Result<DegreeModel> {
        self.family.model(self.tau).map_err(|e| field_err("family", e))
    }

    fn clogn_constant_for(&self, model: &DegreeModel) -> f64 {
        self.clogn_constant.unwrap_or(if model.c1() > 0.0 { 8.0 / model.c1() } else { 8.0 })
    }

    /// Checks every field; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || self.n > u32::MAX as u64 {
            return Err(field_err("n", format!("{} is outside [4, 2^32)", self.n)));
        }
        if !(self.tau > 2.0 && self.tau < 3.0) {
            return Err(field_err("tau", format!("{} is outside (2,3)", self.tau)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(field_err("rho", format!("{} is outside (0,1)", self.rho)));
        }
        if (self.n as f64).powf(self.rho) < 2.0 {
            return Err(field_err("rho", "n^rho is below 2"));
        }
        let rp = self.rho_prime();
        if !(rp > 0.0 && rp < self.rho * (self.tau - 2.0).powi(2)) {
            return Err(field_err("rho_prime", format!("{rp} must lie in (0, rho (tau-2)^2)")));
        }
        if let Some(c) = self.clogn_constant {
            if !(c > 0.0 && c.is_finite()) {
                return Err(field_err("clogn_constant", format!("{c} must be positive")));
            }
        }
        if self.replicates < 1 {
            return Err(field_err("replicates", "must be at least 1"));
        }
        self.model()?;
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn records_path(&self) -> PathBuf {
        self.records_csv.clone().unwrap_or_else(|| self.out_dir().join("runs.csv"))
    }

    pub fn summary_path(&self) -> PathBuf {
        self.summary_json.clone().unwrap_or_else(|| self.out_dir().join("summary.json"))
    }
}

/// One replicate; field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: u64,
    pub seed: u64,
    pub n: u64,
    pub tau: f64,
    pub lambda_num: u64,
    pub lambda_den: u64,
    pub tie_rule: TieRule,
    #[serde(rename = "R_inf")]
    pub r_inf: u64,
    #[serde(rename = "B_inf")]
    pub b_inf: u64,
    pub dmax_blue: u32,
    pub first_block_tick: Option<u64>,
    #[serde(rename = "Yr_n")]
    pub yr_n: f64,
    #[serde(rename = "Yb_n")]
    pub yb_n: f64,
    #[serde(rename = "predicted_logB")]
    pub predicted_log_b: f64,
    #[serde(rename = "predicted_logDmax")]
    pub predicted_log_dmax: f64,
    pub case_label: String,
}

pub const RUN_RECORD_COLUMNS: [&str; 16] = [
    "run_id",
    "seed",
    "n",
    "tau",
    "lambda_num",
    "lambda_den",
    "tie_rule",
    "R_inf",
    "B_inf",
    "dmax_blue",
    "first_block_tick",
    "Yr_n",
    "Yb_n",
    "predicted_logB",
    "predicted_logDmax",
    "case_label",
];

/// A full replicate: the graph-side objects and the record built from them.
pub struct Replicate {
    pub graph: Graph,
    pub outcome: Outcome,
    pub inputs: TheoryInputs,
    pub report: TheoryReport,
    pub record: RunRecord,
}

/// Builds, estimates, competes and predicts for replicate `run_id`.
///
/// Sources are drawn uniformly and redrawn until both neighborhoods grow to
/// the estimation threshold.
pub fn run_replicate(cfg: &ExperimentConfig, model: &DegreeModel, run_id: u64) -> Result<Replicate> {
    let seed = derive_seed(cfg.master_seed, run_id);
    let graph = Graph::build(cfg.n, model, derive_seed(seed, 0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let n = graph.n() as u32;
    let mut pick = None;
    for _ in 0..SOURCE_ATTEMPTS {
        let red = rng.gen_range(0..n);
        let blue = loop {
            let b = rng.gen_range(0..n);
            if b != red {
                break b;
            }
        };
        if let Ok(est) = estimate_pair_from_graph(&graph, red, blue, cfg.rho, cfg.tau, cfg.lambda, 1) {
            if est.red.y > 0.0 && est.blue.y > 0.0 {
                pick = Some((red, blue, est));
                break;
            }
        }
    }
    let (red, blue, est) = pick.ok_or_else(|| {
        Error::InvalidParameter(format!("run {run_id}: no source pair reached n^rho in {SOURCE_ATTEMPTS} draws"))
    })?;
    let comp = CompetitionConfig {
        lambda: cfg.lambda,
        red_source: red,
        blue_source: blue,
        tie_rule: cfg.tie_rule,
        seed: derive_seed(seed, 2),
    };
    let outcome = run_competition(&graph, &comp)?;
    let log_n = (cfg.n as f64).ln();
    let inputs = TheoryInputs {
        log_log_n: log_n.ln(),
        tau: cfg.tau,
        lambda: cfg.lambda.value(),
        rho_prime: cfg.rho_prime(),
        yr: est.red.y,
        yb: est.blue.y,
        clogn: cfg.clogn_constant_for(model) * log_n,
        tie_rule: cfg.tie_rule,
    };
    let report = predict(&inputs)?.report();
    let record = RunRecord {
        run_id,
        seed,
        n: cfg.n,
        tau: cfg.tau,
        lambda_num: cfg.lambda.p(),
        lambda_den: cfg.lambda.q(),
        tie_rule: cfg.tie_rule,
        r_inf: outcome.red_count,
        b_inf: outcome.blue_count,
        dmax_blue: outcome.dmax_blue(),
        first_block_tick: outcome.first_block_tick,
        yr_n: inputs.yr,
        yb_n: inputs.yb,
        predicted_log_b: report.predicted_log_b,
        predicted_log_dmax: report.predicted_log_dmax,
        case_label: report.case_label.to_string(),
    };
    Ok(Replicate { graph, outcome, inputs, report, record })
}

/// Aggregates over an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub replicates: usize,
    pub n: u64,
    pub tau: f64,
    pub lambda: String,
    pub tie_rule: TieRule,
    pub median_b_inf: f64,
    /// Median of `log B_inf / log n` over runs with `B_inf > 0`.
    pub median_log_b_over_log_n: f64,
    pub median_predicted_log_b: f64,
    pub median_log_dmax: f64,
    pub median_predicted_log_dmax: f64,
    pub median_blue_fraction: f64,
    pub cn_within_simple: usize,
    pub cn_within_tight: usize,
    pub cn_max_within: usize,
}

#[derive(Clone, Debug)]
pub struct Ensemble {
    pub records: Vec<RunRecord>,
    pub reports: Vec<TheoryReport>,
    pub summary: EnsembleSummary,
}

/// Runs every replicate in parallel; the result is ordered by `run_id`.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<Ensemble> {
    cfg.validate()?;
    let model = cfg.model()?;
    let mut runs = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|id| run_replicate(cfg, &model, id).map(|r| (r.record, r.report)))
        .collect::<Result<Vec<_>>>()?;
    runs.sort_by_key(|(r, _)| r.run_id);
    let (records, reports): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let summary = summarize(cfg, &records, &reports);
    Ok(Ensemble { records, reports, summary })
}

fn summarize(cfg: &ExperimentConfig, records: &[RunRecord], reports: &[TheoryReport]) -> EnsembleSummary {
    let log_n = (cfg.n as f64).ln();
    let col = |f: &dyn Fn(&RunRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
    let positive: Vec<f64> = records.iter().filter(|r| r.b_inf > 0).map(|r| (r.b_inf as f64).ln() / log_n).collect();
    let nan_if_empty = |v: &[f64]| if v.is_empty() { f64::NAN } else { median(v) };
    let count = |f: &dyn Fn(&TheoryReport) -> bool| reports.iter().filter(|r| f(r)).count();
    EnsembleSummary {
        replicates: records.len(),
        n: cfg.n,
        tau: cfg.tau,
        lambda: cfg.lambda.to_string(),
        tie_rule: cfg.tie_rule,
        median_b_inf: median(&col(&|r| r.b_inf as f64)),
        median_log_b_over_log_n: nan_if_empty(&positive),
        median_predicted_log_b: median(&col(&|r| r.predicted_log_b)),
        median_log_dmax: median(&col(&|r| (r.dmax_blue.max(1) as f64).ln())),
        median_predicted_log_dmax: median(&col(&|r| r.predicted_log_dmax)),
        median_blue_fraction: median(&col(&|r| r.b_inf as f64 / r.n as f64)),
        cn_within_simple: count(&|r| r.bounds_flags.cn_within_simple),
        cn_within_tight: count(&|r| r.bounds_flags.cn_within_tight),
        cn_max_within: count(&|r| r.bounds_flags.cn_max_within),
    }
}

/// Writes records as CSV with a header row, even when empty.
pub fn write_records<W: Write>(records: &[RunRecord], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(RUN_RECORD_COLUMNS).map_err(csv_err)?;
    for r in records {
        out.serialize(r).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: std::io::Read>(r: R) -> Result<Vec<RunRecord>> {
    csv::Reader::from_reader(r).deserialize().collect::<std::result::Result<Vec<_>, _>>().map_err(csv_err)
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}
