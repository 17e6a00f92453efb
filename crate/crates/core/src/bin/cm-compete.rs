use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use cm_compete::compete::{run_competition, CompetitionConfig, SpeedRatio, TieRule};
use cm_compete::experiment::{run_ensemble, write_records, ExperimentConfig, OUT_DIR_ENV};
use cm_compete::graph::{DegreeSequence, Graph};
use cm_compete::measure::{count_restricted_paths, exact_conditional_path_expectation, layer_occupancy, PathQuery};
use cm_compete::numeric::derive_seed;
use cm_compete::predict::{predict, TheoryInputs};
use cm_compete::verify::{default_layers, verify, Suite};
use cm_compete::Result;

#[derive(Parser)]
#[command(name = "cm-compete", version, about = "Competing growth on configuration-model graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph and write its binary dump.
    Gen {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one competition and print its summary as JSON.
    Run(RunArgs),
    /// Run replicates and write the record CSV and summary JSON.
    Ensemble(EnsembleArgs),
    /// Evaluate the prediction chain for explicit inputs.
    Predict(PredictArgs),
    /// Run self-check suites; exits non-zero if any check fails.
    Verify {
        /// Suites to run: oracle, pairing, formulas, paths, layers (default: all).
        suites: Vec<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Exact expected path counts for a degree sequence, with an optional Monte-Carlo estimate.
    Paths(PathsArgs),
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    #[arg(long, default_value_t = 2.5)]
    tau: f64,
    /// `pareto` or `explicit:k:p,k:p,...`
    #[arg(long, default_value = "pareto")]
    family: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl GraphArgs {
    fn build(&self) -> Result<Graph> {
        let mut cfg = ExperimentConfig::default();
        cfg.set("family", &self.family)?;
        cfg.tau = self.tau;
        Graph::build(self.n, &cfg.model()?, self.seed)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Replay a graph dump instead of building one.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[command(flatten)]
    build: GraphArgs,
    #[arg(long, default_value = "2/1")]
    lambda: SpeedRatio,
    #[arg(long, default_value = "AlwaysRed")]
    tie_rule: TieRule,
    /// Red source; uniform if omitted.
    #[arg(long)]
    red: Option<u32>,
    /// Blue source; uniform among the other vertices if omitted.
    #[arg(long)]
    blue: Option<u32>,
    /// Write the layer profile as CSV.
    #[arg(long)]
    layers_csv: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunSummary {
    n: usize,
    red_source: u32,
    blue_source: u32,
    lambda: String,
    tie_rule: TieRule,
    #[serde(rename = "R_inf")]
    r_inf: u64,
    #[serde(rename = "B_inf")]
    b_inf: u64,
    dmax_blue: u32,
    first_block_tick: Option<u64>,
    last_tick: u64,
}

#[derive(Args)]
struct EnsembleArgs {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    tie_rule: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    rho_prime: Option<f64>,
    #[arg(long)]
    clogn_constant: Option<f64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
}

impl EnsembleArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::parse(&fs::read_to_string(p)?)?,
            None => ExperimentConfig::default(),
        };
        let flags: [(&str, Option<String>); 10] = [
            ("n", self.n.map(|v| v.to_string())),
            ("tau", self.tau.map(|v| v.to_string())),
            ("family", self.family.clone()),
            ("lambda", self.lambda.clone()),
            ("tie_rule", self.tie_rule.clone()),
            ("rho", self.rho.map(|v| v.to_string())),
            ("rho_prime", self.rho_prime.map(|v| v.to_string())),
            ("clogn_constant", self.clogn_constant.map(|v| v.to_string())),
            ("replicates", self.replicates.map(|v| v.to_string())),
            ("master_seed", self.master_seed.map(|v| v.to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        if cfg.out_dir.is_none() {
            cfg.out_dir = self.out_dir.clone();
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct PredictArgs {
    /// Vertex count; alternatively give --log-log-n.
    #[arg(long, required_unless_present = "log_log_n")]
    n: Option<f64>,
    #[arg(long)]
    log_log_n: Option<f64>,
    #[arg(long, default_value_t = 2.5)]
    tau: f64,
    /// Real value or `p/q`.
    #[arg(long, default_value = "2")]
    lambda: String,
    #[arg(long)]
    rho_prime: f64,
    #[arg(long)]
    yr: f64,
    #[arg(long)]
    yb: f64,
    /// Value of `C log n`; defaults to `clogn_constant * log n`.
    #[arg(long)]
    clogn: Option<f64>,
    #[arg(long, default_value_t = 8.0)]
    clogn_constant: f64,
    #[arg(long, default_value = "AlwaysRed")]
    tie_rule: TieRule,
}

impl PredictArgs {
    fn inputs(&self) -> Result<TheoryInputs> {
        let log_log_n = match (self.log_log_n, self.n) {
            (Some(l), _) => l,
            (None, Some(n)) => n.ln().ln(),
            (None, None) => unreachable!(),
        };
        let lambda = match self.lambda.parse::<SpeedRatio>() {
            Ok(r) => r.value(),
            Err(_) => self
                .lambda
                .parse()
                .map_err(|_| cm_compete::Error::InvalidParameter(format!("lambda: cannot parse '{}'", self.lambda)))?,
        };
        Ok(TheoryInputs {
            log_log_n,
            tau: self.tau,
            lambda,
            rho_prime: self.rho_prime,
            yr: self.yr,
            yb: self.yb,
            clogn: self.clogn.unwrap_or(self.clogn_constant * log_log_n.exp()),
            tie_rule: self.tie_rule,
        })
    }
}

#[derive(Args)]
struct PathsArgs {
    /// Comma-separated degree sequence with an even total.
    #[arg(long, value_delimiter = ',')]
    degrees: Vec<u32>,
    #[arg(long)]
    a: u32,
    #[arg(long)]
    b: u32,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Degree ceiling for intermediate vertices.
    #[arg(long)]
    cap: Option<f64>,
    /// Monte-Carlo pairings to average over (0 skips); the exit code is 1
    /// if the mean is more than 3 standard errors from the exact value.
    #[arg(long, default_value_t = 0)]
    pairings: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value).map_err(|e| cm_compete::Error::Format(e.to_string()))?);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen { graph, out } => {
            let g = graph.build()?;
            g.save(&out)?;
            println!("n = {}, half-edges = {}, written to {}", g.n(), g.half_edges(), out.display());
            Ok(true)
        }
        Command::Run(args) => run(args),
        Command::Ensemble(args) => {
            let cfg = args.config()?;
            let ens = run_ensemble(&cfg)?;
            let (csv_path, json_path) = (cfg.records_path(), cfg.summary_path());
            for p in [&csv_path, &json_path] {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir)?;
                }
            }
            write_records(&ens.records, BufWriter::new(File::create(&csv_path)?))?;
            let json =
                serde_json::to_string_pretty(&ens.summary).map_err(|e| cm_compete::Error::Format(e.to_string()))?;
            fs::write(&json_path, json + "\n")?;
            print_json(&ens.summary)?;
            eprintln!("records: {}\nsummary: {}", csv_path.display(), json_path.display());
            Ok(true)
        }
        Command::Predict(args) => {
            let report = predict(&args.inputs()?)?.report();
            print_json(&report)?;
            Ok(true)
        }
        Command::Verify { suites, seed, json } => {
            let suites: Vec<Suite> = if suites.is_empty() {
                Suite::ALL.to_vec()
            } else {
                suites.iter().map(|s| s.parse()).collect::<Result<_>>()?
            };
            let mut reports = Vec::new();
            for s in suites {
                let r = verify(s, seed);
                println!("{r}");
                reports.push(r);
            }
            if let Some(p) = json {
                let text =
                    serde_json::to_string_pretty(&reports).map_err(|e| cm_compete::Error::Format(e.to_string()))?;
                fs::write(p, text + "\n")?;
            }
            Ok(reports.iter().all(|r| r.passed()))
        }
        Command::Paths(args) => paths(args),
    }
}

fn run(args: RunArgs) -> Result<bool> {
    let g = match &args.graph {
        Some(p) => Graph::load(p)?,
        None => args.build.build()?,
    };
    let n = g.n() as u32;
    if n < 2 {
        return Err(cm_compete::Error::InvalidParameter("graph needs at least two vertices".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(args.build.seed, 1));
    let red = match args.red {
        Some(v) => g.check_vertex(v as u64)?,
        None => rng.gen_range(0..n),
    };
    let blue = match args.blue {
        Some(v) => g.check_vertex(v as u64)?,
        None => (red + rng.gen_range(1..n)) % n,
    };
    let cfg = CompetitionConfig {
        lambda: args.lambda,
        red_source: red,
        blue_source: blue,
        tie_rule: args.tie_rule,
        seed: derive_seed(args.build.seed, 2),
    };
    let out = run_competition(&g, &cfg)?;
    if let Some(p) = &args.layers_csv {
        let profile = layer_occupancy(&g, &out, &default_layers(g.n() as u64, g.meta().tau.max(2.5)))?;
        profile.write_csv(BufWriter::new(File::create(p)?))?;
    }
    print_json(&RunSummary {
        n: g.n(),
        red_source: red,
        blue_source: blue,
        lambda: args.lambda.to_string(),
        tie_rule: args.tie_rule,
        r_inf: out.red_count,
        b_inf: out.blue_count,
        dmax_blue: out.dmax_blue(),
        first_block_tick: out.first_block_tick,
        last_tick: out.paint_tick.iter().copied().filter(|&t| t != u64::MAX).max().unwrap_or(0),
    })?;
    Ok(true)
}

#[derive(Serialize)]
struct PathsReport {
    k: usize,
    exact: f64,
    monte_carlo_mean: Option<f64>,
    standard_error: Option<f64>,
    pairings: u64,
    /// Monte-Carlo mean within 3 standard errors of the exact value.
    agrees: Option<bool>,
}

fn paths(args: PathsArgs) -> Result<bool> {
    let seq = DegreeSequence::exact(args.degrees.clone())?;
    let mut ceilings = vec![args.cap.unwrap_or(f64::INFINITY); args.k + 1];
    ceilings[args.k] = f64::INFINITY;
    let exact = exact_conditional_path_expectation(&seq, args.a, args.b, &ceilings, args.k)?;
    let (mut mean, mut se) = (None, None);
    if args.pairings > 0 {
        let mut q = PathQuery::between(args.a, args.b, args.k);
        q.ceilings = ceilings;
        let (mut s, mut sq) = (0.0, 0.0);
        for i in 0..args.pairings {
            let g = Graph::from_degree_sequence(&seq, derive_seed(args.seed, i));
            let c = count_restricted_paths(&g, &q)? as f64;
            s += c;
            sq += c * c;
        }
        let m = args.pairings as f64;
        let mu = s / m;
        mean = Some(mu);
        se = Some(((sq / m - mu * mu) / m).max(0.0).sqrt());
    }
    let agrees = mean.zip(se).map(|(m, e)| (m - exact).abs() <= 3.0 * e.max(1e-12));
    print_json(&PathsReport {
        k: args.k,
        exact,
        monte_carlo_mean: mean,
        standard_error: se,
        pairings: args.pairings,
        agrees,
    })?;
    Ok(agrees.unwrap_or(true))
}
