//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported without failing the process; set
//! `CM_ACCEPTANCE_STRICT=1` to turn any failure into a non-zero exit.

use std::time::Instant;

use cm_compete::compete::{run_competition, CompetitionConfig, SpeedRatio, TieRule};
use cm_compete::degrees::DegreeModel;
use cm_compete::experiment::{run_ensemble, ExperimentConfig, RunRecord};
use cm_compete::graph::Graph;
use cm_compete::numeric::{ls_slope, median};
use cm_compete::predict::TheoryReport;
use cm_compete::verify::{
    bounds_audit, direct_limit_samples, formula_checks, halfedge_tail, layer_connectivity, limit_contraction,
    limit_identity, oracle_equivalence, pairing_uniformity, path_monte_carlo, recursion_self_consistency, tail_decay,
    triangle_enumeration, Check, RecursionParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240601;

struct Outcome {
    id: u32,
    name: &'static str,
    passed: bool,
    soft: bool,
    detail: String,
}

struct Runner {
    results: Vec<Outcome>,
}

impl Runner {
    fn record(&mut self, id: u32, name: &'static str, passed: bool, soft: bool, detail: String, start: Instant) {
        let tag = match (soft, passed) {
            (true, true) => "PASS (soft)",
            (true, false) => "FAIL (soft)",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        };
        println!("[{tag}] {id:>2} {name}: {detail} [{:.1} s]", start.elapsed().as_secs_f64());
        self.results.push(Outcome { id, name, passed, soft, detail });
    }

    fn checks(&mut self, id: u32, name: &'static str, checks: &[Check], start: Instant) {
        let passed = checks.iter().all(|c| c.passed);
        let detail = checks
            .iter()
            .filter(|c| !c.passed || checks.len() <= 3)
            .map(|c| format!("{} ({})", c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; ");
        let detail = if detail.is_empty() { format!("{} checks", checks.len()) } else { detail };
        self.record(id, name, passed, false, detail, start);
    }
}

fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn performance(r: &mut Runner) {
    let start = Instant::now();
    let model = DegreeModel::pareto_ceil(2.5).unwrap();
    let graph = Graph::build(10_000_000, &model, SEED).unwrap();
    let built = start.elapsed().as_secs_f64();
    let cfg = CompetitionConfig {
        lambda: SpeedRatio::new(2, 1).unwrap(),
        red_source: 0,
        blue_source: 1,
        tie_rule: TieRule::AlwaysRed,
        seed: SEED,
    };
    let out = run_competition(&graph, &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let rss = peak_rss_bytes();
    let rss_ok = rss.map_or(false, |b| b < 2 << 30);
    let detail = format!(
        "build {built:.1} s, total {secs:.1} s, peak RSS {}, R+B = {}",
        rss.map_or("unknown".into(), |b| format!("{:.0} MB", b as f64 / 1048576.0)),
        out.red_count + out.blue_count
    );
    r.record(15, "n = 1e7 build and competition within 60 s and 2 GB", secs < 60.0 && rss_ok, false, detail, start);
}

fn degree_tail(r: &mut Runner) {
    let start = Instant::now();
    let model = DegreeModel::pareto_ceil(2.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let samples = 1_000_000usize;
    let draws: Vec<u64> = (0..samples).map(|_| model.sample(&mut rng)).collect();
    let hi = 2f64.powf(1.5);
    let mut passed = true;
    let mut parts = Vec::new();
    for x in [4u64, 16, 64, 256] {
        let p = draws.iter().filter(|&&d| d > x).count() as f64 / samples as f64;
        let scale = (x as f64).powf(1.5);
        let v = p * scale;
        let se = (p * (1.0 - p) / samples as f64).sqrt() * scale;
        passed &= v + 3.0 * se >= 1.0 && v - 3.0 * se <= hi;
        parts.push(format!("x={x}: {v:.3}+-{:.3}", 3.0 * se));
    }
    r.record(3, "degree tail bracket", passed, false, parts.join(", "), start);
}

fn size_biased_exact(r: &mut Runner) {
    let start = Instant::now();
    let law = DegreeModel::explicit(2.5, &[(2, 0.5), (3, 0.5)]).unwrap().size_biased();
    let (f1, f2) = (law.pmf(1), law.pmf(2));
    let passed = f1 == 0.4 && f2 == 0.6 && law.pmf(0) == 0.0 && law.pmf(3) == 0.0;
    r.record(4, "size-biased law of {2:.5, 3:.5}", passed, false, format!("f*_1 = {f1}, f*_2 = {f2}"), start);
}

struct Scale {
    n: u64,
    records: Vec<RunRecord>,
    reports: Vec<TheoryReport>,
}

fn ensembles() -> Vec<Scale> {
    [10_000u64, 100_000, 1_000_000, 10_000_000]
        .into_iter()
        .map(|n| {
            let mut cfg = ExperimentConfig::default();
            cfg.n = n;
            cfg.replicates = 20;
            cfg.master_seed = SEED;
            let e = run_ensemble(&cfg).unwrap();
            Scale { n, records: e.records, reports: e.reports }
        })
        .collect()
}

fn faster_color_wins(r: &mut Runner, scale: &Scale, start: Instant) {
    let small = scale.records.iter().filter(|x| (x.b_inf as f64) < 0.01 * x.n as f64).count();
    let worst = scale.records.iter().map(|x| x.b_inf as f64 / x.n as f64).fold(0.0, f64::max);
    let detail = format!("{small}/{} runs with B/n < 0.01, largest B/n {worst:.2e}", scale.records.len());
    r.record(5, "faster color takes almost everything at n = 1e6", small >= 19, false, detail, start);
}

fn loser_growth(r: &mut Runner, scales: &[Scale], start: Instant) {
    let mut ratio = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in scales {
        let log_n = (s.n as f64).ln();
        let logs: Vec<f64> = s.records.iter().filter(|x| x.b_inf > 0).map(|x| (x.b_inf as f64).ln()).collect();
        let m = median(&logs);
        ratio.push(m / log_n);
        xs.push(log_n.ln());
        ys.push(m.ln());
    }
    let decreasing = ratio.windows(2).all(|w| w[1] < w[0]);
    let slope = ls_slope(&xs, &ys);
    let target = 2.0 / 3.0;
    let detail = format!(
        "median log B / log n = [{}], slope {slope:.3} (target {target:.3} +- 0.2)",
        ratio.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", ")
    );
    let passed = decreasing && (slope - target).abs() <= 0.2;
    r.record(6, "loser grows subpolynomially", passed, false, detail, start);
}

fn collision_time(r: &mut Runner, scale: &Scale, start: Instant) {
    let mut within = 0;
    let mut gaps = Vec::new();
    for (rec, rep) in scale.records.iter().zip(&scale.reports) {
        if let Some(tick) = rec.first_block_tick {
            let gap = tick as f64 / rec.lambda_den as f64 - (rep.t_r + rep.t_c);
            gaps.push(gap);
            if gap.abs() <= 3.0 {
                within += 1;
            }
        }
    }
    let total = scale.records.len();
    let detail = format!(
        "{within}/{total} within 3 time units, median gap {:.2}",
        if gaps.is_empty() { f64::NAN } else { median(&gaps) }
    );
    r.record(14, "first block near predicted collision time", within * 10 >= total * 7, true, detail, start);
}

fn main() {
    let mut r = Runner { results: Vec::new() };
    // first, so the resident-memory peak belongs to this criterion
    performance(&mut r);

    let start = Instant::now();
    let c = oracle_equivalence(500, 30, SEED);
    r.checks(1, "event simulation matches relaxation oracle", &[c], start);

    let start = Instant::now();
    let p = pairing_uniformity(&[1, 1, 1, 1], 30_000, SEED);
    r.checks(2, "pairing uniformity on [1,1,1,1]", &[p.check(0.01)], start);

    degree_tail(&mut r);
    size_biased_exact(&mut r);

    let start = Instant::now();
    let scales = ensembles();
    faster_color_wins(&mut r, &scales[2], start);
    loser_growth(&mut r, &scales, start);

    let start = Instant::now();
    let c = limit_contraction(2.5, 200, SEED);
    r.record(7, "threshold refinement contracts", c.check().passed, false, c.check().detail, start);

    let start = Instant::now();
    let params = RecursionParams::default();
    let id = limit_identity(2.5, 10_000, 1e5, params, SEED);
    let model = DegreeModel::pareto_ceil(2.5).unwrap();
    let tail = tail_decay(&direct_limit_samples(&model, 10_000, 1e4, SEED ^ 7));
    let checks = [id.check(0.05), recursion_self_consistency(2.5, 10_000, params, SEED), tail];
    r.checks(8, "limit law: direct route vs max-recursion", &checks, start);

    let start = Instant::now();
    r.checks(9, "consecutive layers connect", &[layer_connectivity(1_000_000, 2.5, 5, SEED).check(0.99)], start);

    let start = Instant::now();
    let mut checks = vec![triangle_enumeration()];
    for k in 1..=3 {
        checks.push(path_monte_carlo(k, false, 10_000, SEED).check());
        checks.push(path_monte_carlo(k, true, 10_000, SEED).check());
    }
    r.checks(10, "path expectations vs exact conditional values", &checks, start);

    let start = Instant::now();
    r.checks(11, "formula identities", &formula_checks(100_000, SEED), start);

    let start = Instant::now();
    let audit = bounds_audit(10_000, SEED);
    r.checks(12, "bounds audit", &[audit.check()], start);

    let start = Instant::now();
    r.checks(13, "half-edge tail bound", &[halfedge_tail(100_000, 2.5, 20, SEED).check()], start);

    let start = Instant::now();
    collision_time(&mut r, &scales[2], start);

    r.results.sort_by_key(|o| o.id);
    let hard_failed: Vec<_> = r.results.iter().filter(|o| !o.passed && !o.soft).collect();
    let passed = r.results.iter().filter(|o| o.passed).count();
    println!("acceptance: {passed}/{} criteria passed", r.results.len());
    for o in &hard_failed {
        println!("  failed: {} {} ({})", o.id, o.name, o.detail);
    }
    if !hard_failed.is_empty() && std::env::var_os("CM_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
