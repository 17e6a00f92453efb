//! Self-checks grouped into suites, each reporting case counts and the
//! seeds of failing cases.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bp::{simulate_delayed_bp, stopping_time_and_yn, MaxRecursionSampler};
use crate::compete::{oracle_competition, run_competition, CompetitionConfig, SpeedRatio, TieRule};
use crate::degrees::DegreeModel;
use crate::error::{Error, Result};
use crate::graph::{for_each_pairing, DegreeSequence, Graph};
use crate::measure::{
    count_restricted_paths, exact_conditional_path_expectation, halfedges_above, layer_connectivity_fraction,
    out_halfedges, PathQuery,
};
use crate::numeric::{derive_seed, ks_critical_value, ks_statistic, median};
use crate::predict::{
    blue_clock_closed_form, close, collision, collision_time, collision_time_expanded, fractional_chain, gain_f,
    gain_g, layer_values, predict, TheoryInputs, IDENTITY_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Suite {
    Oracle,
    Pairing,
    Formulas,
    Paths,
    Layers,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Oracle, Suite::Pairing, Suite::Formulas, Suite::Paths, Suite::Layers];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Oracle => "oracle",
            Suite::Pairing => "pairing",
            Suite::Formulas => "formulas",
            Suite::Paths => "paths",
            Suite::Layers => "layers",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A failing case, with the seed that reproduces it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub seed: u64,
    pub message: String,
}

/// Outcome of one named check. Soft checks are reported but never fail a suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub cases: u64,
    pub passed: bool,
    pub soft: bool,
    pub detail: String,
    pub failures: Vec<Failure>,
}

impl Check {
    fn hard(name: &str, cases: u64, failures: Vec<Failure>, detail: String) -> Check {
        Check { name: name.into(), cases, passed: failures.is_empty(), soft: false, detail, failures }
    }

    fn verdict(name: &str, cases: u64, passed: bool, detail: String) -> Check {
        Check { name: name.into(), cases, passed, soft: false, detail, failures: Vec::new() }
    }

    fn soft(name: &str, cases: u64, detail: String) -> Check {
        Check { name: name.into(), cases, passed: true, soft: true, detail, failures: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub master_seed: u64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn cases(&self) -> u64 {
        self.checks.iter().map(|c| c.cases).sum()
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {} (master seed {})", self.suite, self.master_seed)?;
        for c in &self.checks {
            let tag = match (c.soft, c.passed) {
                (true, _) => "INFO",
                (false, true) => "PASS",
                (false, false) => "FAIL",
            };
            writeln!(f, "  {tag} {} [{} cases] {}", c.name, c.cases, c.detail)?;
            for x in c.failures.iter().take(10) {
                writeln!(f, "       seed {}: {}", x.seed, x.message)?;
            }
            if c.failures.len() > 10 {
                writeln!(f, "       ... {} more", c.failures.len() - 10)?;
            }
        }
        write!(
            f,
            "{}: {} checks, {} cases",
            if self.passed() { "PASS" } else { "FAIL" },
            self.checks.len(),
            self.cases()
        )
    }
}

/// Runs a suite at its default size.
pub fn verify(suite: Suite, master_seed: u64) -> SuiteReport {
    let checks = match suite {
        Suite::Oracle => vec![oracle_equivalence(500, 30, master_seed)],
        Suite::Pairing => vec![
            pairing_uniformity(&[1, 1, 1, 1], 30_000, master_seed).check(0.01),
            pairing_uniformity(&[2, 1, 1], 30_000, master_seed ^ 1).check(0.01),
            pairing_uniformity(&[2, 2, 1, 1], 60_000, master_seed ^ 2).check(0.01),
            shuffle_equivalence(200, master_seed),
        ],
        Suite::Formulas => {
            let mut checks = formula_checks(100_000, master_seed);
            checks.push(bounds_audit(10_000, master_seed).check());
            checks
        }
        Suite::Paths => {
            let mut checks = vec![triangle_enumeration()];
            for k in 1..=3 {
                checks.push(path_monte_carlo(k, false, 10_000, master_seed).check());
                checks.push(path_monte_carlo(k, true, 10_000, master_seed).check());
            }
            checks
        }
        Suite::Layers => vec![
            layer_connectivity(1_000_000, 2.5, 5, master_seed).check(0.99),
            halfedge_tail(100_000, 2.5, 20, master_seed).check(),
            out_halfedge_bound(100_000, 2.5, 20, master_seed).check_proof_form(),
            out_halfedge_bound(100_000, 2.5, 20, master_seed).check_literal(),
        ],
    };
    SuiteReport { suite, master_seed, checks }
}

// ---------------------------------------------------------------- oracle

/// Small random multigraph: `n` in `2..=max_n`, heavy-tailed degrees capped at `2n`.
pub fn small_random_graph(max_n: usize, rng: &mut ChaCha8Rng) -> Graph {
    let model = DegreeModel::pareto_ceil(2.5).unwrap();
    let n = rng.gen_range(2..=max_n.max(2));
    let degrees: Vec<u32> = (0..n).map(|_| model.sample(rng).min(2 * n as u64) as u32).collect();
    let seq = DegreeSequence::new(degrees).unwrap();
    Graph::from_degree_sequence(&seq, rng.gen())
}

pub const ORACLE_SPEEDS: [(u64, u64); 4] = [(3, 2), (2, 1), (5, 2), (7, 3)];

/// Frontier runner against the relaxation oracle, every tie rule per graph.
pub fn oracle_equivalence(graphs: usize, max_n: usize, master_seed: u64) -> Check {
    let mut failures = Vec::new();
    let mut cases = 0;
    for i in 0..graphs as u64 {
        let seed = derive_seed(master_seed, i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = small_random_graph(max_n, &mut rng);
        let n = g.n() as u32;
        let (p, q) = ORACLE_SPEEDS[i as usize % ORACLE_SPEEDS.len()];
        let red = rng.gen_range(0..n);
        let blue = (red + rng.gen_range(1..n)) % n;
        for rule in TieRule::ALL {
            cases += 1;
            let cfg = CompetitionConfig {
                lambda: SpeedRatio::new(p, q).unwrap(),
                red_source: red,
                blue_source: blue,
                tie_rule: rule,
                seed: rng.gen(),
            };
            let (a, b) = (run_competition(&g, &cfg), oracle_competition(&g, &cfg));
            match (a, b) {
                (Ok(a), Ok(b)) if a == b => {}
                (Ok(a), Ok(b)) => {
                    let v = (0..n as usize).find(|&v| a.colors[v] != b.colors[v] || a.paint_tick[v] != b.paint_tick[v]);
                    let message = match v {
                        Some(v) => format!("{rule} {p}/{q} n={n}: vertex {v} differs"),
                        None => format!("{rule} {p}/{q} n={n}: derived fields differ"),
                    };
                    failures.push(Failure { seed, message });
                }
                (a, b) => failures.push(Failure { seed, message: format!("{rule}: {:?} / {:?}", a.err(), b.err()) }),
            }
        }
    }
    let detail = format!("{graphs} graphs, n <= {max_n}, speeds 3/2 2 5/2 7/3, all tie rules");
    Check::hard("run_competition == oracle_competition", cases, failures, detail)
}

// ---------------------------------------------------------------- pairing

/// Sorted neighbor lists; identifies the multigraph with its labeled vertices.
fn graph_key(g: &Graph) -> Vec<u32> {
    let mut key = Vec::with_capacity(g.half_edges() as usize);
    for v in 0..g.n() as u32 {
        let mut nb = g.neighbors(v).to_vec();
        nb.sort_unstable();
        key.extend(nb);
    }
    key
}

/// Empirical frequencies of each multigraph against the exact law obtained
/// by enumerating every matching.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairingReport {
    pub degrees: Vec<u32>,
    pub builds: u64,
    pub expected: Vec<f64>,
    pub observed: Vec<u64>,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    pub max_abs_deviation: f64,
}

impl PairingReport {
    /// Passes when every frequency is within `tol` of its exact value and the
    /// chi-square p-value exceeds 1e-3.
    pub fn check(&self, tol: f64) -> Check {
        let freqs: Vec<String> =
            self.observed.iter().map(|&o| format!("{:.4}", o as f64 / self.builds as f64)).collect();
        let exact: Vec<String> = self.expected.iter().map(|e| format!("{e:.4}")).collect();
        Check::verdict(
            &format!("pairing uniformity {:?}", self.degrees),
            self.builds,
            self.max_abs_deviation <= tol && self.p_value > 1e-3,
            format!(
                "freq [{}] vs [{}], chi2 = {:.3} (dof {}, p = {:.3})",
                freqs.join(" "),
                exact.join(" "),
                self.chi_square,
                self.dof,
                self.p_value
            ),
        )
    }
}

pub fn pairing_uniformity(degrees: &[u32], builds: u64, master_seed: u64) -> PairingReport {
    let seq = DegreeSequence::exact(degrees.to_vec()).expect("even degree total");
    let mut classes: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut weights: Vec<u64> = Vec::new();
    let total = for_each_pairing(seq.total(), |pairs| {
        let key = graph_key(&Graph::from_pairing(&seq, pairs).unwrap());
        let next = classes.len();
        let idx = *classes.entry(key).or_insert(next);
        if idx == weights.len() {
            weights.push(0);
        }
        weights[idx] += 1;
    })
    .expect("small degree sequence");
    let expected: Vec<f64> = weights.iter().map(|&w| w as f64 / total as f64).collect();
    let mut observed = vec![0u64; expected.len()];
    for i in 0..builds {
        let g = Graph::from_degree_sequence(&seq, derive_seed(master_seed, i));
        observed[classes[&graph_key(&g)]] += 1;
    }
    let b = builds as f64;
    let chi_square: f64 = expected.iter().zip(&observed).map(|(&e, &o)| (o as f64 - b * e).powi(2) / (b * e)).sum();
    let dof = expected.len().saturating_sub(1);
    let p_value = if dof == 0 { 1.0 } else { 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(chi_square) };
    let max_abs_deviation = expected.iter().zip(&observed).map(|(&e, &o)| (o as f64 / b - e).abs()).fold(0.0, f64::max);
    PairingReport { degrees: degrees.to_vec(), builds, expected, observed, chi_square, dof, p_value, max_abs_deviation }
}

/// Seeded builds agree with an explicit pairing drawn from the same stream.
pub fn shuffle_equivalence(trials: usize, master_seed: u64) -> Check {
    let mut failures = Vec::new();
    for i in 0..trials as u64 {
        let seed = derive_seed(master_seed, i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..40);
        let degrees: Vec<u32> = (0..n).map(|_| rng.gen_range(2..8)).collect();
        let seq = DegreeSequence::new(degrees).unwrap();
        let built = Graph::from_degree_sequence(&seq, seed);
        let pairs = crate::graph::uniform_pairing(&seq, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let explicit = Graph::from_pairing(&seq, &pairs).unwrap();
        if graph_key(&built) != graph_key(&explicit) {
            failures.push(Failure { seed, message: format!("n={n}: seeded build differs from explicit pairing") });
        }
    }
    Check::hard("seeded build == explicit pairing", trials as u64, failures, String::new())
}

// ---------------------------------------------------------------- formulas

const SPEEDS: [f64; 5] = [1.5, 2.0, 2.5, 7.0 / 3.0, 3.0];

/// Random inputs spread over the parameter domain.
pub fn synthetic_inputs<R: Rng + ?Sized>(rng: &mut R) -> TheoryInputs {
    let tau = rng.gen_range(2.05..2.95);
    let log_log_n = rng.gen_range(1.5..4.5f64);
    TheoryInputs {
        log_log_n,
        tau,
        lambda: *SPEEDS.choose(rng).unwrap(),
        rho_prime: rng.gen_range(0.01..0.9) * (tau - 2.0).powi(2),
        yr: rng.gen_range(0.05..5.0),
        yb: rng.gen_range(0.05..5.0),
        clogn: 8.0 * log_log_n.exp(),
        tie_rule: *TieRule::ALL.choose(rng).unwrap(),
    }
}

/// Hard identities of the prediction chain.
pub fn formula_checks(grid_points: usize, master_seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();

    // layer recursions against closed forms
    let mut failures = Vec::new();
    let mut cases = 0;
    for (ti, tau) in [2.1, 2.2, 2.3, 2.4, 2.5, 2.6, 2.7, 2.8, 2.9].into_iter().enumerate() {
        for clogn in [2.0, 10.0, 50.0, 200.0] {
            for rho_frac in [0.1, 0.5, 0.9] {
                let inp = TheoryInputs {
                    log_log_n: 3.0,
                    tau,
                    lambda: 2.0,
                    rho_prime: rho_frac * (tau - 2.0).powi(2),
                    yr: 0.7,
                    yb: 1.3,
                    clogn,
                    tie_rule: TieRule::AlwaysRed,
                };
                for i in 0..=40 {
                    cases += 1;
                    let v = layer_values(&inp, i).unwrap();
                    let tol = IDENTITY_TOL * v.magnitude;
                    let pairs = [
                        ("u", v.log_u_recursive, v.log_u_closed),
                        ("u~", v.log_u_tilde_recursive, v.log_u_tilde_closed),
                        ("u^b", v.log_u_blue_recursive, v.log_u_blue_closed),
                        ("u^b hat", v.log_u_hat_blue_recursive, v.log_u_hat_blue_closed),
                    ];
                    for (name, a, b) in pairs {
                        if (a - b).abs() > tol {
                            failures.push(Failure {
                                seed: ti as u64,
                                message: format!("{name} tau={tau} clogn={clogn} i={i}: {a} vs {b}"),
                            });
                        }
                    }
                }
            }
        }
    }
    checks.push(Check::hard("layer closed forms == recursions", cases, failures, "i <= 40, relative 1e-9".into()));

    // chain identities over random inputs
    let mut integral = Vec::new();
    let mut dual = Vec::new();
    let mut clock = Vec::new();
    let mut fracs = Vec::new();
    let mut halfedge = Vec::new();
    let samples = 20_000u64;
    for i in 0..samples {
        let seed = derive_seed(master_seed, i);
        let inp = synthetic_inputs(&mut ChaCha8Rng::seed_from_u64(seed));
        let chain = fractional_chain(&inp).unwrap();
        if chain.t_r != chain.t_r.round() || chain.t_rho != chain.t_rho.round() {
            integral.push(Failure { seed, message: format!("T_r = {}, t_rho = {}", chain.t_r, chain.t_rho) });
        }
        let (t1, t2) = (collision_time(&inp, &chain), collision_time_expanded(&inp, &chain));
        if !close(t1, t2, IDENTITY_TOL) {
            dual.push(Failure { seed, message: format!("t_c {t1} vs {t2}") });
        }
        let tl = (chain.t_r + t1) / inp.lambda;
        let closed = blue_clock_closed_form(&inp, &chain);
        if !close(tl, closed, IDENTITY_TOL) {
            clock.push(Failure { seed, message: format!("(T_r+t_c)/lambda {tl} vs {closed}") });
        }
        let col = collision(chain.t_r, t1, inp.lambda, inp.tie_rule);
        for (name, x) in [("a_n", chain.a_n), ("b_n", chain.b_n), ("{t_c}", col.frac_tc), ("{T_L}", col.frac_tl)] {
            if !(0.0..1.0).contains(&x) {
                fracs.push(Failure { seed, message: format!("{name} = {x}") });
            }
        }
        let norm = predict(&inp).unwrap().normalizers;
        if norm.cn_halfedge < norm.cn_max {
            halfedge
                .push(Failure { seed, message: format!("Cn_halfedge {} < Cn_max {}", norm.cn_halfedge, norm.cn_max) });
        }
    }
    checks.push(Check::hard("T_r and t(n^rho') integral", samples, integral, String::new()));
    checks.push(Check::hard("t_c dual forms agree", samples, dual, "relative 1e-9".into()));
    checks.push(Check::hard("blue clock closed form", samples, clock, "relative 1e-9".into()));
    checks.push(Check::hard("fractional parts in [0,1)", samples, fracs, String::new()));
    checks.push(Check::hard("Cn_halfedge >= Cn_max", samples, halfedge, String::new()));
    checks.push(gain_grid(grid_points));
    checks
}

/// `g >= f` on a deterministic low-discrepancy grid over `(tau, lambda, T_r, t_c, rule)`.
pub fn gain_grid(points: usize) -> Check {
    const PHI1: f64 = 0.618_033_988_749_894_9;
    const PHI2: f64 = 0.754_877_666_246_692_7;
    let mut failures = Vec::new();
    for i in 0..points {
        let x = i as f64;
        let tau = 2.01 + 0.98 * (x * PHI1).fract();
        let lambda = SPEEDS[i % SPEEDS.len()];
        let t_c = 10.0 * (x * PHI2).fract();
        let t_r = (i % 7) as f64;
        let rule = TieRule::ALL[(i / SPEEDS.len()) % 4];
        let col = collision(t_r, t_c, lambda, rule);
        let f = gain_f(col.d, col.j_r, col.j_b, tau, rule);
        let g = gain_g(col.d, col.j_r, col.j_b, tau, rule);
        if g < f - 1e-12 * f.abs() {
            failures.push(Failure { seed: i as u64, message: format!("tau={tau} t_c={t_c} {rule}: g={g} < f={f}") });
        }
    }
    Check::hard("g >= f on grid", points as u64, failures, String::new())
}

/// Fractions of chained synthetic inputs whose normalizers fall inside
/// the stated intervals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsAudit {
    pub samples: u64,
    pub cn_within_simple: f64,
    pub cn_within_tight: f64,
    pub cn_max_within: f64,
    /// Seeds with `Cn_halfedge < Cn_max`.
    pub halfedge_below_max: Vec<u64>,
}

impl BoundsAudit {
    pub fn check(&self) -> Check {
        let failures = self
            .halfedge_below_max
            .iter()
            .map(|&seed| Failure { seed, message: "Cn_halfedge < Cn_max".into() })
            .collect();
        Check::hard(
            "bounds audit",
            self.samples,
            failures,
            format!(
                "Cn in simple bound {:.3}, in tight bound {:.3}, Cn_max in bound {:.3}",
                self.cn_within_simple, self.cn_within_tight, self.cn_max_within
            ),
        )
    }
}

pub fn bounds_audit(samples: u64, master_seed: u64) -> BoundsAudit {
    let (mut s, mut t, mut m) = (0u64, 0u64, 0u64);
    let mut halfedge_below_max = Vec::new();
    for i in 0..samples {
        let seed = derive_seed(master_seed ^ 0xB0B0, i);
        let inp = synthetic_inputs(&mut ChaCha8Rng::seed_from_u64(seed));
        let p = predict(&inp).unwrap();
        s += p.flags.cn_within_simple as u64;
        t += p.flags.cn_within_tight as u64;
        m += p.flags.cn_max_within as u64;
        if p.normalizers.cn_halfedge < p.normalizers.cn_max {
            halfedge_below_max.push(seed);
        }
    }
    let frac = |x: u64| x as f64 / samples as f64;
    BoundsAudit {
        samples,
        cn_within_simple: frac(s),
        cn_within_tight: frac(t),
        cn_max_within: frac(m),
        halfedge_below_max,
    }
}

// ---------------------------------------------------------------- paths

/// Fixed sequence on 12 vertices used by the Monte-Carlo path check.
pub const PATH_DEGREES: [u32; 12] = [3, 2, 4, 2, 2, 3, 1, 2, 5, 2, 3, 1];

/// Two-sided path endpoints and the intermediate ceiling used when capped.
pub const PATH_ENDS: (u32, u32) = (0, 1);
pub const PATH_CAP: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathMonteCarlo {
    pub k: usize,
    pub capped: bool,
    pub pairings: u64,
    pub mean: f64,
    pub standard_error: f64,
    pub exact: f64,
}

impl PathMonteCarlo {
    pub fn within(&self, sigmas: f64) -> bool {
        (self.mean - self.exact).abs() <= sigmas * self.standard_error + 1e-12
    }

    pub fn check(&self) -> Check {
        Check::verdict(
            &format!("path mean k={} {}", self.k, if self.capped { "capped" } else { "uncapped" }),
            self.pairings,
            self.within(3.0),
            format!("mc {:.5} +- {:.5} vs exact {:.5}", self.mean, self.standard_error, self.exact),
        )
    }
}

pub fn path_monte_carlo(k: usize, capped: bool, pairings: u64, master_seed: u64) -> PathMonteCarlo {
    let seq = DegreeSequence::exact(PATH_DEGREES.to_vec()).unwrap();
    let (a, b) = PATH_ENDS;
    let cap = if capped { PATH_CAP } else { f64::INFINITY };
    let mut ceilings = vec![cap; k + 1];
    ceilings[k] = f64::INFINITY;
    let exact = exact_conditional_path_expectation(&seq, a, b, &ceilings, k).unwrap();
    let mut q = PathQuery::between(a, b, k);
    q.ceilings = ceilings;
    let (mut sum, mut sq) = (0.0, 0.0);
    for i in 0..pairings {
        let g = Graph::from_degree_sequence(&seq, derive_seed(master_seed ^ k as u64, i));
        let c = count_restricted_paths(&g, &q).unwrap() as f64;
        sum += c;
        sq += c * c;
    }
    let n = pairings as f64;
    let mean = sum / n;
    let var = (sq / n - mean * mean) * n / (n - 1.0);
    PathMonteCarlo { k, capped, pairings, mean, standard_error: (var / n).sqrt(), exact }
}

/// Total length-2 path count between two vertices of `[2,2,2]` over all 15
/// matchings, and the number of matchings.
pub fn triangle_path_total() -> (u64, u64) {
    let seq = DegreeSequence::exact(vec![2, 2, 2]).unwrap();
    let q = PathQuery::between(0, 2, 2);
    let mut total = 0;
    let count = for_each_pairing(seq.total(), |pairs| {
        total += count_restricted_paths(&Graph::from_pairing(&seq, pairs).unwrap(), &q).unwrap();
    })
    .unwrap();
    (total, count)
}

pub fn triangle_enumeration() -> Check {
    let (total, count) = triangle_path_total();
    let seq = DegreeSequence::exact(vec![2, 2, 2]).unwrap();
    let exact = exact_conditional_path_expectation(&seq, 0, 2, &[f64::INFINITY; 3], 2).unwrap();
    // exact must equal total / count = 8/15
    let ok = total * 15 == 8 * count && (exact * count as f64 - total as f64).abs() < 1e-12;
    Check::verdict("[2,2,2] enumeration", count, ok, format!("{total}/{count} vs {exact:.6}"))
}

// ---------------------------------------------------------------- layers

/// Increasing thresholds `u_{i+1} = (u_i / clogn)^{1/(tau-2)}` from
/// `start`, kept while at most `ceiling`.
pub fn increasing_layers(start: f64, clogn: f64, tau: f64, ceiling: f64) -> Vec<f64> {
    let mut out = vec![start];
    loop {
        let next = (out.last().unwrap() / clogn).powf(1.0 / (tau - 2.0));
        if !(next > *out.last().unwrap()) || next > ceiling {
            return out;
        }
        out.push(next);
    }
}

/// Layer thresholds for a graph on `n` vertices: `clogn = log n`, starting
/// 20% above the fixed point `clogn^{1/(3-tau)}`, capped at `n^{1/(tau-1)} / log n`.
pub fn default_layers(n: u64, tau: f64) -> Vec<f64> {
    let log_n = (n as f64).ln();
    let start = 1.2 * log_n.powf(1.0 / (3.0 - tau));
    increasing_layers(start, log_n, tau, (n as f64).powf(1.0 / (tau - 1.0)) / log_n)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerConnectivity {
    pub n: u64,
    pub thresholds: Vec<f64>,
    /// `(seed, lower, upper, fraction)`; `None` when a layer is empty.
    pub rows: Vec<(u64, f64, f64, Option<f64>)>,
}

impl LayerConnectivity {
    pub fn check(&self, min_fraction: f64) -> Check {
        let failures: Vec<Failure> = self
            .rows
            .iter()
            .filter(|r| r.3.is_some_and(|f| f < min_fraction))
            .map(|r| Failure { seed: r.0, message: format!("layers {:.1} -> {:.1}: {:.4}", r.1, r.2, r.3.unwrap()) })
            .collect();
        let defined: Vec<f64> = self.rows.iter().filter_map(|r| r.3).collect();
        let worst = defined.iter().cloned().fold(1.0, f64::min);
        let mut c = Check::hard(
            "layer connectivity",
            defined.len() as u64,
            failures,
            format!(
                "n = {}, {} layer pairs per graph, minimum fraction {worst:.4}",
                self.n,
                self.thresholds.len().saturating_sub(1)
            ),
        );
        if defined.is_empty() {
            c.passed = false;
            c.detail.push_str(" (no defined layer pair)");
        }
        c
    }
}

pub fn layer_connectivity(n: u64, tau: f64, seeds: u64, master_seed: u64) -> LayerConnectivity {
    let model = DegreeModel::pareto_ceil(tau).unwrap();
    let thresholds = default_layers(n, tau);
    let mut rows = Vec::new();
    for s in 0..seeds {
        let seed = derive_seed(master_seed, s);
        let g = Graph::build(n, &model, seed).unwrap();
        for w in thresholds.windows(2) {
            rows.push((seed, w[0], w[1], layer_connectivity_fraction(&g, w[0], w[1])));
        }
    }
    LayerConnectivity { n, thresholds, rows }
}

/// Constant bounding the half-edges above `y` by `C n y^{2-tau}`.
pub fn halfedge_tail_constant(model: &DegreeModel) -> f64 {
    8.0 * model.c1_upper() / (1.0 - 2f64.powf(2.0 - model.tau()))
}

pub const TAIL_GRID: [f64; 4] = [4.0, 16.0, 64.0, 256.0];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HalfedgeTail {
    pub bound: f64,
    /// `(seed, y, ratio)`.
    pub ratios: Vec<(u64, f64, f64)>,
}

impl HalfedgeTail {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().map(|r| r.2).fold(0.0, f64::max)
    }

    pub fn check(&self) -> Check {
        let failures = self
            .ratios
            .iter()
            .filter(|r| r.2 > self.bound)
            .map(|r| Failure { seed: r.0, message: format!("y = {}: ratio {:.3}", r.1, r.2) })
            .collect();
        let min = self.ratios.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
        Check::hard(
            "half-edges above y / (n y^(2-tau))",
            self.ratios.len() as u64,
            failures,
            format!("range [{min:.3}, {:.3}], bound {:.2}", self.max_ratio(), self.bound),
        )
    }
}

pub fn halfedge_tail(n: u64, tau: f64, seeds: u64, master_seed: u64) -> HalfedgeTail {
    let model = DegreeModel::pareto_ceil(tau).unwrap();
    let mut ratios = Vec::new();
    for s in 0..seeds {
        let seed = derive_seed(master_seed ^ 0x5A5A, s);
        let g = Graph::build(n, &model, seed).unwrap();
        for y in TAIL_GRID {
            ratios.push((seed, y, halfedges_above(&g, y) as f64 / (n as f64 * y.powf(2.0 - tau))));
        }
    }
    HalfedgeTail { bound: halfedge_tail_constant(&model), ratios }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutHalfedges {
    pub n: u64,
    pub tau: f64,
    /// `(seed, |S|, H(S), literal bound, bound with the tail constant)`.
    pub rows: Vec<(u64, usize, u64, f64, f64)>,
}

impl OutHalfedges {
    pub fn check_proof_form(&self) -> Check {
        let failures = self
            .rows
            .iter()
            .filter(|r| r.2 as f64 > r.4)
            .map(|r| Failure { seed: r.0, message: format!("|S| = {}: H = {} > {:.0}", r.1, r.2, r.4) })
            .collect();
        Check::hard("H(S) <= |S|K + C n K^(2-tau)", self.rows.len() as u64, failures, String::new())
    }

    /// The bound without constants; informational.
    pub fn check_literal(&self) -> Check {
        let within = self.rows.iter().filter(|r| r.2 as f64 <= r.3).count();
        let worst = self.rows.iter().map(|r| r.2 as f64 / r.3).fold(0.0, f64::max);
        Check::soft(
            "H(S) <= |S|^((tau-2)/(tau-1)) n^(1/(tau-1))",
            self.rows.len() as u64,
            format!("{within}/{} within, worst ratio {worst:.2}", self.rows.len()),
        )
    }
}

/// `H(S)` for `S` the top-|S| degree vertices, `|S|` in `{10^2, 10^3, 10^4}`.
pub fn out_halfedge_bound(n: u64, tau: f64, seeds: u64, master_seed: u64) -> OutHalfedges {
    let model = DegreeModel::pareto_ceil(tau).unwrap();
    let c = halfedge_tail_constant(&model);
    let nf = n as f64;
    let mut rows = Vec::new();
    for s in 0..seeds {
        let seed = derive_seed(master_seed ^ 0xC3C3, s);
        let g = Graph::build(n, &model, seed).unwrap();
        let mut order: Vec<u32> = (0..g.n() as u32).collect();
        order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
        for size in [100usize, 1_000, 10_000] {
            let size = size.min(g.n());
            let h = out_halfedges(&g, &order[..size]);
            let sf = size as f64;
            let literal = sf.powf((tau - 2.0) / (tau - 1.0)) * nf.powf(1.0 / (tau - 1.0));
            let k = ((tau - 2.0) * nf / sf).powf(1.0 / (tau - 1.0));
            rows.push((seed, size, h, literal, sf * k + c * nf * k.powf(2.0 - tau)));
        }
    }
    OutHalfedges { n, tau, rows }
}

// ---------------------------------------------------------------- limit

/// Generation cap for direct limit estimates.
const LIMIT_GENERATION_CAP: usize = 200;

/// Direct estimates of the limit from delayed runs stopped at `threshold`.
pub fn direct_limit_samples(model: &DegreeModel, samples: usize, threshold: f64, seed: u64) -> Vec<f64> {
    let law = model.size_biased();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let run = simulate_delayed_bp(&law, threshold, LIMIT_GENERATION_CAP, &mut rng).unwrap();
            match stopping_time_and_yn(&run, model.tau()) {
                Ok(e) => e.y,
                // never grew: the limit is 0
                Err(_) => 0.0,
            }
        })
        .collect()
}

/// Parameters of the max-recursion route.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecursionParams {
    pub depth: usize,
    pub base_threshold: f64,
    pub pool: usize,
}

impl Default for RecursionParams {
    fn default() -> Self {
        RecursionParams { depth: 3, base_threshold: 1e3, pool: 100_000 }
    }
}

pub fn recursion_limit_samples(model: &DegreeModel, samples: usize, params: RecursionParams, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = MaxRecursionSampler::new(model, params.depth, params.base_threshold, params.pool, &mut rng).unwrap();
    (0..samples).map(|_| s.sample(&mut rng)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitIdentity {
    pub samples: usize,
    pub direct_threshold: f64,
    pub params: RecursionParams,
    pub ks: f64,
    pub median_direct: f64,
    pub median_recursion: f64,
}

impl LimitIdentity {
    pub fn check(&self, tol: f64) -> Check {
        let detail = format!(
            "KS {:.4} (tol {tol}), medians {:.4} direct / {:.4} recursion",
            self.ks, self.median_direct, self.median_recursion
        );
        let failures =
            if self.ks < tol { Vec::new() } else { vec![Failure { seed: 0, message: format!("KS {:.4}", self.ks) }] };
        Check::hard("direct limit vs max-recursion", 1, failures, detail)
    }
}

/// Compares the two routes to the limit law at `tau`.
pub fn limit_identity(
    tau: f64,
    samples: usize,
    direct_threshold: f64,
    params: RecursionParams,
    master_seed: u64,
) -> LimitIdentity {
    let model = DegreeModel::pareto_ceil(tau).unwrap();
    let a = direct_limit_samples(&model, samples, direct_threshold, derive_seed(master_seed, 0));
    let b = recursion_limit_samples(&model, samples, params, derive_seed(master_seed, 1));
    LimitIdentity {
        samples,
        direct_threshold,
        params,
        ks: ks_statistic(&a, &b),
        median_direct: median(&a),
        median_recursion: median(&b),
    }
}

/// Two batches from independently built recursion samplers must agree
/// at the 1% level.
pub fn recursion_self_consistency(tau: f64, samples: usize, params: RecursionParams, master_seed: u64) -> Check {
    let model = DegreeModel::pareto_ceil(tau).unwrap();
    let a = recursion_limit_samples(&model, samples, params, derive_seed(master_seed, 2));
    let b = recursion_limit_samples(&model, samples, params, derive_seed(master_seed, 3));
    let ks = ks_statistic(&a, &b);
    let crit = ks_critical_value(samples, samples, 0.01);
    let failures =
        if ks < crit { Vec::new() } else { vec![Failure { seed: master_seed, message: format!("KS {ks:.4}") }] };
    Check::hard("max-recursion batch consistency", 1, failures, format!("KS {ks:.4}, critical {crit:.4}"))
}

/// Medians of `|Y(10^{k+1}) - Y(10^k)|` for the same runs continued
/// through thresholds `10^2, 10^3, 10^4`. One generation often jumps
/// across several decades, so many differences are exactly 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contraction {
    pub runs: usize,
    pub coarse: f64,
    pub fine: f64,
    pub coarse_mean: f64,
    pub fine_mean: f64,
    /// Runs whose estimate moved at all, per step.
    pub coarse_moved: usize,
    pub fine_moved: usize,
}

impl Contraction {
    pub fn check(&self) -> Check {
        let failures = if self.fine < self.coarse {
            Vec::new()
        } else {
            vec![Failure { seed: 0, message: format!("{:.4} >= {:.4}", self.fine, self.coarse) }]
        };
        Check::hard(
            "limit estimates contract",
            self.runs as u64,
            failures,
            format!(
                "median |dY| {:.4} -> {:.4}, mean {:.4} -> {:.4}, moved {} -> {} of {}",
                self.coarse, self.fine, self.coarse_mean, self.fine_mean, self.coarse_moved, self.fine_moved, self.runs
            ),
        )
    }
}

pub fn limit_contraction(tau: f64, runs: usize, master_seed: u64) -> Contraction {
    let model = DegreeModel::pareto_ceil(tau).unwrap();
    let law = model.size_biased();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, 4));
    let (mut coarse, mut fine) = (Vec::new(), Vec::new());
    while coarse.len() < runs {
        let mut run = simulate_delayed_bp(&law, 1e2, LIMIT_GENERATION_CAP, &mut rng).unwrap();
        let Ok(y2) = stopping_time_and_yn(&run, tau) else { continue };
        run.continue_to(&law, 1e3, LIMIT_GENERATION_CAP, &mut rng);
        let y3 = stopping_time_and_yn(&run, tau).unwrap().y;
        run.continue_to(&law, 1e4, LIMIT_GENERATION_CAP, &mut rng);
        let y4 = stopping_time_and_yn(&run, tau).unwrap().y;
        coarse.push((y3 - y2.y).abs());
        fine.push((y4 - y3).abs());
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let moved = |v: &[f64]| v.iter().filter(|&&d| d > 0.0).count();
    Contraction {
        runs,
        coarse: median(&coarse),
        fine: median(&fine),
        coarse_mean: mean(&coarse),
        fine_mean: mean(&fine),
        coarse_moved: moved(&coarse),
        fine_moved: moved(&fine),
    }
}

/// Log-survival decrements `ln S(y) - ln S(y+1)` on `y = 1..=4` must be
/// positive and non-decreasing up to two standard errors of the counts.
pub fn tail_decay(samples: &[f64]) -> Check {
    let counts: Vec<usize> = (1..=5).map(|y| samples.iter().filter(|&&v| v > y as f64).count()).collect();
    let mut failures = Vec::new();
    if counts[..4].iter().any(|&c| c == 0) {
        failures.push(Failure { seed: 0, message: format!("empty survival counts {counts:?}") });
    } else {
        let dec: Vec<f64> = counts[..4].windows(2).map(|w| (w[0] as f64 / w[1].max(1) as f64).ln()).collect();
        let se: Vec<f64> = counts[..4].iter().map(|&c| 1.0 / (c as f64).sqrt()).collect();
        for (i, d) in dec.iter().enumerate() {
            if *d <= 0.0 {
                failures.push(Failure { seed: 0, message: format!("no decay at y = {}", i + 1) });
            }
            if i > 0 && *d + 2.0 * (se[i] + se[i + 1]) < dec[i - 1] {
                failures.push(Failure { seed: 0, message: format!("decrement falls at y = {}", i + 1) });
            }
        }
    }
    Check::hard("limit tail decays geometrically", 1, failures, format!("S(1..5) counts {counts:?}"))
}
