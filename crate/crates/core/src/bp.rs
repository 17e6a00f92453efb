//! Branching processes with infinite-mean offspring and the limit variable
//! `Y = lim (tau-2)^k ln Z_k`.

use rand::Rng;

use crate::compete::SpeedRatio;
use crate::degrees::{DegreeModel, SizeBiasedLaw};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Generation sizes of a branching process run stopped at a threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchingRun {
    pub generation_sizes: Vec<u64>,
    pub stop_threshold: f64,
    /// First generation with size at least the threshold; `None` if the cap was hit.
    pub stopped_at: Option<usize>,
    /// Some generation sum overflowed and was clamped at `u64::MAX`.
    pub saturated: bool,
}

impl BranchingRun {
    /// Wrap given sizes, locating the first generation at or above `threshold`.
    pub fn from_sizes(generation_sizes: Vec<u64>, threshold: f64) -> Self {
        let stopped_at = generation_sizes.iter().position(|&z| z as f64 >= threshold);
        BranchingRun { generation_sizes, stop_threshold: threshold, stopped_at, saturated: false }
    }

    /// Keep the same run going until the new threshold (or the cap) is reached.
    pub fn continue_to<R: Rng + ?Sized>(
        &mut self,
        law: &SizeBiasedLaw,
        threshold: f64,
        generation_cap: usize,
        rng: &mut R,
    ) {
        self.stop_threshold = threshold;
        self.stopped_at = self.generation_sizes.iter().position(|&z| z as f64 >= threshold);
        while self.stopped_at.is_none() && self.generation_sizes.len() <= generation_cap {
            let z = *self.generation_sizes.last().unwrap();
            if z == 0 {
                break;
            }
            let (next, sat) = next_generation(law, z, rng);
            self.saturated |= sat;
            self.generation_sizes.push(next);
            if next as f64 >= threshold {
                self.stopped_at = Some(self.generation_sizes.len() - 1);
            }
        }
    }
}

fn next_generation<R: Rng + ?Sized>(law: &SizeBiasedLaw, z: u64, rng: &mut R) -> (u64, bool) {
    let mut sum = 0u64;
    let mut sat = false;
    for _ in 0..z {
        match sum.checked_add(law.sample(rng)) {
            Some(s) => sum = s,
            None => {
                sum = u64::MAX;
                sat = true;
            }
        }
    }
    (sum, sat)
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 1.0) {
        return Err(Error::Domain { what: "stop threshold", value: threshold });
    }
    Ok(())
}

/// Root has `D` children, later individuals have size-biased offspring.
pub fn simulate_delayed_bp<R: Rng + ?Sized>(
    law: &SizeBiasedLaw,
    stop_threshold: f64,
    generation_cap: usize,
    rng: &mut R,
) -> Result<BranchingRun> {
    check_threshold(stop_threshold)?;
    let first = law.model().sample(rng);
    let mut run = BranchingRun::from_sizes(vec![1, first], stop_threshold);
    run.continue_to(law, stop_threshold, generation_cap, rng);
    Ok(run)
}

/// Every individual, the root included, has size-biased offspring.
pub fn simulate_bp<R: Rng + ?Sized>(
    law: &SizeBiasedLaw,
    stop_threshold: f64,
    generation_cap: usize,
    rng: &mut R,
) -> Result<BranchingRun> {
    check_threshold(stop_threshold)?;
    let mut run = BranchingRun::from_sizes(vec![1], stop_threshold);
    run.continue_to(law, stop_threshold, generation_cap, rng);
    Ok(run)
}

/// `y = (tau-2)^t ln Z_t` at a generation `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitEstimate {
    pub generation: usize,
    pub generation_size: u64,
    pub y: f64,
}

impl LimitEstimate {
    pub fn at(sizes: &[u64], generation: usize, tau: f64) -> Option<Self> {
        let z = *sizes.get(generation)?;
        Some(LimitEstimate { generation, generation_size: z, y: (tau - 2.0).powi(generation as i32) * (z as f64).ln() })
    }
}

/// Estimate at the stopping generation of a completed run.
pub fn stopping_time_and_yn(run: &BranchingRun, tau: f64) -> Result<LimitEstimate> {
    match run.stopped_at {
        Some(t) => Ok(LimitEstimate::at(&run.generation_sizes, t, tau).unwrap()),
        None => Err(Error::Incomplete {
            threshold: run.stop_threshold,
            generations: run.generation_sizes.len().saturating_sub(1),
        }),
    }
}

/// Samples the limit through the max-recursion
/// `Y = (tau-2) max_{i<=D} Y'_i`, `Y' = (tau-2) max_{j<B} Y''_j`, ...
///
/// Unrolled `depth` levels the recursion reads
/// `Y = (tau-2)^{depth+1} max` over the generation-`(depth+1)` individuals
/// of independent leaves, each a direct estimate stopped at
/// `base_threshold`. Each draw simulates the generation sizes afresh; once a
/// generation outgrows a tenth of the pool's resolution the identity is
/// applied at that generation instead, which stays exact because the
/// stopping rule only looks at past generations. The maximum of `m` leaves
/// is read off a shared sorted pool of leaf estimates through its order
/// statistic, with an exponential tail beyond the pool's resolution.
#[derive(Clone, Debug)]
pub struct MaxRecursionSampler {
    model: DegreeModel,
    law: SizeBiasedLaw,
    depth: usize,
    pool: Pool,
}

/// Generation cap used for leaf runs; a run that never grows contributes 0.
const LEAF_GENERATION_CAP: usize = 200;

/// Rank from the top beyond which the fitted tail replaces the pool.
const TAIL_ANCHOR_RANK: usize = 10;

/// Sorted sample with an exponential upper tail.
#[derive(Clone, Debug)]
struct Pool {
    sorted: Vec<f64>,
    /// Tabulated resolution: `1 / table_mass` draws.
    table_mass: f64,
    /// Quantiles with upper-tail probability below this come from the tail.
    tail_from: f64,
    /// Beyond it, `P(leaf > y) = fit_mass * exp(-rate (y - fit_start))`.
    fit_mass: f64,
    fit_start: f64,
    tail_rate: f64,
}

impl Pool {
    /// With a known tail rate only the level is fitted, on the top 1/300 of
    /// the sample; otherwise the rate is the exponential MLE on the top 1%.
    fn new(mut values: Vec<f64>, rate: Option<f64>) -> Self {
        values.sort_by(|a, b| a.total_cmp(b));
        let len = values.len();
        let anchor = TAIL_ANCHOR_RANK.min(len - 1);
        let share = if rate.is_some() { 300 } else { 100 };
        let fit = (len / share).max(anchor).min(len - 1);
        let fit_start = values[len - 1 - fit];
        let tail_rate = match rate {
            Some(r) => r,
            None if fit == 0 => f64::INFINITY,
            None => {
                let excess = values[len - fit..].iter().map(|v| v - fit_start).sum::<f64>() / fit as f64;
                if excess > 0.0 {
                    1.0 / excess
                } else {
                    f64::INFINITY
                }
            }
        };
        let table_mass = anchor as f64 / len as f64;
        let fit_mass = fit as f64 / len as f64;
        Pool {
            table_mass,
            // a known rate makes the smooth tail less noisy than the top order statistics
            tail_from: if rate.is_some() { fit_mass } else { table_mass },
            fit_mass,
            fit_start,
            tail_rate,
            sorted: values,
        }
    }

    /// Largest `m` whose maximum is usually read from the table.
    fn resolution(&self) -> u64 {
        if self.table_mass > 0.0 {
            (1.0 / self.table_mass) as u64
        } else {
            1
        }
    }

    /// Maximum of `m` independent draws; 0 for `m = 0`.
    fn max_of<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> f64 {
        if m == 0 {
            return 0.0;
        }
        // upper-tail probability of the maximum's quantile: 1 - U^{1/m}
        let u = 1.0 - rng.gen::<f64>();
        let r = -(u.ln() / m as f64).exp_m1();
        if r < self.tail_from && self.tail_rate.is_finite() {
            return self.fit_start + (self.fit_mass / r).ln() / self.tail_rate;
        }
        let len = self.sorted.len();
        let idx = (((1.0 - r) * len as f64).ceil() as usize).clamp(1, len) - 1;
        self.sorted[idx]
    }
}

impl MaxRecursionSampler {
    pub fn new<R: Rng + ?Sized>(
        model: &DegreeModel,
        depth: usize,
        base_threshold: f64,
        pool_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        check_threshold(base_threshold)?;
        if pool_size < 2 {
            return Err(Error::InvalidParameter("pool size must be at least 2".into()));
        }
        let tau = model.tau();
        let law = model.size_biased();
        // A power-law offspring tail gives leaves an Exp(1) tail whatever tau is.
        let rate = model.max_degree().is_none().then_some(1.0);
        let leaves: Vec<f64> = (0..pool_size)
            .map(|_| {
                let run = simulate_bp(&law, base_threshold, LEAF_GENERATION_CAP, rng).unwrap();
                let t = run.stopped_at.unwrap_or(run.generation_sizes.len() - 1);
                LimitEstimate::at(&run.generation_sizes, t, tau).unwrap().y
            })
            .collect();
        Ok(MaxRecursionSampler { model: model.clone(), law, depth, pool: Pool::new(leaves, rate) })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let limit = (self.pool.resolution() / 10).max(1);
        let mut z = self.model.sample(rng);
        let mut k = 1;
        while k <= self.depth && z < limit {
            z = next_generation(&self.law, z, rng).0;
            k += 1;
        }
        (self.model.tau() - 2.0).powi(k as i32) * self.pool.max_of(z, rng)
    }

    pub fn law(&self) -> &SizeBiasedLaw {
        &self.law
    }
}

/// Leaf pool size used by [`sample_y_max_recursion`].
pub const DEFAULT_POOL_SIZE: usize = 4096;

/// One draw of the limit from the max-recursion with a fresh leaf pool.
///
/// Building the pool dominates the cost; for many draws construct a
/// [`MaxRecursionSampler`] once.
pub fn sample_y_max_recursion<R: Rng + ?Sized>(
    model: &DegreeModel,
    depth: usize,
    base_threshold: f64,
    rng: &mut R,
) -> Result<f64> {
    let s = MaxRecursionSampler::new(model, depth, base_threshold, DEFAULT_POOL_SIZE, rng)?;
    Ok(s.sample(rng))
}

/// Breadth-first generation sizes `|{v : dist(source, v) = k}|`.
#[derive(Clone, Debug, PartialEq)]
pub struct BfsGenerations {
    pub sizes: Vec<u64>,
    /// The component ran out of vertices before the stop condition.
    pub exhausted: bool,
}

/// Explore from `source` until a generation reaches `threshold` or
/// generation `max_generation` is complete.
pub fn bfs_generation_sizes(
    graph: &Graph,
    source: u32,
    threshold: f64,
    max_generation: Option<usize>,
) -> BfsGenerations {
    let mut seen = vec![false; graph.n()];
    seen[source as usize] = true;
    let mut frontier = vec![source];
    let mut sizes = vec![1u64];
    loop {
        if *sizes.last().unwrap() as f64 >= threshold || max_generation.is_some_and(|m| sizes.len() > m) {
            return BfsGenerations { sizes, exhausted: false };
        }
        let mut next = Vec::new();
        for &u in &frontier {
            for &v in graph.neighbors(u) {
                if !std::mem::replace(&mut seen[v as usize], true) {
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            return BfsGenerations { sizes, exhausted: true };
        }
        sizes.push(next.len() as u64);
        frontier = next;
    }
}

/// Which color the graph estimate is computed for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Role {
    /// Evaluate at the first generation of size `>= n^rho`.
    Red,
    /// Evaluate at generation `floor(red_stop / lambda)`, never below `min_generation`.
    Blue { red_stop: usize, lambda: SpeedRatio, min_generation: usize },
}

/// Finite-graph analogue of the branching-process estimate.
pub fn estimate_yn_from_graph(graph: &Graph, source: u32, rho: f64, tau: f64, role: Role) -> Result<LimitEstimate> {
    graph.check_vertex(source as u64)?;
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain { what: "rho", value: rho });
    }
    let threshold = (graph.n() as f64).powf(rho);
    if threshold < 2.0 - 1e-9 {
        return Err(Error::InvalidParameter(format!("n^rho = {threshold} is below 2")));
    }
    match role {
        Role::Red => {
            let g = bfs_generation_sizes(graph, source, threshold, None);
            if g.exhausted {
                return Err(Error::ComponentExhausted { source_vertex: source, generations: g.sizes.len() - 1 });
            }
            Ok(LimitEstimate::at(&g.sizes, g.sizes.len() - 1, tau).unwrap())
        }
        Role::Blue { red_stop, lambda, min_generation } => {
            let k = lambda.floor_div(red_stop as u64).max(min_generation as u64) as usize;
            let g = bfs_generation_sizes(graph, source, f64::INFINITY, Some(k));
            if g.sizes.len() <= k {
                return Err(Error::ComponentExhausted { source_vertex: source, generations: g.sizes.len() - 1 });
            }
            Ok(LimitEstimate::at(&g.sizes, k, tau).unwrap())
        }
    }
}

/// Red and blue estimates for one pair of sources.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairEstimate {
    pub red: LimitEstimate,
    pub blue: LimitEstimate,
}

pub fn estimate_pair_from_graph(
    graph: &Graph,
    red: u32,
    blue: u32,
    rho: f64,
    tau: f64,
    lambda: SpeedRatio,
    min_blue_generation: usize,
) -> Result<PairEstimate> {
    let r = estimate_yn_from_graph(graph, red, rho, tau, Role::Red)?;
    let role = Role::Blue { red_stop: r.generation, lambda, min_generation: min_blue_generation };
    let b = estimate_yn_from_graph(graph, blue, rho, tau, role)?;
    Ok(PairEstimate { red: r, blue: b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stopping_examples() {
        let run = BranchingRun::from_sizes(vec![1, 3, 9, 81], 50.0);
        let e = stopping_time_and_yn(&run, 2.5).unwrap();
        assert_eq!(e.generation, 3);
        assert!((e.y - 0.549_306).abs() < 1e-6);
        let e = stopping_time_and_yn(&BranchingRun::from_sizes(vec![1, 3], 3.0), 2.5).unwrap();
        assert!((e.y - 0.549_306).abs() < 1e-6);
        let e = stopping_time_and_yn(&BranchingRun::from_sizes(vec![1, 2], 2.0), 2.9).unwrap();
        assert!((e.y - 0.623_832).abs() < 1e-6);
        let run = BranchingRun::from_sizes(vec![1, 2, 3], 10.0);
        assert!(matches!(stopping_time_and_yn(&run, 2.5), Err(Error::Incomplete { .. })));
    }

    #[test]
    fn delayed_run_stops_at_first_crossing() {
        let law = DegreeModel::pareto_ceil(2.5).unwrap().size_biased();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let run = simulate_delayed_bp(&law, 1000.0, 60, &mut rng).unwrap();
            let t = run.stopped_at.unwrap();
            assert_eq!(t, run.generation_sizes.len() - 1);
            assert!(run.generation_sizes[t] >= 1000);
            assert!(run.generation_sizes[..t].iter().all(|&z| z < 1000));
            assert_eq!(run.generation_sizes[0], 1);
            assert!(run.generation_sizes[1] >= 2);
        }
    }

    #[test]
    fn degenerate_law_hits_cap() {
        let law = DegreeModel::explicit(2.5, &[(2, 1.0)]).unwrap().size_biased();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let run = simulate_bp(&law, 10.0, 30, &mut rng).unwrap();
        assert!(run.stopped_at.is_none());
        assert!(run.generation_sizes.iter().all(|&z| z == 1));
    }

    #[test]
    fn max_recursion_of_degenerate_law_is_zero() {
        let m = DegreeModel::explicit(2.5, &[(2, 1.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(sample_y_max_recursion(&m, 3, 100.0, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn pool_maximum_draws() {
        let pool = Pool::new((0..1000).map(|i| i as f64).collect(), None);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(pool.max_of(0, &mut rng), 0.0);
        // huge maxima land in the fitted tail, above every pooled value
        assert!(pool.max_of(1 << 40, &mut rng) > 999.0);
        // P(max of 2 draws <= median) = 1/4
        let n = 100_000;
        let low = (0..n).filter(|_| pool.max_of(2, &mut rng) < 499.5).count();
        assert!((low as f64 / n as f64 - 0.25).abs() < 0.01);
    }

    #[test]
    fn known_rate_tail_is_exponential() {
        // Exp(1) quantiles: the tail fit must recover P(Y > y) = exp(-y)
        let len = 30_000;
        let values = (0..len).map(|i| -(1.0 - (i as f64 + 0.5) / len as f64).ln()).collect();
        let pool = Pool::new(values, Some(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = 1u64 << 20;
        let n = 20_000;
        let mean = (0..n).map(|_| pool.max_of(m, &mut rng)).sum::<f64>() / n as f64;
        // E max of m Exp(1) = H_m = ln m + 0.5772...
        assert!((mean - ((m as f64).ln() + 0.5772)).abs() < 0.05, "{mean}");
    }

    fn cycle(n: u32) -> Graph {
        let edges: Vec<(u32, u32)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n as usize, &edges).unwrap()
    }

    #[test]
    fn cycle_and_star_estimates() {
        let g = cycle(100);
        let g0 = bfs_generation_sizes(&g, 7, 2.0, None);
        assert_eq!(g0.sizes, vec![1, 2]);
        let rho = 2f64.ln() / 100f64.ln();
        let e = estimate_yn_from_graph(&g, 7, rho, 2.5, Role::Red).unwrap();
        assert_eq!(e.generation, 1);
        assert!((e.y - 0.5 * 2f64.ln()).abs() < 1e-12);

        let n = 50u32;
        let edges: Vec<(u32, u32)> = (1..n).map(|i| (0, i)).collect();
        let star = Graph::from_edges(n as usize, &edges).unwrap();
        let rho = 5f64.ln() / (n as f64).ln();
        let e = estimate_yn_from_graph(&star, 0, rho, 2.5, Role::Red).unwrap();
        assert_eq!(e.generation, 1);
        assert!((e.y - 0.5 * 49f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn unreachable_threshold_is_flagged() {
        let g = Graph::from_edges(10, &[(0, 1), (2, 3)]).unwrap();
        let r = estimate_yn_from_graph(&g, 0, 0.5, 2.5, Role::Red);
        assert!(matches!(r, Err(Error::ComponentExhausted { .. })));
    }

    #[test]
    fn blue_role_uses_scaled_generation() {
        let g = cycle(1000);
        let lambda = SpeedRatio::new(2, 1).unwrap();
        let role = Role::Blue { red_stop: 5, lambda, min_generation: 0 };
        let e = estimate_yn_from_graph(&g, 0, 0.2, 2.5, role).unwrap();
        assert_eq!(e.generation, 2);
        let role = Role::Blue { red_stop: 1, lambda, min_generation: 1 };
        assert_eq!(estimate_yn_from_graph(&g, 0, 0.2, 2.5, role).unwrap().generation, 1);
    }
}
