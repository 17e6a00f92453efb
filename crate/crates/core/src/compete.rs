//! Two-color competition with fixed speeds `1` (red) and `lambda = p/q` (blue).
//!
//! Time is kept in integer ticks of length `1/q`: red vertices painted at
//! tick `t` claim their unpainted neighbors at `t + q`, blue ones at `t + p`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::numeric::gcd;

/// Tick value of a vertex that was never painted.
pub const UNPAINTED: u64 = u64::MAX;

/// Reduced rational speed ratio `p/q` with `p > q >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpeedRatio {
    p: u64,
    q: u64,
}

impl SpeedRatio {
    pub fn new(p: u64, q: u64) -> Result<Self> {
        if q == 0 || p <= q {
            return Err(Error::InvalidParameter(format!("speed ratio {p}/{q} must exceed 1")));
        }
        if gcd(p, q) != 1 {
            return Err(Error::InvalidParameter(format!("speed ratio {p}/{q} is not reduced")));
        }
        Ok(SpeedRatio { p, q })
    }

    /// Blue period in ticks.
    pub fn p(self) -> u64 {
        self.p
    }

    /// Red period in ticks.
    pub fn q(self) -> u64 {
        self.q
    }

    pub fn value(self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// `floor(t / lambda)` in exact arithmetic.
    pub fn floor_div(self, t: u64) -> u64 {
        ((t as u128 * self.q as u128) / self.p as u128) as u64
    }
}

impl fmt::Display for SpeedRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for SpeedRatio {
    type Err = Error;

    /// Accepts `p/q` or an integer `p`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse speed ratio '{s}'"));
        let (p, q) = match s.trim().split_once('/') {
            Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
            None => (s.trim().parse().map_err(|_| bad())?, 1),
        };
        SpeedRatio::new(p, q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TieRule {
    AlwaysRed,
    AlwaysBlue,
    FairCoin,
    NeighborProportional,
}

impl TieRule {
    pub const ALL: [TieRule; 4] =
        [TieRule::AlwaysRed, TieRule::AlwaysBlue, TieRule::FairCoin, TieRule::NeighborProportional];

    pub fn name(self) -> &'static str {
        match self {
            TieRule::AlwaysRed => "AlwaysRed",
            TieRule::AlwaysBlue => "AlwaysBlue",
            TieRule::FairCoin => "FairCoin",
            TieRule::NeighborProportional => "NeighborProportional",
        }
    }

    pub fn needs_rng(self) -> bool {
        matches!(self, TieRule::FairCoin | TieRule::NeighborProportional)
    }

    /// Whether a contested vertex can go to blue.
    pub fn blue_can_win(self) -> bool {
        !matches!(self, TieRule::AlwaysRed)
    }
}

impl fmt::Display for TieRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TieRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.trim().chars().filter(|c| !matches!(c, '_' | '-')).collect();
        TieRule::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(&key))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown tie rule '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Color {
    Unpainted = 0,
    Red = 1,
    Blue = 2,
}

/// A vertex claimed by both colors at the same tick, with the number of
/// adjacency entries already painted in each color.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TieClaim {
    pub vertex: u32,
    pub red_neighbors: u32,
    pub blue_neighbors: u32,
}

/// Decide contested vertices in the given order.
pub fn tie_resolve(claims: &[TieClaim], rule: TieRule, mut rng: Option<&mut dyn RngCore>) -> Result<Vec<Color>> {
    if rule.needs_rng() && rng.is_none() && !claims.is_empty() {
        return Err(Error::MissingRng(rule.name()));
    }
    claims
        .iter()
        .map(|c| {
            let red = match rule {
                TieRule::AlwaysRed => true,
                TieRule::AlwaysBlue => false,
                TieRule::FairCoin => rng.as_deref_mut().unwrap().gen_bool(0.5),
                TieRule::NeighborProportional => {
                    let total = c.red_neighbors + c.blue_neighbors;
                    let p = if total == 0 { 0.5 } else { c.red_neighbors as f64 / total as f64 };
                    rng.as_deref_mut().unwrap().gen_bool(p)
                }
            };
            Ok(if red { Color::Red } else { Color::Blue })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompetitionConfig {
    pub lambda: SpeedRatio,
    pub red_source: u32,
    pub blue_source: u32,
    pub tie_rule: TieRule,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub colors: Vec<Color>,
    /// Tick at which each vertex was painted, [`UNPAINTED`] otherwise.
    pub paint_tick: Vec<u64>,
    pub red_count: u64,
    pub blue_count: u64,
    /// `(tick, degree)` each time the largest blue degree increases.
    pub dmax_blue_trajectory: Vec<(u64, u32)>,
    /// First tick at which a blue vertex tries to cross into red territory.
    pub first_block_tick: Option<u64>,
    pub lambda: SpeedRatio,
    pub seed: u64,
}

impl Outcome {
    /// Largest degree among blue vertices.
    pub fn dmax_blue(&self) -> u32 {
        self.dmax_blue_trajectory.last().map_or(0, |&(_, d)| d)
    }
}

fn check_config(graph: &Graph, cfg: &CompetitionConfig) -> Result<()> {
    graph.check_vertex(cfg.red_source as u64)?;
    graph.check_vertex(cfg.blue_source as u64)?;
    if cfg.red_source == cfg.blue_source {
        return Err(Error::CoincidentSources(cfg.red_source));
    }
    Ok(())
}

fn painted_neighbor_counts(graph: &Graph, colors: &[Color], v: u32) -> (u32, u32) {
    let mut r = 0;
    let mut b = 0;
    for &w in graph.neighbors(v) {
        match colors[w as usize] {
            Color::Red => r += 1,
            Color::Blue => b += 1,
            Color::Unpainted => {}
        }
    }
    (r, b)
}

/// Frontier simulation: at each tick only the vertices painted one period
/// earlier claim, and simultaneous claims are resolved against the state
/// before the tick.
pub fn run_competition(graph: &Graph, cfg: &CompetitionConfig) -> Result<Outcome> {
    check_config(graph, cfg)?;
    let n = graph.n();
    let (p, q) = (cfg.lambda.p(), cfg.lambda.q());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut colors = vec![Color::Unpainted; n];
    let mut paint_tick = vec![UNPAINTED; n];
    let mut claim = vec![0u8; n];
    colors[cfg.red_source as usize] = Color::Red;
    colors[cfg.blue_source as usize] = Color::Blue;
    paint_tick[cfg.red_source as usize] = 0;
    paint_tick[cfg.blue_source as usize] = 0;
    let mut red_frontier = vec![cfg.red_source];
    let mut blue_frontier = vec![cfg.blue_source];
    let (mut next_red, mut next_blue) = (q, p);
    let (mut red_count, mut blue_count) = (1u64, 1u64);
    let mut dmax = graph.degree(cfg.blue_source);
    let mut trajectory = vec![(0, dmax)];
    let mut first_block = None;
    let mut touched = Vec::new();
    let mut ties = Vec::new();

    loop {
        let red_live = !red_frontier.is_empty();
        let blue_live = !blue_frontier.is_empty();
        if !red_live && !blue_live {
            break;
        }
        let t = match (red_live, blue_live) {
            (true, true) => next_red.min(next_blue),
            (true, false) => next_red,
            _ => next_blue,
        };
        let red_act = red_live && next_red == t;
        let blue_act = blue_live && next_blue == t;
        touched.clear();
        if red_act {
            for &u in &red_frontier {
                for &v in graph.neighbors(u) {
                    if colors[v as usize] == Color::Unpainted {
                        if claim[v as usize] == 0 {
                            touched.push(v);
                        }
                        claim[v as usize] |= 1;
                    }
                }
            }
        }
        if blue_act {
            for &u in &blue_frontier {
                for &v in graph.neighbors(u) {
                    match colors[v as usize] {
                        Color::Unpainted => {
                            if claim[v as usize] == 0 {
                                touched.push(v);
                            }
                            claim[v as usize] |= 2;
                        }
                        Color::Red => {
                            first_block.get_or_insert(t);
                        }
                        Color::Blue => {}
                    }
                }
            }
        }
        ties.clear();
        for &v in &touched {
            if claim[v as usize] == 3 {
                let (r, b) = painted_neighbor_counts(graph, &colors, v);
                ties.push(TieClaim { vertex: v, red_neighbors: r, blue_neighbors: b });
            }
        }
        ties.sort_unstable_by_key(|c| c.vertex);
        let decided = tie_resolve(&ties, cfg.tie_rule, Some(&mut rng))?;
        for (c, &col) in ties.iter().zip(&decided) {
            claim[c.vertex as usize] = if col == Color::Red { 1 } else { 2 };
            if col == Color::Red {
                first_block.get_or_insert(t);
            }
        }
        let mut new_red = Vec::new();
        let mut new_blue = Vec::new();
        for &v in &touched {
            let col = if claim[v as usize] == 1 { Color::Red } else { Color::Blue };
            claim[v as usize] = 0;
            colors[v as usize] = col;
            paint_tick[v as usize] = t;
            if col == Color::Red {
                new_red.push(v);
            } else {
                new_blue.push(v);
            }
        }
        red_count += new_red.len() as u64;
        blue_count += new_blue.len() as u64;
        if let Some(m) = new_blue.iter().map(|&v| graph.degree(v)).max() {
            if m > dmax {
                dmax = m;
                trajectory.push((t, m));
            }
        }
        if red_act {
            red_frontier = new_red;
            next_red += q;
        }
        if blue_act {
            blue_frontier = new_blue;
            next_blue += p;
        }
    }

    Ok(Outcome {
        colors,
        paint_tick,
        red_count,
        blue_count,
        dmax_blue_trajectory: trajectory,
        first_block_tick: first_block,
        lambda: cfg.lambda,
        seed: cfg.seed,
    })
}

/// Reference implementation by repeated relaxation: find the globally
/// earliest arrival time, paint every vertex reached then, repeat. Quadratic;
/// meant for small graphs. Block tick and degree trajectory are derived
/// afterwards from the final painting.
pub fn oracle_competition(graph: &Graph, cfg: &CompetitionConfig) -> Result<Outcome> {
    check_config(graph, cfg)?;
    let n = graph.n();
    let (p, q) = (cfg.lambda.p(), cfg.lambda.q());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut colors = vec![Color::Unpainted; n];
    let mut tick = vec![UNPAINTED; n];
    colors[cfg.red_source as usize] = Color::Red;
    colors[cfg.blue_source as usize] = Color::Blue;
    tick[cfg.red_source as usize] = 0;
    tick[cfg.blue_source as usize] = 0;

    loop {
        let mut arrivals = Vec::new();
        let mut earliest = UNPAINTED;
        for v in 0..n as u32 {
            if colors[v as usize] != Color::Unpainted {
                continue;
            }
            let (mut ra, mut ba) = (UNPAINTED, UNPAINTED);
            for &w in graph.neighbors(v) {
                match colors[w as usize] {
                    Color::Red => ra = ra.min(tick[w as usize] + q),
                    Color::Blue => ba = ba.min(tick[w as usize] + p),
                    Color::Unpainted => {}
                }
            }
            earliest = earliest.min(ra.min(ba));
            arrivals.push((v, ra, ba));
        }
        if earliest == UNPAINTED {
            break;
        }
        let mut ties = Vec::new();
        let mut plain = Vec::new();
        for &(v, ra, ba) in &arrivals {
            match (ra == earliest, ba == earliest) {
                (true, true) => {
                    let (r, b) = painted_neighbor_counts(graph, &colors, v);
                    ties.push(TieClaim { vertex: v, red_neighbors: r, blue_neighbors: b });
                }
                (true, false) => plain.push((v, Color::Red)),
                (false, true) => plain.push((v, Color::Blue)),
                (false, false) => {}
            }
        }
        let decided = tie_resolve(&ties, cfg.tie_rule, Some(&mut rng))?;
        plain.extend(ties.iter().map(|c| c.vertex).zip(decided));
        for (v, c) in plain {
            colors[v as usize] = c;
            tick[v as usize] = earliest;
        }
    }

    let red_count = colors.iter().filter(|&&c| c == Color::Red).count() as u64;
    let blue_count = colors.iter().filter(|&&c| c == Color::Blue).count() as u64;

    let mut first_block: Option<u64> = None;
    for w in 0..n as u32 {
        if colors[w as usize] != Color::Blue {
            continue;
        }
        let reach = tick[w as usize] + p;
        for &v in graph.neighbors(w) {
            if colors[v as usize] == Color::Red && tick[v as usize] <= reach {
                first_block = Some(first_block.map_or(reach, |b| b.min(reach)));
            }
        }
    }

    let mut blues: Vec<u32> = (0..n as u32).filter(|&v| colors[v as usize] == Color::Blue).collect();
    blues.sort_by_key(|&v| (tick[v as usize], v));
    let mut trajectory = vec![(0, graph.degree(cfg.blue_source))];
    for &v in &blues {
        let d = graph.degree(v);
        let (last_t, last_d) = *trajectory.last().unwrap();
        if d > last_d {
            if last_t == tick[v as usize] {
                trajectory.pop();
            }
            trajectory.push((tick[v as usize], d));
        }
    }

    Ok(Outcome {
        colors,
        paint_tick: tick,
        red_count,
        blue_count,
        dmax_blue_trajectory: trajectory,
        first_block_tick: first_block,
        lambda: cfg.lambda,
        seed: cfg.seed,
    })
}
