//! Graph measurements: degree layers, half-edge counts and restricted path counts.

use std::io::Write;

use serde::Serialize;

use crate::compete::{Color, Outcome, UNPAINTED};
use crate::error::{Error, Result};
use crate::graph::{DegreeSequence, Graph};

/// Occupation statistics of one layer `{v : d_v > threshold}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerRow {
    pub layer_index: usize,
    pub threshold: f64,
    pub gamma_size: u64,
    pub red_in_layer: u64,
    pub blue_in_layer: u64,
    pub first_blue_tick: Option<u64>,
    /// Blue vertices in the layer at the first tick blue enters it.
    pub a_i: u64,
    /// Fraction of this layer adjacent to the next one; `None` when undefined.
    pub connectivity_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerProfile {
    pub rows: Vec<LayerRow>,
}

impl LayerProfile {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        out.write_record(["layer_index", "threshold", "gamma_size", "A_i", "connectivity_fraction"]).map_err(io)?;
        for r in &self.rows {
            out.write_record([
                r.layer_index.to_string(),
                r.threshold.to_string(),
                r.gamma_size.to_string(),
                r.a_i.to_string(),
                r.connectivity_fraction.map_or_else(|| "NA".to_string(), |f| f.to_string()),
            ])
            .map_err(io)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Layer membership of a finished competition. Layers use strict
/// inequality `d_v > threshold`; the connectivity of layer `i` is measured
/// against layer `i + 1`.
pub fn layer_occupancy(graph: &Graph, outcome: &Outcome, thresholds: &[f64]) -> Result<LayerProfile> {
    if outcome.colors.len() != graph.n() {
        return Err(Error::InvalidParameter("outcome does not belong to this graph".into()));
    }
    let mut rows = Vec::with_capacity(thresholds.len());
    for (i, &u) in thresholds.iter().enumerate() {
        let mut gamma_size = 0;
        let mut red = 0;
        let mut blue_ticks = Vec::new();
        for v in 0..graph.n() as u32 {
            if graph.degree(v) as f64 <= u {
                continue;
            }
            gamma_size += 1;
            match outcome.colors[v as usize] {
                Color::Red => red += 1,
                Color::Blue => blue_ticks.push(outcome.paint_tick[v as usize]),
                Color::Unpainted => {}
            }
        }
        let first_blue_tick = blue_ticks.iter().copied().min();
        let a_i = first_blue_tick.map_or(0, |t| blue_ticks.iter().filter(|&&x| x == t).count() as u64);
        let connectivity_fraction =
            thresholds.get(i + 1).and_then(|&upper| layer_connectivity_fraction(graph, u, upper));
        rows.push(LayerRow {
            layer_index: i,
            threshold: u,
            gamma_size,
            red_in_layer: red,
            blue_in_layer: blue_ticks.len() as u64,
            first_blue_tick,
            a_i,
            connectivity_fraction,
        });
    }
    Ok(LayerProfile { rows })
}

/// Cumulative `(tick, red, blue)` counts inside one layer at every tick
/// where the layer gains a vertex.
pub fn layer_timeline(graph: &Graph, outcome: &Outcome, threshold: f64) -> Vec<(u64, u64, u64)> {
    let mut events: Vec<(u64, Color)> = (0..graph.n() as u32)
        .filter(|&v| graph.degree(v) as f64 > threshold && outcome.paint_tick[v as usize] != UNPAINTED)
        .map(|v| (outcome.paint_tick[v as usize], outcome.colors[v as usize]))
        .collect();
    events.sort_by_key(|e| e.0);
    let mut out: Vec<(u64, u64, u64)> = Vec::new();
    let (mut r, mut b) = (0, 0);
    for (t, c) in events {
        if c == Color::Red {
            r += 1;
        } else {
            b += 1;
        }
        match out.last_mut() {
            Some(last) if last.0 == t => *last = (t, r, b),
            _ => out.push((t, r, b)),
        }
    }
    out
}

/// Fraction of `{v : d_v > lower}` with at least one neighbor in
/// `{v : d_v > upper}`; `None` if either set is empty.
pub fn layer_connectivity_fraction(graph: &Graph, lower: f64, upper: f64) -> Option<f64> {
    let in_upper = |v: u32| graph.degree(v) as f64 > upper;
    if !(0..graph.n() as u32).any(in_upper) {
        return None;
    }
    let mut total = 0u64;
    let mut linked = 0u64;
    for v in 0..graph.n() as u32 {
        if graph.degree(v) as f64 <= lower {
            continue;
        }
        total += 1;
        if graph.neighbors(v).iter().any(|&w| in_upper(w)) {
            linked += 1;
        }
    }
    (total > 0).then(|| linked as f64 / total as f64)
}

/// `sum_v d_v 1{d_v > y}`.
pub fn halfedges_above(graph: &Graph, y: f64) -> u64 {
    (0..graph.n() as u32).map(|v| graph.degree(v) as u64).filter(|&d| d as f64 > y).sum()
}

/// Adjacency entries leading from `set` to vertices outside it.
pub fn out_halfedges(graph: &Graph, set: &[u32]) -> u64 {
    let mut member = vec![false; graph.n()];
    for &v in set {
        member[v as usize] = true;
    }
    let mut count = 0;
    for v in 0..graph.n() {
        if member[v] {
            count += graph.neighbors(v as u32).iter().filter(|&&w| !member[w as usize]).count() as u64;
        }
    }
    count
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PathKind {
    /// Every vertex after the source has degree at most its ceiling.
    Good,
    /// As `Good`, and every vertex after the source has degree at least its floor.
    GoodDirected,
    /// Within the ceilings up to position `k - 1`, strictly above it at position `k`.
    Bad,
}

/// Self-avoiding paths of length `k` leaving `sources`. Position `i`
/// (`1..=k`) is constrained by `ceilings[i]` and `floors[i]`; entry 0 is ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct PathQuery {
    pub sources: Vec<u32>,
    pub target: Option<u32>,
    pub k: usize,
    pub ceilings: Vec<f64>,
    pub floors: Vec<f64>,
    pub kind: PathKind,
}

impl PathQuery {
    /// Unconstrained paths from `source` to `target`.
    pub fn between(source: u32, target: u32, k: usize) -> Self {
        PathQuery {
            sources: vec![source],
            target: Some(target),
            k,
            ceilings: vec![f64::INFINITY; k + 1],
            floors: vec![0.0; k + 1],
            kind: PathKind::Good,
        }
    }
}

/// Count paths as sequences of adjacency entries, so parallel edges count
/// separately; no vertex repeats.
pub fn count_restricted_paths(graph: &Graph, q: &PathQuery) -> Result<u64> {
    if q.k == 0 || q.ceilings.len() != q.k + 1 || q.floors.len() != q.k + 1 {
        return Err(Error::InvalidParameter("need k >= 1 and k + 1 ceilings and floors".into()));
    }
    for &s in q.sources.iter().chain(q.target.iter()) {
        graph.check_vertex(s as u64)?;
    }
    let mut on_path = vec![false; graph.n()];
    let mut total = 0u64;
    for &s in &q.sources {
        on_path[s as usize] = true;
        total += extend(graph, q, s, 1, &mut on_path);
        on_path[s as usize] = false;
    }
    Ok(total)
}

fn admissible(q: &PathQuery, pos: usize, deg: f64) -> bool {
    let within = deg <= q.ceilings[pos];
    match q.kind {
        PathKind::Good => within,
        PathKind::GoodDirected => within && deg >= q.floors[pos],
        PathKind::Bad => {
            if pos == q.k {
                !within
            } else {
                within
            }
        }
    }
}

fn extend(graph: &Graph, q: &PathQuery, from: u32, pos: usize, on_path: &mut [bool]) -> u64 {
    let mut count = 0;
    for &w in graph.neighbors(from) {
        if on_path[w as usize] || !admissible(q, pos, graph.degree(w) as f64) {
            continue;
        }
        if pos == q.k {
            if q.target.map_or(true, |t| t == w) {
                count += 1;
            }
            continue;
        }
        if q.target == Some(w) {
            continue;
        }
        on_path[w as usize] = true;
        count += extend(graph, q, w, pos + 1, on_path);
        on_path[w as usize] = false;
    }
    count
}

/// Largest number of intermediate tuples enumerated by
/// [`exact_conditional_path_expectation`].
pub const MAX_TUPLES: u128 = 50_000_000;

/// Expected number of good paths of length `k` from `a` to `b` over the
/// uniform pairing of `seq`:
/// `sum over distinct intermediates of d_a d_b prod d_i (d_i - 1) / prod_{i=1..k} (L - 2i + 1)`.
pub fn exact_conditional_path_expectation(
    seq: &DegreeSequence,
    a: u32,
    b: u32,
    ceilings: &[f64],
    k: usize,
) -> Result<f64> {
    let n = seq.len();
    let d = seq.degrees();
    if a as usize >= n || b as usize >= n {
        return Err(Error::VertexOutOfRange { vertex: a.max(b) as u64, n: n as u64 });
    }
    if a == b || k == 0 || ceilings.len() != k + 1 {
        return Err(Error::InvalidParameter("need a != b, k >= 1 and k + 1 ceilings".into()));
    }
    let l = seq.total() as f64;
    if l < 2.0 * k as f64 {
        return Ok(0.0);
    }
    let tuples = (n as u128).saturating_pow(k as u32 - 1);
    if tuples > MAX_TUPLES {
        return Err(Error::EnumerationTooLarge(tuples));
    }
    if d[b as usize] as f64 > ceilings[k] {
        return Ok(0.0);
    }
    let mut used = vec![false; n];
    used[a as usize] = true;
    used[b as usize] = true;
    let weight = sum_tuples(d, ceilings, 1, k, &mut used);
    let denom: f64 = (1..=k).map(|i| l - 2.0 * i as f64 + 1.0).product();
    Ok(d[a as usize] as f64 * d[b as usize] as f64 * weight / denom)
}

fn sum_tuples(d: &[u32], ceilings: &[f64], pos: usize, k: usize, used: &mut [bool]) -> f64 {
    if pos == k {
        return 1.0;
    }
    let mut s = 0.0;
    for v in 0..d.len() {
        let dv = d[v] as f64;
        if used[v] || dv > ceilings[pos] || d[v] < 2 {
            continue;
        }
        used[v] = true;
        s += dv * (dv - 1.0) * sum_tuples(d, ceilings, pos + 1, k, used);
        used[v] = false;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compete::{run_competition, CompetitionConfig, SpeedRatio, TieRule};

    fn complete(n: u32) -> Graph {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((i, j));
            }
        }
        Graph::from_edges(n as usize, &e).unwrap()
    }

    fn star(n: u32) -> Graph {
        let e: Vec<(u32, u32)> = (1..n).map(|i| (0, i)).collect();
        Graph::from_edges(n as usize, &e).unwrap()
    }

    #[test]
    fn path_competition_layers() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let cfg = CompetitionConfig {
            lambda: SpeedRatio::new(2, 1).unwrap(),
            red_source: 0,
            blue_source: 4,
            tie_rule: TieRule::FairCoin,
            seed: 1,
        };
        let o = run_competition(&g, &cfg).unwrap();
        let p = layer_occupancy(&g, &o, &[1.5]).unwrap();
        let row = &p.rows[0];
        assert_eq!(row.gamma_size, 3);
        assert_eq!(row.blue_in_layer, 1);
        assert_eq!(row.a_i, 1);
        assert_eq!(row.first_blue_tick, Some(2));
        assert_eq!(row.connectivity_fraction, None);
        let tl = layer_timeline(&g, &o, 1.5);
        assert_eq!(tl, vec![(1, 1, 0), (2, 2, 1)]);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("layer_index,threshold,gamma_size,A_i,connectivity_fraction\n"));
    }

    #[test]
    fn connectivity_examples() {
        assert_eq!(layer_connectivity_fraction(&complete(4), 0.5, 0.5), Some(1.0));
        let n = 10;
        let f = layer_connectivity_fraction(&star(n), 0.5, 1.5).unwrap();
        assert!((f - (n - 1) as f64 / n as f64).abs() < 1e-12);
        assert_eq!(layer_connectivity_fraction(&star(n), 0.5, 100.0), None);
        assert_eq!(layer_connectivity_fraction(&star(n), 100.0, 0.5), None);
    }

    #[test]
    fn halfedge_counts() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 1), (0, 2), (0, 3), (1, 2), (0, 3)]).unwrap();
        assert_eq!(g.degrees(), vec![5, 3, 2, 2]);
        assert_eq!(halfedges_above(&g, 2.0), 8);
        assert_eq!(halfedges_above(&g, 3.0), 5);
        assert_eq!(out_halfedges(&g, &[0]), 5);
        assert_eq!(out_halfedges(&g, &[0, 1]), 4);
    }

    #[test]
    fn small_path_counts() {
        let tri = complete(3);
        assert_eq!(count_restricted_paths(&tri, &PathQuery::between(0, 2, 2)).unwrap(), 1);
        let mut q = PathQuery::between(0, 2, 2);
        q.ceilings[1] = 1.0;
        assert_eq!(count_restricted_paths(&tri, &q).unwrap(), 0);
        let c4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        assert_eq!(count_restricted_paths(&c4, &PathQuery::between(0, 2, 2)).unwrap(), 2);
        // parallel edges count separately
        let m = Graph::from_edges(3, &[(0, 1), (0, 1), (1, 2)]).unwrap();
        assert_eq!(count_restricted_paths(&m, &PathQuery::between(0, 2, 2)).unwrap(), 2);
    }

    #[test]
    fn bad_paths_turn_bad_at_last_step() {
        // 0 - 1 - 2 with 2 a hub of degree 4
        let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (2, 4), (2, 5)]).unwrap();
        let q = PathQuery {
            sources: vec![0],
            target: None,
            k: 2,
            ceilings: vec![f64::INFINITY, 2.0, 3.0],
            floors: vec![0.0; 3],
            kind: PathKind::Bad,
        };
        assert_eq!(count_restricted_paths(&g, &q).unwrap(), 1);
        let q = PathQuery { kind: PathKind::Good, ..q };
        assert_eq!(count_restricted_paths(&g, &q).unwrap(), 0);
    }

    #[test]
    fn exact_expectation_triangle_sequence() {
        let seq = DegreeSequence::new(vec![2, 2, 2]).unwrap();
        let e = exact_conditional_path_expectation(&seq, 0, 2, &[f64::INFINITY; 3], 2).unwrap();
        assert!((e - 8.0 / 15.0).abs() < 1e-15);
        let e1 = exact_conditional_path_expectation(&seq, 0, 2, &[f64::INFINITY; 2], 1).unwrap();
        assert!((e1 - 4.0 / 5.0).abs() < 1e-15);
    }
}
