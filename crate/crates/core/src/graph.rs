//! Configuration-model multigraphs in compressed sparse row form.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::degrees::{DegreeFamily, DegreeModel};
use crate::error::{Error, Result};

/// Default ceiling on the estimated memory footprint of a build.
pub const DEFAULT_MEMORY_LIMIT: u64 = 6 << 30;

const MAGIC: &[u8; 8] = b"CMGRAPH\0";
const FORMAT_VERSION: u32 = 1;
/// Family tag for graphs assembled from explicit edges or degrees.
pub const FAMILY_TAG_FIXED: u32 = 2;

/// Vertex degrees with an even total.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSequence {
    degrees: Vec<u32>,
    total: u64,
}

impl DegreeSequence {
    /// Takes raw degrees; if the total is odd the last entry is decreased by one.
    pub fn new(mut degrees: Vec<u32>) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::InvalidDegreeSequence("no vertices".into()));
        }
        if degrees.iter().any(|&d| d == 0) {
            return Err(Error::InvalidDegreeSequence("zero degree".into()));
        }
        let mut total: u64 = degrees.iter().map(|&d| d as u64).sum();
        if total % 2 == 1 {
            let last = degrees.last_mut().unwrap();
            if *last == 1 {
                return Err(Error::InvalidDegreeSequence(
                    "parity fix would leave the last vertex with degree 0".into(),
                ));
            }
            *last -= 1;
            total -= 1;
        }
        Ok(DegreeSequence { degrees, total })
    }

    /// Sequence exactly as given; the total must already be even.
    pub fn exact(degrees: Vec<u32>) -> Result<Self> {
        let total: u64 = degrees.iter().map(|&d| d as u64).sum();
        if total % 2 == 1 {
            return Err(Error::InvalidDegreeSequence(format!("odd total {total}")));
        }
        Ok(DegreeSequence { degrees, total })
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Total number of half-edges `L_n`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    /// Owner vertex of every half-edge, half-edges numbered vertex by vertex.
    fn owners(&self) -> Vec<u32> {
        let mut owners = Vec::with_capacity(self.total as usize);
        for (v, &d) in self.degrees.iter().enumerate() {
            owners.extend(std::iter::repeat(v as u32).take(d as usize));
        }
        owners
    }
}

/// Uniform perfect matching of half-edges `0..L`, returned as pairs.
///
/// Half-edges are numbered vertex by vertex; the matching is obtained by a
/// uniform shuffle followed by consecutive pairing.
pub fn uniform_pairing<R: Rng + ?Sized>(seq: &DegreeSequence, rng: &mut R) -> Result<Vec<(u64, u64)>> {
    if seq.total % 2 == 1 {
        return Err(Error::InvalidDegreeSequence(format!("odd total {}", seq.total)));
    }
    let mut labels: Vec<u64> = (0..seq.total).collect();
    labels.shuffle(rng);
    Ok(labels.chunks_exact(2).map(|c| (c[0], c[1])).collect())
}

/// Largest half-edge count accepted by [`for_each_pairing`] (`17!! ~ 3.4e7` matchings).
pub const MAX_ENUMERATED_HALF_EDGES: u64 = 18;

/// Calls `f` on every perfect matching of half-edges `0..total`.
pub fn for_each_pairing<F: FnMut(&[(u64, u64)])>(total: u64, mut f: F) -> Result<u64> {
    if total % 2 == 1 {
        return Err(Error::InvalidDegreeSequence(format!("odd total {total}")));
    }
    if total > MAX_ENUMERATED_HALF_EDGES {
        return Err(Error::EnumerationTooLarge((1..total).step_by(2).map(|x| x as u128).product()));
    }
    fn rec<F: FnMut(&[(u64, u64)])>(free: &mut Vec<u64>, pairs: &mut Vec<(u64, u64)>, f: &mut F) -> u64 {
        if free.is_empty() {
            f(pairs);
            return 1;
        }
        let a = free.remove(0);
        let mut count = 0;
        for i in 0..free.len() {
            let b = free.remove(i);
            pairs.push((a, b));
            count += rec(free, pairs, f);
            pairs.pop();
            free.insert(i, b);
        }
        free.insert(0, a);
        count
    }
    let mut free: Vec<u64> = (0..total).collect();
    Ok(rec(&mut free, &mut Vec::new(), &mut f))
}

/// Simple generation metadata kept with a graph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphMeta {
    pub seed: u64,
    pub tau: f64,
    pub family_tag: u32,
}

/// Undirected multigraph; self-loops contribute two adjacency entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    offsets: Vec<u64>,
    neighbors: Vec<u32>,
    meta: GraphMeta,
}

/// Rough peak footprint in bytes of building a graph on `n` vertices
/// with mean degree `mean`.
pub fn estimate_build_bytes(n: u64, mean: f64) -> u64 {
    let half_edges = (n as f64 * mean) as u64;
    // degrees, offsets, cursors, owners, neighbors
    n * 4 + (n + 1) * 8 + n * 8 + half_edges * 4 + half_edges * 4
}

impl Graph {
    /// Sample i.i.d. degrees from `model` and pair half-edges uniformly.
    pub fn build(n: u64, model: &DegreeModel, seed: u64) -> Result<Graph> {
        Self::build_with_limit(n, model, seed, DEFAULT_MEMORY_LIMIT)
    }

    pub fn build_with_limit(n: u64, model: &DegreeModel, seed: u64, limit: u64) -> Result<Graph> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if n > u32::MAX as u64 {
            return Err(Error::InvalidParameter(format!("n = {n} exceeds the u32 vertex id range")));
        }
        let bytes = estimate_build_bytes(n, model.mean());
        if bytes > limit {
            return Err(Error::TooLarge { n, bytes, limit });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let degrees: Vec<u32> = (0..n).map(|_| model.sample(&mut rng).min(u32::MAX as u64 / 2) as u32).collect();
        let seq = DegreeSequence::new(degrees)?;
        let meta = GraphMeta { seed, tau: model.tau(), family_tag: model.family().tag() };
        Ok(Self::pair(&seq, &mut rng, meta))
    }

    /// Pair the half-edges of a given sequence with a seeded shuffle.
    pub fn from_degree_sequence(seq: &DegreeSequence, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let meta = GraphMeta { seed, tau: 0.0, family_tag: FAMILY_TAG_FIXED };
        Self::pair(seq, &mut rng, meta)
    }

    /// Shuffle the owner array with the same swap sequence as
    /// [`uniform_pairing`] would apply to the labels, then pair consecutively.
    fn pair<R: Rng + ?Sized>(seq: &DegreeSequence, rng: &mut R, meta: GraphMeta) -> Graph {
        let mut owners = seq.owners();
        owners.shuffle(rng);
        let offsets = offsets_of(seq.degrees());
        let mut cursor: Vec<u64> = offsets[..offsets.len() - 1].to_vec();
        let mut neighbors = vec![0u32; seq.total as usize];
        for pair in owners.chunks_exact(2) {
            let (u, v) = (pair[0], pair[1]);
            neighbors[cursor[u as usize] as usize] = v;
            cursor[u as usize] += 1;
            neighbors[cursor[v as usize] as usize] = u;
            cursor[v as usize] += 1;
        }
        Graph { offsets, neighbors, meta }
    }

    /// Graph from an explicit matching of the half-edges of `seq`.
    pub fn from_pairing(seq: &DegreeSequence, pairs: &[(u64, u64)]) -> Result<Graph> {
        if pairs.len() as u64 * 2 != seq.total {
            return Err(Error::InvalidParameter("pairing does not cover all half-edges".into()));
        }
        let offsets = offsets_of(seq.degrees());
        let owners = seq.owners();
        let mut seen = vec![false; seq.total as usize];
        let mut cursor: Vec<u64> = offsets[..offsets.len() - 1].to_vec();
        let mut neighbors = vec![0u32; seq.total as usize];
        for &(a, b) in pairs {
            for h in [a, b] {
                if h >= seq.total || std::mem::replace(&mut seen[h as usize], true) {
                    return Err(Error::InvalidParameter(format!("bad half-edge {h} in pairing")));
                }
            }
            let (u, v) = (owners[a as usize], owners[b as usize]);
            neighbors[cursor[u as usize] as usize] = v;
            cursor[u as usize] += 1;
            neighbors[cursor[v as usize] as usize] = u;
            cursor[v as usize] += 1;
        }
        let meta = GraphMeta { seed: 0, tau: 0.0, family_tag: FAMILY_TAG_FIXED };
        Ok(Graph { offsets, neighbors, meta })
    }

    /// Graph from an edge list on vertices `0..n`.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Graph> {
        let mut degrees = vec![0u32; n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w as usize >= n {
                    return Err(Error::VertexOutOfRange { vertex: w as u64, n: n as u64 });
                }
            }
            degrees[u as usize] += 1;
            degrees[v as usize] += 1;
        }
        let offsets = offsets_of(&degrees);
        let mut cursor: Vec<u64> = offsets[..n].to_vec();
        let mut neighbors = vec![0u32; offsets[n] as usize];
        for &(u, v) in edges {
            neighbors[cursor[u as usize] as usize] = v;
            cursor[u as usize] += 1;
            neighbors[cursor[v as usize] as usize] = u;
            cursor[v as usize] += 1;
        }
        let meta = GraphMeta { seed: 0, tau: 0.0, family_tag: FAMILY_TAG_FIXED };
        Ok(Graph { offsets, neighbors, meta })
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of half-edges (adjacency entries).
    pub fn half_edges(&self) -> u64 {
        self.neighbors.len() as u64
    }

    pub fn degree(&self, v: u32) -> u32 {
        let v = v as usize;
        (self.offsets[v + 1] - self.offsets[v]) as u32
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.neighbors[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    pub fn degrees(&self) -> Vec<u32> {
        self.offsets.windows(2).map(|w| (w[1] - w[0]) as u32).collect()
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn adjacency(&self) -> &[u32] {
        &self.neighbors
    }

    pub fn meta(&self) -> GraphMeta {
        self.meta
    }

    pub fn check_vertex(&self, v: u64) -> Result<u32> {
        if v >= self.n() as u64 {
            return Err(Error::VertexOutOfRange { vertex: v, n: self.n() as u64 });
        }
        Ok(v as u32)
    }

    /// Write the binary dump: header, then offsets (u64 LE) and neighbors (u32 LE).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&self.meta.family_tag.to_le_bytes())?;
        w.write_all(&(self.n() as u64).to_le_bytes())?;
        w.write_all(&self.half_edges().to_le_bytes())?;
        w.write_all(&self.meta.seed.to_le_bytes())?;
        w.write_all(&self.meta.tau.to_le_bytes())?;
        for &o in &self.offsets {
            w.write_all(&o.to_le_bytes())?;
        }
        for &v in &self.neighbors {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Graph> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Graph> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = read_u32(r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let family_tag = read_u32(r)?;
        let n = read_u64(r)?;
        let l = read_u64(r)?;
        let seed = read_u64(r)?;
        let tau = f64::from_bits(read_u64(r)?);
        let mut offsets = Vec::with_capacity(n as usize + 1);
        for _ in 0..=n {
            offsets.push(read_u64(r)?);
        }
        let mut neighbors = Vec::with_capacity(l as usize);
        for _ in 0..l {
            neighbors.push(read_u32(r)?);
        }
        if offsets[0] != 0
            || offsets[n as usize] != l
            || offsets.windows(2).any(|w| w[1] < w[0])
            || neighbors.iter().any(|&v| v as u64 >= n)
        {
            return Err(Error::Format("inconsistent arrays".into()));
        }
        Ok(Graph { offsets, neighbors, meta: GraphMeta { seed, tau, family_tag } })
    }
}

fn offsets_of(degrees: &[u32]) -> Vec<u64> {
    let mut offsets = Vec::with_capacity(degrees.len() + 1);
    let mut acc = 0u64;
    offsets.push(0);
    for &d in degrees {
        acc += d as u64;
        offsets.push(acc);
    }
    offsets
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Degree family of a dump tag, if it names one.
pub fn family_of_tag(tag: u32) -> Option<DegreeFamily> {
    match tag {
        0 => Some(DegreeFamily::ParetoCeil),
        1 => Some(DegreeFamily::ExplicitPmf),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_fix_on_last_vertex() {
        let s = DegreeSequence::new(vec![3, 2]).unwrap();
        assert_eq!(s.degrees(), &[3, 1]);
        assert_eq!(s.total(), 4);
        assert!(DegreeSequence::new(vec![2, 1]).is_err());
        assert!(DegreeSequence::new(vec![]).is_err());
    }

    #[test]
    fn degrees_match_sequence() {
        let s = DegreeSequence::new(vec![3, 2]).unwrap();
        let g = Graph::from_degree_sequence(&s, 1);
        assert_eq!(g.degrees(), vec![3, 1]);
        assert_eq!(g.half_edges(), 4);
    }

    #[test]
    fn zero_vertices_rejected() {
        let m = DegreeModel::pareto_ceil(2.5).unwrap();
        assert!(Graph::build(0, &m, 1).is_err());
        assert!(matches!(Graph::build_with_limit(1000, &m, 1, 10), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn pairing_is_fixed_point_free_involution() {
        let s = DegreeSequence::new(vec![3, 5, 2, 2, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pairs = uniform_pairing(&s, &mut rng).unwrap();
        let mut partner = vec![u64::MAX; s.total() as usize];
        for &(a, b) in &pairs {
            assert_ne!(a, b);
            partner[a as usize] = b;
            partner[b as usize] = a;
        }
        for (h, &p) in partner.iter().enumerate() {
            assert_eq!(partner[p as usize], h as u64);
        }
        let odd = DegreeSequence::exact(vec![1, 2]);
        assert!(odd.is_err());
    }

    #[test]
    fn build_agrees_with_explicit_pairing() {
        let s = DegreeSequence::new(vec![3, 5, 2, 2, 4, 1, 7]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let pairs = uniform_pairing(&s, &mut rng).unwrap();
        let a = Graph::from_pairing(&s, &pairs).unwrap();
        let b = Graph::from_degree_sequence(&s, 42);
        assert_eq!(a.offsets(), b.offsets());
        assert_eq!(a.adjacency(), b.adjacency());
    }

    #[test]
    fn build_is_deterministic() {
        let m = DegreeModel::pareto_ceil(2.5).unwrap();
        let a = Graph::build(5000, &m, 17).unwrap();
        let b = Graph::build(5000, &m, 17).unwrap();
        assert_eq!(a, b);
        let c = Graph::build(5000, &m, 18).unwrap();
        assert_ne!(a.adjacency(), c.adjacency());
    }

    #[test]
    fn adjacency_is_symmetric_with_loops_counted_twice() {
        let m = DegreeModel::pareto_ceil(2.3).unwrap();
        let g = Graph::build(2000, &m, 5).unwrap();
        let mut count = std::collections::HashMap::new();
        for u in 0..g.n() as u32 {
            for &v in g.neighbors(u) {
                *count.entry((u, v)).or_insert(0i64) += 1;
            }
        }
        for (&(u, v), &c) in &count {
            if u != v {
                assert_eq!(count[&(v, u)], c);
            } else {
                assert_eq!(c % 2, 0);
            }
        }
    }

    #[test]
    fn dump_round_trip() {
        let m = DegreeModel::pareto_ceil(2.5).unwrap();
        let g = Graph::build(300, &m, 3).unwrap();
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        let h = Graph::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(g, h);
        assert_eq!(h.meta().family_tag, 0);
        buf[0] = b'X';
        assert!(Graph::read_from(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn pairing_enumeration_counts() {
        assert_eq!(for_each_pairing(0, |_| {}).unwrap(), 1);
        assert_eq!(for_each_pairing(4, |_| {}).unwrap(), 3);
        let mut seen = std::collections::HashSet::new();
        let count = for_each_pairing(8, |p| {
            let mut key: Vec<_> = p.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
            key.sort();
            assert!(seen.insert(key));
        })
        .unwrap();
        assert_eq!(count, 105);
        assert!(for_each_pairing(5, |_| {}).is_err());
        assert!(matches!(for_each_pairing(20, |_| {}), Err(Error::EnumerationTooLarge(_))));
    }
}
