//! Degree laws: the ceiling-Pareto family and explicit probability tables,
//! together with their size-biased (forward) laws and samplers.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::hurwitz_zeta;

/// Largest value returned by the size-biased sampler. Draws whose exact
/// value would exceed this are clamped to it.
pub const SIZE_BIASED_CAP: u64 = 1 << 62;

/// Number of entries in the precomputed size-biased tail table.
const TABLE_LEN: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegreeFamily {
    ParetoCeil,
    ExplicitPmf,
}

impl DegreeFamily {
    pub fn tag(self) -> u32 {
        match self {
            DegreeFamily::ParetoCeil => 0,
            DegreeFamily::ExplicitPmf => 1,
        }
    }
}

#[derive(Clone, Debug)]
enum Law {
    ParetoCeil,
    Explicit { support: Vec<u64>, probs: Vec<f64>, cdf: Vec<f64> },
}

/// A degree law with all mass on degrees `>= 2`.
#[derive(Clone, Debug)]
pub struct DegreeModel {
    tau: f64,
    law: Law,
    mean: f64,
    c_lower: f64,
    c_upper: f64,
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 2.0 && tau < 3.0) {
        return Err(Error::Domain { what: "tau", value: tau });
    }
    Ok(())
}

/// `max(2, ceil(u^{-1/(tau-1)}))` for `u` in `(0, 1]`, saturating at `u64::MAX / 2`.
///
/// Values within 1e-9 (relative) of an integer are treated as that integer.
pub fn pareto_ceil_from_uniform(tau: f64, u: f64) -> u64 {
    let x = u.powf(-1.0 / (tau - 1.0));
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * x { r } else { x.ceil() };
    let k = k.min((u64::MAX / 2) as f64);
    (k as u64).max(2)
}

impl DegreeModel {
    /// The law `D = max(2, ceil(U^{-1/(tau-1)}))`, so that `P(D > x) = floor(x)^{-(tau-1)}` for `x >= 2`.
    pub fn pareto_ceil(tau: f64) -> Result<Self> {
        check_tau(tau)?;
        let s = tau - 1.0;
        Ok(DegreeModel {
            tau,
            law: Law::ParetoCeil,
            mean: 2.0 + hurwitz_zeta(s, 2.0),
            c_lower: 1.0,
            c_upper: 2f64.powf(s),
        })
    }

    /// A finite table of `(degree, probability)` pairs. `tau` is carried
    /// along for the parts of the model that need an exponent.
    pub fn explicit(tau: f64, pmf: &[(u64, f64)]) -> Result<Self> {
        check_tau(tau)?;
        if pmf.is_empty() {
            return Err(Error::InvalidParameter("empty pmf".into()));
        }
        let mut map = BTreeMap::new();
        for &(k, p) in pmf {
            if k < 2 {
                return Err(Error::InvalidParameter(format!("pmf mass on degree {k} < 2")));
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidParameter(format!("bad probability {p} for degree {k}")));
            }
            if map.insert(k, p).is_some() {
                return Err(Error::InvalidParameter(format!("degree {k} listed twice")));
            }
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("pmf sums to {total}")));
        }
        let support: Vec<u64> = map.keys().copied().collect();
        let probs: Vec<f64> = map.values().copied().collect();
        let mut acc = 0.0;
        let cdf: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let mean = support.iter().zip(&probs).map(|(&k, &p)| k as f64 * p).sum();
        // sup over x >= 2 of P(D > x) x^{tau-1}; on [k, k+1) the sup is approached at k+1
        let mut c_upper: f64 = 0.0;
        for &k in &support {
            for kk in [k.saturating_sub(1).max(2), k] {
                let tail: f64 = support.iter().zip(&probs).filter(|(&j, _)| j > kk).map(|(_, &p)| p).sum();
                c_upper = c_upper.max(tail * ((kk + 1) as f64).powf(tau - 1.0));
            }
        }
        Ok(DegreeModel { tau, law: Law::Explicit { support, probs, cdf }, mean, c_lower: 0.0, c_upper })
    }

    pub fn family(&self) -> DegreeFamily {
        match self.law {
            Law::ParetoCeil => DegreeFamily::ParetoCeil,
            Law::Explicit { .. } => DegreeFamily::ExplicitPmf,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Lower tail constant `c1` (zero for finite tables).
    pub fn c1(&self) -> f64 {
        self.c_lower
    }

    /// Upper tail constant `C1`.
    pub fn c1_upper(&self) -> f64 {
        self.c_upper
    }

    /// Largest degree with positive mass, if finite.
    pub fn max_degree(&self) -> Option<u64> {
        match &self.law {
            Law::ParetoCeil => None,
            Law::Explicit { support, probs, .. } => {
                support.iter().zip(probs).rev().find(|(_, &p)| p > 0.0).map(|(&k, _)| k)
            }
        }
    }

    /// `P(D > x)` for `x >= 2`.
    pub fn tail(&self, x: f64) -> Result<f64> {
        if !(x >= 2.0) {
            return Err(Error::Domain { what: "degree tail argument", value: x });
        }
        Ok(match &self.law {
            Law::ParetoCeil => x.floor().powf(-(self.tau - 1.0)),
            Law::Explicit { support, probs, .. } => {
                support.iter().zip(probs).filter(|(&k, _)| k as f64 > x).map(|(_, &p)| p).sum()
            }
        })
    }

    /// `P(D > k)` for any integer `k`.
    pub fn tail_int(&self, k: u64) -> f64 {
        if k < 2 {
            return 1.0;
        }
        self.tail(k as f64).unwrap_or(1.0)
    }

    /// `P(D = k)`.
    pub fn pmf(&self, k: u64) -> f64 {
        match &self.law {
            Law::ParetoCeil => {
                let s = self.tau - 1.0;
                match k {
                    0 | 1 => 0.0,
                    2 => 1.0 - 2f64.powf(-s),
                    _ => {
                        let kf = k as f64;
                        kf.powf(-s) * (-s * (-1.0 / kf).ln_1p()).exp_m1()
                    }
                }
            }
            Law::Explicit { support, probs, .. } => match support.binary_search(&k) {
                Ok(i) => probs[i],
                Err(_) => 0.0,
            },
        }
    }

    /// One draw of `D`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.law {
            Law::ParetoCeil => {
                let u = 1.0 - rng.gen::<f64>();
                pareto_ceil_from_uniform(self.tau, u)
            }
            Law::Explicit { support, cdf, .. } => {
                let v = rng.gen::<f64>();
                let i = cdf.partition_point(|&c| c <= v).min(support.len() - 1);
                support[i]
            }
        }
    }

    /// The size-biased law `f*_j = (j+1) P(D = j+1) / E[D]`.
    pub fn size_biased(&self) -> SizeBiasedLaw {
        SizeBiasedLaw::new(self.clone())
    }
}

/// The forward-degree law of a uniformly chosen half-edge.
#[derive(Clone, Debug)]
pub struct SizeBiasedLaw {
    model: DegreeModel,
    /// `table[k] = P(B > k)` for `k < table.len()`.
    table: Vec<f64>,
}

impl SizeBiasedLaw {
    fn new(model: DegreeModel) -> Self {
        let len = match model.max_degree() {
            Some(m) => m as usize + 1,
            None => TABLE_LEN,
        };
        let mut law = SizeBiasedLaw { model, table: Vec::new() };
        law.table = (0..len as u64).map(|k| law.exact_tail_int(k)).collect();
        law
    }

    pub fn model(&self) -> &DegreeModel {
        &self.model
    }

    /// `f*_j`.
    pub fn pmf(&self, j: u64) -> f64 {
        (j + 1) as f64 * self.model.pmf(j + 1) / self.model.mean
    }

    fn exact_tail_int(&self, k: u64) -> f64 {
        let m = &self.model;
        match &m.law {
            Law::ParetoCeil => {
                if k == 0 {
                    return 1.0;
                }
                let s = m.tau - 1.0;
                let kf = k as f64;
                ((kf + 2.0) * (kf + 1.0).powf(-s) + hurwitz_zeta(s, kf + 2.0)) / m.mean
            }
            Law::Explicit { support, probs, .. } => {
                support.iter().zip(probs).filter(|(&d, _)| d >= k + 2).map(|(&d, &p)| d as f64 * p).sum::<f64>()
                    / m.mean
            }
        }
    }

    /// `1 - F*(x) = P(B > x)` for `x >= 0`.
    pub fn tail(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain { what: "size-biased tail argument", value: x });
        }
        let k = x.floor();
        if k >= SIZE_BIASED_CAP as f64 {
            return Ok(self.exact_tail_int(SIZE_BIASED_CAP));
        }
        let k = k as u64;
        Ok(match self.table.get(k as usize) {
            Some(&t) => t,
            None => self.exact_tail_int(k),
        })
    }

    /// Constants `(c, C)` with `c x^{-(tau-2)} <= P(B > x) <= C x^{-(tau-2)}` for all `x >= 1`.
    ///
    /// For the Pareto family they come from integral comparison of the
    /// zeta tail; for finite tables `c = 0` and `C` is the supremum over the support.
    pub fn tail_constants(&self) -> (f64, f64) {
        let m = &self.model;
        let s = m.tau - 1.0;
        match &m.law {
            Law::ParetoCeil => {
                let lower = (2f64.powf(1.0 - s) + 3f64.powf(1.0 - s) / (s - 1.0)) / m.mean;
                let upper = (1.5 + 1.0 / (s - 1.0) + 1.0 / 3.0) / m.mean;
                (lower, upper)
            }
            Law::Explicit { .. } => {
                let upper = (1..self.table.len())
                    .map(|k| self.table[k] * ((k + 1) as f64).powf(m.tau - 2.0))
                    .fold(0.0, f64::max);
                (0.0, upper)
            }
        }
    }

    /// Draw by inversion: the smallest `k` with `P(B > k) <= u`, `u` uniform on `(0, 1]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = 1.0 - rng.gen::<f64>();
        self.invert(u)
    }

    /// Inverse of the tail at level `u` in `(0, 1]`.
    pub fn invert(&self, u: f64) -> u64 {
        let k = self.table.partition_point(|&t| t > u);
        if k < self.table.len() || self.model.max_degree().is_some() {
            return k as u64;
        }
        // bracket then bisect on the exact tail
        let mut lo = self.table.len() as u64 - 1; // tail(lo) > u
        let mut hi = lo.saturating_mul(2);
        while self.exact_tail_int(hi) > u {
            if hi >= SIZE_BIASED_CAP {
                return SIZE_BIASED_CAP;
            }
            lo = hi;
            hi = hi.saturating_mul(2).min(SIZE_BIASED_CAP);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.exact_tail_int(mid) > u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn half_half() -> DegreeModel {
        DegreeModel::explicit(2.5, &[(2, 0.5), (3, 0.5)]).unwrap()
    }

    #[test]
    fn pareto_tail_values() {
        let m = DegreeModel::pareto_ceil(2.5).unwrap();
        assert!((m.tail(4.0).unwrap() - 0.125).abs() < 1e-15);
        assert!((m.tail(4.7).unwrap() - 0.125).abs() < 1e-15);
        assert!(m.tail(1.5).is_err());
        assert_eq!(m.c1(), 1.0);
        assert!((m.c1_upper() - 2f64.powf(1.5)).abs() < 1e-15);
    }

    #[test]
    fn explicit_tail() {
        assert_eq!(half_half().tail(2.0).unwrap(), 0.5);
    }

    #[test]
    fn explicit_validation() {
        assert!(DegreeModel::explicit(2.5, &[(1, 1.0)]).is_err());
        assert!(DegreeModel::explicit(2.5, &[(2, 0.5), (3, 0.4)]).is_err());
        assert!(DegreeModel::explicit(2.5, &[(2, 0.5), (2, 0.5)]).is_err());
        assert!(DegreeModel::explicit(3.5, &[(2, 1.0)]).is_err());
        assert!(DegreeModel::pareto_ceil(2.0).is_err());
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(pareto_ceil_from_uniform(2.5, 0.25), 3);
        assert_eq!(pareto_ceil_from_uniform(2.5, 0.9), 2);
        assert_eq!(pareto_ceil_from_uniform(2.5, 0.001), 100);
        assert_eq!(pareto_ceil_from_uniform(2.5, 1.0), 2);
    }

    #[test]
    fn pareto_pmf_sums_to_tail_differences() {
        let m = DegreeModel::pareto_ceil(2.3).unwrap();
        for k in 2..200u64 {
            let direct = m.tail_int(k - 1) - m.tail_int(k);
            assert!((m.pmf(k) - direct).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn pareto_mean_matches_partial_series() {
        // E[D] = sum_{k>=0} P(D > k); head summed directly, tail by the
        // trapezoid rule, whose error is below s N^{-s-1} / 12.
        for &tau in &[2.2, 2.5, 2.8] {
            let m = DegreeModel::pareto_ceil(tau).unwrap();
            let s = tau - 1.0;
            let n = 1_000_000u64;
            let mut sum = 2.0;
            for k in 2..n {
                sum += (k as f64).powf(-s);
            }
            let nf = n as f64;
            sum += nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s);
            assert!((m.mean() - sum).abs() < 1e-10, "tau={tau}: {} vs {sum}", m.mean());
        }
        let m = DegreeModel::pareto_ceil(2.5).unwrap();
        assert!((m.mean() - 3.612_375_348_685_488).abs() < 1e-10);
    }

    #[test]
    fn size_biased_explicit_values() {
        let b = half_half().size_biased();
        assert!((b.pmf(1) - 0.4).abs() < 1e-15);
        assert!((b.pmf(2) - 0.6).abs() < 1e-15);
        assert_eq!(b.pmf(0), 0.0);
        let b = DegreeModel::explicit(2.5, &[(2, 1.0)]).unwrap().size_biased();
        assert_eq!(b.pmf(1), 1.0);
    }

    #[test]
    fn size_biased_tail_matches_pmf_sums() {
        let m = DegreeModel::pareto_ceil(2.5).unwrap();
        let b = m.size_biased();
        let mut acc = 0.0;
        for j in 0..5000u64 {
            acc += b.pmf(j);
            let t = b.tail(j as f64).unwrap();
            assert!((1.0 - acc - t).abs() < 1e-12, "j={j}");
        }
        // beyond the table the exact formula is used
        let k = (TABLE_LEN as u64) + 10;
        let direct = b.exact_tail_int(k - 1) - b.pmf(k);
        assert!((b.tail(k as f64).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn size_biased_tail_bracket_on_grid() {
        for &tau in &[2.1, 2.5, 2.9] {
            let b = DegreeModel::pareto_ceil(tau).unwrap().size_biased();
            let (c, cc) = b.tail_constants();
            let mut x: f64 = 1.0;
            while x <= 1e6 {
                let t = b.tail(x).unwrap();
                let scale = x.powf(-(tau - 2.0));
                assert!(c * scale <= t && t <= cc * scale, "tau={tau} x={x}");
                x *= 1.37;
            }
        }
    }

    #[test]
    fn sampler_inverts_tail() {
        let b = DegreeModel::pareto_ceil(2.5).unwrap().size_biased();
        for &u in &[1.0, 0.7, 0.3, 0.01, 1e-4, 1e-9] {
            let k = b.invert(u);
            assert!(b.tail(k as f64).unwrap() <= u);
            if k > 0 {
                assert!(b.tail((k - 1) as f64).unwrap() > u);
            }
        }
        assert_eq!(b.invert(1e-300), SIZE_BIASED_CAP);
    }

    #[test]
    fn explicit_sampler_frequencies() {
        let m = half_half();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let threes = (0..n).filter(|_| m.sample(&mut rng) == 3).count();
        assert!((threes as f64 / n as f64 - 0.5).abs() < 0.01);
        let b = m.size_biased();
        let twos = (0..n).filter(|_| b.sample(&mut rng) == 2).count();
        assert!((twos as f64 / n as f64 - 0.6).abs() < 0.01);
    }
}
