//! Asymptotic predictions for the losing (blue) color: fractional-part
//! bookkeeping, the collision time and its case structure, the normalizing
//! constants, and the layer thresholds they are built from.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::compete::TieRule;
use crate::degrees::DegreeModel;
use crate::error::{Error, Result};
use crate::numeric::{approx_cmp, frac, snap_floor};

/// Increment size at which the path series is truncated.
pub const PATHS_TOL: f64 = 1e-12;

/// Inputs to the prediction chain. `n` only enters through `log log n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryInputs {
    pub log_log_n: f64,
    pub tau: f64,
    pub lambda: f64,
    pub rho_prime: f64,
    pub yr: f64,
    pub yb: f64,
    /// Value of `C log n` used in the layer recursions.
    pub clogn: f64,
    pub tie_rule: TieRule,
}

impl TheoryInputs {
    pub fn validate(&self) -> Result<()> {
        let dom = |what, value| Err(Error::Domain { what, value });
        if !self.log_log_n.is_finite() {
            return dom("log log n", self.log_log_n);
        }
        if !(self.tau > 2.0 && self.tau < 3.0) {
            return dom("tau", self.tau);
        }
        if !(self.lambda > 1.0 && self.lambda.is_finite()) {
            return dom("lambda", self.lambda);
        }
        if !(self.rho_prime > 0.0 && self.rho_prime < 1.0) {
            return dom("rho_prime", self.rho_prime);
        }
        if !(self.yr > 0.0 && self.yr.is_finite()) {
            return dom("Yr", self.yr);
        }
        if !(self.yb > 0.0 && self.yb.is_finite()) {
            return dom("Yb", self.yb);
        }
        if !(self.clogn > 0.0 && self.clogn.is_finite()) {
            return dom("clogn", self.clogn);
        }
        Ok(())
    }

    /// `log n`.
    pub fn log_n(&self) -> f64 {
        self.log_log_n.exp()
    }

    fn l(&self) -> f64 {
        (self.tau - 2.0).ln().abs()
    }
}

/// Fractional parts and the red stopping time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalChain {
    pub a_n: f64,
    /// `t(n^{rho'})`.
    pub t_rho: f64,
    pub rho_dprime: f64,
    pub b_n: f64,
    pub t_r: f64,
    pub alpha: f64,
    pub beta: f64,
}

pub fn fractional_chain(inp: &TheoryInputs) -> Result<FractionalChain> {
    inp.validate()?;
    let (tau, big_l, l) = (inp.tau, inp.log_log_n, inp.l());
    let xa = ((inp.rho_prime / inp.yr).ln() + big_l) / l;
    let a_n = frac(xa);
    let t_rho = snap_floor(xa) + 1.0;
    let rho_dprime = inp.rho_prime * (tau - 2.0).powf(a_n - 1.0);
    let xb = (-((tau - 1.0) * inp.yr).ln() + big_l) / l;
    let b_n = frac(xb);
    let t_r = snap_floor(xb) - 1.0;
    let alpha = 1.0 - (tau - 2.0).powf(b_n) / (tau - 1.0);
    let beta = 1.0 + (1.0 / (3.0 - tau)) * (1.0 / ((tau - 1.0) * rho_dprime) - 1.0);
    Ok(FractionalChain { a_n, t_rho, rho_dprime, b_n, t_r, alpha, beta })
}

/// Collision time, first form.
pub fn collision_time(inp: &TheoryInputs, chain: &FractionalChain) -> f64 {
    let lam = inp.lambda;
    lam / (lam + 1.0) * (inp.log_log_n + (chain.alpha / inp.yb).ln()) / inp.l() - chain.t_r / (lam + 1.0)
}

/// Collision time, second form (expanded in `T_r`).
pub fn collision_time_expanded(inp: &TheoryInputs, chain: &FractionalChain) -> f64 {
    let (lam, tau, l) = (inp.lambda, inp.tau, inp.l());
    let ratio = chain.alpha.powf(lam) * (tau - 1.0) * inp.yr / inp.yb.powf(lam);
    (lam - 1.0) / (lam + 1.0) * inp.log_log_n / l + ratio.ln() / ((lam + 1.0) * l) + (1.0 + chain.b_n) / (lam + 1.0)
}

/// Closed form of `(T_r + t_c) / lambda`.
pub fn blue_clock_closed_form(inp: &TheoryInputs, chain: &FractionalChain) -> f64 {
    let (lam, tau, l) = (inp.lambda, inp.tau, inp.l());
    (2.0 * inp.log_log_n - (inp.yr * inp.yb * (tau - 1.0) / chain.alpha).ln()) / ((lam + 1.0) * l)
        - (1.0 + chain.b_n) / (lam + 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    B1,
    B2,
    R1,
    R2,
    R3,
    BR1,
    BR2,
    BR3,
}

impl CaseLabel {
    pub fn name(self) -> &'static str {
        match self {
            CaseLabel::B1 => "B1",
            CaseLabel::B2 => "B2",
            CaseLabel::R1 => "R1",
            CaseLabel::R2 => "R2",
            CaseLabel::R3 => "R3",
            CaseLabel::BR1 => "BR1",
            CaseLabel::BR2 => "BR2",
            CaseLabel::BR3 => "BR3",
        }
    }

    /// Resolve tie cases according to the tie rule.
    pub fn merged(self, rule: TieRule) -> CaseLabel {
        use CaseLabel::*;
        match (self, rule.blue_can_win()) {
            (BR1, true) => B1,
            (BR2, true) => B2,
            (BR3, true) => R2,
            (BR1, false) => R1,
            (BR2, false) => R2,
            (BR3, false) => R3,
            (c, _) => c,
        }
    }

    /// Cases with an extra blue up-jump.
    pub fn has_extra_jump(self) -> bool {
        matches!(self, CaseLabel::B1 | CaseLabel::B2 | CaseLabel::R2)
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Collision quantities and the case they fall in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub t_c: f64,
    pub frac_tc: f64,
    pub frac_tl: f64,
    pub d: f64,
    pub j_r: f64,
    pub j_b: f64,
    pub r_star_minus: f64,
    pub b_star_minus: f64,
    /// Case before tie merging.
    pub raw_case: CaseLabel,
    /// Case after tie merging.
    pub case: CaseLabel,
    /// `d` fell on 1 (within tolerance) and was sent to the `d < 1` branch.
    pub d_on_boundary: bool,
}

/// Raw case from `d`, `J_r`, `J_b`. A `d` within tolerance of 1 counts as `d < 1`.
pub fn classify(d: f64, j_r: f64, j_b: f64) -> (CaseLabel, bool) {
    use std::cmp::Ordering::*;
    use CaseLabel::*;
    let boundary = approx_cmp(d, 1.0) == Equal;
    let low = boundary || d < 1.0;
    let vs_r = approx_cmp(j_b, j_r);
    let label = if low {
        match vs_r {
            Less => B1,
            Equal => BR1,
            Greater => R1,
        }
    } else {
        match (vs_r, approx_cmp(j_b, j_r + 1.0)) {
            (Less, _) => B2,
            (Equal, _) => BR2,
            (Greater, Less) => R2,
            (Greater, Equal) => BR3,
            (Greater, Greater) => R3,
        }
    };
    (label, boundary)
}

pub fn collision(t_r: f64, t_c: f64, lambda: f64, rule: TieRule) -> Collision {
    let frac_tc = frac(t_c);
    let tl = (t_r + t_c) / lambda;
    let frac_tl = frac(tl);
    let d = frac_tc + frac_tl;
    let j_r = 1.0 - frac_tc;
    let j_b = lambda * (1.0 - frac_tl);
    let (raw_case, d_on_boundary) = classify(d, j_r, j_b);
    Collision {
        t_c,
        frac_tc,
        frac_tl,
        d,
        j_r,
        j_b,
        r_star_minus: snap_floor(t_c),
        b_star_minus: lambda * snap_floor(tl),
        raw_case,
        case: raw_case.merged(rule),
        d_on_boundary,
    }
}

fn merged_case(d: f64, j_r: f64, j_b: f64, rule: TieRule) -> CaseLabel {
    classify(d, j_r, j_b).0.merged(rule)
}

/// Gain factor for the largest blue degree.
pub fn gain_f(d: f64, j_r: f64, j_b: f64, tau: f64, rule: TieRule) -> f64 {
    let base = tau - 2.0;
    match merged_case(d, j_r, j_b, rule) {
        CaseLabel::B1 => base.powf(-d),
        CaseLabel::B2 => 1.0 / base,
        CaseLabel::R2 => base.powf(1.0 - d),
        _ => 1.0,
    }
}

/// Gain factor for the blue half-edge count.
pub fn gain_g(d: f64, j_r: f64, j_b: f64, tau: f64, rule: TieRule) -> f64 {
    let base = tau - 2.0;
    match merged_case(d, j_r, j_b, rule) {
        CaseLabel::B1 => 1.0 + (3.0 - tau) * base.powf(-d),
        CaseLabel::B2 => 1.0 / base,
        CaseLabel::R2 => 1.0 + (3.0 - tau) * base.powf(1.0 - d),
        _ => 1.0,
    }
}

/// Series `sum_{j=1..} (tau-2)^{lambda j - delta_j}` with `delta_j = {offset + lambda j}`,
/// truncated once a term drops below `tol`. Returns the sum and the number of terms.
pub fn paths_series(tau: f64, lambda: f64, offset: f64, tol: f64) -> (f64, usize) {
    let base = tau - 2.0;
    let mut sum = 0.0;
    let mut j = 1usize;
    loop {
        let delta = frac(offset + lambda * j as f64);
        let term = base.powf(lambda * j as f64 - delta);
        sum += term;
        if term < tol || j > 100_000 {
            return (sum, j);
        }
        j += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizers {
    pub cn_max: f64,
    pub cn_halfedge: f64,
    pub i_max: f64,
    pub t_b: f64,
    pub cn_paths: f64,
    pub paths_terms: usize,
    pub cn: f64,
    pub f: f64,
    pub g: f64,
}

fn prefactor(tau: f64, lambda: f64, b_n: f64) -> f64 {
    ((tau - 1.0 - (tau - 2.0).powf(b_n)) / (tau - 1.0).powi(2)).powf(1.0 / (lambda + 1.0))
}

pub fn normalizers(inp: &TheoryInputs, chain: &FractionalChain, col: &Collision) -> Normalizers {
    let (tau, lam, b_n) = (inp.tau, inp.lambda, chain.b_n);
    let base = tau - 2.0;
    let f = gain_f(col.d, col.j_r, col.j_b, tau, inp.tie_rule);
    let g = gain_g(col.d, col.j_r, col.j_b, tau, inp.tie_rule);
    let pre = prefactor(tau, lam, b_n);
    let common = (-lam + b_n) / (lam + 1.0);
    let scale = pre * base.powf(common + col.frac_tl);
    let cn_max = scale * f;
    let cn_halfedge = scale * g;
    let extra = if col.case.has_extra_jump() { 1.0 } else { 0.0 };
    let i_max = snap_floor((chain.t_r + col.t_c) / lam) - snap_floor(chain.t_rho / lam)
        + if col.case == CaseLabel::B2 { 1.0 } else { 0.0 };
    let t_b = chain.t_r + col.t_c + lam * (extra - col.frac_tl);
    let (series, paths_terms) = paths_series(tau, lam, t_b - chain.t_r, PATHS_TOL);
    let cn_paths = pre * base.powf(common + lam * (extra - col.frac_tl)) * (3.0 - tau) * series;
    Normalizers { cn_max, cn_halfedge, i_max, t_b, cn_paths, paths_terms, cn: cn_halfedge + cn_paths, f, g }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedLogs {
    pub log_b: f64,
    pub log_dmax: f64,
    pub log_m: f64,
}

/// `(log n)^{2/(lambda+1)} * C * (Yb^lambda / Yr)^{1/(lambda+1)}` for each normalizer.
pub fn predict_logs(inp: &TheoryInputs, norm: &Normalizers) -> PredictedLogs {
    let lam = inp.lambda;
    let scale = inp.log_n().powf(2.0 / (lam + 1.0)) * (inp.yb.powf(lam) / inp.yr).powf(1.0 / (lam + 1.0));
    PredictedLogs { log_b: scale * norm.cn, log_dmax: scale * norm.cn_max, log_m: scale * norm.cn_halfedge }
}

/// The coarse interval for `C_n`.
pub fn cn_bounds_simple(tau: f64, lambda: f64) -> (f64, f64) {
    let geo = 1.0 - (tau - 2.0).powf(lambda);
    let lo = ((tau - 2.0) / (tau - 1.0).powi(2) * (3.0 - tau) / geo).powf(1.0 / (lambda + 1.0));
    let hi = (tau - 2.0).powi(-2) * (4.0 - tau) / geo;
    (lo, hi)
}

/// The sharper interval for `C_n`.
pub fn cn_bounds_tight(tau: f64, lambda: f64) -> (f64, f64) {
    let geo = 1.0 - (tau - 2.0).powf(lambda);
    let lo = ((tau - 2.0) * (3.0 - tau) / ((tau - 1.0).powi(2) * geo)).powf(1.0 / (lambda + 1.0)) * (lambda + 1.0)
        / lambda.powf(lambda / (lambda + 1.0));
    let hi = (tau - 2.0).powf(-(2.0 * lambda + 1.0) / (lambda + 1.0)) / 4f64.powf(1.0 / (lambda + 1.0))
        * (1.0 + (3.0 - tau) / geo);
    (lo, hi)
}

/// Interval stated for `C_n^max`.
pub fn cn_max_bounds(tau: f64, lambda: f64) -> (f64, f64) {
    let lo = ((tau - 2.0).powf(2.0 + lambda) / (tau - 1.0).powi(2)).powf(1.0 / (lambda + 1.0));
    let hi = ((tau - 2.0) / 4.0).powf(1.0 / (lambda + 1.0));
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsFlags {
    pub cn_within_simple: bool,
    pub cn_within_tight: bool,
    pub cn_max_within: bool,
}

pub fn bounds_flags(tau: f64, lambda: f64, norm: &Normalizers) -> BoundsFlags {
    let inside = |(lo, hi): (f64, f64), x: f64| lo <= x && x <= hi;
    BoundsFlags {
        cn_within_simple: inside(cn_bounds_simple(tau, lambda), norm.cn),
        cn_within_tight: inside(cn_bounds_tight(tau, lambda), norm.cn),
        cn_max_within: inside(cn_max_bounds(tau, lambda), norm.cn_max),
    }
}

/// Everything the chain produces, serialized with flat field names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub a_n: f64,
    pub rho_dprime: f64,
    pub t_rho: f64,
    pub b_n: f64,
    #[serde(rename = "T_r")]
    pub t_r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub t_c: f64,
    pub frac_tc: f64,
    #[serde(rename = "frac_TL")]
    pub frac_tl: f64,
    pub d_tc: f64,
    pub r_star_minus: f64,
    pub b_star_minus: f64,
    #[serde(rename = "J_r")]
    pub j_r: f64,
    #[serde(rename = "J_b")]
    pub j_b: f64,
    pub case_label: CaseLabel,
    pub f_gain: f64,
    pub g_gain: f64,
    #[serde(rename = "Cn_max")]
    pub cn_max: f64,
    #[serde(rename = "Cn_halfedge")]
    pub cn_halfedge: f64,
    pub i_max: f64,
    pub t_b: f64,
    #[serde(rename = "Cn_paths")]
    pub cn_paths: f64,
    #[serde(rename = "Cn")]
    pub cn: f64,
    #[serde(rename = "predicted_logB")]
    pub predicted_log_b: f64,
    #[serde(rename = "predicted_logDmax")]
    pub predicted_log_dmax: f64,
    pub bounds_flags: BoundsFlags,
}

/// Full chain with the intermediate pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub chain: FractionalChain,
    pub collision: Collision,
    pub normalizers: Normalizers,
    pub logs: PredictedLogs,
    pub flags: BoundsFlags,
}

impl Prediction {
    pub fn report(&self) -> TheoryReport {
        let (c, k, m) = (&self.chain, &self.collision, &self.normalizers);
        TheoryReport {
            a_n: c.a_n,
            rho_dprime: c.rho_dprime,
            t_rho: c.t_rho,
            b_n: c.b_n,
            t_r: c.t_r,
            alpha: c.alpha,
            beta: c.beta,
            t_c: k.t_c,
            frac_tc: k.frac_tc,
            frac_tl: k.frac_tl,
            d_tc: k.d,
            r_star_minus: k.r_star_minus,
            b_star_minus: k.b_star_minus,
            j_r: k.j_r,
            j_b: k.j_b,
            case_label: k.raw_case,
            f_gain: m.f,
            g_gain: m.g,
            cn_max: m.cn_max,
            cn_halfedge: m.cn_halfedge,
            i_max: m.i_max,
            t_b: m.t_b,
            cn_paths: m.cn_paths,
            cn: m.cn,
            predicted_log_b: self.logs.log_b,
            predicted_log_dmax: self.logs.log_dmax,
            bounds_flags: self.flags,
        }
    }
}

pub fn predict(inp: &TheoryInputs) -> Result<Prediction> {
    let chain = fractional_chain(inp)?;
    let t_c = collision_time(inp, &chain);
    let collision = collision(chain.t_r, t_c, inp.lambda, inp.tie_rule);
    let normalizers = normalizers(inp, &chain, &collision);
    let logs = predict_logs(inp, &normalizers);
    let flags = bounds_flags(inp.tau, inp.lambda, &normalizers);
    Ok(Prediction { chain, collision, normalizers, logs, flags })
}

/// `u_{i+1} = (u_i / clogn)^{1/(tau-2)}`.
pub fn layer_step_down(u: f64, clogn: f64, tau: f64) -> f64 {
    (u / clogn).powf(1.0 / (tau - 2.0))
}

/// `u~_{l+1} = clogn * u~_l^{tau-2}`.
pub fn layer_step_up(u: f64, clogn: f64, tau: f64) -> f64 {
    clogn * u.powf(tau - 2.0)
}

/// Exponent `e_i = ((tau-2)^{-(i+1)} - 1) / (3 - tau)` of `clogn` in `u_i`.
pub fn layer_exponent(i: usize, tau: f64) -> f64 {
    ((tau - 2.0).powi(-(i as i32 + 1)) - 1.0) / (3.0 - tau)
}

/// Natural logs of the layer thresholds at index `i`, each computed both by
/// iterating its recursion and from its closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LayerValues {
    pub index: usize,
    pub e_i: f64,
    pub log_u_recursive: f64,
    pub log_u_closed: f64,
    /// `log u~_{index+1}`.
    pub log_u_tilde_recursive: f64,
    pub log_u_tilde_closed: f64,
    pub log_u_blue_recursive: f64,
    pub log_u_blue_closed: f64,
    pub log_u_hat_blue_recursive: f64,
    pub log_u_hat_blue_closed: f64,
    /// Size of the largest term in the closed forms; the natural scale for comparisons.
    pub magnitude: f64,
}

/// Layer thresholds in log space. The upper blue thresholds multiply by
/// `clogn` where the lower ones divide. The blue thresholds start from
/// `log Z = Yb (tau-2)^{-floor(t(n^{rho'})/lambda)}`.
pub fn layer_values(inp: &TheoryInputs, index: usize) -> Result<LayerValues> {
    let chain = fractional_chain(inp)?;
    let tau = inp.tau;
    let base = tau - 2.0;
    let log_n = inp.log_n();
    let lc = inp.clogn.ln();
    let i = index as i32;

    // u_i: recursion from u_0 = (n^{rho''} / clogn)^{1/(tau-2)}
    let mut lu = (chain.rho_dprime * log_n - lc) / base;
    for _ in 0..index {
        lu = (lu - lc) / base;
    }
    let e_i = layer_exponent(index, tau);
    let lu_closed = chain.rho_dprime * base.powi(-(i + 1)) * log_n - e_i * lc;

    // u~_l with l = index + 1
    let mut lt = chain.alpha * log_n + chain.beta * lc;
    for _ in 0..index {
        lt = lc + base * lt;
    }
    let p = base.powi(i);
    let lt_closed = chain.alpha * p * log_n + (chain.beta * p + (1.0 - p) / (3.0 - tau)) * lc;

    // blue thresholds
    let k = snap_floor(chain.t_rho / inp.lambda);
    let log_m = inp.yb * base.powf(-k);
    let mut lb = (log_m - lc) / base;
    let mut lh = (log_m + lc) / base;
    for _ in 0..index {
        lb = (lb - lc) / base;
        lh = (lh + lc) / base;
    }
    let q = base.powi(-(i + 1));
    let lb_closed = q * log_m + (1.0 - q) / (3.0 - tau) * lc;
    let lh_closed = q * log_m + (q - 1.0) / (3.0 - tau) * lc;

    let magnitude = [
        chain.rho_dprime * base.powi(-(i + 1)) * log_n,
        e_i * lc.abs(),
        q * log_m.abs(),
        q * lc.abs() / (3.0 - tau),
        log_n,
    ]
    .into_iter()
    .fold(1.0, f64::max);

    Ok(LayerValues {
        index,
        e_i,
        log_u_recursive: lu,
        log_u_closed: lu_closed,
        log_u_tilde_recursive: lt,
        log_u_tilde_closed: lt_closed,
        log_u_blue_recursive: lb,
        log_u_blue_closed: lb_closed,
        log_u_hat_blue_recursive: lh,
        log_u_hat_blue_closed: lh_closed,
        magnitude,
    })
}

/// Truncated first moments of the forward and the plain degree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NuKappa {
    /// `E[B 1{B < cutoff}]` under the size-biased law.
    pub nu: f64,
    /// `E[D(D-1)(D-2) 1{D < cutoff}] / E[D]`.
    pub kappa: f64,
}

/// Largest cutoff accepted by [`nu_kappa`]; the sums are evaluated term by term.
pub const NU_KAPPA_MAX_CUTOFF: f64 = 1e9;

pub fn nu_kappa(model: &DegreeModel, cutoff: f64) -> Result<NuKappa> {
    if !(cutoff > 0.0 && cutoff <= NU_KAPPA_MAX_CUTOFF) {
        return Err(Error::Domain { what: "cutoff", value: cutoff });
    }
    let top = match model.max_degree() {
        Some(m) => (m as f64).min(cutoff.ceil()) as u64,
        None => cutoff.ceil() as u64,
    };
    let mut nu = 0.0;
    let mut kappa = 0.0;
    // degree k contributes (k-1) k p_k to nu (forward degree k-1) and k(k-1)(k-2) p_k to kappa
    for k in 2..=top + 1 {
        let p = model.pmf(k);
        if p == 0.0 {
            continue;
        }
        let kf = k as f64;
        if kf - 1.0 < cutoff {
            nu += (kf - 1.0) * kf * p;
        }
        if kf < cutoff {
            kappa += kf * (kf - 1.0) * (kf - 2.0) * p;
        }
    }
    Ok(NuKappa { nu: nu / model.mean(), kappa: kappa / model.mean() })
}

/// Constants `(c, C)` with `c u^{3-tau} <= nu(u) <= C u^{3-tau}` for `u >= 2`
/// under the Pareto law; `None` for finite tables.
pub fn nu_bracket_constants(model: &DegreeModel) -> Option<(f64, f64)> {
    model.max_degree().map_or(Some(()), |_| None)?;
    let tau = model.tau();
    let s = tau - 1.0;
    let e = 2.0 - s;
    let upper = (2f64.powf(s - 1.0) + 2.0 * 1.5f64.powf(e) / e) / model.mean();
    let a = 2f64.powf(3.0 - s) / e - 2.0;
    let slope = s / e;
    let lower = if a <= 0.0 {
        slope
    } else {
        let u0 = (2.0 * a / slope).powf(1.0 / e);
        (slope / 2.0).min(2.0 * model.pmf(2) * u0.powf(-e))
    } / model.mean();
    Some((lower, upper))
}

/// Bracket and variance bound for the number of restricted paths leaving a
/// set with `m` half-edges.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathBounds {
    pub lower: f64,
    pub upper: f64,
    pub variance_upper: f64,
    pub e_kn: f64,
}

/// `c` is the free constant in the error term; `nus[j-1] = nu_j`, `kappas[0] = kappa_1`.
/// For `k = 1` the index `k - 1` is read as 1.
pub fn path_expectation_bounds(m: f64, k: usize, nus: &[f64], kappas: &[f64], l_n: f64, c: f64) -> Result<PathBounds> {
    if k == 0 || nus.len() < k || kappas.is_empty() {
        return Err(Error::InvalidParameter("need k >= 1, nu_1..nu_k and kappa_1".into()));
    }
    if !(m > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidParameter("M and c must be positive".into()));
    }
    if !(l_n > 4.0 * k as f64) {
        return Err(Error::InvalidParameter(format!("L_n = {l_n} too small for k = {k}")));
    }
    let nu_prev = nus[k.max(2) - 2];
    if nus[..k].iter().any(|&v| v <= 1.0) || nu_prev <= 1.0 {
        return Err(Error::InvalidParameter("path bounds need every nu > 1".into()));
    }
    let (nu1, kappa1) = (nus[0], kappas[0]);
    let lower = m * nus[..k].iter().product::<f64>();
    let kf = k as f64;
    let upper = lower * (1.0 + kf * kf / l_n);
    let mut prod = 1.0;
    for i in 1..=k {
        let i = i as f64;
        prod *= (l_n - 2.0 * i + 1.0) / (l_n - 2.0 * i - 2.0 * kf + 1.0);
    }
    let r = kappa1 * nu_prev / (nu1 * nu1);
    let e_kn = (prod - 1.0)
        + (1.0 + r / m) * (1.0 + r / (c * l_n)) * kf / (nu_prev - 1.0)
            * ((kf * kf * kappa1 * kappa1 * nu_prev / (nu1.powi(4) * l_n)).exp() - 1.0);
    let variance_upper = upper
        + upper
            * upper
            * (nu_prev / (nu_prev - 1.0) * kappa1 / (nu1 * nu1) * (1.0 / m + 2.0 / l_n)
                + nu_prev * nu_prev / (nu_prev * nu_prev - 1.0).powi(2) * kappa1 * kappa1 / nu1.powi(4) * 2.0
                    / (m * l_n)
                + e_kn);
    Ok(PathBounds { lower, upper, variance_upper, e_kn })
}

/// Tolerance shared by the identity checks.
pub const IDENTITY_TOL: f64 = 1e-9;

/// True when `|a - b| <= tol * max(1, |a|, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
