//! Small numerical helpers shared by the modules.

/// Tolerance used when a computed quantity is meant to land on an integer
/// or on a case boundary.
pub const SNAP_EPS: f64 = 1e-9;

const BERNOULLI_2J: [f64; 7] =
    [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0];

/// Hurwitz zeta `sum_{k>=0} (a+k)^-s` for `s > 1`, `a > 0`.
///
/// Direct summation until the shifted argument reaches 20, then an
/// Euler-Maclaurin tail with seven Bernoulli corrections.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    debug_assert!(s > 1.0 && a > 0.0);
    let mut x = a;
    let mut head = 0.0;
    while x < 20.0 {
        head += x.powf(-s);
        x += 1.0;
    }
    let mut tail = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // rising factorial s(s+1)...(s+2j-2) / (2j)!, times x^{-s-2j+1}
    let mut coef = s / 2.0;
    let mut xp = x.powf(-s - 1.0);
    let x2 = 1.0 / (x * x);
    for (j, b) in BERNOULLI_2J.iter().enumerate() {
        tail += b * coef * xp;
        let j = j as f64 + 1.0;
        coef *= (s + 2.0 * j - 1.0) * (s + 2.0 * j) / ((2.0 * j + 1.0) * (2.0 * j + 2.0));
        xp *= x2;
    }
    head + tail
}

/// Fractional part, treating values within `SNAP_EPS` of an integer as that
/// integer.
pub fn frac(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= SNAP_EPS * x.abs().max(1.0) {
        0.0
    } else {
        x - x.floor()
    }
}

/// Floor consistent with [`frac`]: `snap_floor(x) + frac(x) == x` up to snapping.
pub fn snap_floor(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= SNAP_EPS * x.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

/// Three-way comparison with the snapping tolerance.
pub fn approx_cmp(a: f64, b: f64) -> std::cmp::Ordering {
    if (a - b).abs() <= SNAP_EPS * a.abs().max(b.abs()).max(1.0) {
        std::cmp::Ordering::Equal
    } else if a < b {
        std::cmp::Ordering::Less
    } else {
        std::cmp::Ordering::Greater
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level `alpha`.
pub fn ks_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    (-(alpha / 2.0).ln() / 2.0).sqrt() * ((n + m) / (n * m)).sqrt()
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// SplitMix64 step; used to derive independent per-task seeds from a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_critical_at_one_percent() {
        // c(0.01) = 1.6276
        let c = ks_critical_value(10_000, 10_000, 0.01);
        assert!((c - 1.6276 * (2e-4f64).sqrt()).abs() < 1e-4, "{c}");
    }

    #[test]
    fn zeta_matches_known_values() {
        // zeta(2) = pi^2/6, zeta(3/2) = 2.612375348685488
        assert!((hurwitz_zeta(2.0, 1.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
        assert!((hurwitz_zeta(1.5, 1.0) - 2.612_375_348_685_488).abs() < 1e-12);
        assert!((hurwitz_zeta(4.0, 1.0) - std::f64::consts::PI.powi(4) / 90.0).abs() < 1e-14);
    }

    #[test]
    fn zeta_shift_identity() {
        for &s in &[1.1, 1.5, 1.9] {
            for &a in &[1.0, 2.5, 37.0, 1e6] {
                let lhs = hurwitz_zeta(s, a);
                let rhs = a.powf(-s) + hurwitz_zeta(s, a + 1.0);
                assert!((lhs - rhs).abs() < 1e-12 * lhs.max(1.0), "s={s} a={a}");
            }
        }
    }

    #[test]
    fn frac_snaps_near_integers() {
        assert_eq!(frac(6.000000000001), 0.0);
        assert_eq!(frac(5.9999999999999), 0.0);
        assert!((frac(2.25) - 0.25).abs() < 1e-15);
        assert!((frac(-0.25) - 0.75).abs() < 1e-15);
        assert_eq!(snap_floor(5.9999999999999), 6.0);
    }

    #[test]
    fn ks_of_identical_samples_is_zero() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_statistic(&a, &a), 0.0);
        assert_eq!(ks_statistic(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
    }

    #[test]
    fn slope_of_line() {
        let x = [1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0];
        assert!((ls_slope(&x, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(s.len(), 1000);
    }
}
