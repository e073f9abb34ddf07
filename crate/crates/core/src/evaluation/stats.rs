//! Paired t-test and Bonferroni correction.
//!
//! The Student t tail is evaluated through the regularized incomplete beta
//! function, `P(|T| > t) = I_x(df/2, 1/2)` with `x = df / (df + t^2)`,
//! using a Lanczos log-gamma and a modified Lentz continued fraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the series in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = f64::from(m);
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` for `a, b > 0`, `x` in `[0, 1]`.
pub fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Two-tailed tail probability of Student's t with `df` degrees of freedom.
pub fn t_two_tailed(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    inc_beta(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Student t cumulative distribution function.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * t_two_tailed(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub mean_diff: f64,
    pub sd_diff: f64,
    pub t: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Two-tailed paired t-test of `a - b`.
///
/// Zero-variance differences: a zero mean gives `t = 0, p = 1`; a nonzero
/// mean gives an infinite `t` and `p = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTTest> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidInput("paired t-test needs at least 2 pairs".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    let df = n - 1;
    let (t, p) = if sd == 0.0 {
        if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (mean.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = mean / (sd / nf.sqrt());
        (t, t_two_tailed(t, df as f64))
    };
    Ok(PairedTTest {
        mean_diff: mean,
        sd_diff: sd,
        t,
        df,
        p_value: p,
    })
}

/// `min(1, p * m)`.
pub fn bonferroni(p: f64, m: usize) -> Result<f64> {
    if m < 1 {
        return Err(Error::InvalidInput("Bonferroni family size must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("p-value {p} outside [0, 1]")));
    }
    Ok((p * m as f64).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn oracle_case() {
        let a = [2.0, 3.0, 4.0, 5.0];
        let b = [1.0, 1.0, 1.0, 1.0];
        let r = paired_t_test(&a, &b).unwrap();
        assert!((r.mean_diff - 2.5).abs() < 1e-12);
        assert!((r.sd_diff - 1.2909944487358056).abs() < 1e-12);
        assert!((r.t - 3.872983346207417).abs() < 1e-12);
        assert_eq!(r.df, 3);
        assert!((r.p_value - 0.030466291662170977).abs() < 1e-10);
    }

    #[test]
    fn second_oracle_case() {
        let a = [0.41, 0.52, 0.33, 0.61, 0.47, 0.29];
        let b = [0.38, 0.49, 0.35, 0.50, 0.44, 0.30];
        let r = paired_t_test(&a, &b).unwrap();
        assert!((r.t - 1.5156837721956709).abs() < 1e-10);
        assert!((r.p_value - 0.19003570255061436).abs() < 1e-10);
        assert_eq!(r.df, 5);
    }

    #[test]
    fn degenerate_and_invalid_inputs() {
        let r = paired_t_test(&[0.3, 0.4], &[0.3, 0.4]).unwrap();
        assert_eq!((r.t, r.p_value), (0.0, 1.0));
        let r = paired_t_test(&[1.0, 2.0], &[0.0, 1.0]).unwrap();
        assert_eq!(r.p_value, 0.0);
        assert!(r.t.is_infinite() && r.t > 0.0);
        assert!(paired_t_test(&[1.0], &[1.0]).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn bonferroni_examples() {
        assert!((bonferroni(0.01, 4).unwrap() - 0.04).abs() < 1e-15);
        assert_eq!(bonferroni(0.5, 4).unwrap(), 1.0);
        assert_eq!(bonferroni(0.123, 1).unwrap(), 0.123);
        assert!(bonferroni(0.1, 0).is_err());
        assert!(bonferroni(1.5, 1).is_err());
    }

    #[test]
    fn t_cdf_symmetry() {
        for t in [-3.0, -0.5, 0.0, 1.2, 4.0] {
            assert!((t_cdf(t, 7.0) + t_cdf(-t, 7.0) - 1.0).abs() < 1e-14);
        }
        assert_eq!(t_cdf(0.0, 3.0), 0.5);
    }

    proptest! {
        #[test]
        fn swapping_samples_negates_t(
            pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..40)
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let ab = paired_t_test(&a, &b).unwrap();
            let ba = paired_t_test(&b, &a).unwrap();
            prop_assert_eq!(ab.t, -ba.t);
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
        }

        #[test]
        fn bonferroni_monotone_and_clamped(p in 0.0f64..=1.0, q in 0.0f64..=1.0, m in 1usize..50) {
            let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
            prop_assert!(bonferroni(lo, m).unwrap() <= bonferroni(hi, m).unwrap());
            prop_assert!(bonferroni(p, m).unwrap() <= bonferroni(p, m + 1).unwrap());
            let adj = bonferroni(p, m).unwrap();
            prop_assert!(adj >= p && adj <= 1.0);
        }
    }
}
