//! F-distribution tail probabilities and the random streams used by the
//! simulator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
// Published coefficients, kept digit for digit.
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 100_000;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
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

/// Regularized incomplete beta I_x(a, b).
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) || !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("beta parameters must be positive, got ({a}, {b})")));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("incomplete beta argument {x} outside [0, 1]")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // the fraction converges fast for x below the mean; use symmetry above it
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_cf(a, b, x) / a)
    } else {
        Ok(1.0 - front * beta_cf(b, a, 1.0 - x) / b)
    }
}

fn check_df(d1: f64, d2: f64) -> Result<()> {
    if d1 > 0.0 && d2 > 0.0 && d1.is_finite() && d2.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("F degrees of freedom must be positive, got ({d1}, {d2})")))
    }
}

/// P(F(d1, d2) > x). Fractional df are allowed.
pub fn f_upper_tail(x: f64, d1: f64, d2: f64) -> Result<f64> {
    check_df(d1, d2)?;
    if x.is_nan() {
        return Err(Error::Domain("F statistic is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    // use whichever complementary form keeps the argument away from 1
    let u = d2 / (d2 + d1 * x);
    if u > 0.5 {
        Ok(1.0 - regularized_incomplete_beta(d1 * x / (d2 + d1 * x), d1 / 2.0, d2 / 2.0)?)
    } else {
        regularized_incomplete_beta(u, d2 / 2.0, d1 / 2.0)
    }
}

/// P(F(d1, d2) ≤ x).
pub fn f_lower_tail(x: f64, d1: f64, d2: f64) -> Result<f64> {
    check_df(d1, d2)?;
    if x.is_nan() {
        return Err(Error::Domain("F statistic is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let v = d1 * x / (d2 + d1 * x);
    if v > 0.5 {
        Ok(1.0 - regularized_incomplete_beta(d2 / (d2 + d1 * x), d2 / 2.0, d1 / 2.0)?)
    } else {
        regularized_incomplete_beta(v, d1 / 2.0, d2 / 2.0)
    }
}

/// One normal draw; `sd == 0` returns `mean` without touching the stream.
pub fn sample_normal<R: Rng + ?Sized>(mean: f64, sd: f64, stream: &mut R) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    let z: f64 = stream.sample(StandardNormal);
    mean + sd * z
}

/// The random stream for replicate `index` of a run seeded with `seed`.
///
/// Streams depend only on `(seed, index)`, so replicates can be generated
/// on any thread in any order.
pub fn replicate_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        // 10! = 3628800
        assert!((ln_gamma(11.0) - 3_628_800f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.1) - 2.252_712_651_734_206).abs() < 1e-12);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, b) = 1 − (1 − x)^b and I_x(a, 1) = x^a
        for &x in &[0.01, 0.3, 0.5, 0.77, 0.999] {
            for &p in &[0.5, 1.0, 3.5, 40.0] {
                let got = regularized_incomplete_beta(x, 1.0, p).unwrap();
                assert!((got - (1.0 - (1.0 - x).powf(p))).abs() < 1e-13, "{x} {p}");
                let got = regularized_incomplete_beta(x, p, 1.0).unwrap();
                assert!((got - x.powf(p)).abs() < 1e-13, "{x} {p}");
            }
        }
    }

    #[test]
    fn f_tail_median_symmetry() {
        for d in [1.0, 2.5, 7.0, 100.0, 1e4] {
            assert!((f_upper_tail(1.0, d, d).unwrap() - 0.5).abs() < 1e-10, "{d}");
        }
    }

    #[test]
    fn f_tail_boundaries() {
        assert_eq!(f_upper_tail(0.0, 3.0, 4.0).unwrap(), 1.0);
        assert_eq!(f_upper_tail(f64::INFINITY, 3.0, 4.0).unwrap(), 0.0);
        assert!(f_upper_tail(1e12, 3.0, 4.0).unwrap() < 1e-10);
        assert!(matches!(f_upper_tail(1.0, 0.0, 4.0), Err(Error::Domain(_))));
        assert!(matches!(f_upper_tail(1.0, 3.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn f_tail_closed_form_two_df() {
        // F(2, d2) upper tail is (1 + 2x/d2)^(−d2/2)
        for d2 in [1.0f64, 3.3, 10.0, 250.0] {
            for x in [0.1, 1.0, 4.0, 35.89] {
                let exact = (1.0 + 2.0 * x / d2).powf(-d2 / 2.0);
                assert!((f_upper_tail(x, 2.0, d2).unwrap() - exact).abs() < 1e-12, "{x} {d2}");
            }
        }
    }

    #[test]
    fn sample_normal_degenerate_and_moments() {
        let mut s = replicate_stream(1, 0);
        assert_eq!(sample_normal(3.5, 0.0, &mut s), 3.5);
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_normal(0.0, 1.0, &mut s)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |seed, idx| {
            let mut s = replicate_stream(seed, idx);
            (0..8).map(|_| sample_normal(0.0, 1.0, &mut s)).collect::<Vec<_>>()
        };
        assert_eq!(draw(42, 3), draw(42, 3));
        assert_ne!(draw(42, 3), draw(42, 4));
        assert_ne!(draw(42, 3), draw(43, 3));
    }

    proptest! {
        #[test]
        fn tails_complement(x in 0.0f64..50.0, d1 in 0.5f64..500.0, d2 in 0.5f64..500.0) {
            let s = f_upper_tail(x, d1, d2).unwrap() + f_lower_tail(x, d1, d2).unwrap();
            prop_assert!((s - 1.0).abs() < 1e-10);
        }

        #[test]
        fn reciprocal_identity(x in 0.01f64..50.0, d1 in 0.5f64..500.0, d2 in 0.5f64..500.0) {
            let lhs = f_upper_tail(x, d1, d2).unwrap();
            let rhs = f_lower_tail(1.0 / x, d2, d1).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn upper_tail_nonincreasing(x in 0.0f64..20.0, dx in 0.0f64..5.0, d1 in 0.5f64..200.0, d2 in 0.5f64..200.0) {
            let p = f_upper_tail(x, d1, d2).unwrap();
            let q = f_upper_tail(x + dx, d1, d2).unwrap();
            prop_assert!(q <= p + 1e-12);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
