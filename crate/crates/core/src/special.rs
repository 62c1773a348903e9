//! Scalar special functions used by the pmf and Gaussian evaluators.

use libm::erfc;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Standard normal cdf, accurate in both tails.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal survival function `1 - norm_cdf(x)`.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `P(a <= Z <= b)` for a standard normal `Z`, evaluated on the side that avoids cancellation.
pub fn norm_interval(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if a >= 0.0 {
        norm_sf(a) - norm_sf(b)
    } else if b <= 0.0 {
        norm_cdf(b) - norm_cdf(a)
    } else {
        1.0 - norm_cdf(a) - norm_sf(b)
    }
}

/// Stirling-series error `ln n! - [(n + 1/2) ln n - n + ln(2 pi)/2]` for integer `n >= 1`.
pub fn stirling_error(n: u64) -> f64 {
    debug_assert!(n >= 1);
    if n <= 15 {
        let mut fact = 1.0f64;
        for j in 2..=n {
            fact *= j as f64;
        }
        let x = n as f64;
        return fact.ln() - (x + 0.5) * x.ln() + x - 0.5 * LN_2PI;
    }
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let x = n as f64;
    let x2 = x * x;
    if n > 500 {
        (S0 - S1 / x2) / x
    } else if n > 80 {
        (S0 - (S1 - S2 / x2) / x2) / x
    } else if n > 35 {
        (S0 - (S1 - (S2 - S3 / x2) / x2) / x2) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / x2) / x2) / x2) / x2) / x
    }
}

/// Deviance term `x ln(x / m) + m - x`, evaluated without cancellation when `x ~ m`.
pub fn bd0(x: f64, m: f64) -> f64 {
    if x == 0.0 {
        return m;
    }
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::ln_gamma;

    #[test]
    fn stirling_error_matches_log_gamma() {
        for n in [1u64, 2, 5, 15, 16, 35, 36, 80, 81, 500, 501, 10_000] {
            let x = n as f64;
            let expected = ln_gamma(x + 1.0) - (x + 0.5) * x.ln() + x - 0.5 * LN_2PI;
            let got = stirling_error(n);
            // ln_gamma's own absolute error grows with ln n!
            let tol = 1e-13 * (1.0 + ln_gamma(x + 1.0).abs());
            assert!((got - expected).abs() < tol, "n={n}: {got} vs {expected}");
        }
        assert!((stirling_error(1) - 0.081_061_466_795_327_26).abs() < 1e-15);
    }

    #[test]
    fn bd0_matches_direct_formula_away_from_diagonal() {
        for (x, m) in [(3.0, 10.0), (50.0, 20.0), (1.0, 0.5), (100.0, 100.5)] {
            let direct = x * f64::ln(x / m) + m - x;
            assert!((bd0(x, m) - direct).abs() < 1e-12 * (1.0 + direct.abs()));
        }
        assert_eq!(bd0(0.0, 4.2), 4.2);
        assert_eq!(bd0(7.0, 7.0), 0.0);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((norm_cdf(0.1) - 0.539_827_837_277_029).abs() < 1e-14);
        let sf = norm_sf(10.0);
        assert!(
            (sf / 7.619_853_024_160_47e-24 - 1.0).abs() < 1e-13,
            "{sf:e}"
        );
        let mass = norm_interval(-1.0, 1.0);
        assert!((mass - 0.682_689_492_137_085_9).abs() < 1e-15, "{mass}");
    }
}
