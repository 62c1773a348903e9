//! Bernstein smoothing on the simplex, the limiting constants of its variance
//! terms, and the power-divergence family of goodness-of-fit statistics.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exact::{log_multinomial, log_pmf_unchecked};
use crate::lattice::{LatticePoint, SimplexLattice};
use crate::model::ModelParams;
use crate::par;
use crate::special::bd0;
use crate::sum::NeumaierSum;

/// Slack allowed on the simplex constraints of real points.
const SIMPLEX_SLACK: f64 = 1e-12;

/// `|lambda|` (or `|lambda + 1|`) below which the limit formulas replace the general one.
pub const LAMBDA_LIMIT_BAND: f64 = 1e-7;

fn check_unit_simplex(x: &[f64]) -> Result<()> {
    let sum: f64 = x.iter().sum();
    if x.iter().any(|v| !v.is_finite() || *v < 0.0) || sum > 1.0 + SIMPLEX_SLACK {
        return Err(Error::OutsideUnitSimplex { point: x.to_vec() });
    }
    Ok(())
}

/// Observations on the closed simplex `{x >= 0 : sum x <= 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    d: usize,
    points: Vec<Vec<f64>>,
}

impl Sample {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let d = points.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::InvalidArgument(
                "sample must be non-empty with d >= 1".into(),
            ));
        }
        for x in &points {
            if x.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: x.len(),
                });
            }
            check_unit_simplex(x)?;
        }
        Ok(Self { d, points })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Fraction of observations `<= t` in every coordinate.
    pub fn ecdf(&self, t: &[f64]) -> f64 {
        let hits = self
            .points
            .iter()
            .filter(|x| x.iter().zip(t).all(|(a, b)| a <= b))
            .count();
        hits as f64 / self.len() as f64
    }
}

/// Multinomial weight of `k` (width `n`) with cell probabilities `x`, remainder last.
fn bernstein_weight(x: &[f64], k: &LatticePoint, n: u64) -> f64 {
    let mut probs = x.to_vec();
    probs.push((1.0 - x.iter().sum::<f64>()).max(0.0));
    let mut counts = k.0.clone();
    counts.push(n - k.total());
    log_multinomial(&probs, &counts, n).exp()
}

fn check_query(s: &Sample, x: &[f64]) -> Result<()> {
    if x.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            actual: x.len(),
        });
    }
    check_unit_simplex(x)
}

/// `sum_k F_n(k / N) p_N(k; x)` with `F_n` the empirical cdf.
pub fn cdf_estimator(s: &Sample, n: u64, x: &[f64]) -> Result<f64> {
    check_query(s, x)?;
    if n == 0 {
        return Err(Error::ZeroTrials);
    }
    let lat = SimplexLattice::new(s.dim(), n)?;
    let nf = n as f64;
    Ok(par::sum_chunks(lat.len(), |r, acc| {
        for k in lat.iter_range(r) {
            let t: Vec<f64> = k.0.iter().map(|&v| v as f64 / nf).collect();
            let f = s.ecdf(&t);
            if f > 0.0 {
                acc.add(f * bernstein_weight(x, &k, n));
            }
        }
    }))
}

/// `sum_k (N-1+d)!/(N-1)! mu_n(prod (k_i/N, (k_i+1)/N]) p_{N-1}(k; x)`.
pub fn density_estimator(s: &Sample, n: u64, x: &[f64]) -> Result<f64> {
    check_query(s, x)?;
    if n < 2 {
        return Err(Error::InvalidArgument(
            "density estimator needs N >= 2".into(),
        ));
    }
    let d = s.dim();
    SimplexLattice::new(d, n - 1)?;
    let nf = n as f64;
    // bin of an observation: k_i with k_i / N < x_i <= (k_i + 1) / N
    let mut bins: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    'obs: for p in s.points() {
        let mut k = Vec::with_capacity(d);
        for &v in p {
            let b = (v * nf).ceil() - 1.0;
            if b < 0.0 {
                continue 'obs;
            }
            k.push(b as u64);
        }
        if k.iter().sum::<u64>() < n {
            *bins.entry(k).or_default() += 1;
        }
    }
    let scale: f64 = (1..=d as u64).map(|j| (n - 1 + j) as f64).product();
    let total = s.len() as f64;
    let acc: NeumaierSum = bins
        .into_iter()
        .map(|(k, c)| c as f64 / total * bernstein_weight(x, &LatticePoint(k), n - 1))
        .collect();
    Ok(scale * acc.value())
}

/// A lattice sum at finite `N` next to the value it tends to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitPair {
    pub finite_n: f64,
    pub limit: f64,
}

impl LimitPair {
    pub fn relative_gap(&self) -> f64 {
        (self.finite_n / self.limit - 1.0).abs()
    }
}

fn power_sum(m: &ModelParams, power: i32) -> Result<f64> {
    let w = m.with_trials(m.n() - 1)?;
    let lat = SimplexLattice::new(w.dim(), w.n())?;
    Ok(par::sum_chunks(lat.len(), |r, acc| {
        for k in lat.iter_range(r) {
            acc.add((power as f64 * log_pmf_unchecked(&w, &k)).exp());
        }
    }))
}

fn det(m: &ModelParams) -> f64 {
    m.p().iter().product::<f64>() * m.q()
}

fn need_two_trials(m: &ModelParams) -> Result<()> {
    if m.n() < 2 {
        return Err(Error::InvalidArgument("limit constants need N >= 2".into()));
    }
    Ok(())
}

/// `(N-1)^{d/2} sum_k p_{N-1}(k)^2` and `[(4 pi)^d prod p q]^{-1/2}`.
pub fn limit_constant_sum_sq(m: &ModelParams) -> Result<LimitPair> {
    need_two_trials(m)?;
    let d = m.dim() as i32;
    Ok(LimitPair {
        finite_n: ((m.n() - 1) as f64).powf(d as f64 / 2.0) * power_sum(m, 2)?,
        limit: ((4.0 * PI).powi(d) * det(m)).powf(-0.5),
    })
}

/// `(N-1)^d sum_k p_{N-1}(k)^3` and `[(2 sqrt(3) pi)^d prod p q]^{-1}`.
pub fn limit_constant_sum_cube(m: &ModelParams) -> Result<LimitPair> {
    need_two_trials(m)?;
    let d = m.dim() as i32;
    Ok(LimitPair {
        finite_n: ((m.n() - 1) as f64).powi(d) * power_sum(m, 3)?,
        limit: 1.0 / ((2.0 * 3f64.sqrt() * PI).powi(d) * det(m)),
    })
}

/// Binomial(N, p) probabilities for `0..=N`.
pub(crate) fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    (0..=n)
        .map(|a| log_multinomial(&[p, 1.0 - p], &[a, n - a], n).exp())
        .collect()
}

/// `sqrt(N) sum_{k,l} ((k_i min l_i)/N - p_i) p_N(k) p_N(l)` and `-sqrt(p_i (1 - p_i) / pi)`.
///
/// Only the `i`-th marginals matter, so with `X, Y` iid Binomial(N, p_i) the
/// double sum is `sqrt(N) (E[min(X, Y)] / N - p_i)` and
/// `E[min(X, Y)] = sum_{t >= 1} P(X >= t)^2`.
pub fn limit_constant_min_cross(m: &ModelParams, i: usize) -> Result<LimitPair> {
    if i >= m.dim() {
        return Err(Error::Index(format!(
            "index {} out of range for d = {}",
            i + 1,
            m.dim()
        )));
    }
    let n = m.n();
    let p = m.p()[i];
    let pmf = binomial_pmf(n, p);
    let mut tail = NeumaierSum::new();
    let mut e_min = NeumaierSum::new();
    // P(X >= t) accumulated from the top to keep the small tail probabilities exact
    for t in (1..=n as usize).rev() {
        tail.add(pmf[t]);
        let s = tail.value();
        e_min.add(s * s);
    }
    let nf = n as f64;
    Ok(LimitPair {
        finite_n: nf.sqrt() * (e_min.value() / nf - p),
        limit: -(p * (1.0 - p) / PI).sqrt(),
    })
}

/// Power-divergence statistic `T_lambda` of the `d + 1` counts `k_full` against `N p`.
///
/// Evaluated as `2 sum E_i phi(K_i / E_i)` with the convex
/// `phi(x) = (x^{lambda+1} - 1 - (lambda+1)(x - 1)) / (lambda (lambda + 1))`,
/// which has the same sum because `sum (K_i - E_i) = 0`. Each term is
/// nonnegative. Close to `lambda = 0` and `lambda = -1` the two limits
/// (likelihood ratio and its dual) are used.
pub fn power_divergence(m: &ModelParams, k_full: &[u64], lambda: f64) -> Result<f64> {
    let d = m.dim();
    if k_full.len() != d + 1 {
        return Err(Error::Counts(format!(
            "expected {} counts (including the remainder), got {}",
            d + 1,
            k_full.len()
        )));
    }
    let total: u64 = k_full.iter().sum();
    if total != m.n() {
        return Err(Error::Counts(format!(
            "counts sum to {total}, expected N = {}",
            m.n()
        )));
    }
    if !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "lambda = {lambda} is not finite"
        )));
    }
    let nf = m.n() as f64;
    let mut acc = NeumaierSum::new();
    for (&k, p) in k_full.iter().zip(m.full_probabilities()) {
        let e = nf * p;
        let kf = k as f64;
        let term = if lambda.abs() < LAMBDA_LIMIT_BAND {
            bd0(kf, e)
        } else if (lambda + 1.0).abs() < LAMBDA_LIMIT_BAND {
            if k == 0 {
                f64::INFINITY
            } else {
                bd0(e, kf)
            }
        } else {
            let a = lambda + 1.0;
            let u = (kf - e) / e;
            let t = a * u.ln_1p();
            e * (t.exp_m1() - a * u) / (lambda * a)
        };
        acc.add(term.max(0.0));
    }
    Ok(2.0 * acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn model(p: &[f64], n: u64) -> ModelParams {
        ModelParams::new(p.to_vec(), n).unwrap()
    }

    #[test]
    fn sample_validation() {
        assert!(Sample::new(vec![]).is_err());
        assert!(Sample::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(Sample::new(vec![vec![-0.1]]).is_err());
        assert!(Sample::new(vec![vec![0.1], vec![0.1, 0.2]]).is_err());
        assert!(Sample::new(vec![vec![0.0, 1.0]]).is_ok());
    }

    #[test]
    fn cdf_examples() {
        let s = Sample::new(vec![vec![0.5]]).unwrap();
        assert_relative_eq!(
            cdf_estimator(&s, 4, &[0.5]).unwrap(),
            11.0 / 16.0,
            max_relative = 1e-14
        );
        let origin = Sample::new(vec![vec![0.0, 0.0]; 3]).unwrap();
        for x in [[0.2, 0.3], [0.0, 0.0], [0.5, 0.5]] {
            assert_abs_diff_eq!(cdf_estimator(&origin, 7, &x).unwrap(), 1.0, epsilon = 1e-13);
        }
        assert!(cdf_estimator(&s, 4, &[1.5]).is_err());
    }

    #[test]
    fn cdf_vanishes_below_the_data() {
        let s = Sample::new(vec![vec![0.8], vec![0.9]]).unwrap();
        let vals: Vec<f64> = [10u64, 40, 160]
            .iter()
            .map(|&n| cdf_estimator(&s, n, &[0.3]).unwrap())
            .collect();
        assert!(vals[0] > vals[1] && vals[1] > vals[2]);
        assert!(vals[2] < 1e-20);
    }

    #[test]
    fn cdf_is_monotone() {
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|j| {
                let a = (j as f64 * 0.618).fract() * 0.6;
                let b = (j as f64 * 0.414).fract() * 0.4;
                vec![a, b]
            })
            .collect();
        let s = Sample::new(pts).unwrap();
        for a in 0..5 {
            let mut prev = -1.0;
            for b in 0..5 {
                let x = [0.1 * a as f64, 0.1 * b as f64];
                let v = cdf_estimator(&s, 12, &x).unwrap();
                assert!(v >= prev - 1e-14);
                prev = v;
            }
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let s = Sample::new((1..=400).map(|j| vec![j as f64 / 401.0]).collect()).unwrap();
        let rule = crate::quadrature::Rule::new(12).unwrap();
        let total = rule.integrate(0.0, 1.0, 20, |x| density_estimator(&s, 20, &[x]).unwrap());
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
        let mid = density_estimator(&s, 20, &[0.5]).unwrap();
        assert_abs_diff_eq!(mid, 1.0, epsilon = 0.05);
        let empty = Sample::new(vec![vec![0.0]]).unwrap();
        assert_eq!(density_estimator(&empty, 20, &[0.3]).unwrap(), 0.0);
    }

    #[test]
    fn limit_constant_values() {
        let m = model(&[0.5], 400);
        let sq = limit_constant_sum_sq(&m).unwrap();
        assert_abs_diff_eq!(sq.limit, 0.564190, epsilon = 1e-6);
        assert!(sq.relative_gap() < 0.02);
        let cube = limit_constant_sum_cube(&m).unwrap();
        assert_abs_diff_eq!(cube.limit, 0.36755, epsilon = 1e-5);
        assert!(cube.relative_gap() < 0.03);
        let m = model(&[0.5], 100);
        let cross = limit_constant_min_cross(&m, 0).unwrap();
        assert_abs_diff_eq!(cross.limit, -0.28209, epsilon = 1e-5);
        assert!(cross.relative_gap() < 0.05);
        let two = limit_constant_sum_sq(&model(&[0.3, 0.4], 30)).unwrap();
        assert_abs_diff_eq!(two.limit, 0.419410, epsilon = 1e-6);
        assert!(limit_constant_min_cross(&m, 1).is_err());
    }

    #[test]
    fn min_cross_matches_naive_double_sum() {
        for (p, n) in [(vec![0.3, 0.2], 12u64), (vec![0.45], 25)] {
            let m = model(&p, n);
            let lat = SimplexLattice::new(m.dim(), n).unwrap();
            let pts: Vec<(LatticePoint, f64)> = lat
                .iter()
                .map(|k| {
                    let v = log_pmf_unchecked(&m, &k).exp();
                    (k, v)
                })
                .collect();
            let nf = n as f64;
            let mut acc = NeumaierSum::new();
            for (k, pk) in &pts {
                for (l, pl) in &pts {
                    let mn = k.0[0].min(l.0[0]) as f64;
                    acc.add((mn / nf - p[0]) * pk * pl);
                }
            }
            let naive = nf.sqrt() * acc.value();
            let fast = limit_constant_min_cross(&m, 0).unwrap().finite_n;
            assert_abs_diff_eq!(naive, fast, epsilon = 1e-12);
        }
    }

    #[test]
    fn power_divergence_special_cases() {
        let m = model(&[0.3], 10);
        let pearson = power_divergence(&m, &[5, 5], 1.0).unwrap();
        assert_relative_eq!(pearson, 4.0 / 3.0 + 4.0 / 7.0, max_relative = 1e-13);
        for lambda in [-2.0, -1.0, -0.5, 0.0, 0.7, 3.0] {
            assert_abs_diff_eq!(
                power_divergence(&m, &[3, 7], lambda).unwrap(),
                0.0,
                epsilon = 1e-13
            );
        }
        let lr = power_divergence(&m, &[5, 5], 0.0).unwrap();
        let expected = 2.0 * (5.0 * (5.0f64 / 3.0).ln() + 5.0 * (5.0f64 / 7.0).ln());
        assert_relative_eq!(lr, expected, max_relative = 1e-13);
        let near = power_divergence(&m, &[5, 5], 1e-9).unwrap();
        assert_relative_eq!(near, lr, max_relative = 1e-6);
        let ft = power_divergence(&m, &[5, 5], -0.5).unwrap();
        let ft_expected =
            4.0 * ((5f64.sqrt() - 3f64.sqrt()).powi(2) + (5f64.sqrt() - 7f64.sqrt()).powi(2));
        assert_relative_eq!(ft, ft_expected, max_relative = 1e-12);
    }

    #[test]
    fn power_divergence_zero_counts_and_errors() {
        let m = model(&[0.3, 0.2], 10);
        assert!(power_divergence(&m, &[0, 4, 6], 0.5).unwrap().is_finite());
        assert!(power_divergence(&m, &[0, 4, 6], 0.0).unwrap().is_finite());
        assert_eq!(
            power_divergence(&m, &[0, 4, 6], -1.0).unwrap(),
            f64::INFINITY
        );
        assert_eq!(
            power_divergence(&m, &[0, 4, 6], -1.5).unwrap(),
            f64::INFINITY
        );
        assert!(matches!(
            power_divergence(&m, &[4, 6], 1.0),
            Err(Error::Counts(_))
        ));
        assert!(matches!(
            power_divergence(&m, &[4, 6, 1], 1.0),
            Err(Error::Counts(_))
        ));
    }

    #[test]
    fn power_divergence_is_continuous_at_the_limits() {
        let m = model(&[0.25, 0.35], 40);
        let k = [14, 11, 15];
        for center in [0.0, -1.0] {
            let c = power_divergence(&m, &k, center).unwrap();
            for off in [-1e-6, 1e-6] {
                let v = power_divergence(&m, &k, center + off).unwrap();
                assert!((v - c).abs() <= 1e-5, "lambda {center}{off:+}: {v} vs {c}");
            }
        }
    }
}
