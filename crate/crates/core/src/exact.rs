//! Ground truth: exact pmf values, lattice enumeration and lattice-wide expectations.
//!
//! [`log_pmf`] uses the saddle-point decomposition of `ln p_N(k)` (Stirling
//! remainders plus binomial deviance terms), which is the log-gamma formula
//! with the large cancelling pieces removed analytically. It keeps full
//! relative precision for `N` in the millions. [`pmf_exact_rational`] is the
//! slow big-integer path used only to check it.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::lattice::{LatticePoint, SimplexLattice};
use crate::model::ModelParams;
use crate::par;
use crate::special::{bd0, stirling_error, LN_2PI};

/// `ln` of the multinomial probability of `counts` (all categories) under `probs` (all categories).
///
/// Zero-probability categories are allowed; a positive count in one gives `-inf`.
pub(crate) fn log_multinomial(probs: &[f64], counts: &[u64], n: u64) -> f64 {
    debug_assert_eq!(probs.len(), counts.len());
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let mut acc = stirling_error(n) + 0.5 * nf.ln() + 0.5 * LN_2PI;
    for (&p, &k) in probs.iter().zip(counts) {
        if p <= 0.0 {
            if k > 0 {
                return f64::NEG_INFINITY;
            }
            continue;
        }
        let kf = k as f64;
        acc -= bd0(kf, nf * p);
        if k > 0 {
            acc -= stirling_error(k) + 0.5 * kf.ln() + 0.5 * LN_2PI;
        }
    }
    acc
}

pub(crate) fn log_pmf_unchecked(m: &ModelParams, k: &LatticePoint) -> f64 {
    let mut probs = Vec::with_capacity(m.dim() + 1);
    probs.extend_from_slice(m.p());
    probs.push(m.q());
    let mut counts = Vec::with_capacity(m.dim() + 1);
    counts.extend_from_slice(&k.0);
    counts.push(m.n() - k.total());
    log_multinomial(&probs, &counts, m.n())
}

/// Natural log of the multinomial pmf at `k`.
pub fn log_pmf(m: &ModelParams, k: &LatticePoint) -> Result<f64> {
    m.check_point(k)?;
    Ok(log_pmf_unchecked(m, k))
}

pub fn pmf(m: &ModelParams, k: &LatticePoint) -> Result<f64> {
    log_pmf(m, k).map(f64::exp)
}

/// The textbook log-gamma route, kept as an independent cross-check of [`log_pmf`].
pub fn log_pmf_lgamma(m: &ModelParams, k: &LatticePoint) -> Result<f64> {
    m.check_point(k)?;
    let n = m.n() as f64;
    let rest = (m.n() - k.total()) as f64;
    let mut acc = ln_gamma(n + 1.0) - ln_gamma(rest + 1.0) + rest * m.q().ln();
    for (&ki, &pi) in k.0.iter().zip(m.p()) {
        let kf = ki as f64;
        acc += kf * pi.ln() - ln_gamma(kf + 1.0);
    }
    Ok(acc)
}

/// Exact-arithmetic mirror of [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct RationalParams {
    p: Vec<BigRational>,
    q: BigRational,
    n: u64,
}

impl RationalParams {
    pub fn new(p: Vec<BigRational>, n: u64) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::EmptyProbabilities);
        }
        let one = BigRational::one();
        for (index, v) in p.iter().enumerate() {
            if !v.is_positive() || *v >= one {
                return Err(Error::NonProbability {
                    index,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let sum = p.iter().fold(BigRational::zero(), |a, b| a + b);
        if sum >= one {
            return Err(Error::MassOverflow {
                sum: sum.to_f64().unwrap_or(f64::NAN),
            });
        }
        if n < 1 {
            return Err(Error::ZeroTrials);
        }
        Ok(Self { q: one - sum, p, n })
    }

    /// Builds from `(numerator, denominator)` pairs.
    pub fn from_ratios(p: &[(i64, i64)], n: u64) -> Result<Self> {
        let p = p
            .iter()
            .map(|&(a, b)| BigRational::new(BigInt::from(a), BigInt::from(b)))
            .collect();
        Self::new(p, n)
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn q(&self) -> &BigRational {
        &self.q
    }

    /// Floating-point model with the same parameters (rounded).
    pub fn to_model(&self) -> Result<ModelParams> {
        let p = self
            .p
            .iter()
            .map(|v| v.to_f64().unwrap_or(f64::NAN))
            .collect();
        ModelParams::new(p, self.n)
    }
}

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for j in 0..k {
        acc *= n - j;
        acc /= j + 1;
    }
    acc
}

/// `N! / ((N - |k|)! prod k_i!)` as a big integer.
pub fn multinomial_coefficient(n: u64, k: &[u64]) -> BigUint {
    let mut left = n;
    let mut acc = BigUint::one();
    for &ki in k {
        acc *= binomial(left, ki);
        left -= ki;
    }
    acc
}

/// The pmf as an exact rational number.
pub fn pmf_exact_rational(r: &RationalParams, k: &LatticePoint) -> Result<BigRational> {
    if k.dim() != r.dim() {
        return Err(Error::DimensionMismatch {
            expected: r.dim(),
            actual: k.dim(),
        });
    }
    let total: u64 = k.total();
    if total > r.n {
        return Err(Error::OutOfSimplex {
            point: k.0.clone(),
            n: r.n,
        });
    }
    let coef = BigInt::from(multinomial_coefficient(r.n, &k.0));
    let mut acc = BigRational::from_integer(coef);
    for (pi, &ki) in r.p.iter().zip(&k.0) {
        acc *= num_traits::pow(pi.clone(), ki as usize);
    }
    acc *= num_traits::pow(r.q.clone(), (r.n - total) as usize);
    Ok(acc)
}

/// Every point of the width-`n` simplex in `d` dimensions, colexicographic order.
pub fn enumerate_simplex(d: usize, n: u64) -> Result<SimplexLattice> {
    SimplexLattice::new(d, n)
}

/// `E[f(K)]` for `K ~ Multinomial(N, p)`, summed over the whole lattice with
/// compensated, chunk-deterministic reduction.
pub fn expectation<F>(m: &ModelParams, f: F) -> Result<f64>
where
    F: Fn(&LatticePoint) -> f64 + Sync + Send,
{
    let lattice = enumerate_simplex(m.dim(), m.n())?;
    Ok(par::sum_chunks(lattice.len(), |range, acc| {
        for k in lattice.iter_range(range) {
            let w = log_pmf_unchecked(m, &k).exp();
            if w > 0.0 {
                acc.add(w * f(&k));
            }
        }
    }))
}

/// `sum_k p_N(k) prod_i (k_i - N p_i)^{a_i}` by enumeration.
pub fn central_moment_exact(m: &ModelParams, a: &[u32]) -> Result<f64> {
    if a.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            actual: a.len(),
        });
    }
    let n = m.n() as f64;
    let means: Vec<f64> = m.p().iter().map(|p| n * p).collect();
    expectation(m, |k| {
        k.0.iter()
            .zip(&means)
            .zip(a)
            .map(|((&ki, mu), &ai)| (ki as f64 - mu).powi(ai as i32))
            .product()
    })
}

/// `E[prod_i K_i^{(a_i)}] = N^{(|a|)} prod_i p_i^{a_i}` with `x^{(r)}` the falling factorial.
pub fn factorial_moment(m: &ModelParams, a: &[u32]) -> Result<f64> {
    if a.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            actual: a.len(),
        });
    }
    let order: u64 = a.iter().map(|&x| x as u64).sum();
    if order > m.n() {
        return Ok(0.0);
    }
    Ok(falling_factorial(m.n(), order)
        * a.iter()
            .zip(m.p())
            .map(|(&ai, pi)| pi.powi(ai as i32))
            .product::<f64>())
}

/// `x (x - 1) ... (x - r + 1)`.
pub fn falling_factorial(x: u64, r: u64) -> f64 {
    if r > x {
        return 0.0;
    }
    (0..r).map(|j| (x - j) as f64).product()
}
