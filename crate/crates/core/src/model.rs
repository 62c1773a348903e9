//! Multinomial parameters, the limiting covariance and normalized deviations.
//!
//! A model has `d` free categories with probabilities `p_1..p_d` and a
//! remainder category with mass `q = 1 - sum(p)`. The remainder is always
//! derived from `p`, never supplied by a caller.

use crate::error::{Error, Result};
use crate::lattice::LatticePoint;
use crate::special::LN_2PI;
use crate::sum::{compensated_sum, NeumaierSum};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    p: Vec<f64>,
    q: f64,
    n: u64,
}

impl ModelParams {
    pub fn new(p: Vec<f64>, n: u64) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::EmptyProbabilities);
        }
        for (index, &value) in p.iter().enumerate() {
            if !(value.is_finite() && value > 0.0 && value < 1.0) {
                return Err(Error::NonProbability { index, value });
            }
        }
        let sum = compensated_sum(p.iter().copied());
        if sum >= 1.0 {
            return Err(Error::MassOverflow { sum });
        }
        if n < 1 {
            return Err(Error::ZeroTrials);
        }
        let q = 1.0 - sum;
        Ok(Self { p, q, n })
    }

    /// Same probabilities, different trial count.
    pub fn with_trials(&self, n: u64) -> Result<Self> {
        if n < 1 {
            return Err(Error::ZeroTrials);
        }
        Ok(Self {
            p: self.p.clone(),
            q: self.q,
            n,
        })
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// All `d + 1` category probabilities, remainder last.
    pub fn full_probabilities(&self) -> Vec<f64> {
        let mut v = self.p.clone();
        v.push(self.q);
        v
    }

    pub fn min_probability(&self) -> f64 {
        self.p.iter().copied().fold(self.q, f64::min)
    }

    pub fn max_probability(&self) -> f64 {
        self.p.iter().copied().fold(self.q, f64::max)
    }

    /// Checks dimension and `sum(k) <= n`.
    pub fn check_point(&self, k: &LatticePoint) -> Result<()> {
        if k.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: k.dim(),
            });
        }
        let total = k.0.iter().try_fold(0u64, |acc, &x| acc.checked_add(x));
        match total {
            Some(t) if t <= self.n => Ok(()),
            _ => Err(Error::OutOfSimplex {
                point: k.0.clone(),
                n: self.n,
            }),
        }
    }
}

/// Covariance `diag(p) - p p^T` of one multinomial trial, with its closed-form inverse and determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSpec {
    d: usize,
    p: Vec<f64>,
    q: f64,
    sigma: Vec<f64>,
    sigma_inv: Vec<f64>,
    det: f64,
}

impl CovarianceSpec {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * self.d + j]
    }

    pub fn sigma_inv(&self, i: usize, j: usize) -> f64 {
        self.sigma_inv[i * self.d + j]
    }

    /// Row-major `d x d` covariance.
    pub fn sigma_matrix(&self) -> Vec<Vec<f64>> {
        self.sigma.chunks(self.d).map(<[f64]>::to_vec).collect()
    }

    pub fn sigma_inv_matrix(&self) -> Vec<Vec<f64>> {
        self.sigma_inv.chunks(self.d).map(<[f64]>::to_vec).collect()
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// `x^T Sigma^{-1} x = sum x_i^2 / p_i + (sum x_i)^2 / q`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        let mut acc = NeumaierSum::new();
        let mut s = NeumaierSum::new();
        for (xi, pi) in x.iter().zip(&self.p) {
            acc.add(xi * xi / pi);
            s.add(*xi);
        }
        let s = s.value();
        acc.add(s * s / self.q);
        acc.value()
    }

    /// `(Sigma^{-1} x)_i = x_i / p_i + (sum x) / q`.
    pub fn precision_times(&self, x: &[f64]) -> Vec<f64> {
        let s = compensated_sum(x.iter().copied()) / self.q;
        x.iter().zip(&self.p).map(|(xi, pi)| xi / pi + s).collect()
    }

    /// `ln(((2 pi)^d det)^{-1/2})`.
    pub fn log_normalizer(&self) -> f64 {
        -0.5 * (self.d as f64 * LN_2PI + self.det.ln())
    }

    pub fn marginal_sd(&self, i: usize) -> f64 {
        self.sigma(i, i).sqrt()
    }
}

pub fn covariance(m: &ModelParams) -> CovarianceSpec {
    let d = m.dim();
    let p = m.p();
    let q = m.q();
    let mut sigma = vec![0.0; d * d];
    let mut sigma_inv = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let diag = if i == j { p[i] } else { 0.0 };
            sigma[i * d + j] = diag - p[i] * p[j];
            let diag_inv = if i == j { 1.0 / p[i] } else { 0.0 };
            sigma_inv[i * d + j] = diag_inv + 1.0 / q;
        }
    }
    let det = p.iter().product::<f64>() * q;
    CovarianceSpec {
        d,
        p: p.to_vec(),
        q,
        sigma,
        sigma_inv,
        det,
    }
}

/// Normalized deviation `(k - N p) / sqrt(N)` plus the dependent remainder coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaVector {
    pub delta: Vec<f64>,
    /// `-sum(delta)`, stored so every consumer sees the same bits.
    pub last: f64,
}

impl DeltaVector {
    pub fn from_coordinates(delta: Vec<f64>) -> Self {
        let last = -compensated_sum(delta.iter().copied());
        Self { delta, last }
    }

    pub fn l1_norm(&self) -> f64 {
        self.delta.iter().map(|x| x.abs()).sum()
    }

    /// Deviations of all `d + 1` categories.
    pub fn full(&self) -> impl Iterator<Item = f64> + '_ {
        self.delta.iter().copied().chain(std::iter::once(self.last))
    }
}

pub fn delta_vector(m: &ModelParams, k: &LatticePoint) -> Result<DeltaVector> {
    m.check_point(k)?;
    Ok(delta_unchecked(m, k))
}

pub(crate) fn delta_unchecked(m: &ModelParams, k: &LatticePoint) -> DeltaVector {
    let n = m.n() as f64;
    let sqrt_n = n.sqrt();
    let delta =
        k.0.iter()
            .zip(m.p())
            .map(|(&ki, &pi)| (ki as f64 - n * pi) / sqrt_n)
            .collect();
    DeltaVector::from_coordinates(delta)
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(Error::Eta(eta))
    }
}

/// Membership in the bulk `B_{N,p}(eta)` where the expansion's error guarantee holds.
pub fn in_bulk(m: &ModelParams, k: &LatticePoint, eta: f64) -> Result<bool> {
    check_eta(eta)?;
    let dv = delta_vector(m, k)?;
    Ok(in_bulk_delta(m, &dv, eta))
}

pub(crate) fn in_bulk_delta(m: &ModelParams, dv: &DeltaVector, eta: f64) -> bool {
    let n = m.n() as f64;
    let sqrt_n = n.sqrt();
    let radius = eta * n.powf(-1.0 / 3.0);
    let coords_ok = dv
        .delta
        .iter()
        .zip(m.p())
        .all(|(d, p)| (d / (sqrt_n * p)).abs() <= radius);
    coords_ok && (dv.last / (sqrt_n * m.q())).abs() <= radius
}

/// Integer box containing the bulk (padded by one, clipped to `[0, N]`).
pub(crate) fn bulk_bounds(m: &ModelParams, eta: f64) -> (Vec<u64>, Vec<u64>) {
    let n = m.n() as f64;
    let half = eta * n.powf(2.0 / 3.0);
    let lo = m
        .p()
        .iter()
        .map(|p| (n * p - half * p).floor() - 1.0)
        .map(|x| x.max(0.0) as u64)
        .collect();
    let hi = m
        .p()
        .iter()
        .map(|p| ((n * p + half * p).ceil() + 1.0).min(n) as u64)
        .collect();
    (lo, hi)
}

/// All lattice points of the bulk, in box order (first coordinate fastest).
pub fn bulk_points(m: &ModelParams, eta: f64) -> Result<Vec<LatticePoint>> {
    check_eta(eta)?;
    let (lo, hi) = bulk_bounds(m, eta);
    let b = crate::lattice::BoxLattice::new(lo, hi)?;
    Ok(b.iter()
        .filter(|k| k.total() <= m.n())
        .filter(|k| in_bulk_delta(m, &delta_unchecked(m, k), eta))
        .collect())
}

/// `((2 pi)^d det)^{-1/2} exp(-x^T Sigma^{-1} x / 2)`.
pub fn gaussian_density(c: &CovarianceSpec, x: &[f64]) -> f64 {
    (c.log_normalizer() - 0.5 * c.quadratic_form(x)).exp()
}
