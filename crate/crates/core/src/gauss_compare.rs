//! Distance between the jittered multinomial law and its Gaussian limit, the
//! mass outside the bulk, and the kernels that move between the two models.

use crate::error::{Error, Result};
use crate::exact::log_pmf_unchecked;
use crate::lattice::{LatticePoint, SimplexLattice};
use crate::model::{
    bulk_points, check_eta, covariance, delta_unchecked, gaussian_density, in_bulk_delta,
    CovarianceSpec, ModelParams,
};
use crate::par;
use crate::quadrature::{Rule, TensorGrid};
use crate::special::{norm_cdf, norm_interval, norm_sf, LN_2PI};
use crate::sum::NeumaierSum;

/// Law of `K + U` with `K` multinomial and `U` uniform on `(-1/2, 1/2)^d`.
///
/// Its density is `p_N(k)` on the unit cube centered at `k`, in count coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedLaw {
    m: ModelParams,
}

impl SmoothedLaw {
    pub fn new(m: &ModelParams) -> Self {
        Self { m: m.clone() }
    }

    pub fn model(&self) -> &ModelParams {
        &self.m
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        if x.len() != self.m.dim() || x.iter().any(|v| !v.is_finite()) {
            return 0.0;
        }
        let k: Option<Vec<u64>> = x
            .iter()
            .map(|&v| {
                let r = v.round();
                // cube boundaries belong to neither neighbour
                (r >= 0.0 && (v - r).abs() < 0.5).then_some(r as u64)
            })
            .collect();
        match k.map(LatticePoint::new) {
            Some(k) if k.total() <= self.m.n() => log_pmf_unchecked(&self.m, &k).exp(),
            _ => 0.0,
        }
    }

    pub fn total_mass(&self) -> Result<f64> {
        let lat = SimplexLattice::new(self.m.dim(), self.m.n())?;
        Ok(par::sum_chunks(lat.len(), |r, acc| {
            for k in lat.iter_range(r) {
                acc.add(log_pmf_unchecked(&self.m, &k).exp());
            }
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TVReport {
    /// Total variation distance, `(cell_contribution + outside_mass) / 2`.
    pub tv: f64,
    /// `sum_k int_cell |smoothed density - Gaussian density|`.
    pub cell_contribution: f64,
    /// Gaussian mass outside the union of cells.
    pub outside_mass: f64,
    pub cells_evaluated: u64,
}

/// `int_a^b |c - phi_sigma(y)| dy`, split where the two densities cross.
fn abs_gap_1d(c: f64, sigma: f64, a: f64, b: f64) -> f64 {
    let mut cuts = vec![a];
    // phi_sigma(y) = c  <=>  y^2 = 2 sigma^2 ln(1 / (c sigma sqrt(2 pi)))
    let level = -(c.ln() + sigma.ln() + 0.5 * LN_2PI);
    if c > 0.0 && level > 0.0 {
        let r = sigma * (2.0 * level).sqrt();
        for x in [-r, r] {
            if a < x && x < b {
                cuts.push(x);
            }
        }
    }
    cuts.push(b);
    let mut acc = NeumaierSum::new();
    for w in cuts.windows(2) {
        let gauss = norm_interval(w[0] / sigma, w[1] / sigma);
        acc.add((c * (w[1] - w[0]) - gauss).abs());
    }
    acc.value()
}

struct TvCells<'a> {
    m: &'a ModelParams,
    cov: CovarianceSpec,
    rule: Rule,
    scale: f64,
}

impl TvCells<'_> {
    /// `(int_cell |c - phi|, int_cell phi)` for the cell of `k`.
    fn cell(&self, k: &LatticePoint) -> (f64, f64) {
        let n = self.m.n() as f64;
        let s = n.sqrt();
        let c = log_pmf_unchecked(self.m, k).exp() * self.scale;
        let (lo, hi): (Vec<f64>, Vec<f64>) =
            k.0.iter()
                .zip(self.m.p())
                .map(|(&ki, &p)| ((ki as f64 - 0.5 - n * p) / s, (ki as f64 + 0.5 - n * p) / s))
                .unzip();
        if self.m.dim() == 1 {
            let sigma = self.cov.marginal_sd(0);
            let gauss = norm_interval(lo[0] / sigma, hi[0] / sigma);
            return (abs_gap_1d(c, sigma, lo[0], hi[0]), gauss);
        }
        let grid = TensorGrid::new(&self.rule, &lo, &hi, &vec![1; lo.len()]);
        let gap = grid.integrate(|y| (c - gaussian_density(&self.cov, y)).abs());
        let gauss = grid.integrate(|y| gaussian_density(&self.cov, y));
        (gap, gauss)
    }
}

/// Total variation distance between `K + U` and `N(N p, N Sigma)`.
///
/// For `d = 1` every cell integral is evaluated in closed form; otherwise a
/// tensor Gauss–Legendre rule with `nodes_per_axis` points is used per cell
/// and the Gaussian mass outside the cells is `1 - sum of cell masses`.
pub fn tv_distance_numeric(m: &ModelParams, nodes_per_axis: usize) -> Result<TVReport> {
    if nodes_per_axis < 4 {
        return Err(Error::InvalidArgument(format!(
            "nodes_per_axis must be at least 4, got {nodes_per_axis}"
        )));
    }
    let lat = SimplexLattice::new(m.dim(), m.n())?;
    let cells = TvCells {
        m,
        cov: covariance(m),
        rule: Rule::new(nodes_per_axis)?,
        scale: (m.n() as f64).powf(m.dim() as f64 / 2.0),
    };
    let partials = par::map_chunks(lat.len(), |r| {
        let mut gap = NeumaierSum::new();
        let mut inside = NeumaierSum::new();
        for k in lat.iter_range(r) {
            let (g, q) = cells.cell(&k);
            gap.add(g);
            inside.add(q);
        }
        (gap, inside)
    });
    let mut gap = NeumaierSum::new();
    let mut inside = NeumaierSum::new();
    for (g, q) in &partials {
        gap.merge(g);
        inside.merge(q);
    }
    let outside_mass = if m.dim() == 1 {
        let n = m.n() as f64;
        let s = n.sqrt();
        let sigma = cells.cov.marginal_sd(0);
        let p = m.p()[0];
        norm_cdf((-0.5 - n * p) / s / sigma) + norm_sf((n + 0.5 - n * p) / s / sigma)
    } else {
        (1.0 - inside.value()).max(0.0)
    };
    let cell_contribution = gap.value();
    Ok(TVReport {
        tv: (0.5 * (cell_contribution + outside_mass)).clamp(0.0, 1.0),
        cell_contribution,
        outside_mass,
        cells_evaluated: lat.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HellingerTail {
    /// `2 P(X outside the bulk)`, counting every cell that leaves the bulk.
    pub tail_term: f64,
    /// `100 d exp(-min(p, q)^2 N^{1/3} / (100 d^2))`.
    pub cap: f64,
    pub bound_valid: bool,
}

/// Whether the cell of `k` lies entirely inside the continuous bulk.
fn cell_inside_bulk(m: &ModelParams, k: &LatticePoint, eta: f64) -> bool {
    let n = m.n() as f64;
    let s = n.sqrt();
    let radius = eta * n.powf(-1.0 / 3.0);
    let mut lo_sum = 0.0;
    let mut hi_sum = 0.0;
    for (&ki, &p) in k.0.iter().zip(m.p()) {
        let lo = (ki as f64 - 0.5 - n * p) / s;
        let hi = (ki as f64 + 0.5 - n * p) / s;
        if lo.abs().max(hi.abs()) / (s * p) > radius {
            return false;
        }
        lo_sum += lo;
        hi_sum += hi;
    }
    lo_sum.abs().max(hi_sum.abs()) / (s * m.q()) <= radius
}

pub fn hellinger_upper_bound_terms(m: &ModelParams, eta: f64) -> Result<HellingerTail> {
    check_eta(eta)?;
    let inner: NeumaierSum = bulk_points(m, eta)?
        .iter()
        .filter(|k| cell_inside_bulk(m, k, eta))
        .map(|k| log_pmf_unchecked(m, k).exp())
        .collect();
    let tail_term = (2.0 * (1.0 - inner.value())).max(0.0);
    let d = m.dim() as f64;
    let pmin = m.min_probability().min(m.q());
    let cap = 100.0 * d * (-pmin * pmin * (m.n() as f64).cbrt() / (100.0 * d * d)).exp();
    Ok(HellingerTail {
        tail_term,
        cap,
        bound_valid: tail_term <= cap,
    })
}

/// Smallest `N` of an increasing sweep from which the cap holds at every later sweep point.
pub fn hellinger_threshold(p: &[f64], eta: f64, sweep: &[u64]) -> Result<Option<u64>> {
    let mut threshold = None;
    for &n in sweep {
        let m = ModelParams::new(p.to_vec(), n)?;
        if hellinger_upper_bound_terms(&m, eta)?.bound_valid {
            threshold.get_or_insert(n);
        } else {
            threshold = None;
        }
    }
    Ok(threshold)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailMass {
    /// Exact probability of the lattice points outside the bulk.
    pub exact_mass: f64,
    pub in_bulk_mass: f64,
    /// `sum_{i <= d+1} 2 exp(-eta^2 p_i^2 N^{1/3} / 2)` with `p_{d+1} = q`.
    pub azuma_bound: f64,
}

pub fn tail_mass_outside_bulk(m: &ModelParams, eta: f64) -> Result<TailMass> {
    check_eta(eta)?;
    let lat = SimplexLattice::new(m.dim(), m.n())?;
    let partials = par::map_chunks(lat.len(), |r| {
        let mut out = NeumaierSum::new();
        let mut inside = NeumaierSum::new();
        for k in lat.iter_range(r) {
            let v = log_pmf_unchecked(m, &k).exp();
            if in_bulk_delta(m, &delta_unchecked(m, &k), eta) {
                inside.add(v);
            } else {
                out.add(v);
            }
        }
        (out, inside)
    });
    let mut out = NeumaierSum::new();
    let mut inside = NeumaierSum::new();
    for (o, i) in &partials {
        out.merge(o);
        inside.merge(i);
    }
    let cbrt_n = (m.n() as f64).cbrt();
    let azuma_bound = m
        .full_probabilities()
        .iter()
        .map(|p| 2.0 * (-eta * eta * p * p * cbrt_n / 2.0).exp())
        .sum();
    Ok(TailMass {
        exact_mass: out.value(),
        in_bulk_mass: inside.value(),
        azuma_bound,
    })
}

/// Adds the uniform draws `noise` in `(-1/2, 1/2)^d` to `k`.
pub fn kernel_t1(m: &ModelParams, k: &LatticePoint, noise: &[f64]) -> Result<Vec<f64>> {
    m.check_point(k)?;
    if noise.len() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            actual: noise.len(),
        });
    }
    if let Some(u) = noise.iter().find(|u| u.is_nan() || u.abs() >= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "noise {u} outside (-1/2, 1/2)"
        )));
    }
    Ok(k.0
        .iter()
        .zip(noise)
        .map(|(&ki, u)| ki as f64 + u)
        .collect())
}

/// Rounds half away from zero, then projects onto the simplex lattice.
///
/// Negative components become 0; while the total exceeds `N` the largest
/// component (lowest index on ties) is decremented.
pub fn kernel_t2(m: &ModelParams, y: &[f64]) -> LatticePoint {
    let n = m.n();
    // Clamping at N first reaches the same point as decrementing from above.
    let mut k: Vec<u64> = y
        .iter()
        .map(|v| v.round().max(0.0).min(n as f64) as u64)
        .collect();
    let mut total: u64 = k.iter().sum();
    while total > n {
        let mut top = 0;
        for (i, &v) in k.iter().enumerate() {
            if v > k[top] {
                top = i;
            }
        }
        k[top] -= 1;
        total -= 1;
    }
    LatticePoint(k)
}
