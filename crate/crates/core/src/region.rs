//! Probabilities of lattice subsets and their Gaussian-integral approximations.
//!
//! Each lattice point `k` owns the normalized cell
//! `prod_i [delta_{i, k_i - 1/2}, delta_{i, k_i + 1/2}]` of side `N^{-1/2}`.
//! Summing the expansion integrand over the cells of a set approximates the
//! probability of the set; the integrand is assembled from the same
//! coefficient evaluator the pointwise expansion uses.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::exact::log_pmf_unchecked;
use crate::lattice::{BoxLattice, LatticePoint, SimplexLattice};
use crate::llt::{Coefficients, Order};
use crate::model::{covariance, gaussian_density, CovarianceSpec, ModelParams};
use crate::par;
use crate::quadrature::{Rule, TensorGrid};
use crate::special::{norm_cdf, norm_interval};
use crate::sum::NeumaierSum;

/// Panels per axis in the sequential-conditioning box integral.
const BOX_PANELS: usize = 8;

/// A cell in normalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypercube {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

pub fn cell(m: &ModelParams, k: &LatticePoint) -> Result<Hypercube> {
    m.check_point(k)?;
    Ok(cell_unchecked(m, k))
}

fn cell_unchecked(m: &ModelParams, k: &LatticePoint) -> Hypercube {
    let n = m.n() as f64;
    let s = n.sqrt();
    let (lo, hi) =
        k.0.iter()
            .zip(m.p())
            .map(|(&ki, &p)| {
                let c = ki as f64 - n * p;
                ((c - 0.5) / s, (c + 0.5) / s)
            })
            .unzip();
    Hypercube { lo, hi }
}

/// A set of lattice points, or with [`leading_set_approx`], a subset of `R^d` in count coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// Everything.
    All,
    /// Explicit lattice points; duplicates and points outside the simplex are ignored.
    Points(Vec<LatticePoint>),
    /// `lo_i <= k_i <= hi_i` for every `i`; bounds may be infinite.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `a . k <= b`.
    HalfSpace { a: Vec<f64>, b: f64 },
}

impl Region {
    pub fn contains(&self, k: &LatticePoint) -> bool {
        match self {
            Region::All => true,
            Region::Points(pts) => pts.contains(k),
            Region::Box { lo, hi } => {
                k.0.iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(&x, (a, b))| *a <= x as f64 && x as f64 <= *b)
            }
            Region::HalfSpace { a, b } => dot_counts(a, k) <= *b,
        }
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        let mismatch = |actual: usize| {
            if actual == d {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    expected: d,
                    actual,
                })
            }
        };
        match self {
            Region::All => Ok(()),
            Region::Points(pts) => pts.iter().try_for_each(|k| mismatch(k.dim())),
            Region::Box { lo, hi } => {
                mismatch(lo.len())?;
                mismatch(hi.len())?;
                if lo.iter().chain(hi).any(|x| x.is_nan()) {
                    return Err(Error::InvalidArgument("box bound is NaN".into()));
                }
                Ok(())
            }
            Region::HalfSpace { a, b } => {
                mismatch(a.len())?;
                if a.iter().chain(std::iter::once(b)).any(|x| !x.is_finite()) {
                    return Err(Error::InvalidArgument("half-space must be finite".into()));
                }
                Ok(())
            }
        }
    }
}

fn dot_counts(a: &[f64], k: &LatticePoint) -> f64 {
    a.iter()
        .zip(&k.0)
        .map(|(ai, &ki)| ai * ki as f64)
        .collect::<NeumaierSum>()
        .value()
}

enum Members {
    Simplex(SimplexLattice),
    List(Vec<LatticePoint>),
}

fn members(m: &ModelParams, region: &Region) -> Result<Members> {
    region.check_dim(m.dim())?;
    let n = m.n();
    Ok(match region {
        Region::All | Region::HalfSpace { .. } => {
            Members::Simplex(SimplexLattice::new(m.dim(), n)?)
        }
        Region::Points(pts) => {
            let mut v: Vec<LatticePoint> = pts.iter().filter(|k| k.total() <= n).cloned().collect();
            v.sort();
            v.dedup();
            Members::List(v)
        }
        Region::Box { lo, hi } => {
            let lo_i: Vec<f64> = lo.iter().map(|x| x.ceil().max(0.0)).collect();
            let hi_i: Vec<f64> = hi.iter().map(|x| x.floor().min(n as f64)).collect();
            if lo_i.iter().zip(&hi_i).any(|(a, b)| a > b) {
                Members::List(Vec::new())
            } else {
                let b = BoxLattice::new(
                    lo_i.iter().map(|&x| x as u64).collect(),
                    hi_i.iter().map(|&x| x as u64).collect(),
                )?;
                Members::List(b.iter().filter(|k| k.total() <= n).collect())
            }
        }
    })
}

/// Compensated sum of `f` over the members of `region` inside the simplex.
fn sum_over<F>(m: &ModelParams, region: &Region, f: F) -> Result<f64>
where
    F: Fn(&LatticePoint) -> f64 + Sync + Send,
{
    Ok(match members(m, region)? {
        Members::Simplex(lat) => par::sum_chunks(lat.len(), |r, acc| {
            for k in lat.iter_range(r) {
                if region.contains(&k) {
                    acc.add(f(&k));
                }
            }
        }),
        Members::List(pts) => par::sum_chunks(pts.len() as u64, |r, acc| {
            for k in &pts[r.start as usize..r.end as usize] {
                acc.add(f(k));
            }
        }),
    })
}

pub fn region_prob_exact(m: &ModelParams, region: &Region) -> Result<f64> {
    sum_over(m, region, |k| log_pmf_unchecked(m, k).exp())
}

/// Integrates the truncated expansion over single cells.
#[derive(Debug, Clone)]
pub struct CellIntegrator {
    model: ModelParams,
    cov: CovarianceSpec,
    coef: Coefficients,
    rule: Rule,
    order: Order,
}

impl CellIntegrator {
    pub fn new(m: &ModelParams, order: Order, nodes: usize) -> Result<Self> {
        Ok(Self {
            model: m.clone(),
            cov: covariance(m),
            coef: Coefficients::new(m),
            rule: Rule::new(nodes)?,
            order,
        })
    }

    /// Expansion integrand at the normalized point `y`.
    pub fn integrand(&self, y: &[f64]) -> f64 {
        let n = self.model.n() as f64;
        let phi = gaussian_density(&self.cov, y);
        let corr = match self.order {
            Order::Zero => 0.0,
            _ => {
                let last = -y.iter().copied().collect::<NeumaierSum>().value();
                let (c_half, c_one) = self.coef.eval(y, last);
                match self.order {
                    Order::Half => c_half / n.sqrt(),
                    _ => {
                        let curvature: NeumaierSum = self
                            .cov
                            .precision_times(y)
                            .iter()
                            .enumerate()
                            .map(|(i, v)| v * v - self.cov.sigma_inv(i, i))
                            .collect();
                        c_half / n.sqrt() + (c_one - curvature.value() / 24.0) / n
                    }
                }
            }
        };
        phi * (1.0 + corr)
    }

    pub fn integrate_box(&self, h: &Hypercube) -> f64 {
        let panels = vec![1; h.lo.len()];
        TensorGrid::new(&self.rule, &h.lo, &h.hi, &panels).integrate(|y| self.integrand(y))
    }

    pub fn integrate_cell(&self, k: &LatticePoint) -> Result<f64> {
        let h = cell(&self.model, k)?;
        Ok(self.integrate_box(&h))
    }
}

/// Sum over the member cells of the expansion integrand, truncated at `order`.
pub fn region_prob_approx(
    m: &ModelParams,
    region: &Region,
    order: Order,
    nodes: usize,
) -> Result<f64> {
    let ci = CellIntegrator::new(m, order, nodes)?;
    sum_over(m, region, |k| ci.integrate_box(&cell_unchecked(m, k)))
}

/// Gaussian probability of a box or half-space after the affine map `x -> (x - N p) / sqrt(N)`.
pub fn leading_set_approx(m: &ModelParams, region: &Region, nodes: usize) -> Result<f64> {
    region.check_dim(m.dim())?;
    let n = m.n() as f64;
    let s = n.sqrt();
    match region {
        Region::All => Ok(1.0),
        Region::Points(_) => Err(Error::UnsupportedRegion(
            "point lists have no continuous counterpart",
        )),
        Region::HalfSpace { a, b } => {
            let p = m.p();
            let center: NeumaierSum = a.iter().zip(p).map(|(ai, pi)| ai * n * pi).collect();
            let t = (b - center.value()) / s;
            let mean_a: NeumaierSum = a.iter().zip(p).map(|(ai, pi)| ai * pi).collect();
            let sq: NeumaierSum = a.iter().zip(p).map(|(ai, pi)| ai * ai * pi).collect();
            let var = sq.value() - mean_a.value() * mean_a.value();
            if var <= 0.0 {
                return Ok(if t >= 0.0 { 1.0 } else { 0.0 });
            }
            Ok(norm_cdf(t / var.sqrt()))
        }
        Region::Box { lo, hi } => {
            let lo: Vec<f64> = lo.iter().zip(m.p()).map(|(x, p)| (x - n * p) / s).collect();
            let hi: Vec<f64> = hi.iter().zip(m.p()).map(|(x, p)| (x - n * p) / s).collect();
            gaussian_box_probability(m.p(), &lo, &hi, nodes)
        }
    }
}

/// `P(lo <= Y <= hi)` for `Y ~ N(0, diag(p) - p p^T)`.
///
/// Conditions one coordinate at a time: given `y_1..y_{i-1}` with sum `S` and
/// `r = 1 - p_1 - ... - p_{i-1}`, `y_i` is normal with mean `-p_i S / r` and
/// variance `p_i (r - p_i) / r`. The remaining integral over the unit cube is
/// done by composite Gauss–Legendre.
pub fn gaussian_box_probability(p: &[f64], lo: &[f64], hi: &[f64], nodes: usize) -> Result<f64> {
    let d = p.len();
    if lo
        .iter()
        .zip(hi)
        .any(|(a, b)| a.is_nan() || b.is_nan() || a >= b)
    {
        return Ok(0.0);
    }
    let mut cond_sd = Vec::with_capacity(d);
    let mut remaining = Vec::with_capacity(d);
    let mut r = 1.0;
    for &pi in p {
        remaining.push(r);
        cond_sd.push((pi * (r - pi) / r).sqrt());
        r -= pi;
    }
    let slab = |i: usize, sum: f64| {
        let mean = -p[i] * sum / remaining[i];
        let a = (lo[i] - mean) / cond_sd[i];
        let b = (hi[i] - mean) / cond_sd[i];
        (norm_cdf(a), norm_cdf(b), norm_interval(a, b))
    };
    if d == 1 {
        return Ok(slab(0, 0.0).2);
    }
    let normal = Normal::standard();
    let rule = Rule::new(nodes)?;
    let grid = TensorGrid::new(
        &rule,
        &vec![0.0; d - 1],
        &vec![1.0; d - 1],
        &vec![BOX_PANELS; d - 1],
    );
    Ok(grid.integrate(|w| {
        let mut sum = 0.0;
        let (mut lo_c, mut hi_c, mut f) = slab(0, 0.0);
        for i in 1..d {
            if f <= 0.0 {
                return 0.0;
            }
            let u = lo_c + w[i - 1] * (hi_c - lo_c);
            let mean = -p[i - 1] * sum / remaining[i - 1];
            sum += mean + cond_sd[i - 1] * normal.inverse_cdf(u);
            let (a, b, mass) = slab(i, sum);
            lo_c = a;
            hi_c = b;
            f *= mass;
        }
        f
    }))
}
