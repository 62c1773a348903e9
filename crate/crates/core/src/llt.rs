//! Two-term local expansion of the multinomial pmf around the Gaussian density.
//!
//! With `delta = (k - N p) / sqrt(N)` and `base = N^{-d/2} phi_Sigma(delta)`,
//!
//! ```text
//! p_N(k) / base = 1 + N^{-1/2} c_half(delta) + N^{-1} c_one(delta) + O(N^{-3/2})
//! ```
//!
//! uniformly on the bulk. The coefficients are available in two algebraically
//! equal forms: the raw one written over the `d` free coordinates (nested sums
//! up to fourth order, kept literally), and the symmetrized one that treats all
//! `d + 1` categories alike and costs `O(d)`. Everything that evaluates the
//! expansion uses the symmetrized form; the raw form exists to cross-check it.

use crate::error::Result;
use crate::exact::log_pmf_unchecked;
use crate::lattice::LatticePoint;
use crate::model::{
    bulk_points, covariance, delta_unchecked, CovarianceSpec, DeltaVector, ModelParams,
};
use crate::par;
use crate::sum::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Form {
    Raw,
    Symmetrized,
}

/// Truncation order of the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Order {
    /// Gaussian term only.
    Zero,
    /// Through the `N^{-1/2}` correction.
    Half,
    /// Through the `N^{-1}` correction.
    One,
}

impl Order {
    pub const ALL: [Order; 3] = [Order::Zero, Order::Half, Order::One];

    pub fn label(self) -> &'static str {
        match self {
            Order::Zero => "0",
            Order::Half => "half",
            Order::One => "one",
        }
    }

    /// `bracket - 1` for this truncation.
    pub fn correction(self, n: f64, c_half: f64, c_one: f64) -> f64 {
        match self {
            Order::Zero => 0.0,
            Order::Half => c_half / n.sqrt(),
            Order::One => c_half / n.sqrt() + c_one / n,
        }
    }
}

impl std::str::FromStr for Order {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" | "zero" => Ok(Order::Zero),
            "half" | "1/2" => Ok(Order::Half),
            "one" | "1" => Ok(Order::One),
            other => Err(crate::Error::InvalidArgument(format!(
                "unknown order `{other}` (expected 0, half or one)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionTerms {
    /// `N^{-d/2} phi_Sigma(delta_k)`.
    pub base: f64,
    /// Coefficient of `N^{-1/2}`.
    pub c_half: f64,
    /// Coefficient of `N^{-1}`.
    pub c_one: f64,
    pub form: Form,
}

/// Symmetrized coefficient evaluator for a fixed probability vector.
///
/// Works at any real deviation, not only lattice points; the region
/// integrals evaluate it at quadrature nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    /// `1 / p_i` for all `d + 1` categories, remainder last.
    inv_p: Vec<f64>,
    constant: f64,
}

impl Coefficients {
    pub fn new(m: &ModelParams) -> Self {
        let inv_p: Vec<f64> = m.full_probabilities().iter().map(|p| 1.0 / p).collect();
        let sum_inv: NeumaierSum = inv_p.iter().copied().collect();
        Self {
            constant: (1.0 - sum_inv.value()) / 12.0,
            inv_p,
        }
    }

    /// `(c_half, c_one)` at the deviation `delta` with remainder coordinate `last = -sum(delta)`.
    pub fn eval(&self, delta: &[f64], last: f64) -> (f64, f64) {
        let mut lin = NeumaierSum::new();
        let mut cubic = NeumaierSum::new();
        let mut square = NeumaierSum::new();
        let mut quartic = NeumaierSum::new();
        let all = delta.iter().copied().chain(std::iter::once(last));
        for (x, inv) in all.zip(&self.inv_p) {
            let r = x * inv;
            lin.add(r);
            cubic.add(x * r * r);
            square.add(r * r);
            quartic.add(x * r * r * r);
        }
        let c_half = -0.5 * lin.value() + cubic.value() / 6.0;
        let mut c_one = NeumaierSum::new();
        c_one.add(0.5 * c_half * c_half);
        c_one.add(0.25 * square.value());
        c_one.add(-quartic.value() / 12.0);
        c_one.add(self.constant);
        (c_half, c_one.value())
    }

    pub fn eval_delta(&self, dv: &DeltaVector) -> (f64, f64) {
        self.eval(&dv.delta, dv.last)
    }
}

/// Literal evaluation of the raw-form coefficients, nested sums and all.
pub fn raw_coefficients(p: &[f64], q: f64, delta: &[f64]) -> (f64, f64) {
    let d = p.len();
    let iq = 1.0 / q;
    let iq2 = iq * iq;
    let iq3 = iq2 * iq;
    // {p_i^-2 1{i=j=l} - q^-2}
    let cubic_coef = |i: usize, j: usize, l: usize| {
        let diag = if i == j && j == l {
            1.0 / (p[i] * p[i])
        } else {
            0.0
        };
        diag - iq2
    };

    let mut lin = NeumaierSum::new();
    for i in 0..d {
        lin.add(delta[i] * (1.0 / p[i] - iq));
    }
    let mut cubic = NeumaierSum::new();
    for i in 0..d {
        for j in 0..d {
            for l in 0..d {
                cubic.add(delta[i] * delta[j] * delta[l] * cubic_coef(i, j, l));
            }
        }
    }
    let c_half = -0.5 * lin.value() + cubic.value() / 6.0;

    let mut quart_a = NeumaierSum::new();
    let mut quart_b = NeumaierSum::new();
    for i in 0..d {
        for j in 0..d {
            for l in 0..d {
                let dijl = delta[i] * delta[j] * delta[l];
                let c3 = cubic_coef(i, j, l);
                for mm in 0..d {
                    let w = dijl * delta[mm];
                    quart_a.add(w * c3 * (1.0 / p[mm] - iq));
                    let diag = if i == j && j == l && l == mm {
                        1.0 / (p[i] * p[i] * p[i])
                    } else {
                        0.0
                    };
                    quart_b.add(w * (diag + iq3));
                }
            }
        }
    }
    let mut quad = NeumaierSum::new();
    for i in 0..d {
        for j in 0..d {
            let mut c = -2.0 / (p[i] * q) + 3.0 * iq2;
            if i == j {
                c += 3.0 / (p[i] * p[i]);
            }
            if i < j {
                c += 2.0 / (p[i] * p[j]);
            }
            quad.add(delta[i] * delta[j] * c);
        }
    }
    let sum_inv: NeumaierSum = p.iter().map(|x| 1.0 / x).collect();
    let constant = (1.0 - sum_inv.value() - iq) / 12.0;

    let cubic_v = cubic.value();
    let mut c_one = NeumaierSum::new();
    c_one.add(-quart_a.value() / 12.0);
    c_one.add(-quart_b.value() / 12.0);
    c_one.add(cubic_v * cubic_v / 72.0);
    c_one.add(quad.value() / 8.0);
    c_one.add(constant);
    (c_half, c_one.value())
}

fn log_base(m: &ModelParams, c: &CovarianceSpec, dv: &DeltaVector) -> f64 {
    let d = m.dim() as f64;
    -0.5 * d * (m.n() as f64).ln() + c.log_normalizer() - 0.5 * c.quadratic_form(&dv.delta)
}

/// Raw-form terms at `k`.
pub fn expansion_terms(m: &ModelParams, k: &LatticePoint) -> Result<ExpansionTerms> {
    m.check_point(k)?;
    let c = covariance(m);
    let dv = delta_unchecked(m, k);
    let (c_half, c_one) = raw_coefficients(m.p(), m.q(), &dv.delta);
    Ok(ExpansionTerms {
        base: log_base(m, &c, &dv).exp(),
        c_half,
        c_one,
        form: Form::Raw,
    })
}

/// Symmetrized-form terms at `k`.
pub fn expansion_terms_symmetrized(m: &ModelParams, k: &LatticePoint) -> Result<ExpansionTerms> {
    m.check_point(k)?;
    let c = covariance(m);
    let dv = delta_unchecked(m, k);
    let (c_half, c_one) = Coefficients::new(m).eval_delta(&dv);
    Ok(ExpansionTerms {
        base: log_base(m, &c, &dv).exp(),
        c_half,
        c_one,
        form: Form::Symmetrized,
    })
}

/// A truncated approximation; negative truncations are reported as zero with `clamped` set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approx {
    pub value: f64,
    pub clamped: bool,
}

/// Evaluates the expansion at many lattice points of one model without
/// rebuilding the covariance and coefficient tables each time.
#[derive(Debug, Clone)]
pub struct Expansion {
    model: ModelParams,
    cov: CovarianceSpec,
    coef: Coefficients,
}

impl Expansion {
    pub fn new(m: &ModelParams) -> Self {
        Self {
            model: m.clone(),
            cov: covariance(m),
            coef: Coefficients::new(m),
        }
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }

    pub fn terms_unchecked(&self, k: &LatticePoint) -> (DeltaVector, ExpansionTerms) {
        let dv = delta_unchecked(&self.model, k);
        let (c_half, c_one) = self.coef.eval_delta(&dv);
        let base = log_base(&self.model, &self.cov, &dv).exp();
        (
            dv,
            ExpansionTerms {
                base,
                c_half,
                c_one,
                form: Form::Symmetrized,
            },
        )
    }

    pub fn approx(&self, k: &LatticePoint, order: Order) -> Result<Approx> {
        self.model.check_point(k)?;
        let (_, t) = self.terms_unchecked(k);
        let bracket = 1.0 + order.correction(self.model.n() as f64, t.c_half, t.c_one);
        Ok(if bracket < 0.0 {
            Approx {
                value: 0.0,
                clamped: true,
            }
        } else {
            Approx {
                value: t.base * bracket,
                clamped: false,
            }
        })
    }

    /// `p_N(k) / base - bracket` for all three orders.
    pub fn ratio_errors_unchecked(&self, k: &LatticePoint) -> (DeltaVector, [f64; 3]) {
        let dv = delta_unchecked(&self.model, k);
        let (c_half, c_one) = self.coef.eval_delta(&dv);
        let log_ratio = log_pmf_unchecked(&self.model, k) - log_base(&self.model, &self.cov, &dv);
        let excess = log_ratio.exp_m1();
        let n = self.model.n() as f64;
        let errs = Order::ALL.map(|o| excess - o.correction(n, c_half, c_one));
        (dv, errs)
    }

    pub fn ratio_error(&self, k: &LatticePoint, order: Order) -> Result<f64> {
        self.model.check_point(k)?;
        let (_, errs) = self.ratio_errors_unchecked(k);
        Ok(errs[order as usize])
    }
}

pub fn approx_pmf(m: &ModelParams, k: &LatticePoint, order: Order) -> Result<Approx> {
    Expansion::new(m).approx(k, order)
}

/// What the remainder bound controls: `p_N(k) / base` minus the truncated bracket.
pub fn ratio_error(m: &ModelParams, k: &LatticePoint, order: Order) -> Result<f64> {
    Expansion::new(m).ratio_error(k, order)
}

/// Worst-case ratio errors over the bulk at one `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkErrorSummary {
    pub n: u64,
    pub points: usize,
    /// `max |ratio_error|` indexed by [`Order`].
    pub max_abs: [f64; 3],
    /// `max |ratio_error(one)| / ((1 + |delta|_1)^9 N^{-3/2})`: an empirical remainder constant.
    pub remainder_constant: f64,
}

pub fn max_bulk_ratio_error(m: &ModelParams, eta: f64) -> Result<BulkErrorSummary> {
    let points = bulk_points(m, eta)?;
    let exp = Expansion::new(m);
    let n = m.n() as f64;
    let scale = n.powf(-1.5);
    let partials = par::map_chunks(points.len() as u64, |r| {
        let mut best = [0.0f64; 4];
        for k in &points[r.start as usize..r.end as usize] {
            let (dv, errs) = exp.ratio_errors_unchecked(k);
            for (b, e) in best.iter_mut().zip(errs) {
                *b = b.max(e.abs());
            }
            let envelope = (1.0 + dv.l1_norm()).powi(9) * scale;
            best[3] = best[3].max(errs[2].abs() / envelope);
        }
        best
    });
    let mut best = [0.0f64; 4];
    for p in partials {
        for (b, v) in best.iter_mut().zip(p) {
            *b = b.max(v);
        }
    }
    Ok(BulkErrorSummary {
        n: m.n(),
        points: points.len(),
        max_abs: [best[0], best[1], best[2]],
        remainder_constant: best[3],
    })
}
