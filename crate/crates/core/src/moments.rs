//! Closed-form multinomial central moments and bounds on moments restricted to an event.

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Which central moment of `xi - N p` to evaluate. Indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentSpec {
    Mean(usize),
    Cov(usize, usize),
    Third(usize, usize, usize),
    Fourth(usize),
    Sixth(usize),
    /// `E[(xi_i - N p_i)^3 (xi_j - N p_j)^3]`, `i != j`.
    Mixed33(usize, usize),
}

impl MomentSpec {
    /// Exponent vector of the moment in `d` coordinates.
    pub fn exponents(&self, d: usize) -> Vec<u32> {
        let mut a = vec![0u32; d];
        let mut bump = |i: usize, by: u32| a[i] += by;
        match *self {
            MomentSpec::Mean(i) => bump(i, 1),
            MomentSpec::Cov(i, j) => {
                bump(i, 1);
                bump(j, 1);
            }
            MomentSpec::Third(i, j, l) => {
                bump(i, 1);
                bump(j, 1);
                bump(l, 1);
            }
            MomentSpec::Fourth(i) => bump(i, 4),
            MomentSpec::Sixth(i) => bump(i, 6),
            MomentSpec::Mixed33(i, j) => {
                bump(i, 3);
                bump(j, 3);
            }
        }
        a
    }

    fn indices(&self) -> Vec<usize> {
        match *self {
            MomentSpec::Mean(i) | MomentSpec::Fourth(i) | MomentSpec::Sixth(i) => vec![i],
            MomentSpec::Cov(i, j) | MomentSpec::Mixed33(i, j) => vec![i, j],
            MomentSpec::Third(i, j, l) => vec![i, j, l],
        }
    }

    /// Label with one-based indices, e.g. `cov_12`.
    pub fn label(&self) -> String {
        let idx: String = self.indices().iter().map(|i| (i + 1).to_string()).collect();
        let name = match self {
            MomentSpec::Mean(_) => "mean",
            MomentSpec::Cov(..) => "cov",
            MomentSpec::Third(..) => "third",
            MomentSpec::Fourth(_) => "fourth",
            MomentSpec::Sixth(_) => "sixth",
            MomentSpec::Mixed33(..) => "mixed33",
        };
        format!("{name}_{idx}")
    }
}

/// Size of what the closed form leaves out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Remainder {
    Exact,
    /// `O(N)`.
    LinearN,
    /// `O(N^2)`.
    QuadraticN,
}

impl Remainder {
    /// Power of `N` in the remainder, `None` when the formula is exact.
    pub fn power(self) -> Option<i32> {
        match self {
            Remainder::Exact => None,
            Remainder::LinearN => Some(1),
            Remainder::QuadraticN => Some(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub leading: f64,
    pub remainder: Remainder,
}

fn check_indices(m: &ModelParams, spec: &MomentSpec) -> Result<()> {
    let d = m.dim();
    if let Some(i) = spec.indices().into_iter().find(|&i| i >= d) {
        return Err(Error::Index(format!(
            "index {} out of range for d = {d}",
            i + 1
        )));
    }
    if let MomentSpec::Mixed33(i, j) = spec {
        if i == j {
            return Err(Error::Index("mixed33 needs two distinct indices".into()));
        }
    }
    Ok(())
}

pub fn closed_form_central_moment(m: &ModelParams, spec: MomentSpec) -> Result<ClosedForm> {
    check_indices(m, &spec)?;
    let n = m.n() as f64;
    let p = m.p();
    let ind = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let (leading, remainder) = match spec {
        MomentSpec::Mean(_) => (0.0, Remainder::Exact),
        MomentSpec::Cov(i, j) => (n * (p[i] * ind(i, j) - p[i] * p[j]), Remainder::Exact),
        MomentSpec::Third(i, j, l) => {
            let v = 2.0 * p[i] * p[j] * p[l]
                - ind(i, j) * p[i] * p[l]
                - ind(j, l) * p[i] * p[j]
                - ind(i, l) * p[j] * p[l]
                + ind(i, j) * ind(j, l) * p[i];
            (n * v, Remainder::Exact)
        }
        MomentSpec::Fourth(i) => {
            let v = p[i] * (1.0 - p[i]);
            (3.0 * n * n * v * v, Remainder::LinearN)
        }
        MomentSpec::Sixth(i) => {
            let v = p[i] * (1.0 - p[i]);
            (15.0 * n.powi(3) * v.powi(3), Remainder::QuadraticN)
        }
        MomentSpec::Mixed33(i, j) => {
            let (a, b) = (p[i], p[j]);
            let ab = a * b;
            let v = ab * ab * (-9.0 + 9.0 * (a + b) - 15.0 * ab);
            (n.powi(3) * v, Remainder::QuadraticN)
        }
    };
    Ok(ClosedForm { leading, remainder })
}

/// Central moments of order one to three restricted to an event `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RestrictedSpec {
    First,
    Second,
    Third,
}

/// Bound on `|E[prod (xi - N p) 1_A] - E[prod (xi - N p)]|` given `P(A^c)`.
///
/// `prob_complement` is expected in `[0, 1]` and is clamped to it.
pub fn restricted_moment_bound(n: u64, spec: RestrictedSpec, prob_complement: f64) -> f64 {
    let n = n as f64;
    let pc = prob_complement.clamp(0.0, 1.0);
    match spec {
        RestrictedSpec::First => 0.5 * n.sqrt() * pc.sqrt(),
        RestrictedSpec::Second => 0.5 * n * pc.sqrt(),
        RestrictedSpec::Third => n.powf(1.5) * pc.powf(0.25) / 8f64.sqrt(),
    }
}
