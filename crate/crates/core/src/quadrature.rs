//! Composite tensor Gauss–Legendre quadrature over boxes.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};
use crate::model::{gaussian_density, CovarianceSpec};
use crate::sum::NeumaierSum;

/// Nodes per axis used when the caller does not choose.
pub const DEFAULT_NODES: usize = 12;

/// Largest total degree `gauss_monomial_integral` accepts.
pub const MAX_MONOMIAL_DEGREE: u32 = 6;

/// A Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    pub fn new(n: usize) -> Result<Self> {
        let n = NonZeroUsize::new(n)
            .ok_or_else(|| Error::InvalidArgument("quadrature needs at least one node".into()))?;
        let gl = GaussLegendre::new(n);
        let (nodes, weights) = gl.as_node_weight_pairs().iter().copied().unzip();
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights of the composite rule on `[a, b]` split into `panels` equal pieces.
    pub fn composite(&self, a: f64, b: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut xs = Vec::with_capacity(panels * self.len());
        let mut ws = Vec::with_capacity(panels * self.len());
        for j in 0..panels {
            let mid = a + (j as f64 + 0.5) * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                xs.push(mid + 0.5 * h * x);
                ws.push(0.5 * h * w);
            }
        }
        (xs, ws)
    }

    pub fn integrate(&self, a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let (xs, ws) = self.composite(a, b, panels);
        xs.iter()
            .zip(&ws)
            .map(|(x, w)| w * f(*x))
            .collect::<NeumaierSum>()
            .value()
    }
}

/// One-dimensional node sets per axis, combined as a tensor product.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    axes: Vec<(Vec<f64>, Vec<f64>)>,
}

impl TensorGrid {
    pub fn new(rule: &Rule, lo: &[f64], hi: &[f64], panels: &[usize]) -> Self {
        let axes = lo
            .iter()
            .zip(hi)
            .zip(panels)
            .map(|((a, b), p)| rule.composite(*a, *b, *p))
            .collect();
        Self { axes }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|(x, _)| x.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Weighted sum of `f` over every tensor node, first axis fastest.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let d = self.axes.len();
        if self.is_empty() {
            return 0.0;
        }
        let mut idx = vec![0usize; d];
        let mut point: Vec<f64> = self.axes.iter().map(|(x, _)| x[0]).collect();
        let mut acc = NeumaierSum::new();
        loop {
            let w: f64 = idx
                .iter()
                .zip(&self.axes)
                .map(|(&i, (_, ws))| ws[i])
                .product();
            acc.add(w * f(&point));
            let mut axis = 0;
            loop {
                if axis == d {
                    return acc.value();
                }
                let (xs, _) = &self.axes[axis];
                idx[axis] += 1;
                if idx[axis] < xs.len() {
                    point[axis] = xs[idx[axis]];
                    break;
                }
                idx[axis] = 0;
                point[axis] = xs[0];
                axis += 1;
            }
        }
    }
}

/// Panels per axis so that each panel spans at most two marginal standard deviations.
pub fn gaussian_panels(c: &CovarianceSpec, lo: &[f64], hi: &[f64]) -> Vec<usize> {
    lo.iter()
        .zip(hi)
        .enumerate()
        .map(|(i, (a, b))| ((b - a) / (2.0 * c.marginal_sd(i))).ceil().max(1.0) as usize)
        .collect()
}

/// `int_box y^alpha phi_Sigma(y) dy` by composite tensor quadrature with `nodes` points per panel.
pub fn gauss_monomial_integral(
    c: &CovarianceSpec,
    lo: &[f64],
    hi: &[f64],
    alpha: &[u32],
    nodes: usize,
) -> Result<f64> {
    let d = c.dim();
    for len in [lo.len(), hi.len(), alpha.len()] {
        if len != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: len,
            });
        }
    }
    let degree: u32 = alpha.iter().sum();
    if degree > MAX_MONOMIAL_DEGREE {
        return Err(Error::Degree {
            degree,
            max: MAX_MONOMIAL_DEGREE,
        });
    }
    if lo.iter().chain(hi).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "integration box must be finite".into(),
        ));
    }
    let rule = Rule::new(nodes)?;
    let grid = TensorGrid::new(&rule, lo, hi, &gaussian_panels(c, lo, hi));
    Ok(grid.integrate(|y| {
        let mono: f64 = y
            .iter()
            .zip(alpha)
            .map(|(v, &a)| v.powi(a as i32))
            .product();
        mono * gaussian_density(c, y)
    }))
}
