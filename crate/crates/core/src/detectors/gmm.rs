//! Gaussian mixture with diagonal covariances, fitted by expectation
//! maximization.
//!
//! Means are seeded with k-means++ on the raw features, every component
//! starts from the pooled per-feature variance and equal weights. Variances
//! are floored after each M-step; the floored value is still the constrained
//! maximizer, so the log-likelihood stays non-decreasing. A component whose
//! total responsibility vanishes is moved onto the worst-explained point and
//! fitting restarts its trace; after three such restarts the fit fails.
//!
//! Labels come from the component with the highest responsibility. Under the
//! default [`ComponentRule::SmallestWeight`] the component with the smallest
//! mixing weight is called suspicious (the highest index wins a tie) and a
//! single-component model flags nothing.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::abm::Label;
use crate::error::{Error, Result};
use crate::rng;

/// Responsibility mass below which a component counts as empty.
const EMPTY_COMPONENT: f64 = 1e-10;
const MAX_REINITS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "component")]
pub enum ComponentRule {
    SmallestWeight,
    /// Treat exactly this component as suspicious.
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub n_components: usize,
    pub max_iters: usize,
    /// Stop once the mean per-sample log-likelihood improves by less.
    pub tol: f64,
    pub var_floor: f64,
    pub seed: u64,
    pub suspicious: ComponentRule,
}

impl Default for GmmParams {
    fn default() -> Self {
        Self {
            n_components: 2,
            max_iters: 200,
            tol: 1e-6,
            var_floor: 1e-6,
            seed: crate::DEFAULT_SEED,
            suspicious: ComponentRule::SmallestWeight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub weights: Vec<f64>,
    /// `n_components x n_features`
    pub means: Array2<f64>,
    pub variances: Array2<f64>,
    /// Mean per-sample log-likelihood before each M-step, since the last
    /// re-initialization.
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
    pub reinitializations: usize,
    pub suspicious: ComponentRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmOutput {
    pub model: GaussianMixture,
    pub components: Vec<usize>,
    pub labels: Vec<Label>,
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

impl GaussianMixture {
    pub fn fit(x: ArrayView2<f64>, params: &GmmParams) -> Result<Self> {
        let (n, d) = x.dim();
        let k = params.n_components;
        if k == 0 {
            return Err(Error::Parameter("n_components must be at least 1".into()));
        }
        if n < k {
            return Err(Error::Data(format!("{n} rows cannot fit {k} components")));
        }
        if d == 0 {
            return Err(Error::Data("no feature columns".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("mixture inputs must be finite".into()));
        }
        if params.var_floor.is_nan()
            || params.var_floor <= 0.0
            || params.tol.is_nan()
            || params.tol < 0.0
        {
            return Err(Error::Parameter(
                "var_floor must be positive and tol non-negative".into(),
            ));
        }
        if let ComponentRule::Index(i) = params.suspicious {
            if i >= k {
                return Err(Error::Parameter(format!("component {i} out of range")));
            }
        }

        let pooled = pooled_variance(x, params.var_floor);
        let mut model = GaussianMixture {
            weights: vec![1.0 / k as f64; k],
            means: kmeans_plus_plus(x, k, params.seed),
            variances: Array2::from_shape_fn((k, d), |(_, j)| pooled[j]),
            log_likelihood: Vec::new(),
            converged: false,
            reinitializations: 0,
            suspicious: params.suspicious,
        };

        let mut resp = Array2::<f64>::zeros((n, k));
        for _ in 0..params.max_iters {
            let ll = model.e_step(x, &mut resp);
            let nk = resp.sum_axis(Axis(0));
            if let Some(empty) = nk.iter().position(|&m| m < EMPTY_COMPONENT) {
                if model.reinitializations == MAX_REINITS {
                    return Err(Error::Fit(format!(
                        "component {empty} collapsed after {MAX_REINITS} re-initializations"
                    )));
                }
                model.reinit_component(x, empty, &pooled);
                model.reinitializations += 1;
                model.log_likelihood.clear();
                continue;
            }
            let improved = model.log_likelihood.last().map(|&prev| ll - prev);
            model.log_likelihood.push(ll);
            if improved.is_some_and(|delta| delta < params.tol) {
                model.converged = true;
                break;
            }
            model.m_step(x, &resp, &nk, params.var_floor);
        }
        Ok(model)
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    fn log_component_densities(&self, row: ArrayView1<f64>, out: &mut [f64]) {
        for (c, slot) in out.iter_mut().enumerate() {
            let mut acc = self.weights[c].ln();
            for (j, &v) in row.iter().enumerate() {
                let var = self.variances[[c, j]];
                let diff = v - self.means[[c, j]];
                acc -= 0.5 * (LN_2PI + var.ln() + diff * diff / var);
            }
            *slot = acc;
        }
    }

    /// Fills responsibilities and returns the mean log-likelihood.
    fn e_step(&self, x: ArrayView2<f64>, resp: &mut Array2<f64>) -> f64 {
        let k = self.n_components();
        let mut buf = vec![0.0; k];
        let mut total = 0.0;
        for (row, mut r) in x.rows().into_iter().zip(resp.rows_mut()) {
            self.log_component_densities(row, &mut buf);
            let lse = log_sum_exp(&buf);
            total += lse;
            for c in 0..k {
                r[c] = (buf[c] - lse).exp();
            }
        }
        total / x.nrows() as f64
    }

    fn m_step(&mut self, x: ArrayView2<f64>, resp: &Array2<f64>, nk: &Array1<f64>, floor: f64) {
        let n = x.nrows() as f64;
        for c in 0..self.n_components() {
            let r = resp.column(c);
            self.weights[c] = nk[c] / n;
            for j in 0..x.ncols() {
                let col = x.column(j);
                let mean = r.dot(&col) / nk[c];
                let var = r
                    .iter()
                    .zip(col.iter())
                    .map(|(&w, &v)| w * (v - mean) * (v - mean))
                    .sum::<f64>()
                    / nk[c];
                self.means[[c, j]] = mean;
                self.variances[[c, j]] = var.max(floor);
            }
        }
        let sum: f64 = self.weights.iter().sum();
        self.weights.iter_mut().for_each(|w| *w /= sum);
    }

    fn reinit_component(&mut self, x: ArrayView2<f64>, c: usize, pooled: &[f64]) {
        let k = self.n_components();
        let mut buf = vec![0.0; k];
        let worst = x
            .rows()
            .into_iter()
            .map(|row| {
                self.log_component_densities(row, &mut buf);
                log_sum_exp(&buf)
            })
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.means.row_mut(c).assign(&x.row(worst));
        for (j, &v) in pooled.iter().enumerate() {
            self.variances[[c, j]] = v;
        }
        self.weights = vec![1.0 / k as f64; k];
    }

    /// Responsibility matrix for new rows.
    pub fn responsibilities(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut resp = Array2::zeros((x.nrows(), self.n_components()));
        self.e_step(x, &mut resp);
        resp
    }

    /// Mean per-sample log-likelihood of `x` under the model.
    pub fn score(&self, x: ArrayView2<f64>) -> f64 {
        let mut resp = Array2::zeros((x.nrows(), self.n_components()));
        self.e_step(x, &mut resp)
    }

    pub fn predict_components(&self, x: ArrayView2<f64>) -> Vec<usize> {
        let mut buf = vec![0.0; self.n_components()];
        x.rows()
            .into_iter()
            .map(|row| {
                self.log_component_densities(row, &mut buf);
                argmax_first(&buf)
            })
            .collect()
    }

    /// The component treated as suspicious, if any.
    pub fn suspicious_component(&self) -> Option<usize> {
        match self.suspicious {
            ComponentRule::Index(i) => Some(i),
            ComponentRule::SmallestWeight if self.n_components() < 2 => None,
            ComponentRule::SmallestWeight => {
                let mut best = 0;
                for (c, &w) in self.weights.iter().enumerate() {
                    if w <= self.weights[best] {
                        best = c;
                    }
                }
                Some(best)
            }
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<Label> {
        let suspicious = self.suspicious_component();
        self.predict_components(x)
            .into_iter()
            .map(|c| {
                if Some(c) == suspicious {
                    Label::Suspicious
                } else {
                    Label::Normal
                }
            })
            .collect()
    }
}

/// Fits a mixture and labels the training rows.
pub fn gmm_fit_predict(x: ArrayView2<f64>, params: &GmmParams) -> Result<GmmOutput> {
    let model = GaussianMixture::fit(x, params)?;
    let components = model.predict_components(x);
    let labels = model.predict(x);
    Ok(GmmOutput {
        model,
        components,
        labels,
    })
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn pooled_variance(x: ArrayView2<f64>, floor: f64) -> Vec<f64> {
    x.columns()
        .into_iter()
        .map(|col| {
            let mean = col.mean().unwrap_or(0.0);
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / col.len() as f64;
            var.max(floor)
        })
        .collect()
}

/// k-means++ seeding: the first center is a uniform row, each next one is
/// drawn with probability proportional to the squared distance to the
/// nearest chosen center (uniformly when all distances are zero).
fn kmeans_plus_plus(x: ArrayView2<f64>, k: usize, seed: u64) -> Array2<f64> {
    let n = x.nrows();
    let mut stream = rng::stream(seed);
    let mut centers = Array2::zeros((k, x.ncols()));
    let first = stream.random_range(0..n);
    centers.row_mut(0).assign(&x.row(first));
    let mut dist: Vec<f64> = x
        .rows()
        .into_iter()
        .map(|r| sq_dist(r, x.row(first)))
        .collect();

    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = stream.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in dist.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            stream.random_range(0..n)
        };
        centers.row_mut(c).assign(&x.row(pick));
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), x.row(pick)));
        }
    }
    centers
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum()
}
