//! Classification metrics and the two-sample Kolmogorov-Smirnov test.
//!
//! Suspicious is the positive class. Any metric whose denominator is zero is
//! reported as 0 rather than NaN.

use serde::{Deserialize, Serialize};

use crate::abm::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn from_labels(truth: &[Label], predicted: &[Label]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Data(format!(
                "{} truth labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut cm = ConfusionMatrix::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t.is_suspicious(), p.is_suspicious()) {
                (true, true) => cm.tp += 1,
                (false, true) => cm.fp += 1,
                (false, false) => cm.tn += 1,
                (true, false) => cm.fn_ += 1,
            }
        }
        Ok(cm)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn metrics(&self) -> MetricBundle {
        compute_metrics(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mcc: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> MetricBundle {
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_);
    MetricBundle {
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        precision,
        recall,
        f1,
        mcc: mcc(cm),
    }
}

/// Matthews correlation coefficient.
///
/// The denominator product is formed exactly in integers, so relabeling
/// symmetries (flipping predictions, swapping class roles) hold bit for bit.
pub fn mcc(cm: &ConfusionMatrix) -> f64 {
    let (tp, fp, tn, fn_) = (cm.tp as i128, cm.fp as i128, cm.tn as i128, cm.fn_ as i128);
    let num = tp * tn - fp * fn_;
    let factors = [
        (cm.tp + cm.fp) as u128,
        (cm.tp + cm.fn_) as u128,
        (cm.tn + cm.fp) as u128,
        (cm.tn + cm.fn_) as u128,
    ];
    if factors.contains(&0) {
        return 0.0;
    }
    let den = match factors.iter().try_fold(1u128, |acc, &f| acc.checked_mul(f)) {
        Some(product) => (product as f64).sqrt(),
        None => factors.iter().map(|&f| (f as f64).sqrt()).product(),
    };
    (num as f64 / den).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Number of terms kept in the Kolmogorov series.
pub const KS_SERIES_TERMS: usize = 100;

/// Two-sample Kolmogorov-Smirnov test.
///
/// `D` is the largest gap between the two empirical CDFs. The p-value is the
/// asymptotic Kolmogorov tail `Q(lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2)`
/// at `lambda = D sqrt(n m / (n + m))`, truncated after [`KS_SERIES_TERMS`]
/// terms. Below `lambda = 0.2` the tail is 1 to double precision and the
/// series is not evaluated.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Parameter(
            "KS test needs two non-empty samples".into(),
        ));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Parameter("KS samples contain NaN".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());

    // The gap at each point is |i/n - j/m| = |i m - j n| / (n m); keeping the
    // integer numerator makes D the correctly rounded rational.
    let (mut i, mut j) = (0, 0);
    let mut gap: u128 = 0;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        gap = gap.max((i as u128 * m as u128).abs_diff(j as u128 * n as u128));
    }
    let d = gap as f64 / (n as u128 * m as u128) as f64;

    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_tail(d * en),
        n_a: n,
        n_b: m,
    })
}

fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=KS_SERIES_TERMS {
        let k = k as f64;
        sum += sign * (-2.0 * k * k * lambda * lambda).exp();
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
