//! Detector runs and their JSON reports.

use serde::Serialize;
use serde_json::json;
use txnforge::detectors::gmm::gmm_fit_predict;
use txnforge::detectors::iforest::flag_top;
use txnforge::detectors::{
    train_test_split, ComponentRule, DecisionTree, GaussianMixture, GmmParams, IsolationForest,
    IsolationForestParams,
};
use txnforge::features::Selection;
use txnforge::{ConfusionMatrix, Label, MetricBundle, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Detector {
    Dtree {
        max_depth: usize,
    },
    Gmm {
        n_components: usize,
        max_iters: usize,
        tol: f64,
        var_floor: f64,
        suspicious: ComponentRule,
    },
    Iforest {
        n_trees: usize,
        subsample_size: Option<usize>,
        contamination: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    /// One row per agent, from `features.csv`.
    Agent,
    /// One row per simple-model event, holding its step.
    Event,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    /// `training` scores the rows the detector was fitted on.
    pub mode: &'static str,
    pub test_fraction: Option<f64>,
    pub train_rows: usize,
    pub evaluated_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub id: u32,
    pub label: Label,
    pub predicted: Label,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// Everything needed to audit one detector run. The metrics can always be
/// recomputed from `confusion_matrix`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub detector: Detector,
    pub feature_set: String,
    pub granularity: Granularity,
    pub columns: Vec<&'static str>,
    pub seed: u64,
    pub input_sha256: String,
    pub evaluation: Evaluation,
    /// Agents without transactions, left out of time-based feature sets.
    pub dropped: Vec<u32>,
    pub confusion_matrix: ConfusionMatrix,
    pub metrics: MetricBundle,
    pub model: serde_json::Value,
    pub predictions: Vec<Prediction>,
}

pub struct DetectInput {
    pub selection: Selection,
    pub feature_set: String,
    pub granularity: Granularity,
    pub input_sha256: String,
}

struct Outcome {
    predicted: Vec<Label>,
    scores: Option<Vec<f64>>,
    model: serde_json::Value,
}

fn fit_and_predict(
    detector: &Detector,
    train: &Selection,
    eval: &Selection,
    seed: u64,
) -> Result<Outcome> {
    match detector {
        Detector::Dtree { max_depth } => {
            let tree = DecisionTree::fit(train.x.view(), &train.labels, *max_depth)?;
            let thresholds: Vec<_> = tree
                .thresholds()
                .into_iter()
                .map(|(f, t)| json!({ "feature": train.columns[f], "threshold": t }))
                .collect();
            Ok(Outcome {
                predicted: tree.predict(eval.x.view()),
                scores: None,
                model: json!({ "thresholds": thresholds, "leaves": tree.leaf_count() }),
            })
        }
        Detector::Gmm {
            n_components,
            max_iters,
            tol,
            var_floor,
            suspicious,
        } => {
            let params = GmmParams {
                n_components: *n_components,
                max_iters: *max_iters,
                tol: *tol,
                var_floor: *var_floor,
                seed,
                suspicious: *suspicious,
            };
            let (model, predicted) = if std::ptr::eq(train, eval) {
                let out = gmm_fit_predict(train.x.view(), &params)?;
                (out.model, out.labels)
            } else {
                let model = GaussianMixture::fit(train.x.view(), &params)?;
                let predicted = model.predict(eval.x.view());
                (model, predicted)
            };
            let summary = json!({
                "weights": model.weights,
                "means": model.means.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
                "variances": model.variances.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
                "iterations": model.log_likelihood.len(),
                "converged": model.converged,
                "mean_log_likelihood": model.log_likelihood.last(),
                "reinitializations": model.reinitializations,
                "suspicious_component": model.suspicious_component(),
            });
            Ok(Outcome {
                predicted,
                scores: None,
                model: summary,
            })
        }
        Detector::Iforest {
            n_trees,
            subsample_size,
            contamination,
        } => {
            let params = IsolationForestParams {
                n_trees: *n_trees,
                subsample_size: *subsample_size,
                contamination: *contamination,
                max_depth: None,
                seed,
            };
            let forest = IsolationForest::fit(train.x.view(), &params)?;
            let scores = forest.score(eval.x.view());
            let predicted = flag_top(&scores, *contamination)
                .into_iter()
                .map(|f| if f { Label::Suspicious } else { Label::Normal })
                .collect();
            Ok(Outcome {
                predicted,
                scores: Some(scores),
                model: json!({
                    "subsample_size": forest.subsample_size,
                    "trees": forest.trees.len(),
                }),
            })
        }
    }
}

/// Fits `detector` and scores it, on the training rows or on a seeded
/// holdout when `test_fraction` is set.
pub fn run_detector(
    detector: Detector,
    input: DetectInput,
    seed: u64,
    test_fraction: Option<f64>,
) -> Result<DetectionReport> {
    let all = &input.selection;
    let (train, eval) = match test_fraction {
        Some(fraction) => {
            let (train_rows, test_rows) = train_test_split(all.labels.len(), fraction, seed)?;
            (Some(all.subset(&train_rows)), Some(all.subset(&test_rows)))
        }
        None => (None, None),
    };
    let train_ref = train.as_ref().unwrap_or(all);
    let eval_ref = eval.as_ref().unwrap_or(all);

    let outcome = fit_and_predict(&detector, train_ref, eval_ref, seed)?;
    let confusion_matrix = ConfusionMatrix::from_labels(&eval_ref.labels, &outcome.predicted)?;
    let predictions = eval_ref
        .row_ids
        .iter()
        .zip(&eval_ref.labels)
        .zip(&outcome.predicted)
        .enumerate()
        .map(|(i, ((&id, &label), &predicted))| Prediction {
            id,
            label,
            predicted,
            score: outcome.scores.as_ref().map(|s| s[i]),
        })
        .collect();

    Ok(DetectionReport {
        detector,
        feature_set: input.feature_set,
        granularity: input.granularity,
        columns: all.columns.clone(),
        seed,
        input_sha256: input.input_sha256,
        evaluation: Evaluation {
            mode: if test_fraction.is_some() {
                "holdout"
            } else {
                "training"
            },
            test_fraction,
            train_rows: train_ref.labels.len(),
            evaluated_rows: eval_ref.labels.len(),
        },
        dropped: all.dropped.clone(),
        metrics: confusion_matrix.metrics(),
        confusion_matrix,
        model: outcome.model,
        predictions,
    })
}
