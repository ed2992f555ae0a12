use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use txnforge::abm::{self, ModelConfig, ModelKind};
use txnforge::detectors::iforest::{flag_count, iforest_fit_score};
use txnforge::detectors::{
    DecisionTree, GaussianMixture, GmmParams, IsolationForest, IsolationForestParams,
};
use txnforge::features::{extract_features, select_columns};
use txnforge::{rng, FeatureSet, Label};

/// Expected isolation depth of `sorted[i]` under uniform random splits,
/// recursing over every gap the split can land in.
fn expected_depth(sorted: &[f64], i: usize) -> f64 {
    if sorted.len() == 1 {
        return 0.0;
    }
    let span = sorted[sorted.len() - 1] - sorted[0];
    let mut total = 1.0;
    for g in 0..sorted.len() - 1 {
        let p = (sorted[g + 1] - sorted[g]) / span;
        total += if i <= g {
            p * expected_depth(&sorted[..=g], i)
        } else {
            p * expected_depth(&sorted[g + 1..], i - g - 1)
        };
    }
    total
}

#[test]
fn unlimited_trees_match_expected_isolation_depth() {
    let points = [0.0, 1.0, 1.5, 4.0, 4.2, 9.0];
    let x = Array2::from_shape_vec((points.len(), 1), points.to_vec()).unwrap();
    let forest = IsolationForest::fit(
        x.view(),
        &IsolationForestParams {
            n_trees: 20_000,
            max_depth: Some(usize::MAX),
            ..Default::default()
        },
    )
    .unwrap();
    for (i, row) in x.rows().into_iter().enumerate() {
        let oracle = expected_depth(&points, i);
        let observed = forest.mean_path_length(row);
        assert!(
            (observed - oracle).abs() < 0.05,
            "point {i}: mean depth {observed}, expected {oracle}"
        );
    }
}

#[test]
fn flag_count_holds_on_random_inputs() {
    let mut stream = rng::stream(17);
    for n in [2usize, 3, 10, 99, 301] {
        let values: Vec<f64> = (0..n * 2)
            .map(|_| stream.random_range(0..5) as f64)
            .collect();
        let x = Array2::from_shape_vec((n, 2), values).unwrap();
        for contamination in [0.01, 0.1, 0.5] {
            let params = IsolationForestParams {
                n_trees: 20,
                contamination,
                ..Default::default()
            };
            let (_, out) = iforest_fit_score(x.view(), &params).unwrap();
            let flagged = out.flags.iter().filter(|&&f| f).count();
            assert_eq!(flagged, flag_count(contamination, n));
            assert_eq!(flagged, (contamination * n as f64 - 1e-9).ceil() as usize);
        }
    }
}

#[test]
fn gmm_recovers_three_clusters() {
    let centers = [-6.0, 0.0, 7.0];
    let mut stream = rng::stream(4);
    let mut values = Vec::new();
    for &c in &centers {
        let normal = Normal::new(c, 0.5).unwrap();
        values.extend((0..200).map(|_| normal.sample(&mut stream)));
    }
    let x = Array2::from_shape_vec((values.len(), 1), values).unwrap();
    let model = GaussianMixture::fit(
        x.view(),
        &GmmParams {
            n_components: 3,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(model.converged);
    let mut means: Vec<f64> = model.means.column(0).to_vec();
    means.sort_by(f64::total_cmp);
    for (m, c) in means.iter().zip(centers) {
        assert!((m - c).abs() < 0.15, "mean {m} vs {c}");
    }
    for w in &model.weights {
        assert!((w - 1.0 / 3.0).abs() < 0.02);
    }
}

#[test]
fn in_degree_stump_separates_the_default_graph_run() {
    let run = abm::run(&ModelConfig::default_for(ModelKind::Graph)).unwrap();
    let selection = select_columns(&extract_features(&run), FeatureSet::InDegreeOnly).unwrap();
    let tree = DecisionTree::fit(selection.x.view(), &selection.labels, 1).unwrap();
    assert_eq!(tree.predict(selection.x.view()), selection.labels);
    assert_eq!(tree.thresholds().len(), 1);
    assert!(selection.labels.contains(&Label::Suspicious));
}
