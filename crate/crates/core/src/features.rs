//! Per-agent features for the detectors.
//!
//! Columns always appear in the order
//! `txn_mean_time, num_txns, in_degree, out_degree`, filtered by the
//! requested [`FeatureSet`].

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::abm::{Label, SimRun};
use crate::error::{Error, Result};
use crate::STEPS_PER_DAY;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentFeatures {
    pub agent_id: u32,
    pub label: Label,
    /// Mean step of the agent's sent transactions; `None` without any.
    pub txn_mean_time: Option<f64>,
    pub num_txns: u32,
    pub in_degree: u32,
    pub out_degree: u32,
}

/// How `txn_mean_time` averages step indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeAverage {
    /// Plain mean of step indices. A 10 PM agent with some 2 AM
    /// transactions gets pulled towards midday.
    #[default]
    Arithmetic,
    /// Mean angle on the 96-step circle, mapped back to `[0, 96)`.
    Circular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    TimeOnly,
    All,
    InDegreeOnly,
    OutDegreeOnly,
}

pub const COLUMN_NAMES: [&str; 4] = ["txn_mean_time", "num_txns", "in_degree", "out_degree"];

impl FeatureSet {
    pub const ALL_SETS: [FeatureSet; 4] = [
        FeatureSet::TimeOnly,
        FeatureSet::All,
        FeatureSet::InDegreeOnly,
        FeatureSet::OutDegreeOnly,
    ];

    /// Indices into [`COLUMN_NAMES`].
    pub fn columns(self) -> &'static [usize] {
        match self {
            FeatureSet::TimeOnly => &[0, 1],
            FeatureSet::All => &[0, 1, 2, 3],
            FeatureSet::InDegreeOnly => &[2],
            FeatureSet::OutDegreeOnly => &[3],
        }
    }

    pub fn column_names(self) -> Vec<&'static str> {
        self.columns().iter().map(|&c| COLUMN_NAMES[c]).collect()
    }

    pub fn uses_time(self) -> bool {
        self.columns().contains(&0)
    }

    /// Short name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            FeatureSet::TimeOnly => "time",
            FeatureSet::All => "all",
            FeatureSet::InDegreeOnly => "in_degree",
            FeatureSet::OutDegreeOnly => "out_degree",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time" | "time_only" => Ok(FeatureSet::TimeOnly),
            "all" => Ok(FeatureSet::All),
            "in_degree" | "in_degree_only" => Ok(FeatureSet::InDegreeOnly),
            "out_degree" | "out_degree_only" => Ok(FeatureSet::OutDegreeOnly),
            other => Err(Error::Parameter(format!("unknown feature set {other:?}"))),
        }
    }
}

pub fn extract_features(run: &SimRun) -> Vec<AgentFeatures> {
    extract_features_with(run, TimeAverage::Arithmetic)
}

pub fn extract_features_with(run: &SimRun, average: TimeAverage) -> Vec<AgentFeatures> {
    let n = run.agents.len();
    let mut in_degree = vec![0u32; n];
    let mut out_degree = vec![0u32; n];
    let mut sum = vec![0u64; n];
    let mut sin_sum = vec![0f64; n];
    let mut cos_sum = vec![0f64; n];

    for event in &run.events {
        let sender = event.sender_id as usize;
        out_degree[sender] += 1;
        sum[sender] += event.step as u64;
        if average == TimeAverage::Circular {
            let angle = step_angle(event.step as f64);
            sin_sum[sender] += angle.sin();
            cos_sum[sender] += angle.cos();
        }
        if let Some(receiver) = event.receiver_id {
            in_degree[receiver as usize] += 1;
        }
    }

    run.agents
        .iter()
        .map(|agent| {
            let i = agent.id as usize;
            let count = out_degree[i];
            let txn_mean_time = (count > 0).then(|| match average {
                TimeAverage::Arithmetic => sum[i] as f64 / count as f64,
                TimeAverage::Circular => circular_step(sin_sum[i], cos_sum[i]),
            });
            AgentFeatures {
                agent_id: agent.id,
                label: agent.label,
                txn_mean_time,
                num_txns: count,
                in_degree: in_degree[i],
                out_degree: count,
            }
        })
        .collect()
}

fn step_angle(step: f64) -> f64 {
    step / STEPS_PER_DAY as f64 * std::f64::consts::TAU
}

fn circular_step(sin_sum: f64, cos_sum: f64) -> f64 {
    let angle = sin_sum.atan2(cos_sum).rem_euclid(std::f64::consts::TAU);
    let step = angle / std::f64::consts::TAU * STEPS_PER_DAY as f64;
    // rem_euclid can round up to exactly TAU.
    if step >= STEPS_PER_DAY as f64 {
        0.0
    } else {
        step
    }
}

/// A detector input: rows, labels, and which agents they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub x: Array2<f64>,
    pub labels: Vec<Label>,
    pub row_ids: Vec<u32>,
    /// Agents left out because a time column had no value.
    pub dropped: Vec<u32>,
    pub columns: Vec<&'static str>,
}

impl Selection {
    /// The given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Selection {
        Selection {
            x: self.x.select(ndarray::Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            row_ids: rows.iter().map(|&r| self.row_ids[r]).collect(),
            dropped: self.dropped.clone(),
            columns: self.columns.clone(),
        }
    }
}

pub fn select_columns(features: &[AgentFeatures], set: FeatureSet) -> Result<Selection> {
    let columns = set.columns();
    let mut values = Vec::with_capacity(features.len() * columns.len());
    let mut labels = Vec::with_capacity(features.len());
    let mut row_ids = Vec::with_capacity(features.len());
    let mut dropped = Vec::new();

    for row in features {
        let time = match row.txn_mean_time {
            Some(t) => t,
            None if set.uses_time() => {
                dropped.push(row.agent_id);
                continue;
            }
            // Never read: the set has no time column.
            None => f64::NAN,
        };
        let full = [
            time,
            row.num_txns as f64,
            row.in_degree as f64,
            row.out_degree as f64,
        ];
        values.extend(columns.iter().map(|&c| full[c]));
        labels.push(row.label);
        row_ids.push(row.agent_id);
    }

    if labels.is_empty() {
        return Err(Error::Data(format!(
            "no rows left for feature set {set} ({} dropped)",
            dropped.len()
        )));
    }
    let x = Array2::from_shape_vec((labels.len(), columns.len()), values)
        .expect("row-major buffer matches shape");
    Ok(Selection {
        x,
        labels,
        row_ids,
        dropped,
        columns: set.column_names(),
    })
}

/// Per-event inputs for the simple model: one row per event holding its
/// step, labeled by the sender's type.
pub fn event_steps(run: &SimRun) -> Result<Selection> {
    if run.events.is_empty() {
        return Err(Error::Data("run has no events".into()));
    }
    let values: Vec<f64> = run.events.iter().map(|e| e.step as f64).collect();
    Ok(Selection {
        x: Array2::from_shape_vec((values.len(), 1), values).expect("single column"),
        labels: run.events.iter().map(|e| e.sender_label).collect(),
        row_ids: (0..run.events.len() as u32).collect(),
        dropped: Vec::new(),
        columns: vec!["step"],
    })
}

/// Mean of each feature column per class, skipping missing times.
pub fn class_means(features: &[AgentFeatures], label: Label) -> [Option<f64>; 4] {
    let rows: Vec<&AgentFeatures> = features.iter().filter(|f| f.label == label).collect();
    let mean = |values: Vec<f64>| {
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    };
    [
        mean(rows.iter().filter_map(|r| r.txn_mean_time).collect()),
        mean(rows.iter().map(|r| r.num_txns as f64).collect()),
        mean(rows.iter().map(|r| r.in_degree as f64).collect()),
        mean(rows.iter().map(|r| r.out_degree as f64).collect()),
    ]
}
