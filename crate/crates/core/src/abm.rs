//! Simple and graph agent-based models.
//!
//! Agents are numbered with all normal agents first (`0..n_normal`) followed
//! by the suspicious ones. Each agent owns a private random stream seeded from
//! the master seed and its id, so the draw order of one agent never depends
//! on any other agent. Steps are iterated in the outer loop and agents in
//! ascending id in the inner loop, which yields events already ordered by
//! `(step, sender_id)`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::schedule::{ProbTable, DEFAULT_MEAN_NUM_TXNS};
use crate::{DEFAULT_SEED, MINUTES_PER_STEP, STEPS_PER_DAY};

/// Smallest amount a transaction can carry.
pub const MIN_AMOUNT: Cents = Cents(1);
const AMOUNT_RESAMPLE_LIMIT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Suspicious,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Suspicious => "suspicious",
        }
    }

    pub fn is_suspicious(self) -> bool {
        self == Label::Suspicious
    }

    pub fn other(self) -> Label {
        match self {
            Label::Normal => Label::Suspicious,
            Label::Suspicious => Label::Normal,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Label::Normal),
            "suspicious" => Ok(Label::Suspicious),
            other => Err(Error::Data(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Simple,
    Graph,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Simple => "simple",
            ModelKind::Graph => "graph",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(ModelKind::Simple),
            "graph" => Ok(ModelKind::Graph),
            other => Err(Error::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

/// A currency amount in whole cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cents(pub i64);

impl Cents {
    /// Nearest whole-cent amount to a value in currency units.
    pub fn from_units(units: f64) -> Self {
        Cents((units * 100.0).round() as i64)
    }

    pub fn as_units(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

impl FromStr for Cents {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Data(format!("malformed amount {s:?}"));
        let (negative, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (whole, frac) = body.split_once('.').ok_or_else(bad)?;
        if frac.len() != 2 || whole.is_empty() {
            return Err(bad());
        }
        let whole: i64 = whole.parse().map_err(|_| bad())?;
        let frac: i64 = frac.parse().map_err(|_| bad())?;
        let cents = whole * 100 + frac;
        Ok(Cents(if negative { -cents } else { cents }))
    }
}

/// Behavior of one agent class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentTypeParams {
    pub label: Label,
    /// Center of the activity schedule, in hours.
    pub mean_hour: f64,
    #[serde(default = "default_mean_num_txns")]
    pub mean_num_txns: f64,
    pub amount_mean: f64,
    pub amount_std: f64,
    /// Probability that a transaction goes to an agent of the same type.
    pub pair_prob_same_type: f64,
}

fn default_mean_num_txns() -> f64 {
    DEFAULT_MEAN_NUM_TXNS
}

impl AgentTypeParams {
    pub fn default_normal() -> Self {
        Self {
            label: Label::Normal,
            mean_hour: 12.0,
            mean_num_txns: 4.0,
            amount_mean: 20.0,
            amount_std: 5.0,
            pair_prob_same_type: 0.9,
        }
    }

    pub fn default_suspicious() -> Self {
        Self {
            label: Label::Suspicious,
            mean_hour: 22.0,
            mean_num_txns: 10.0,
            amount_mean: 20.0,
            amount_std: 5.0,
            pair_prob_same_type: 0.7,
        }
    }

    fn validate(&self, expected: Label) -> Result<()> {
        if self.label != expected {
            return Err(Error::Config(format!(
                "{expected}_params carries label {}",
                self.label
            )));
        }
        if !(0.0..24.0).contains(&self.mean_hour) {
            return Err(Error::Config(format!(
                "{expected}: mean_hour {} outside [0, 24)",
                self.mean_hour
            )));
        }
        if !self.mean_num_txns.is_finite() || self.mean_num_txns < 0.0 {
            return Err(Error::Config(format!(
                "{expected}: mean_num_txns {} must be finite and non-negative",
                self.mean_num_txns
            )));
        }
        if !self.amount_mean.is_finite() {
            return Err(Error::Config(format!(
                "{expected}: amount_mean is not finite"
            )));
        }
        if !self.amount_std.is_finite() || self.amount_std < 0.0 {
            return Err(Error::Config(format!(
                "{expected}: amount_std {} must be finite and non-negative",
                self.amount_std
            )));
        }
        if !(0.0..=1.0).contains(&self.pair_prob_same_type) {
            return Err(Error::Config(format!(
                "{expected}: pair_prob_same_type {} outside [0, 1]",
                self.pair_prob_same_type
            )));
        }
        Ok(())
    }
}

fn default_steps() -> usize {
    STEPS_PER_DAY
}

fn default_minutes() -> u32 {
    MINUTES_PER_STEP
}

/// Full description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model_kind: ModelKind,
    pub n_normal: usize,
    pub n_suspicious: usize,
    pub normal_params: AgentTypeParams,
    pub suspicious_params: AgentTypeParams,
    pub seed: u64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_minutes")]
    pub minutes_per_step: u32,
    /// Pick receivers uniformly over all agents instead of by type pair
    /// probabilities.
    #[serde(default)]
    pub uniform_partner: bool,
}

impl ModelConfig {
    /// The reported configuration: 1000 normal agents around noon with four
    /// transactions a day, ten suspicious agents around 10 PM with ten.
    pub fn default_for(model_kind: ModelKind) -> Self {
        Self {
            model_kind,
            n_normal: 1000,
            n_suspicious: 10,
            normal_params: AgentTypeParams::default_normal(),
            suspicious_params: AgentTypeParams::default_suspicious(),
            seed: DEFAULT_SEED,
            steps: STEPS_PER_DAY,
            minutes_per_step: MINUTES_PER_STEP,
            uniform_partner: false,
        }
    }

    pub fn n_agents(&self) -> usize {
        self.n_normal + self.n_suspicious
    }

    pub fn params(&self, label: Label) -> &AgentTypeParams {
        match label {
            Label::Normal => &self.normal_params,
            Label::Suspicious => &self.suspicious_params,
        }
    }

    fn count(&self, label: Label) -> usize {
        match label {
            Label::Normal => self.n_normal,
            Label::Suspicious => self.n_suspicious,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents() == 0 {
            return Err(Error::Config("population is empty".into()));
        }
        if self.steps != STEPS_PER_DAY {
            return Err(Error::Config(format!(
                "steps must be {STEPS_PER_DAY}, got {}",
                self.steps
            )));
        }
        if self.minutes_per_step != MINUTES_PER_STEP {
            return Err(Error::Config(format!(
                "minutes_per_step must be {MINUTES_PER_STEP}, got {}",
                self.minutes_per_step
            )));
        }
        self.normal_params.validate(Label::Normal)?;
        self.suspicious_params.validate(Label::Suspicious)?;
        if self.model_kind == ModelKind::Graph && !self.uniform_partner {
            for label in [Label::Normal, Label::Suspicious] {
                let p = self.params(label).pair_prob_same_type;
                if self.count(label) > 0 && p < 1.0 && self.count(label.other()) == 0 {
                    return Err(Error::Config(format!(
                        "{label} agents route {:.0}% of transactions to {} agents, but there are none",
                        (1.0 - p) * 100.0,
                        label.other()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Parses a TOML config.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// On-disk form of [`ModelConfig`]. Field names match exactly; `model_kind`
/// and `seed` may be left out and supplied when resolving.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model_kind: Option<ModelKind>,
    pub n_normal: usize,
    pub n_suspicious: usize,
    pub normal_params: AgentTypeParams,
    pub suspicious_params: AgentTypeParams,
    pub seed: Option<u64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_minutes")]
    pub minutes_per_step: u32,
    #[serde(default)]
    pub uniform_partner: bool,
}

impl ConfigFile {
    /// Reads JSON when the extension is `.json`, TOML otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|ext| ext == "json");
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fills in the model kind and seed. An explicit `model_kind` wins over
    /// the file's; `seed` is the already-resolved seed.
    pub fn resolve(self, model_kind: Option<ModelKind>, seed: u64) -> Result<ModelConfig> {
        let model_kind = model_kind.or(self.model_kind).ok_or_else(|| {
            Error::Config("model kind given neither on the command line nor in the config".into())
        })?;
        let config = ModelConfig {
            model_kind,
            n_normal: self.n_normal,
            n_suspicious: self.n_suspicious,
            normal_params: self.normal_params,
            suspicious_params: self.suspicious_params,
            seed,
            steps: self.steps,
            minutes_per_step: self.minutes_per_step,
            uniform_partner: self.uniform_partner,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Environment variable consulted when neither a flag nor a config sets the
/// seed.
pub const SEED_ENV: &str = "TXNFORGE_SEED";

/// Seed precedence: flag, then config, then environment, then 42.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>, env: Option<&str>) -> Result<u64> {
    if let Some(seed) = flag.or(config) {
        return Ok(seed);
    }
    match env {
        Some(raw) => raw.trim().parse().map_err(|_| {
            Error::Config(format!(
                "{SEED_ENV}={raw:?} is not a 64-bit unsigned integer"
            ))
        }),
        None => Ok(DEFAULT_SEED),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agent {
    pub id: u32,
    pub label: Label,
}

/// One simulated transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransactionEvent {
    pub step: u8,
    pub sender_id: u32,
    /// Present only for graph runs.
    pub receiver_id: Option<u32>,
    /// Present only for graph runs.
    pub amount: Option<Cents>,
    pub sender_label: Label,
}

impl TransactionEvent {
    /// Clock time of the step start, rendered as `HH:MM`.
    pub fn time_hhmm(&self) -> String {
        step_clock(self.step as usize)
    }
}

pub fn step_clock(step: usize) -> String {
    let minutes = step * MINUTES_PER_STEP as usize;
    format!("{:02}:{:02}", minutes / 60, minutes % 60)
}

/// A completed simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub config: ModelConfig,
    pub agents: Vec<Agent>,
    pub events: Vec<TransactionEvent>,
}

impl SimRun {
    pub fn label_of(&self, id: u32) -> Option<Label> {
        self.agents
            .get(id as usize)
            .filter(|a| a.id == id)
            .map(|a| a.label)
    }

    pub fn is_graph(&self) -> bool {
        self.config.model_kind == ModelKind::Graph
    }
}

struct AgentState {
    agent: Agent,
    stream: Stream,
    amounts: [Cents; STEPS_PER_DAY],
}

fn population(config: &ModelConfig) -> Vec<Agent> {
    let normal = (0..config.n_normal).map(|_| Label::Normal);
    let suspicious = (0..config.n_suspicious).map(|_| Label::Suspicious);
    normal
        .chain(suspicious)
        .enumerate()
        .map(|(id, label)| Agent {
            id: id as u32,
            label,
        })
        .collect()
}

/// Draws a Gaussian amount, redrawing values below one cent and clamping
/// after [`AMOUNT_RESAMPLE_LIMIT`] failed attempts.
fn draw_amount(dist: &Normal<f64>, stream: &mut Stream) -> Cents {
    for _ in 0..AMOUNT_RESAMPLE_LIMIT {
        let cents = Cents::from_units(dist.sample(stream));
        if cents >= MIN_AMOUNT {
            return cents;
        }
    }
    MIN_AMOUNT
}

fn amount_table(params: &AgentTypeParams, stream: &mut Stream) -> Result<[Cents; STEPS_PER_DAY]> {
    let dist = Normal::new(params.amount_mean, params.amount_std)
        .map_err(|e| Error::Config(format!("amount distribution: {e}")))?;
    let mut table = [MIN_AMOUNT; STEPS_PER_DAY];
    for slot in table.iter_mut() {
        *slot = draw_amount(&dist, stream);
    }
    Ok(table)
}

/// Runs the configured model.
pub fn run(config: &ModelConfig) -> Result<SimRun> {
    match config.model_kind {
        ModelKind::Simple => run_simple(config),
        ModelKind::Graph => run_graph(config),
    }
}

/// One-sided cash events: each agent transacts at step `t` with its type's
/// table probability and no counterparty.
pub fn run_simple(config: &ModelConfig) -> Result<SimRun> {
    if config.model_kind != ModelKind::Simple {
        return Err(Error::Config("run_simple needs model_kind = simple".into()));
    }
    config.validate()?;
    let tables = Tables::new(config)?;
    let agents = population(config);
    let mut states: Vec<Stream> = agents
        .iter()
        .map(|a| rng::stream(rng::derive_agent_seed(config.seed, a.id as u64)))
        .collect();

    let mut events = Vec::new();
    for step in 0..STEPS_PER_DAY {
        for (agent, stream) in agents.iter().zip(states.iter_mut()) {
            if stream.random::<f64>() < tables.get(agent.label).txn_prob()[step] {
                events.push(TransactionEvent {
                    step: step as u8,
                    sender_id: agent.id,
                    receiver_id: None,
                    amount: None,
                    sender_label: agent.label,
                });
            }
        }
    }
    Ok(SimRun {
        config: config.clone(),
        agents,
        events,
    })
}

/// Sender-to-receiver transactions.
///
/// A transacting agent picks the receiver's type with its
/// `pair_prob_same_type` and then a receiver uniformly within that type
/// (itself included). The amount comes from the sender's amount table,
/// drawn once per agent at instantiation for all 96 steps.
pub fn run_graph(config: &ModelConfig) -> Result<SimRun> {
    if config.model_kind != ModelKind::Graph {
        return Err(Error::Config("run_graph needs model_kind = graph".into()));
    }
    config.validate()?;
    let tables = Tables::new(config)?;
    let agents = population(config);
    let mut states = agents
        .iter()
        .map(|&agent| {
            let mut stream = rng::stream(rng::derive_agent_seed(config.seed, agent.id as u64));
            let amounts = amount_table(config.params(agent.label), &mut stream)?;
            Ok(AgentState {
                agent,
                stream,
                amounts,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n_normal = config.n_normal as u32;
    let n_total = config.n_agents() as u32;
    let range_of = |label: Label| match label {
        Label::Normal => 0..n_normal,
        Label::Suspicious => n_normal..n_total,
    };

    let mut events = Vec::new();
    for step in 0..STEPS_PER_DAY {
        for state in states.iter_mut() {
            let label = state.agent.label;
            if state.stream.random::<f64>() >= tables.get(label).txn_prob()[step] {
                continue;
            }
            let receiver = if config.uniform_partner {
                state.stream.random_range(0..n_total)
            } else {
                let same = state.stream.random::<f64>() < config.params(label).pair_prob_same_type;
                let target = if same { label } else { label.other() };
                state.stream.random_range(range_of(target))
            };
            events.push(TransactionEvent {
                step: step as u8,
                sender_id: state.agent.id,
                receiver_id: Some(receiver),
                amount: Some(state.amounts[step]),
                sender_label: label,
            });
        }
    }
    Ok(SimRun {
        config: config.clone(),
        agents,
        events,
    })
}

struct Tables {
    normal: ProbTable,
    suspicious: ProbTable,
}

impl Tables {
    fn new(config: &ModelConfig) -> Result<Self> {
        let build = |p: &AgentTypeParams| ProbTable::build(p.mean_hour, p.mean_num_txns);
        Ok(Self {
            normal: build(&config.normal_params)?,
            suspicious: build(&config.suspicious_params)?,
        })
    }

    fn get(&self, label: Label) -> &ProbTable {
        match label {
            Label::Normal => &self.normal,
            Label::Suspicious => &self.suspicious,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_default() -> ModelConfig {
        ModelConfig::default_for(ModelKind::Simple)
    }

    #[test]
    fn empty_population_is_rejected() {
        let mut config = simple_default();
        config.n_normal = 0;
        config.n_suspicious = 0;
        assert!(matches!(run_simple(&config), Err(Error::Config(_))));
    }

    #[test]
    fn zero_rate_gives_no_events() {
        let mut config = simple_default();
        config.n_normal = 1;
        config.n_suspicious = 0;
        config.normal_params.mean_num_txns = 0.0;
        let run = run_simple(&config).unwrap();
        assert!(run.events.is_empty());
        assert_eq!(run.agents.len(), 1);
    }

    #[test]
    fn simple_events_have_no_counterparty() {
        let run = run_simple(&simple_default()).unwrap();
        assert!(!run.events.is_empty());
        assert!(run
            .events
            .iter()
            .all(|e| e.receiver_id.is_none() && e.amount.is_none()));
    }

    #[test]
    fn events_are_ordered_by_step_then_sender() {
        let mut config = simple_default();
        config.model_kind = ModelKind::Graph;
        let run = run_graph(&config).unwrap();
        assert!(run
            .events
            .windows(2)
            .all(|w| (w[0].step, w[0].sender_id) < (w[1].step, w[1].sender_id)));
    }

    #[test]
    fn wrong_model_kind_is_rejected() {
        assert!(run_graph(&simple_default()).is_err());
        assert!(run_simple(&ModelConfig::default_for(ModelKind::Graph)).is_err());
    }

    #[test]
    fn same_type_routing_never_crosses() {
        let mut config = ModelConfig::default_for(ModelKind::Graph);
        config.normal_params.pair_prob_same_type = 1.0;
        config.suspicious_params.pair_prob_same_type = 1.0;
        let run = run_graph(&config).unwrap();
        assert!(!run.events.is_empty());
        for e in &run.events {
            let receiver = run.label_of(e.receiver_id.unwrap()).unwrap();
            assert_eq!(receiver, e.sender_label);
        }
    }

    #[test]
    fn zero_std_amounts_are_exact() {
        let mut config = ModelConfig::default_for(ModelKind::Graph);
        config.normal_params.amount_std = 0.0;
        config.suspicious_params.amount_std = 0.0;
        let run = run_graph(&config).unwrap();
        assert!(run.events.iter().all(|e| e.amount == Some(Cents(2000))));
        assert!(run
            .events
            .iter()
            .all(|e| e.amount.unwrap().as_units() == 20.0));
    }

    #[test]
    fn negative_draws_are_truncated() {
        let mut config = ModelConfig::default_for(ModelKind::Graph);
        config.n_normal = 50;
        config.normal_params.amount_mean = 0.0;
        config.normal_params.amount_std = 1.0;
        config.suspicious_params.amount_mean = -1000.0;
        config.suspicious_params.amount_std = 1.0;
        let run = run_graph(&config).unwrap();
        assert!(run.events.iter().all(|e| e.amount.unwrap() >= MIN_AMOUNT));
        assert!(run
            .events
            .iter()
            .filter(|e| e.sender_label == Label::Suspicious)
            .all(|e| e.amount == Some(MIN_AMOUNT)));
    }

    #[test]
    fn routing_to_empty_population_is_a_config_error() {
        let mut config = ModelConfig::default_for(ModelKind::Graph);
        config.n_suspicious = 0;
        assert!(matches!(run_graph(&config), Err(Error::Config(_))));
        config.normal_params.pair_prob_same_type = 1.0;
        assert!(run_graph(&config).is_ok());
        // The simple model never routes, so the same population is fine.
        config.normal_params.pair_prob_same_type = 0.9;
        config.model_kind = ModelKind::Simple;
        assert!(run_simple(&config).is_ok());
    }

    #[test]
    fn uniform_partner_reaches_both_types() {
        let mut config = ModelConfig::default_for(ModelKind::Graph);
        config.uniform_partner = true;
        let run = run_graph(&config).unwrap();
        let normal_to_susp = run
            .events
            .iter()
            .filter(|e| e.sender_label == Label::Normal)
            .filter(|e| run.label_of(e.receiver_id.unwrap()) == Some(Label::Suspicious))
            .count();
        let normal_sent = run
            .events
            .iter()
            .filter(|e| e.sender_label == Label::Normal)
            .count();
        // 10 of 1010 receivers are suspicious.
        let frac = normal_to_susp as f64 / normal_sent as f64;
        assert!(frac < 0.03, "{frac}");
    }

    #[test]
    fn rejects_wrong_step_constants() {
        let mut config = simple_default();
        config.steps = 48;
        assert!(config.validate().is_err());
        let mut config = simple_default();
        config.minutes_per_step = 30;
        assert!(config.validate().is_err());
        let mut config = simple_default();
        config.normal_params.pair_prob_same_type = 1.5;
        assert!(config.validate().is_err());
        let mut config = simple_default();
        config.suspicious_params.label = Label::Normal;
        assert!(config.validate().is_err());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let text = r#"
            model_kind = "graph"
            n_normal = 3
            n_suspicious = 1
            seed = 1
            colour = "blue"
            [normal_params]
            label = "normal"
            mean_hour = 12.0
            amount_mean = 20.0
            amount_std = 5.0
            pair_prob_same_type = 0.9
            [suspicious_params]
            label = "suspicious"
            mean_hour = 22.0
            amount_mean = 20.0
            amount_std = 5.0
            pair_prob_same_type = 0.7
        "#;
        assert!(ModelConfig::from_toml(text).is_err());
        let ok = text.replace("colour = \"blue\"", "");
        let config = ModelConfig::from_toml(&ok).unwrap();
        assert_eq!(config.normal_params.mean_num_txns, 4.0);
        assert_eq!(config.steps, 96);
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(1), Some(2), Some("3")).unwrap(), 1);
        assert_eq!(resolve_seed(None, Some(2), Some("3")).unwrap(), 2);
        assert_eq!(resolve_seed(None, None, Some("3")).unwrap(), 3);
        assert_eq!(resolve_seed(None, None, None).unwrap(), 42);
        assert!(resolve_seed(None, None, Some("x")).is_err());
    }

    #[test]
    fn config_file_resolution() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        let mut value = serde_json::to_value(ModelConfig::default_for(ModelKind::Graph)).unwrap();
        let obj = value.as_object_mut().unwrap();
        obj.remove("model_kind");
        obj.remove("seed");
        std::fs::write(&path, value.to_string()).unwrap();

        let file = ConfigFile::load(&path).unwrap();
        assert!(file.clone().resolve(None, 1).is_err());
        let config = file.resolve(Some(ModelKind::Simple), 9).unwrap();
        assert_eq!(config.model_kind, ModelKind::Simple);
        assert_eq!(config.seed, 9);

        assert!(matches!(
            ConfigFile::load(&dir.path().join("missing.toml")),
            Err(Error::Io { .. })
        ));
        let bad = dir.path().join("bad.toml");
        std::fs::write(&bad, "n_normal = \"many\"").unwrap();
        assert!(matches!(ConfigFile::load(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn json_round_trip() {
        let config = ModelConfig::default_for(ModelKind::Graph);
        let text = serde_json::to_string(&config).unwrap();
        assert_eq!(ModelConfig::from_json(&text).unwrap(), config);
    }

    #[test]
    fn clock_rendering() {
        assert_eq!(step_clock(88), "22:00");
        assert_eq!(step_clock(0), "00:00");
        assert_eq!(step_clock(95), "23:45");
        assert_eq!(step_clock(49), "12:15");
    }

    #[test]
    fn cents_format_and_parse() {
        assert_eq!(Cents(2000).to_string(), "20.00");
        assert_eq!(Cents(5).to_string(), "0.05");
        assert_eq!(Cents(-123).to_string(), "-1.23");
        assert_eq!("19.07".parse::<Cents>().unwrap(), Cents(1907));
        assert_eq!("-1.23".parse::<Cents>().unwrap(), Cents(-123));
        assert!("19.7".parse::<Cents>().is_err());
        assert!("abc".parse::<Cents>().is_err());
    }
}
