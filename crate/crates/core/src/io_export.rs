//! Run artifacts on disk.
//!
//! A run directory holds `transactions.csv`, `agents.csv`, `edges.csv` (graph
//! runs only), `config.json` and `manifest.json`. Every writer is
//! deterministic: fixed column order, amounts with exactly two decimals, and
//! no timestamps, so the same run always produces the same bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::abm::{Agent, Cents, Label, ModelKind, SimRun, TransactionEvent};
use crate::error::{Error, Result};
use crate::features::AgentFeatures;
use crate::{ModelConfig, STEPS_PER_DAY};

pub const TRANSACTIONS_FILE: &str = "transactions.csv";
pub const AGENTS_FILE: &str = "agents.csv";
pub const EDGES_FILE: &str = "edges.csv";
pub const CONFIG_FILE: &str = "config.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const TRANSACTIONS_HEADER: &str = "step,time_hhmm,sender_id,receiver_id,amount,sender_label";
pub const AGENTS_HEADER: &str = "agent_id,label";
pub const EDGES_HEADER: &str = "source,target,step,amount";
pub const FEATURES_HEADER: &str = "agent_id,label,txn_mean_time,num_txns,in_degree,out_degree";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Data rows, excluding the header.
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub model_kind: ModelKind,
    pub seed: u64,
    pub agents: usize,
    pub events: usize,
    pub files: BTreeMap<String, FileEntry>,
}

/// Paths of a written run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub transactions: PathBuf,
    pub agents: PathBuf,
    pub edges: Option<PathBuf>,
    pub config: PathBuf,
    pub manifest: PathBuf,
    pub summary: Manifest,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn transactions_csv(run: &SimRun) -> String {
    let mut out = String::with_capacity(32 * (run.events.len() + 1));
    out.push_str(TRANSACTIONS_HEADER);
    out.push('\n');
    for e in &run.events {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.step,
            e.time_hhmm(),
            e.sender_id,
            opt(e.receiver_id),
            opt(e.amount),
            e.sender_label
        );
    }
    out
}

pub fn agents_csv(run: &SimRun) -> String {
    let mut out = String::from(AGENTS_HEADER);
    out.push('\n');
    for a in &run.agents {
        let _ = writeln!(out, "{},{}", a.id, a.label);
    }
    out
}

pub fn edges_csv(run: &SimRun) -> String {
    let mut out = String::from(EDGES_HEADER);
    out.push('\n');
    for e in &run.events {
        if let (Some(target), Some(amount)) = (e.receiver_id, e.amount) {
            let _ = writeln!(out, "{},{},{},{}", e.sender_id, target, e.step, amount);
        }
    }
    out
}

pub fn config_json(config: &ModelConfig) -> String {
    let mut text = serde_json::to_string_pretty(config).expect("config serializes");
    text.push('\n');
    text
}

/// Writes all artifacts of `run` into `dir`, creating it if needed.
pub fn write_run(run: &SimRun, dir: &Path) -> Result<RunArtifacts> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = BTreeMap::new();
    let mut put = |name: &str, body: String, rows: usize| -> Result<PathBuf> {
        let path = dir.join(name);
        write_file(&path, body.as_bytes())?;
        files.insert(
            name.to_string(),
            FileEntry {
                rows,
                sha256: sha256_hex(body.as_bytes()),
            },
        );
        Ok(path)
    };

    let transactions = put(TRANSACTIONS_FILE, transactions_csv(run), run.events.len())?;
    let agents = put(AGENTS_FILE, agents_csv(run), run.agents.len())?;
    let edges = if run.is_graph() {
        let n = run
            .events
            .iter()
            .filter(|e| e.receiver_id.is_some())
            .count();
        Some(put(EDGES_FILE, edges_csv(run), n)?)
    } else {
        // Stale edges from an earlier graph run would contradict the manifest.
        let stale = dir.join(EDGES_FILE);
        if stale.exists() {
            fs::remove_file(&stale).map_err(|e| Error::io(&stale, e))?;
        }
        None
    };
    let config = put(CONFIG_FILE, config_json(&run.config), 0)?;

    let summary = Manifest {
        model_kind: run.config.model_kind,
        seed: run.config.seed,
        agents: run.agents.len(),
        events: run.events.len(),
        files,
    };
    let manifest = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&summary).expect("manifest serializes");
    text.push('\n');
    write_file(&manifest, text.as_bytes())?;

    Ok(RunArtifacts {
        dir: dir.to_path_buf(),
        transactions,
        agents,
        edges,
        config,
        manifest,
        summary,
    })
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = read_file(&path)?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json { path, source })
}

/// Checks every file listed in the manifest against its recorded hash.
pub fn verify_manifest(dir: &Path) -> Result<Manifest> {
    let manifest = read_manifest(dir)?;
    for (name, entry) in &manifest.files {
        let bytes = read_file(&dir.join(name))?;
        if sha256_hex(&bytes) != entry.sha256 {
            return Err(Error::Data(format!(
                "{name} does not match its manifest hash"
            )));
        }
    }
    Ok(manifest)
}

fn csv_reader(path: &Path, expected_header: &str) -> Result<csv::Reader<fs::File>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let header = reader
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != expected_header {
        return Err(Error::Data(format!(
            "{}: expected header {expected_header:?}, found {header:?}",
            path.display()
        )));
    }
    Ok(reader)
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, name: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| {
        Error::Data(format!(
            "{}:{line}: bad {name} value {raw:?}",
            path.display()
        ))
    })
}

fn parse_opt<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    name: &str,
    raw: &str,
) -> Result<Option<T>> {
    if raw.is_empty() {
        Ok(None)
    } else {
        parse_field(path, line, name, raw).map(Some)
    }
}

/// Reads a run written by [`write_run`].
pub fn read_run(dir: &Path) -> Result<SimRun> {
    let config_path = dir.join(CONFIG_FILE);
    let config: ModelConfig =
        serde_json::from_slice(&read_file(&config_path)?).map_err(|source| Error::Json {
            path: config_path.clone(),
            source,
        })?;

    let agents_path = dir.join(AGENTS_FILE);
    let mut agents = Vec::new();
    for (i, record) in csv_reader(&agents_path, AGENTS_HEADER)?
        .records()
        .enumerate()
    {
        let record = record.map_err(|e| Error::csv(&agents_path, e))?;
        let line = i + 2;
        let id: u32 = parse_field(&agents_path, line, "agent_id", &record[0])?;
        if id as usize != agents.len() {
            return Err(Error::Data(format!(
                "{}:{line}: agent ids must be 0..n in order",
                agents_path.display()
            )));
        }
        agents.push(Agent {
            id,
            label: parse_field(&agents_path, line, "label", &record[1])?,
        });
    }

    let tx_path = dir.join(TRANSACTIONS_FILE);
    let mut events = Vec::new();
    for (i, record) in csv_reader(&tx_path, TRANSACTIONS_HEADER)?
        .records()
        .enumerate()
    {
        let record = record.map_err(|e| Error::csv(&tx_path, e))?;
        let line = i + 2;
        let step: u8 = parse_field(&tx_path, line, "step", &record[0])?;
        if step as usize >= STEPS_PER_DAY {
            return Err(Error::Data(format!(
                "{}:{line}: step {step} out of range",
                tx_path.display()
            )));
        }
        let event = TransactionEvent {
            step,
            sender_id: parse_field(&tx_path, line, "sender_id", &record[2])?,
            receiver_id: parse_opt(&tx_path, line, "receiver_id", &record[3])?,
            amount: parse_opt::<Cents>(&tx_path, line, "amount", &record[4])?,
            sender_label: parse_field(&tx_path, line, "sender_label", &record[5])?,
        };
        let known = |id: u32| (id as usize) < agents.len();
        if !known(event.sender_id) || event.receiver_id.is_some_and(|r| !known(r)) {
            return Err(Error::Data(format!(
                "{}:{line}: unknown agent id",
                tx_path.display()
            )));
        }
        if agents[event.sender_id as usize].label != event.sender_label {
            return Err(Error::Data(format!(
                "{}:{line}: sender label disagrees with agents.csv",
                tx_path.display()
            )));
        }
        events.push(event);
    }
    Ok(SimRun {
        config,
        agents,
        events,
    })
}

pub fn features_csv(features: &[AgentFeatures]) -> String {
    let mut out = String::from(FEATURES_HEADER);
    out.push('\n');
    for f in features {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            f.agent_id,
            f.label,
            opt(f.txn_mean_time),
            f.num_txns,
            f.in_degree,
            f.out_degree
        );
    }
    out
}

pub fn write_features(features: &[AgentFeatures], path: &Path) -> Result<()> {
    write_file(path, features_csv(features).as_bytes())
}

pub fn read_features(path: &Path) -> Result<Vec<AgentFeatures>> {
    let mut rows = Vec::new();
    for (i, record) in csv_reader(path, FEATURES_HEADER)?.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let line = i + 2;
        rows.push(AgentFeatures {
            agent_id: parse_field(path, line, "agent_id", &record[0])?,
            label: parse_field(path, line, "label", &record[1])?,
            txn_mean_time: parse_opt(path, line, "txn_mean_time", &record[2])?,
            num_txns: parse_field(path, line, "num_txns", &record[3])?,
            in_degree: parse_field(path, line, "in_degree", &record[4])?,
            out_degree: parse_field(path, line, "out_degree", &record[5])?,
        });
    }
    Ok(rows)
}

/// Numeric values of one named column of any headed CSV file; empty cells
/// are skipped.
pub fn read_numeric_column(path: &Path, column: &str) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let idx = reader
        .headers()
        .map_err(|e| Error::csv(path, e))?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| {
            Error::Parameter(format!("{}: no column named {column:?}", path.display()))
        })?;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let raw = record.get(idx).unwrap_or("");
        if !raw.is_empty() {
            values.push(parse_field(path, i + 2, column, raw)?);
        }
    }
    Ok(values)
}

/// Renders a graph run as a DOT digraph.
///
/// With `window_start_hour`, only edges in the four steps of that hour are
/// kept, along with the agents they touch. Otherwise every agent appears.
pub fn graph_dot(run: &SimRun, window_start_hour: Option<u32>) -> Result<String> {
    if !run.is_graph() {
        return Err(Error::Unsupported("DOT export needs a graph run".into()));
    }
    let window = match window_start_hour {
        Some(h) if h >= 24 => {
            return Err(Error::Parameter(format!("window hour {h} outside [0, 24)")));
        }
        Some(h) => Some(h as u8 * 4..h as u8 * 4 + 4),
        None => None,
    };
    let edges: Vec<&TransactionEvent> = run
        .events
        .iter()
        .filter(|e| window.as_ref().is_none_or(|w| w.contains(&e.step)))
        .collect();
    let mut included = vec![window.is_none(); run.agents.len()];
    for e in &edges {
        included[e.sender_id as usize] = true;
        if let Some(r) = e.receiver_id {
            included[r as usize] = true;
        }
    }

    let mut out = String::from("digraph transactions {\n");
    for agent in run.agents.iter().filter(|a| included[a.id as usize]) {
        let _ = writeln!(out, "  {} [class=\"{}\"];", agent.id, agent.label);
    }
    for e in edges {
        let (Some(target), Some(amount)) = (e.receiver_id, e.amount) else {
            continue;
        };
        let _ = writeln!(
            out,
            "  {} -> {} [step={}, amount=\"{}\"];",
            e.sender_id, target, e.step, amount
        );
    }
    out.push_str("}\n");
    Ok(out)
}

pub fn export_graph_dot(run: &SimRun, path: &Path, window_start_hour: Option<u32>) -> Result<()> {
    write_file(path, graph_dot(run, window_start_hour)?.as_bytes())
}

/// Events per hour of day for normal (`[0]`) and suspicious (`[1]`) senders.
pub fn hourly_histogram(run: &SimRun) -> [[u64; 24]; 2] {
    let mut hist = [[0u64; 24]; 2];
    for e in &run.events {
        hist[e.sender_label.is_suspicious() as usize][e.step as usize / 4] += 1;
    }
    hist
}

const SVG_WIDTH: f64 = 720.0;
const SVG_HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_BOTTOM: f64 = 50.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_RIGHT: f64 = 20.0;

/// Hourly transaction histogram with both classes overlaid.
///
/// Each bar is a `<rect>` carrying `data-class`, `data-hour` and
/// `data-count`, so counts can be recovered from the file.
pub fn histogram_svg(run: &SimRun) -> String {
    let hist = hourly_histogram(run);
    let max = hist.iter().flatten().copied().max().unwrap_or(0).max(1) as f64;
    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let bar_w = plot_w / 24.0;
    let base = SVG_HEIGHT - MARGIN_BOTTOM;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>"#
    );
    for (label, fill) in [(Label::Normal, "#1f77b4"), (Label::Suspicious, "#ff7f0e")] {
        let _ = writeln!(
            out,
            r#"<g class="{label}" fill="{fill}" fill-opacity="0.6">"#
        );
        for (hour, &count) in hist[label.is_suspicious() as usize].iter().enumerate() {
            let h = count as f64 / max * plot_h;
            let _ = writeln!(
                out,
                r#"<rect data-class="{label}" data-hour="{hour}" data-count="{count}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                MARGIN_LEFT + hour as f64 * bar_w,
                base - h,
                bar_w,
                h
            );
        }
        out.push_str("</g>\n");
    }
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN_LEFT}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#,
        SVG_WIDTH - MARGIN_RIGHT
    );
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{base}" stroke="black"/>"#
    );
    for hour in (0..24).step_by(2) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{hour}</text>"#,
            MARGIN_LEFT + (hour as f64 + 0.5) * bar_w,
            base + 14.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">hour of day</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        SVG_HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">transactions (max {})</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        max as u64
    );
    let _ = writeln!(
        out,
        r##"<text x="{:.2}" y="20" font-size="12" fill="#1f77b4">normal</text><text x="{:.2}" y="20" font-size="12" fill="#ff7f0e">suspicious</text>"##,
        SVG_WIDTH - 170.0,
        SVG_WIDTH - 110.0
    );
    out.push_str("</svg>\n");
    out
}

pub fn plot_histogram_svg(run: &SimRun, path: &Path) -> Result<()> {
    write_file(path, histogram_svg(run).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abm::{run, ModelKind};

    fn small(kind: ModelKind) -> SimRun {
        let mut config = ModelConfig::default_for(kind);
        config.n_normal = 30;
        config.n_suspicious = 3;
        run(&config).unwrap()
    }

    #[test]
    fn simple_row_has_empty_optionals() {
        let mut r = small(ModelKind::Simple);
        r.events = vec![TransactionEvent {
            step: 48,
            sender_id: 17,
            receiver_id: None,
            amount: None,
            sender_label: Label::Normal,
        }];
        let text = transactions_csv(&r);
        assert_eq!(text.lines().nth(1), Some("48,12:00,17,,,normal"));
    }

    #[test]
    fn graph_rows_carry_two_decimals() {
        let r = small(ModelKind::Graph);
        let text = transactions_csv(&r);
        for line in text.lines().skip(1) {
            let amount = line.split(',').nth(4).unwrap();
            let (_, frac) = amount.split_once('.').unwrap();
            assert_eq!(frac.len(), 2, "{line}");
        }
        assert_eq!(edges_csv(&r).lines().count(), r.events.len() + 1);
    }

    #[test]
    fn write_then_read_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        for kind in [ModelKind::Graph, ModelKind::Simple] {
            let r = small(kind);
            let art = write_run(&r, dir.path()).unwrap();
            assert_eq!(art.edges.is_some(), kind == ModelKind::Graph);
            assert_eq!(read_run(dir.path()).unwrap(), r);
            verify_manifest(dir.path()).unwrap();
        }
        // The simple run replaced the graph run; no stale edge file remains.
        assert!(!dir.path().join(EDGES_FILE).exists());
    }

    #[test]
    fn manifest_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        write_run(&small(ModelKind::Graph), dir.path()).unwrap();
        let path = dir.path().join(AGENTS_FILE);
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("99,normal\n");
        fs::write(&path, text).unwrap();
        assert!(verify_manifest(dir.path()).is_err());
    }

    #[test]
    fn read_rejects_inconsistent_labels() {
        let dir = tempfile::tempdir().unwrap();
        let r = small(ModelKind::Graph);
        write_run(&r, dir.path()).unwrap();
        let path = dir.path().join(TRANSACTIONS_FILE);
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[1] = if lines[1].ends_with(",normal") {
            lines[1].replace(",normal", ",suspicious")
        } else {
            lines[1].replace(",suspicious", ",normal")
        };
        fs::write(&path, lines.join("\n") + "\n").unwrap();
        assert!(matches!(read_run(dir.path()), Err(Error::Data(_))));
    }

    #[test]
    fn features_round_trip() {
        let r = small(ModelKind::Graph);
        let feats = crate::features::extract_features(&r);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        write_features(&feats, &path).unwrap();
        assert_eq!(read_features(&path).unwrap(), feats);
        assert_eq!(
            read_numeric_column(&path, "num_txns").unwrap().len(),
            feats.len()
        );
        assert!(read_numeric_column(&path, "nope").is_err());
    }

    #[test]
    fn dot_minimal_graph() {
        let mut r = small(ModelKind::Graph);
        r.config.n_normal = 1;
        r.config.n_suspicious = 1;
        r.agents = vec![
            Agent {
                id: 0,
                label: Label::Normal,
            },
            Agent {
                id: 1,
                label: Label::Suspicious,
            },
        ];
        r.events = vec![TransactionEvent {
            step: 5,
            sender_id: 1,
            receiver_id: Some(0),
            amount: Some(Cents(2000)),
            sender_label: Label::Suspicious,
        }];
        let dot = graph_dot(&r, None).unwrap();
        assert_eq!(
            dot,
            "digraph transactions {\n  0 [class=\"normal\"];\n  1 [class=\"suspicious\"];\n  1 -> 0 [step=5, amount=\"20.00\"];\n}\n"
        );
        assert!(graph_dot(&r, Some(3)).unwrap().lines().count() == 2);
        assert!(graph_dot(&r, Some(24)).is_err());
    }

    #[test]
    fn dot_rejects_simple_runs() {
        assert!(matches!(
            graph_dot(&small(ModelKind::Simple), None),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn dot_keeps_self_loops() {
        let mut r = small(ModelKind::Graph);
        r.events.truncate(1);
        let s = r.events[0].sender_id;
        r.events[0].receiver_id = Some(s);
        let dot = graph_dot(&r, None).unwrap();
        assert!(dot.contains(&format!("  {s} -> {s} ")));
    }

    #[test]
    fn empty_histogram_renders() {
        let mut r = small(ModelKind::Simple);
        r.events.clear();
        let svg = histogram_svg(&r);
        assert_eq!(svg.matches("data-count=\"0\"").count(), 48);
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn histogram_conserves_events() {
        let r = small(ModelKind::Graph);
        let hist = hourly_histogram(&r);
        let total: u64 = hist.iter().flatten().sum();
        assert_eq!(total as usize, r.events.len());
        assert_eq!(histogram_svg(&r), histogram_svg(&r));
    }
}
