//! Timestamped edge-list loading.
//!
//! One event per line, whitespace separated: `u v`, `u v timestamp`, or
//! `u v weight timestamp`. Lines starting with a comment prefix are skipped.
//! Line order is the timeline. Self-loops are dropped and counted; duplicate
//! edges are kept in the stream (applying them is a no-op) and counted.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphEvent, NetworkInstance, NodeId};
use crate::source::EventStream;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("no edges found")]
    Empty,
    #[error("initial stamp {initial} is not below the {total} available stamps")]
    InitialStampOutOfRange { initial: usize, total: usize },
    #[error("line {line}: distinct-stamp mode needs a timestamp column")]
    MissingTimestamp { line: usize },
    #[error("unknown dataset preset `{0}` (expected facebook, wikitalk, citation or enron)")]
    UnknownPreset(String),
}

/// How the initial offset and the stream are counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StampMode {
    /// Every line is one stamp.
    #[default]
    Events,
    /// Consecutive lines sharing a timestamp form one stamp.
    DistinctStamps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub path: PathBuf,
    /// Stamps folded into the warm-up instance.
    pub initial_stamp: usize,
    /// Stamps consumed per selection tick.
    pub cadence: u32,
    /// Input edges are directed; they are folded to undirected either way.
    pub directed: bool,
    pub comment_prefixes: Vec<String>,
    pub stamp_mode: StampMode,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            path: PathBuf::new(),
            initial_stamp: 0,
            cadence: 1,
            directed: false,
            comment_prefixes: vec!["%".into(), "#".into()],
            stamp_mode: StampMode::Events,
        }
    }
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>, initial_stamp: usize, cadence: u32) -> Self {
        DatasetSpec {
            path: path.into(),
            initial_stamp,
            cadence,
            ..DatasetSpec::default()
        }
    }

    pub const PRESETS: [&'static str; 4] = ["facebook", "wikitalk", "citation", "enron"];

    /// The experimental protocol for the four public temporal datasets.
    pub fn preset(name: &str, path: impl Into<PathBuf>) -> Result<Self, IngestError> {
        let (initial, cadence, mode, directed) = match name.to_ascii_lowercase().as_str() {
            "facebook" => (400_000, 13, StampMode::Events, false),
            "wikitalk" => (27_000, 1, StampMode::Events, true),
            "citation" => (375, 1, StampMode::DistinctStamps, true),
            "enron" => (100_000, 2, StampMode::Events, true),
            _ => return Err(IngestError::UnknownPreset(name.to_string())),
        };
        Ok(DatasetSpec {
            stamp_mode: mode,
            directed,
            ..DatasetSpec::new(path, initial, cadence)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawEdge {
    pub u: u64,
    pub v: u64,
    pub weight: Option<f64>,
    pub timestamp: Option<i64>,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub lines: usize,
    pub events: usize,
    pub distinct_stamps: usize,
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub warmup: NetworkInstance,
    pub stream: EventStream,
    pub report: IngestReport,
}

/// Parses an edge list. Self-loops are removed and counted.
pub fn parse_edge_list<R: BufRead>(
    reader: R,
    comment_prefixes: &[String],
) -> Result<(Vec<RawEdge>, IngestReport), IngestError> {
    let mut edges = Vec::new();
    let mut report = IngestReport::default();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| IngestError::Malformed {
            line: lineno,
            message: e.to_string(),
        })?;
        report.lines += 1;
        let trimmed = line.trim();
        if trimmed.is_empty()
            || comment_prefixes
                .iter()
                .any(|p| trimmed.starts_with(p.as_str()))
        {
            continue;
        }
        let edge = parse_line(trimmed, lineno)?;
        if edge.u == edge.v {
            report.self_loops_dropped += 1;
            continue;
        }
        edges.push(edge);
    }
    if edges.is_empty() {
        return Err(IngestError::Empty);
    }
    report.events = edges.len();
    report.distinct_stamps = group_by_stamp(&edges).len();
    Ok((edges, report))
}

fn parse_line(line: &str, lineno: usize) -> Result<RawEdge, IngestError> {
    let bad = |message: String| IngestError::Malformed {
        line: lineno,
        message,
    };
    let fields: Vec<&str> = line.split_whitespace().collect();
    if !(2..=4).contains(&fields.len()) {
        return Err(bad(format!(
            "expected 2 to 4 columns, found {}",
            fields.len()
        )));
    }
    let node = |s: &str| {
        s.parse::<u64>()
            .map_err(|_| bad(format!("node id `{s}` is not a non-negative integer")))
    };
    let stamp = |s: &str| {
        s.parse::<i64>()
            .or_else(|_| s.parse::<f64>().map(|f| f as i64))
            .map_err(|_| bad(format!("timestamp `{s}` is not a number")))
    };
    let (weight, timestamp) = match fields.len() {
        2 => (None, None),
        3 => (None, Some(stamp(fields[2])?)),
        _ => {
            let w = fields[2]
                .parse::<f64>()
                .map_err(|_| bad(format!("weight `{}` is not a number", fields[2])))?;
            (Some(w), Some(stamp(fields[3])?))
        }
    };
    Ok(RawEdge {
        u: node(fields[0])?,
        v: node(fields[1])?,
        weight,
        timestamp,
        line: lineno,
    })
}

/// Splits `edges` into runs of equal timestamp. Edges without a timestamp
/// each form their own run.
fn group_by_stamp(edges: &[RawEdge]) -> Vec<&[RawEdge]> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=edges.len() {
        let split = i == edges.len()
            || edges[i].timestamp.is_none()
            || edges[i].timestamp != edges[start].timestamp;
        if split {
            groups.push(&edges[start..i]);
            start = i;
        }
    }
    groups
}

/// Builds the warm-up instance from the first `initial_stamp` stamps and a
/// stream of the rest.
pub fn load_from_reader<R: BufRead>(
    reader: R,
    spec: &DatasetSpec,
) -> Result<LoadedDataset, IngestError> {
    let (edges, mut report) = parse_edge_list(reader, &spec.comment_prefixes)?;
    let stamps: Vec<&[RawEdge]> = match spec.stamp_mode {
        StampMode::Events => edges.chunks(1).collect(),
        StampMode::DistinctStamps => {
            if let Some(e) = edges.iter().find(|e| e.timestamp.is_none()) {
                return Err(IngestError::MissingTimestamp { line: e.line });
            }
            group_by_stamp(&edges)
        }
    };
    if spec.initial_stamp >= stamps.len() {
        return Err(IngestError::InitialStampOutOfRange {
            initial: spec.initial_stamp,
            total: stamps.len(),
        });
    }
    let event = |(i, e): (usize, &RawEdge)| GraphEvent::edge(e.u, e.v, i as u64);

    let mut seen = HashSet::new();
    for e in &edges {
        if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
            report.duplicates_dropped += 1;
        }
    }
    let nodes: HashSet<u64> = edges.iter().flat_map(|e| [e.u, e.v]).collect();
    report.nodes = nodes.len();
    report.edges = seen.len();

    let mut warmup = NetworkInstance::new();
    for (i, group) in stamps[..spec.initial_stamp].iter().enumerate() {
        for e in group.iter() {
            warmup
                .apply_event(&event((i, e)))
                .expect("self-loops were dropped while parsing");
        }
    }
    let stream = EventStream::from_stamps(
        stamps
            .iter()
            .enumerate()
            .skip(spec.initial_stamp)
            .map(|(i, group)| group.iter().map(|e| event((i, e))).collect()),
    );
    Ok(LoadedDataset {
        warmup,
        stream,
        report,
    })
}

pub fn load(spec: &DatasetSpec) -> Result<LoadedDataset, IngestError> {
    let file = File::open(&spec.path).map_err(|source| IngestError::Io {
        path: spec.path.clone(),
        source,
    })?;
    load_from_reader(BufReader::new(file), spec)
}

/// Writes events as `u v stamp` lines, readable by [`load`].
pub fn write_edge_list<'a, W: Write>(
    mut out: W,
    events: impl IntoIterator<Item = &'a GraphEvent>,
) -> std::io::Result<()> {
    for e in events {
        writeln!(out, "{} {} {}", e.u, e.v, e.stamp)?;
    }
    out.flush()
}

/// Writes an instance's edges as `u v` lines in insertion order.
pub fn write_instance<W: Write>(mut out: W, instance: &NetworkInstance) -> std::io::Result<()> {
    let g = instance.graph();
    for &(a, b) in g.edges() {
        let (u, v): (NodeId, NodeId) = (g.id(a), g.id(b));
        writeln!(out, "{u} {v}")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::EventSource;

    fn load_str(text: &str, spec: &DatasetSpec) -> Result<LoadedDataset, IngestError> {
        load_from_reader(text.as_bytes(), spec)
    }

    #[test]
    fn two_line_file() {
        let spec = DatasetSpec::new("", 1, 1);
        let mut d = load_str("1 2 10\n2 3 20\n", &spec).unwrap();
        assert_eq!(d.warmup.node_count(), 2);
        assert_eq!(d.warmup.edge_count(), 1);
        assert!(d.warmup.opinions().iter().all(|&x| x == 0.0));
        assert_eq!(d.warmup.access_count(), 0);
        assert_eq!(d.stream.len(), 1);
        assert_eq!(
            d.stream.next_stamp().unwrap(),
            vec![GraphEvent::edge(2u64, 3u64, 1)]
        );
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let spec = DatasetSpec::default();
        let err = load_str("% header\n1 2\n3 x\n", &spec).unwrap_err();
        assert!(
            matches!(err, IngestError::Malformed { line: 3, .. }),
            "{err}"
        );
        let err = load_str("1 2 3 4 5\n", &spec).unwrap_err();
        assert!(matches!(err, IngestError::Malformed { line: 1, .. }));
    }

    #[test]
    fn empty_input_rejected() {
        let spec = DatasetSpec::default();
        assert!(matches!(load_str("", &spec), Err(IngestError::Empty)));
        assert!(matches!(
            load_str("# only\n%c\n", &spec),
            Err(IngestError::Empty)
        ));
        assert!(matches!(load_str("4 4\n", &spec), Err(IngestError::Empty)));
    }

    #[test]
    fn initial_stamp_must_be_in_range() {
        let spec = DatasetSpec::new("", 2, 1);
        assert!(matches!(
            load_str("1 2\n2 3\n", &spec),
            Err(IngestError::InitialStampOutOfRange {
                initial: 2,
                total: 2
            })
        ));
    }

    #[test]
    fn canonicalization_counts() {
        let text = "1 2 1.0 5\n2 1 1.0 6\n3 3 1.0 7\n2 3 1.0 8\n";
        let d = load_str(text, &DatasetSpec::default()).unwrap();
        assert_eq!(d.report.events, 3);
        assert_eq!(d.report.self_loops_dropped, 1);
        assert_eq!(d.report.duplicates_dropped, 1);
        assert_eq!((d.report.nodes, d.report.edges), (3, 2));
    }

    #[test]
    fn distinct_stamp_grouping() {
        let text = "1 2 10\n2 3 10\n3 4 11\n4 5 12\n5 6 12\n";
        let spec = DatasetSpec {
            stamp_mode: StampMode::DistinctStamps,
            ..DatasetSpec::new("", 1, 1)
        };
        let d = load_str(text, &spec).unwrap();
        assert_eq!(d.report.distinct_stamps, 3);
        assert_eq!(d.warmup.edge_count(), 2);
        assert_eq!(d.stream.len(), 2);
        assert_eq!(d.stream.event_count(), 3);
        let no_stamps = load_str("1 2\n2 3\n", &spec).unwrap_err();
        assert!(matches!(
            no_stamps,
            IngestError::MissingTimestamp { line: 1 }
        ));
    }

    #[test]
    fn replay_reproduces_final_graph() {
        let text = "1 2\n2 3\n1 2\n3 1\n4 5\n5 6\n6 4\n4 6\n2 5\n";
        let full = load_str(text, &DatasetSpec::default()).unwrap();
        let d = load_str(text, &DatasetSpec::new("", 3, 1)).unwrap();
        let mut inst = d.warmup.clone();
        for ev in d.stream.events() {
            inst.apply_event(ev).unwrap();
        }
        assert_eq!(inst.node_count(), full.report.nodes);
        assert_eq!(inst.edge_count(), full.report.edges);
    }

    #[test]
    fn write_then_load_round_trips() {
        let events = vec![
            GraphEvent::edge(1u64, 2u64, 0),
            GraphEvent::edge(2u64, 3u64, 1),
            GraphEvent::edge(7u64, 3u64, 2),
        ];
        let mut buf = Vec::new();
        write_edge_list(&mut buf, &events).unwrap();
        let d = load_str(
            std::str::from_utf8(&buf).unwrap(),
            &DatasetSpec::new("", 1, 1),
        )
        .unwrap();
        assert_eq!(
            d.stream.events().copied().collect::<Vec<_>>(),
            events[1..].to_vec()
        );
    }

    #[test]
    fn presets() {
        let fb = DatasetSpec::preset("Facebook", "fb.txt").unwrap();
        assert_eq!((fb.initial_stamp, fb.cadence), (400_000, 13));
        let cit = DatasetSpec::preset("citation", "c.txt").unwrap();
        assert_eq!((cit.initial_stamp, cit.cadence), (375, 1));
        assert_eq!(cit.stamp_mode, StampMode::DistinctStamps);
        assert!(DatasetSpec::preset("orkut", "o.txt").is_err());
    }
}
