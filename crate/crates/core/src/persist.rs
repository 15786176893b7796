//! Line-oriented TSV persistence.
//!
//! ```text
//! #NODES
//! <id>\t<PERSON|MOVIE|WIDGET|KEYWORD>\t<label>
//! #SEDGES
//! <HAS_KEYWORD|BELONGS_TO>\t<idA>\t<idB>
//! #INTERACTIONS
//! <personId>\t<itemId>\t<KIND>\t<polarity>\t<timestamp>
//! #END
//! ```
//!
//! Labels escape `\\`, tab, newline and carriage return with backslash
//! sequences. The closing `#END` line lets the loader detect truncation.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, NodeKind, StructuralEdgeKind};
use crate::interaction::{InteractionEdge, InteractionKind, InteractionType};

const NODES: &str = "#NODES";
const SEDGES: &str = "#SEDGES";
const INTERACTIONS: &str = "#INTERACTIONS";
const END: &str = "#END";

pub fn write_graph<W: Write>(graph: &Graph, mut out: W) -> Result<()> {
    writeln!(out, "{NODES}")?;
    for node in graph.nodes() {
        writeln!(out, "{}\t{}\t{}", node.id, node.kind, escape(&node.label))?;
    }
    writeln!(out, "{SEDGES}")?;
    for edge in graph.structural_edges() {
        writeln!(out, "{}\t{}\t{}", edge.kind, edge.a, edge.b)?;
    }
    writeln!(out, "{INTERACTIONS}")?;
    for e in graph.interactions() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            e.person,
            e.item,
            e.kind.interaction_type(),
            e.kind.polarity(),
            e.timestamp
        )?;
    }
    writeln!(out, "{END}")?;
    out.flush()?;
    Ok(())
}

pub fn save(graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    write_graph(graph, BufWriter::new(file))
}

pub fn load(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let file = File::open(path)?;
    read_graph(BufReader::new(file), &path.display().to_string())
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Start,
    Nodes,
    Edges,
    Interactions,
    Done,
}

/// Parses a graph; `source` names the input in error messages.
pub fn read_graph<R: BufRead>(input: R, source: &str) -> Result<Graph> {
    let mut graph = Graph::new();
    let mut section = Section::Start;
    let mut line_no = 0u64;
    for line in input.lines() {
        line_no += 1;
        let line = line?;
        let err = |msg: String| Error::parse(source, line_no, msg);
        let next = match line.as_str() {
            NODES => Some(Section::Nodes),
            SEDGES => Some(Section::Edges),
            INTERACTIONS => Some(Section::Interactions),
            END => Some(Section::Done),
            _ => None,
        };
        if let Some(next) = next {
            let expected = match section {
                Section::Start => Section::Nodes,
                Section::Nodes => Section::Edges,
                Section::Edges => Section::Interactions,
                Section::Interactions => Section::Done,
                Section::Done => return Err(err("content after #END".into())),
            };
            if next != expected {
                return Err(err(format!("unexpected section header {line:?}")));
            }
            section = next;
            continue;
        }
        match section {
            Section::Start => return Err(err("expected #NODES header".into())),
            Section::Done => return Err(err("content after #END".into())),
            Section::Nodes => {
                let [id, kind, label] = fields::<3>(&line).map_err(err)?;
                let id: u32 = id.parse().map_err(|_| err(format!("bad node id {id:?}")))?;
                let kind: NodeKind = kind.parse().map_err(err)?;
                if id as usize != graph.node_count() {
                    return Err(err(format!("node id {id} out of sequence")));
                }
                let label = unescape(label).map_err(err)?;
                let got = graph.add_node(kind, &label).map_err(|e| err(e.to_string()))?;
                if got.0 != id {
                    return Err(err(format!("duplicate node {kind} {label:?}")));
                }
            }
            Section::Edges => {
                let [kind, a, b] = fields::<3>(&line).map_err(err)?;
                let kind: StructuralEdgeKind = kind.parse().map_err(err)?;
                let a = parse_id(a).map_err(err)?;
                let b = parse_id(b).map_err(err)?;
                graph.add_structural_edge(kind, a, b).map_err(|e| err(e.to_string()))?;
            }
            Section::Interactions => {
                let [person, item, kind, polarity, timestamp] = fields::<5>(&line).map_err(err)?;
                let person = parse_id(person).map_err(err)?;
                let item = parse_id(item).map_err(err)?;
                let ty: InteractionType = kind.parse().map_err(err)?;
                let polarity: f64 = polarity
                    .parse()
                    .map_err(|_| err(format!("bad polarity {polarity:?}")))?;
                let timestamp: i64 = timestamp
                    .parse()
                    .map_err(|_| err(format!("bad timestamp {timestamp:?}")))?;
                let kind = InteractionKind::from_parts(ty, polarity).map_err(|e| err(e.to_string()))?;
                graph
                    .add_interaction(InteractionEdge::new(person, item, kind).at(timestamp))
                    .map_err(|e| err(e.to_string()))?;
            }
        }
    }
    if section != Section::Done {
        return Err(Error::parse(
            source,
            line_no + 1,
            "unexpected end of file (missing #END)",
        ));
    }
    Ok(graph)
}

fn fields<const N: usize>(line: &str) -> std::result::Result<[&str; N], String> {
    let parts: Vec<&str> = line.split('\t').collect();
    parts
        .try_into()
        .map_err(|p: Vec<&str>| format!("expected {N} tab-separated fields, found {}", p.len()))
}

fn parse_id(s: &str) -> std::result::Result<NodeId, String> {
    s.parse().map(NodeId).map_err(|_| format!("bad node id {s:?}"))
}

fn escape(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    for c in label.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> std::result::Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => {
                return Err(format!(
                    "bad escape sequence \\{}",
                    other.map(String::from).unwrap_or_default()
                ))
            }
        }
    }
    Ok(out)
}
