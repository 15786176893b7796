//! Append-only in-memory property graph.
//!
//! Nodes are persons, movies, widgets and keywords. Structural edges
//! (`HasKeyword`, `BelongsTo`) are undirected and deduplicated; interaction
//! edges (person → item) form a multiset and are indexed both per person and
//! per (person, item) pair so weight lookups stay local.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{check_legal, InteractionEdge};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Person,
    Movie,
    Widget,
    Keyword,
}

impl NodeKind {
    /// Movies and widgets are the recommendable assets.
    pub fn is_asset(self) -> bool {
        matches!(self, NodeKind::Movie | NodeKind::Widget)
    }

    pub fn token(self) -> &'static str {
        match self {
            NodeKind::Person => "PERSON",
            NodeKind::Movie => "MOVIE",
            NodeKind::Widget => "WIDGET",
            NodeKind::Keyword => "KEYWORD",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "PERSON" => Ok(NodeKind::Person),
            "MOVIE" => Ok(NodeKind::Movie),
            "WIDGET" => Ok(NodeKind::Widget),
            "KEYWORD" => Ok(NodeKind::Keyword),
            other => Err(format!("unknown node kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StructuralEdgeKind {
    /// Movie ↔ Keyword.
    HasKeyword,
    /// Widget ↔ Movie.
    BelongsTo,
}

impl StructuralEdgeKind {
    /// The (canonical first, second) endpoint kinds.
    pub fn endpoints(self) -> (NodeKind, NodeKind) {
        match self {
            StructuralEdgeKind::HasKeyword => (NodeKind::Movie, NodeKind::Keyword),
            StructuralEdgeKind::BelongsTo => (NodeKind::Widget, NodeKind::Movie),
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            StructuralEdgeKind::HasKeyword => "HAS_KEYWORD",
            StructuralEdgeKind::BelongsTo => "BELONGS_TO",
        }
    }
}

impl fmt::Display for StructuralEdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for StructuralEdgeKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "HAS_KEYWORD" => Ok(StructuralEdgeKind::HasKeyword),
            "BELONGS_TO" => Ok(StructuralEdgeKind::BelongsTo),
            other => Err(format!("unknown structural edge kind {other:?}")),
        }
    }
}

/// A structural edge in canonical orientation (see [`StructuralEdgeKind::endpoints`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StructuralEdge {
    pub kind: StructuralEdgeKind,
    pub a: NodeId,
    pub b: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub label: String,
}

#[derive(Debug, Clone, Default)]
struct Adjacency {
    // both kept sorted ascending
    has_keyword: Vec<NodeId>,
    belongs_to: Vec<NodeId>,
}

impl Adjacency {
    fn list(&self, kind: StructuralEdgeKind) -> &[NodeId] {
        match kind {
            StructuralEdgeKind::HasKeyword => &self.has_keyword,
            StructuralEdgeKind::BelongsTo => &self.belongs_to,
        }
    }

    fn list_mut(&mut self, kind: StructuralEdgeKind) -> &mut Vec<NodeId> {
        match kind {
            StructuralEdgeKind::HasKeyword => &mut self.has_keyword,
            StructuralEdgeKind::BelongsTo => &mut self.belongs_to,
        }
    }
}

/// Keyword labels are stored lowercased and trimmed; other labels are only trimmed.
pub fn normalize_label(kind: NodeKind, label: &str) -> String {
    let trimmed = label.trim();
    match kind {
        NodeKind::Keyword => trimmed.to_lowercase(),
        _ => trimmed.to_string(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    lookup: HashMap<(NodeKind, String), NodeId>,
    adjacency: Vec<Adjacency>,
    structural_edge_count: usize,
    interactions: Vec<InteractionEdge>,
    by_person: Vec<Vec<u32>>,
    by_item: Vec<Vec<u32>>,
    by_pair: HashMap<(NodeId, NodeId), Vec<u32>>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn structural_edge_count(&self) -> usize {
        self.structural_edge_count
    }

    pub fn interaction_count(&self) -> usize {
        self.interactions.len()
    }

    /// Adds a node, or returns the existing id for the same (kind, label).
    pub fn add_node(&mut self, kind: NodeKind, label: &str) -> Result<NodeId> {
        let label = normalize_label(kind, label);
        if label.is_empty() {
            return Err(Error::Validation(format!("empty label for {kind} node")));
        }
        if let Some(&id) = self.lookup.get(&(kind, label.clone())) {
            return Ok(id);
        }
        let id =
            NodeId(u32::try_from(self.nodes.len()).map_err(|_| Error::Validation("node id space exhausted".into()))?);
        self.lookup.insert((kind, label.clone()), id);
        self.nodes.push(Node { id, kind, label });
        self.adjacency.push(Adjacency::default());
        self.by_person.push(Vec::new());
        self.by_item.push(Vec::new());
        Ok(id)
    }

    pub fn find(&self, kind: NodeKind, label: &str) -> Option<NodeId> {
        self.lookup.get(&(kind, normalize_label(kind, label))).copied()
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(id.index()).ok_or(Error::NotFound(id))
    }

    pub fn kind(&self, id: NodeId) -> Result<NodeKind> {
        self.node(id).map(|n| n.kind)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Ids of all nodes of `kind`, ascending.
    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(move |n| n.kind == kind).map(|n| n.id)
    }

    /// Adds an undirected structural edge. Endpoints may be given in either order.
    /// Re-adding an existing edge is a no-op.
    pub fn add_structural_edge(&mut self, kind: StructuralEdgeKind, a: NodeId, b: NodeId) -> Result<()> {
        let ka = self.kind(a)?;
        let kb = self.kind(b)?;
        let (want_a, want_b) = kind.endpoints();
        let ok = (ka, kb) == (want_a, want_b) || (ka, kb) == (want_b, want_a);
        if !ok {
            return Err(Error::Schema(format!(
                "{kind} requires ({want_a}, {want_b}) endpoints, got ({ka}, {kb})"
            )));
        }
        let list = self.adjacency[a.index()].list_mut(kind);
        match list.binary_search(&b) {
            Ok(_) => return Ok(()),
            Err(pos) => list.insert(pos, b),
        }
        let list = self.adjacency[b.index()].list_mut(kind);
        if let Err(pos) = list.binary_search(&a) {
            list.insert(pos, a);
        }
        self.structural_edge_count += 1;
        Ok(())
    }

    /// Structural neighbors of `n` over `kind`, ascending by id.
    pub fn neighbors(&self, n: NodeId, kind: StructuralEdgeKind) -> Result<&[NodeId]> {
        self.adjacency
            .get(n.index())
            .map(|adj| adj.list(kind))
            .ok_or(Error::NotFound(n))
    }

    pub fn degree(&self, n: NodeId, kind: StructuralEdgeKind) -> Result<usize> {
        self.neighbors(n, kind).map(<[NodeId]>::len)
    }

    /// All structural edges in canonical orientation, ordered by (first endpoint, second endpoint).
    pub fn structural_edges(&self) -> impl Iterator<Item = StructuralEdge> + '_ {
        self.nodes.iter().flat_map(move |node| {
            let adj = &self.adjacency[node.id.index()];
            let keywords: &[NodeId] = if node.kind == NodeKind::Movie {
                &adj.has_keyword
            } else {
                &[]
            };
            let keyword_edges = keywords.iter().map(move |&k| StructuralEdge {
                kind: StructuralEdgeKind::HasKeyword,
                a: node.id,
                b: k,
            });
            let movies: &[NodeId] = if node.kind == NodeKind::Widget {
                &adj.belongs_to
            } else {
                &[]
            };
            let widget_edges = movies.iter().map(move |&m| StructuralEdge {
                kind: StructuralEdgeKind::BelongsTo,
                a: node.id,
                b: m,
            });
            keyword_edges.chain(widget_edges)
        })
    }

    /// Appends an interaction after checking it against the interaction schema.
    pub fn add_interaction(&mut self, edge: InteractionEdge) -> Result<()> {
        let person_kind = self.kind(edge.person)?;
        let item_kind = self.kind(edge.item)?;
        if person_kind != NodeKind::Person {
            return Err(Error::Schema(format!(
                "interaction source {} is a {person_kind}, not a PERSON",
                edge.person
            )));
        }
        check_legal(edge.kind, item_kind)?;
        let idx = u32::try_from(self.interactions.len())
            .map_err(|_| Error::Validation("interaction index space exhausted".into()))?;
        self.by_person[edge.person.index()].push(idx);
        self.by_item[edge.item.index()].push(idx);
        self.by_pair.entry((edge.person, edge.item)).or_default().push(idx);
        self.interactions.push(edge);
        Ok(())
    }

    /// Every interaction in insertion order.
    pub fn interactions(&self) -> &[InteractionEdge] {
        &self.interactions
    }

    /// Interactions issued by `person`, in insertion order.
    pub fn interactions_of(&self, person: NodeId) -> impl Iterator<Item = &InteractionEdge> + '_ {
        self.by_person
            .get(person.index())
            .map(Vec::as_slice)
            .unwrap_or_default()
            .iter()
            .map(move |&i| &self.interactions[i as usize])
    }

    /// Interactions targeting `item`, in insertion order.
    pub fn interactions_on(&self, item: NodeId) -> impl Iterator<Item = &InteractionEdge> + '_ {
        self.by_item
            .get(item.index())
            .map(Vec::as_slice)
            .unwrap_or_default()
            .iter()
            .map(move |&i| &self.interactions[i as usize])
    }

    /// Interactions between one (person, item) pair, in insertion order.
    pub fn pair_interactions(&self, person: NodeId, item: NodeId) -> impl Iterator<Item = &InteractionEdge> + '_ {
        self.by_pair
            .get(&(person, item))
            .map(Vec::as_slice)
            .unwrap_or_default()
            .iter()
            .map(move |&i| &self.interactions[i as usize])
    }

    pub fn has_pair(&self, person: NodeId, item: NodeId) -> bool {
        self.by_pair.contains_key(&(person, item))
    }

    /// A copy of this graph with the same nodes and structural edges, keeping
    /// only the interactions accepted by `keep`. Node ids are preserved.
    pub fn with_interactions_filtered<F>(&self, mut keep: F) -> Graph
    where
        F: FnMut(&InteractionEdge) -> bool,
    {
        let mut out = Graph {
            nodes: self.nodes.clone(),
            lookup: self.lookup.clone(),
            adjacency: self.adjacency.clone(),
            structural_edge_count: self.structural_edge_count,
            interactions: Vec::new(),
            by_person: vec![Vec::new(); self.nodes.len()],
            by_item: vec![Vec::new(); self.nodes.len()],
            by_pair: HashMap::new(),
        };
        for edge in self.interactions.iter().filter(|e| keep(e)) {
            // already validated against the identical node set
            out.add_interaction(*edge).expect("edge valid in source graph");
        }
        out
    }

    /// Checks that every edge endpoint exists and every adjacency list is mirrored.
    pub fn check_integrity(&self) -> Result<()> {
        for node in &self.nodes {
            for kind in [StructuralEdgeKind::HasKeyword, StructuralEdgeKind::BelongsTo] {
                for &other in self.adjacency[node.id.index()].list(kind) {
                    if !self.contains(other) {
                        return Err(Error::NotFound(other));
                    }
                    if self.adjacency[other.index()]
                        .list(kind)
                        .binary_search(&node.id)
                        .is_err()
                    {
                        return Err(Error::Integrity(format!(
                            "{kind} edge {} - {other} is not mirrored",
                            node.id
                        )));
                    }
                }
            }
        }
        for edge in &self.interactions {
            if !self.contains(edge.person) {
                return Err(Error::NotFound(edge.person));
            }
            if !self.contains(edge.item) {
                return Err(Error::NotFound(edge.item));
            }
        }
        Ok(())
    }
}
