//! Interaction kinds and their signed contributions.
//!
//! Explicit interactions (like, dislike, comment) carry a polarity in
//! `[-1, 1]`. Implicit interactions (consume, full-screen, dismiss, show-more)
//! carry `p / (t - 1)` where `p` is ±1 and `t` is the number of interaction
//! types legal for the target kind, so their sum can never outweigh a single
//! explicit interaction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, NodeKind};

/// Sentiment polarity of a comment, in `[-1, 1]`. Zero is neutral.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Polarity(f64);

impl Polarity {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (-1.0..=1.0).contains(&value) {
            Ok(Polarity(value))
        } else {
            Err(Error::Validation(format!("comment polarity {value} outside [-1, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Polarity {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Polarity::new(value)
    }
}

impl From<Polarity> for f64 {
    fn from(p: Polarity) -> f64 {
        p.0
    }
}

/// Interaction type without payload; one row of the contribution table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InteractionType {
    Comment,
    Like,
    Dislike,
    FullScreen,
    Consume,
    Dismiss,
    ShowMore,
}

impl InteractionType {
    pub const ALL: [InteractionType; 7] = [
        InteractionType::Comment,
        InteractionType::Like,
        InteractionType::Dislike,
        InteractionType::FullScreen,
        InteractionType::Consume,
        InteractionType::Dismiss,
        InteractionType::ShowMore,
    ];

    pub fn token(self) -> &'static str {
        match self {
            InteractionType::Comment => "COMMENT",
            InteractionType::Like => "LIKE",
            InteractionType::Dislike => "DISLIKE",
            InteractionType::FullScreen => "FULLSCREEN",
            InteractionType::Consume => "CONSUME",
            InteractionType::Dismiss => "DISMISS",
            InteractionType::ShowMore => "SHOWMORE",
        }
    }

    pub fn is_explicit(self) -> bool {
        matches!(
            self,
            InteractionType::Comment | InteractionType::Like | InteractionType::Dislike
        )
    }
}

impl fmt::Display for InteractionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for InteractionType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        InteractionType::ALL
            .into_iter()
            .find(|t| t.token().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown interaction kind {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InteractionKind {
    Like,
    Dislike,
    Comment(Polarity),
    Consume,
    FullScreen,
    Dismiss,
    ShowMore,
}

impl InteractionKind {
    pub fn interaction_type(self) -> InteractionType {
        match self {
            InteractionKind::Like => InteractionType::Like,
            InteractionKind::Dislike => InteractionType::Dislike,
            InteractionKind::Comment(_) => InteractionType::Comment,
            InteractionKind::Consume => InteractionType::Consume,
            InteractionKind::FullScreen => InteractionType::FullScreen,
            InteractionKind::Dismiss => InteractionType::Dismiss,
            InteractionKind::ShowMore => InteractionType::ShowMore,
        }
    }

    /// Builds a kind from its type token; `polarity` is only read for comments.
    pub fn from_parts(kind: InteractionType, polarity: f64) -> Result<Self> {
        Ok(match kind {
            InteractionType::Comment => InteractionKind::Comment(Polarity::new(polarity)?),
            InteractionType::Like => InteractionKind::Like,
            InteractionType::Dislike => InteractionKind::Dislike,
            InteractionType::FullScreen => InteractionKind::FullScreen,
            InteractionType::Consume => InteractionKind::Consume,
            InteractionType::Dismiss => InteractionKind::Dismiss,
            InteractionType::ShowMore => InteractionKind::ShowMore,
        })
    }

    /// Comment polarity, or 0 for every other kind.
    pub fn polarity(self) -> f64 {
        match self {
            InteractionKind::Comment(p) => p.value(),
            _ => 0.0,
        }
    }

    pub fn is_explicit(self) -> bool {
        self.interaction_type().is_explicit()
    }
}

/// A person → item event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionEdge {
    pub person: NodeId,
    pub item: NodeId,
    pub kind: InteractionKind,
    /// Seconds since the epoch; 0 when unknown.
    pub timestamp: i64,
}

impl InteractionEdge {
    pub fn new(person: NodeId, item: NodeId, kind: InteractionKind) -> Self {
        InteractionEdge {
            person,
            item,
            kind,
            timestamp: 0,
        }
    }

    pub fn at(mut self, timestamp: i64) -> Self {
        self.timestamp = timestamp;
        self
    }
}

/// Interaction types accepted by each target kind. Persons accept none.
pub fn legal_types(target: NodeKind) -> &'static [InteractionType] {
    use InteractionType::*;
    match target {
        NodeKind::Movie => &[Comment, Like, Dislike, FullScreen, Consume],
        NodeKind::Widget => &[Like, Dislike, Dismiss, ShowMore],
        NodeKind::Keyword => &[Comment],
        NodeKind::Person => &[],
    }
}

pub fn check_legal(kind: InteractionKind, target: NodeKind) -> Result<()> {
    let ty = kind.interaction_type();
    if legal_types(target).contains(&ty) {
        Ok(())
    } else {
        Err(Error::Schema(format!("{ty} is not a legal interaction on a {target}")))
    }
}

/// Signed contribution of one interaction on an item of kind `target`.
pub fn interaction_contribution(kind: InteractionKind, target: NodeKind) -> Result<f64> {
    check_legal(kind, target)?;
    let implicit = |polarity: f64| {
        let types = legal_types(target).len() as f64;
        polarity / (types - 1.0)
    };
    Ok(match kind {
        InteractionKind::Like => 1.0,
        InteractionKind::Dislike => -1.0,
        InteractionKind::Comment(p) => p.value(),
        InteractionKind::Consume | InteractionKind::FullScreen | InteractionKind::ShowMore => implicit(1.0),
        InteractionKind::Dismiss => implicit(-1.0),
    })
}

/// Aggregated stance of a person toward an item. Unbounded: it is a plain sum.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RatingWeight(pub f64);

impl RatingWeight {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Sum of contributions over every interaction between `person` and `item`.
/// `None` means there is no interaction at all.
pub fn aggregate_user_item_weight(graph: &Graph, person: NodeId, item: NodeId) -> Result<Option<RatingWeight>> {
    graph.node(person)?;
    graph.node(item)?;
    Ok(weight_of(graph, person, item).map(RatingWeight))
}

/// Unchecked variant of [`aggregate_user_item_weight`] for ids already known to exist.
pub(crate) fn weight_of(graph: &Graph, person: NodeId, item: NodeId) -> Option<f64> {
    let mut edges = graph.pair_interactions(person, item).peekable();
    edges.peek()?;
    let target = graph.nodes()[item.index()].kind;
    let (mut sum, mut liked, mut disliked) = (0.0, false, false);
    for edge in edges {
        liked |= edge.kind == InteractionKind::Like;
        disliked |= edge.kind == InteractionKind::Dislike;
        // edges were validated on insertion
        sum += interaction_contribution(edge.kind, target).unwrap_or(0.0);
    }
    if liked && disliked {
        log::warn!("person {person} both liked and disliked item {item}; contributions summed");
    }
    Some(sum)
}
