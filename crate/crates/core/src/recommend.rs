//! Two-hop graph evidence scoring for movies and widgets.
//!
//! For a candidate movie with `a` widgets and `k` keywords:
//!
//! * direct evidence: each rated widget/keyword of the movie adds `r / (a + k + 1)`;
//! * shared evidence: each rated movie sharing at least one widget or keyword
//!   adds `r / ((a + k + 1) * 2)`, counted once per movie.
//!
//! For a widget attached to `a` movies, the person's own rating of the widget
//! counts as is and each rated attached movie adds `r / (a + 1)`.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf::{hybrid_predict, CfConfig, RatingMatrixView};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, NodeKind, StructuralEdgeKind};
use crate::interaction::{weight_of, InteractionKind};
use crate::probe::VisitProbe;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    GraphEvidence,
    PearsonCF,
    Knn,
    /// Widget with no rated neighbor; score is 0.
    NoEvidence,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::GraphEvidence => "GraphEvidence",
            Method::PearsonCF => "PearsonCF",
            Method::Knn => "Knn",
            Method::NoEvidence => "NoEvidence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub person: NodeId,
    pub item: NodeId,
    pub score: f64,
    pub method: Method,
    /// The predictor had no answer and the cold-start default was used.
    pub defaulted: bool,
}

/// One `rating / divisor` contribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvidenceTerm {
    pub source: NodeId,
    pub rating: f64,
    pub divisor: f64,
}

impl EvidenceTerm {
    pub fn value(&self) -> f64 {
        self.rating / self.divisor
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvidenceBreakdown {
    pub case1_terms: Vec<EvidenceTerm>,
    pub case2_terms: Vec<EvidenceTerm>,
    pub total: f64,
}

impl EvidenceBreakdown {
    fn new(case1_terms: Vec<EvidenceTerm>, case2_terms: Vec<EvidenceTerm>) -> Self {
        let total = case1_terms.iter().map(EvidenceTerm::value).sum::<f64>()
            + case2_terms.iter().map(EvidenceTerm::value).sum::<f64>();
        EvidenceBreakdown {
            case1_terms,
            case2_terms,
            total,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.case1_terms.is_empty() && self.case2_terms.is_empty()
    }
}

/// Divisor applied to movie ratings when scoring a widget attached to `a` movies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WidgetDivisor {
    /// `r / (a + 1)`.
    #[default]
    NeighborsPlusOne,
    /// `r / a`, the form used in the summed widget formula.
    Neighbors,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoringConfig {
    pub widget_divisor: WidgetDivisor,
}

fn expect_kind(graph: &Graph, id: NodeId, kind: NodeKind) -> Result<()> {
    let actual = graph.kind(id)?;
    if actual != kind {
        return Err(Error::Schema(format!("node {id} is a {actual}, expected {kind}")));
    }
    Ok(())
}

/// Whether the person has a `Consume` interaction with the movie.
pub fn is_consumed(graph: &Graph, person: NodeId, movie: NodeId) -> bool {
    graph
        .pair_interactions(person, movie)
        .any(|e| e.kind == InteractionKind::Consume)
}

pub fn score_unconsumed_movie(graph: &Graph, person: NodeId, movie: NodeId) -> Result<Option<EvidenceBreakdown>> {
    score_unconsumed_movie_probed(graph, person, movie, &mut ())
}

/// Like [`score_unconsumed_movie`], reporting every node touched to `probe`.
pub fn score_unconsumed_movie_probed<P: VisitProbe>(
    graph: &Graph,
    person: NodeId,
    movie: NodeId,
    mut probe: P,
) -> Result<Option<EvidenceBreakdown>> {
    expect_kind(graph, person, NodeKind::Person)?;
    expect_kind(graph, movie, NodeKind::Movie)?;
    if is_consumed(graph, person, movie) {
        return Err(Error::Precondition(format!(
            "person {person} already consumed movie {movie}"
        )));
    }
    probe.visit(person);
    probe.visit(movie);

    let widgets = graph.neighbors(movie, StructuralEdgeKind::BelongsTo)?;
    let keywords = graph.neighbors(movie, StructuralEdgeKind::HasKeyword)?;
    let divisor = (widgets.len() + keywords.len() + 1) as f64;

    let mut case1 = Vec::new();
    let mut sharing = BTreeSet::new();
    for (&x, via) in widgets
        .iter()
        .map(|x| (x, StructuralEdgeKind::BelongsTo))
        .chain(keywords.iter().map(|x| (x, StructuralEdgeKind::HasKeyword)))
    {
        probe.visit(x);
        if let Some(rating) = weight_of(graph, person, x) {
            case1.push(EvidenceTerm {
                source: x,
                rating,
                divisor,
            });
        }
        sharing.extend(graph.neighbors(x, via)?.iter().copied().filter(|&m| m != movie));
    }

    let mut case2 = Vec::new();
    for other in sharing {
        probe.visit(other);
        if let Some(rating) = weight_of(graph, person, other) {
            case2.push(EvidenceTerm {
                source: other,
                rating,
                divisor: divisor * 2.0,
            });
        }
    }

    if case1.is_empty() && case2.is_empty() {
        return Ok(None);
    }
    Ok(Some(EvidenceBreakdown::new(case1, case2)))
}

pub fn score_widget_for_movie(graph: &Graph, person: NodeId, widget: NodeId) -> Result<EvidenceBreakdown> {
    score_widget_with(graph, person, widget, ScoringConfig::default(), &mut ())
}

pub fn score_widget_with<P: VisitProbe>(
    graph: &Graph,
    person: NodeId,
    widget: NodeId,
    config: ScoringConfig,
    mut probe: P,
) -> Result<EvidenceBreakdown> {
    expect_kind(graph, person, NodeKind::Person)?;
    expect_kind(graph, widget, NodeKind::Widget)?;
    let movies = graph.neighbors(widget, StructuralEdgeKind::BelongsTo)?;
    if movies.is_empty() {
        return Err(Error::Precondition(format!("widget {widget} belongs to no movie")));
    }
    probe.visit(person);
    probe.visit(widget);

    let direct: Vec<_> = weight_of(graph, person, widget)
        .map(|rating| EvidenceTerm {
            source: widget,
            rating,
            divisor: 1.0,
        })
        .into_iter()
        .collect();

    let divisor = match config.widget_divisor {
        WidgetDivisor::NeighborsPlusOne => movies.len() as f64 + 1.0,
        WidgetDivisor::Neighbors => movies.len() as f64,
    };
    let mut indirect = Vec::new();
    for &m in movies {
        probe.visit(m);
        if let Some(rating) = weight_of(graph, person, m) {
            indirect.push(EvidenceTerm {
                source: m,
                rating,
                divisor,
            });
        }
    }
    Ok(EvidenceBreakdown::new(direct, indirect))
}

fn by_score_then_id(a: &Prediction, b: &Prediction) -> std::cmp::Ordering {
    b.score.total_cmp(&a.score).then(a.item.cmp(&b.item))
}

/// Top-`n` unconsumed movies for `person`: graph evidence where it exists,
/// the Pearson fallback (or its cold-start default) elsewhere.
pub fn recommend_movies(
    graph: &Graph,
    view: &RatingMatrixView,
    person: NodeId,
    n: usize,
    config: &CfConfig,
) -> Result<Vec<Prediction>> {
    expect_kind(graph, person, NodeKind::Person)?;
    if n == 0 {
        return Err(Error::Validation("n must be at least 1".into()));
    }
    let candidates: Vec<NodeId> = graph
        .nodes_of_kind(NodeKind::Movie)
        .filter(|&m| !is_consumed(graph, person, m))
        .collect();
    let mut predictions = candidates
        .par_iter()
        .map(|&m| hybrid_predict(graph, view, person, m, config))
        .collect::<Result<Vec<_>>>()?;
    predictions.sort_by(by_score_then_id);
    predictions.truncate(n);
    Ok(predictions)
}

/// Widgets of `movie`, best first.
pub fn rank_widgets(graph: &Graph, person: NodeId, movie: NodeId) -> Result<Vec<Prediction>> {
    rank_widgets_with(graph, person, movie, ScoringConfig::default())
}

pub fn rank_widgets_with(
    graph: &Graph,
    person: NodeId,
    movie: NodeId,
    config: ScoringConfig,
) -> Result<Vec<Prediction>> {
    expect_kind(graph, person, NodeKind::Person)?;
    expect_kind(graph, movie, NodeKind::Movie)?;
    let mut ranked = graph
        .neighbors(movie, StructuralEdgeKind::BelongsTo)?
        .iter()
        .map(|&w| {
            let evidence = score_widget_with(graph, person, w, config, &mut ())?;
            Ok(Prediction {
                person,
                item: w,
                score: evidence.total,
                method: if evidence.is_empty() {
                    Method::NoEvidence
                } else {
                    Method::GraphEvidence
                },
                defaulted: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(by_score_then_id);
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::InteractionEdge;
    use crate::probe::{VisitCounter, VisitLog};

    struct Fixture {
        g: Graph,
        p: NodeId,
        movie: NodeId,
        w1: NodeId,
        w2: NodeId,
        other: NodeId,
    }

    /// movie has widgets w1, w2 and keyword k; `other` shares k.
    fn fixture() -> Fixture {
        let mut g = Graph::new();
        let p = g.add_node(NodeKind::Person, "p").unwrap();
        let movie = g.add_node(NodeKind::Movie, "movie").unwrap();
        let w1 = g.add_node(NodeKind::Widget, "w1").unwrap();
        let w2 = g.add_node(NodeKind::Widget, "w2").unwrap();
        let k = g.add_node(NodeKind::Keyword, "k").unwrap();
        let other = g.add_node(NodeKind::Movie, "other").unwrap();
        g.add_structural_edge(StructuralEdgeKind::BelongsTo, w1, movie).unwrap();
        g.add_structural_edge(StructuralEdgeKind::BelongsTo, w2, movie).unwrap();
        g.add_structural_edge(StructuralEdgeKind::HasKeyword, movie, k).unwrap();
        g.add_structural_edge(StructuralEdgeKind::HasKeyword, other, k).unwrap();
        Fixture {
            g,
            p,
            movie,
            w1,
            w2,
            other,
        }
    }

    fn like(g: &mut Graph, p: NodeId, item: NodeId) {
        g.add_interaction(InteractionEdge::new(p, item, InteractionKind::Like))
            .unwrap();
    }

    #[test]
    fn case1_single_widget_like() {
        let mut f = fixture();
        like(&mut f.g, f.p, f.w1);
        let ev = score_unconsumed_movie(&f.g, f.p, f.movie).unwrap().unwrap();
        assert_eq!(ev.total, 0.25);
        assert_eq!(ev.case1_terms.len(), 1);
        assert!(ev.case2_terms.is_empty());
    }

    #[test]
    fn case1_plus_case2() {
        let mut f = fixture();
        like(&mut f.g, f.p, f.w1);
        like(&mut f.g, f.p, f.other);
        let ev = score_unconsumed_movie(&f.g, f.p, f.movie).unwrap().unwrap();
        assert_eq!(ev.total, 0.375);
        assert_eq!(ev.case2_terms[0].divisor, 8.0);
    }

    #[test]
    fn no_rated_neighbors_is_no_evidence() {
        let f = fixture();
        assert!(score_unconsumed_movie(&f.g, f.p, f.movie).unwrap().is_none());
    }

    #[test]
    fn consumed_movie_is_precondition_error() {
        let mut f = fixture();
        f.g.add_interaction(InteractionEdge::new(f.p, f.movie, InteractionKind::Consume))
            .unwrap();
        assert!(matches!(
            score_unconsumed_movie(&f.g, f.p, f.movie),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            score_unconsumed_movie(&f.g, f.p, NodeId(99)),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn liked_but_unconsumed_movie_still_scored() {
        let mut f = fixture();
        like(&mut f.g, f.p, f.movie);
        like(&mut f.g, f.p, f.w2);
        assert!(score_unconsumed_movie(&f.g, f.p, f.movie).unwrap().is_some());
    }

    #[test]
    fn shared_movie_counted_once() {
        let mut f = fixture();
        // other now shares both a widget and the keyword
        f.g.add_structural_edge(StructuralEdgeKind::BelongsTo, f.w1, f.other)
            .unwrap();
        like(&mut f.g, f.p, f.other);
        let ev = score_unconsumed_movie(&f.g, f.p, f.movie).unwrap().unwrap();
        assert_eq!(ev.case2_terms.len(), 1);
        assert_eq!(ev.total, 1.0 / 8.0);
    }

    #[test]
    fn case1_term_is_twice_case2_term() {
        let mut f = fixture();
        like(&mut f.g, f.p, f.w1);
        like(&mut f.g, f.p, f.other);
        let ev = score_unconsumed_movie(&f.g, f.p, f.movie).unwrap().unwrap();
        assert_eq!(ev.case1_terms[0].value().abs(), 2.0 * ev.case2_terms[0].value().abs());
    }

    #[test]
    fn widget_examples() {
        let mut f = fixture();
        like(&mut f.g, f.p, f.w1);
        assert_eq!(score_widget_for_movie(&f.g, f.p, f.w1).unwrap().total, 1.0);

        let mut f = fixture();
        like(&mut f.g, f.p, f.movie);
        assert_eq!(score_widget_for_movie(&f.g, f.p, f.w1).unwrap().total, 0.5);

        let mut f = fixture();
        f.g.add_structural_edge(StructuralEdgeKind::BelongsTo, f.w1, f.other)
            .unwrap();
        like(&mut f.g, f.p, f.movie);
        f.g.add_interaction(InteractionEdge::new(f.p, f.other, InteractionKind::Dislike))
            .unwrap();
        assert_eq!(score_widget_for_movie(&f.g, f.p, f.w1).unwrap().total, 0.0);
    }

    #[test]
    fn widget_divisor_switch() {
        let mut f = fixture();
        like(&mut f.g, f.p, f.movie);
        let config = ScoringConfig {
            widget_divisor: WidgetDivisor::Neighbors,
        };
        assert_eq!(score_widget_with(&f.g, f.p, f.w1, config, &mut ()).unwrap().total, 1.0);
    }

    #[test]
    fn orphan_widget_rejected() {
        let mut f = fixture();
        let orphan = f.g.add_node(NodeKind::Widget, "orphan").unwrap();
        assert!(matches!(
            score_widget_for_movie(&f.g, f.p, orphan),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn rank_widgets_orders_by_score() {
        let mut f = fixture();
        like(&mut f.g, f.p, f.w2);
        let ranked = rank_widgets(&f.g, f.p, f.movie).unwrap();
        assert_eq!(ranked.iter().map(|p| p.item).collect::<Vec<_>>(), vec![f.w2, f.w1]);
        assert_eq!(ranked[0].method, Method::GraphEvidence);
        assert_eq!(ranked[1].method, Method::NoEvidence);
        assert!(rank_widgets(&f.g, f.p, f.other).unwrap().is_empty());
    }

    #[test]
    fn visits_stay_local() {
        let mut f = fixture();
        let far = f.g.add_node(NodeKind::Movie, "far").unwrap();
        like(&mut f.g, f.p, far);
        like(&mut f.g, f.p, f.w1);
        let mut log = VisitLog::default();
        score_unconsumed_movie_probed(&f.g, f.p, f.movie, &mut log).unwrap();
        assert!(!log.nodes.contains(&far));
        let mut counter = VisitCounter::default();
        score_unconsumed_movie_probed(&f.g, f.p, f.movie, &mut counter).unwrap();
        assert_eq!(counter.visits, log.visits);
    }
}
