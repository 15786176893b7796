//! Graph-based recommendation for first/second-screen media.
//!
//! Persons, movies, widgets and keywords live in an in-memory property graph
//! ([`graph`]). User interactions become signed weights ([`interaction`]),
//! unconsumed movies and widgets are scored from two-hop graph evidence
//! ([`recommend`]) and Pearson collaborative filtering covers isolated assets
//! ([`cf`]). [`dataset`] and [`eval`] reproduce a MovieLens accuracy study.

pub mod cf;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod graph;
pub mod interaction;
pub mod persist;
pub mod probe;
pub mod recommend;

pub use cf::{hybrid_predict, knn_predict, pearson_correlation, predict_cf, CfConfig, RatingMatrixView};
pub use error::{Error, Result};
pub use graph::{Graph, Node, NodeId, NodeKind, StructuralEdge, StructuralEdgeKind};
pub use interaction::{
    aggregate_user_item_weight, interaction_contribution, InteractionEdge, InteractionKind, InteractionType, Polarity,
    RatingWeight,
};
pub use recommend::{
    rank_widgets, recommend_movies, score_unconsumed_movie, score_widget_for_movie, EvidenceBreakdown, Method,
    Prediction,
};
