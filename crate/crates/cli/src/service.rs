//! HTTP endpoints over a shared, lock-protected graph.
//!
//! Every request takes the lock once: GETs share it, a POST holds it exclusively
//! while appending the interaction and refreshing the rating view, so readers
//! see either the whole mutation or none of it.

use std::sync::{Arc, RwLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use graphrec_core::recommend::{is_consumed, Method, Prediction};
use graphrec_core::{
    aggregate_user_item_weight, rank_widgets, recommend_movies, CfConfig, Error, Graph, InteractionEdge,
    InteractionKind, InteractionType, NodeId, NodeKind, RatingMatrixView,
};
use serde::{Deserialize, Serialize};

use crate::PredictorKind;

#[derive(Debug, Clone, Copy)]
pub struct ServiceConfig {
    pub predictor: PredictorKind,
    pub cf: CfConfig,
}

pub struct Engine {
    pub graph: Graph,
    pub view: RatingMatrixView,
}

impl Engine {
    pub fn new(graph: Graph) -> Self {
        let view = RatingMatrixView::build(&graph);
        Engine { graph, view }
    }

    /// Top-`n` unconsumed movies for `person` under the configured predictor.
    pub fn rank_movies(
        &self,
        config: &ServiceConfig,
        person: NodeId,
        n: usize,
    ) -> graphrec_core::Result<Vec<Prediction>> {
        let (k, method) = match config.predictor {
            PredictorKind::Sam => return recommend_movies(&self.graph, &self.view, person, n, &config.cf),
            PredictorKind::Pearson => (None, Method::PearsonCF),
            PredictorKind::Knn => (Some(config.cf.knn_k), Method::Knn),
        };
        if n == 0 {
            return Err(Error::Validation("n must be at least 1".into()));
        }
        // one correlation row serves every candidate movie
        let row = self.view.correlation_row(person, ())?;
        let mut out = Vec::new();
        for m in self.graph.nodes_of_kind(NodeKind::Movie) {
            if is_consumed(&self.graph, person, m) {
                continue;
            }
            let predicted = self.view.predict_from_row(person, m, &row, k, &config.cf, ())?;
            out.push(Prediction {
                person,
                item: m,
                score: predicted.unwrap_or_else(|| self.view.default_prediction(person)),
                method,
                defaulted: predicted.is_none(),
            });
        }
        out.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.item.cmp(&b.item)));
        out.truncate(n);
        Ok(out)
    }
}

pub struct AppState {
    pub engine: RwLock<Engine>,
    pub config: ServiceConfig,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/recommendations/movies", get(movies))
        .route("/recommendations/widgets", get(widgets))
        .route("/graph/interactions", post(post_interaction))
        .with_state(state)
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Body {
            error: String,
        }
        (self.0, Json(Body { error: self.1 })).into_response()
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError(StatusCode::BAD_REQUEST, r.body_text())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError(r.status(), r.body_text())
    }
}

fn internal(e: Error) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

fn require(graph: &Graph, id: u32, kind: NodeKind) -> Result<NodeId, ApiError> {
    let id = NodeId(id);
    match graph.kind(id) {
        Ok(k) if k == kind => Ok(id),
        _ => Err(ApiError(StatusCode::NOT_FOUND, format!("no {kind} with id {id}"))),
    }
}

fn read(state: &AppState) -> std::sync::RwLockReadGuard<'_, Engine> {
    // a panic mid-request cannot leave the graph half-written: mutations are single calls
    state.engine.read().unwrap_or_else(|e| e.into_inner())
}

async fn health() -> &'static str {
    "ok"
}

#[derive(Deserialize)]
struct MoviesQuery {
    person: u32,
    n: usize,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct MovieItem {
    movie_id: NodeId,
    score: f64,
    method: &'static str,
}

async fn movies(
    State(state): State<Arc<AppState>>,
    query: Result<Query<MoviesQuery>, QueryRejection>,
) -> Result<Json<Vec<MovieItem>>, ApiError> {
    let Query(q) = query?;
    if q.n == 0 {
        return Err(ApiError(StatusCode::BAD_REQUEST, "n must be at least 1".into()));
    }
    let engine = read(&state);
    let person = require(&engine.graph, q.person, NodeKind::Person)?;
    let ranked = engine.rank_movies(&state.config, person, q.n).map_err(internal)?;
    Ok(Json(
        ranked
            .into_iter()
            .map(|p| MovieItem {
                movie_id: p.item,
                score: p.score,
                method: p.method.as_str(),
            })
            .collect(),
    ))
}

#[derive(Deserialize)]
struct WidgetsQuery {
    person: u32,
    movie: u32,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct WidgetItem {
    widget_id: NodeId,
    score: f64,
    method: &'static str,
}

async fn widgets(
    State(state): State<Arc<AppState>>,
    query: Result<Query<WidgetsQuery>, QueryRejection>,
) -> Result<Json<Vec<WidgetItem>>, ApiError> {
    let Query(q) = query?;
    let engine = read(&state);
    let person = require(&engine.graph, q.person, NodeKind::Person)?;
    let movie = require(&engine.graph, q.movie, NodeKind::Movie)?;
    let ranked = rank_widgets(&engine.graph, person, movie).map_err(internal)?;
    Ok(Json(
        ranked
            .into_iter()
            .map(|p| WidgetItem {
                widget_id: p.item,
                score: p.score,
                method: p.method.as_str(),
            })
            .collect(),
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewInteraction {
    person: u32,
    item: u32,
    kind: String,
    polarity: Option<f64>,
    timestamp: Option<i64>,
}

#[derive(Serialize)]
struct Created {
    person: NodeId,
    item: NodeId,
    kind: &'static str,
    weight: Option<f64>,
}

fn unprocessable(msg: impl Into<String>) -> ApiError {
    ApiError(StatusCode::UNPROCESSABLE_ENTITY, msg.into())
}

async fn post_interaction(
    State(state): State<Arc<AppState>>,
    body: Result<Json<NewInteraction>, JsonRejection>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let Json(body) = body?;
    let ty: InteractionType = body.kind.parse().map_err(unprocessable)?;
    let kind = match (ty, body.polarity) {
        (InteractionType::Comment, None) => return Err(unprocessable("COMMENT requires a polarity")),
        (InteractionType::Comment, Some(p)) => {
            InteractionKind::from_parts(ty, p).map_err(|e| unprocessable(e.to_string()))?
        }
        (_, Some(p)) if p != 0.0 => return Err(unprocessable(format!("{ty} does not take a polarity"))),
        (_, _) => InteractionKind::from_parts(ty, 0.0).map_err(|e| unprocessable(e.to_string()))?,
    };

    let mut engine = state.engine.write().unwrap_or_else(|e| e.into_inner());
    let person = require(&engine.graph, body.person, NodeKind::Person)?;
    let item = NodeId(body.item);
    if !engine.graph.contains(item) {
        return Err(ApiError(StatusCode::NOT_FOUND, format!("node {item} not found")));
    }
    let edge = InteractionEdge::new(person, item, kind).at(body.timestamp.unwrap_or(0));
    engine.graph.add_interaction(edge).map_err(|e| match e {
        Error::NotFound(_) => ApiError(StatusCode::NOT_FOUND, e.to_string()),
        Error::Schema(_) | Error::Validation(_) => unprocessable(e.to_string()),
        e => internal(e),
    })?;
    let Engine { graph, view } = &mut *engine;
    view.refresh_pair(graph, person, item).map_err(internal)?;
    let weight = aggregate_user_item_weight(graph, person, item)
        .map_err(internal)?
        .map(|w| w.value());
    log::info!("interaction appended person={person} item={item} kind={ty}");
    Ok((
        StatusCode::CREATED,
        Json(Created {
            person,
            item,
            kind: ty.token(),
            weight,
        }),
    ))
}
