//! Train/test splitting, error metrics and the three-way algorithm comparison.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cf::{hybrid_predict_probed, CfConfig, RatingMatrixView};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, NodeKind};
use crate::interaction::weight_of;
use crate::probe::{VisitCounter, VisitProbe};
use crate::recommend::{is_consumed, Method, Prediction};

/// Width of the weight scale `[-1, 1]`; MPE is MAE as a percentage of it.
pub const SCALE_WIDTH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.7,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestPair {
    pub person: NodeId,
    pub movie: NodeId,
    pub truth: f64,
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Graph,
    pub test: Vec<TestPair>,
}

/// (person, movie) pairs carrying at least one explicit interaction, in first-seen order.
pub fn rating_pairs(graph: &Graph) -> Vec<(NodeId, NodeId)> {
    let mut seen = HashSet::new();
    graph
        .interactions()
        .iter()
        .filter(|e| e.kind.is_explicit() && graph.nodes()[e.item.index()].kind == NodeKind::Movie)
        .map(|e| (e.person, e.item))
        .filter(|pair| seen.insert(*pair))
        .collect()
}

/// Shuffles the rating pairs and keeps `floor(train_fraction * n)` for training.
/// Every interaction of a held-out pair is removed from the training graph;
/// nodes and structural edges are kept in full.
pub fn split(graph: &Graph, config: &SplitConfig) -> Result<Split> {
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "train fraction {} outside (0, 1)",
            config.train_fraction
        )));
    }
    let mut pairs = rating_pairs(graph);
    if pairs.is_empty() {
        return Err(Error::Validation("graph has no rating interactions to split".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    pairs.shuffle(&mut rng);
    let n_train = (config.train_fraction * pairs.len() as f64).floor() as usize;
    let held_out: HashSet<(NodeId, NodeId)> = pairs[n_train..].iter().copied().collect();
    let test = pairs[n_train..]
        .iter()
        .map(|&(person, movie)| TestPair {
            person,
            movie,
            truth: weight_of(graph, person, movie).expect("rating pair has interactions"),
        })
        .collect();
    let train = graph.with_interactions_filtered(|e| !held_out.contains(&(e.person, e.item)));
    Ok(Split { train, test })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mae: f64,
    pub rmse: f64,
    /// Percent.
    pub mpe: f64,
    pub n_predictions: usize,
    pub n_undefined: usize,
}

/// One scored test pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoggedPrediction {
    pub person: NodeId,
    pub movie: NodeId,
    pub predicted: f64,
    pub truth: f64,
    pub defaulted: bool,
    pub method: Method,
}

/// MAE, RMSE and MPE over (predicted, truth, defaulted) triples.
pub fn metrics(log: &[LoggedPrediction]) -> Result<MetricsReport> {
    if log.is_empty() {
        return Err(Error::Validation("cannot evaluate an empty test set".into()));
    }
    let n = log.len() as f64;
    let (abs, sq) = log.iter().fold((0.0, 0.0), |(abs, sq), p| {
        let err = p.predicted - p.truth;
        (abs + err.abs(), sq + err * err)
    });
    let mae = abs / n;
    Ok(MetricsReport {
        mae,
        rmse: (sq / n).sqrt(),
        mpe: mean_percentage_error(mae),
        n_predictions: log.len(),
        n_undefined: log.iter().filter(|p| p.defaulted).count(),
    })
}

pub fn mean_percentage_error(mae: f64) -> f64 {
    100.0 * mae / SCALE_WIDTH
}

/// A single-pair relevance predictor.
pub trait Predictor: Sync {
    fn name(&self) -> &'static str;

    /// Predicts `person`'s weight on `movie`, reporting node visits to `probe`.
    /// Undefined predictions come back with `defaulted = true` and the cold-start default.
    fn predict(&self, person: NodeId, movie: NodeId, probe: &mut dyn VisitProbe) -> Result<Prediction>;
}

/// Stand-alone Pearson CF: correlates the user with every other user, then
/// aggregates over the raters of the movie.
pub struct PearsonPredictor<'a> {
    pub view: &'a RatingMatrixView,
    pub config: CfConfig,
}

/// User-based k-NN over the same full correlation row, keeping the `k` most
/// correlated raters.
pub struct KnnPredictor<'a> {
    pub view: &'a RatingMatrixView,
    pub config: CfConfig,
}

/// Graph evidence first, local Pearson fallback second.
pub struct SamHybridPredictor<'a> {
    pub graph: &'a Graph,
    pub view: &'a RatingMatrixView,
    pub config: CfConfig,
}

fn full_row_prediction(
    view: &RatingMatrixView,
    person: NodeId,
    movie: NodeId,
    k: Option<usize>,
    config: &CfConfig,
    method: Method,
    probe: &mut dyn VisitProbe,
) -> Result<Prediction> {
    let predicted = match view.correlation_row(person, &mut *probe) {
        Ok(row) => view.predict_from_row(person, movie, &row, k, config, &mut *probe)?,
        Err(Error::NotFound(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(Prediction {
        person,
        item: movie,
        score: predicted.unwrap_or_else(|| view.default_prediction(person)),
        method,
        defaulted: predicted.is_none(),
    })
}

impl Predictor for PearsonPredictor<'_> {
    fn name(&self) -> &'static str {
        "pearson"
    }

    fn predict(&self, person: NodeId, movie: NodeId, probe: &mut dyn VisitProbe) -> Result<Prediction> {
        full_row_prediction(self.view, person, movie, None, &self.config, Method::PearsonCF, probe)
    }
}

impl Predictor for KnnPredictor<'_> {
    fn name(&self) -> &'static str {
        "knn"
    }

    fn predict(&self, person: NodeId, movie: NodeId, probe: &mut dyn VisitProbe) -> Result<Prediction> {
        if self.config.knn_k == 0 {
            return Err(Error::Validation("k must be at least 1".into()));
        }
        full_row_prediction(
            self.view,
            person,
            movie,
            Some(self.config.knn_k),
            &self.config,
            Method::Knn,
            probe,
        )
    }
}

impl Predictor for SamHybridPredictor<'_> {
    fn name(&self) -> &'static str {
        "sam_hybrid"
    }

    fn predict(&self, person: NodeId, movie: NodeId, probe: &mut dyn VisitProbe) -> Result<Prediction> {
        hybrid_predict_probed(self.graph, self.view, person, movie, &self.config, probe)
    }
}

/// Scores every test pair (in parallel, results kept in test order).
pub fn predict_all(predictor: &dyn Predictor, test: &[TestPair]) -> Result<Vec<LoggedPrediction>> {
    test.par_iter()
        .map(|t| {
            let p = predictor.predict(t.person, t.movie, &mut ())?;
            Ok(LoggedPrediction {
                person: t.person,
                movie: t.movie,
                predicted: p.score,
                truth: t.truth,
                defaulted: p.defaulted,
                method: p.method,
            })
        })
        .collect()
}

pub fn evaluate(predictor: &dyn Predictor, test: &[TestPair]) -> Result<MetricsReport> {
    if test.is_empty() {
        return Err(Error::Validation("cannot evaluate an empty test set".into()));
    }
    metrics(&predict_all(predictor, test)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub algorithm: String,
    pub report: MetricsReport,
    /// MAE over the pairs whose prediction was defined, when there are any.
    pub mae_defined: Option<f64>,
    /// Pairs answered from graph evidence.
    pub n_graph: usize,
}

/// Runs k-NN, stand-alone Pearson and the graph hybrid on one split.
pub fn compare_algorithms(train: &Graph, test: &[TestPair], config: &CfConfig) -> Result<Vec<ComparisonRow>> {
    let view = RatingMatrixView::build(train);
    let knn = KnnPredictor {
        view: &view,
        config: *config,
    };
    let pearson = PearsonPredictor {
        view: &view,
        config: *config,
    };
    let sam = SamHybridPredictor {
        graph: train,
        view: &view,
        config: *config,
    };
    let predictors: [&dyn Predictor; 3] = [&knn, &pearson, &sam];
    predictors
        .into_iter()
        .map(|p| {
            let log = predict_all(p, test)?;
            let report = metrics(&log)?;
            let defined: Vec<_> = log.iter().filter(|l| !l.defaulted).copied().collect();
            Ok(ComparisonRow {
                algorithm: p.name().to_string(),
                report,
                mae_defined: metrics(&defined).ok().map(|m| m.mae),
                n_graph: log.iter().filter(|l| l.method == Method::GraphEvidence).count(),
            })
        })
        .collect()
}

pub const REPORT_HEADER: &str = "algorithm\tmae\trmse\tmpe_percent\tn_predictions\tn_undefined";

/// TSV report, four decimals per metric.
pub fn format_report(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in rows {
        let r = &row.report;
        let _ = writeln!(
            out,
            "{}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}",
            row.algorithm, r.mae, r.rmse, r.mpe, r.n_predictions, r.n_undefined
        );
    }
    out
}

/// Uniformly sampled (person, unconsumed movie) requests.
pub fn sample_requests(graph: &Graph, count: usize, seed: u64) -> Result<Vec<(NodeId, NodeId)>> {
    let persons: Vec<NodeId> = graph.nodes_of_kind(NodeKind::Person).collect();
    let movies: Vec<NodeId> = graph.nodes_of_kind(NodeKind::Movie).collect();
    if persons.is_empty() || movies.is_empty() {
        return Err(Error::Validation(
            "graph needs persons and movies to sample requests".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > count.saturating_mul(100).max(1000) {
            return Err(Error::Validation(
                "could not find unconsumed (person, movie) pairs".into(),
            ));
        }
        let p = persons[rng.random_range(0..persons.len())];
        let m = movies[rng.random_range(0..movies.len())];
        if !is_consumed(graph, p, m) {
            out.push((p, m));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub predictor: String,
    pub requested: usize,
    pub completed: usize,
    pub mean_ms: f64,
    pub mean_visits: f64,
    pub max_visits: u64,
    /// Set when a request failed; the other fields cover the requests before it.
    pub error: Option<String>,
}

/// Issues the requests one at a time and reports mean wall-clock latency and visit counts.
pub fn bench_latency(predictor: &dyn Predictor, requests: &[(NodeId, NodeId)]) -> Result<BenchReport> {
    if requests.is_empty() {
        return Err(Error::Validation("at least one request is required".into()));
    }
    let (mut total_ms, mut total_visits, mut max_visits) = (0.0, 0u64, 0u64);
    let mut completed = 0;
    let mut error = None;
    for &(person, movie) in requests {
        let mut counter = VisitCounter::default();
        let start = Instant::now();
        let res = predictor.predict(person, movie, &mut counter);
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        if let Err(e) = res {
            error = Some(e.to_string());
            break;
        }
        completed += 1;
        total_ms += elapsed;
        total_visits += counter.visits;
        max_visits = max_visits.max(counter.visits);
    }
    let denom = completed.max(1) as f64;
    Ok(BenchReport {
        predictor: predictor.name().to_string(),
        requested: requests.len(),
        completed,
        mean_ms: total_ms / denom,
        mean_visits: total_visits as f64 / denom,
        max_visits,
        error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::{InteractionEdge, InteractionKind, Polarity};

    fn log(pairs: &[(f64, f64)]) -> Vec<LoggedPrediction> {
        pairs
            .iter()
            .map(|&(predicted, truth)| LoggedPrediction {
                person: NodeId(0),
                movie: NodeId(1),
                predicted,
                truth,
                defaulted: false,
                method: Method::PearsonCF,
            })
            .collect()
    }

    #[test]
    fn perfect_and_constant_error() {
        let m = metrics(&log(&[(0.2, 0.2), (-1.0, -1.0)])).unwrap();
        assert_eq!((m.mae, m.rmse, m.mpe), (0.0, 0.0, 0.0));
        let m = metrics(&log(&[(0.5, 0.0), (-0.5, 0.0), (1.0, 0.5)])).unwrap();
        assert_eq!((m.mae, m.rmse, m.mpe), (0.5, 0.5, 25.0));
        assert!(metrics(&[]).is_err());
    }

    #[test]
    fn mpe_matches_published_pairs() {
        // two pairs sit exactly on the 0.005 bound in decimal arithmetic
        for (mae, mpe) in [(0.3415, 17.08), (0.2809, 14.04), (0.2584, 12.92)] {
            assert!((mean_percentage_error(mae) - mpe).abs() <= 0.005 + 1e-9);
        }
    }

    fn ratings_graph(n: usize) -> Graph {
        let mut g = Graph::new();
        let p = g.add_node(NodeKind::Person, "p").unwrap();
        for i in 0..n {
            let m = g.add_node(NodeKind::Movie, &format!("m{i}")).unwrap();
            let kind = InteractionKind::Comment(Polarity::new(i as f64 / n as f64).unwrap());
            g.add_interaction(InteractionEdge::new(p, m, kind)).unwrap();
            g.add_interaction(InteractionEdge::new(p, m, InteractionKind::Consume))
                .unwrap();
        }
        g
    }

    #[test]
    fn split_sizes_and_determinism() {
        let g = ratings_graph(10);
        let cfg = SplitConfig {
            train_fraction: 0.7,
            seed: 3,
        };
        let a = split(&g, &cfg).unwrap();
        assert_eq!(a.test.len(), 3);
        assert_eq!(rating_pairs(&a.train).len(), 7);
        // held-out pairs lose their implicit edges too
        assert_eq!(a.train.interaction_count(), 14);
        let b = split(&g, &cfg).unwrap();
        assert_eq!(a.test, b.test);
        assert_eq!(a.train.interactions(), b.train.interactions());

        assert!(split(&Graph::new(), &cfg).is_err());
        assert!(split(
            &g,
            &SplitConfig {
                train_fraction: 1.0,
                seed: 3
            }
        )
        .is_err());
    }

    #[test]
    fn split_is_a_partition() {
        let g = ratings_graph(37);
        let s = split(
            &g,
            &SplitConfig {
                train_fraction: 0.7,
                seed: 11,
            },
        )
        .unwrap();
        let train: HashSet<_> = rating_pairs(&s.train).into_iter().collect();
        let test: HashSet<_> = s.test.iter().map(|t| (t.person, t.movie)).collect();
        assert!(train.is_disjoint(&test));
        let all: HashSet<_> = rating_pairs(&g).into_iter().collect();
        assert_eq!(&train | &test, all);
        assert_eq!(train.len(), 25);
    }

    #[test]
    fn report_layout() {
        let rows = vec![ComparisonRow {
            algorithm: "knn".into(),
            report: MetricsReport {
                mae: 0.34149,
                rmse: 0.42421,
                mpe: 17.0745,
                n_predictions: 10,
                n_undefined: 2,
            },
            mae_defined: None,
            n_graph: 0,
        }];
        assert_eq!(
            format_report(&rows),
            format!("{REPORT_HEADER}\nknn\t0.3415\t0.4242\t17.0745\t10\t2\n")
        );
    }
}
