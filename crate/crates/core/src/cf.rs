//! User-based collaborative filtering over aggregated interaction weights.
//!
//! Correlations are Pearson coefficients over co-rated assets, centered on each
//! user's mean over their whole profile. Predictions are the mean-centered,
//! |c|-normalized weighted average of the neighbors' deviations.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, NodeKind};
use crate::interaction::weight_of;
use crate::probe::VisitProbe;
use crate::recommend::{is_consumed, score_unconsumed_movie_probed, Method, Prediction};

/// Sums of squared deviations at or below this are treated as zero variance.
const ZERO_VARIANCE: f64 = 1e-20;

/// `None` when fewer than two co-rated items exist or either side has zero variance.
pub type Correlation = Option<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfConfig {
    /// Neighborhood size for the k-NN baseline.
    pub knn_k: usize,
    /// Keep neighbors whose correlation is exactly zero in the denominator.
    pub include_zero_correlation: bool,
}

impl Default for CfConfig {
    fn default() -> Self {
        CfConfig {
            knn_k: 20,
            include_zero_correlation: false,
        }
    }
}

#[derive(Debug, Clone)]
struct Profile {
    id: NodeId,
    // sorted by item id
    ratings: Vec<(NodeId, f64)>,
    sum: f64,
}

impl Profile {
    fn mean(&self) -> Option<f64> {
        (!self.ratings.is_empty()).then(|| self.sum / self.ratings.len() as f64)
    }

    fn rating(&self, item: NodeId) -> Option<f64> {
        self.ratings
            .binary_search_by_key(&item, |&(i, _)| i)
            .ok()
            .map(|pos| self.ratings[pos].1)
    }
}

/// Per-person asset weights and means, frozen from a graph.
#[derive(Debug, Clone, Default)]
pub struct RatingMatrixView {
    profiles: Vec<Profile>,
    index: HashMap<NodeId, usize>,
    // item -> (profile index, weight), ascending profile index
    raters: HashMap<NodeId, Vec<(usize, f64)>>,
    node_count: usize,
    total: f64,
    count: usize,
}

impl RatingMatrixView {
    /// Collects every person's aggregated weight on every movie or widget they interacted with.
    pub fn build(graph: &Graph) -> Self {
        let mut view = RatingMatrixView {
            node_count: graph.node_count(),
            ..Default::default()
        };
        for person in graph.nodes_of_kind(NodeKind::Person) {
            let items: BTreeSet<NodeId> = graph
                .interactions_of(person)
                .map(|e| e.item)
                .filter(|&i| graph.nodes()[i.index()].kind.is_asset())
                .collect();
            let ratings: Vec<(NodeId, f64)> = items
                .into_iter()
                .filter_map(|i| weight_of(graph, person, i).map(|w| (i, w)))
                .collect();
            let idx = view.profiles.len();
            for &(item, w) in &ratings {
                view.raters.entry(item).or_default().push((idx, w));
                view.total += w;
                view.count += 1;
            }
            view.index.insert(person, idx);
            view.profiles.push(Profile {
                id: person,
                sum: ratings.iter().map(|&(_, w)| w).sum(),
                ratings,
            });
        }
        view
    }

    /// Re-reads one (person, item) weight from `graph` after an interaction was appended.
    pub fn refresh_pair(&mut self, graph: &Graph, person: NodeId, item: NodeId) -> Result<()> {
        if graph.kind(person)? != NodeKind::Person {
            return Err(Error::Schema(format!("node {person} is not a PERSON")));
        }
        self.node_count = graph.node_count();
        let idx = match self.index.get(&person) {
            Some(&idx) => idx,
            None => {
                let idx = self.profiles.len();
                self.index.insert(person, idx);
                self.profiles.push(Profile {
                    id: person,
                    ratings: Vec::new(),
                    sum: 0.0,
                });
                idx
            }
        };
        if !graph.kind(item)?.is_asset() {
            return Ok(());
        }
        let Some(w) = weight_of(graph, person, item) else {
            return Ok(());
        };
        let profile = &mut self.profiles[idx];
        match profile.ratings.binary_search_by_key(&item, |&(i, _)| i) {
            Ok(pos) => {
                let old = profile.ratings[pos].1;
                profile.ratings[pos].1 = w;
                self.total += w - old;
            }
            Err(pos) => {
                profile.ratings.insert(pos, (item, w));
                self.total += w;
                self.count += 1;
            }
        }
        // recompute rather than adjust so the mean matches a fresh build bit for bit
        profile.sum = profile.ratings.iter().map(|&(_, w)| w).sum();
        let raters = self.raters.entry(item).or_default();
        match raters.binary_search_by_key(&idx, |&(p, _)| p) {
            Ok(pos) => raters[pos].1 = w,
            Err(pos) => raters.insert(pos, (idx, w)),
        }
        Ok(())
    }

    pub fn person_count(&self) -> usize {
        self.profiles.len()
    }

    pub fn persons(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.profiles.iter().map(|p| p.id)
    }

    pub fn rating_count(&self) -> usize {
        self.count
    }

    fn profile_index(&self, person: NodeId) -> Result<usize> {
        self.index.get(&person).copied().ok_or(Error::NotFound(person))
    }

    pub fn rating(&self, person: NodeId, item: NodeId) -> Result<Option<f64>> {
        Ok(self.profiles[self.profile_index(person)?].rating(item))
    }

    /// Mean over the person's whole profile; `None` with no ratings.
    pub fn mean(&self, person: NodeId) -> Result<Option<f64>> {
        Ok(self.profiles[self.profile_index(person)?].mean())
    }

    /// Mean of every (person, item) weight in the view.
    pub fn global_mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.total / self.count as f64)
    }

    /// Cold-start default: the person's mean, else the global mean, else 0.
    pub fn default_prediction(&self, person: NodeId) -> f64 {
        self.index
            .get(&person)
            .and_then(|&i| self.profiles[i].mean())
            .or_else(|| self.global_mean())
            .unwrap_or(0.0)
    }

    fn check_item(&self, item: NodeId) -> Result<()> {
        if item.index() < self.node_count {
            Ok(())
        } else {
            Err(Error::NotFound(item))
        }
    }

    fn correlate<P: VisitProbe>(&self, a: usize, u: usize, probe: &mut P) -> Correlation {
        let (pa, pu) = (&self.profiles[a], &self.profiles[u]);
        let (mean_a, mean_u) = (pa.mean()?, pu.mean()?);
        let (mut num, mut sa, mut su, mut h) = (0.0, 0.0, 0.0, 0usize);
        let (mut i, mut j) = (0, 0);
        while i < pa.ratings.len() && j < pu.ratings.len() {
            let (ia, ra) = pa.ratings[i];
            let (iu, ru) = pu.ratings[j];
            match ia.cmp(&iu) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    probe.visit(ia);
                    let (da, du) = (ra - mean_a, ru - mean_u);
                    num += da * du;
                    sa += da * da;
                    su += du * du;
                    h += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        if h < 2 || sa <= ZERO_VARIANCE || su <= ZERO_VARIANCE {
            return None;
        }
        Some((num / (sa * su).sqrt()).clamp(-1.0, 1.0))
    }

    fn eligible(&self, c: Correlation, config: &CfConfig) -> Option<f64> {
        c.filter(|&c| config.include_zero_correlation || c != 0.0)
    }

    /// Neighbors who rated `item`, in rater order, with a usable correlation.
    fn neighbors<F>(&self, a: usize, item: NodeId, config: &CfConfig, mut correlation: F) -> Vec<Neighbor>
    where
        F: FnMut(usize) -> Correlation,
    {
        self.raters
            .get(&item)
            .map(Vec::as_slice)
            .unwrap_or_default()
            .iter()
            .filter(|&&(u, _)| u != a)
            .filter_map(|&(u, rating)| {
                let c = self.eligible(correlation(u), config)?;
                Some(Neighbor { user: u, rating, c })
            })
            .collect()
    }

    fn aggregate<'n>(&self, a: usize, neighbors: impl Iterator<Item = &'n Neighbor>) -> Option<f64> {
        let mean_a = self.profiles[a].mean()?;
        let (mut num, mut den, mut any) = (0.0, 0.0, false);
        for n in neighbors {
            let mean_u = self.profiles[n.user].mean()?;
            num += (n.rating - mean_u) * n.c;
            den += n.c.abs();
            any = true;
        }
        (any && den > 0.0).then(|| mean_a + num / den)
    }

    /// Keeps the `k` neighbors with the largest |c| (ties: lower person id),
    /// preserving the original order for summation.
    fn top_k(&self, neighbors: Vec<Neighbor>, k: usize) -> Vec<Neighbor> {
        if k >= neighbors.len() {
            return neighbors;
        }
        let mut order: Vec<usize> = (0..neighbors.len()).collect();
        order.sort_by(|&x, &y| {
            let (nx, ny) = (&neighbors[x], &neighbors[y]);
            ny.c.abs()
                .total_cmp(&nx.c.abs())
                .then(self.profiles[nx.user].id.cmp(&self.profiles[ny.user].id))
        });
        let mut keep = vec![false; neighbors.len()];
        for &i in &order[..k] {
            keep[i] = true;
        }
        neighbors
            .into_iter()
            .zip(keep)
            .filter_map(|(n, keep)| keep.then_some(n))
            .collect()
    }

    /// Correlations of `a` with every person in the view (the full matrix row).
    pub fn correlation_row<P: VisitProbe>(&self, a: NodeId, mut probe: P) -> Result<Vec<Correlation>> {
        let a = self.profile_index(a)?;
        probe.visit(self.profiles[a].id);
        Ok((0..self.profiles.len())
            .map(|u| {
                probe.visit(self.profiles[u].id);
                if u == a {
                    None
                } else {
                    self.correlate(a, u, &mut probe)
                }
            })
            .collect())
    }

    /// Prediction from a precomputed [`correlation_row`](Self::correlation_row).
    /// `k = None` uses every eligible neighbor.
    pub fn predict_from_row<P: VisitProbe>(
        &self,
        a: NodeId,
        item: NodeId,
        row: &[Correlation],
        k: Option<usize>,
        config: &CfConfig,
        mut probe: P,
    ) -> Result<Option<f64>> {
        let a = self.profile_index(a)?;
        self.check_item(item)?;
        probe.visit(item);
        let neighbors = self.neighbors(a, item, config, |u| {
            probe.visit(self.profiles[u].id);
            row[u]
        });
        let neighbors = match k {
            Some(k) => self.top_k(neighbors, k),
            None => neighbors,
        };
        Ok(self.aggregate(a, neighbors.iter()))
    }

    fn local_neighbors<P: VisitProbe>(
        &self,
        a: usize,
        item: NodeId,
        config: &CfConfig,
        probe: &mut P,
    ) -> Vec<Neighbor> {
        probe.visit(self.profiles[a].id);
        probe.visit(item);
        self.neighbors(a, item, config, |u| {
            probe.visit(self.profiles[u].id);
            self.correlate(a, u, probe)
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Neighbor {
    user: usize,
    rating: f64,
    c: f64,
}

pub fn pearson_correlation(view: &RatingMatrixView, a: NodeId, u: NodeId) -> Result<Correlation> {
    if a == u {
        return Err(Error::Precondition("correlation of a person with themself".into()));
    }
    let (ia, iu) = (view.profile_index(a)?, view.profile_index(u)?);
    Ok(view.correlate(ia, iu, &mut ()))
}

/// Pearson prediction of `a`'s weight on `item`; `None` when no correlated user rated it.
pub fn predict_cf(view: &RatingMatrixView, a: NodeId, item: NodeId, config: &CfConfig) -> Result<Option<f64>> {
    predict_cf_probed(view, a, item, config, &mut ())
}

/// [`predict_cf`] touching only the raters of `item` and their overlap with `a`.
pub fn predict_cf_probed<P: VisitProbe>(
    view: &RatingMatrixView,
    a: NodeId,
    item: NodeId,
    config: &CfConfig,
    mut probe: P,
) -> Result<Option<f64>> {
    let ia = view.profile_index(a)?;
    view.check_item(item)?;
    let neighbors = view.local_neighbors(ia, item, config, &mut probe);
    Ok(view.aggregate(ia, neighbors.iter()))
}

/// [`predict_cf`] restricted to the `k` raters of `item` most correlated (by |c|) with `a`.
pub fn knn_predict(
    view: &RatingMatrixView,
    a: NodeId,
    item: NodeId,
    k: usize,
    config: &CfConfig,
) -> Result<Option<f64>> {
    if k == 0 {
        return Err(Error::Validation("k must be at least 1".into()));
    }
    let ia = view.profile_index(a)?;
    view.check_item(item)?;
    let neighbors = view.local_neighbors(ia, item, config, &mut ());
    Ok(view.aggregate(ia, view.top_k(neighbors, k).iter()))
}

/// Graph evidence when the movie has any, else Pearson CF, else the cold-start default.
pub fn hybrid_predict(
    graph: &Graph,
    view: &RatingMatrixView,
    person: NodeId,
    movie: NodeId,
    config: &CfConfig,
) -> Result<Prediction> {
    hybrid_predict_probed(graph, view, person, movie, config, &mut ())
}

pub fn hybrid_predict_probed<P: VisitProbe>(
    graph: &Graph,
    view: &RatingMatrixView,
    person: NodeId,
    movie: NodeId,
    config: &CfConfig,
    mut probe: P,
) -> Result<Prediction> {
    if let Some(evidence) = score_unconsumed_movie_probed(graph, person, movie, &mut probe)? {
        return Ok(Prediction {
            person,
            item: movie,
            score: evidence.total,
            method: Method::GraphEvidence,
            defaulted: false,
        });
    }
    let cf = match view.profile_index(person) {
        Ok(_) => predict_cf_probed(view, person, movie, config, &mut probe)?,
        Err(_) => None,
    };
    Ok(Prediction {
        person,
        item: movie,
        score: cf.unwrap_or_else(|| view.default_prediction(person)),
        method: Method::PearsonCF,
        defaulted: cf.is_none(),
    })
}

/// Whether `hybrid_predict` would be legal for this pair.
pub fn is_candidate(graph: &Graph, person: NodeId, movie: NodeId) -> bool {
    !is_consumed(graph, person, movie)
}
