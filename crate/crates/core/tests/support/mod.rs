//! Brute-force oracles and random fixtures shared by integration and acceptance tests.
//!
//! Nothing here calls the scoring, weighting or CF code under test: weights are
//! recomputed from the raw interaction list with a hard-coded contribution table,
//! and graph evidence is found by enumerating all structural paths.

#![allow(dead_code)]

use graphrec_core::{Graph, InteractionEdge, InteractionKind, NodeId, NodeKind, Polarity, StructuralEdgeKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Contribution of one interaction, straight from the published table.
/// `None` marks a blank cell.
pub fn table_cell(kind: InteractionKind, target: NodeKind) -> Option<f64> {
    use InteractionKind::*;
    use NodeKind::*;
    match (kind, target) {
        (Comment(p), Movie) | (Comment(p), Keyword) => Some(p.value()),
        (Like, Movie) | (Like, Widget) => Some(1.0),
        (Dislike, Movie) | (Dislike, Widget) => Some(-1.0),
        (FullScreen, Movie) | (Consume, Movie) => Some(0.25),
        (Dismiss, Widget) => Some(-1.0 / 3.0),
        (ShowMore, Widget) => Some(1.0 / 3.0),
        _ => None,
    }
}

fn kind_of(g: &Graph, id: NodeId) -> NodeKind {
    g.nodes().iter().find(|n| n.id == id).unwrap().kind
}

/// Weight by scanning every interaction in the graph.
pub fn oracle_weight(g: &Graph, person: NodeId, item: NodeId) -> Option<f64> {
    let target = kind_of(g, item);
    let cells: Vec<f64> = g
        .interactions()
        .iter()
        .filter(|e| e.person == person && e.item == item)
        .map(|e| table_cell(e.kind, target).expect("legal interaction"))
        .collect();
    if cells.is_empty() {
        None
    } else {
        Some(cells.iter().sum())
    }
}

fn linked(g: &Graph, kind: StructuralEdgeKind, x: NodeId, y: NodeId) -> bool {
    g.structural_edges()
        .any(|e| e.kind == kind && ((e.a == x && e.b == y) || (e.a == y && e.b == x)))
}

/// Direct and shared evidence for an unconsumed movie by path enumeration.
/// `None` when no term exists.
pub fn oracle_movie_score(g: &Graph, person: NodeId, movie: NodeId) -> Option<f64> {
    let all: Vec<NodeId> = g.nodes().iter().map(|n| n.id).collect();
    let attached: Vec<(NodeId, StructuralEdgeKind)> = all
        .iter()
        .filter_map(|&x| {
            if linked(g, StructuralEdgeKind::BelongsTo, movie, x) {
                Some((x, StructuralEdgeKind::BelongsTo))
            } else if linked(g, StructuralEdgeKind::HasKeyword, movie, x) {
                Some((x, StructuralEdgeKind::HasKeyword))
            } else {
                None
            }
        })
        .collect();
    let a = attached
        .iter()
        .filter(|(_, k)| *k == StructuralEdgeKind::BelongsTo)
        .count() as f64;
    let k = attached
        .iter()
        .filter(|(_, k)| *k == StructuralEdgeKind::HasKeyword)
        .count() as f64;
    let mut total = 0.0;
    let mut terms = 0;
    for &(x, _) in &attached {
        if let Some(r) = oracle_weight(g, person, x) {
            total += r / (a + k + 1.0);
            terms += 1;
        }
    }
    for &other in &all {
        if other == movie || kind_of(g, other) != NodeKind::Movie {
            continue;
        }
        let shares = attached.iter().any(|&(x, kind)| linked(g, kind, other, x));
        if shares {
            if let Some(r) = oracle_weight(g, person, other) {
                total += r / ((a + k + 1.0) * 2.0);
                terms += 1;
            }
        }
    }
    (terms > 0).then_some(total)
}

pub fn oracle_widget_score(g: &Graph, person: NodeId, widget: NodeId) -> f64 {
    let movies: Vec<NodeId> = g
        .nodes()
        .iter()
        .map(|n| n.id)
        .filter(|&m| linked(g, StructuralEdgeKind::BelongsTo, widget, m))
        .collect();
    let a = movies.len() as f64;
    let direct = oracle_weight(g, person, widget).unwrap_or(0.0);
    direct
        + movies
            .iter()
            .filter_map(|&m| oracle_weight(g, person, m))
            .map(|r| r / (a + 1.0))
            .sum::<f64>()
}

pub fn is_consumed_oracle(g: &Graph, person: NodeId, movie: NodeId) -> bool {
    g.interactions()
        .iter()
        .any(|e| e.person == person && e.item == movie && e.kind == InteractionKind::Consume)
}

fn random_kind(rng: &mut ChaCha8Rng, target: NodeKind) -> InteractionKind {
    use InteractionKind::*;
    let polarity = |rng: &mut ChaCha8Rng| Polarity::new(rng.random_range(-1.0..=1.0)).unwrap();
    match target {
        NodeKind::Movie => match rng.random_range(0..5) {
            0 => Like,
            1 => Dislike,
            2 => Comment(polarity(rng)),
            3 => Consume,
            _ => FullScreen,
        },
        NodeKind::Widget => match rng.random_range(0..4) {
            0 => Like,
            1 => Dislike,
            2 => Dismiss,
            _ => ShowMore,
        },
        NodeKind::Keyword => Comment(polarity(rng)),
        NodeKind::Person => unreachable!(),
    }
}

/// A random graph of at most `max_nodes` nodes with at least one person and one movie.
pub fn random_graph(seed: u64, max_nodes: usize) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::new();
    let n = rng.random_range(2..=max_nodes);
    g.add_node(NodeKind::Person, "p0").unwrap();
    g.add_node(NodeKind::Movie, "m0").unwrap();
    for i in 2..n {
        let kind = match rng.random_range(0..4) {
            0 => NodeKind::Person,
            1 => NodeKind::Movie,
            2 => NodeKind::Widget,
            _ => NodeKind::Keyword,
        };
        g.add_node(kind, &format!("n{i}")).unwrap();
    }
    let ids: Vec<(NodeId, NodeKind)> = g.nodes().iter().map(|n| (n.id, n.kind)).collect();
    let of = |k: NodeKind| {
        ids.iter()
            .filter(move |(_, kk)| *kk == k)
            .map(|(id, _)| *id)
            .collect::<Vec<_>>()
    };
    let (persons, movies, widgets, keywords) = (
        of(NodeKind::Person),
        of(NodeKind::Movie),
        of(NodeKind::Widget),
        of(NodeKind::Keyword),
    );
    for &m in &movies {
        for &w in &widgets {
            if rng.random_bool(0.5) {
                g.add_structural_edge(StructuralEdgeKind::BelongsTo, w, m).unwrap();
            }
        }
        for &k in &keywords {
            if rng.random_bool(0.5) {
                g.add_structural_edge(StructuralEdgeKind::HasKeyword, m, k).unwrap();
            }
        }
    }
    let items: Vec<(NodeId, NodeKind)> = ids.iter().copied().filter(|(_, k)| *k != NodeKind::Person).collect();
    for &p in &persons {
        for &(item, kind) in &items {
            let count = rng.random_range(0..=2);
            for _ in 0..count {
                if rng.random_bool(0.6) {
                    let k = random_kind(&mut rng, kind);
                    g.add_interaction(InteractionEdge::new(p, item, k)).unwrap();
                }
            }
        }
    }
    g
}

/// Dense random rating matrix; each cell present with probability `density`.
pub fn random_matrix(seed: u64, users: usize, items: usize, density: f64) -> Vec<Vec<Option<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..users)
        .map(|_| {
            (0..items)
                .map(|_| rng.random_bool(density).then(|| rng.random_range(-1.0..=1.0)))
                .collect()
        })
        .collect()
}

/// Graph holding a rating matrix as movie comments: persons first, then movies.
pub fn matrix_graph(m: &[Vec<Option<f64>>]) -> (Graph, Vec<NodeId>, Vec<NodeId>) {
    let mut g = Graph::new();
    let persons: Vec<_> = (0..m.len())
        .map(|i| g.add_node(NodeKind::Person, &format!("p{i}")).unwrap())
        .collect();
    let cols = m.first().map_or(0, Vec::len);
    let movies: Vec<_> = (0..cols)
        .map(|j| g.add_node(NodeKind::Movie, &format!("m{j}")).unwrap())
        .collect();
    for (i, row) in m.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            if let Some(r) = cell {
                let kind = InteractionKind::Comment(Polarity::new(*r).unwrap());
                g.add_interaction(InteractionEdge::new(persons[i], movies[j], kind))
                    .unwrap();
            }
        }
    }
    (g, persons, movies)
}

fn row_mean(row: &[Option<f64>]) -> Option<f64> {
    let vals: Vec<f64> = row.iter().flatten().copied().collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Pearson correlation by the textbook formula over co-rated columns,
/// centering on whole-row means.
pub fn oracle_pearson(m: &[Vec<Option<f64>>], a: usize, u: usize) -> Option<f64> {
    let (ma, mu) = (row_mean(&m[a])?, row_mean(&m[u])?);
    let common: Vec<(f64, f64)> = m[a]
        .iter()
        .zip(&m[u])
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .collect();
    if common.len() < 2 {
        return None;
    }
    let num: f64 = common.iter().map(|(x, y)| (x - ma) * (y - mu)).sum();
    let da: f64 = common.iter().map(|(x, _)| (x - ma).powi(2)).sum();
    let du: f64 = common.iter().map(|(_, y)| (y - mu).powi(2)).sum();
    if da <= 1e-20 || du <= 1e-20 {
        return None;
    }
    Some(num / (da * du).sqrt())
}

/// Mean-centered prediction over every user with a defined nonzero correlation.
/// `k` keeps only the `k` largest |c| (ties toward the lower user index).
pub fn oracle_predict(m: &[Vec<Option<f64>>], a: usize, j: usize, k: Option<usize>) -> Option<f64> {
    let ma = row_mean(&m[a])?;
    let mut pool: Vec<(usize, f64, f64)> = (0..m.len())
        .filter(|&u| u != a)
        .filter_map(|u| {
            let r = m[u][j]?;
            let c = oracle_pearson(m, a, u)?;
            (c != 0.0).then_some((u, c, r - row_mean(&m[u]).unwrap()))
        })
        .collect();
    if let Some(k) = k {
        pool.sort_by(|x, y| y.1.abs().partial_cmp(&x.1.abs()).unwrap().then(x.0.cmp(&y.0)));
        pool.truncate(k);
    }
    if pool.is_empty() {
        return None;
    }
    let num: f64 = pool.iter().map(|(_, c, dev)| dev * c).sum();
    let den: f64 = pool.iter().map(|(_, c, _)| c.abs()).sum();
    Some(ma + num / den)
}

/// Persons × assets weight matrix recomputed from the raw interaction list.
pub fn asset_matrix(g: &Graph) -> (Vec<NodeId>, Vec<NodeId>, Vec<Vec<Option<f64>>>) {
    let persons: Vec<NodeId> = g
        .nodes()
        .iter()
        .filter(|n| n.kind == NodeKind::Person)
        .map(|n| n.id)
        .collect();
    let assets: Vec<NodeId> = g
        .nodes()
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Movie | NodeKind::Widget))
        .map(|n| n.id)
        .collect();
    let m = persons
        .iter()
        .map(|&p| assets.iter().map(|&i| oracle_weight(g, p, i)).collect())
        .collect();
    (persons, assets, m)
}

/// Every unconsumed movie scored by graph evidence, else Pearson, else the
/// person's mean, else the global mean, else 0; best first, ties by id.
pub fn oracle_recommend(g: &Graph, person: NodeId) -> Vec<(NodeId, f64)> {
    let (persons, assets, m) = asset_matrix(g);
    let a = persons.iter().position(|&p| p == person).unwrap();
    let cells: Vec<f64> = m.iter().flatten().flatten().copied().collect();
    let global = (!cells.is_empty()).then(|| cells.iter().sum::<f64>() / cells.len() as f64);
    let mut out: Vec<(NodeId, f64)> = g
        .nodes()
        .iter()
        .filter(|n| n.kind == NodeKind::Movie && !is_consumed_oracle(g, person, n.id))
        .map(|n| {
            let j = assets.iter().position(|&x| x == n.id).unwrap();
            let score = oracle_movie_score(g, person, n.id)
                .or_else(|| oracle_predict(&m, a, j, None))
                .or_else(|| row_mean(&m[a]))
                .or(global)
                .unwrap_or(0.0);
            (n.id, score)
        })
        .collect();
    out.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
    out
}

/// Whether the `k`-th and `k+1`-th largest |c| among raters of `j` are within
/// rounding of each other, which makes the top-k choice numerically ambiguous.
pub fn knn_cut_is_tied(m: &[Vec<Option<f64>>], a: usize, j: usize, k: usize) -> bool {
    let mut mags: Vec<f64> = (0..m.len())
        .filter(|&u| u != a && m[u][j].is_some())
        .filter_map(|u| oracle_pearson(m, a, u))
        .filter(|&c| c != 0.0)
        .map(f64::abs)
        .collect();
    mags.sort_by(|x, y| y.partial_cmp(x).unwrap());
    k < mags.len() && mags[k - 1] - mags[k] < 1e-9
}
