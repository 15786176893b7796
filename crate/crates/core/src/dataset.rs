//! MovieLens ingestion: CSV loading, star → weight mapping, movie sampling and
//! graph construction.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalize_label, Graph, NodeId, NodeKind, StructuralEdgeKind};
use crate::interaction::{InteractionEdge, InteractionKind, Polarity, RatingWeight};

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
pub struct Rating {
    #[serde(rename = "userId")]
    pub user_id: u32,
    #[serde(rename = "movieId")]
    pub movie_id: u32,
    #[serde(rename = "rating")]
    pub stars: f64,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct Movie {
    #[serde(rename = "movieId")]
    pub movie_id: u32,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct Tag {
    #[serde(rename = "userId")]
    pub user_id: u32,
    #[serde(rename = "movieId")]
    pub movie_id: u32,
    pub tag: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawDataset {
    pub ratings: Vec<Rating>,
    pub movies: Vec<Movie>,
    pub tags: Vec<Tag>,
}

/// Table-2 style counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DatasetSummary {
    pub users: usize,
    pub movies: usize,
    pub ratings: usize,
    pub keywords: usize,
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "users={} movies={} ratings={} keywords={}",
            self.users, self.movies, self.ratings, self.keywords
        )
    }
}

impl RawDataset {
    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            users: self.ratings.iter().map(|r| r.user_id).collect::<HashSet<_>>().len(),
            movies: self.movies.len(),
            ratings: self.ratings.len(),
            keywords: self
                .tags
                .iter()
                .map(|t| normalize_label(NodeKind::Keyword, &t.tag))
                .filter(|t| !t.is_empty())
                .collect::<HashSet<_>>()
                .len(),
        }
    }

    /// Every rating and tag references a known movie; stars lie on the half-star grid.
    pub fn validate(&self) -> Result<()> {
        let known: HashSet<u32> = self.movies.iter().map(|m| m.movie_id).collect();
        if known.len() != self.movies.len() {
            return Err(Error::Integrity("duplicate movieId in movies".into()));
        }
        for r in &self.ratings {
            if !known.contains(&r.movie_id) {
                return Err(Error::Integrity(format!(
                    "rating by user {} references unknown movie {}",
                    r.user_id, r.movie_id
                )));
            }
            check_stars(r.stars)?;
        }
        for t in &self.tags {
            if !known.contains(&t.movie_id) {
                return Err(Error::Integrity(format!(
                    "tag {:?} references unknown movie {}",
                    t.tag, t.movie_id
                )));
            }
        }
        Ok(())
    }
}

fn check_stars(stars: f64) -> Result<()> {
    if !(0.5..=5.0).contains(&stars) || (stars * 2.0).fract() != 0.0 {
        return Err(Error::Validation(format!(
            "star rating {stars} not in 0.5..=5.0 half-star steps"
        )));
    }
    Ok(())
}

fn read_csv<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<Vec<T>> {
    let path = dir.join(name);
    let file = File::open(&path)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let file_label = path.display().to_string();
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        let row: T = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::parse(file_label.clone(), line, e.to_string())
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads `ratings.csv`, `movies.csv` and `tags.csv` from a MovieLens directory.
pub fn load_movielens(dir: impl AsRef<Path>) -> Result<RawDataset> {
    let dir = dir.as_ref();
    let movies: Vec<Movie> = read_csv(dir, "movies.csv")?;
    let ratings: Vec<Rating> = read_csv(dir, "ratings.csv")?;
    let tags: Vec<Tag> = read_csv(dir, "tags.csv")?;
    for (i, r) in ratings.iter().enumerate() {
        // header is line 1
        check_stars(r.stars).map_err(|e| {
            Error::parse(
                dir.join("ratings.csv").display().to_string(),
                i as u64 + 2,
                e.to_string(),
            )
        })?;
    }
    let raw = RawDataset { ratings, movies, tags };
    raw.validate()?;
    Ok(raw)
}

/// How star ratings become interactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RatingMode {
    /// Comment with polarity `(stars - 2.75) / 2.25`.
    #[default]
    Linear,
    /// Like for 3.5 stars and above, Dislike below.
    Binary,
}

impl FromStr for RatingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(RatingMode::Linear),
            "binary" => Ok(RatingMode::Binary),
            other => Err(format!("unknown rating mode {other:?} (expected linear or binary)")),
        }
    }
}

impl fmt::Display for RatingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RatingMode::Linear => "linear",
            RatingMode::Binary => "binary",
        })
    }
}

pub const BINARY_LIKE_THRESHOLD: f64 = 3.5;

pub fn map_rating_to_weight(stars: f64, mode: RatingMode) -> Result<RatingWeight> {
    if !stars.is_finite() || !(0.5..=5.0).contains(&stars) {
        return Err(Error::Validation(format!("star rating {stars} outside [0.5, 5.0]")));
    }
    Ok(RatingWeight(match mode {
        RatingMode::Linear => (stars - 2.75) / 2.25,
        RatingMode::Binary if stars >= BINARY_LIKE_THRESHOLD => 1.0,
        RatingMode::Binary => -1.0,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub n_movies: usize,
    pub seed: u64,
    pub include_tags: bool,
}

/// Uniformly samples `n_movies` movies and keeps every rating and tag that touches them.
/// Row order of the input is preserved.
pub fn sample_dataset(raw: &RawDataset, spec: &SampleSpec) -> Result<RawDataset> {
    if spec.n_movies == 0 {
        return Err(Error::Validation("n_movies must be at least 1".into()));
    }
    if spec.n_movies > raw.movies.len() {
        return Err(Error::Validation(format!(
            "cannot sample {} movies from {}",
            spec.n_movies,
            raw.movies.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let picked: HashSet<u32> = rand::seq::index::sample(&mut rng, raw.movies.len(), spec.n_movies)
        .into_iter()
        .map(|i| raw.movies[i].movie_id)
        .collect();
    Ok(RawDataset {
        ratings: raw
            .ratings
            .iter()
            .filter(|r| picked.contains(&r.movie_id))
            .copied()
            .collect(),
        movies: raw
            .movies
            .iter()
            .filter(|m| picked.contains(&m.movie_id))
            .cloned()
            .collect(),
        tags: if spec.include_tags {
            raw.tags
                .iter()
                .filter(|t| picked.contains(&t.movie_id))
                .cloned()
                .collect()
        } else {
            Vec::new()
        },
    })
}

pub fn person_label(user_id: u32) -> String {
    format!("user:{user_id}")
}

pub fn movie_label(movie_id: u32) -> String {
    format!("movie:{movie_id}")
}

/// Builds the property graph: movies (input order), then persons (ascending user
/// id), then keywords (first appearance). Duplicate (user, movie) ratings keep the
/// latest by timestamp, later rows winning ties.
pub fn build_graph(raw: &RawDataset, mode: RatingMode) -> Result<Graph> {
    raw.validate()?;
    let mut graph = Graph::new();
    let mut movie_ids: HashMap<u32, NodeId> = HashMap::with_capacity(raw.movies.len());
    for m in &raw.movies {
        movie_ids.insert(m.movie_id, graph.add_node(NodeKind::Movie, &movie_label(m.movie_id))?);
    }
    let users: BTreeSet<u32> = raw.ratings.iter().map(|r| r.user_id).collect();
    let mut person_ids: HashMap<u32, NodeId> = HashMap::with_capacity(users.len());
    for u in users {
        person_ids.insert(u, graph.add_node(NodeKind::Person, &person_label(u))?);
    }
    for t in &raw.tags {
        if normalize_label(NodeKind::Keyword, &t.tag).is_empty() {
            continue;
        }
        let k = graph.add_node(NodeKind::Keyword, &t.tag)?;
        graph.add_structural_edge(StructuralEdgeKind::HasKeyword, movie_ids[&t.movie_id], k)?;
    }

    let mut latest: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (i, r) in raw.ratings.iter().enumerate() {
        latest
            .entry((r.user_id, r.movie_id))
            .and_modify(|best| {
                if r.timestamp >= raw.ratings[*best].timestamp {
                    *best = i;
                }
            })
            .or_insert(i);
    }
    let keep: HashSet<usize> = latest.into_values().collect();
    for (i, r) in raw.ratings.iter().enumerate() {
        if !keep.contains(&i) {
            continue;
        }
        let weight = map_rating_to_weight(r.stars, mode)?.value();
        let kind = match mode {
            RatingMode::Linear => InteractionKind::Comment(Polarity::new(weight)?),
            RatingMode::Binary if weight > 0.0 => InteractionKind::Like,
            RatingMode::Binary => InteractionKind::Dislike,
        };
        graph.add_interaction(
            InteractionEdge::new(person_ids[&r.user_id], movie_ids[&r.movie_id], kind).at(r.timestamp),
        )?;
    }
    Ok(graph)
}
