use std::collections::HashSet;
use std::path::PathBuf;

use graphrec_core::dataset::{build_graph, load_movielens, sample_dataset, RatingMode, SampleSpec};
use graphrec_core::persist::write_graph;
use graphrec_core::NodeKind;

fn data_dir() -> PathBuf {
    std::env::var_os("GRAPHREC_MOVIELENS_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/ml-latest-small"))
}

fn data_lines(name: &str) -> Vec<String> {
    let text = std::fs::read_to_string(data_dir().join(name)).unwrap();
    text.lines().skip(1).map(str::to_owned).collect()
}

#[test]
fn loader_counts_match_raw_files() {
    let raw = load_movielens(data_dir()).unwrap();
    let ratings = data_lines("ratings.csv");
    let users: HashSet<&str> = ratings.iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(raw.ratings.len(), ratings.len());
    assert_eq!(raw.ratings.len(), 100_004);
    assert_eq!(users.len(), 671);
    // titles may hold quoted newlines in principle; this file has none
    assert_eq!(raw.movies.len(), data_lines("movies.csv").len());
    assert_eq!(raw.tags.len(), data_lines("tags.csv").len());
    let s = raw.summary();
    assert_eq!((s.users, s.movies, s.ratings), (671, 9125, 100_004));
}

#[test]
fn sampled_graph_counts_equal_distinct_ids() {
    let raw = load_movielens(data_dir()).unwrap();
    let spec = SampleSpec {
        n_movies: 1032,
        seed: 3,
        include_tags: true,
    };
    let sample = sample_dataset(&raw, &spec).unwrap();
    let g = build_graph(&sample, RatingMode::Linear).unwrap();
    let users: HashSet<u32> = sample.ratings.iter().map(|r| r.user_id).collect();
    let tags: HashSet<String> = sample.tags.iter().map(|t| t.tag.trim().to_lowercase()).collect();
    let tag_edges: HashSet<(u32, String)> = sample
        .tags
        .iter()
        .map(|t| (t.movie_id, t.tag.trim().to_lowercase()))
        .collect();
    assert_eq!(g.nodes_of_kind(NodeKind::Movie).count(), 1032);
    assert_eq!(g.nodes_of_kind(NodeKind::Person).count(), users.len());
    assert_eq!(g.nodes_of_kind(NodeKind::Keyword).count(), tags.len());
    assert_eq!(g.interaction_count(), sample.ratings.len());
    assert_eq!(g.structural_edge_count(), tag_edges.len());
}

#[test]
fn sampling_is_byte_deterministic() {
    let raw = load_movielens(data_dir()).unwrap();
    let spec = SampleSpec {
        n_movies: 500,
        seed: 11,
        include_tags: true,
    };
    let render = || {
        let g = build_graph(&sample_dataset(&raw, &spec).unwrap(), RatingMode::Binary).unwrap();
        let mut out = Vec::new();
        write_graph(&g, &mut out).unwrap();
        out
    };
    assert_eq!(render(), render());
}
