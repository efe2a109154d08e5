//! Deterministic synthetic corpora.
//!
//! Two generators cover the shapes the toolkit cares about: topic-clustered
//! text with a graded similarity dataset, and taxonomy text whose generic
//! words co-occur broadly across their whole subtree. Both are pure
//! functions of their parameters and seed, so tests and benches can
//! materialize identical corpora on demand instead of shipping megabytes
//! of text.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Topic-clustered corpus plus a similarity dataset aligned with the
/// latent clusters.
pub struct ClusteredCorpus {
    pub lines: Vec<String>,
    /// (word1, word2, gold score): same-cluster pairs score high.
    pub similarity: Vec<(String, String, f64)>,
}

/// Sentences draw their tokens from one cluster's Zipf-weighted word
/// distribution, with a small cross-cluster mixing probability so the
/// co-occurrence graph stays connected.
pub fn clustered_corpus(
    n_clusters: usize,
    words_per_cluster: usize,
    n_sentences: usize,
    sentence_len: usize,
    n_sim_pairs: usize,
    seed: u64,
) -> ClusteredCorpus {
    assert!(n_clusters >= 2 && words_per_cluster >= 2);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let word = |c: usize, i: usize| format!("c{c:02}w{i:02}");

    let weights: Vec<f64> = (0..words_per_cluster)
        .map(|i| 1.0 / (i as f64 + 1.0))
        .collect();
    let pick = WeightedIndex::new(&weights).unwrap();

    let mut lines = Vec::with_capacity(n_sentences);
    for _ in 0..n_sentences {
        let cluster = rng.gen_range(0..n_clusters);
        let mut tokens = Vec::with_capacity(sentence_len);
        for _ in 0..sentence_len {
            let c = if rng.gen_bool(0.05) {
                rng.gen_range(0..n_clusters)
            } else {
                cluster
            };
            tokens.push(word(c, pick.sample(&mut rng)));
        }
        lines.push(tokens.join(" "));
    }

    let mut similarity = Vec::with_capacity(n_sim_pairs);
    for k in 0..n_sim_pairs {
        let same = k % 2 == 0;
        let (c1, i1) = (rng.gen_range(0..n_clusters), rng.gen_range(0..words_per_cluster));
        let (mut c2, mut i2);
        if same {
            c2 = c1;
            i2 = rng.gen_range(0..words_per_cluster);
            if i2 == i1 {
                i2 = (i2 + 1) % words_per_cluster;
            }
        } else {
            c2 = rng.gen_range(0..n_clusters);
            while c2 == c1 {
                c2 = rng.gen_range(0..n_clusters);
            }
            i2 = rng.gen_range(0..words_per_cluster);
        }
        let base = if same { 9.0 } else { 1.0 };
        let gold = base + rng.gen_range(-1.0..1.0);
        similarity.push((word(c1, i1), word(c2, i2), gold));
    }

    ClusteredCorpus { lines, similarity }
}

/// Taxonomy corpus: every sentence spells out one root-to-leaf path, with
/// upper levels repeated more often, so generic words are both the most
/// frequent and the most broadly co-occurring.
pub struct TaxonomyCorpus {
    pub lines: Vec<String>,
    /// Gold (child, parent) edges of the generating tree.
    pub edges: Vec<(String, String)>,
    /// All words, level by level from the roots down.
    pub words: Vec<String>,
}

/// Token repeats per level in each sentence, roots first.
const LEVEL_REPEATS: [usize; 4] = [4, 3, 2, 2];

pub fn taxonomy_corpus(
    roots: usize,
    branching: &[usize],
    n_sentences: usize,
    seed: u64,
) -> TaxonomyCorpus {
    assert!(roots >= 1 && !branching.is_empty() && branching.len() <= 3);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    // Build the tree: `parents[level][idx]` is the index within the level
    // above.
    let mut level_sizes = vec![roots];
    for b in branching {
        level_sizes.push(level_sizes.last().unwrap() * b);
    }
    let word = |level: usize, idx: usize| format!("l{level}n{idx:04}");

    let mut words = Vec::new();
    let mut edges = Vec::new();
    for (level, &size) in level_sizes.iter().enumerate() {
        for idx in 0..size {
            words.push(word(level, idx));
            if level > 0 {
                edges.push((word(level, idx), word(level - 1, idx / branching[level - 1])));
            }
        }
    }

    let n_levels = level_sizes.len();
    let leaves = *level_sizes.last().unwrap();
    let mut lines = Vec::with_capacity(n_sentences);
    let mut tokens: Vec<String> = Vec::new();
    for _ in 0..n_sentences {
        // Uniform leaf, then its ancestor path.
        let mut idx = rng.gen_range(0..leaves);
        let mut path = vec![0usize; n_levels];
        path[n_levels - 1] = idx;
        for level in (0..n_levels - 1).rev() {
            idx /= branching[level];
            path[level] = idx;
        }
        tokens.clear();
        for (level, &node) in path.iter().enumerate() {
            for _ in 0..LEVEL_REPEATS[level.min(LEVEL_REPEATS.len() - 1)] {
                tokens.push(word(level, node));
            }
        }
        tokens.shuffle(&mut rng);
        lines.push(tokens.join(" "));
    }

    TaxonomyCorpus {
        lines,
        edges,
        words,
    }
}
