//! Benchmark harness: Spearman rank correlation, similarity evaluation,
//! HyperLex-style graded entailment, and WBLESS-style thresholded
//! classification, all with out-of-vocabulary accounting.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::analogy::{NeighborMetric, WordVectors};
use crate::corpus::Vocab;
use crate::error::{Error, Result};
use crate::hypernymy::{isa_score, to_gaussian, GaussianEmbedding, IsometryTransform};
use crate::manifold::ops;
use crate::par;
use crate::trainer::{flat_product_distance, EmbeddingTable};

/// Pearson correlation of the rank vectors, ties averaged. None when either
/// side has zero rank variance.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry)
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("scores must not be NaN"));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // 1-based ranks; tied values share the average of their ranks.
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        dx += (x - mx) * (x - mx);
        dy += (y - my) * (y - my);
    }
    if dx == 0.0 || dy == 0.0 {
        None
    } else {
        Some(num / (dx * dy).sqrt())
    }
}

/// Rows of (word1, word2, gold score).
#[derive(Debug, Clone)]
pub struct SimilarityDataset {
    pub rows: Vec<(String, String, f64)>,
}

impl SimilarityDataset {
    /// Loads "word1<TAB>word2<TAB>score" lines.
    pub fn load(path: &Path) -> Result<SimilarityDataset> {
        let rows = load_pair_rows(path)?;
        if rows.is_empty() {
            return Err(Error::Empty(format!(
                "similarity dataset {} is empty",
                path.display()
            )));
        }
        Ok(SimilarityDataset { rows })
    }
}

/// Rows of (hyponym, hypernym, label-or-graded-score).
#[derive(Debug, Clone)]
pub struct EntailmentDataset {
    pub rows: Vec<(String, String, f64)>,
}

impl EntailmentDataset {
    pub fn load(path: &Path) -> Result<EntailmentDataset> {
        let rows = load_pair_rows(path)?;
        if rows.is_empty() {
            return Err(Error::Empty(format!(
                "entailment dataset {} is empty",
                path.display()
            )));
        }
        Ok(EntailmentDataset { rows })
    }
}

fn load_pair_rows(path: &Path) -> Result<Vec<(String, String, f64)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("expected word1<TAB>word2<TAB>value, found {line:?}"),
            });
        }
        let value: f64 = parts[2].trim().parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            msg: format!("bad value {:?}", parts[2]),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: "value must be finite".into(),
            });
        }
        rows.push((parts[0].to_string(), parts[1].to_string(), value));
    }
    Ok(rows)
}

/// One dataset row in the JSON-lines detail log.
#[derive(Debug, Clone, Serialize)]
pub struct PairRowDetail {
    pub word1: String,
    pub word2: String,
    pub gold: f64,
    pub score: Option<f64>,
    pub used: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimilarityReport {
    pub spearman: Option<f64>,
    pub n_used: usize,
    pub n_dropped: usize,
    pub details: Vec<PairRowDetail>,
}

/// Ranks word pairs by model similarity (minus the product Poincaré
/// distance, or cosine on the concatenated coordinates) and correlates
/// with the gold scores. Rows with out-of-vocabulary words are dropped and
/// counted.
pub fn eval_similarity(
    dataset: &SimilarityDataset,
    vectors: &WordVectors,
    vocab: &Vocab,
    metric: NeighborMetric,
) -> Result<SimilarityReport> {
    let dim = vectors.factor_dim();
    let scored = par::map_batches(dataset.rows.clone(), |(w1, w2, gold)| {
        let score = match (vocab.id(&w1), vocab.id(&w2)) {
            (Some(a), Some(b)) => Some(match metric {
                NeighborMetric::PoincareDistance => {
                    -flat_product_distance(vectors.vector(a), vectors.vector(b), dim)
                }
                // Zero-norm vectors get a neutral similarity of 0.
                NeighborMetric::CosineFullVector => {
                    cosine_or_zero(vectors.vector(a), vectors.vector(b))
                }
            }),
            _ => None,
        };
        (w1, w2, gold, score)
    });
    let mut details = Vec::with_capacity(scored.len());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (word1, word2, gold, score) in scored {
        details.push(PairRowDetail {
            word1,
            word2,
            gold,
            score,
            used: score.is_some(),
        });
        if let Some(s) = score {
            xs.push(s);
            ys.push(gold);
        }
    }
    if xs.is_empty() {
        return Err(Error::Empty(
            "every dataset row contains an out-of-vocabulary word".into(),
        ));
    }
    Ok(SimilarityReport {
        spearman: spearman(&xs, &ys),
        n_used: xs.len(),
        n_dropped: details.len() - xs.len(),
        details,
    })
}

fn cosine_or_zero(x: &[f64], y: &[f64]) -> f64 {
    let nx = ops::norm(x);
    let ny = ops::norm(y);
    if nx == 0.0 || ny == 0.0 {
        0.0
    } else {
        ops::dot(x, y) / (nx * ny)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HyperlexReport {
    pub spearman: Option<f64>,
    pub n_used: usize,
    pub n_dropped: usize,
    pub details: Vec<PairRowDetail>,
}

fn gaussians_for(
    table: &EmbeddingTable,
    transform: &IsometryTransform,
    ids: impl Iterator<Item = u32>,
) -> Result<HashMap<u32, GaussianEmbedding>> {
    let mut cache = HashMap::new();
    for id in ids {
        if let std::collections::hash_map::Entry::Vacant(e) = cache.entry(id) {
            let (g, _) = to_gaussian(&table.target_point(id), transform)?;
            e.insert(g);
        }
    }
    Ok(cache)
}

/// Spearman correlation between isa(hyponym, hypernym) and the graded gold
/// scores.
pub fn eval_hyperlex(
    dataset: &EntailmentDataset,
    table: &EmbeddingTable,
    vocab: &Vocab,
    transform: &IsometryTransform,
) -> Result<HyperlexReport> {
    let ids = dataset
        .rows
        .iter()
        .flat_map(|(w1, w2, _)| [vocab.id(w1), vocab.id(w2)])
        .flatten();
    let gaussians = gaussians_for(table, transform, ids)?;
    let mut details = Vec::with_capacity(dataset.rows.len());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (w1, w2, gold) in &dataset.rows {
        let score = match (vocab.id(w1), vocab.id(w2)) {
            (Some(a), Some(b)) => Some(isa_score(&gaussians[&a], &gaussians[&b])?),
            _ => None,
        };
        details.push(PairRowDetail {
            word1: w1.clone(),
            word2: w2.clone(),
            gold: *gold,
            score,
            used: score.is_some(),
        });
        if let Some(s) = score {
            xs.push(s);
            ys.push(*gold);
        }
    }
    if xs.is_empty() {
        return Err(Error::Empty(
            "every dataset row contains an out-of-vocabulary word".into(),
        ));
    }
    Ok(HyperlexReport {
        spearman: spearman(&xs, &ys),
        n_used: xs.len(),
        n_dropped: details.len() - xs.len(),
        details,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WblessReport {
    pub mean_accuracy: f64,
    pub repeats: usize,
    pub n_used: usize,
    pub n_dropped: usize,
    pub details: Vec<PairRowDetail>,
}

const HOLDOUT_RETRIES: usize = 100;

/// Threshold-based classification: per repeat, a holdout fraction picks
/// the isa-score threshold (midpoints between sorted adjacent holdout
/// scores, ties to the smaller), and the remainder is scored; reports the
/// mean accuracy over seeded repeats.
pub fn eval_wbless(
    dataset: &EntailmentDataset,
    table: &EmbeddingTable,
    vocab: &Vocab,
    transform: &IsometryTransform,
    holdout: f64,
    repeats: usize,
    seed: u64,
) -> Result<WblessReport> {
    if !(0.0 < holdout && holdout < 1.0) {
        return Err(Error::InvalidInput(format!(
            "holdout fraction must be in (0, 1), got {holdout}"
        )));
    }
    if repeats == 0 {
        return Err(Error::InvalidInput("repeats must be >= 1".into()));
    }
    for (_, _, label) in &dataset.rows {
        if *label != 0.0 && *label != 1.0 {
            return Err(Error::InvalidInput(format!(
                "classification labels must be 0 or 1, found {label}"
            )));
        }
    }
    let ids = dataset
        .rows
        .iter()
        .flat_map(|(w1, w2, _)| [vocab.id(w1), vocab.id(w2)])
        .flatten();
    let gaussians = gaussians_for(table, transform, ids)?;
    let mut scored: Vec<(f64, bool)> = Vec::new();
    let mut dropped = 0usize;
    let mut details = Vec::with_capacity(dataset.rows.len());
    for (w1, w2, label) in &dataset.rows {
        let score = match (vocab.id(w1), vocab.id(w2)) {
            (Some(a), Some(b)) => {
                let s = isa_score(&gaussians[&a], &gaussians[&b])?;
                scored.push((s, *label == 1.0));
                Some(s)
            }
            _ => {
                dropped += 1;
                None
            }
        };
        details.push(PairRowDetail {
            word1: w1.clone(),
            word2: w2.clone(),
            gold: *label,
            score,
            used: score.is_some(),
        });
    }
    let n = scored.len();
    let holdout_size = ((n as f64 * holdout).round() as usize).max(1);
    if n < holdout_size + 1 {
        return Err(Error::Empty(format!(
            "only {n} usable rows; holdout of {holdout_size} leaves nothing to score"
        )));
    }

    let accuracies = par::map_indexed(repeats, |r| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(1 + r as u64);
        repeat_accuracy(&scored, holdout_size, &mut rng)
    });
    let mut total = 0.0;
    for acc in accuracies {
        total += acc?;
    }
    Ok(WblessReport {
        mean_accuracy: total / repeats as f64,
        repeats,
        n_used: n,
        n_dropped: dropped,
        details,
    })
}

fn repeat_accuracy(
    scored: &[(f64, bool)],
    holdout_size: usize,
    rng: &mut ChaCha20Rng,
) -> Result<f64> {
    let mut order: Vec<usize> = (0..scored.len()).collect();
    for _ in 0..HOLDOUT_RETRIES {
        order.shuffle(rng);
        let holdout = &order[..holdout_size];
        let has_pos = holdout.iter().any(|&i| scored[i].1);
        let has_neg = holdout.iter().any(|&i| !scored[i].1);
        if !(has_pos && has_neg) {
            continue;
        }
        let mut hold_scores: Vec<(f64, bool)> =
            holdout.iter().map(|&i| scored[i]).collect();
        hold_scores.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("scores must not be NaN"));
        // Candidates: midpoints between adjacent holdout scores plus the
        // two boundary thresholds (predict-all-positive/-negative).
        // Without the boundaries a degenerate-but-optimal classifier is
        // unreachable and the null model cannot match the class prior.
        let mut candidates = vec![hold_scores[0].0 - 1.0];
        for w in hold_scores.windows(2) {
            if w[0].0 < w[1].0 {
                candidates.push((w[0].0 + w[1].0) / 2.0);
            }
        }
        candidates.push(hold_scores[hold_scores.len() - 1].0 + 1.0);
        let mut best = (f64::NEG_INFINITY, f64::NAN);
        for &theta in &candidates {
            let correct = hold_scores
                .iter()
                .filter(|(s, label)| (*s >= theta) == *label)
                .count();
            let acc = correct as f64 / hold_scores.len() as f64;
            if acc > best.0 {
                best = (acc, theta);
            }
        }
        let theta = best.1;
        let rest = &order[holdout_size..];
        let correct = rest
            .iter()
            .filter(|&&i| (scored[i].0 >= theta) == scored[i].1)
            .count();
        return Ok(correct as f64 / rest.len() as f64);
    }
    Err(Error::Empty(format!(
        "holdout kept a single class for {HOLDOUT_RETRIES} resamples"
    )))
}
