//! Analogy solving: gyro-parallelogram constructions, geodesic
//! interpolation between the two candidate answers, nearest-neighbor
//! retrieval, the 3COSADD baseline, Google-format dataset evaluation, and
//! 2-fold cross-validation of the interpolation parameter t.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::corpus::Vocab;
use crate::error::{Error, Result};
use crate::manifold::{self, ops, BallPoint, ProductPoint};
use crate::par;
use crate::trainer::{flat_product_distance, EmbeddingTable};

/// An "a : b :: c : gold" query over word ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalogyQuery {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub gold: u32,
}

/// How neighbors of the answer point are ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborMetric {
    /// argmin of the product Poincaré distance.
    PoincareDistance,
    /// argmax of cosine similarity on the concatenated factor coordinates.
    CosineFullVector,
}

/// Which vectors represent a word during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorSource {
    /// Target vectors w only.
    Target,
    /// Per-factor gyro-midpoint of the target and context vectors.
    TargetContextMidpoint,
}

/// A dense V × (p·k) matrix of word vectors materialized from a model.
#[derive(Debug, Clone)]
pub struct WordVectors {
    factors: usize,
    dim: usize,
    data: Vec<f64>,
}

impl WordVectors {
    pub fn from_table(table: &EmbeddingTable, source: VectorSource) -> Result<WordVectors> {
        let wd = table.word_dim();
        let mut data = Vec::with_capacity(table.vocab_size() * wd);
        for word in 0..table.vocab_size() as u32 {
            match source {
                VectorSource::Target => data.extend_from_slice(table.target_vector(word)),
                VectorSource::TargetContextMidpoint => {
                    let t = table.target_point(word);
                    let c = table.context_point(word);
                    for (tf, cf) in t.factors().iter().zip(c.factors()) {
                        let mid = manifold::geodesic_point(tf, cf, 0.5)?;
                        data.extend_from_slice(mid.coords());
                    }
                }
            }
        }
        Ok(WordVectors {
            factors: table.num_factors(),
            dim: table.factor_dim(),
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.factors * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn num_factors(&self) -> usize {
        self.factors
    }

    pub fn factor_dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, word: u32) -> &[f64] {
        let wd = self.factors * self.dim;
        &self.data[word as usize * wd..(word as usize + 1) * wd]
    }

    pub fn point(&self, word: u32) -> ProductPoint {
        ProductPoint::from_flat(self.vector(word), self.factors, self.dim)
            .expect("stored vectors are inside the ball")
    }
}

/// The two gyro-parallelogram completions of (a, b, c):
/// d₁ = c ⊕ gyr[c, ⊖a](⊖a ⊕ b) and d₂ = b ⊕ gyr[b, ⊖a](⊖a ⊕ c),
/// applied factor-wise. They generalize c + (b − a) and b + (c − a) and
/// differ in curved space.
pub fn gyro_parallelogram(
    a: &ProductPoint,
    b: &ProductPoint,
    c: &ProductPoint,
) -> Result<(ProductPoint, ProductPoint)> {
    let d1 = parallelogram_factorwise(a, b, c)?;
    let d2 = parallelogram_factorwise(a, c, b)?;
    Ok((d1, d2))
}

fn parallelogram_factorwise(
    a: &ProductPoint,
    b: &ProductPoint,
    c: &ProductPoint,
) -> Result<ProductPoint> {
    let mut factors = Vec::with_capacity(a.num_factors());
    for ((af, bf), cf) in a.factors().iter().zip(b.factors()).zip(c.factors()) {
        let diff = manifold::mobius_sub(af, bf)?;
        let rotated = manifold::gyration(cf, &af.neg(), diff.coords())?;
        let rotated = BallPoint::project(rotated)?;
        factors.push(manifold::mobius_add(cf, &rotated)?);
    }
    ProductPoint::new(factors)
}

/// The answer point m^t on the geodesic between the two parallelogram
/// solutions, factor-wise.
pub fn analogy_answer(
    a: &ProductPoint,
    b: &ProductPoint,
    c: &ProductPoint,
    t: f64,
) -> Result<ProductPoint> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("t must be in [0, 1], got {t}")));
    }
    let (d1, d2) = gyro_parallelogram(a, b, c)?;
    let factors = d1
        .factors()
        .iter()
        .zip(d2.factors())
        .map(|(f1, f2)| manifold::geodesic_point(f1, f2, t))
        .collect::<Result<Vec<_>>>()?;
    ProductPoint::new(factors)
}

fn cosine(x: &[f64], y: &[f64]) -> Option<f64> {
    let nx = ops::norm(x);
    let ny = ops::norm(y);
    if nx == 0.0 || ny == 0.0 {
        return None;
    }
    Some(ops::dot(x, y) / (nx * ny))
}

/// Nearest vocabulary word to a query point, excluding the given ids.
/// Ties break toward the lowest id; zero-norm candidates are skipped under
/// the cosine metric.
pub fn nearest_word(
    query: &[f64],
    vectors: &WordVectors,
    metric: NeighborMetric,
    exclude: &[u32],
) -> Result<u32> {
    let v = vectors.len();
    let excluded: HashSet<u32> = exclude.iter().copied().collect();
    if excluded.len() >= v {
        return Err(Error::Empty("no candidate words left".into()));
    }
    let dim = vectors.factor_dim();

    // Deterministic regardless of chunking: per-chunk winners fold in
    // chunk order with the same lowest-id tie-break as a linear scan.
    let chunk = 4096usize;
    let n_chunks = v.div_ceil(chunk);
    let bests = par::map_indexed(n_chunks, |ci| {
        let lo = ci * chunk;
        let hi = ((ci + 1) * chunk).min(v);
        let mut best: Option<(f64, u32)> = None;
        for word in lo as u32..hi as u32 {
            if excluded.contains(&word) {
                continue;
            }
            let score = match metric {
                NeighborMetric::PoincareDistance => {
                    flat_product_distance(query, vectors.vector(word), dim)
                }
                NeighborMetric::CosineFullVector => {
                    match cosine(query, vectors.vector(word)) {
                        Some(c) => -c,
                        None => continue,
                    }
                }
            };
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, word));
            }
        }
        best
    });
    bests
        .into_iter()
        .flatten()
        .fold(None::<(f64, u32)>, |acc, b| match acc {
            Some(a) if a.0 <= b.0 => Some(a),
            _ => Some(b),
        })
        .map(|(_, w)| w)
        .ok_or_else(|| Error::Empty("no scorable candidate words".into()))
}

/// 3COSADD: argmax of cos(d, c) + cos(d, b) − cos(d, a) over the
/// vocabulary, excluding the query words; zero-norm vectors never win.
pub fn three_cos_add(a: u32, b: u32, c: u32, vectors: &WordVectors) -> Result<u32> {
    let excluded = [a, b, c];
    let (va, vb, vc) = (vectors.vector(a), vectors.vector(b), vectors.vector(c));
    let mut best: Option<(f64, u32)> = None;
    for word in 0..vectors.len() as u32 {
        if excluded.contains(&word) {
            continue;
        }
        let vd = vectors.vector(word);
        let (Some(sc), Some(sb), Some(sa)) = (cosine(vd, vc), cosine(vd, vb), cosine(vd, va))
        else {
            continue;
        };
        let score = sc + sb - sa;
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, word));
        }
    }
    best.map(|(_, w)| w)
        .ok_or_else(|| Error::Empty("no scorable candidate words".into()))
}

/// How the answer word is produced for a query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalogyMethod {
    /// Hyperbolic: nearest word to m^t between the parallelogram solutions.
    Geodesic { t: f64, metric: NeighborMetric },
    /// Euclidean baseline on the concatenated coordinates.
    ThreeCosAdd,
}

/// A Google-format analogy dataset: ": <name>" section headers followed by
/// "a b c gold" rows. Sections whose name starts with "gram" count as
/// syntactic, the rest as semantic.
#[derive(Debug, Clone)]
pub struct AnalogyDataset {
    pub sections: Vec<AnalogySection>,
}

#[derive(Debug, Clone)]
pub struct AnalogySection {
    pub name: String,
    pub rows: Vec<[String; 4]>,
}

pub fn section_is_syntactic(name: &str) -> bool {
    name.starts_with("gram")
}

impl AnalogyDataset {
    pub fn load(path: &Path) -> Result<AnalogyDataset> {
        let reader = BufReader::new(File::open(path)?);
        let mut sections: Vec<AnalogySection> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(name) = trimmed.strip_prefix(':') {
                sections.push(AnalogySection {
                    name: name.trim().to_string(),
                    rows: Vec::new(),
                });
                continue;
            }
            let words: Vec<&str> = trimmed.split_whitespace().collect();
            if words.len() != 4 {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("expected 4 words, found {}", words.len()),
                });
            }
            if sections.is_empty() {
                sections.push(AnalogySection {
                    name: String::new(),
                    rows: Vec::new(),
                });
            }
            sections.last_mut().unwrap().rows.push([
                words[0].to_string(),
                words[1].to_string(),
                words[2].to_string(),
                words[3].to_string(),
            ]);
        }
        Ok(AnalogyDataset { sections })
    }

    pub fn num_rows(&self) -> usize {
        self.sections.iter().map(|s| s.rows.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SplitAccuracy {
    pub correct: usize,
    pub evaluated: usize,
}

impl SplitAccuracy {
    pub fn accuracy(&self) -> f64 {
        if self.evaluated == 0 {
            0.0
        } else {
            self.correct as f64 / self.evaluated as f64
        }
    }
}

/// One evaluated (or dropped) dataset row, for the JSON-lines detail log.
#[derive(Debug, Clone, Serialize)]
pub struct AnalogyRowDetail {
    pub a: String,
    pub b: String,
    pub c: String,
    pub gold: String,
    pub predicted: Option<String>,
    pub used: bool,
    pub correct: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalogyReport {
    pub semantic: SplitAccuracy,
    pub syntactic: SplitAccuracy,
    pub total: SplitAccuracy,
    pub dropped: usize,
    pub details: Vec<AnalogyRowDetail>,
}

fn answer_query(
    q: &AnalogyQuery,
    vectors: &WordVectors,
    method: AnalogyMethod,
) -> Result<u32> {
    match method {
        AnalogyMethod::Geodesic { t, metric } => {
            let answer = analogy_answer(
                &vectors.point(q.a),
                &vectors.point(q.b),
                &vectors.point(q.c),
                t,
            )?;
            nearest_word(&answer.flatten(), vectors, metric, &[q.a, q.b, q.c])
        }
        AnalogyMethod::ThreeCosAdd => three_cos_add(q.a, q.b, q.c, vectors),
    }
}

/// Runs every dataset row with in-vocabulary words through the solver;
/// rows containing out-of-vocabulary words are dropped and counted.
pub fn eval_analogy(
    dataset: &AnalogyDataset,
    vectors: &WordVectors,
    vocab: &Vocab,
    method: AnalogyMethod,
) -> Result<AnalogyReport> {
    let mut report = AnalogyReport {
        semantic: SplitAccuracy::default(),
        syntactic: SplitAccuracy::default(),
        total: SplitAccuracy::default(),
        dropped: 0,
        details: Vec::with_capacity(dataset.num_rows()),
    };
    for section in &dataset.sections {
        let syntactic = section_is_syntactic(&section.name);
        let resolved: Vec<Option<AnalogyQuery>> = section
            .rows
            .iter()
            .map(|row| {
                match (
                    vocab.id(&row[0]),
                    vocab.id(&row[1]),
                    vocab.id(&row[2]),
                    vocab.id(&row[3]),
                ) {
                    (Some(a), Some(b), Some(c), Some(gold)) => {
                        Some(AnalogyQuery { a, b, c, gold })
                    }
                    _ => None,
                }
            })
            .collect();
        let answers = par::map_batches(resolved.clone(), |q| {
            q.map(|q| answer_query(&q, vectors, method))
        });
        for ((row, q), ans) in section.rows.iter().zip(&resolved).zip(answers) {
            match (q, ans) {
                (Some(q), Some(predicted)) => {
                    let predicted = predicted?;
                    let correct = predicted == q.gold;
                    let split = if syntactic {
                        &mut report.syntactic
                    } else {
                        &mut report.semantic
                    };
                    split.evaluated += 1;
                    report.total.evaluated += 1;
                    if correct {
                        split.correct += 1;
                        report.total.correct += 1;
                    }
                    report.details.push(AnalogyRowDetail {
                        a: row[0].clone(),
                        b: row[1].clone(),
                        c: row[2].clone(),
                        gold: row[3].clone(),
                        predicted: Some(vocab.word(predicted).to_string()),
                        used: true,
                        correct,
                    });
                }
                _ => {
                    report.dropped += 1;
                    report.details.push(AnalogyRowDetail {
                        a: row[0].clone(),
                        b: row[1].clone(),
                        c: row[2].clone(),
                        gold: row[3].clone(),
                        predicted: None,
                        used: false,
                        correct: false,
                    });
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct CvFold {
    pub best_t: f64,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossValidation {
    pub folds: [CvFold; 2],
}

fn accuracy_at_t(
    queries: &[AnalogyQuery],
    vectors: &WordVectors,
    metric: NeighborMetric,
    t: f64,
) -> Result<f64> {
    if queries.is_empty() {
        return Ok(0.0);
    }
    let method = AnalogyMethod::Geodesic { t, metric };
    let results = par::map_batches(queries.to_vec(), |q| {
        answer_query(&q, vectors, method).map(|w| w == q.gold)
    });
    let mut correct = 0usize;
    for r in results {
        if r? {
            correct += 1;
        }
    }
    Ok(correct as f64 / queries.len() as f64)
}

/// 2-fold cross-validation of the interpolation parameter: the usable
/// queries are split in two halves by a seeded shuffle; each half selects
/// the accuracy-maximizing t from the grid (ties to the smaller t) and is
/// scored on the other half.
pub fn cross_validate_t(
    dataset: &AnalogyDataset,
    vectors: &WordVectors,
    vocab: &Vocab,
    metric: NeighborMetric,
    grid: &[f64],
    seed: u64,
) -> Result<CrossValidation> {
    if grid.is_empty() {
        return Err(Error::Empty("empty t grid".into()));
    }
    let mut queries: Vec<AnalogyQuery> = Vec::new();
    for section in &dataset.sections {
        for row in &section.rows {
            if let (Some(a), Some(b), Some(c), Some(gold)) = (
                vocab.id(&row[0]),
                vocab.id(&row[1]),
                vocab.id(&row[2]),
                vocab.id(&row[3]),
            ) {
                queries.push(AnalogyQuery { a, b, c, gold });
            }
        }
    }
    if queries.len() < 2 {
        return Err(Error::Empty(
            "need at least two usable queries for 2-fold cross-validation".into(),
        ));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    queries.shuffle(&mut rng);
    let (first, second) = queries.split_at(queries.len() / 2);

    let mut folds = Vec::with_capacity(2);
    for (select, test) in [(first, second), (second, first)] {
        let mut best_t = grid[0];
        let mut best_acc = f64::NEG_INFINITY;
        for &t in grid {
            let acc = accuracy_at_t(select, vectors, metric, t)?;
            if acc > best_acc {
                best_acc = acc;
                best_t = t;
            }
        }
        folds.push(CvFold {
            best_t,
            validation_accuracy: best_acc,
            test_accuracy: accuracy_at_t(test, vectors, metric, best_t)?,
        });
    }
    Ok(CrossValidation {
        folds: [folds[0].clone(), folds[1].clone()],
    })
}

/// The t grid used for cross-validation: {0.0, 0.1, ..., 1.0}.
pub fn default_t_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}
