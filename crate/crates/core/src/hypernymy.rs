//! Hypernymy scoring: generic/specific set selection, the per-factor
//! isometry (centering + rotation) that aligns the generality direction
//! with the vertical axis, the disk → half-plane → Gaussian mapping, the
//! is-a score, Fisher distance, and the 1D Gaussian KL reference.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::Vocab;
use crate::error::{Error, Result};
use crate::manifold::{
    self, ops, BallPoint, HalfPlanePoint, ProductPoint, BALL_EPS,
};
use crate::trainer::EmbeddingTable;

/// σ values are capped here when a factor lands next to the half-plane
/// map's pole.
pub const SIGMA_CLAMP: f64 = 1.0 / BALL_EPS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetProvenance {
    UnsupervisedTopK,
    WordListFiles,
}

/// Disjoint sets of putatively generic and specific word ids.
#[derive(Debug, Clone)]
pub struct GenericSpecificSets {
    pub generic: Vec<u32>,
    pub specific: Vec<u32>,
    pub provenance: SetProvenance,
}

/// Fully unsupervised selection: the n most frequent words form G; the n
/// least frequent of the top-`pool` words form S, avoiding extremely rare
/// words.
pub fn select_sets_unsupervised(
    vocab: &Vocab,
    n: usize,
    pool: usize,
) -> Result<GenericSpecificSets> {
    if vocab.len() < pool {
        return Err(Error::InvalidInput(format!(
            "vocabulary has {} words but the frequency pool needs {pool}; pass a smaller pool",
            vocab.len()
        )));
    }
    if n == 0 || 2 * n > pool {
        return Err(Error::InvalidInput(format!(
            "set size {n} must satisfy 1 <= n and 2n <= pool ({pool}) to keep G and S disjoint"
        )));
    }
    Ok(GenericSpecificSets {
        generic: (0..n as u32).collect(),
        specific: ((pool - n) as u32..pool as u32).collect(),
        provenance: SetProvenance::UnsupervisedTopK,
    })
}

/// What happened while mapping word-list files onto the vocabulary.
#[derive(Debug, Clone, Copy, Default)]
pub struct SetFileReport {
    pub generic_oov: usize,
    pub specific_oov: usize,
    /// Words found in both lists are removed from both.
    pub overlap_removed: usize,
}

/// Weakly-supervised selection from plain word-per-line files.
pub fn select_sets_from_files(
    generic_path: &Path,
    specific_path: &Path,
    vocab: &Vocab,
) -> Result<(GenericSpecificSets, SetFileReport)> {
    let mut report = SetFileReport::default();
    let read = |path: &Path, oov: &mut usize| -> Result<Vec<u32>> {
        let reader = BufReader::new(File::open(path)?);
        let mut ids = Vec::new();
        let mut seen = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            let word = line.trim();
            if word.is_empty() {
                continue;
            }
            match vocab.id(word) {
                Some(id) => {
                    if seen.insert(id) {
                        ids.push(id);
                    }
                }
                None => *oov += 1,
            }
        }
        Ok(ids)
    };
    let generic = read(generic_path, &mut report.generic_oov)?;
    let specific = read(specific_path, &mut report.specific_oov)?;

    let gset: HashSet<u32> = generic.iter().copied().collect();
    let overlap: HashSet<u32> = specific
        .iter()
        .copied()
        .filter(|id| gset.contains(id))
        .collect();
    report.overlap_removed = overlap.len();
    let generic: Vec<u32> = generic
        .into_iter()
        .filter(|id| !overlap.contains(id))
        .collect();
    let specific: Vec<u32> = specific
        .into_iter()
        .filter(|id| !overlap.contains(id))
        .collect();

    if generic.is_empty() || specific.is_empty() {
        return Err(Error::Empty(
            "a generic/specific set is empty after vocabulary mapping".into(),
        ));
    }
    Ok((
        GenericSpecificSets {
            generic,
            specific,
            provenance: SetProvenance::WordListFiles,
        },
        report,
    ))
}

/// Per-factor Möbius translation center m and unit rotation direction u.
#[derive(Debug, Clone)]
pub struct FactorTransform {
    pub center: BallPoint,
    pub rotation: [f64; 2],
}

/// The fitted isometry: one centering + rotation per 2D factor.
#[derive(Debug, Clone)]
pub struct IsometryTransform {
    factors: Vec<FactorTransform>,
}

impl IsometryTransform {
    pub fn factors(&self) -> &[FactorTransform] {
        &self.factors
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }
}

#[derive(Debug, Clone, Default)]
pub struct FitReport {
    /// Factors where the translated generic mean vanished and the rotation
    /// defaulted to (0, 1).
    pub degenerate_factors: Vec<usize>,
}

/// Fits the isometry on the target vectors: per factor, the Euclidean
/// means g and s of the generic and specific sets give the center
/// m = (g + s)/2, and the rotation direction u = (⊖m ⊕ g)/‖⊖m ⊕ g‖.
pub fn fit_isometry(
    table: &EmbeddingTable,
    sets: &GenericSpecificSets,
) -> Result<(IsometryTransform, FitReport)> {
    if table.factor_dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: "2-dimensional factors".into(),
            got: format!("{}", table.factor_dim()),
        });
    }
    if sets.generic.is_empty() || sets.specific.is_empty() {
        return Err(Error::Empty("generic/specific sets must be nonempty".into()));
    }
    let p = table.num_factors();
    let mut report = FitReport::default();
    let mut factors = Vec::with_capacity(p);
    for f in 0..p {
        let g = factor_mean(table, &sets.generic, f);
        let s = factor_mean(table, &sets.specific, f);
        let center = BallPoint::project(vec![(g[0] + s[0]) / 2.0, (g[1] + s[1]) / 2.0])?;
        let g_point = BallPoint::new(g)?;
        let dir = manifold::mobius_sub(&center, &g_point)?;
        let n = dir.norm();
        let rotation = if n < 1e-12 {
            report.degenerate_factors.push(f);
            [0.0, 1.0]
        } else {
            [dir.coords()[0] / n, dir.coords()[1] / n]
        };
        factors.push(FactorTransform { center, rotation });
    }
    Ok((IsometryTransform { factors }, report))
}

fn factor_mean(table: &EmbeddingTable, ids: &[u32], factor: usize) -> Vec<f64> {
    let dim = table.factor_dim();
    let mut mean = vec![0.0; dim];
    for &id in ids {
        let coords = &table.target_vector(id)[factor * dim..(factor + 1) * dim];
        for (m, c) in mean.iter_mut().zip(coords) {
            *m += c;
        }
    }
    for m in mean.iter_mut() {
        *m /= ids.len() as f64;
    }
    mean
}

/// Per factor: x ↦ rotate(⊖m ⊕ x) with the fitted center and rotation.
/// A composition of ball isometries, so all distances are preserved.
pub fn apply_isometry(x: &ProductPoint, t: &IsometryTransform) -> Result<ProductPoint> {
    if x.num_factors() != t.num_factors() || x.factor_dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: format!("(D^2)^{}", t.num_factors()),
            got: format!("(D^{})^{}", x.factor_dim(), x.num_factors()),
        });
    }
    let factors = x
        .factors()
        .iter()
        .zip(&t.factors)
        .map(|(xf, tf)| {
            let centered = manifold::mobius_sub(&tf.center, xf)?;
            manifold::rotate_about_origin(tf.rotation, &centered)
        })
        .collect::<Result<Vec<_>>>()?;
    ProductPoint::new(factors)
}

/// A diagonal Gaussian: one (μ_i, σ_i) pair per factor, σ_i > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEmbedding {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl GaussianEmbedding {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<GaussianEmbedding> {
        if mu.len() != sigma.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} sigmas", mu.len()),
                got: format!("{}", sigma.len()),
            });
        }
        if sigma.iter().any(|s| *s <= 0.0 || !s.is_finite()) {
            return Err(Error::InvalidInput("sigma must be positive".into()));
        }
        Ok(GaussianEmbedding { mu, sigma })
    }

    pub fn dims(&self) -> usize {
        self.mu.len()
    }
}

/// Maps a product point to a diagonal Gaussian through the fitted isometry
/// and the half-plane: per factor, (a, y) = φ(T x_i), μ_i = √2·a,
/// σ_i = y. Returns the Gaussian and the number of σ values clamped at
/// [`SIGMA_CLAMP`].
pub fn to_gaussian(
    x: &ProductPoint,
    t: &IsometryTransform,
) -> Result<(GaussianEmbedding, usize)> {
    let moved = apply_isometry(x, t)?;
    let mut mu = Vec::with_capacity(moved.num_factors());
    let mut sigma = Vec::with_capacity(moved.num_factors());
    let mut clamped = 0usize;
    for f in moved.factors() {
        let (x1, x2) = (f.coords()[0], f.coords()[1]);
        let d = (1.0 - x2) * (1.0 - x2) + x1 * x1;
        let a = 2.0 * x1 / d;
        let y = (1.0 - ops::norm_sq(f.coords())) / d;
        mu.push(std::f64::consts::SQRT_2 * a);
        if y > SIGMA_CLAMP {
            clamped += 1;
            sigma.push(SIGMA_CLAMP);
        } else {
            sigma.push(y);
        }
    }
    Ok((GaussianEmbedding::new(mu, sigma)?, clamped))
}

/// is-a(v, w): how confidently v entails w, as the log-volume gap of the
/// covariance ellipsoids, Σ_i (log σ^w_i − log σ^v_i). Positive when w is
/// the more general word. Each term is a sign-normalized log-ratio so
/// that antisymmetry is bitwise and the score is invariant under common
/// rescaling of the covariances.
pub fn isa_score(v: &GaussianEmbedding, w: &GaussianEmbedding) -> Result<f64> {
    if v.dims() != w.dims() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} factors", v.dims()),
            got: format!("{}", w.dims()),
        });
    }
    let mut score = 0.0;
    for (sv, sw) in v.sigma.iter().zip(&w.sigma) {
        score += if sw >= sv {
            (sw / sv).ln()
        } else {
            -(sv / sw).ln()
        };
    }
    Ok(score)
}

/// Fisher distance between diagonal Gaussians:
/// √(Σ_i 2·d_H((μ_i/√2, σ_i), (μ′_i/√2, σ′_i))²).
pub fn fisher_distance(g1: &GaussianEmbedding, g2: &GaussianEmbedding) -> Result<f64> {
    if g1.dims() != g2.dims() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} factors", g1.dims()),
            got: format!("{}", g2.dims()),
        });
    }
    let mut sum = 0.0;
    for i in 0..g1.dims() {
        let a = HalfPlanePoint::new(g1.mu[i] / std::f64::consts::SQRT_2, g1.sigma[i])?;
        let b = HalfPlanePoint::new(g2.mu[i] / std::f64::consts::SQRT_2, g2.sigma[i])?;
        let d = manifold::halfplane_distance(&a, &b);
        sum += 2.0 * d * d;
    }
    Ok(sum.sqrt())
}

/// KL(N(μ, σ²) ‖ N(μ′, σ′²)) = ln(σ′/σ) + (σ² + (μ−μ′)²)/(2σ′²) − 1/2.
pub fn kl_1d(mu: f64, sigma: f64, mu2: f64, sigma2: f64) -> f64 {
    (sigma2 / sigma).ln() + (sigma * sigma + (mu - mu2) * (mu - mu2)) / (2.0 * sigma2 * sigma2)
        - 0.5
}
