//! Sampling estimators for the average δ-hyperbolicity, the average
//! distance, and their ratio 2δ_avg/d_avg, over either explicit metrics or
//! the metric induced on words by co-occurrence counts,
//! d(i, j) = h⁻¹(log(X_i·X_j / X_ij)).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::corpus::CoocMatrix;
use crate::error::{Error, Result};
use crate::par;
use crate::trainer::HFunction;

/// The six pairwise distances of a 4-tuple (x, y, z, t).
#[derive(Debug, Clone, Copy)]
pub struct FourTupleDistances {
    pub d_xy: f64,
    pub d_zt: f64,
    pub d_xz: f64,
    pub d_yt: f64,
    pub d_xt: f64,
    pub d_yz: f64,
}

/// Half the gap between the two largest of the three pairing sums
/// d(x,y)+d(z,t), d(x,z)+d(y,t), d(x,t)+d(y,z). Zero on tree metrics.
pub fn tuple_delta(d: &FourTupleDistances) -> f64 {
    let mut sums = [d.d_xy + d.d_zt, d.d_xz + d.d_yt, d.d_xt + d.d_yz];
    sums.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (sums[0] - sums[1]) / 2.0
}

/// h choices for the induced metric. Extends the trainable family with the
/// plain logarithm for reporting parity; log induces h⁻¹ = exp, which is
/// not guaranteed to be a metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InducedH {
    Square,
    CoshPow(u32),
    Log,
}

impl InducedH {
    /// Lower edge of h's range; arguments below it are clamped and counted.
    pub fn range_min(&self) -> f64 {
        match self {
            InducedH::Square => 0.0,
            InducedH::CoshPow(_) => 1.0,
            InducedH::Log => f64::NEG_INFINITY,
        }
    }

    pub fn inverse(&self, arg: f64) -> f64 {
        match self {
            InducedH::Square => arg.max(0.0).sqrt(),
            InducedH::CoshPow(k) => {
                let base = arg.max(1.0).powf(1.0 / *k as f64);
                if base <= 1.0 {
                    0.0
                } else {
                    base.acosh()
                }
            }
            InducedH::Log => arg.exp(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            InducedH::Square => "square".into(),
            InducedH::CoshPow(1) => "cosh".into(),
            InducedH::CoshPow(k) => format!("cosh{k}"),
            InducedH::Log => "log".into(),
        }
    }

    pub fn parse(s: &str) -> Result<InducedH> {
        if s.trim().eq_ignore_ascii_case("log") {
            return Ok(InducedH::Log);
        }
        Ok(HFunction::parse(s)?.into())
    }
}

impl From<HFunction> for InducedH {
    fn from(h: HFunction) -> InducedH {
        match h {
            HFunction::Square => InducedH::Square,
            HFunction::CoshPow(k) => InducedH::CoshPow(k),
        }
    }
}

/// Zero-count handling in the induced metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothing {
    /// X_ij = 0 leaves the distance undefined; such tuples are resampled.
    None,
    /// Replaces X_ij by 1 + X_ij, so every pair has a distance.
    PlusOne,
}

/// Anything that can hand out pairwise distances for sampling. `distance`
/// returns the value and whether the h-domain clamp fired, or None when
/// the pair has no defined distance.
pub trait MetricSource: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn distance(&self, i: usize, j: usize) -> Option<(f64, bool)>;
}

/// An explicit metric given by a distance closure over indexed points.
pub struct ExplicitMetric<F: Fn(usize, usize) -> f64 + Sync> {
    n: usize,
    dist: F,
}

impl<F: Fn(usize, usize) -> f64 + Sync> ExplicitMetric<F> {
    pub fn new(n: usize, dist: F) -> Self {
        ExplicitMetric { n, dist }
    }
}

impl<F: Fn(usize, usize) -> f64 + Sync> MetricSource for ExplicitMetric<F> {
    fn len(&self) -> usize {
        self.n
    }

    fn distance(&self, i: usize, j: usize) -> Option<(f64, bool)> {
        Some(((self.dist)(i, j), false))
    }
}

/// The co-occurrence-induced metric d(i, j) = h⁻¹(log(X_i·X_j / X̃_ij)).
pub struct InducedCoocMetric<'a> {
    cooc: &'a CoocMatrix,
    h: InducedH,
    smoothing: Smoothing,
}

impl<'a> InducedCoocMetric<'a> {
    pub fn new(cooc: &'a CoocMatrix, h: InducedH, smoothing: Smoothing) -> Self {
        InducedCoocMetric { cooc, h, smoothing }
    }

    /// The raw induced distance for a pair, plus the clamp flag.
    pub fn induced_distance(&self, i: u32, j: u32) -> Option<(f64, bool)> {
        let xi = self.cooc.row_sum(i);
        let xj = self.cooc.row_sum(j);
        if xi <= 0.0 || xj <= 0.0 {
            return None;
        }
        let xij = match (self.smoothing, self.cooc.get(i, j)) {
            (Smoothing::None, Some(x)) => x,
            (Smoothing::None, None) => return None,
            (Smoothing::PlusOne, x) => 1.0 + x.unwrap_or(0.0),
        };
        let arg = (xi * xj / xij).ln();
        let clamped = arg < self.h.range_min();
        Some((self.h.inverse(arg), clamped))
    }
}

impl MetricSource for InducedCoocMetric<'_> {
    fn len(&self) -> usize {
        self.cooc.vocab_size() as usize
    }

    fn distance(&self, i: usize, j: usize) -> Option<(f64, bool)> {
        self.induced_distance(i as u32, j as u32)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DeltaEstimate {
    pub delta_avg: f64,
    pub d_avg: f64,
    /// 2·δ_avg/d_avg, invariant under metric scaling.
    pub ratio: f64,
    /// Largest tuple delta seen while sampling.
    pub max_delta: f64,
    /// Valid tuples / pairs actually averaged.
    pub n_tuples: usize,
    pub n_pairs: usize,
    pub clamp_count: u64,
}

const BATCH: usize = 1024;
const RETRY_FACTOR: usize = 100;

#[derive(Default, Clone, Copy)]
struct BatchStats {
    sum: f64,
    max: f64,
    count: usize,
    clamps: u64,
}

impl BatchStats {
    fn merge(&mut self, other: BatchStats) {
        self.sum += other.sum;
        self.max = self.max.max(other.max);
        self.count += other.count;
        self.clamps += other.clamps;
    }
}

/// Estimates δ_avg over `n_tuples` sampled 4-tuples of distinct words and
/// d_avg over `n_pairs` sampled pairs. Sampling is cut into fixed batches
/// with per-batch RNG substreams and merged in batch order, so results are
/// identical whether batches run in parallel or sequentially.
pub fn estimate_delta(
    source: &impl MetricSource,
    n_tuples: usize,
    n_pairs: usize,
    seed: u64,
) -> Result<DeltaEstimate> {
    let n = source.len();
    if n < 4 {
        return Err(Error::InvalidInput(format!(
            "need at least 4 usable words, have {n}"
        )));
    }
    if n_tuples == 0 || n_pairs == 0 {
        return Err(Error::InvalidInput("n_tuples and n_pairs must be >= 1".into()));
    }

    let tuple_batches = n_tuples.div_ceil(BATCH);
    let tuple_stats = par::map_indexed(tuple_batches, |b| {
        let quota = BATCH.min(n_tuples - b * BATCH);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(1 + b as u64);
        sample_tuples(source, quota, &mut rng)
    });
    let mut tuples = BatchStats::default();
    for s in tuple_stats {
        tuples.merge(s);
    }
    if tuples.count == 0 {
        return Err(Error::Empty(
            "no valid 4-tuples found within the retry budget".into(),
        ));
    }

    let pair_batches = n_pairs.div_ceil(BATCH);
    let pair_stats = par::map_indexed(pair_batches, |b| {
        let quota = BATCH.min(n_pairs - b * BATCH);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream((1 << 32) | b as u64);
        sample_pairs(source, quota, &mut rng)
    });
    let mut pairs = BatchStats::default();
    for s in pair_stats {
        pairs.merge(s);
    }
    if pairs.count == 0 {
        return Err(Error::Empty(
            "no valid pairs found within the retry budget".into(),
        ));
    }

    let delta_avg = tuples.sum / tuples.count as f64;
    let d_avg = pairs.sum / pairs.count as f64;
    let ratio = if d_avg > 0.0 {
        2.0 * delta_avg / d_avg
    } else {
        0.0
    };
    Ok(DeltaEstimate {
        delta_avg,
        d_avg,
        ratio,
        max_delta: tuples.max,
        n_tuples: tuples.count,
        n_pairs: pairs.count,
        clamp_count: tuples.clamps + pairs.clamps,
    })
}

fn sample_tuples(source: &impl MetricSource, quota: usize, rng: &mut ChaCha20Rng) -> BatchStats {
    let n = source.len();
    let mut stats = BatchStats::default();
    let mut tries = 0usize;
    let budget = quota.saturating_mul(RETRY_FACTOR);
    while stats.count < quota && tries < budget {
        tries += 1;
        let mut ids = [0usize; 4];
        let mut filled = 0;
        while filled < 4 {
            let cand = rng.gen_range(0..n);
            if !ids[..filled].contains(&cand) {
                ids[filled] = cand;
                filled += 1;
            }
        }
        let mut clamps = 0u64;
        let mut dist6 = [0.0f64; 6];
        let pairs = [(0, 1), (2, 3), (0, 2), (1, 3), (0, 3), (1, 2)];
        let mut ok = true;
        for (slot, (a, b)) in pairs.iter().enumerate() {
            match source.distance(ids[*a], ids[*b]) {
                Some((d, clamped)) => {
                    dist6[slot] = d;
                    clamps += clamped as u64;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let delta = tuple_delta(&FourTupleDistances {
            d_xy: dist6[0],
            d_zt: dist6[1],
            d_xz: dist6[2],
            d_yt: dist6[3],
            d_xt: dist6[4],
            d_yz: dist6[5],
        });
        stats.sum += delta;
        stats.max = stats.max.max(delta);
        stats.count += 1;
        stats.clamps += clamps;
    }
    stats
}

fn sample_pairs(source: &impl MetricSource, quota: usize, rng: &mut ChaCha20Rng) -> BatchStats {
    let n = source.len();
    let mut stats = BatchStats::default();
    let mut tries = 0usize;
    let budget = quota.saturating_mul(RETRY_FACTOR);
    while stats.count < quota && tries < budget {
        tries += 1;
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i == j {
            continue;
        }
        if let Some((d, clamped)) = source.distance(i, j) {
            stats.sum += d;
            stats.count += 1;
            stats.clamps += clamped as u64;
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tuple_delta_values() {
        // Collinear points with the path metric: every tree is 0-hyperbolic.
        let collinear = FourTupleDistances {
            d_xy: 1.0,
            d_zt: 1.0,
            d_xz: 2.0,
            d_yt: 2.0,
            d_xt: 3.0,
            d_yz: 1.0,
        };
        assert_eq!(tuple_delta(&collinear), 0.0);

        // Unit square corners under the Euclidean metric.
        let square = FourTupleDistances {
            d_xy: 1.0,
            d_zt: 1.0,
            d_xz: 2.0f64.sqrt(),
            d_yt: 2.0f64.sqrt(),
            d_xt: 1.0,
            d_yz: 1.0,
        };
        assert_abs_diff_eq!(tuple_delta(&square), 2.0f64.sqrt() - 1.0, epsilon = 1e-12);

        // Coincident points degrade gracefully.
        let degenerate = FourTupleDistances {
            d_xy: 0.0,
            d_zt: 0.0,
            d_xz: 0.0,
            d_yt: 0.0,
            d_xt: 0.0,
            d_yz: 0.0,
        };
        assert_eq!(tuple_delta(&degenerate), 0.0);
    }

    #[test]
    fn tuple_delta_permutation_invariant() {
        // Distances from 4 random points; relabeling the tuple must not
        // change the delta because the pairing sums only permute.
        let pts: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.3], [0.2, 2.0], [1.4, 1.1]];
        let d = |a: usize, b: usize| {
            let dx = pts[a][0] - pts[b][0];
            let dy = pts[a][1] - pts[b][1];
            (dx * dx + dy * dy).sqrt()
        };
        let delta_of = |p: [usize; 4]| {
            tuple_delta(&FourTupleDistances {
                d_xy: d(p[0], p[1]),
                d_zt: d(p[2], p[3]),
                d_xz: d(p[0], p[2]),
                d_yt: d(p[1], p[3]),
                d_xt: d(p[0], p[3]),
                d_yz: d(p[1], p[2]),
            })
        };
        let reference = delta_of([0, 1, 2, 3]);
        let mut perm = [0usize, 1, 2, 3];
        let mut count = 0;
        permute(&mut perm, 0, &mut |p| {
            assert_eq!(delta_of(*p), reference);
            count += 1;
        });
        assert_eq!(count, 24);
    }

    fn permute(arr: &mut [usize; 4], k: usize, visit: &mut impl FnMut(&[usize; 4])) {
        if k == 4 {
            visit(arr);
            return;
        }
        for i in k..4 {
            arr.swap(k, i);
            permute(arr, k + 1, visit);
            arr.swap(k, i);
        }
    }

    #[test]
    fn induced_distance_values() {
        let e = std::f64::consts::E;
        // X_a = X_b = e via a single off-diagonal cell of weight... row
        // sums here are set by explicit entries.
        let cooc = CoocMatrix::from_entries(
            3,
            vec![(0, 1, 1.0), (0, 2, e - 1.0), (1, 2, e - 1.0)],
        )
        .unwrap();
        assert_abs_diff_eq!(cooc.row_sum(0), e, epsilon = 1e-15);
        assert_abs_diff_eq!(cooc.row_sum(1), e, epsilon = 1e-15);

        let m = InducedCoocMetric::new(&cooc, InducedH::Square, Smoothing::None);
        let (d, clamped) = m.induced_distance(0, 1).unwrap();
        // log(e·e/1) = 2, √2 under the square h.
        assert_abs_diff_eq!(d, 2.0f64.sqrt(), epsilon = 1e-12);
        assert!(!clamped);

        // Single-pair corpus with X_ij = X_i = X_j = 1: distance 0.
        let single = CoocMatrix::from_entries(4, vec![(0, 1, 1.0)]).unwrap();
        let m = InducedCoocMetric::new(&single, InducedH::Square, Smoothing::None);
        let (d, clamped) = m.induced_distance(0, 1).unwrap();
        assert_eq!(d, 0.0);
        assert!(!clamped);
        // Pairs with no co-occurrence are undefined without smoothing...
        assert!(m.induced_distance(2, 3).is_none());
        // ...and row-sum-zero words stay undefined even with smoothing.
        let m = InducedCoocMetric::new(&single, InducedH::Square, Smoothing::PlusOne);
        assert!(m.induced_distance(2, 3).is_none());

        // cosh² clamps arguments below 1 to distance 0 and reports it.
        let small = CoocMatrix::from_entries(2, vec![(0, 1, 1.0)]).unwrap();
        // arg = log(1·1/1) = 0 < 1.
        let m = InducedCoocMetric::new(&small, InducedH::CoshPow(2), Smoothing::None);
        let (d, clamped) = m.induced_distance(0, 1).unwrap();
        assert_eq!(d, 0.0);
        assert!(clamped);
    }

    #[test]
    fn star_tree_delta_is_zero() {
        // Hub 0 plus 5 leaves, unit edges: d(hub, leaf) = 1, d(leaf, leaf) = 2.
        let metric = ExplicitMetric::new(6, |a, b| {
            if a == b {
                0.0
            } else if a == 0 || b == 0 {
                1.0
            } else {
                2.0
            }
        });
        let est = estimate_delta(&metric, 2000, 2000, 7).unwrap();
        assert_eq!(est.delta_avg, 0.0);
        assert_eq!(est.max_delta, 0.0);
        assert!(est.d_avg > 0.0);
        assert_eq!(est.ratio, 0.0);
    }

    #[test]
    fn determinism_and_scaling() {
        let metric = ExplicitMetric::new(30, |a, b| ((a as f64) - (b as f64)).abs().sqrt());
        let e1 = estimate_delta(&metric, 3000, 3000, 13).unwrap();
        let e2 = estimate_delta(&metric, 3000, 3000, 13).unwrap();
        assert_eq!(e1.delta_avg, e2.delta_avg);
        assert_eq!(e1.d_avg, e2.d_avg);
        assert_eq!(e1.n_tuples, 3000);

        // Scaling by a power of two scales both averages exactly and
        // leaves the ratio bit-identical.
        let scaled = ExplicitMetric::new(30, |a, b| 4.0 * ((a as f64) - (b as f64)).abs().sqrt());
        let e4 = estimate_delta(&scaled, 3000, 3000, 13).unwrap();
        assert_eq!(e4.delta_avg, 4.0 * e1.delta_avg);
        assert_eq!(e4.d_avg, 4.0 * e1.d_avg);
        assert_eq!(e4.ratio, e1.ratio);
    }

    #[test]
    fn needs_four_words() {
        let metric = ExplicitMetric::new(3, |_, _| 1.0);
        assert!(estimate_delta(&metric, 10, 10, 1).is_err());
    }
}
