//! Riemannian training of the metric GloVe objective
//!
//!   J = Σ f(X_ij) (−h(d(w_i, w̃_j)) + b_i + b̃_j − log X_ij)²
//!
//! over product-of-balls embeddings, with Riemannian SGD or Riemannian
//! Adagrad, analytic gradients, the warm-start initialization trick, and
//! model persistence.

pub mod hfunc;
pub mod table;

pub use hfunc::HFunction;
pub use table::{flat_product_distance, EmbeddingTable, INIT_RADIUS};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::corpus::{glove_weight, CoocMatrix, Vocab};
use crate::error::{Error, Result};
use crate::manifold::{ops, BallPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Rsgd,
    Radagrad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    /// Single-threaded, bitwise reproducible given the seed.
    Deterministic,
    /// Lock-free multi-threaded updates at word granularity; the loss
    /// trend is the correctness criterion, not bitwise equality.
    Hogwild,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Number of ball factors p.
    pub factors: usize,
    /// Dimension k of each factor.
    pub dim: usize,
    pub h: HFunction,
    pub lr: f64,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    /// Co-occurrence weighting cap x_max.
    pub x_max: f64,
    /// Co-occurrence weighting exponent α.
    pub alpha: f64,
    pub seed: u64,
    pub mode: TrainMode,
    /// Worker count in hogwild mode; deterministic mode always uses one.
    pub threads: usize,
    pub adagrad_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            factors: 50,
            dim: 2,
            h: HFunction::CoshPow(2),
            lr: 0.01,
            epochs: 50,
            optimizer: OptimizerKind::Radagrad,
            x_max: 100.0,
            alpha: 0.75,
            seed: 42,
            mode: TrainMode::Deterministic,
            threads: 1,
            adagrad_eps: 1e-8,
        }
    }
}

/// Per-factor squared-gradient accumulators for points, per-scalar for
/// biases. Accumulators only ever grow.
#[derive(Debug, Clone, PartialEq)]
pub struct AdagradState {
    pub target: Vec<f64>,
    pub context: Vec<f64>,
    pub bias_target: Vec<f64>,
    pub bias_context: Vec<f64>,
}

impl AdagradState {
    pub fn new(vocab_size: usize, factors: usize) -> AdagradState {
        AdagradState {
            target: vec![0.0; vocab_size * factors],
            context: vec![0.0; vocab_size * factors],
            bias_target: vec![0.0; vocab_size],
            bias_context: vec![0.0; vocab_size],
        }
    }
}

#[derive(Debug)]
pub struct TrainResult {
    pub table: EmbeddingTable,
    /// Mean weighted loss per epoch, computed from pre-update residuals.
    pub epoch_losses: Vec<f64>,
}

/// Euclidean gradients of one loss term with respect to both points and
/// both biases.
#[derive(Debug, Clone)]
pub struct EntryGradients {
    pub target: Vec<f64>,
    pub context: Vec<f64>,
    pub bias_target: f64,
    pub bias_context: f64,
}

/// f(X_ij)·(−h(d(w_i, w̃_j)) + b_i + b̃_j − log X_ij)².
pub fn loss_term(
    table: &EmbeddingTable,
    i: u32,
    j: u32,
    x_ij: f64,
    h: HFunction,
    x_max: f64,
    alpha: f64,
) -> f64 {
    let d = flat_product_distance(
        table.target_vector(i),
        table.context_vector(j),
        table.factor_dim(),
    );
    let r = -h.apply(d) + table.bias_target(i) + table.bias_context(j) - x_ij.ln();
    glove_weight(x_ij, x_max, alpha) * r * r
}

/// Analytic gradients of [`loss_term`]. The distance gradient at
/// per-factor coincident points is taken to be zero.
pub fn euclidean_gradients(
    table: &EmbeddingTable,
    i: u32,
    j: u32,
    x_ij: f64,
    h: HFunction,
    x_max: f64,
    alpha: f64,
) -> EntryGradients {
    let dim = table.factor_dim();
    let mut parts = Vec::new();
    let mut grad_t = vec![0.0; table.word_dim()];
    let mut grad_c = vec![0.0; table.word_dim()];
    let (_, coef) = entry_gradients_into(
        table.target_vector(i),
        table.context_vector(j),
        table.bias_target(i),
        table.bias_context(j),
        x_ij,
        h,
        x_max,
        alpha,
        dim,
        &mut parts,
        &mut grad_t,
        &mut grad_c,
    );
    EntryGradients {
        target: grad_t,
        context: grad_c,
        bias_target: coef,
        bias_context: coef,
    }
}

/// Computes the weighted loss and writes per-coordinate Euclidean point
/// gradients; returns (weighted_loss, ∂J/∂b). Distance internals per
/// factor are left in `parts` for the optimizer's Riemannian scaling.
#[allow(clippy::too_many_arguments)]
fn entry_gradients_into(
    w: &[f64],
    c: &[f64],
    bias_i: f64,
    bias_j: f64,
    x_ij: f64,
    h: HFunction,
    x_max: f64,
    alpha: f64,
    dim: usize,
    parts: &mut Vec<ops::DistanceParts>,
    grad_t: &mut [f64],
    grad_c: &mut [f64],
) -> (f64, f64) {
    parts.clear();
    let mut dist_sq_sum = 0.0;
    for (wf, cf) in w.chunks_exact(dim).zip(c.chunks_exact(dim)) {
        let p = ops::ball_distance_parts(wf, cf);
        dist_sq_sum += p.dist * p.dist;
        parts.push(p);
    }
    let dist = dist_sq_sum.sqrt();
    let residual = -h.apply(dist) + bias_i + bias_j - x_ij.ln();
    let weight = glove_weight(x_ij, x_max, alpha);
    let loss = weight * residual * residual;
    let coef = 2.0 * weight * residual;
    // dJ/dx_f = −coef · (h'(d)/d) · (d_f/√(γ_f²−1)) · ∂γ_f/∂x_f
    let s = coef * h.derivative_over_dist(dist);
    for (f, p) in parts.iter().enumerate() {
        let ratio = if p.gamma <= 1.0 + 1e-14 {
            1.0 // limit of d_f/√(γ²−1) as the factor points coincide
        } else {
            p.dist / (p.gamma * p.gamma - 1.0).sqrt()
        };
        let scale = -s * ratio * 4.0 / (p.alpha * p.beta);
        let base = f * dim;
        for m in 0..dim {
            let (wm, cm) = (w[base + m], c[base + m]);
            grad_t[base + m] = scale * ((wm - cm) + p.q / p.alpha * wm);
            grad_c[base + m] = scale * ((cm - wm) + p.q / p.beta * cm);
        }
    }
    (loss, coef)
}

/// Converts a Euclidean gradient at x into the Riemannian one:
/// grad/λ_x² = ((1 − ‖x‖²)²/4)·grad.
pub fn riemannian_scale(grad: &[f64], x: &BallPoint) -> Vec<f64> {
    let lambda = crate::manifold::conformal_factor(x);
    grad.iter().map(|g| g / (lambda * lambda)).collect()
}

/// One Riemannian SGD step: exp_x(−lr·rgrad), re-projected.
pub fn rsgd_step(x: &BallPoint, rgrad: &[f64], lr: f64) -> BallPoint {
    let mut v = vec![0.0; rgrad.len()];
    for (vm, g) in v.iter_mut().zip(rgrad) {
        *vm = -lr * g;
    }
    let mut out = vec![0.0; rgrad.len()];
    ops::exp_map_into(x.coords(), &v, &mut out);
    BallPoint::project(out).expect("exp map output is finite")
}

/// One Riemannian Adagrad step. The accumulator grows by the squared
/// Riemannian norm λ_x²‖rgrad‖² of the gradient before the step; a zero
/// gradient leaves both the accumulator and the point untouched.
pub fn radagrad_step(
    x: &BallPoint,
    rgrad: &[f64],
    accum: &mut f64,
    lr: f64,
    eps: f64,
) -> BallPoint {
    let lambda = crate::manifold::conformal_factor(x);
    let riem_sq = lambda * lambda * ops::norm_sq(rgrad);
    if riem_sq == 0.0 {
        return x.clone();
    }
    *accum += riem_sq;
    rsgd_step(x, rgrad, lr / (*accum + eps).sqrt())
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    i: u32,
    j: u32,
    x: f64,
}

/// Raw views over the shared tables for hogwild workers. Workers snapshot
/// a word's coordinates, compute, and write back; hogwild accepts
/// concurrent updates interleaving at word granularity.
#[derive(Clone, Copy)]
struct RawTables {
    target: *mut f64,
    context: *mut f64,
    bias_target: *mut f64,
    bias_context: *mut f64,
    acc_target: *mut f64,
    acc_context: *mut f64,
    acc_bias_target: *mut f64,
    acc_bias_context: *mut f64,
}

unsafe impl Send for RawTables {}
unsafe impl Sync for RawTables {}

struct Scratch {
    parts: Vec<ops::DistanceParts>,
    w: Vec<f64>,
    c: Vec<f64>,
    grad_t: Vec<f64>,
    grad_c: Vec<f64>,
    acc_t: Vec<f64>,
    acc_c: Vec<f64>,
    v: Vec<f64>,
    out: Vec<f64>,
}

impl Scratch {
    fn new(factors: usize, dim: usize) -> Scratch {
        Scratch {
            parts: Vec::with_capacity(factors),
            w: vec![0.0; factors * dim],
            c: vec![0.0; factors * dim],
            grad_t: vec![0.0; factors * dim],
            grad_c: vec![0.0; factors * dim],
            acc_t: vec![0.0; factors],
            acc_c: vec![0.0; factors],
            v: vec![0.0; dim],
            out: vec![0.0; dim],
        }
    }
}

/// Optimizes the objective over the stored entries expanded to both
/// orientations. Deterministic mode reproduces bit-identical results for a
/// given seed; hogwild mode shards each shuffled epoch over lock-free
/// workers.
pub fn train(
    cooc: &CoocMatrix,
    cfg: &TrainConfig,
    init: Option<EmbeddingTable>,
) -> Result<TrainResult> {
    train_logged(cooc, cfg, init, |_, _| {})
}

/// [`train`] with a per-epoch callback receiving (epoch index, mean loss).
pub fn train_logged(
    cooc: &CoocMatrix,
    cfg: &TrainConfig,
    init: Option<EmbeddingTable>,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainResult> {
    if cfg.lr <= 0.0 {
        return Err(Error::InvalidInput(format!("lr must be > 0, got {}", cfg.lr)));
    }
    if cfg.epochs == 0 {
        return Err(Error::InvalidInput("epochs must be >= 1".into()));
    }
    if cfg.factors == 0 || cfg.dim == 0 {
        return Err(Error::InvalidInput("factors and dim must be >= 1".into()));
    }
    let vocab_size = cooc.vocab_size() as usize;
    let mut table = match init {
        Some(t) => {
            t.require(cfg.factors, cfg.dim, cfg.h)?;
            if t.vocab_size() != vocab_size {
                return Err(Error::DimensionMismatch {
                    expected: format!("init table for {vocab_size} words"),
                    got: format!("{}", t.vocab_size()),
                });
            }
            t
        }
        None => EmbeddingTable::new_random(vocab_size, cfg.factors, cfg.dim, cfg.h, cfg.seed),
    };
    let mut state = AdagradState::new(vocab_size, cfg.factors);

    let mut samples = Vec::with_capacity(cooc.num_entries() * 2);
    for e in cooc.entries() {
        samples.push(Sample { i: e.i, j: e.j, x: e.x });
        if e.i != e.j {
            samples.push(Sample { i: e.j, j: e.i, x: e.x });
        }
    }
    if samples.is_empty() {
        return Err(Error::Empty("co-occurrence matrix has no entries".into()));
    }

    let threads = match cfg.mode {
        TrainMode::Deterministic => 1,
        TrainMode::Hogwild => {
            if crate::par::parallel_enabled() {
                cfg.threads.max(1)
            } else {
                1
            }
        }
    };

    let raw = RawTables {
        target: table.target.as_mut_ptr(),
        context: table.context.as_mut_ptr(),
        bias_target: table.bias_target.as_mut_ptr(),
        bias_context: table.bias_context.as_mut_ptr(),
        acc_target: state.target.as_mut_ptr(),
        acc_context: state.context.as_mut_ptr(),
        acc_bias_target: state.bias_target.as_mut_ptr(),
        acc_bias_context: state.bias_context.as_mut_ptr(),
    };

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        samples.shuffle(&mut rng);
        let total = if threads == 1 {
            // SAFETY: single worker, exclusive access to all tables.
            unsafe { run_shard(raw, &samples, cfg)? }
        } else {
            let chunk = samples.len().div_ceil(threads);
            let shards: Vec<&[Sample]> = samples.chunks(chunk).collect();
            std::thread::scope(|scope| {
                let handles: Vec<_> = shards
                    .into_iter()
                    .map(|shard| {
                        // SAFETY: hogwild contract; workers touch disjoint
                        // sample shards but may race on shared words. Reads
                        // and writes go through per-word snapshots.
                        scope.spawn(move || unsafe { run_shard(raw, shard, cfg) })
                    })
                    .collect();
                let mut total = 0.0;
                for h in handles {
                    total += h.join().expect("training worker panicked")?;
                }
                Ok::<f64, Error>(total)
            })?
        };
        let mean = total / samples.len() as f64;
        on_epoch(epoch, mean);
        epoch_losses.push(mean);
    }

    Ok(TrainResult {
        table,
        epoch_losses,
    })
}

/// Processes one shard of samples against the shared tables; returns the
/// summed weighted loss computed from pre-update residuals.
///
/// # Safety
/// Callers must guarantee the pointers outlive the call and either hand
/// out exclusive access (deterministic mode) or accept racy word-level
/// interleavings (hogwild mode).
unsafe fn run_shard(raw: RawTables, shard: &[Sample], cfg: &TrainConfig) -> Result<f64> {
    let dim = cfg.dim;
    let wd = cfg.factors * dim;
    let mut s = Scratch::new(cfg.factors, dim);
    let mut total = 0.0;
    for sample in shard {
        let (i, j) = (sample.i as usize, sample.j as usize);
        // Snapshot the two words involved.
        std::ptr::copy_nonoverlapping(raw.target.add(i * wd), s.w.as_mut_ptr(), wd);
        std::ptr::copy_nonoverlapping(raw.context.add(j * wd), s.c.as_mut_ptr(), wd);
        let mut bias_i = *raw.bias_target.add(i);
        let mut bias_j = *raw.bias_context.add(j);
        std::ptr::copy_nonoverlapping(
            raw.acc_target.add(i * cfg.factors),
            s.acc_t.as_mut_ptr(),
            cfg.factors,
        );
        std::ptr::copy_nonoverlapping(
            raw.acc_context.add(j * cfg.factors),
            s.acc_c.as_mut_ptr(),
            cfg.factors,
        );
        let mut acc_bias_i = *raw.acc_bias_target.add(i);
        let mut acc_bias_j = *raw.acc_bias_context.add(j);

        let (loss, coef) = entry_gradients_into(
            &s.w,
            &s.c,
            bias_i,
            bias_j,
            sample.x,
            cfg.h,
            cfg.x_max,
            cfg.alpha,
            dim,
            &mut s.parts,
            &mut s.grad_t,
            &mut s.grad_c,
        );
        if !loss.is_finite() {
            return Err(Error::NanLoss {
                i: sample.i,
                j: sample.j,
                target_norm: ops::norm(&s.w),
                context_norm: ops::norm(&s.c),
            });
        }
        total += loss;

        for f in 0..cfg.factors {
            let range = f * dim..(f + 1) * dim;
            step_factor(
                &mut s.w[range.clone()],
                &s.grad_t[range.clone()],
                s.parts[f].alpha,
                &mut s.acc_t[f],
                cfg,
                &mut s.v,
                &mut s.out,
            );
            step_factor(
                &mut s.c[range.clone()],
                &s.grad_c[range],
                s.parts[f].beta,
                &mut s.acc_c[f],
                cfg,
                &mut s.v,
                &mut s.out,
            );
        }
        step_bias(&mut bias_i, coef, &mut acc_bias_i, cfg);
        step_bias(&mut bias_j, coef, &mut acc_bias_j, cfg);

        // Publish the updated snapshot.
        std::ptr::copy_nonoverlapping(s.w.as_ptr(), raw.target.add(i * wd), wd);
        std::ptr::copy_nonoverlapping(s.c.as_ptr(), raw.context.add(j * wd), wd);
        *raw.bias_target.add(i) = bias_i;
        *raw.bias_context.add(j) = bias_j;
        std::ptr::copy_nonoverlapping(
            s.acc_t.as_ptr(),
            raw.acc_target.add(i * cfg.factors),
            cfg.factors,
        );
        std::ptr::copy_nonoverlapping(
            s.acc_c.as_ptr(),
            raw.acc_context.add(j * cfg.factors),
            cfg.factors,
        );
        *raw.acc_bias_target.add(i) = acc_bias_i;
        *raw.acc_bias_context.add(j) = acc_bias_j;
    }
    Ok(total)
}

/// Riemannian update of one k-dimensional factor given its Euclidean
/// gradient. `alpha` is 1 − ‖x‖² of the pre-update point.
fn step_factor(
    x: &mut [f64],
    grad: &[f64],
    alpha: f64,
    accum: &mut f64,
    cfg: &TrainConfig,
    v: &mut [f64],
    out: &mut [f64],
) {
    let gsq = ops::norm_sq(grad);
    if gsq == 0.0 {
        return;
    }
    // rgrad = (α²/4)·grad; its squared Riemannian norm is (α²/4)·‖grad‖².
    let quarter_alpha_sq = alpha * alpha / 4.0;
    let rate = match cfg.optimizer {
        OptimizerKind::Rsgd => cfg.lr,
        OptimizerKind::Radagrad => {
            *accum += quarter_alpha_sq * gsq;
            cfg.lr / (*accum + cfg.adagrad_eps).sqrt()
        }
    };
    let scale = -rate * quarter_alpha_sq;
    for (vm, g) in v.iter_mut().zip(grad) {
        *vm = scale * g;
    }
    ops::exp_map_into(x, v, out);
    x.copy_from_slice(out);
}

fn step_bias(b: &mut f64, grad: f64, accum: &mut f64, cfg: &TrainConfig) {
    if grad == 0.0 {
        return;
    }
    let rate = match cfg.optimizer {
        OptimizerKind::Rsgd => cfg.lr,
        OptimizerKind::Radagrad => {
            *accum += grad * grad;
            cfg.lr / (*accum + cfg.adagrad_eps).sqrt()
        }
    };
    *b -= rate * grad;
}

/// Warm-starts a full-vocabulary table from a model trained on a
/// restricted vocabulary: shared words copy vectors and biases bitwise,
/// new words get the fresh-initialization scheme.
pub fn init_trick(
    restricted: &EmbeddingTable,
    restricted_vocab: &Vocab,
    full_vocab: &Vocab,
    seed: u64,
) -> Result<EmbeddingTable> {
    if restricted.vocab_size() != restricted_vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("table for {} words", restricted_vocab.len()),
            got: format!("{}", restricted.vocab_size()),
        });
    }
    let mut out = EmbeddingTable::new_random(
        full_vocab.len(),
        restricted.num_factors(),
        restricted.factor_dim(),
        restricted.h(),
        seed,
    );
    let wd = restricted.word_dim();
    for full_id in 0..full_vocab.len() {
        if let Some(rid) = restricted_vocab.id(full_vocab.word(full_id as u32)) {
            let rid = rid as usize;
            out.target[full_id * wd..(full_id + 1) * wd]
                .copy_from_slice(&restricted.target[rid * wd..(rid + 1) * wd]);
            out.context[full_id * wd..(full_id + 1) * wd]
                .copy_from_slice(&restricted.context[rid * wd..(rid + 1) * wd]);
            out.bias_target[full_id] = restricted.bias_target[rid];
            out.bias_context[full_id] = restricted.bias_context[rid];
        }
    }
    Ok(out)
}
