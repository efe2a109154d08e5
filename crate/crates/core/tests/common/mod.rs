//! Shared helpers for the integration and acceptance suites.

use poincare_glove::trainer::{loss_term, EmbeddingTable, HFunction};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// A table with points spread through the ball (not just near the origin)
/// and nonzero biases, for gradient and retrieval tests.
pub fn random_spread_table(
    vocab_size: usize,
    factors: usize,
    dim: usize,
    h: HFunction,
    max_norm: f64,
    seed: u64,
) -> EmbeddingTable {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut table = EmbeddingTable::new_random(vocab_size, factors, dim, h, seed);
    let fill = |coords: &mut [f64], rng: &mut ChaCha20Rng| {
        for chunk in coords.chunks_mut(dim) {
            loop {
                for c in chunk.iter_mut() {
                    *c = rng.gen_range(-1.0..1.0);
                }
                let norm = chunk.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm < 1.0 && norm > 1e-6 {
                    let scale = rng.gen_range(0.0..max_norm) / norm;
                    for c in chunk.iter_mut() {
                        *c *= scale;
                    }
                    break;
                }
            }
        }
    };
    for w in 0..vocab_size as u32 {
        fill(table.target_vector_mut(w), &mut rng);
        fill(table.context_vector_mut(w), &mut rng);
        *table.bias_target_mut(w) = rng.gen_range(-1.0..1.0);
        *table.bias_context_mut(w) = rng.gen_range(-1.0..1.0);
    }
    table
}

/// Independent oracle: central finite differences of the loss over every
/// point coordinate and both biases. Returns the worst relative error of
/// the analytic gradients on the given instance.
#[allow(clippy::too_many_arguments)]
pub fn finite_diff_max_rel(
    table: &EmbeddingTable,
    i: u32,
    j: u32,
    x_ij: f64,
    h: HFunction,
    x_max: f64,
    alpha: f64,
    step: f64,
) -> f64 {
    let analytic = poincare_glove::trainer::euclidean_gradients(table, i, j, x_ij, h, x_max, alpha);
    let mut worst: f64 = 0.0;
    let mut check = |a: f64, n: f64| {
        let denom = a.abs().max(n.abs());
        if denom > 1e-7 {
            worst = worst.max((a - n).abs() / denom);
        }
    };

    let wd = table.word_dim();
    for m in 0..wd {
        let probe = |delta: f64| {
            let mut t = table.clone();
            t.target_vector_mut(i)[m] += delta;
            loss_term(&t, i, j, x_ij, h, x_max, alpha)
        };
        let numeric = (probe(step) - probe(-step)) / (2.0 * step);
        check(analytic.target[m], numeric);

        let probe = |delta: f64| {
            let mut t = table.clone();
            t.context_vector_mut(j)[m] += delta;
            loss_term(&t, i, j, x_ij, h, x_max, alpha)
        };
        let numeric = (probe(step) - probe(-step)) / (2.0 * step);
        check(analytic.context[m], numeric);
    }

    let probe = |delta: f64| {
        let mut t = table.clone();
        *t.bias_target_mut(i) += delta;
        loss_term(&t, i, j, x_ij, h, x_max, alpha)
    };
    let numeric = (probe(step) - probe(-step)) / (2.0 * step);
    check(analytic.bias_target, numeric);

    let probe = |delta: f64| {
        let mut t = table.clone();
        *t.bias_context_mut(j) += delta;
        loss_term(&t, i, j, x_ij, h, x_max, alpha)
    };
    let numeric = (probe(step) - probe(-step)) / (2.0 * step);
    check(analytic.bias_context, numeric);

    worst
}
