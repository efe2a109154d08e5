//! Embedding storage: target and context product points plus biases, with
//! binary and text persistence.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::hfunc::HFunction;
use crate::corpus::Vocab;
use crate::error::{Error, Result};
use crate::manifold::{ops, ProductPoint};

const MODEL_MAGIC: &[u8; 4] = b"HGMD";
const MODEL_VERSION: u32 = 1;

/// Radius of the uniform ball from which fresh factors are drawn. Starting
/// near the origin keeps the early geometry approximately Euclidean.
pub const INIT_RADIUS: f64 = 1e-3;

/// Target vectors w, context vectors w̃, and the two bias arrays for V
/// words embedded in (D^k)^p. Coordinates are stored flat, word-major then
/// factor-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    factors: usize,
    dim: usize,
    h: HFunction,
    pub(crate) target: Vec<f64>,
    pub(crate) context: Vec<f64>,
    pub(crate) bias_target: Vec<f64>,
    pub(crate) bias_context: Vec<f64>,
}

impl EmbeddingTable {
    /// Fresh initialization: every factor drawn uniformly from the ball of
    /// radius [`INIT_RADIUS`], biases zero. Deterministic in the seed.
    pub fn new_random(
        vocab_size: usize,
        factors: usize,
        dim: usize,
        h: HFunction,
        seed: u64,
    ) -> EmbeddingTable {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let n = vocab_size * factors * dim;
        let mut target = Vec::with_capacity(n);
        fill_uniform_ball(&mut rng, &mut target, vocab_size * factors, dim);
        let mut context = Vec::with_capacity(n);
        fill_uniform_ball(&mut rng, &mut context, vocab_size * factors, dim);
        EmbeddingTable {
            factors,
            dim,
            h,
            target,
            context,
            bias_target: vec![0.0; vocab_size],
            bias_context: vec![0.0; vocab_size],
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.bias_target.len()
    }

    pub fn num_factors(&self) -> usize {
        self.factors
    }

    pub fn factor_dim(&self) -> usize {
        self.dim
    }

    /// Coordinates per word, p·k.
    pub fn word_dim(&self) -> usize {
        self.factors * self.dim
    }

    pub fn h(&self) -> HFunction {
        self.h
    }

    /// Flat p·k coordinate slice of a target vector.
    pub fn target_vector(&self, word: u32) -> &[f64] {
        let d = self.word_dim();
        &self.target[word as usize * d..(word as usize + 1) * d]
    }

    pub fn context_vector(&self, word: u32) -> &[f64] {
        let d = self.word_dim();
        &self.context[word as usize * d..(word as usize + 1) * d]
    }

    /// Mutable access for embedding surgery; callers keep points inside
    /// the ball.
    pub fn target_vector_mut(&mut self, word: u32) -> &mut [f64] {
        let d = self.word_dim();
        &mut self.target[word as usize * d..(word as usize + 1) * d]
    }

    pub fn context_vector_mut(&mut self, word: u32) -> &mut [f64] {
        let d = self.word_dim();
        &mut self.context[word as usize * d..(word as usize + 1) * d]
    }

    pub fn bias_target_mut(&mut self, word: u32) -> &mut f64 {
        &mut self.bias_target[word as usize]
    }

    pub fn bias_context_mut(&mut self, word: u32) -> &mut f64 {
        &mut self.bias_context[word as usize]
    }

    pub fn target_point(&self, word: u32) -> ProductPoint {
        ProductPoint::from_flat(self.target_vector(word), self.factors, self.dim)
            .expect("stored points are always inside the ball")
    }

    pub fn context_point(&self, word: u32) -> ProductPoint {
        ProductPoint::from_flat(self.context_vector(word), self.factors, self.dim)
            .expect("stored points are always inside the ball")
    }

    pub fn bias_target(&self, word: u32) -> f64 {
        self.bias_target[word as usize]
    }

    pub fn bias_context(&self, word: u32) -> f64 {
        self.bias_context[word as usize]
    }

    /// Product distance between the target vectors of two words.
    pub fn target_distance(&self, a: u32, b: u32) -> f64 {
        flat_product_distance(
            self.target_vector(a),
            self.target_vector(b),
            self.dim,
        )
    }

    /// Errors unless the stored header matches the given structure.
    pub fn require(&self, factors: usize, dim: usize, h: HFunction) -> Result<()> {
        if self.factors != factors {
            return Err(Error::HeaderMismatch {
                field: "factors",
                expected: factors.to_string(),
                found: self.factors.to_string(),
            });
        }
        if self.dim != dim {
            return Err(Error::HeaderMismatch {
                field: "dim",
                expected: dim.to_string(),
                found: self.dim.to_string(),
            });
        }
        if self.h != h {
            return Err(Error::HeaderMismatch {
                field: "h",
                expected: h.name(),
                found: self.h.name(),
            });
        }
        Ok(())
    }

    /// Binary model: magic "HGMD", version, V, p, k, h-kind, h-exponent,
    /// then little-endian f64 arrays (target, context, bias_target,
    /// bias_context) in vocabulary order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MODEL_MAGIC)?;
        for field in [
            MODEL_VERSION,
            self.vocab_size() as u32,
            self.factors as u32,
            self.dim as u32,
        ] {
            w.write_all(&field.to_le_bytes())?;
        }
        let (kind, exp) = self.h.codes();
        w.write_all(&kind.to_le_bytes())?;
        w.write_all(&exp.to_le_bytes())?;
        for array in [
            &self.target,
            &self.context,
            &self.bias_target,
            &self.bias_context,
        ] {
            for v in array.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<EmbeddingTable> {
        let mut r = BufReader::new(File::open(path)?);
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        let fmt_err = |offset: u64, msg: String| Error::Format {
            path: path.display().to_string(),
            offset,
            msg,
        };
        if buf.len() < 28 {
            return Err(fmt_err(0, "truncated header".into()));
        }
        if &buf[0..4] != MODEL_MAGIC {
            return Err(fmt_err(0, format!("bad magic {:?}", &buf[0..4])));
        }
        let field = |idx: usize| u32::from_le_bytes(buf[idx..idx + 4].try_into().unwrap());
        let version = field(4);
        if version != MODEL_VERSION {
            return Err(fmt_err(4, format!("unsupported version {version}")));
        }
        let vocab_size = field(8) as usize;
        let factors = field(12) as usize;
        let dim = field(16) as usize;
        let h = HFunction::from_codes(field(20), field(24))
            .map_err(|e| fmt_err(20, e.to_string()))?;
        if factors == 0 || dim == 0 {
            return Err(fmt_err(12, format!("bad structure p={factors}, k={dim}")));
        }
        let n = vocab_size * factors * dim;
        let expected = 28 + 8 * (2 * n + 2 * vocab_size);
        if buf.len() != expected {
            return Err(fmt_err(
                buf.len() as u64,
                format!("expected {expected} bytes, found {}", buf.len()),
            ));
        }
        let mut off = 28;
        let mut read_array = |len: usize| -> Vec<f64> {
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                out.push(f64::from_le_bytes(buf[off..off + 8].try_into().unwrap()));
                off += 8;
            }
            out
        };
        let target = read_array(n);
        let context = read_array(n);
        let bias_target = read_array(vocab_size);
        let bias_context = read_array(vocab_size);
        Ok(EmbeddingTable {
            factors,
            dim,
            h,
            target,
            context,
            bias_target,
            bias_context,
        })
    }

    /// Text export: header "poincare-glove p=<p> k=<k> h=<name>", then one
    /// "word v1 ... v_pk bias" line per word. Target vectors go to
    /// `target_path`, context vectors to `context_path`. 17 significant
    /// digits, so a reimport is bit-exact.
    pub fn export_text(
        &self,
        vocab: &Vocab,
        target_path: &Path,
        context_path: &Path,
    ) -> Result<()> {
        if vocab.len() != self.vocab_size() {
            return Err(Error::DimensionMismatch {
                expected: format!("vocabulary of {} words", self.vocab_size()),
                got: format!("{}", vocab.len()),
            });
        }
        for (path, coords, biases) in [
            (target_path, &self.target, &self.bias_target),
            (context_path, &self.context, &self.bias_context),
        ] {
            let mut w = BufWriter::new(File::create(path)?);
            writeln!(
                w,
                "poincare-glove p={} k={} h={}",
                self.factors,
                self.dim,
                self.h.name()
            )?;
            let d = self.word_dim();
            for id in 0..self.vocab_size() {
                write!(w, "{}", vocab.word(id as u32))?;
                for v in &coords[id * d..(id + 1) * d] {
                    write!(w, " {v:.16e}")?;
                }
                writeln!(w, " {:.16e}", biases[id])?;
            }
            w.flush()?;
        }
        Ok(())
    }

    /// Inverse of [`EmbeddingTable::export_text`]; returns the word list in
    /// file order alongside the table.
    pub fn import_text(
        target_path: &Path,
        context_path: &Path,
    ) -> Result<(Vec<String>, EmbeddingTable)> {
        let (words, factors, dim, h, target, bias_target) = read_text_file(target_path)?;
        let (cwords, cf, cd, ch, context, bias_context) = read_text_file(context_path)?;
        if cf != factors || cd != dim || ch != h || cwords != words {
            return Err(Error::InvalidInput(
                "target and context text files describe different models".into(),
            ));
        }
        Ok((
            words,
            EmbeddingTable {
                factors,
                dim,
                h,
                target,
                context,
                bias_target,
                bias_context,
            },
        ))
    }
}

type TextModel = (Vec<String>, usize, usize, HFunction, Vec<f64>, Vec<f64>);

fn read_text_file(path: &Path) -> Result<TextModel> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.display().to_string(),
        line,
        msg,
    };
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))??;
    let mut p = None;
    let mut k = None;
    let mut h = None;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("poincare-glove") {
        return Err(parse_err(1, format!("bad header {header:?}")));
    }
    for field in fields {
        if let Some(v) = field.strip_prefix("p=") {
            p = v.parse::<usize>().ok();
        } else if let Some(v) = field.strip_prefix("k=") {
            k = v.parse::<usize>().ok();
        } else if let Some(v) = field.strip_prefix("h=") {
            h = Some(HFunction::parse(v).map_err(|e| parse_err(1, e.to_string()))?);
        }
    }
    let (p, k, h) = match (p, k, h) {
        (Some(p), Some(k), Some(h)) if p > 0 && k > 0 => (p, k, h),
        _ => return Err(parse_err(1, format!("bad header {header:?}"))),
    };
    let mut words = Vec::new();
    let mut coords = Vec::new();
    let mut biases = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 2;
        let mut fields = line.split_whitespace();
        let word = fields
            .next()
            .ok_or_else(|| parse_err(lineno, "missing word".into()))?;
        let values: Vec<f64> = fields
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(lineno, format!("bad number: {e}")))?;
        if values.len() != p * k + 1 {
            return Err(parse_err(
                lineno,
                format!("expected {} values, found {}", p * k + 1, values.len()),
            ));
        }
        words.push(word.to_string());
        coords.extend_from_slice(&values[..p * k]);
        biases.push(values[p * k]);
    }
    Ok((words, p, k, h, coords, biases))
}

fn fill_uniform_ball(rng: &mut ChaCha20Rng, out: &mut Vec<f64>, n_factors: usize, dim: usize) {
    for _ in 0..n_factors {
        // Gaussian direction (Box-Muller) scaled to a uniform-in-ball radius.
        let mut v = Vec::with_capacity(dim);
        while v.len() < dim {
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r = (-2.0 * u1.ln()).sqrt();
            v.push(r * u2.cos());
            if v.len() < dim {
                v.push(r * u2.sin());
            }
        }
        let norm = ops::norm(&v).max(f64::MIN_POSITIVE);
        let radius = INIT_RADIUS * rng.gen_range(0.0f64..1.0).powf(1.0 / dim as f64);
        out.extend(v.iter().map(|c| c * radius / norm));
    }
}

/// Product distance between flat p·k coordinate blocks.
pub fn flat_product_distance(x: &[f64], y: &[f64], dim: usize) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut sum = 0.0;
    for (xf, yf) in x.chunks_exact(dim).zip(y.chunks_exact(dim)) {
        let d = ops::ball_distance(xf, yf);
        sum += d * d;
    }
    sum.sqrt()
}
