//! Vocabulary extraction and sparse symmetric co-occurrence counting, plus
//! the on-disk formats for both.
//!
//! Counting accumulates window weights as exact integer multiples of
//! 1/lcm(1..=window), so shard-parallel counting is bit-identical to a
//! single-threaded pass regardless of how lines are split into shards.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::par;

/// Largest supported co-occurrence window. lcm(1..=64) still leaves ample
/// headroom in the u128 accumulators.
pub const MAX_WINDOW: usize = 64;

const COOC_MAGIC: &[u8; 4] = b"HGCO";
const COOC_VERSION: u32 = 1;
const COOC_HEADER_LEN: u64 = 12;
const COOC_RECORD_LEN: u64 = 16;

/// Frequency-ordered vocabulary. Ids run 0..V−1 in order of descending
/// corpus count, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocab {
    /// Counts tokens and keeps those occurring at least `min_count` times.
    pub fn build<I, S>(tokens: I, min_count: u64) -> Vocab
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for tok in tokens {
            let tok = tok.as_ref();
            if tok.is_empty() {
                continue;
            }
            *counts.entry(tok.to_string()).or_insert(0) += 1;
        }
        let mut pairs: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count)
            .collect();
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut words = Vec::with_capacity(pairs.len());
        let mut freq = Vec::with_capacity(pairs.len());
        let mut index = HashMap::with_capacity(pairs.len());
        for (id, (w, c)) in pairs.into_iter().enumerate() {
            index.insert(w.clone(), id as u32);
            words.push(w);
            freq.push(c);
        }
        Vocab {
            words,
            counts: freq,
            index,
        }
    }

    /// Builds a vocabulary from whitespace-tokenized text.
    pub fn build_from_reader<R: BufRead>(reader: R, min_count: u64) -> Result<Vocab> {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for line in reader.lines() {
            for tok in line?.split_whitespace() {
                *counts.entry(tok.to_string()).or_insert(0) += 1;
            }
        }
        let tokens: Vec<(String, u64)> = counts.into_iter().collect();
        Ok(Self::from_counts(tokens, min_count))
    }

    fn from_counts(counts: Vec<(String, u64)>, min_count: u64) -> Vocab {
        let mut pairs: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count)
            .collect();
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut words = Vec::with_capacity(pairs.len());
        let mut freq = Vec::with_capacity(pairs.len());
        let mut index = HashMap::with_capacity(pairs.len());
        for (id, (w, c)) in pairs.into_iter().enumerate() {
            index.insert(w.clone(), id as u32);
            words.push(w);
            freq.push(c);
        }
        Vocab {
            words,
            counts: freq,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Writes "word<TAB>count" lines in id order (descending count).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for (word, count) in self.words.iter().zip(&self.counts) {
            writeln!(w, "{word}\t{count}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Vocab> {
        let reader = BufReader::new(File::open(path)?);
        let mut words = Vec::new();
        let mut counts: Vec<u64> = Vec::new();
        let mut index = HashMap::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (word, count) = line.split_once('\t').ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: "expected word<TAB>count".into(),
            })?;
            let count: u64 = count.parse().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                msg: format!("bad count {count:?}"),
            })?;
            if let Some(prev) = counts.last() {
                if count > *prev {
                    return Err(Error::Parse {
                        path: path.display().to_string(),
                        line: lineno + 1,
                        msg: "counts must be non-increasing".into(),
                    });
                }
            }
            if index.insert(word.to_string(), words.len() as u32).is_some() {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("duplicate word {word:?}"),
                });
            }
            words.push(word.to_string());
            counts.push(count);
        }
        Ok(Vocab {
            words,
            counts,
            index,
        })
    }
}

/// How co-occurrence increments are weighted within the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowWeighting {
    /// 1/d at token offset d (the GloVe convention).
    Harmonic,
    /// 1 for every pair inside the window.
    Flat,
}

/// One stored co-occurrence cell with i ≤ j; symmetry is implicit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoocEntry {
    pub i: u32,
    pub j: u32,
    pub x: f64,
}

/// Sparse symmetric co-occurrence counts with per-word row sums
/// X_i = Σ_k X_ik.
#[derive(Debug, Clone, PartialEq)]
pub struct CoocMatrix {
    vocab_size: u32,
    entries: Vec<CoocEntry>,
    row_sums: Vec<f64>,
}

impl CoocMatrix {
    /// Builds a matrix from raw (i, j, x) triples; pairs are normalized to
    /// i ≤ j and duplicate cells summed.
    pub fn from_entries(vocab_size: u32, raw: Vec<(u32, u32, f64)>) -> Result<CoocMatrix> {
        let mut cells: HashMap<(u32, u32), f64> = HashMap::new();
        for (i, j, x) in raw {
            if i >= vocab_size || j >= vocab_size {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) outside vocabulary of size {vocab_size}"
                )));
            }
            if x <= 0.0 || !x.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) has non-positive count {x}"
                )));
            }
            let key = (i.min(j), i.max(j));
            *cells.entry(key).or_insert(0.0) += x;
        }
        let mut entries: Vec<CoocEntry> = cells
            .into_iter()
            .map(|((i, j), x)| CoocEntry { i, j, x })
            .collect();
        entries.sort_by_key(|e| (e.i, e.j));
        Ok(Self::from_sorted_entries(vocab_size, entries))
    }

    fn from_sorted_entries(vocab_size: u32, entries: Vec<CoocEntry>) -> CoocMatrix {
        let mut row_sums = vec![0.0; vocab_size as usize];
        for e in &entries {
            row_sums[e.i as usize] += e.x;
            if e.i != e.j {
                row_sums[e.j as usize] += e.x;
            }
        }
        CoocMatrix {
            vocab_size,
            entries,
            row_sums,
        }
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    pub fn entries(&self) -> &[CoocEntry] {
        &self.entries
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn row_sum(&self, i: u32) -> f64 {
        self.row_sums[i as usize]
    }

    /// X_ij for an unordered pair, if stored.
    pub fn get(&self, i: u32, j: u32) -> Option<f64> {
        let key = (i.min(j), i.max(j));
        self.entries
            .binary_search_by_key(&key, |e| (e.i, e.j))
            .ok()
            .map(|idx| self.entries[idx].x)
    }

    /// Binary format: magic "HGCO", version u32, V u32, then 16-byte
    /// little-endian records (u32 i, u32 j, f64 x) sorted by (i, j).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(COOC_MAGIC)?;
        w.write_all(&COOC_VERSION.to_le_bytes())?;
        w.write_all(&self.vocab_size.to_le_bytes())?;
        for e in &self.entries {
            w.write_all(&e.i.to_le_bytes())?;
            w.write_all(&e.j.to_le_bytes())?;
            w.write_all(&e.x.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<CoocMatrix> {
        let mut r = BufReader::new(File::open(path)?);
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        let fmt_err = |offset: u64, msg: String| Error::Format {
            path: path.display().to_string(),
            offset,
            msg,
        };
        if buf.len() < COOC_HEADER_LEN as usize {
            return Err(fmt_err(0, "truncated header".into()));
        }
        if &buf[0..4] != COOC_MAGIC {
            return Err(fmt_err(0, format!("bad magic {:?}", &buf[0..4])));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != COOC_VERSION {
            return Err(fmt_err(4, format!("unsupported version {version}")));
        }
        let vocab_size = u32::from_le_bytes(buf[8..12].try_into().unwrap());
        let body = &buf[COOC_HEADER_LEN as usize..];
        let n_records = body.len() / COOC_RECORD_LEN as usize;
        if body.len() % COOC_RECORD_LEN as usize != 0 {
            let offset = COOC_HEADER_LEN + n_records as u64 * COOC_RECORD_LEN;
            return Err(fmt_err(offset, format!("truncated record at offset {offset}")));
        }
        let mut entries = Vec::with_capacity(n_records);
        let mut prev: Option<(u32, u32)> = None;
        for rec in 0..n_records {
            let off = rec * COOC_RECORD_LEN as usize;
            let file_off = COOC_HEADER_LEN + rec as u64 * COOC_RECORD_LEN;
            let i = u32::from_le_bytes(body[off..off + 4].try_into().unwrap());
            let j = u32::from_le_bytes(body[off + 4..off + 8].try_into().unwrap());
            let x = f64::from_le_bytes(body[off + 8..off + 16].try_into().unwrap());
            if i >= vocab_size || j >= vocab_size {
                return Err(fmt_err(
                    file_off,
                    format!("word id ({i}, {j}) out of range for V = {vocab_size}"),
                ));
            }
            if i > j {
                return Err(fmt_err(file_off, format!("record ({i}, {j}) not upper-triangular")));
            }
            if x <= 0.0 || !x.is_finite() {
                return Err(fmt_err(file_off, format!("non-positive count {x}")));
            }
            if let Some(p) = prev {
                if (i, j) <= p {
                    return Err(fmt_err(file_off, "records not sorted by (i, j)".into()));
                }
            }
            prev = Some((i, j));
            entries.push(CoocEntry { i, j, x });
        }
        Ok(Self::from_sorted_entries(vocab_size, entries))
    }
}

/// GloVe down-weighting f(x) = min(1, (x/x_max)^alpha).
pub fn glove_weight(x: f64, x_max: f64, alpha: f64) -> f64 {
    ((x / x_max).powf(alpha)).min(1.0)
}

fn lcm_1_to(n: usize) -> u128 {
    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    (1..=n as u128).fold(1u128, |acc, k| acc / gcd(acc, k) * k)
}

/// Counts symmetric windowed co-occurrences over newline-delimited lines;
/// windows do not cross lines. Out-of-vocabulary tokens are skipped but
/// still occupy window positions.
///
/// With the `parallel` feature, lines are counted shard-locally and the
/// integer accumulators merged; the result is bit-identical to a
/// sequential pass.
pub fn count_cooccurrences<S>(
    lines: &[S],
    vocab: &Vocab,
    window: usize,
    weighting: WindowWeighting,
) -> Result<CoocMatrix>
where
    S: AsRef<str> + Sync,
{
    if window == 0 {
        return Err(Error::InvalidInput("window must be >= 1".into()));
    }
    if window > MAX_WINDOW {
        return Err(Error::InvalidInput(format!(
            "window {window} exceeds the supported maximum {MAX_WINDOW}"
        )));
    }
    let lcm = lcm_1_to(window);

    let chunk_size = 4096usize;
    let chunks: Vec<&[S]> = lines.chunks(chunk_size).collect();
    let partials = par::map_batches(chunks, |chunk| {
        count_chunk(chunk, vocab, window, weighting, lcm)
    });

    // Integer addition is exact and associative, so merge order is free.
    let mut total: HashMap<(u32, u32), u128> = HashMap::new();
    for part in partials {
        for (key, units) in part {
            *total.entry(key).or_insert(0) += units;
        }
    }

    let lcm_f = lcm as f64;
    let mut entries: Vec<CoocEntry> = total
        .into_iter()
        .map(|((i, j), units)| CoocEntry {
            i,
            j,
            x: units as f64 / lcm_f,
        })
        .collect();
    entries.sort_by_key(|e| (e.i, e.j));
    Ok(CoocMatrix::from_sorted_entries(vocab.len() as u32, entries))
}

fn count_chunk<S: AsRef<str>>(
    chunk: &[S],
    vocab: &Vocab,
    window: usize,
    weighting: WindowWeighting,
    lcm: u128,
) -> HashMap<(u32, u32), u128> {
    let mut cells: HashMap<(u32, u32), u128> = HashMap::new();
    let mut ids: Vec<Option<u32>> = Vec::new();
    for line in chunk {
        ids.clear();
        ids.extend(line.as_ref().split_whitespace().map(|tok| vocab.id(tok)));
        for (pos, id) in ids.iter().enumerate() {
            let Some(b) = *id else { continue };
            for d in 1..=window.min(pos) {
                let Some(a) = ids[pos - d] else { continue };
                let units = match weighting {
                    WindowWeighting::Harmonic => lcm / d as u128,
                    WindowWeighting::Flat => lcm,
                };
                // The event contributes to X_ab and X_ba; one symmetric
                // cell absorbs both, which doubles the diagonal.
                let units = if a == b { 2 * units } else { units };
                *cells.entry((a.min(b), a.max(b))).or_insert(0) += units;
            }
        }
    }
    cells
}
