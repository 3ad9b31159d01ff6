//! Token embeddings: vocabulary, dense vector table, cosine queries,
//! skip-gram negative-sampling training, and the text vector format.

mod io;
mod sgns;

use std::collections::HashMap;

pub use io::{load_vectors, read_vectors, save_vectors, write_vectors};
pub use sgns::{train_sgns, train_sgns_with_report, SgnsConfig, TrainingReport, NOISE_TABLE_SLOTS};

use crate::{Error, Result};

/// Retained tokens, indexed by descending frequency (ties lexicographic).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    counts: Vec<u64>,
    min_count: u64,
}

impl Vocab {
    /// Builds a vocabulary from explicit entries, keeping their order.
    /// Used for loaded vector files, whose frequencies are unknown.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::Invalid(format!("duplicate vocabulary token `{t}`")));
            }
        }
        let counts = vec![0; tokens.len()];
        Ok(Vocab {
            tokens,
            index,
            counts,
            min_count: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, idx: u32) -> &str {
        &self.tokens[idx as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, idx: u32) -> u64 {
        self.counts[idx as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }
}

pub fn build_vocab<I, S>(stream: I, min_count: u64) -> Result<Vocab>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut freq: HashMap<String, u64> = HashMap::new();
    for tok in stream {
        let tok = tok.as_ref();
        match freq.get_mut(tok) {
            Some(c) => *c += 1,
            None => {
                freq.insert(tok.to_string(), 1);
            }
        }
    }
    let mut kept: Vec<(String, u64)> = freq.into_iter().filter(|(_, c)| *c >= min_count).collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocab { min_count });
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let (tokens, counts): (Vec<String>, Vec<u64>) = kept.into_iter().unzip();
    let index = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();
    Ok(Vocab {
        tokens,
        index,
        counts,
        min_count,
    })
}

/// An immutable token-to-vector table.
///
/// Unit-normalized rows are cached in `f64` at construction so cosine costs
/// are computed once per pair without renormalizing.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    vocab: Vocab,
    dim: usize,
    vectors: Vec<f32>,
    unit: Vec<f64>,
    zero_rows: Vec<bool>,
}

impl PartialEq for EmbeddingTable {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.vocab.tokens == other.vocab.tokens
            && self.vectors == other.vectors
    }
}

impl EmbeddingTable {
    pub fn new(vocab: Vocab, dim: usize, vectors: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("embedding dimension must be positive".into()));
        }
        if vectors.len() != vocab.len() * dim {
            return Err(Error::Invalid(format!(
                "{} components do not fill {} rows of dimension {dim}",
                vectors.len(),
                vocab.len()
            )));
        }
        if let Some(pos) = vectors.iter().position(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!(
                "non-finite component in row `{}`",
                vocab.token((pos / dim) as u32)
            )));
        }
        let mut unit = Vec::with_capacity(vectors.len());
        let mut zero_rows = Vec::with_capacity(vocab.len());
        for row in vectors.chunks_exact(dim) {
            let norm = row.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
            zero_rows.push(norm == 0.0);
            let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
            unit.extend(row.iter().map(|&x| f64::from(x) * scale));
        }
        Ok(EmbeddingTable {
            vocab,
            dim,
            vectors,
            unit,
            zero_rows,
        })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.vocab.get(token)
    }

    pub fn vector(&self, idx: u32) -> &[f32] {
        let i = idx as usize * self.dim;
        &self.vectors[i..i + self.dim]
    }

    pub fn lookup(&self, token: &str) -> Option<&[f32]> {
        self.get(token).map(|i| self.vector(i))
    }

    pub(crate) fn unit(&self, idx: u32) -> &[f64] {
        let i = idx as usize * self.dim;
        &self.unit[i..i + self.dim]
    }

    pub(crate) fn is_zero(&self, idx: u32) -> bool {
        self.zero_rows[idx as usize]
    }

    /// Cosine distance between two table rows; exactly 0 for a row and itself.
    pub fn cosine_distance_idx(&self, a: u32, b: u32) -> f64 {
        if a == b {
            return 0.0;
        }
        if self.is_zero(a) || self.is_zero(b) {
            log::debug!("zero vector in cosine distance; using 1");
            return 1.0;
        }
        let dot: f64 = self.unit(a).iter().zip(self.unit(b)).map(|(x, y)| x * y).sum();
        (1.0 - dot).clamp(0.0, 2.0)
    }

    pub fn euclidean_distance_idx(&self, a: u32, b: u32) -> f64 {
        if a == b {
            return 0.0;
        }
        euclidean_distance(self.vector(a), self.vector(b))
    }
}

/// `1 - cos(u, v)`, in `[0, 2]`. A zero vector yields 1.
pub fn cosine_distance<T: Copy + Into<f64>>(u: &[T], v: &[T]) -> f64 {
    assert_eq!(u.len(), v.len(), "dimension mismatch");
    let (mut dot, mut nu, mut nv) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in u.iter().zip(v) {
        let (x, y) = (x.into(), y.into());
        dot += x * y;
        nu += x * x;
        nv += y * y;
    }
    if nu == 0.0 || nv == 0.0 {
        log::debug!("zero vector in cosine distance; using 1");
        return 1.0;
    }
    (1.0 - dot / (nu.sqrt() * nv.sqrt())).clamp(0.0, 2.0)
}

pub fn euclidean_distance<T: Copy + Into<f64>>(u: &[T], v: &[T]) -> f64 {
    assert_eq!(u.len(), v.len(), "dimension mismatch");
    u.iter()
        .zip(v)
        .map(|(&x, &y)| (x.into() - y.into()).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// The `k` most cosine-similar tokens to `token`, excluding itself.
///
/// Returns an empty list for an out-of-vocabulary query. Ties go to the
/// lower vocabulary index.
pub fn nearest_neighbors(table: &EmbeddingTable, token: &str, k: usize) -> Vec<(String, f64)> {
    let Some(query) = table.get(token) else {
        return Vec::new();
    };
    nearest_neighbor_indices(table, query, k)
        .into_iter()
        .map(|(i, s)| (table.vocab.token(i).to_string(), s))
        .collect()
}

pub(crate) fn nearest_neighbor_indices(table: &EmbeddingTable, query: u32, k: usize) -> Vec<(u32, f64)> {
    if k == 0 {
        return Vec::new();
    }
    let q = table.unit(query);
    let mut scored: Vec<(u32, f64)> = (0..table.len() as u32)
        .filter(|&i| i != query)
        .map(|i| {
            let sim = q.iter().zip(table.unit(i)).map(|(x, y)| x * y).sum::<f64>();
            (i, sim)
        })
        .collect();
    let by_rank = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, by_rank);
        scored.truncate(k);
    }
    scored.sort_by(by_rank);
    scored
}
