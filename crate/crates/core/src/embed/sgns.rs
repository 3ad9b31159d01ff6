//! Skip-gram with negative sampling.
//!
//! Each (center, context) pair updates the context word's input vector
//! toward the center word's output vector and away from `negatives` noise
//! words drawn from the unigram distribution raised to the 3/4 power. The
//! effective window is drawn uniformly from `1..=window` per position and
//! frequent tokens are subsampled, both as in the original formulation.
//!
//! With `threads == 1` training is single-threaded and bitwise reproducible
//! for a fixed seed. With more threads (and the `parallel` feature) the
//! documents are sharded over worker threads that update shared parameters
//! without locks; results are then not reproducible.

#[cfg(feature = "parallel")]
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_vocab, EmbeddingTable, Vocab};
use crate::tokenize::TokenSeq;
use crate::{Error, Result};

pub const NOISE_TABLE_SLOTS: usize = 10_000_000;
const NOISE_POWER: f64 = 0.75;
const FINAL_STEP_SIZE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgnsConfig {
    pub dimension: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_step_size: f64,
    pub subsample_threshold: f64,
    pub min_count: u64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dimension: 100,
            window: 15,
            negatives: 5,
            epochs: 5,
            initial_step_size: 0.025,
            subsample_threshold: 1e-4,
            min_count: 5,
            seed: 1,
            threads: 1,
        }
    }
}

impl SgnsConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dimension", self.dimension),
            ("window", self.window),
            ("negatives", self.negatives),
            ("epochs", self.epochs),
            ("min_count", self.min_count as usize),
            ("threads", self.threads),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.initial_step_size > 0.0 && self.initial_step_size.is_finite()) {
            return Err(Error::Config("initial_step_size must be positive".into()));
        }
        if !(self.subsample_threshold >= 0.0) {
            return Err(Error::Config("subsample_threshold must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingReport {
    /// Mean per-pair logistic loss for each epoch.
    pub epoch_losses: Vec<f64>,
    pub pairs_trained: u64,
}

pub fn train_sgns(documents: &[TokenSeq], config: &SgnsConfig) -> Result<EmbeddingTable> {
    train_sgns_with_report(documents, config).map(|(t, _)| t)
}

pub fn train_sgns_with_report(
    documents: &[TokenSeq],
    config: &SgnsConfig,
) -> Result<(EmbeddingTable, TrainingReport)> {
    config.validate()?;
    if let Some(first) = documents.first() {
        if documents.iter().any(|d| d.granularity != first.granularity) {
            return Err(Error::Invalid(
                "training documents mix token granularities".into(),
            ));
        }
    }
    let vocab = build_vocab(documents.iter().flat_map(|d| d.tokens.iter()), config.min_count)?;
    let encoded: Vec<Vec<u32>> = documents
        .iter()
        .map(|d| d.tokens.iter().filter_map(|t| vocab.get(t)).collect::<Vec<_>>())
        .filter(|d| d.len() >= 2)
        .collect();
    if encoded.is_empty() {
        return Err(Error::DegenerateCorpus(
            "no document has two or more in-vocabulary tokens".into(),
        ));
    }

    let dim = config.dimension;
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let input: Vec<f32> = (0..vocab.len() * dim)
        .map(|_| ((init_rng.random::<f64>() - 0.5) / dim as f64) as f32)
        .collect();
    let output = vec![0.0f32; vocab.len() * dim];
    let trainer = Trainer::new(&vocab, &encoded, config);

    let (vectors, report) = if config.threads > 1 && cfg!(feature = "parallel") {
        trainer.run_shared(input, output)
    } else {
        trainer.run_single(input, output)
    };
    Ok((EmbeddingTable::new(vocab, dim, vectors)?, report))
}

/// Row-major parameter matrix accessed one row at a time.
trait Rows {
    fn read(&self, row: usize, out: &mut [f32]);
    fn dot(&self, row: usize, x: &[f32]) -> f32;
    /// `acc += g * self[row]`
    fn scaled_into(&self, row: usize, g: f32, acc: &mut [f32]);
    /// `self[row] += g * x`
    fn add_scaled(&mut self, row: usize, g: f32, x: &[f32]);
}

struct Dense<'a> {
    dim: usize,
    data: &'a mut [f32],
}

impl Rows for Dense<'_> {
    fn read(&self, row: usize, out: &mut [f32]) {
        out.copy_from_slice(&self.data[row * self.dim..(row + 1) * self.dim]);
    }

    fn dot(&self, row: usize, x: &[f32]) -> f32 {
        self.data[row * self.dim..(row + 1) * self.dim]
            .iter()
            .zip(x)
            .map(|(a, b)| a * b)
            .sum()
    }

    fn scaled_into(&self, row: usize, g: f32, acc: &mut [f32]) {
        for (a, w) in acc.iter_mut().zip(&self.data[row * self.dim..(row + 1) * self.dim]) {
            *a += g * w;
        }
    }

    fn add_scaled(&mut self, row: usize, g: f32, x: &[f32]) {
        for (w, v) in self.data[row * self.dim..(row + 1) * self.dim].iter_mut().zip(x) {
            *w += g * v;
        }
    }
}

/// Lock-free view over shared parameters; races lose updates, never memory safety.
#[cfg(feature = "parallel")]
struct Shared<'a> {
    dim: usize,
    data: &'a [AtomicU32],
}

#[cfg(feature = "parallel")]
impl Shared<'_> {
    fn row(&self, row: usize) -> impl Iterator<Item = &AtomicU32> {
        self.data[row * self.dim..(row + 1) * self.dim].iter()
    }
}

#[cfg(feature = "parallel")]
fn ld(a: &AtomicU32) -> f32 {
    f32::from_bits(a.load(Ordering::Relaxed))
}

#[cfg(feature = "parallel")]
impl Rows for Shared<'_> {
    fn read(&self, row: usize, out: &mut [f32]) {
        for (o, a) in out.iter_mut().zip(self.row(row)) {
            *o = ld(a);
        }
    }

    fn dot(&self, row: usize, x: &[f32]) -> f32 {
        self.row(row).zip(x).map(|(a, b)| ld(a) * b).sum()
    }

    fn scaled_into(&self, row: usize, g: f32, acc: &mut [f32]) {
        for (o, a) in acc.iter_mut().zip(self.row(row)) {
            *o += g * ld(a);
        }
    }

    fn add_scaled(&mut self, row: usize, g: f32, x: &[f32]) {
        for (a, v) in self.row(row).zip(x) {
            a.store((ld(a) + g * v).to_bits(), Ordering::Relaxed);
        }
    }
}

struct Trainer<'a> {
    docs: &'a [Vec<u32>],
    config: &'a SgnsConfig,
    noise: Vec<u32>,
    keep_prob: Vec<f64>,
    total_steps: f64,
}

impl<'a> Trainer<'a> {
    fn new(vocab: &Vocab, docs: &'a [Vec<u32>], config: &'a SgnsConfig) -> Self {
        let noise = noise_table(vocab.counts());
        let train_words: u64 = docs.iter().map(|d| d.len() as u64).sum();
        let keep_prob = vocab
            .counts()
            .iter()
            .map(|&c| subsample_keep(c, train_words, config.subsample_threshold))
            .collect();
        Trainer {
            docs,
            config,
            noise,
            keep_prob,
            total_steps: (train_words * config.epochs as u64) as f64,
        }
    }

    fn step_size(&self, done: u64) -> f64 {
        let init = self.config.initial_step_size;
        let end = FINAL_STEP_SIZE.min(init);
        let progress = (done as f64 / self.total_steps).min(1.0);
        init + (end - init) * progress
    }

    fn run_single(&self, mut input: Vec<f32>, mut output: Vec<f32>) -> (Vec<f32>, TrainingReport) {
        let dim = self.config.dimension;
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed.wrapping_add(1));
        let mut done = 0u64;
        let mut report = TrainingReport::default();
        {
            let mut inp = Dense { dim, data: &mut input };
            let mut out = Dense { dim, data: &mut output };
            let mut progress = |n: u64| {
                done += n;
                done
            };
            for _ in 0..self.config.epochs {
                let (loss, pairs) = self.epoch(self.docs, &mut inp, &mut out, &mut rng, &mut progress);
                report.epoch_losses.push(if pairs > 0 { loss / pairs as f64 } else { 0.0 });
                report.pairs_trained += pairs;
            }
        }
        (input, report)
    }

    #[cfg(feature = "parallel")]
    fn run_shared(&self, input: Vec<f32>, output: Vec<f32>) -> (Vec<f32>, TrainingReport) {
        let dim = self.config.dimension;
        let threads = self.config.threads;
        let to_atomic = |v: Vec<f32>| v.into_iter().map(|x| AtomicU32::new(x.to_bits())).collect::<Vec<_>>();
        let input = to_atomic(input);
        let output = to_atomic(output);
        let done = AtomicU64::new(0);
        let chunk = self.docs.len().div_ceil(threads);
        let epochs = self.config.epochs;

        let per_thread: Vec<Vec<(f64, u64)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = self
                .docs
                .chunks(chunk)
                .enumerate()
                .map(|(t, shard)| {
                    let (input, output, done) = (&input, &output, &done);
                    scope.spawn(move || {
                        let mut rng =
                            ChaCha8Rng::seed_from_u64(self.config.seed.wrapping_add(1 + t as u64));
                        let mut inp = Shared { dim, data: input };
                        let mut out = Shared { dim, data: output };
                        let mut progress = |n: u64| done.fetch_add(n, Ordering::Relaxed) + n;
                        (0..epochs)
                            .map(|_| self.epoch(shard, &mut inp, &mut out, &mut rng, &mut progress))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("training worker panicked"))
                .collect()
        });

        let mut report = TrainingReport::default();
        for e in 0..epochs {
            let (loss, pairs) = per_thread
                .iter()
                .fold((0.0, 0u64), |(l, p), t| (l + t[e].0, p + t[e].1));
            report.epoch_losses.push(if pairs > 0 { loss / pairs as f64 } else { 0.0 });
            report.pairs_trained += pairs;
        }
        let vectors = input.into_iter().map(|a| f32::from_bits(a.into_inner())).collect();
        (vectors, report)
    }

    #[cfg(not(feature = "parallel"))]
    fn run_shared(&self, input: Vec<f32>, output: Vec<f32>) -> (Vec<f32>, TrainingReport) {
        self.run_single(input, output)
    }

    /// One pass over `docs`; returns (summed loss, pair count).
    fn epoch<R: Rows>(
        &self,
        docs: &[Vec<u32>],
        input: &mut R,
        output: &mut R,
        rng: &mut ChaCha8Rng,
        progress: &mut impl FnMut(u64) -> u64,
    ) -> (f64, u64) {
        let dim = self.config.dimension;
        let window = self.config.window;
        let mut l1 = vec![0.0f32; dim];
        let mut grad = vec![0.0f32; dim];
        let mut sentence = Vec::new();
        let mut loss = 0.0f64;
        let mut pairs = 0u64;
        let mut done = progress(0);

        for doc in docs {
            let step = self.step_size(done) as f32;
            sentence.clear();
            sentence.extend(
                doc.iter()
                    .copied()
                    .filter(|&w| self.keep_prob[w as usize] >= 1.0 || rng.random::<f64>() < self.keep_prob[w as usize]),
            );
            for pos in 0..sentence.len() {
                let center = sentence[pos] as usize;
                let reach = window - rng.random_range(0..window);
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(sentence.len() - 1);
                for c in lo..=hi {
                    if c == pos {
                        continue;
                    }
                    let context = sentence[c] as usize;
                    input.read(context, &mut l1);
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for d in 0..=self.config.negatives {
                        let (target, label) = if d == 0 {
                            (center, 1.0f32)
                        } else {
                            let t = self.noise[rng.random_range(0..self.noise.len())] as usize;
                            if t == center {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let f = output.dot(target, &l1);
                        loss += pair_loss(f, label);
                        let g = (label - sigmoid(f)) * step;
                        output.scaled_into(target, g, &mut grad);
                        output.add_scaled(target, g, &l1);
                    }
                    input.add_scaled(context, 1.0, &grad);
                    pairs += 1;
                }
            }
            done = progress(doc.len() as u64);
        }
        (loss, pairs)
    }
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// `-ln σ(f)` for a positive pair, `-ln σ(-f)` for a noise pair.
fn pair_loss(f: f32, label: f32) -> f64 {
    let z = f64::from(if label > 0.5 { f } else { -f });
    // -ln σ(z) = ln(1 + e^{-z}), evaluated without overflow.
    if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

fn subsample_keep(count: u64, train_words: u64, threshold: f64) -> f64 {
    if threshold <= 0.0 || count == 0 {
        return 1.0;
    }
    let scaled = threshold * train_words as f64;
    ((count as f64 / scaled).sqrt() + 1.0) * scaled / count as f64
}

fn noise_table(counts: &[u64]) -> Vec<u32> {
    let powered: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(NOISE_POWER)).collect();
    let total: f64 = powered.iter().sum();
    let mut table = Vec::with_capacity(NOISE_TABLE_SLOTS);
    let mut word = 0usize;
    let mut cumulative = powered[0] / total;
    for slot in 0..NOISE_TABLE_SLOTS {
        table.push(word as u32);
        if (slot + 1) as f64 / NOISE_TABLE_SLOTS as f64 > cumulative && word + 1 < counts.len() {
            word += 1;
            cumulative += powered[word] / total;
        }
    }
    table
}
