//! Candidate extraction: retrieve the nearest training recipes for each test
//! recipe by an instruction-text measure, then keep the pairs whose
//! ingredient lists are close enough to be worth annotating.

mod report;
mod tfidf;

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

pub use report::{compare_methods, LabelCount, MethodRow, MethodsReport};
pub use tfidf::{tfidf_cosine, SparseVector, TfidfIndex};

use crate::corpus::{Corpus, PairLabel, Recipe};
use crate::embed::EmbeddingTable;
use crate::exec;
use crate::ingredients::ingredients_distance;
use crate::mover::{Metric, MoverIndex};
use crate::textnorm::NormalizationConfig;
use crate::tokenize::{tokenize_instructions, Granularity, TokenSeq};
use crate::{Error, Result};

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_THRESHOLD: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gram3Sgns,
    Gram3External,
    WordSgns,
    WordExternal,
    TfidfBaseline,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Gram3Sgns,
        Method::Gram3External,
        Method::WordSgns,
        Method::WordExternal,
        Method::TfidfBaseline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Gram3Sgns => "gram3-sgns",
            Method::Gram3External => "gram3-external",
            Method::WordSgns => "word-sgns",
            Method::WordExternal => "word-external",
            Method::TfidfBaseline => "tfidf-baseline",
        }
    }

    /// Token granularity of the mover methods; `None` for the baseline.
    pub fn granularity(self) -> Option<Granularity> {
        match self {
            Method::Gram3Sgns | Method::Gram3External => Some(Granularity::GRAM3),
            Method::WordSgns | Method::WordExternal => Some(Granularity::Word),
            Method::TfidfBaseline => None,
        }
    }

    pub fn for_embedding(granularity: Granularity, external: bool) -> Method {
        match (granularity, external) {
            (Granularity::Word, false) => Method::WordSgns,
            (Granularity::Word, true) => Method::WordExternal,
            (Granularity::CharNGram(_), false) => Method::Gram3Sgns,
            (Granularity::CharNGram(_), true) => Method::Gram3External,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("method `{s}` is not one of gram3-sgns, gram3-external, word-sgns, word-external, tfidf-baseline")))
    }
}

/// A (test recipe, train recipe) pair proposed for annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair {
    /// Test-side recipe, the suspected near-duplicate.
    pub query_id: String,
    /// Train-side recipe, the suspected original.
    pub candidate_id: String,
    pub method: Method,
    pub instruction_distance: f64,
    pub ingredients_distance: usize,
    #[serde(default)]
    pub label: PairLabel,
}

impl CandidatePair {
    /// Order-independent identity of the pair.
    pub fn key(&self) -> (String, String) {
        pair_key(&self.query_id, &self.candidate_id)
    }
}

pub fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

pub fn write_pairs(pairs: &[CandidatePair], mut out: impl Write) -> std::io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_pairs(input: impl BufRead) -> Result<Vec<CandidatePair>> {
    let mut pairs = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Json { line: n + 1, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: CandidatePair =
            serde_json::from_str(&line).map_err(|e| Error::Json { line: n + 1, reason: e.to_string() })?;
        if !(pair.instruction_distance.is_finite() && pair.instruction_distance >= 0.0) {
            return Err(Error::Json { line: n + 1, reason: "instruction_distance must be finite and non-negative".into() });
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

/// Annotations keyed by unordered pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldLabels(HashMap<(String, String), PairLabel>);

#[derive(Deserialize)]
struct GoldRecord {
    query_id: String,
    candidate_id: String,
    label: PairLabel,
}

impl GoldLabels {
    pub fn insert(&mut self, a: &str, b: &str, label: PairLabel) {
        self.0.insert(pair_key(a, b), label);
    }

    pub fn get(&self, a: &str, b: &str) -> Option<PairLabel> {
        self.0.get(&pair_key(a, b)).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Reads `{query_id, candidate_id, label}` lines; other keys are ignored,
    /// so an annotated candidate file is itself a valid gold file.
    pub fn read(input: impl BufRead) -> Result<Self> {
        let mut gold = GoldLabels::default();
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Json { line: n + 1, reason: e.to_string() })?;
            if line.trim().is_empty() {
                continue;
            }
            let r: GoldRecord =
                serde_json::from_str(&line).map_err(|e| Error::Json { line: n + 1, reason: e.to_string() })?;
            gold.insert(&r.query_id, &r.candidate_id, r.label);
        }
        Ok(gold)
    }

    /// Writes one `{query_id, candidate_id, label}` line per pair, sorted by
    /// pair key.
    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        let mut entries: Vec<_> = self.0.iter().collect();
        entries.sort();
        for ((a, b), label) in entries {
            let record = serde_json::json!({ "query_id": a, "candidate_id": b, "label": label });
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Overwrites each pair's label from the gold set. Pairs missing from it
    /// keep their label, or take `unlisted` when given.
    pub fn apply(&self, pairs: &mut [CandidatePair], unlisted: Option<PairLabel>) {
        for p in pairs {
            match (self.get(&p.query_id, &p.candidate_id), unlisted) {
                (Some(label), _) | (None, Some(label)) => p.label = label,
                (None, None) => {}
            }
        }
    }
}

/// A retrieved training recipe: its corpus position and instruction distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Retrieved {
    pub position: usize,
    pub distance: f64,
}

/// Instruction-text retrieval over a training corpus.
pub trait Retriever: Sync {
    fn method(&self) -> Method;

    /// The `k` closest training recipes, ascending by distance with ties by
    /// recipe id. Fails with [`Error::Unembeddable`] when the query has no
    /// usable tokens.
    fn retrieve(&self, query: &Recipe, k: usize) -> Result<Vec<Retrieved>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoverOptions {
    pub metric: Metric,
    pub normalization: NormalizationConfig,
    pub pruning: bool,
}

impl Default for MoverOptions {
    fn default() -> Self {
        MoverOptions {
            metric: Metric::Cosine,
            normalization: NormalizationConfig::INSTRUCTIONS,
            pruning: true,
        }
    }
}

/// Mover's-distance retrieval in word or n-gram mode.
pub struct MoverRetriever<'t> {
    method: Method,
    granularity: Granularity,
    options: MoverOptions,
    index: MoverIndex<'t>,
    /// Training-corpus position of each indexed document.
    positions: Vec<usize>,
    skipped: Vec<String>,
}

impl<'t> MoverRetriever<'t> {
    pub fn new(train: &Corpus, table: &'t EmbeddingTable, method: Method, options: MoverOptions) -> Result<Self> {
        let granularity = method
            .granularity()
            .ok_or_else(|| Error::Config(format!("{method} is not a mover method")))?;
        let tokens = exec::map(train.recipes(), |r| tokenize_instructions(r, granularity, &options.normalization));
        let (index, skipped) = MoverIndex::build(
            table,
            options.metric,
            train.recipes().iter().zip(&tokens).map(|(r, t)| (r.id.as_str(), t)),
        );
        for id in &skipped {
            warn!("training recipe {id} has no embeddable tokens; not indexed");
        }
        Self::from_index(train, index, skipped, method, options)
    }

    /// Wraps an index built elsewhere over `train`, for instance one read
    /// back from disk.
    pub fn from_index(
        train: &Corpus,
        index: MoverIndex<'t>,
        skipped: Vec<String>,
        method: Method,
        options: MoverOptions,
    ) -> Result<Self> {
        let granularity = method
            .granularity()
            .ok_or_else(|| Error::Config(format!("{method} is not a mover method")))?;
        let positions = index
            .docs()
            .iter()
            .map(|d| {
                train
                    .position(&d.id)
                    .ok_or_else(|| Error::Invalid(format!("indexed recipe `{}` is not in the training split", d.id)))
            })
            .collect::<Result<_>>()?;
        Ok(MoverRetriever {
            method,
            granularity,
            options,
            index,
            positions,
            skipped,
        })
    }

    pub fn index(&self) -> &MoverIndex<'t> {
        &self.index
    }

    /// Training recipes left out of the index.
    pub fn skipped(&self) -> &[String] {
        &self.skipped
    }
}

impl Retriever for MoverRetriever<'_> {
    fn method(&self) -> Method {
        self.method
    }

    fn retrieve(&self, query: &Recipe, k: usize) -> Result<Vec<Retrieved>> {
        let tokens = tokenize_instructions(query, self.granularity, &self.options.normalization);
        let top = self.index.topk_tokens(&tokens, k, self.options.pruning)?;
        Ok(top
            .hits
            .into_iter()
            .map(|h| Retrieved {
                position: self.positions[h.position],
                distance: h.distance,
            })
            .collect())
    }
}

/// The tf-idf cosine baseline; distance is `1 - similarity`.
pub struct TfidfRetriever {
    granularity: Granularity,
    normalization: NormalizationConfig,
    index: TfidfIndex,
    ids: Vec<String>,
}

impl TfidfRetriever {
    pub fn new(train: &Corpus, granularity: Granularity, normalization: NormalizationConfig) -> Self {
        let docs = exec::map(train.recipes(), |r| tokenize_instructions(r, granularity, &normalization));
        TfidfRetriever {
            granularity,
            normalization,
            index: TfidfIndex::build(&docs),
            ids: train.recipes().iter().map(|r| r.id.clone()).collect(),
        }
    }

    pub fn index(&self) -> &TfidfIndex {
        &self.index
    }
}

impl Retriever for TfidfRetriever {
    fn method(&self) -> Method {
        Method::TfidfBaseline
    }

    fn retrieve(&self, query: &Recipe, k: usize) -> Result<Vec<Retrieved>> {
        let tokens = tokenize_instructions(query, self.granularity, &self.normalization);
        let v = self.index.vectorize(&tokens);
        let distances: Vec<f64> = self.index.similarities(&v).into_iter().map(|s| 1.0 - s).collect();
        Ok(smallest(&distances, &self.ids, k))
    }
}

/// Exhaustive retrieval under an arbitrary instruction measure.
pub struct MeasureRetriever<F> {
    method: Method,
    granularity: Granularity,
    normalization: NormalizationConfig,
    docs: Vec<TokenSeq>,
    ids: Vec<String>,
    measure: F,
}

impl<F> MeasureRetriever<F>
where
    F: Fn(&TokenSeq, &TokenSeq) -> f64 + Sync,
{
    pub fn new(
        train: &Corpus,
        method: Method,
        granularity: Granularity,
        normalization: NormalizationConfig,
        measure: F,
    ) -> Self {
        MeasureRetriever {
            method,
            granularity,
            normalization,
            docs: train
                .recipes()
                .iter()
                .map(|r| tokenize_instructions(r, granularity, &normalization))
                .collect(),
            ids: train.recipes().iter().map(|r| r.id.clone()).collect(),
            measure,
        }
    }
}

impl<F> Retriever for MeasureRetriever<F>
where
    F: Fn(&TokenSeq, &TokenSeq) -> f64 + Sync,
{
    fn method(&self) -> Method {
        self.method
    }

    fn retrieve(&self, query: &Recipe, k: usize) -> Result<Vec<Retrieved>> {
        let q = tokenize_instructions(query, self.granularity, &self.normalization);
        let distances: Vec<f64> = self.docs.iter().map(|d| (self.measure)(&q, d)).collect();
        Ok(smallest(&distances, &self.ids, k))
    }
}

fn smallest(distances: &[f64], ids: &[String], k: usize) -> Vec<Retrieved> {
    let mut order: Vec<usize> = (0..distances.len()).collect();
    order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then_with(|| ids[a].cmp(&ids[b])));
    order
        .into_iter()
        .take(k)
        .map(|position| Retrieved {
            position,
            distance: distances[position],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub pairs: Vec<CandidatePair>,
    /// Test recipes that could not be queried.
    pub skipped: Vec<String>,
}

/// Retrieves the top `k` training recipes for every test recipe and keeps
/// pairs whose ingredients distance is at most `threshold`.
///
/// Ingredient lists are compared with the training recipe as the original.
/// Output follows test-corpus order, then retrieval rank.
pub fn extract_candidates(
    test: &Corpus,
    train: &Corpus,
    retriever: &dyn Retriever,
    ingredient_table: &EmbeddingTable,
    k: usize,
    threshold: usize,
) -> Result<Extraction> {
    let method = retriever.method();
    let per_query = exec::map(test.recipes(), |query| -> Result<Option<Vec<CandidatePair>>> {
        let hits = match retriever.retrieve(query, k) {
            Ok(h) => h,
            Err(Error::Unembeddable) => return Ok(None),
            Err(e) => return Err(e),
        };
        Ok(Some(
            hits.into_iter()
                .filter_map(|hit| {
                    let original = &train.recipes()[hit.position];
                    let d = ingredients_distance(&original.ingredients, &query.ingredients, ingredient_table);
                    (d <= threshold).then(|| CandidatePair {
                        query_id: query.id.clone(),
                        candidate_id: original.id.clone(),
                        method,
                        instruction_distance: hit.distance.max(0.0),
                        ingredients_distance: d,
                        label: PairLabel::Unlabeled,
                    })
                })
                .collect(),
        ))
    });

    let mut pairs: Vec<CandidatePair> = Vec::new();
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    let mut skipped = Vec::new();
    for (query, result) in test.recipes().iter().zip(per_query) {
        let Some(found) = result? else {
            warn!("test recipe {} has no embeddable tokens; skipped", query.id);
            skipped.push(query.id.clone());
            continue;
        };
        for pair in found {
            match seen.get(&pair.key()) {
                Some(&at) => {
                    if pair.instruction_distance < pairs[at].instruction_distance {
                        pairs[at] = pair;
                    }
                }
                None => {
                    seen.insert(pair.key(), pairs.len());
                    pairs.push(pair);
                }
            }
        }
    }
    Ok(Extraction { pairs, skipped })
}
