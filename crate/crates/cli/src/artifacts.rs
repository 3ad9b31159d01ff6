//! Artifact locations inside the output directory and their file formats.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use gram_mover::embed::{load_vectors, EmbeddingTable};
use gram_mover::mover::{GramHistogram, Metric, MoverIndex};
use gram_mover::pipeline::Method;
use gram_mover::textnorm::NormalizationConfig;
use gram_mover::tokenize::Granularity;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub struct Layout {
    dir: PathBuf,
}

impl Layout {
    pub fn new(dir: &Path) -> Self {
        Layout { dir: dir.to_path_buf() }
    }

    pub fn embeddings(&self, g: Granularity) -> PathBuf {
        self.dir.join(format!("embeddings-{g}.vec"))
    }

    pub fn manifest(&self, g: Granularity) -> PathBuf {
        self.dir.join(format!("embeddings-{g}.json"))
    }

    pub fn ingredients(&self) -> PathBuf {
        self.dir.join("ingredients.vec")
    }

    pub fn index(&self, g: Granularity) -> PathBuf {
        self.dir.join(format!("index-{g}.jsonl"))
    }

    pub fn candidates(&self, method: Method) -> PathBuf {
        self.dir.join(format!("candidates-{method}.jsonl"))
    }

    pub fn gold(&self) -> PathBuf {
        self.dir.join("gold.jsonl")
    }

    pub fn report(&self, ext: &str) -> PathBuf {
        self.dir.join(format!("report.{ext}"))
    }

    pub fn classification(&self, ext: &str) -> PathBuf {
        self.dir.join(format!("classification.{ext}"))
    }
}

/// Fails with the producing subcommand's name when `path` is absent.
pub fn require(path: &Path, producer: &'static str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Missing {
            path: path.to_path_buf(),
            producer,
        })
    }
}

/// Writes through a temporary file in the target directory, then renames it
/// into place.
pub fn write_atomic<F>(path: &Path, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<&mut File>) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    {
        let mut out = BufWriter::new(tmp.as_file_mut());
        write(&mut out).and_then(|_| out.flush()).map_err(|e| CliError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

/// Describes where an embedding table came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub granularity: String,
    pub method: Method,
    pub source: String,
    pub vocabulary: usize,
    pub dimension: usize,
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::Stale(format!(
        "{}: {e}; rerun `train-embeddings`",
        path.display()
    )))
}

pub fn load_table(path: &Path, producer: &'static str) -> Result<EmbeddingTable, CliError> {
    require(path, producer)?;
    Ok(load_vectors(path)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexHeader {
    granularity: String,
    method: Method,
    metric: Metric,
    normalization: NormalizationConfig,
    skipped: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexRecord {
    id: String,
    tokens: Vec<String>,
    weights: Vec<f64>,
}

/// A stored index, detached from its embedding table.
pub struct StoredIndex {
    pub granularity: Granularity,
    pub method: Method,
    pub metric: Metric,
    pub normalization: NormalizationConfig,
    pub skipped: Vec<String>,
    records: Vec<IndexRecord>,
}

/// One header line, then one `{id, tokens, weights}` line per document.
pub fn write_index(
    out: &mut impl Write,
    index: &MoverIndex<'_>,
    method: Method,
    normalization: NormalizationConfig,
    skipped: &[String],
) -> std::io::Result<()> {
    let granularity = method.granularity().expect("mover method").to_string();
    let header = IndexHeader {
        granularity,
        method,
        metric: index.metric(),
        normalization,
        skipped: skipped.to_vec(),
    };
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n")?;
    let vocab = index.table().vocab();
    for doc in index.docs() {
        let record = IndexRecord {
            id: doc.id.clone(),
            tokens: doc.hist.support().iter().map(|&i| vocab.token(i).to_string()).collect(),
            weights: doc.hist.weights().to_vec(),
        };
        serde_json::to_writer(&mut *out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_index(path: &Path) -> Result<StoredIndex, CliError> {
    let stale = |reason: String| CliError::Stale(format!("{}: {reason}; rerun `build-index`", path.display()));
    let mut lines = open(path)?.lines();
    let first = lines
        .next()
        .ok_or_else(|| stale("empty index".into()))?
        .map_err(|e| CliError::io(path, e))?;
    let header: IndexHeader = serde_json::from_str(&first).map_err(|e| stale(e.to_string()))?;
    let granularity = header.granularity.parse().map_err(|e: gram_mover::Error| stale(e.to_string()))?;
    let mut records = Vec::new();
    for line in lines {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if !line.trim().is_empty() {
            records.push(serde_json::from_str(&line).map_err(|e| stale(e.to_string()))?);
        }
    }
    Ok(StoredIndex {
        granularity,
        method: header.method,
        metric: header.metric,
        normalization: header.normalization,
        skipped: header.skipped,
        records,
    })
}

impl StoredIndex {
    /// Rebuilds the searchable index over `table`.
    pub fn attach<'t>(&self, table: &'t EmbeddingTable, path: &Path) -> Result<MoverIndex<'t>, CliError> {
        let mut index = MoverIndex::new(table, self.metric);
        for r in &self.records {
            let support = r
                .tokens
                .iter()
                .map(|t| table.get(t))
                .collect::<Option<Vec<u32>>>()
                .ok_or_else(|| {
                    CliError::Stale(format!(
                        "{}: recipe {} uses tokens missing from the embeddings; rerun `build-index`",
                        path.display(),
                        r.id
                    ))
                })?;
            let hist = GramHistogram::new(support, r.weights.clone(), self.granularity)
                .map_err(|e| CliError::Stale(format!("{}: {e}; rerun `build-index`", path.display())))?;
            index.push(r.id.clone(), hist);
        }
        Ok(index)
    }
}
