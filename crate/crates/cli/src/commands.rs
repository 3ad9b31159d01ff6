use std::io::Write;

use gram_mover::classify::{default_grid, loocv_grid_search, metrics_table, undersample, LabeledExample, ModelKind, ResultRow};
use gram_mover::corpus::Corpus;
use gram_mover::embed::{train_sgns, write_vectors, EmbeddingTable};
use gram_mover::ingredients::train_ingredient_table;
use gram_mover::pipeline::{
    compare_methods, extract_candidates, read_pairs, write_pairs, CandidatePair, Extraction, GoldLabels, Method,
    MoverOptions, MoverRetriever, Retriever, TfidfRetriever,
};
use gram_mover::synth;
use gram_mover::tokenize::tokenize_instructions;
use log::{info, warn};

use crate::artifacts::{self, load_table, read_index, read_manifest, require, write_atomic, Layout, Manifest};
use crate::config::{EmbeddingSource, PipelineConfig};
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn load_corpus(config: &PipelineConfig) -> Result<Corpus> {
    config.check_corpus()?;
    let corpus = Corpus::read_jsonl(&config.corpus)?;
    info!("read {} recipes from {}", corpus.len(), config.corpus.display());
    Ok(corpus)
}

fn split(config: &PipelineConfig, subcommand: &str) -> Result<(Corpus, Corpus)> {
    let cutoff = config.require_cutoff(subcommand)?;
    let corpus = load_corpus(config)?;
    let (train, test) = corpus.split_by_date(cutoff);
    info!("split at {cutoff}: {} train, {} test", train.len(), test.len());
    Ok((train, test))
}

fn save_table(path: &std::path::Path, table: &EmbeddingTable) -> Result<()> {
    write_atomic(path, |w| write_vectors(table, w))?;
    info!("wrote {} ({} tokens, dimension {})", path.display(), table.len(), table.dim());
    Ok(())
}

fn save_pairs(path: &std::path::Path, extraction: &Extraction) -> Result<()> {
    for id in &extraction.skipped {
        warn!("test recipe {id} has no usable tokens; skipped");
    }
    write_atomic(path, |w| write_pairs(&extraction.pairs, w))?;
    info!("wrote {} candidate pairs to {}", extraction.pairs.len(), path.display());
    Ok(())
}

pub fn train_embeddings(config: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&config.output_dir);
    if let EmbeddingSource::LoadVectors(path) = &config.embedding_source {
        if !path.is_file() {
            return Err(CliError::Config(format!("field `vectors`: {} does not exist", path.display())));
        }
    }
    let corpus = load_corpus(config)?;
    let g = config.granularity;
    let (table, source, external) = match &config.embedding_source {
        EmbeddingSource::TrainSgns => {
            let docs: Vec<_> = corpus
                .recipes()
                .iter()
                .map(|r| tokenize_instructions(r, g, &config.normalization))
                .collect();
            info!("training {g} embeddings on {} documents", docs.len());
            (train_sgns(&docs, &config.sgns)?, "train-sgns".to_string(), false)
        }
        EmbeddingSource::LoadVectors(path) => {
            let table = gram_mover::embed::load_vectors(path)?;
            (table, format!("load-vectors {}", path.display()), true)
        }
    };
    info!("training ingredient embeddings");
    let ingredients = train_ingredient_table(corpus.recipes(), &config.sgns)?;

    save_table(&layout.embeddings(g), &table)?;
    save_table(&layout.ingredients(), &ingredients)?;
    let manifest = Manifest {
        granularity: g.to_string(),
        method: Method::for_embedding(g, external),
        source,
        vocabulary: table.len(),
        dimension: table.dim(),
    };
    write_atomic(&layout.manifest(g), |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        w.write_all(b"\n")
    })
}

pub fn build_index(config: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&config.output_dir);
    let g = config.granularity;
    require(&layout.embeddings(g), "train-embeddings")?;
    require(&layout.manifest(g), "train-embeddings")?;
    let (train, _) = split(config, "build-index")?;
    let manifest = read_manifest(&layout.manifest(g))?;
    let table = load_table(&layout.embeddings(g), "train-embeddings")?;
    let options = MoverOptions {
        metric: config.metric,
        normalization: config.normalization,
        pruning: config.pruning,
    };
    let retriever = MoverRetriever::new(&train, &table, manifest.method, options)?;
    let path = layout.index(g);
    write_atomic(&path, |w| {
        artifacts::write_index(w, retriever.index(), manifest.method, config.normalization, retriever.skipped())
    })?;
    info!("indexed {} training recipes into {}", retriever.index().len(), path.display());
    Ok(())
}

pub fn extract(config: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&config.output_dir);
    let g = config.granularity;
    require(&layout.embeddings(g), "train-embeddings")?;
    require(&layout.manifest(g), "train-embeddings")?;
    require(&layout.ingredients(), "train-embeddings")?;
    let index_path = layout.index(g);
    require(&index_path, "build-index")?;

    let (train, test) = split(config, "extract-candidates")?;
    let table = load_table(&layout.embeddings(g), "train-embeddings")?;
    let ingredient_table = load_table(&layout.ingredients(), "train-embeddings")?;
    let stored = read_index(&index_path)?;
    if stored.granularity != g {
        return Err(CliError::Stale(format!(
            "{} holds a {} index, not {g}; rerun `build-index`",
            index_path.display(),
            stored.granularity
        )));
    }
    let options = MoverOptions {
        metric: stored.metric,
        normalization: stored.normalization,
        pruning: config.pruning,
    };
    let index = stored.attach(&table, &index_path)?;
    let retriever = MoverRetriever::from_index(&train, index, stored.skipped.clone(), stored.method, options)?;
    let extraction = run_extraction(&test, &train, &retriever, &ingredient_table, config)?;
    save_pairs(&layout.candidates(stored.method), &extraction)
}

pub fn baseline(config: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&config.output_dir);
    require(&layout.ingredients(), "train-embeddings")?;
    let (train, test) = split(config, "baseline")?;
    let ingredient_table = load_table(&layout.ingredients(), "train-embeddings")?;
    let retriever = TfidfRetriever::new(&train, config.granularity, config.normalization);
    let extraction = run_extraction(&test, &train, &retriever, &ingredient_table, config)?;
    save_pairs(&layout.candidates(Method::TfidfBaseline), &extraction)
}

fn run_extraction(
    test: &Corpus,
    train: &Corpus,
    retriever: &dyn Retriever,
    ingredient_table: &EmbeddingTable,
    config: &PipelineConfig,
) -> Result<Extraction> {
    info!(
        "retrieving top {} for {} test recipes with {}",
        config.k,
        test.len(),
        retriever.method()
    );
    Ok(extract_candidates(
        test,
        train,
        retriever,
        ingredient_table,
        config.k,
        config.threshold,
    )?)
}

/// Every candidate file present, in method order, with gold labels applied.
fn labeled_runs(config: &PipelineConfig) -> Result<Vec<(Method, Vec<CandidatePair>)>> {
    let layout = Layout::new(&config.output_dir);
    let gold = match &config.gold {
        Some(path) if !path.is_file() => {
            return Err(CliError::Config(format!("field `gold`: {} does not exist", path.display())));
        }
        Some(path) => Some(path.clone()),
        None => Some(layout.gold()).filter(|p| p.is_file()),
    };
    let gold = match gold {
        Some(path) => {
            let labels = GoldLabels::read(artifacts::open(&path)?)?;
            info!("read {} gold labels from {}", labels.len(), path.display());
            labels
        }
        None => {
            info!("no gold file; using the labels stored with the candidates");
            GoldLabels::default()
        }
    };

    let mut runs = Vec::new();
    for method in Method::ALL {
        let path = layout.candidates(method);
        if !path.is_file() {
            continue;
        }
        let mut pairs = read_pairs(artifacts::open(&path)?)?;
        gold.apply(&mut pairs, config.unlisted_as);
        runs.push((method, pairs));
    }
    if runs.is_empty() {
        return Err(CliError::Missing {
            path: layout.candidates(Method::for_embedding(config.granularity, false)),
            producer: "extract-candidates",
        });
    }
    Ok(runs)
}

pub fn report(config: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&config.output_dir);
    let report = compare_methods(&labeled_runs(config)?);
    let text = report.to_text();
    let json = report.to_json();
    write_atomic(&layout.report("txt"), |w| w.write_all(text.as_bytes()))?;
    write_atomic(&layout.report("json"), |w| {
        w.write_all(json.as_bytes())?;
        w.write_all(b"\n")
    })?;
    info!("wrote {} and {}", layout.report("txt").display(), layout.report("json").display());
    Ok(())
}

pub fn classify(config: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&config.output_dir);
    let mut rows = Vec::new();
    for (method, pairs) in labeled_runs(config)? {
        let examples: Vec<LabeledExample> = pairs.iter().filter_map(LabeledExample::from_pair).collect();
        let positives = examples.iter().filter(|e| e.positive).count();
        if positives == 0 || positives == examples.len() {
            warn!(
                "{method}: {} annotated pairs, {positives} positive; needs both classes, skipped",
                examples.len()
            );
            continue;
        }
        let balanced = undersample(&examples, config.seed)?;
        info!("{method}: {} examples after undersampling {}", balanced.len(), examples.len());
        for kind in [ModelKind::LogisticRegression, ModelKind::RandomForest] {
            let result = loocv_grid_search(&balanced, &default_grid(kind), config.seed)?;
            rows.push(ResultRow {
                method: method.to_string(),
                classifier: kind,
                result,
            });
        }
    }
    if rows.is_empty() {
        return Err(gram_mover::Error::Invalid(
            "no candidate file has both near-duplicate and non-duplicate annotations".into(),
        )
        .into());
    }
    let table = metrics_table(&rows);
    write_atomic(&layout.classification("txt"), |w| w.write_all(table.as_bytes()))?;
    write_atomic(&layout.classification("json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &rows)?;
        w.write_all(b"\n")
    })?;
    info!("wrote {}", layout.classification("txt").display());
    Ok(())
}

pub fn synth_corpus(config: &PipelineConfig) -> Result<()> {
    let layout = Layout::new(&config.output_dir);
    let generated = synth::generate(&config.synth)?;
    write_atomic(&config.corpus, |w| generated.corpus.write_jsonl(w))?;
    let gold_path = config.gold.clone().unwrap_or_else(|| layout.gold());
    write_atomic(&gold_path, |w| generated.gold().write(w))?;
    info!(
        "wrote {} recipes to {} and {} planted pairs to {}; split with cutoff = {}",
        generated.corpus.len(),
        config.corpus.display(),
        generated.planted.len(),
        gold_path.display(),
        generated.cutoff
    );
    Ok(())
}
