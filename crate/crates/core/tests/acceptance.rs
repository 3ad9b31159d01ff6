//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Each criterion also has a wall-clock budget.

mod common;

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{brute_force_emd, dirichlet, histogram, random_table, rng, uniform_costs};
use gram_mover::classify::{
    default_grid, f1_score, logreg_objective, loocv_grid_search, undersample, LabeledExample, ModelKind,
};
use gram_mover::corpus::Corpus;
use gram_mover::embed::{train_sgns, EmbeddingTable, SgnsConfig, Vocab};
use gram_mover::ingredients::{ingredients_distance, train_ingredient_table};
use gram_mover::mover::{cost_matrix, emd_exact, mover_distance, rwmd, wcd, GramHistogram, Metric, MoverIndex};
use gram_mover::pipeline::{extract_candidates, Method, MoverOptions, MoverRetriever};
use gram_mover::synth::{self, SynthConfig};
use gram_mover::textnorm::NormalizationConfig;
use gram_mover::tokenize::{char_ngrams, tokenize_instructions, Granularity, TokenSeq};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn transport_oracle() -> Outcome {
    let mut r = rng(1001);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let (m, n) = (r.random_range(1..=4), r.random_range(1..=4));
        let a = histogram(dirichlet(&mut r, m), 0);
        let b = histogram(dirichlet(&mut r, n), 0);
        let cost = uniform_costs(&mut r, m, n);
        let data: Vec<f64> = (0..m).flat_map(|i| cost.row(i).to_vec()).collect();
        let (d, _) = emd_exact(&a, &b, &cost).map_err(|e| e.to_string())?;
        let oracle = brute_force_emd(a.weights(), b.weights(), &data);
        let gap = (d - oracle).abs();
        worst = worst.max(gap);
        ensure(gap <= 1e-9, || format!("case {case}: solver {d} vs enumeration {oracle}"))?;
    }
    Ok(format!("200 instances, max gap {worst:.2e}"))
}

fn random_hist(r: &mut impl Rng, vocab: usize) -> GramHistogram {
    let len = r.random_range(1..=12);
    let mut support: Vec<u32> = rand::seq::index::sample(r, vocab, len).into_iter().map(|i| i as u32).collect();
    support.sort_unstable();
    GramHistogram::new(support, dirichlet(r, len), Granularity::Word).expect("valid histogram")
}

fn lower_bound_chain() -> Outcome {
    let mut r = rng(1002);
    let table = random_table(&mut r, 200, 16);
    let mut tightest = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for case in 0..1000 {
        let (a, b) = (random_hist(&mut r, 200), random_hist(&mut r, 200));
        let cost = cost_matrix(&a, &b, &table, Metric::Cosine);
        let exact = emd_exact(&a, &b, &cost).map_err(|e| e.to_string())?.0;
        let relaxed = rwmd(&a, &b, &cost);
        tightest.0 = tightest.0.max(relaxed - exact);
        ensure(relaxed <= exact + 1e-9, || format!("case {case}: rwmd {relaxed} > emd {exact}"))?;

        let cost = cost_matrix(&a, &b, &table, Metric::Euclidean);
        let exact = emd_exact(&a, &b, &cost).map_err(|e| e.to_string())?.0;
        let relaxed = rwmd(&a, &b, &cost);
        let centroid = wcd(&a, &b, &table, Metric::Euclidean).map_err(|e| e.to_string())?;
        tightest.1 = tightest.1.max(centroid - exact);
        ensure(relaxed <= exact + 1e-9, || format!("case {case}: euclidean rwmd {relaxed} > emd {exact}"))?;
        ensure(centroid <= exact + 1e-9, || format!("case {case}: wcd {centroid} > emd {exact}"))?;
    }
    Ok(format!(
        "1000 instances, max(rwmd - emd) {:.2e}, max(wcd - emd) {:.2e}",
        tightest.0, tightest.1
    ))
}

/// Documents drawn from one of several topics; each topic owns a cluster of
/// nearby token vectors.
fn topical_corpus(docs: usize, queries: usize) -> (EmbeddingTable, Vec<TokenSeq>, Vec<TokenSeq>) {
    let mut r = rng(1003);
    let (topics, per_topic, dim) = (10, 40, 16);
    let normal = Normal::new(0.0, 0.35).expect("valid normal");
    let mut data = Vec::with_capacity(topics * per_topic * dim);
    for _ in 0..topics {
        let center: Vec<f32> = (0..dim).map(|_| r.random_range(-1.0f32..1.0)).collect();
        for _ in 0..per_topic {
            data.extend(center.iter().map(|c| c + normal.sample(&mut r) as f32));
        }
    }
    let vocab = Vocab::from_tokens((0..topics * per_topic).map(|i| format!("w{i}")).collect()).expect("vocab");
    let table = EmbeddingTable::new(vocab, dim, data).expect("table");
    let doc = |r: &mut rand_chacha::ChaCha8Rng| {
        let topic = r.random_range(0..topics);
        let len = r.random_range(5..=20);
        TokenSeq {
            tokens: (0..len)
                .map(|_| format!("w{}", topic * per_topic + r.random_range(0..per_topic)))
                .collect(),
            granularity: Granularity::Word,
        }
    };
    let corpus = (0..docs).map(|_| doc(&mut r)).collect();
    let qs = (0..queries).map(|_| doc(&mut r)).collect();
    (table, corpus, qs)
}

fn pruned_search() -> Outcome {
    let (table, docs, queries) = topical_corpus(500, 50);
    let ids: Vec<String> = (0..docs.len()).map(|i| format!("d{i:03}")).collect();
    let (index, skipped) = MoverIndex::build(&table, Metric::Cosine, ids.iter().map(String::as_str).zip(&docs));
    ensure(skipped.is_empty(), || "unembeddable documents in corpus".into())?;
    let (mut pruned_evals, mut full_evals) = (0usize, 0usize);
    for (qi, q) in queries.iter().enumerate() {
        let full = index.topk_tokens(q, 10, false).map_err(|e| e.to_string())?;
        let pruned = index.topk_tokens(q, 10, true).map_err(|e| e.to_string())?;
        ensure(full.hits == pruned.hits, || format!("query {qi}: rankings differ"))?;
        pruned_evals += pruned.exact_evaluations;
        full_evals += full.exact_evaluations;
    }
    let ratio = pruned_evals as f64 / full_evals as f64;
    ensure(ratio <= 0.6, || format!("pruning evaluated {:.1}% of exact distances", 100.0 * ratio))?;
    Ok(format!("identical rankings, {:.1}% exact evaluations", 100.0 * ratio))
}

fn f1_arithmetic() -> Outcome {
    for (p, r, expected) in [(0.74, 0.89, "0.81"), (0.83, 0.97, "0.89")] {
        let f1 = format!("{:.2}", f1_score(p, r));
        ensure(f1 == expected, || format!("P={p} R={r}: F1 {f1}, expected {expected}"))?;
    }
    Ok("0.81 and 0.89 reproduced".into())
}

fn sgns(dimension: usize, window: usize, epochs: usize, min_count: u64) -> SgnsConfig {
    SgnsConfig {
        dimension,
        window,
        epochs,
        min_count,
        ..SgnsConfig::default()
    }
}

fn recall(found: &HashSet<(String, String)>, planted: &[&synth::PlantedPair]) -> f64 {
    let hit = planted
        .iter()
        .filter(|p| found.contains(&(p.duplicate_id.clone(), p.original_id.clone())))
        .count();
    hit as f64 / planted.len().max(1) as f64
}

fn planted_recall() -> Outcome {
    let s = synth::generate(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let (train, test) = s.corpus.split_by_date(s.cutoff);
    let config = sgns(50, 5, 5, SgnsConfig::default().min_count);
    let norm = NormalizationConfig::INSTRUCTIONS;

    let ingredient_table = train_ingredient_table(s.corpus.recipes(), &config).map_err(|e| e.to_string())?;
    let mut found = Vec::new();
    for granularity in [Granularity::GRAM3, Granularity::Word] {
        let docs: Vec<TokenSeq> = s
            .corpus
            .recipes()
            .iter()
            .map(|r| tokenize_instructions(r, granularity, &norm))
            .collect();
        let table = train_sgns(&docs, &config).map_err(|e| e.to_string())?;
        found.push(extract_with(&train, &test, &table, &ingredient_table, granularity)?);
    }
    let all: Vec<_> = s.planted.iter().collect();
    let typo: Vec<_> = s.planted.iter().filter(|p| p.typos > 0).collect();
    let (gram_all, gram_typo) = (recall(&found[0], &all), recall(&found[0], &typo));
    let (word_all, word_typo) = (recall(&found[1], &all), recall(&found[1], &typo));
    let detail = format!(
        "gram3 recall {:.1}% ({:.1}% on {} typo pairs), word recall {:.1}% ({:.1}% on typo pairs)",
        100.0 * gram_all,
        100.0 * gram_typo,
        typo.len(),
        100.0 * word_all,
        100.0 * word_typo
    );
    ensure(gram_all >= 0.9 && gram_typo >= word_typo, || detail.clone())?;
    Ok(detail)
}

fn extract_with(
    train: &Corpus,
    test: &Corpus,
    table: &EmbeddingTable,
    ingredient_table: &EmbeddingTable,
    granularity: Granularity,
) -> Result<HashSet<(String, String)>, String> {
    let method = Method::for_embedding(granularity, false);
    let retriever = MoverRetriever::new(train, table, method, MoverOptions::default()).map_err(|e| e.to_string())?;
    let out = extract_candidates(test, train, &retriever, ingredient_table, 10, 2).map_err(|e| e.to_string())?;
    Ok(out
        .pairs
        .into_iter()
        .map(|p| (p.query_id, p.candidate_id))
        .collect())
}

fn identity_symmetry() -> Outcome {
    let mut r = rng(1006);
    let alphabet: Vec<char> = "abcdefghにんじんたまねぎ ".chars().collect();
    let text = |r: &mut rand_chacha::ChaCha8Rng| -> String {
        let len = r.random_range(3..40);
        (0..len).map(|_| *alphabet.choose(r).expect("alphabet")).collect()
    };
    let docs: Vec<TokenSeq> = (0..200).map(|_| char_ngrams(&text(&mut r), 3)).collect();
    let mut grams: Vec<String> = docs.iter().flat_map(|d| d.tokens.clone()).collect();
    grams.sort();
    grams.dedup();
    let dim = 12;
    let data = (0..grams.len() * dim).map(|_| r.random_range(-1.0f32..1.0)).collect();
    let table = EmbeddingTable::new(Vocab::from_tokens(grams).expect("vocab"), dim, data).expect("table");
    let mut worst: f64 = 0.0;
    for (i, pair) in docs.chunks_exact(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        for metric in [Metric::Cosine, Metric::Euclidean] {
            let aa = mover_distance(a, a, &table, metric).map_err(|e| e.to_string())?;
            ensure(aa == 0.0, || format!("pair {i}: d(a,a) = {aa:e}"))?;
            let ab = mover_distance(a, b, &table, metric).map_err(|e| e.to_string())?;
            let ba = mover_distance(b, a, &table, metric).map_err(|e| e.to_string())?;
            worst = worst.max((ab - ba).abs());
            ensure((ab - ba).abs() < 1e-9, || format!("pair {i}: {ab} vs {ba}"))?;
        }
    }
    Ok(format!("100 pairs, max asymmetry {worst:.2e}"))
}

fn ingredient_table() -> EmbeddingTable {
    let rows: [(&str, [f32; 3]); 8] = [
        ("ジャガイモ", [1.0, 0.05, 0.0]),
        ("馬鈴薯", [1.0, 0.0, 0.0]),
        ("ネギ", [0.0, 1.0, 0.0]),
        ("長ネギ", [0.05, 1.0, 0.0]),
        ("豚肉", [0.0, 0.0, 1.0]),
        ("牛肉", [0.0, 0.1, 1.0]),
        ("鶏肉", [0.1, 0.0, 1.0]),
        ("砂糖", [-1.0, -1.0, -1.0]),
    ];
    let vocab = Vocab::from_tokens(rows.iter().map(|r| r.0.to_string()).collect()).expect("vocab");
    EmbeddingTable::new(vocab, 3, rows.iter().flat_map(|r| r.1).collect()).expect("table")
}

fn ingredient_cases() -> Outcome {
    let t = ingredient_table();
    let cases: [(&[&str], &[&str], usize); 12] = [
        (&["ニンジン", "塩"], &["ニンジン", "塩"], 0),
        (&["ニンジン", "塩"], &["ニンジン"], 1),
        (&["ジャガイモ"], &["馬鈴薯"], 0),
        (&[], &[], 0),
        (&[], &["塩", "胡椒"], 2),
        (&["塩", "胡椒", "酢"], &[], 3),
        (&["にんじん（中）", "塩!", "（飾り用）"], &["ニンジン", "塩"], 0),
        (&["塩", "塩"], &["塩"], 1),
        // 長ネギ finds ネギ; 鶏肉's top three (牛肉, 豚肉, ...) include 豚肉.
        (&["ネギ", "豚肉", "砂糖"], &["長ネギ", "鶏肉"], 1),
        // 砂糖's top three include 馬鈴薯 but not the other way round.
        (&["馬鈴薯"], &["砂糖"], 0),
        (&["砂糖"], &["馬鈴薯"], 2),
        // Both originals are neighbours of 牛肉; the earlier one is consumed.
        (&["鶏肉", "豚肉", "ネギ"], &["牛肉", "ネギ"], 1),
    ];
    for (i, (a, b, expected)) in cases.iter().enumerate() {
        let got = ingredients_distance(a, b, &t);
        ensure(got == *expected, || format!("case {}: {a:?} vs {b:?} gave {got}, expected {expected}", i + 1))?;
    }
    Ok("12 cases match".into())
}

fn classifier_pool() -> Vec<LabeledExample> {
    let mut r = rng(1008);
    let noise = Normal::new(0.0, 0.08).expect("valid normal");
    let mut examples = Vec::new();
    for _ in 0..50 {
        examples.push(LabeledExample::new(
            0.1 + noise.sample(&mut r),
            (0.5 + 2.0 * noise.sample(&mut r)).max(0.0),
            true,
        ));
    }
    for _ in 0..1000 {
        examples.push(LabeledExample::new(
            r.random_range(0.25..0.9) + noise.sample(&mut r),
            (r.random_range(0.0..2.5f64) + 2.0 * noise.sample(&mut r)).max(0.0),
            false,
        ));
    }
    examples
}

fn classifier_sanity() -> Outcome {
    let balanced = undersample(&classifier_pool(), 11).map_err(|e| e.to_string())?;
    let mut detail = Vec::new();
    for kind in [ModelKind::LogisticRegression, ModelKind::RandomForest] {
        let result = loocv_grid_search(&balanced, &default_grid(kind), 5).map_err(|e| e.to_string())?;
        let f1 = result.metrics.f1;
        detail.push(format!("{kind} F1 {f1:.3} at {}", result.best));
        ensure(f1 >= 0.8, || detail.join("; "))?;
    }
    Ok(detail.join("; "))
}

fn gradient_check() -> Outcome {
    let mut r = rng(1009);
    let xs: Vec<[f64; 2]> = (0..60).map(|_| [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)]).collect();
    let ys: Vec<bool> = (0..60).map(|_| r.random()).collect();
    let mut worst: f64 = 0.0;
    for point in 0..50 {
        let p = [r.random_range(-3.0..3.0), r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)];
        let lambda = r.random_range(0.0..10.0);
        let (_, g) = logreg_objective(&p, &xs, &ys, lambda);
        let h = 1e-5;
        let fd: Vec<f64> = (0..3)
            .map(|k| {
                let (mut up, mut down) = (p, p);
                up[k] += h;
                down[k] -= h;
                (logreg_objective(&up, &xs, &ys, lambda).0 - logreg_objective(&down, &xs, &ys, lambda).0) / (2.0 * h)
            })
            .collect();
        let diff = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = g.iter().map(|a| a * a).sum::<f64>().sqrt().max(fd.iter().map(|a| a * a).sum::<f64>().sqrt());
        let rel = diff / scale.max(1e-12);
        worst = worst.max(rel);
        ensure(rel < 1e-6, || format!("point {point}: relative error {rel:e}"))?;
    }
    Ok(format!("50 points, max relative error {worst:.2e}"))
}

fn embedding_sanity() -> Outcome {
    let mut r = rng(1010);
    let words = 30;
    let docs: Vec<TokenSeq> = (0..1000)
        .map(|i| {
            let topic = if i % 2 == 0 { "a" } else { "b" };
            TokenSeq {
                tokens: (0..20).map(|_| format!("{topic}{}", r.random_range(0..words))).collect(),
                granularity: Granularity::Word,
            }
        })
        .collect();
    // With only 60 equally frequent words, frequent-word subsampling would
    // discard most of the corpus; it exists for Zipfian vocabularies.
    let config = SgnsConfig {
        subsample_threshold: 0.0,
        ..sgns(50, 5, 5, 1)
    };
    let table = train_sgns(&docs, &config).map_err(|e| e.to_string())?;
    let (mut intra, mut inter) = ((0.0, 0usize), (0.0, 0usize));
    for x in 0..table.len() as u32 {
        for y in (x + 1)..table.len() as u32 {
            let sim = 1.0 - table.cosine_distance_idx(x, y);
            let same = table.vocab().token(x).as_bytes()[0] == table.vocab().token(y).as_bytes()[0];
            let acc = if same { &mut intra } else { &mut inter };
            acc.0 += sim;
            acc.1 += 1;
        }
    }
    let gap = intra.0 / intra.1 as f64 - inter.0 / inter.1 as f64;
    ensure(gap >= 0.2, || format!("similarity gap {gap:.3}"))?;
    Ok(format!("intra - inter similarity {gap:.3}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("transport oracle equivalence", Duration::from_secs(10), transport_oracle),
        ("lower-bound chain", Duration::from_secs(30), lower_bound_chain),
        ("pruned-search exactness", Duration::from_secs(120), pruned_search),
        ("F1 formula against reference rows", Duration::from_secs(1), f1_arithmetic),
        ("planted near-duplicate recall", Duration::from_secs(600), planted_recall),
        ("identity and symmetry", Duration::from_secs(10), identity_symmetry),
        ("ingredients-distance table", Duration::from_secs(1), ingredient_cases),
        ("classifier sanity", Duration::from_secs(120), classifier_sanity),
        ("logistic gradient check", Duration::from_secs(1), gradient_check),
        ("embedding topic separation", Duration::from_secs(120), embedding_sanity),
    ];
    let only: Option<usize> = std::env::args().filter_map(|a| a.parse().ok()).next();
    let mut failures = 0;
    for (n, (name, budget, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != n + 1) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if elapsed <= *budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget of {budget:?}")),
            Err(d) => (false, d),
        };
        failures += usize::from(!ok);
        println!(
            "{} [{:>2}] {name}: {detail} ({:.2}s)",
            if ok { "PASS" } else { "FAIL" },
            n + 1,
            elapsed.as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
