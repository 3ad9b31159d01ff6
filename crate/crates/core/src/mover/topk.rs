use std::cmp::Ordering;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;

use super::{centroid_distance, cost_matrix, emd_exact, nbow, rwmd, GramHistogram, Metric};
use crate::embed::EmbeddingTable;
use crate::exec;
use crate::tokenize::TokenSeq;
use crate::Result;

/// A lower bound must exceed the running k-th best by this much before the
/// exact solve is skipped, absorbing rounding in bound and solver alike.
const PRUNE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct IndexedDoc {
    pub id: String,
    pub hist: GramHistogram,
    centroid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub id: String,
    /// Position of the document in the index.
    pub position: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopK {
    /// Ascending by distance, ties by id.
    pub hits: Vec<Hit>,
    /// Number of exact transport problems solved.
    pub exact_evaluations: usize,
}

/// Prepared histograms searched by exact mover's distance.
pub struct MoverIndex<'t> {
    table: &'t EmbeddingTable,
    metric: Metric,
    docs: Vec<IndexedDoc>,
}

fn rank(a: (f64, &str), b: (f64, &str)) -> Ordering {
    a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1))
}

impl<'t> MoverIndex<'t> {
    pub fn new(table: &'t EmbeddingTable, metric: Metric) -> Self {
        MoverIndex {
            table,
            metric,
            docs: Vec::new(),
        }
    }

    /// Indexes every embeddable document and returns the ids of the rest.
    pub fn build<'a, I>(table: &'t EmbeddingTable, metric: Metric, docs: I) -> (Self, Vec<String>)
    where
        I: IntoIterator<Item = (&'a str, &'a TokenSeq)>,
    {
        let mut index = MoverIndex::new(table, metric);
        let mut skipped = Vec::new();
        for (id, tokens) in docs {
            match nbow(tokens, table) {
                Ok(hist) => index.push(id, hist),
                Err(_) => skipped.push(id.to_string()),
            }
        }
        (index, skipped)
    }

    pub fn push(&mut self, id: impl Into<String>, hist: GramHistogram) {
        let centroid = (self.metric == Metric::Euclidean).then(|| hist.centroid(self.table));
        self.docs.push(IndexedDoc {
            id: id.into(),
            hist,
            centroid,
        });
    }

    pub fn docs(&self) -> &[IndexedDoc] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn table(&self) -> &'t EmbeddingTable {
        self.table
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn distance_to(&self, query: &GramHistogram, position: usize) -> Result<f64> {
        let doc = &self.docs[position].hist;
        let cost = cost_matrix(query, doc, self.table, self.metric);
        emd_exact(query, doc, &cost).map(|(d, _)| d)
    }

    fn lower_bound(&self, query: &GramHistogram, query_centroid: Option<&[f64]>, position: usize) -> f64 {
        let doc = &self.docs[position];
        let cost = cost_matrix(query, &doc.hist, self.table, self.metric);
        let relaxed = rwmd(query, &doc.hist, &cost);
        match (query_centroid, &doc.centroid) {
            (Some(q), Some(c)) => relaxed.max(centroid_distance(q, c)),
            _ => relaxed,
        }
    }

    pub fn topk_tokens(&self, query: &TokenSeq, k: usize, pruning: bool) -> Result<TopK> {
        let hist = nbow(query, self.table)?;
        self.topk_query(&hist, k, pruning)
    }

    /// The `k` nearest indexed documents by exact mover's distance.
    ///
    /// With `pruning`, candidates are visited in ascending lower-bound order
    /// (relaxed bound, plus the centroid bound under Euclidean costs) and the
    /// exact solve is skipped once a bound exceeds the current k-th best.
    /// The ranking is identical either way.
    pub fn topk_query(&self, query: &GramHistogram, k: usize, pruning: bool) -> Result<TopK> {
        assert!(k >= 1, "k must be positive");
        if !pruning {
            let distances = exec::map_range(self.docs.len(), |p| self.distance_to(query, p));
            let mut hits = distances
                .into_iter()
                .enumerate()
                .map(|(position, d)| {
                    d.map(|distance| Hit {
                        id: self.docs[position].id.clone(),
                        position,
                        distance,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            hits.sort_by(|a, b| rank((a.distance, &a.id), (b.distance, &b.id)));
            hits.truncate(k);
            return Ok(TopK {
                hits,
                exact_evaluations: self.docs.len(),
            });
        }

        let query_centroid = (self.metric == Metric::Euclidean).then(|| query.centroid(self.table));
        let bounds = exec::map_range(self.docs.len(), |p| {
            self.lower_bound(query, query_centroid.as_deref(), p)
        });
        let mut order: Vec<usize> = (0..self.docs.len()).collect();
        order.sort_by(|&x, &y| rank((bounds[x], &self.docs[x].id), (bounds[y], &self.docs[y].id)));

        let best = Mutex::new(Vec::<Hit>::with_capacity(k + 1));
        let evaluations = AtomicUsize::new(0);
        let failure = Mutex::new(None);
        let visit = |&position: &usize| {
            {
                let best = best.lock().expect("top-k lock");
                if best.len() == k && bounds[position] > best[k - 1].distance + PRUNE_SLACK {
                    return;
                }
            }
            evaluations.fetch_add(1, AtomicOrdering::Relaxed);
            let distance = match self.distance_to(query, position) {
                Ok(d) => d,
                Err(e) => {
                    failure.lock().expect("error lock").get_or_insert(e);
                    return;
                }
            };
            let id = &self.docs[position].id;
            let mut best = best.lock().expect("top-k lock");
            let at = best.partition_point(|h| rank((h.distance, &h.id), (distance, id)) == Ordering::Less);
            if at < k {
                best.insert(
                    at,
                    Hit {
                        id: id.clone(),
                        position,
                        distance,
                    },
                );
                best.truncate(k);
            }
        };

        if exec::is_parallel() {
            exec::for_each(&order, visit);
        } else {
            for position in &order {
                {
                    let best = best.lock().expect("top-k lock");
                    // Bounds are sorted, so nothing later can qualify either.
                    if best.len() == k && bounds[*position] > best[k - 1].distance + PRUNE_SLACK {
                        break;
                    }
                }
                visit(position);
            }
        }
        if let Some(e) = failure.into_inner().expect("error lock") {
            return Err(e);
        }
        Ok(TopK {
            hits: best.into_inner().expect("top-k lock"),
            exact_evaluations: evaluations.into_inner(),
        })
    }
}
