use std::collections::HashMap;

use crate::tokenize::TokenSeq;

/// Sparse tf-idf vectors over a fixed document collection, with postings for
/// retrieval. Weights are `tf * ln(N / df)`.
#[derive(Debug, Clone)]
pub struct TfidfIndex {
    terms: HashMap<String, u32>,
    idf: Vec<f64>,
    docs: Vec<SparseVector>,
    postings: Vec<Vec<(u32, f64)>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    /// Sorted by term id.
    pub entries: Vec<(u32, f64)>,
    pub norm: f64,
}

impl SparseVector {
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.entries.len() && j < other.entries.len() {
            let (a, b) = (self.entries[i], other.entries[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a.1 * b.1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn cosine(&self, other: &SparseVector) -> f64 {
        if self.norm == 0.0 || other.norm == 0.0 {
            return 0.0;
        }
        (self.dot(other) / (self.norm * other.norm)).clamp(0.0, 1.0)
    }
}

impl TfidfIndex {
    pub fn build(docs: &[TokenSeq]) -> Self {
        let mut terms: HashMap<String, u32> = HashMap::new();
        let mut df: Vec<u64> = Vec::new();
        let mut counted: Vec<HashMap<u32, u64>> = Vec::with_capacity(docs.len());
        for doc in docs {
            let mut tf: HashMap<u32, u64> = HashMap::new();
            for t in &doc.tokens {
                let next = terms.len() as u32;
                let id = *terms.entry(t.clone()).or_insert(next);
                if id == next {
                    df.push(0);
                }
                *tf.entry(id).or_default() += 1;
            }
            for &id in tf.keys() {
                df[id as usize] += 1;
            }
            counted.push(tf);
        }
        let n = docs.len() as f64;
        let idf: Vec<f64> = df.iter().map(|&d| (n / d as f64).ln()).collect();
        let mut index = TfidfIndex {
            terms,
            idf,
            docs: Vec::with_capacity(docs.len()),
            postings: vec![Vec::new(); df.len()],
        };
        for (pos, tf) in counted.into_iter().enumerate() {
            let v = index.weigh(tf);
            for &(t, w) in &v.entries {
                index.postings[t as usize].push((pos as u32, w));
            }
            index.docs.push(v);
        }
        index
    }

    fn weigh(&self, tf: HashMap<u32, u64>) -> SparseVector {
        let mut entries: Vec<(u32, f64)> = tf
            .into_iter()
            .map(|(t, c)| (t, c as f64 * self.idf[t as usize]))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        entries.sort_by_key(|e| e.0);
        let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        SparseVector { entries, norm }
    }

    /// Weights a token sequence against the collection statistics; unseen
    /// terms carry no weight.
    pub fn vectorize(&self, doc: &TokenSeq) -> SparseVector {
        let mut tf: HashMap<u32, u64> = HashMap::new();
        for t in &doc.tokens {
            if let Some(&id) = self.terms.get(t) {
                *tf.entry(id).or_default() += 1;
            }
        }
        self.weigh(tf)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn doc(&self, position: usize) -> &SparseVector {
        &self.docs[position]
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.terms.get(term).map(|&t| self.idf[t as usize])
    }

    /// Cosine similarity of `query` against every indexed document.
    pub fn similarities(&self, query: &SparseVector) -> Vec<f64> {
        let mut dots = vec![0.0; self.docs.len()];
        for &(t, w) in &query.entries {
            for &(d, dw) in &self.postings[t as usize] {
                dots[d as usize] += w * dw;
            }
        }
        if query.norm == 0.0 {
            return vec![0.0; self.docs.len()];
        }
        dots.iter()
            .zip(&self.docs)
            .map(|(dot, d)| {
                if d.norm == 0.0 {
                    0.0
                } else {
                    (dot / (query.norm * d.norm)).clamp(0.0, 1.0)
                }
            })
            .collect()
    }
}

/// Cosine similarity of two token sequences under the index's weights.
pub fn tfidf_cosine(a: &TokenSeq, b: &TokenSeq, index: &TfidfIndex) -> f64 {
    index.vectorize(a).cosine(&index.vectorize(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::Granularity;

    fn seq(tokens: &[&str]) -> TokenSeq {
        TokenSeq {
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            granularity: Granularity::Word,
        }
    }

    #[test]
    fn self_and_disjoint() {
        let docs = [seq(&["a", "b"]), seq(&["c", "d"]), seq(&["e"])];
        let index = TfidfIndex::build(&docs);
        assert!((tfidf_cosine(&docs[0], &docs[0], &index) - 1.0).abs() < 1e-12);
        assert_eq!(tfidf_cosine(&docs[0], &docs[1], &index), 0.0);
    }

    #[test]
    fn hand_computed_shared_token() {
        let docs = [seq(&["x", "y"]), seq(&["x", "z"]), seq(&["w", "v"])];
        let index = TfidfIndex::build(&docs);
        let shared = (3.0f64 / 2.0).ln();
        let own = 3.0f64.ln();
        assert!((index.idf("x").unwrap() - shared).abs() < 1e-15);
        let expected = shared * shared / (shared * shared + own * own);
        assert!((tfidf_cosine(&docs[0], &docs[1], &index) - expected).abs() < 1e-12);
    }

    #[test]
    fn postings_agree_with_direct_cosine() {
        let docs = [seq(&["a", "b", "b"]), seq(&["b", "c"]), seq(&["c", "a", "d"]), seq(&["e"])];
        let index = TfidfIndex::build(&docs);
        let q = index.vectorize(&seq(&["b", "d", "zz"]));
        let sims = index.similarities(&q);
        for (p, s) in sims.iter().enumerate() {
            assert!((s - q.cosine(index.doc(p))).abs() < 1e-12);
        }
    }

    #[test]
    fn term_in_every_document_has_no_weight() {
        let docs = [seq(&["a", "b"]), seq(&["a"])];
        let index = TfidfIndex::build(&docs);
        assert_eq!(index.doc(1).norm, 0.0);
        assert_eq!(tfidf_cosine(&docs[1], &docs[0], &index), 0.0);
    }
}
