//! Sparse baseline: tokenizer, inverted index, BM25 and RM3 expansion.
//!
//! BM25 uses the Lucene-style idf `ln(1 + (N - df + 0.5) / (df + 0.5))`, which
//! stays positive for every indexed term.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::datastore::DocumentRecord;
use crate::dense::{sort_ranking, ScoredDoc};
use crate::error::{Error, Result};

/// Lowercases, splits on every non-alphanumeric character and drops empty
/// tokens. No stemming.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// [`tokenize`] plus an optional stopword filter.
#[derive(Debug, Clone, Default)]
pub struct Tokenizer {
    stopwords: HashSet<String>,
}

impl Tokenizer {
    pub fn with_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let stopwords = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        Self { stopwords }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut tokens = tokenize(text);
        if !self.stopwords.is_empty() {
            tokens.retain(|t| !self.stopwords.contains(t));
        }
        tokens
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 0.9, b: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rm3Params {
    pub fb_docs: usize,
    pub fb_terms: usize,
    pub lambda: f64,
}

impl Default for Rm3Params {
    fn default() -> Self {
        Self {
            fb_docs: 10,
            fb_terms: 10,
            lambda: 0.5,
        }
    }
}

/// Term-interned postings plus a forward index for relevance models.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    terms: Vec<String>,
    term_ids: HashMap<String, u32>,
    /// Per term: `(doc number, tf)` in ascending doc number.
    postings: Vec<Vec<(u32, u32)>>,
    doc_ids: Vec<String>,
    doc_numbers: HashMap<String, u32>,
    doc_lengths: Vec<u32>,
    /// Per doc: `(term id, tf)` in ascending term id.
    forward: Vec<Vec<(u32, u32)>>,
    avgdl: f64,
}

pub fn build_index(corpus: &[DocumentRecord]) -> Result<InvertedIndex> {
    build_index_with(corpus, &Tokenizer::default())
}

/// Indexes `title + " " + abstract` of every document.
pub fn build_index_with(corpus: &[DocumentRecord], tokenizer: &Tokenizer) -> Result<InvertedIndex> {
    let mut index = InvertedIndex {
        terms: Vec::new(),
        term_ids: HashMap::new(),
        postings: Vec::new(),
        doc_ids: Vec::with_capacity(corpus.len()),
        doc_numbers: HashMap::with_capacity(corpus.len()),
        doc_lengths: Vec::with_capacity(corpus.len()),
        forward: Vec::with_capacity(corpus.len()),
        avgdl: 0.0,
    };
    let mut total_len = 0u64;
    for doc in corpus {
        let docno = index.doc_ids.len() as u32;
        if index.doc_numbers.insert(doc.doc_id.clone(), docno).is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate document `{}` in index input",
                doc.doc_id
            )));
        }
        index.doc_ids.push(doc.doc_id.clone());
        let text = format!("{} {}", doc.title, doc.abstract_text);
        let tokens = tokenizer.tokenize(&text);
        let mut tfs: BTreeMap<u32, u32> = BTreeMap::new();
        for tok in &tokens {
            let id = match index.term_ids.get(tok) {
                Some(&id) => id,
                None => {
                    let id = index.terms.len() as u32;
                    index.terms.push(tok.clone());
                    index.term_ids.insert(tok.clone(), id);
                    index.postings.push(Vec::new());
                    id
                }
            };
            *tfs.entry(id).or_default() += 1;
        }
        for (&term, &tf) in &tfs {
            index.postings[term as usize].push((docno, tf));
        }
        index.forward.push(tfs.into_iter().collect());
        index.doc_lengths.push(tokens.len() as u32);
        total_len += tokens.len() as u64;
    }
    if !index.doc_ids.is_empty() {
        index.avgdl = total_len as f64 / index.doc_ids.len() as f64;
    }
    Ok(index)
}

impl InvertedIndex {
    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn df(&self, term: &str) -> usize {
        self.term_ids
            .get(term)
            .map_or(0, |&id| self.postings[id as usize].len())
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<usize> {
        self.doc_numbers
            .get(doc_id)
            .map(|&n| self.doc_lengths[n as usize] as usize)
    }

    pub fn postings(&self, term: &str) -> Vec<(&str, u32)> {
        self.term_ids
            .get(term)
            .map(|&id| {
                self.postings[id as usize]
                    .iter()
                    .map(|&(d, tf)| (self.doc_ids[d as usize].as_str(), tf))
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn tf(&self, term: &str, doc_id: &str) -> u32 {
        match (self.term_ids.get(term), self.doc_numbers.get(doc_id)) {
            (Some(&t), Some(&d)) => self.tf_by_number(t, d),
            _ => 0,
        }
    }

    fn tf_by_number(&self, term: u32, docno: u32) -> u32 {
        let fwd = &self.forward[docno as usize];
        fwd.binary_search_by_key(&term, |&(t, _)| t)
            .map_or(0, |i| fwd[i].1)
    }

    /// Lucene-style idf; positive for any `df <= N`.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.num_docs() as f64;
        let df = self.df(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn docno(&self, doc_id: &str) -> Result<u32> {
        if self.doc_ids.is_empty() {
            return Err(Error::EmptyIndex);
        }
        self.doc_numbers
            .get(doc_id)
            .copied()
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))
    }

    fn term_score(&self, term: &str, docno: u32, params: Bm25Params) -> f64 {
        let Some(&t) = self.term_ids.get(term) else {
            return 0.0;
        };
        let tf = self.tf_by_number(t, docno);
        if tf == 0 {
            return 0.0;
        }
        let tf = f64::from(tf);
        let dl = f64::from(self.doc_lengths[docno as usize]);
        let norm = params.k1 * (1.0 - params.b + params.b * dl / self.avgdl);
        self.idf(term) * tf * (params.k1 + 1.0) / (tf + norm)
    }
}

/// Sum of per-term BM25 contributions; repeated query terms count again.
pub fn bm25_score(
    index: &InvertedIndex,
    query_terms: &[String],
    doc_id: &str,
    params: Bm25Params,
) -> Result<f64> {
    let docno = index.docno(doc_id)?;
    Ok(query_terms
        .iter()
        .map(|t| index.term_score(t, docno, params))
        .sum())
}

fn pool_docnos(
    index: &InvertedIndex,
    pool: &[String],
    exclude: &HashSet<String>,
) -> Result<Vec<u32>> {
    pool.iter()
        .filter(|d| !exclude.contains(*d))
        .map(|d| index.docno(d))
        .collect()
}

pub fn bm25_rank(
    index: &InvertedIndex,
    query_terms: &[String],
    pool: &[String],
    exclude: &HashSet<String>,
    params: Bm25Params,
) -> Result<Vec<ScoredDoc>> {
    let docnos = pool_docnos(index, pool, exclude)?;
    let mut ranked: Vec<ScoredDoc> = docnos
        .into_iter()
        .map(|d| ScoredDoc {
            doc_id: index.doc_ids[d as usize].clone(),
            score: query_terms
                .iter()
                .map(|t| index.term_score(t, d, params))
                .sum(),
        })
        .collect();
    sort_ranking(&mut ranked);
    Ok(ranked)
}

/// Non-negative term weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightedQuery {
    terms: BTreeMap<String, f64>,
}

impl WeightedQuery {
    /// Each token occurrence gets equal mass, so repeated terms weigh more.
    pub fn uniform(tokens: &[String]) -> Self {
        let mut terms: BTreeMap<String, f64> = BTreeMap::new();
        for t in tokens {
            *terms.entry(t.clone()).or_default() += 1.0;
        }
        let total = tokens.len() as f64;
        terms.values_mut().for_each(|w| *w /= total);
        Self { terms }
    }

    pub fn from_weights(terms: BTreeMap<String, f64>) -> Result<Self> {
        if terms.values().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("query weights must be finite and >= 0".into()));
        }
        Ok(Self { terms })
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.terms
    }

    pub fn weight(&self, term: &str) -> f64 {
        self.terms.get(term).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.terms.values().sum()
    }

    fn normalized(mut self) -> Self {
        let total = self.total();
        if total > 0.0 {
            self.terms.values_mut().for_each(|w| *w /= total);
        }
        self
    }
}

/// RM3: builds a relevance model from the pseudo-relevant documents and
/// interpolates it with the original query.
///
/// `fb_docs` carry their first-pass BM25 scores; documents are weighted by
/// the softmax of those scores and contribute `tf(t,d) / dl(d)` per term. The
/// `fb_terms` heaviest terms (ties by term) are kept and renormalized, then
/// `lambda * original + (1 - lambda) * model` is renormalized to sum 1.
/// Zero-weight terms are dropped. When every feedback document is empty the
/// original query is returned.
pub fn rm3_expand(
    index: &InvertedIndex,
    original: &WeightedQuery,
    fb_docs: &[ScoredDoc],
    fb_terms: usize,
    lambda: f64,
) -> Result<WeightedQuery> {
    if fb_docs.is_empty() {
        return Err(Error::InvalidInput("RM3 needs at least one feedback document".into()));
    }
    if fb_terms == 0 {
        return Err(Error::InvalidInput("fb_terms must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidInput(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    let max = fb_docs
        .iter()
        .map(|d| d.score)
        .fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = fb_docs.iter().map(|d| (d.score - max).exp()).collect();
    let z: f64 = exp.iter().sum();

    let mut model: BTreeMap<u32, f64> = BTreeMap::new();
    for (doc, e) in fb_docs.iter().zip(&exp) {
        let docno = index.docno(&doc.doc_id)?;
        let dl = index.doc_lengths[docno as usize];
        if dl == 0 {
            continue;
        }
        let doc_weight = e / z;
        for &(term, tf) in &index.forward[docno as usize] {
            *model.entry(term).or_default() += f64::from(tf) / f64::from(dl) * doc_weight;
        }
    }
    if model.is_empty() {
        return Ok(original.clone().normalized());
    }

    let mut ranked: Vec<(&str, f64)> = model
        .into_iter()
        .map(|(t, w)| (index.terms[t as usize].as_str(), w))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(fb_terms);
    let kept: f64 = ranked.iter().map(|(_, w)| w).sum();

    let orig = original.clone().normalized();
    let mut mixed: BTreeMap<String, f64> = orig
        .terms
        .iter()
        .map(|(t, w)| (t.clone(), lambda * w))
        .collect();
    for (term, w) in ranked {
        *mixed.entry(term.to_string()).or_default() += (1.0 - lambda) * w / kept;
    }
    mixed.retain(|_, w| *w > 0.0);
    Ok(WeightedQuery { terms: mixed }.normalized())
}

/// Scores each pool document by `sum_t weight(t) * bm25([t], d)`.
pub fn weighted_rank(
    index: &InvertedIndex,
    query: &WeightedQuery,
    pool: &[String],
    exclude: &HashSet<String>,
    params: Bm25Params,
) -> Result<Vec<ScoredDoc>> {
    let docnos = pool_docnos(index, pool, exclude)?;
    let mut ranked: Vec<ScoredDoc> = docnos
        .into_iter()
        .map(|d| ScoredDoc {
            doc_id: index.doc_ids[d as usize].clone(),
            score: query
                .terms
                .iter()
                .map(|(t, w)| w * index.term_score(t, d, params))
                .sum(),
        })
        .collect();
    sort_ranking(&mut ranked);
    Ok(ranked)
}

/// Two-pass BM25 + RM3 over a pool.
///
/// With `lambda = 1` the expanded query is the original query rescaled, so
/// the first-pass ranking is returned as is.
pub fn bm25_rm3_rank(
    index: &InvertedIndex,
    query_terms: &[String],
    pool: &[String],
    params: Bm25Params,
    rm3: Rm3Params,
) -> Result<Vec<ScoredDoc>> {
    if pool.is_empty() {
        return Err(Error::InvalidInput("pool is empty".into()));
    }
    let first = bm25_rank(index, query_terms, pool, &HashSet::new(), params)?;
    if rm3.lambda == 1.0 {
        return Ok(first);
    }
    let fb = &first[..rm3.fb_docs.min(first.len())];
    let original = WeightedQuery::uniform(query_terms);
    let expanded = rm3_expand(index, &original, fb, rm3.fb_terms, rm3.lambda)?;
    weighted_rank(index, &expanded, pool, &HashSet::new(), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(id: &str, text: &str) -> DocumentRecord {
        DocumentRecord {
            doc_id: id.into(),
            title: text.into(),
            abstract_text: String::new(),
        }
    }

    fn terms(s: &str) -> Vec<String> {
        tokenize(s)
    }

    fn ids(r: &[ScoredDoc]) -> Vec<&str> {
        r.iter().map(|d| d.doc_id.as_str()).collect()
    }

    fn pool(ids: &[&str]) -> Vec<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Heart-Failure trials"), ["heart", "failure", "trials"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("A a A"), ["a", "a", "a"]);
        assert_eq!(tokenize("COVID-19: β-blockers"), ["covid", "19", "β", "blockers"]);
    }

    #[test]
    fn stopwords_filter() {
        let t = Tokenizer::with_stopwords(["The", "of", ""]);
        assert_eq!(t.tokenize("The effect of THE drug"), ["effect", "drug"]);
    }

    #[test]
    fn index_statistics() {
        let idx = build_index(&[doc("D1", "a b"), doc("D2", "b c")]).unwrap();
        assert_eq!(idx.df("b"), 2);
        assert_eq!(idx.df("a"), 1);
        assert_eq!(idx.df("c"), 1);
        assert_eq!(idx.avgdl(), 2.0);
        assert_eq!(idx.postings("b"), [("D1", 1), ("D2", 1)]);
    }

    #[test]
    fn empty_index_cannot_score() {
        let idx = build_index(&[]).unwrap();
        assert_eq!(idx.num_docs(), 0);
        assert!(matches!(
            bm25_score(&idx, &terms("a"), "D1", Bm25Params::default()),
            Err(Error::EmptyIndex)
        ));
    }

    #[test]
    fn empty_document_has_no_postings() {
        let idx = build_index(&[doc("D1", ""), doc("D2", "x")]).unwrap();
        assert_eq!(idx.doc_length("D1"), Some(0));
        assert_eq!(idx.tf("x", "D1"), 0);
        assert_eq!(bm25_score(&idx, &terms("x"), "D1", Bm25Params::default()).unwrap(), 0.0);
    }

    #[test]
    fn duplicate_docs_rejected() {
        assert!(build_index(&[doc("D1", "a"), doc("D1", "b")]).is_err());
    }

    #[test]
    fn bm25_hand_example() {
        let idx = build_index(&[doc("D1", "a a b"), doc("D2", "c")]).unwrap();
        let s = bm25_score(&idx, &terms("a"), "D1", Bm25Params::default()).unwrap();
        // ln(1 + 1.5/1.5) * (2 * 1.9) / (2 + 0.9 * (1 - 0.4 + 0.4 * 1.5))
        assert!((s - 0.8551815864051273).abs() < 1e-12, "{s}");
        let twice = bm25_score(&idx, &terms("a a"), "D1", Bm25Params::default()).unwrap();
        assert!((twice - 2.0 * s).abs() < 1e-12);
        assert_eq!(bm25_score(&idx, &terms("zzz c"), "D1", Bm25Params::default()).unwrap(), 0.0);
        assert!(matches!(
            bm25_score(&idx, &terms("a"), "D9", Bm25Params::default()),
            Err(Error::UnknownDocument(_))
        ));
    }

    fn five_docs() -> Vec<DocumentRecord> {
        vec![
            DocumentRecord { doc_id: "D1".into(), title: "heart failure".into(), abstract_text: "trial of heart drugs".into() },
            DocumentRecord { doc_id: "D2".into(), title: "kidney failure".into(), abstract_text: "renal outcomes trial".into() },
            DocumentRecord { doc_id: "D3".into(), title: "heart surgery".into(), abstract_text: "surgical outcomes in cardiac patients".into() },
            DocumentRecord { doc_id: "D4".into(), title: "diabetes".into(), abstract_text: "glucose control trial".into() },
            DocumentRecord { doc_id: "D5".into(), title: "heart".into(), abstract_text: "heart heart failure rehabilitation".into() },
        ]
    }

    #[test]
    fn bm25_rank_examples() {
        let idx = build_index(&five_docs()).unwrap();
        let p = Bm25Params::default();
        let one = bm25_rank(&idx, &terms("heart"), &pool(&["D4"]), &HashSet::new(), p).unwrap();
        assert_eq!(ids(&one), ["D4"]);
        let two = bm25_rank(&idx, &terms("kidney"), &pool(&["D1", "D2"]), &HashSet::new(), p).unwrap();
        assert_eq!(ids(&two), ["D2", "D1"]);

        // Frozen from an independent evaluation of the BM25 formula.
        let all = pool(&["D1", "D2", "D3", "D4", "D5"]);
        let ranked = bm25_rank(&idx, &terms("heart failure trial"), &all, &HashSet::new(), p).unwrap();
        assert_eq!(ids(&ranked), ["D1", "D5", "D2", "D4", "D3"]);
        let expected = [1.7524284854454995, 1.339856670345972, 1.093338097571643, 0.5668413384089145, 0.5103455239495542];
        for (d, e) in ranked.iter().zip(expected) {
            assert!((d.score - e).abs() < 1e-12);
        }
        let exclude: HashSet<String> = ["D1".to_string()].into();
        let rest = bm25_rank(&idx, &terms("heart failure trial"), &all, &exclude, p).unwrap();
        assert_eq!(ids(&rest), ["D5", "D2", "D4", "D3"]);
    }

    #[test]
    fn rm3_single_doc_model() {
        let idx = build_index(&[doc("F", "x x y"), doc("G", "z")]).unwrap();
        let orig = WeightedQuery::uniform(&terms("q"));
        let fb = [ScoredDoc { doc_id: "F".into(), score: 3.0 }];
        let out = rm3_expand(&idx, &orig, &fb, 2, 0.0).unwrap();
        assert_eq!(out.len(), 2);
        assert!((out.weight("x") - 2.0 / 3.0).abs() < 1e-12);
        assert!((out.weight("y") - 1.0 / 3.0).abs() < 1e-12);

        let same = rm3_expand(&idx, &orig, &fb, 2, 1.0).unwrap();
        assert_eq!(same, orig);
    }

    #[test]
    fn rm3_argument_checks() {
        let idx = build_index(&[doc("F", "x")]).unwrap();
        let orig = WeightedQuery::uniform(&terms("x"));
        assert!(rm3_expand(&idx, &orig, &[], 2, 0.5).is_err());
        let fb = [ScoredDoc { doc_id: "F".into(), score: 0.0 }];
        assert!(rm3_expand(&idx, &orig, &fb, 0, 0.5).is_err());
        assert!(rm3_expand(&idx, &orig, &fb, 1, 1.5).is_err());
    }

    #[test]
    fn rm3_five_doc_trace() {
        // Both passes traced independently: first-pass top two are D1, D5.
        let idx = build_index(&five_docs()).unwrap();
        let all = pool(&["D1", "D2", "D3", "D4", "D5"]);
        let rm3 = Rm3Params { fb_docs: 2, fb_terms: 3, lambda: 0.5 };
        let q = terms("heart failure trial");
        let first = bm25_rank(&idx, &q, &all, &HashSet::new(), Bm25Params::default()).unwrap();
        let expanded = rm3_expand(&idx, &WeightedQuery::uniform(&q), &first[..2], 3, 0.5).unwrap();
        let expected = [
            ("drugs", 0.06966369976428494),
            ("failure", 0.2916666666666667),
            ("heart", 0.4720029669023818),
            ("trial", 0.16666666666666669),
        ];
        assert_eq!(expanded.len(), expected.len());
        for (t, w) in expected {
            assert!((expanded.weight(t) - w).abs() < 1e-12, "{t}");
        }
        let ranked = bm25_rm3_rank(&idx, &q, &all, Bm25Params::default(), rm3).unwrap();
        assert_eq!(ids(&ranked), ["D1", "D5", "D2", "D3", "D4"]);
        let scores = [0.665356221633106, 0.5338320499158326, 0.2505566473601682, 0.24088460144954016, 0.09447355640148576];
        for (d, e) in ranked.iter().zip(scores) {
            assert!((d.score - e).abs() < 1e-12);
        }
    }

    #[test]
    fn rm3_pool_smaller_than_fb_docs() {
        let idx = build_index(&five_docs()).unwrap();
        let small = pool(&["D2", "D4"]);
        let rm3 = Rm3Params { fb_docs: 10, fb_terms: 5, lambda: 0.5 };
        let ranked = bm25_rm3_rank(&idx, &terms("trial"), &small, Bm25Params::default(), rm3).unwrap();
        assert_eq!(ranked.len(), 2);
        assert!(bm25_rm3_rank(&idx, &terms("trial"), &[], Bm25Params::default(), rm3).is_err());
    }

    fn arb_corpus() -> impl Strategy<Value = Vec<DocumentRecord>> {
        proptest::collection::vec(
            proptest::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]), 0..8),
            1..12,
        )
        .prop_map(|docs| {
            docs.into_iter()
                .enumerate()
                .map(|(i, words)| doc(&format!("D{i:02}"), &words.join(" ")))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn bm25_is_additive(corpus in arb_corpus(), q1 in "[a-f ]{0,6}", q2 in "[a-f ]{0,6}") {
            let idx = build_index(&corpus).unwrap();
            let p = Bm25Params::default();
            let (t1, t2) = (terms(&q1), terms(&q2));
            let both: Vec<String> = t1.iter().chain(&t2).cloned().collect();
            for d in &corpus {
                let s = bm25_score(&idx, &both, &d.doc_id, p).unwrap();
                let parts = bm25_score(&idx, &t1, &d.doc_id, p).unwrap() + bm25_score(&idx, &t2, &d.doc_id, p).unwrap();
                prop_assert!((s - parts).abs() < 1e-9);
            }
        }

        #[test]
        fn idf_positive(corpus in arb_corpus()) {
            let idx = build_index(&corpus).unwrap();
            for t in ["a", "b", "c", "d", "e", "f"] {
                if idx.df(t) > 0 {
                    prop_assert!(idx.idf(t) > 0.0);
                }
            }
        }

        #[test]
        fn rm3_weights_sum_to_one(corpus in arb_corpus(), q in "[a-f]( [a-f]){0,3}", fb_terms in 1usize..6, lambda in 0.0f64..=1.0, fb_k in 1usize..5) {
            let idx = build_index(&corpus).unwrap();
            let all: Vec<String> = corpus.iter().map(|d| d.doc_id.clone()).collect();
            let qt = terms(&q);
            let first = bm25_rank(&idx, &qt, &all, &HashSet::new(), Bm25Params::default()).unwrap();
            let orig = WeightedQuery::uniform(&qt);
            let out = rm3_expand(&idx, &orig, &first[..fb_k.min(first.len())], fb_terms, lambda).unwrap();
            prop_assert!((out.total() - 1.0).abs() <= 1e-9);
            prop_assert!(out.len() <= fb_terms + orig.len());
        }

        #[test]
        fn rankings_are_permutations(corpus in arb_corpus(), q in "[a-f ]{0,6}", lambda in 0.0f64..=1.0) {
            let idx = build_index(&corpus).unwrap();
            let all: Vec<String> = corpus.iter().map(|d| d.doc_id.clone()).collect();
            let rm3 = Rm3Params { fb_docs: 3, fb_terms: 4, lambda };
            let ranked = bm25_rm3_rank(&idx, &terms(&q), &all, Bm25Params::default(), rm3).unwrap();
            let mut got: Vec<String> = ranked.into_iter().map(|d| d.doc_id).collect();
            got.sort();
            prop_assert_eq!(got, all);
        }
    }
}
