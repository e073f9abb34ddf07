use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::datastore::{topic_key, Corpus, EmbeddingSet, Qrels, Topic};

/// A `(topic_id, doc_id)` reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DocRef {
    pub topic_id: String,
    pub doc_id: String,
}

/// Consistency problems across corpus, topics, qrels and embeddings.
///
/// Missing corpus entries and missing embeddings block a run. Qrels outside
/// the pools and topics without relevant documents are warnings: sessions run
/// but such topics are left out of evaluation aggregates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub missing_from_corpus: Vec<DocRef>,
    pub missing_embeddings: Vec<DocRef>,
    pub missing_topic_embeddings: Vec<String>,
    pub qrels_outside_pool: Vec<DocRef>,
    pub topics_without_relevant: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        !self.is_blocking()
            && self.qrels_outside_pool.is_empty()
            && self.topics_without_relevant.is_empty()
    }

    pub fn is_blocking(&self) -> bool {
        !self.missing_from_corpus.is_empty()
            || !self.missing_embeddings.is_empty()
            || !self.missing_topic_embeddings.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return writeln!(f, "OK");
        }
        for r in &self.missing_from_corpus {
            writeln!(f, "error: topic {} pool document {} missing from corpus", r.topic_id, r.doc_id)?;
        }
        for r in &self.missing_embeddings {
            writeln!(f, "error: topic {} pool document {} has no embedding", r.topic_id, r.doc_id)?;
        }
        for t in &self.missing_topic_embeddings {
            writeln!(f, "error: topic {t} has no query embedding ({})", topic_key(t))?;
        }
        for r in &self.qrels_outside_pool {
            writeln!(f, "warning: qrels document {} for topic {} is outside the pool", r.doc_id, r.topic_id)?;
        }
        for t in &self.topics_without_relevant {
            writeln!(f, "warning: topic {t} has no relevant documents")?;
        }
        Ok(())
    }
}

pub fn validate_dataset(
    corpus: &Corpus,
    topics: &[Topic],
    qrels: &Qrels,
    embeddings: &EmbeddingSet,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    for topic in topics {
        let pool: HashSet<&str> = topic.pool.iter().map(String::as_str).collect();
        for doc in &topic.pool {
            let r = || DocRef {
                topic_id: topic.topic_id.clone(),
                doc_id: doc.clone(),
            };
            if !corpus.contains(doc) {
                report.missing_from_corpus.push(r());
            }
            if !embeddings.contains(doc) {
                report.missing_embeddings.push(r());
            }
        }
        if !embeddings.contains(&topic_key(&topic.topic_id)) {
            report.missing_topic_embeddings.push(topic.topic_id.clone());
        }
        for (doc, _) in qrels.topic_entries(&topic.topic_id) {
            if !pool.contains(doc) {
                report.qrels_outside_pool.push(DocRef {
                    topic_id: topic.topic_id.clone(),
                    doc_id: doc.to_string(),
                });
            }
        }
        if qrels.num_relevant(&topic.topic_id) == 0 {
            report.topics_without_relevant.push(topic.topic_id.clone());
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastore::DocumentRecord;

    fn fixture() -> (Corpus, Vec<Topic>, Qrels, EmbeddingSet) {
        let docs = ["D1", "D2"]
            .iter()
            .map(|id| DocumentRecord {
                doc_id: id.to_string(),
                title: "t".into(),
                abstract_text: String::new(),
            })
            .collect();
        let topics = vec![Topic {
            topic_id: "T1".into(),
            title_query: "q".into(),
            protocol_text: None,
            pool: vec!["D1".into(), "D2".into()],
        }];
        let mut qrels = Qrels::new();
        qrels.insert("T1", "D1", 1).unwrap();
        qrels.insert("T1", "D2", 0).unwrap();
        let mut emb = EmbeddingSet::new(2).unwrap();
        for id in ["D1", "D2", "topic:T1"] {
            emb.insert(id, &[1.0, 0.0]).unwrap();
        }
        (Corpus::new(docs).unwrap(), topics, qrels, emb)
    }

    #[test]
    fn consistent_fixture_is_clean() {
        let (c, t, q, e) = fixture();
        let report = validate_dataset(&c, &t, &q, &e);
        assert!(report.is_empty());
        assert_eq!(report.to_string(), "OK\n");
    }

    #[test]
    fn pool_doc_missing_from_corpus() {
        let (c, mut t, q, mut e) = fixture();
        t[0].pool.push("D9".into());
        e.insert("D9", &[0.0, 1.0]).unwrap();
        let report = validate_dataset(&c, &t, &q, &e);
        assert_eq!(report.missing_from_corpus.len(), 1);
        assert_eq!(report.missing_from_corpus[0].doc_id, "D9");
        assert!(report.is_blocking());
        assert!(report.to_string().contains("D9"));
    }

    #[test]
    fn missing_embeddings_and_outside_qrels() {
        let (c, t, mut q, _) = fixture();
        let mut e = EmbeddingSet::new(2).unwrap();
        e.insert("D1", &[1.0, 0.0]).unwrap();
        q.insert("T1", "D77", 1).unwrap();
        let report = validate_dataset(&c, &t, &q, &e);
        assert_eq!(report.missing_embeddings[0].doc_id, "D2");
        assert_eq!(report.missing_topic_embeddings, ["T1"]);
        assert_eq!(report.qrels_outside_pool[0].doc_id, "D77");
    }

    #[test]
    fn all_zero_grades_reported() {
        let (c, t, _, e) = fixture();
        let mut q = Qrels::new();
        q.insert("T1", "D1", 0).unwrap();
        let report = validate_dataset(&c, &t, &q, &e);
        assert_eq!(report.topics_without_relevant, ["T1"]);
        assert!(!report.is_blocking());
        assert!(!report.is_empty());
    }

    #[test]
    fn inputs_are_not_mutated() {
        let (c, t, q, e) = fixture();
        let (c0, t0, q0, e0) = (c.clone(), t.clone(), q.clone(), e.clone());
        let _ = validate_dataset(&c, &t, &q, &e);
        assert_eq!(c.docs(), c0.docs());
        assert_eq!(t, t0);
        assert_eq!(q, q0);
        assert_eq!(e, e0);
    }
}
