//! TREC-style relevance judgments: `topic iteration doc grade`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use crate::error::{Error, Result};

/// Binary-relevance ground truth. Grades above zero are relevant; documents
/// without an entry are treated as non-relevant.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    entries: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry; fails when the (topic, doc) key already exists.
    pub fn insert(&mut self, topic_id: &str, doc_id: &str, grade: u32) -> Result<()> {
        let docs = self.entries.entry(topic_id.to_string()).or_default();
        if docs.contains_key(doc_id) {
            return Err(Error::InvalidInput(format!(
                "duplicate qrels key ({topic_id}, {doc_id})"
            )));
        }
        docs.insert(doc_id.to_string(), grade);
        Ok(())
    }

    pub fn grade(&self, topic_id: &str, doc_id: &str) -> Option<u32> {
        self.entries.get(topic_id)?.get(doc_id).copied()
    }

    pub fn is_relevant(&self, topic_id: &str, doc_id: &str) -> bool {
        self.grade(topic_id, doc_id).is_some_and(|g| g > 0)
    }

    pub fn relevant_docs(&self, topic_id: &str) -> BTreeSet<&str> {
        self.entries
            .get(topic_id)
            .map(|docs| {
                docs.iter()
                    .filter(|(_, &g)| g > 0)
                    .map(|(d, _)| d.as_str())
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn num_relevant(&self, topic_id: &str) -> usize {
        self.entries
            .get(topic_id)
            .map_or(0, |docs| docs.values().filter(|&&g| g > 0).count())
    }

    pub fn topic_entries(&self, topic_id: &str) -> impl Iterator<Item = (&str, u32)> {
        self.entries
            .get(topic_id)
            .into_iter()
            .flat_map(|docs| docs.iter().map(|(d, &g)| (d.as_str(), g)))
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn parse_qrels<R: BufRead>(reader: R, source_name: &str) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::parse(source_name, line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let [topic, _iteration, doc, grade] = cols[..] else {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        };
        let grade: u32 = grade.parse().map_err(|_| {
            Error::parse(
                source_name,
                line_no,
                format!("grade `{grade}` is not a non-negative integer"),
            )
        })?;
        if qrels.grade(topic, doc).is_some() {
            return Err(Error::DuplicateId {
                source_name: source_name.into(),
                line: line_no,
                id: format!("({topic}, {doc})"),
            });
        }
        qrels.insert(topic, doc, grade)?;
    }
    Ok(qrels)
}

/// Writes qrels sorted by topic then document, iteration column `0`.
pub fn format_qrels(qrels: &Qrels) -> String {
    let mut out = String::new();
    for (topic, docs) in &qrels.entries {
        for (doc, grade) in docs {
            out.push_str(&format!("{topic} 0 {doc} {grade}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_line() {
        let q = parse_qrels("CD42 0 D7 1\n".as_bytes(), "q").unwrap();
        assert_eq!(q.grade("CD42", "D7"), Some(1));
        assert!(q.is_relevant("CD42", "D7"));
    }

    #[test]
    fn explicit_zero_is_non_relevant() {
        let q = parse_qrels("CD42 0 D7 0\n".as_bytes(), "q").unwrap();
        assert_eq!(q.grade("CD42", "D7"), Some(0));
        assert!(!q.is_relevant("CD42", "D7"));
        assert_eq!(q.num_relevant("CD42"), 0);
        assert!(!q.is_relevant("CD42", "absent"));
    }

    #[test]
    fn duplicate_key_names_key() {
        let err = parse_qrels("T 0 D 1\nT 0 D 0\n".as_bytes(), "q").unwrap_err();
        assert!(err.to_string().contains("(T, D)"), "{err}");
        assert!(err.to_string().contains(":2"), "{err}");
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(
            parse_qrels("T 0 D x\n".as_bytes(), "q"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_qrels("T 0 D 1\nT 0 D\n".as_bytes(), "q"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_qrels("T 0 D -1\n".as_bytes(), "q").is_err());
    }

    proptest! {
        #[test]
        fn format_then_parse_is_identity(
            entries in proptest::collection::btree_map(
                ("[A-Z][0-9]{1,2}", "[a-z][a-z0-9]{0,4}"), 0u32..4, 0..40)
        ) {
            let mut q = Qrels::new();
            for ((t, d), g) in &entries {
                q.insert(t, d, *g).unwrap();
            }
            let again = parse_qrels(format_qrels(&q).as_bytes(), "q").unwrap();
            prop_assert_eq!(again, q);
        }
    }
}
