//! Corpus, topic and pool files.
//!
//! Corpus and topic files hold one JSON object per line; pools are plain
//! `topic_id doc_id` lines. Blank lines are ignored everywhere.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    #[serde(rename = "id")]
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
}

impl DocumentRecord {
    /// Title and abstract joined by a single space.
    pub fn text(&self) -> String {
        if self.abstract_text.is_empty() {
            self.title.clone()
        } else {
            format!("{} {}", self.title, self.abstract_text)
        }
    }
}

/// Documents in file order with an id index.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: Vec<DocumentRecord>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(docs: Vec<DocumentRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(docs.len());
        for (i, doc) in docs.iter().enumerate() {
            check_id(&doc.doc_id).map_err(|m| Error::parse("corpus", i + 1, m))?;
            if index.insert(doc.doc_id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    source_name: "corpus".into(),
                    line: i + 1,
                    id: doc.doc_id.clone(),
                });
            }
        }
        Ok(Self { docs, index })
    }

    pub fn get(&self, doc_id: &str) -> Option<&DocumentRecord> {
        self.index.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.index.contains_key(doc_id)
    }

    pub fn docs(&self) -> &[DocumentRecord] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub topic_id: String,
    pub title_query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_text: Option<String>,
    #[serde(default)]
    pub pool: Vec<String>,
}

#[derive(Deserialize)]
struct TopicLine {
    topic_id: String,
    title_query: String,
    #[serde(default)]
    protocol_text: Option<String>,
}

fn check_id(id: &str) -> std::result::Result<(), String> {
    if id.is_empty() {
        return Err("empty id".into());
    }
    if id.chars().any(char::is_whitespace) {
        return Err(format!("id `{id}` contains whitespace"));
    }
    Ok(())
}

fn lines<'a, R: BufRead + 'a>(
    reader: R,
    source_name: &'a str,
) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    reader
        .lines()
        .enumerate()
        .map(move |(i, line)| {
            line.map(|l| (i + 1, l))
                .map_err(|e| Error::parse(source_name, i + 1, e.to_string()))
        })
        .filter(|r| !matches!(r, Ok((_, l)) if l.trim().is_empty()))
}

/// Parses a JSON-lines corpus with fields `id`, `title`, `abstract`.
pub fn parse_corpus<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<DocumentRecord>> {
    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for item in lines(reader, source_name) {
        let (line_no, line) = item?;
        let doc: DocumentRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(source_name, line_no, e.to_string()))?;
        check_id(&doc.doc_id).map_err(|m| Error::parse(source_name, line_no, m))?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(Error::DuplicateId {
                source_name: source_name.into(),
                line: line_no,
                id: doc.doc_id,
            });
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Parses JSON-lines topics (`topic_id`, `title_query`, optional
/// `protocol_text`). Pools are left empty; see [`attach_pools`].
pub fn parse_topics<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<Topic>> {
    let mut seen = HashSet::new();
    let mut topics = Vec::new();
    for item in lines(reader, source_name) {
        let (line_no, line) = item?;
        let raw: TopicLine = serde_json::from_str(&line)
            .map_err(|e| Error::parse(source_name, line_no, e.to_string()))?;
        check_id(&raw.topic_id).map_err(|m| Error::parse(source_name, line_no, m))?;
        if !seen.insert(raw.topic_id.clone()) {
            return Err(Error::DuplicateId {
                source_name: source_name.into(),
                line: line_no,
                id: raw.topic_id,
            });
        }
        topics.push(Topic {
            topic_id: raw.topic_id,
            title_query: raw.title_query,
            protocol_text: raw.protocol_text,
            pool: Vec::new(),
        });
    }
    Ok(topics)
}

/// Parses `topic_id doc_id` lines, keeping per-topic file order.
pub fn parse_pools<R: BufRead>(
    reader: R,
    source_name: &str,
) -> Result<Vec<(String, Vec<String>)>> {
    let mut order: Vec<(String, Vec<String>)> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for item in lines(reader, source_name) {
        let (line_no, line) = item?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        let [topic, doc] = cols[..] else {
            return Err(Error::parse(
                source_name,
                line_no,
                format!("expected 2 columns, found {}", cols.len()),
            ));
        };
        if !seen.insert((topic.to_string(), doc.to_string())) {
            return Err(Error::DuplicateId {
                source_name: source_name.into(),
                line: line_no,
                id: format!("{topic} {doc}"),
            });
        }
        let idx = *slot.entry(topic.to_string()).or_insert_with(|| {
            order.push((topic.to_string(), Vec::new()));
            order.len() - 1
        });
        order[idx].1.push(doc.to_string());
    }
    Ok(order)
}

/// Moves parsed pools into their topics. Every topic must end up with a
/// non-empty pool and every pool must belong to a known topic.
pub fn attach_pools(topics: &mut [Topic], pools: Vec<(String, Vec<String>)>) -> Result<()> {
    let index: HashMap<String, usize> = topics
        .iter()
        .enumerate()
        .map(|(i, t)| (t.topic_id.clone(), i))
        .collect();
    for (topic_id, docs) in pools {
        let &i = index
            .get(&topic_id)
            .ok_or_else(|| Error::UnknownTopic(topic_id.clone()))?;
        topics[i].pool.extend(docs);
    }
    if let Some(t) = topics.iter().find(|t| t.pool.is_empty()) {
        return Err(Error::InvalidInput(format!(
            "topic `{}` has an empty pool",
            t.topic_id
        )));
    }
    Ok(())
}

/// Writes a corpus back out in the JSON-lines format.
pub fn format_corpus(docs: &[DocumentRecord]) -> String {
    let mut out = String::new();
    for d in docs {
        out.push_str(&serde_json::to_string(d).expect("document serializes"));
        out.push('\n');
    }
    out
}

/// Writes topics as JSON lines plus the pool file contents.
pub fn format_topics(topics: &[Topic]) -> (String, String) {
    #[derive(Serialize)]
    struct Line<'a> {
        topic_id: &'a str,
        title_query: &'a str,
        #[serde(skip_serializing_if = "Option::is_none")]
        protocol_text: Option<&'a str>,
    }
    let mut t = String::new();
    let mut p = String::new();
    for topic in topics {
        let line = Line {
            topic_id: &topic.topic_id,
            title_query: &topic.title_query,
            protocol_text: topic.protocol_text.as_deref(),
        };
        t.push_str(&serde_json::to_string(&line).expect("topic serializes"));
        t.push('\n');
        for doc in &topic.pool {
            p.push_str(&topic.topic_id);
            p.push(' ');
            p.push_str(doc);
            p.push('\n');
        }
    }
    (t, p)
}
