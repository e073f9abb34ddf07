//! Deterministic hash-projection embedder.
//!
//! Each lowercased word unigram and bigram (bigrams joined by one space) is
//! hashed with a seeded 64-bit hash. The hash picks a bucket (`h % dim`) and a
//! sign (top bit set means -1). Contributions are summed and the result is
//! L2-normalized. Identical text and seed give identical vectors on every
//! platform.

use crate::datastore::{DocumentRecord, EmbeddingSet, Topic, TOPIC_PREFIX};
use crate::error::{Error, Result};
use crate::sparse::tokenize;

const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

/// Stand-in n-gram for text whose hashed contributions are all zero
/// (empty text, or collisions that cancel exactly).
const EMPTY_SENTINEL: &str = "\u{0}";

/// FNV-1a over the bytes, starting from a seed-derived state, then a
/// splitmix64 finalizer.
pub fn seeded_hash(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = seed ^ SEED_MIX;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn add_ngram(acc: &mut [f64], seed: u64, ngram: &str) {
    let h = seeded_hash(seed, ngram.as_bytes());
    let bucket = (h % acc.len() as u64) as usize;
    acc[bucket] += if h >> 63 == 1 { -1.0 } else { 1.0 };
}

/// Embeds one text. `dim` must be at least 2.
pub fn embed_text(text: &str, dim: usize, seed: u64) -> Result<Vec<f32>> {
    if dim < 2 {
        return Err(Error::InvalidInput(format!(
            "synthetic embedding dim must be >= 2, got {dim}"
        )));
    }
    let tokens = tokenize(text);
    let mut acc = vec![0.0f64; dim];
    for t in &tokens {
        add_ngram(&mut acc, seed, t);
    }
    for pair in tokens.windows(2) {
        add_ngram(&mut acc, seed, &format!("{} {}", pair[0], pair[1]));
    }
    let mut norm = acc.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm == 0.0 {
        acc.iter_mut().for_each(|c| *c = 0.0);
        add_ngram(&mut acc, seed, EMPTY_SENTINEL);
        norm = 1.0;
    }
    Ok(acc.iter().map(|c| (c / norm) as f32).collect())
}

/// One vector per document (title + abstract) and one per topic
/// (`title_query`, stored under `topic:<topic_id>`).
pub fn synthetic_embeddings(
    corpus: &[DocumentRecord],
    topics: &[Topic],
    dim: usize,
    seed: u64,
) -> Result<EmbeddingSet> {
    if dim < 2 {
        return Err(Error::InvalidInput(format!(
            "synthetic embedding dim must be >= 2, got {dim}"
        )));
    }
    let mut set = EmbeddingSet::with_capacity(dim, corpus.len() + topics.len())?;
    for doc in corpus {
        set.insert(&doc.doc_id, &embed_text(&doc.text(), dim, seed)?)?;
    }
    for topic in topics {
        let key = format!("{TOPIC_PREFIX}{}", topic.topic_id);
        set.insert(&key, &embed_text(&topic.title_query, dim, seed)?)?;
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, title: &str, abs: &str) -> DocumentRecord {
        DocumentRecord {
            doc_id: id.into(),
            title: title.into(),
            abstract_text: abs.into(),
        }
    }

    #[test]
    fn deterministic_and_text_only() {
        let a = embed_text("Heart failure outcomes", 16, 7).unwrap();
        assert_eq!(a, embed_text("Heart failure outcomes", 16, 7).unwrap());
        let docs = [doc("D1", "same text", ""), doc("D2", "same text", "")];
        let set = synthetic_embeddings(&docs, &[], 16, 3).unwrap();
        assert_eq!(set.get("D1"), set.get("D2"));
    }

    #[test]
    fn seed_changes_output() {
        assert_ne!(
            embed_text("heart failure", 16, 1).unwrap(),
            embed_text("heart failure", 16, 2).unwrap()
        );
    }

    #[test]
    fn unit_norm_including_empty_text() {
        for text in ["", "a", "a b c d e f", "!!!", "Ünïcode wörds"] {
            let v = embed_text(text, 8, 11).unwrap();
            let n: f64 = v.iter().map(|&c| f64::from(c) * f64::from(c)).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-6, "{text:?} -> {n}");
        }
    }

    #[test]
    fn dim_below_two_rejected() {
        assert!(embed_text("x", 1, 0).is_err());
        assert!(synthetic_embeddings(&[], &[], 1, 0).is_err());
    }

    #[test]
    fn topics_are_prefixed() {
        let topic = Topic {
            topic_id: "CD1".into(),
            title_query: "heart failure".into(),
            protocol_text: None,
            pool: vec!["D1".into()],
        };
        let set = synthetic_embeddings(&[doc("D1", "heart failure", "")], &[topic], 8, 5).unwrap();
        assert_eq!(set.get("topic:CD1"), set.get("D1"));
    }
}
