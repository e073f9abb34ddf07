use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::datastore::Qrels;
use crate::error::{Error, Result};
use crate::session::{concatenated_ranking, CurvePoint, ScreeningRecord};

/// AP with an explicit denominator: relevant documents never ranked still
/// count against the score.
pub fn average_precision<S: AsRef<str>>(
    ranking: &[S],
    relevant: &BTreeSet<&str>,
    total_relevant: usize,
) -> Result<f64> {
    if total_relevant == 0 {
        return Err(Error::InvalidInput("total_relevant must be >= 1".into()));
    }
    let mut found = 0usize;
    let mut sum = 0.0;
    for (i, doc) in ranking.iter().enumerate() {
        if relevant.contains(doc.as_ref()) {
            found += 1;
            sum += found as f64 / (i + 1) as f64;
        }
    }
    if found > total_relevant {
        return Err(Error::InvalidInput(format!(
            "ranking holds {found} relevant documents but total_relevant is {total_relevant}"
        )));
    }
    Ok(sum / total_relevant as f64)
}

/// 1-based position of the last relevant document, if any.
pub fn last_rel<S: AsRef<str>>(ranking: &[S], relevant: &BTreeSet<&str>) -> Option<usize> {
    ranking
        .iter()
        .rposition(|d| relevant.contains(d.as_ref()))
        .map(|i| i + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicMetrics {
    pub topic_id: String,
    pub ap: f64,
    pub last_rel: Option<usize>,
    pub num_relevant: usize,
    pub num_screened: usize,
    pub recall_curve: Vec<CurvePoint>,
}

/// Scores one record against the qrels. Returns `Ok(None)` when the topic
/// has no relevant documents, which callers treat as "skip".
pub fn score_record(record: &ScreeningRecord, qrels: &Qrels) -> Result<Option<TopicMetrics>> {
    let topic_id = &record.config.topic_id;
    let relevant = qrels.relevant_docs(topic_id);
    if relevant.is_empty() {
        return Ok(None);
    }
    let ranking = concatenated_ranking(record);
    let ap = average_precision(&ranking, &relevant, relevant.len())?;
    let mut screened = 0;
    let mut found = 0;
    let recall_curve = record
        .batches
        .iter()
        .map(|b| {
            screened += b.docs.len();
            found += b
                .docs
                .iter()
                .filter(|d| relevant.contains(d.doc_id.as_str()))
                .count();
            CurvePoint {
                screened,
                relevant_found: found,
            }
        })
        .collect();
    Ok(Some(TopicMetrics {
        topic_id: topic_id.clone(),
        ap,
        last_rel: last_rel(&ranking, &relevant),
        num_relevant: relevant.len(),
        num_screened: ranking.len(),
        recall_curve,
    }))
}
