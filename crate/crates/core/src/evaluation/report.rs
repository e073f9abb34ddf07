//! Aggregate reports over screening records.
//!
//! Records are grouped by `(collection, strategy, weights, k)`. Each group
//! gets mean AP and mean Last Rel over the topics that have at least one
//! relevant document, and is compared against a baseline group of the same
//! collection with a paired t-test over topics. The Bonferroni family of a
//! comparison is every non-baseline group that shares its baseline group.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;

use crate::datastore::Qrels;
use crate::dense::RocchioWeights;
use crate::error::{Error, Result};
use crate::evaluation::metrics::{score_record, TopicMetrics};
use crate::evaluation::stats::{bonferroni, paired_t_test};
use crate::session::{ScreeningRecord, Strategy};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

pub const CSV_HEADER: &str =
    "collection,strategy,alpha,beta,gamma,k,mean_ap,mean_last_rel,p_value,p_adjusted,significant";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupKey {
    pub collection: String,
    pub strategy: Strategy,
    pub weights: Option<RocchioWeights>,
    pub k: usize,
}

fn weight_cmp(a: &Option<RocchioWeights>, b: &Option<RocchioWeights>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x
            .alpha()
            .total_cmp(&y.alpha())
            .then(x.beta().total_cmp(&y.beta()))
            .then(x.gamma().total_cmp(&y.gamma())),
    }
}

impl Eq for GroupKey {}

impl Ord for GroupKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.collection
            .cmp(&other.collection)
            .then(self.strategy.cmp(&other.strategy))
            .then_with(|| weight_cmp(&self.weights, &other.weights))
            .then(self.k.cmp(&other.k))
    }
}

impl PartialOrd for GroupKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl GroupKey {
    pub fn of(record: &ScreeningRecord) -> Self {
        Self {
            collection: record.collection.clone(),
            strategy: record.config.strategy,
            weights: record.config.weights,
            k: record.config.k,
        }
    }

    fn weight_fields(&self) -> [String; 3] {
        match self.weights {
            Some(w) => [w.alpha(), w.beta(), w.gamma()].map(|v| v.to_string()),
            None => Default::default(),
        }
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.collection, self.strategy)?;
        if let Some(w) = self.weights {
            write!(f, ":{},{},{}", w.alpha(), w.beta(), w.gamma())?;
        }
        write!(f, "@{}", self.k)
    }
}

/// Selects baseline groups: `strategy[:alpha,beta,gamma][@k]`.
///
/// Without `@k` each group is compared with the baseline of the same `k`;
/// without weights any weights match.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineKey {
    pub strategy: Strategy,
    pub weights: Option<RocchioWeights>,
    pub k: Option<usize>,
}

impl BaselineKey {
    fn matches(&self, key: &GroupKey) -> bool {
        key.strategy == self.strategy
            && self.weights.is_none_or(|w| key.weights == Some(w))
            && self.k.is_none_or(|k| key.k == k)
    }
}

impl FromStr for BaselineKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (rest, k) = match s.rsplit_once('@') {
            Some((rest, k)) => {
                let k = k
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidInput(format!("bad baseline k in `{s}`")))?;
                (rest, Some(k))
            }
            None => (s, None),
        };
        let (strategy, weights) = match rest.split_once(':') {
            Some((st, w)) => (st, Some(w.parse::<RocchioWeights>()?)),
            None => (rest, None),
        };
        Ok(Self {
            strategy: strategy.trim().parse()?,
            weights,
            k,
        })
    }
}

impl fmt::Display for BaselineKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.strategy)?;
        if let Some(w) = self.weights {
            write!(f, ":{},{},{}", w.alpha(), w.beta(), w.gamma())?;
        }
        if let Some(k) = self.k {
            write!(f, "@{k}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub baseline: GroupKey,
    pub mean_ap_baseline: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub p_adjusted: f64,
    pub significant: bool,
    pub family_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub key: GroupKey,
    pub num_topics: usize,
    pub mean_ap: f64,
    /// Mean over topics where at least one relevant document was screened.
    pub mean_last_rel: Option<f64>,
    pub comparison: Option<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub groups: Vec<GroupSummary>,
    pub topics: Vec<(GroupKey, TopicMetrics)>,
    /// `(collection, topic_id)` pairs left out for lack of relevant documents.
    pub skipped: Vec<(String, String)>,
}

/// Builds the report. `qrels` is keyed by collection name.
pub fn build_report(
    records: &[ScreeningRecord],
    qrels: &BTreeMap<String, Qrels>,
    baseline: Option<&BaselineKey>,
) -> Result<Report> {
    let mut grouped: BTreeMap<GroupKey, BTreeMap<String, &ScreeningRecord>> = BTreeMap::new();
    for rec in records {
        let topics = grouped.entry(GroupKey::of(rec)).or_default();
        if topics.insert(rec.config.topic_id.clone(), rec).is_some() {
            return Err(Error::InvalidInput(format!(
                "group {} holds topic `{}` twice",
                GroupKey::of(rec),
                rec.config.topic_id
            )));
        }
    }

    // Every group of a collection must cover the same topics.
    let mut topic_sets: BTreeMap<&str, (&GroupKey, BTreeSet<&str>)> = BTreeMap::new();
    for (key, topics) in &grouped {
        let set: BTreeSet<&str> = topics.keys().map(String::as_str).collect();
        match topic_sets.get(key.collection.as_str()) {
            None => {
                topic_sets.insert(&key.collection, (key, set));
            }
            Some((first, expected)) if *expected != set => {
                return Err(Error::InvalidInput(format!(
                    "topic sets differ between groups {first} and {key}"
                )));
            }
            Some(_) => {}
        }
    }

    let mut metrics: BTreeMap<&GroupKey, Vec<TopicMetrics>> = BTreeMap::new();
    let mut skipped = BTreeSet::new();
    for (key, topics) in &grouped {
        let q = qrels.get(&key.collection).ok_or_else(|| {
            Error::InvalidInput(format!("no qrels for collection `{}`", key.collection))
        })?;
        let mut list = Vec::new();
        for (topic, rec) in topics {
            match score_record(rec, q)? {
                Some(m) => list.push(m),
                None => {
                    skipped.insert((key.collection.clone(), topic.clone()));
                }
            }
        }
        metrics.insert(key, list);
    }

    let baseline_of = |key: &GroupKey| -> Result<Option<&GroupKey>> {
        let Some(b) = baseline else { return Ok(None) };
        if b.matches(key) {
            return Ok(None);
        }
        let candidates: Vec<&GroupKey> = grouped
            .keys()
            .filter(|g| g.collection == key.collection && b.matches(g))
            .filter(|g| b.k.is_some() || g.k == key.k)
            .collect();
        match candidates.as_slice() {
            [] => Ok(None),
            [one] => Ok(Some(*one)),
            _ => Err(Error::InvalidInput(format!(
                "baseline `{b}` matches several groups for {key}"
            ))),
        }
    };

    let mut pairing: BTreeMap<&GroupKey, Option<&GroupKey>> = BTreeMap::new();
    let mut family: BTreeMap<&GroupKey, usize> = BTreeMap::new();
    for key in grouped.keys() {
        let base = baseline_of(key)?;
        if let Some(base) = base {
            *family.entry(base).or_default() += 1;
        }
        pairing.insert(key, base);
    }

    let mut groups = Vec::new();
    for (key, list) in &metrics {
        let aps: Vec<f64> = list.iter().map(|m| m.ap).collect();
        let last_rels: Vec<f64> = list.iter().filter_map(|m| m.last_rel).map(|v| v as f64).collect();
        let comparison = match pairing[key] {
            Some(base) if aps.len() >= 2 => {
                let base_aps: Vec<f64> = metrics[base].iter().map(|m| m.ap).collect();
                let test = paired_t_test(&aps, &base_aps)?;
                let m = family[base];
                let p_adjusted = bonferroni(test.p_value, m)?;
                Some(Comparison {
                    baseline: base.clone(),
                    mean_ap_baseline: mean(&base_aps).unwrap_or(0.0),
                    t_statistic: test.t,
                    p_value: test.p_value,
                    p_adjusted,
                    significant: p_adjusted < SIGNIFICANCE_LEVEL,
                    family_size: m,
                })
            }
            _ => None,
        };
        groups.push(GroupSummary {
            key: (*key).clone(),
            num_topics: list.len(),
            mean_ap: mean(&aps).unwrap_or(0.0),
            mean_last_rel: mean(&last_rels),
            comparison,
        });
    }

    let topics = metrics
        .into_iter()
        .flat_map(|(key, list)| list.into_iter().map(move |m| (key.clone(), m)))
        .collect();
    Ok(Report {
        groups,
        topics,
        skipped: skipped.into_iter().collect(),
    })
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl Report {
    /// Machine-readable table, one row per group.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for g in &self.groups {
            let [a, b, c] = g.key.weight_fields();
            let cmp = g.comparison.as_ref();
            let _ = writeln!(
                out,
                "{},{},{a},{b},{c},{},{},{},{},{},{}",
                g.key.collection,
                g.key.strategy,
                g.key.k,
                g.mean_ap,
                opt(g.mean_last_rel),
                opt(cmp.map(|c| c.p_value)),
                opt(cmp.map(|c| c.p_adjusted)),
                opt(cmp.map(|c| c.significant)),
            );
        }
        out
    }

    /// Aligned table for reading. `*` marks a significant difference from
    /// the baseline after correction.
    pub fn to_text(&self) -> String {
        let header = [
            "collection", "strategy", "weights", "k", "topics", "mean AP", "mean Last Rel",
            "p", "p (Bonferroni)", "",
        ];
        let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for g in &self.groups {
            let cmp = g.comparison.as_ref();
            rows.push(vec![
                g.key.collection.clone(),
                g.key.strategy.to_string(),
                g.key.weights.map(|w| w.to_string()).unwrap_or_else(|| "-".into()),
                g.key.k.to_string(),
                g.num_topics.to_string(),
                format!("{:.4}", g.mean_ap),
                g.mean_last_rel.map_or("-".into(), |v| format!("{v:.2}")),
                cmp.map_or("-".into(), |c| format!("{:.4}", c.p_value)),
                cmp.map_or("-".into(), |c| format!("{:.4}", c.p_adjusted)),
                if cmp.is_some_and(|c| c.significant) { "*".into() } else { String::new() },
            ]);
        }
        let mut out = align(&rows);
        for (collection, topic) in &self.skipped {
            let _ = writeln!(out, "skipped {collection}/{topic}: no relevant documents");
        }
        out
    }

    /// Long format, one row per `(collection, strategy, weights, k)` cell.
    pub fn grid_csv(&self) -> String {
        let mut out =
            String::from("collection,strategy,alpha,beta,gamma,k,num_topics,mean_ap,mean_last_rel\n");
        for g in &self.groups {
            let [a, b, c] = g.key.weight_fields();
            let _ = writeln!(
                out,
                "{},{},{a},{b},{c},{},{},{},{}",
                g.key.collection,
                g.key.strategy,
                g.key.k,
                g.num_topics,
                g.mean_ap,
                opt(g.mean_last_rel)
            );
        }
        out
    }

    /// Per-topic values, for distribution plots.
    pub fn topics_csv(&self) -> String {
        let mut out = String::from(
            "collection,strategy,alpha,beta,gamma,k,topic_id,ap,last_rel,num_relevant,num_screened\n",
        );
        for (key, m) in &self.topics {
            let [a, b, c] = key.weight_fields();
            let _ = writeln!(
                out,
                "{},{},{a},{b},{c},{},{},{},{},{},{}",
                key.collection,
                key.strategy,
                key.k,
                m.topic_id,
                m.ap,
                opt(m.last_rel),
                m.num_relevant,
                m.num_screened
            );
        }
        out
    }

    /// Mean AP pivoted as weights (rows) by k (columns), per collection and
    /// strategy.
    pub fn grid_text(&self) -> String {
        let mut blocks: BTreeMap<(&str, Strategy), Vec<&GroupSummary>> = BTreeMap::new();
        for g in &self.groups {
            blocks.entry((&g.key.collection, g.key.strategy)).or_default().push(g);
        }
        let mut out = String::new();
        for ((collection, strategy), cells) in blocks {
            let ks: BTreeSet<usize> = cells.iter().map(|g| g.key.k).collect();
            let mut weights: Vec<Option<RocchioWeights>> = Vec::new();
            for g in &cells {
                if !weights.contains(&g.key.weights) {
                    weights.push(g.key.weights);
                }
            }
            weights.sort_by(weight_cmp);
            let _ = writeln!(out, "{collection} / {strategy}: mean AP");
            let mut rows = vec![std::iter::once("weights".to_string())
                .chain(ks.iter().map(|k| format!("k={k}")))
                .collect::<Vec<_>>()];
            for w in &weights {
                let mut row = vec![w.map_or("-".into(), |w| w.to_string())];
                for k in &ks {
                    let cell = cells.iter().find(|g| g.key.weights == *w && g.key.k == *k);
                    row.push(cell.map_or("-".into(), |g| format!("{:.4}", g.mean_ap)));
                }
                rows.push(row);
            }
            out.push_str(&align(&rows));
            out.push('\n');
        }
        out
    }
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}
