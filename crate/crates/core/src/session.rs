//! The screening loop.
//!
//! A session repeatedly issues the top `k` of the strategy's ranking over the
//! remaining pool, waits for binary judgments on exactly that batch, updates
//! the strategy and moves the batch to the screened trace. Judged positions
//! are never revisited, so the concatenation of batches is the final
//! screening order.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datastore::{Dataset, Qrels};
use crate::dense::{self, rocchio_update, DenseVector, RocchioWeights};
use crate::error::{Error, Result};
use crate::sparse::{bm25_rank, bm25_rm3_rank, Bm25Params, Rm3Params};
use crate::tar::{tar_step, LogisticParams, SeedConfig, SeedMode, TarState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    DenseRocchio,
    Bm25Static,
    Bm25Rm3Static,
    TarLogistic,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::DenseRocchio,
        Strategy::Bm25Static,
        Strategy::Bm25Rm3Static,
        Strategy::TarLogistic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::DenseRocchio => "dense_rocchio",
            Strategy::Bm25Static => "bm25_static",
            Strategy::Bm25Rm3Static => "bm25_rm3_static",
            Strategy::TarLogistic => "tar_logistic",
        }
    }

    fn needs_embeddings(&self) -> bool {
        matches!(self, Strategy::DenseRocchio | Strategy::TarLogistic)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown strategy `{s}`")))
    }
}

/// Which judgments feed each Rocchio update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackScope {
    /// Update the previous query with the latest batch only.
    #[default]
    Batch,
    /// Rebuild from the initial query with every judgment so far.
    Cumulative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub topic_id: String,
    pub strategy: Strategy,
    pub k: usize,
    /// Required for `dense_rocchio`; other strategies carry it only as a label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<RocchioWeights>,
    #[serde(default)]
    pub feedback_scope: FeedbackScope,
    /// Required for `tar_logistic`, rejected otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<SeedConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    /// Score by cosine instead of raw inner product.
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub bm25: Bm25Params,
    #[serde(default)]
    pub rm3: Rm3Params,
    #[serde(default)]
    pub logistic: LogisticParams,
}

impl SessionConfig {
    pub fn dense(topic_id: impl Into<String>, weights: RocchioWeights, k: usize) -> Self {
        Self {
            topic_id: topic_id.into(),
            strategy: Strategy::DenseRocchio,
            k,
            weights: Some(weights),
            feedback_scope: FeedbackScope::Batch,
            seed: None,
            max_iterations: None,
            normalize: false,
            bm25: Bm25Params::default(),
            rm3: Rm3Params::default(),
            logistic: LogisticParams::default(),
        }
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        if strategy == Strategy::TarLogistic && self.seed.is_none() {
            self.seed = Some(SeedConfig::title());
        }
        if strategy != Strategy::TarLogistic {
            self.seed = None;
        }
        self
    }

    pub fn with_max_iterations(mut self, max: Option<usize>) -> Self {
        self.max_iterations = max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("k must be >= 1".into()));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidInput("max_iterations must be >= 1".into()));
        }
        if self.strategy == Strategy::DenseRocchio && self.weights.is_none() {
            return Err(Error::InvalidInput("dense_rocchio requires Rocchio weights".into()));
        }
        match (self.strategy, &self.seed) {
            (Strategy::TarLogistic, None) => {
                return Err(Error::InvalidInput("tar_logistic requires a seed config".into()))
            }
            (Strategy::TarLogistic, Some(seed)) => seed.validate()?,
            (_, Some(_)) => {
                return Err(Error::InvalidInput(
                    "seed config is only valid for tar_logistic".into(),
                ))
            }
            _ => {}
        }
        if self.strategy == Strategy::TarLogistic {
            self.logistic.validate()?;
        }
        if self.strategy == Strategy::Bm25Rm3Static {
            if self.rm3.fb_docs == 0 || self.rm3.fb_terms == 0 {
                return Err(Error::InvalidInput("RM3 fb_docs and fb_terms must be >= 1".into()));
            }
            if !(0.0..=1.0).contains(&self.rm3.lambda) {
                return Err(Error::InvalidInput("RM3 lambda must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub doc_id: String,
    pub relevant: bool,
}

impl Judgment {
    pub fn new(doc_id: impl Into<String>, relevant: bool) -> Self {
        Self {
            doc_id: doc_id.into(),
            relevant,
        }
    }
}

/// One issued document, with the text a reviewer needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchDoc {
    pub doc_id: String,
    pub score: f64,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub token: String,
    pub iteration: usize,
    pub docs: Vec<BatchDoc>,
}

impl Batch {
    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().map(|d| d.doc_id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgedDoc {
    pub doc_id: String,
    /// Strategy score when the batch was issued.
    pub score: f64,
    pub relevant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub iteration: usize,
    pub docs: Vec<JudgedDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    Exhausted,
    Cutoff,
}

/// Full trace of one session: the input to evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningRecord {
    #[serde(default)]
    pub collection: String,
    pub config: SessionConfig,
    pub pool_size: usize,
    pub batches: Vec<BatchRecord>,
    pub terminal_reason: Option<TerminalReason>,
}

impl ScreeningRecord {
    pub fn num_screened(&self) -> usize {
        self.batches.iter().map(|b| b.docs.len()).sum()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("bad record: {e}")))
    }
}

/// Batches in iteration order, within-batch order preserved.
pub fn concatenated_ranking(record: &ScreeningRecord) -> Vec<&str> {
    record
        .batches
        .iter()
        .flat_map(|b| b.docs.iter().map(|d| d.doc_id.as_str()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DocStatus {
    Remaining,
    Issued,
    Screened,
}

#[derive(Debug, Clone, PartialEq)]
struct IssuedBatch {
    token: String,
    /// `(pool position, score)` in issue order.
    docs: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
enum StrategyState {
    Dense {
        initial: DenseVector,
        query: DenseVector,
        positives: Vec<DenseVector>,
        negatives: Vec<DenseVector>,
    },
    /// Pool positions in the fixed ranking order, with scores.
    Static { order: Vec<(usize, f64)> },
    Tar(TarState),
}

/// Point on the gain curve: documents screened vs relevant found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub screened: usize,
    pub relevant_found: usize,
}

/// Read-only view of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub config: SessionConfig,
    pub iteration: usize,
    pub pool_size: usize,
    pub screened: usize,
    pub relevant_found: usize,
    pub remaining: usize,
    pub finished: bool,
    pub recall_curve: Vec<CurvePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outstanding: Option<Batch>,
    pub trace: Vec<TraceRow>,
}

/// One screened document in concatenated order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub rank: usize,
    pub doc_id: String,
    pub relevant: bool,
    pub iteration: usize,
}

/// One screening session over a topic pool.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    config: SessionConfig,
    pool: Vec<String>,
    /// Embedding row per pool position (dense and TAR strategies only).
    rows: Vec<usize>,
    status: Vec<DocStatus>,
    remaining: usize,
    iteration: usize,
    tokens_issued: u64,
    issued: Option<IssuedBatch>,
    batches: Vec<BatchRecord>,
    strategy: StrategyState,
    finished: bool,
}

/// Creates a session at iteration 0 with the whole pool remaining.
pub fn start_session(config: SessionConfig, dataset: &Dataset) -> Result<SessionState> {
    SessionState::start(config, dataset)
}

impl SessionState {
    pub fn start(config: SessionConfig, dataset: &Dataset) -> Result<Self> {
        config.validate()?;
        let topic = dataset.topic(&config.topic_id)?;
        let pool = topic.pool.clone();
        if pool.is_empty() {
            return Err(Error::InvalidInput(format!(
                "topic `{}` has an empty pool",
                topic.topic_id
            )));
        }
        let embeddings = dataset.embeddings();

        let mut rows = Vec::new();
        if config.strategy.needs_embeddings() {
            rows.reserve(pool.len());
            for doc in &pool {
                let row = embeddings
                    .row_of(doc)
                    .ok_or_else(|| Error::MissingEmbedding(doc.clone()))?;
                if config.normalize && embeddings.inv_norms()[row] == 0.0 {
                    return Err(Error::ZeroNorm);
                }
                rows.push(row);
            }
        }

        let strategy = match config.strategy {
            Strategy::DenseRocchio => {
                let mut q = dataset.topic_vector(&topic.topic_id)?;
                if config.normalize {
                    q = dense::normalize(&q)?;
                }
                StrategyState::Dense {
                    initial: q.clone(),
                    query: q,
                    positives: Vec::new(),
                    negatives: Vec::new(),
                }
            }
            Strategy::Bm25Static | Strategy::Bm25Rm3Static => {
                let index = dataset.sparse_index();
                let terms = dataset.tokenizer().tokenize(&topic.title_query);
                let ranked = if config.strategy == Strategy::Bm25Static {
                    bm25_rank(index, &terms, &pool, &HashSet::new(), config.bm25)?
                } else {
                    bm25_rm3_rank(index, &terms, &pool, config.bm25, config.rm3)?
                };
                let position: std::collections::HashMap<&str, usize> = pool
                    .iter()
                    .enumerate()
                    .map(|(i, d)| (d.as_str(), i))
                    .collect();
                let order = ranked
                    .iter()
                    .map(|d| (position[d.doc_id.as_str()], d.score))
                    .collect();
                StrategyState::Static { order }
            }
            Strategy::TarLogistic => {
                let seed = config.seed.as_ref().expect("validated");
                let seed_vec = match seed.mode {
                    SeedMode::Title => dataset.topic_vector(&topic.topic_id)?,
                    SeedMode::Pos => {
                        let doc = seed.pos_doc_id.as_deref().expect("validated");
                        let pos = pool.iter().position(|d| d == doc).ok_or_else(|| {
                            Error::InvalidInput(format!(
                                "seed document `{doc}` is not in the pool of `{}`",
                                topic.topic_id
                            ))
                        })?;
                        feature(dataset, rows[pos], config.normalize)?
                    }
                };
                let seed_vec = if config.normalize && seed.mode == SeedMode::Title {
                    dense::normalize(&seed_vec)?
                } else {
                    seed_vec
                };
                StrategyState::Tar(TarState::new(vec![seed_vec], config.logistic)?)
            }
        };

        Ok(Self {
            remaining: pool.len(),
            status: vec![DocStatus::Remaining; pool.len()],
            pool,
            rows,
            config,
            iteration: 0,
            tokens_issued: 0,
            issued: None,
            batches: Vec::new(),
            strategy,
            finished: false,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    pub fn num_screened(&self) -> usize {
        self.batches.iter().map(|b| b.docs.len()).sum()
    }

    pub fn batches(&self) -> &[BatchRecord] {
        &self.batches
    }

    /// The current dense query (dense strategy only).
    pub fn current_query(&self) -> Option<&DenseVector> {
        match &self.strategy {
            StrategyState::Dense { query, .. } => Some(query),
            _ => None,
        }
    }

    pub fn tar_state(&self) -> Option<&TarState> {
        match &self.strategy {
            StrategyState::Tar(t) => Some(t),
            _ => None,
        }
    }

    pub fn outstanding_token(&self) -> Option<&str> {
        self.issued.as_ref().map(|b| b.token.as_str())
    }

    pub fn outstanding_batch(&self, dataset: &Dataset) -> Option<Batch> {
        self.issued.as_ref().map(|b| self.render(dataset, b))
    }

    fn render(&self, dataset: &Dataset, batch: &IssuedBatch) -> Batch {
        let docs = batch
            .docs
            .iter()
            .map(|&(pos, score)| {
                let doc_id = self.pool[pos].clone();
                let (title, abstract_text) = dataset
                    .corpus()
                    .get(&doc_id)
                    .map(|d| (d.title.clone(), d.abstract_text.clone()))
                    .unwrap_or_default();
                BatchDoc {
                    doc_id,
                    score,
                    title,
                    abstract_text,
                }
            })
            .collect();
        Batch {
            token: batch.token.clone(),
            iteration: self.iteration,
            docs,
        }
    }

    /// Issues the top `min(k, remaining)` documents of the current ranking.
    pub fn next_batch(&mut self, dataset: &Dataset) -> Result<Batch> {
        if self.finished {
            return Err(Error::Finished);
        }
        if self.issued.is_some() {
            return Err(Error::OutstandingBatch);
        }
        let docs = self.select(dataset);
        for &(pos, _) in &docs {
            self.status[pos] = DocStatus::Issued;
        }
        self.remaining -= docs.len();
        let token = format!("batch-{}", self.tokens_issued);
        self.tokens_issued += 1;
        let issued = IssuedBatch { token, docs };
        let batch = self.render(dataset, &issued);
        self.issued = Some(issued);
        Ok(batch)
    }

    fn remaining_positions(&self) -> Vec<usize> {
        (0..self.pool.len())
            .filter(|&p| self.status[p] == DocStatus::Remaining)
            .collect()
    }

    fn select(&self, dataset: &Dataset) -> Vec<(usize, f64)> {
        let k = self.config.k;
        let embeddings = dataset.embeddings();
        let inv_norms = self.config.normalize.then(|| embeddings.inv_norms());
        let id_of = |pos: usize| self.pool[pos].as_str();
        match &self.strategy {
            StrategyState::Static { order } => order
                .iter()
                .filter(|(pos, _)| self.status[*pos] == DocStatus::Remaining)
                .take(k)
                .copied()
                .collect(),
            StrategyState::Dense { query, .. } => {
                let positions = self.remaining_positions();
                let rows: Vec<usize> = positions.iter().map(|&p| self.rows[p]).collect();
                let scores = dense::score_rows(query.as_slice(), &rows, embeddings, inv_norms);
                let mut cands: Vec<(usize, f64)> = positions.into_iter().zip(scores).collect();
                dense::top_k(&mut cands, k, id_of);
                cands
            }
            StrategyState::Tar(tar) => {
                let positions = self.remaining_positions();
                let rows: Vec<usize> = positions.iter().map(|&p| self.rows[p]).collect();
                let scored = tar.score_rows(&rows, embeddings, inv_norms);
                // Order by the sort key, report the display score.
                let mut cands: Vec<(usize, f64)> = positions
                    .iter()
                    .zip(&scored)
                    .map(|(&p, &(_, key))| (p, key))
                    .collect();
                dense::top_k(&mut cands, k, id_of);
                let display: std::collections::HashMap<usize, f64> = positions
                    .iter()
                    .zip(&scored)
                    .map(|(&p, &(s, _))| (p, s))
                    .collect();
                cands.into_iter().map(|(p, _)| (p, display[&p])).collect()
            }
        }
    }

    /// Applies judgments for the outstanding batch. On any error the state
    /// is left unchanged.
    pub fn submit_feedback(
        &mut self,
        dataset: &Dataset,
        token: &str,
        judgments: &[Judgment],
    ) -> Result<()> {
        if self.finished {
            return Err(Error::Finished);
        }
        let Some(issued) = &self.issued else {
            return Err(Error::StaleToken(token.to_string()));
        };
        if issued.token != token {
            return Err(Error::StaleToken(token.to_string()));
        }
        let labels = self.match_judgments(issued, judgments)?;

        let strategy = self.updated_strategy(dataset, issued, &labels)?;

        let issued = self.issued.take().expect("checked above");
        let docs = issued
            .docs
            .iter()
            .zip(&labels)
            .map(|(&(pos, score), &relevant)| {
                self.status[pos] = DocStatus::Screened;
                JudgedDoc {
                    doc_id: self.pool[pos].clone(),
                    score,
                    relevant,
                }
            })
            .collect();
        self.batches.push(BatchRecord {
            iteration: self.iteration,
            docs,
        });
        self.strategy = strategy;
        self.iteration += 1;
        if self.remaining == 0 || self.config.max_iterations == Some(self.iteration) {
            self.finished = true;
        }
        Ok(())
    }

    /// Labels in issue order; judgments must cover the batch exactly once.
    fn match_judgments(&self, issued: &IssuedBatch, judgments: &[Judgment]) -> Result<Vec<bool>> {
        let mut labels: Vec<Option<bool>> = vec![None; issued.docs.len()];
        let slot: std::collections::HashMap<&str, usize> = issued
            .docs
            .iter()
            .enumerate()
            .map(|(i, &(pos, _))| (self.pool[pos].as_str(), i))
            .collect();
        for j in judgments {
            let &i = slot.get(j.doc_id.as_str()).ok_or_else(|| {
                Error::JudgmentMismatch(format!("`{}` is not in the issued batch", j.doc_id))
            })?;
            if labels[i].replace(j.relevant).is_some() {
                return Err(Error::JudgmentMismatch(format!(
                    "`{}` judged more than once",
                    j.doc_id
                )));
            }
        }
        if let Some(i) = labels.iter().position(Option::is_none) {
            return Err(Error::JudgmentMismatch(format!(
                "missing judgment for `{}`",
                self.pool[issued.docs[i].0]
            )));
        }
        Ok(labels.into_iter().map(|l| l.expect("all present")).collect())
    }

    fn updated_strategy(
        &self,
        dataset: &Dataset,
        issued: &IssuedBatch,
        labels: &[bool],
    ) -> Result<StrategyState> {
        let features = |relevant: bool| -> Result<Vec<DenseVector>> {
            issued
                .docs
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == relevant)
                .map(|(&(pos, _), _)| feature(dataset, self.rows[pos], self.config.normalize))
                .collect()
        };
        Ok(match &self.strategy {
            StrategyState::Static { order } => StrategyState::Static {
                order: order.clone(),
            },
            StrategyState::Dense {
                initial,
                query,
                positives,
                negatives,
            } => {
                let weights = self.config.weights.expect("validated");
                let new_pos = features(true)?;
                let new_neg = features(false)?;
                match self.config.feedback_scope {
                    FeedbackScope::Batch => StrategyState::Dense {
                        initial: initial.clone(),
                        query: rocchio_update(query, &new_pos, &new_neg, weights)?,
                        positives: Vec::new(),
                        negatives: Vec::new(),
                    },
                    FeedbackScope::Cumulative => {
                        let mut all_pos = positives.clone();
                        all_pos.extend(new_pos);
                        let mut all_neg = negatives.clone();
                        all_neg.extend(new_neg);
                        StrategyState::Dense {
                            initial: initial.clone(),
                            query: rocchio_update(initial, &all_pos, &all_neg, weights)?,
                            positives: all_pos,
                            negatives: all_neg,
                        }
                    }
                }
            }
            StrategyState::Tar(tar) => {
                let batch: Vec<String> = issued
                    .docs
                    .iter()
                    .map(|&(pos, _)| self.pool[pos].clone())
                    .collect();
                let judged = issued
                    .docs
                    .iter()
                    .zip(labels)
                    .map(|(&(pos, _), &l)| {
                        Ok((
                            self.pool[pos].clone(),
                            feature(dataset, self.rows[pos], self.config.normalize)?,
                            l,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                StrategyState::Tar(tar_step(tar, &batch, &judged)?)
            }
        })
    }

    pub fn terminal_reason(&self) -> Option<TerminalReason> {
        if !self.finished {
            None
        } else if self.remaining == 0 && self.issued.is_none() {
            Some(TerminalReason::Exhausted)
        } else {
            Some(TerminalReason::Cutoff)
        }
    }

    pub fn recall_curve(&self) -> Vec<CurvePoint> {
        let mut screened = 0;
        let mut found = 0;
        self.batches
            .iter()
            .map(|b| {
                screened += b.docs.len();
                found += b.docs.iter().filter(|d| d.relevant).count();
                CurvePoint {
                    screened,
                    relevant_found: found,
                }
            })
            .collect()
    }

    pub fn summary(&self, dataset: &Dataset) -> SessionSummary {
        let curve = self.recall_curve();
        let last = curve.last().copied().unwrap_or(CurvePoint {
            screened: 0,
            relevant_found: 0,
        });
        let mut rank = 0;
        let trace = self
            .batches
            .iter()
            .flat_map(|b| {
                b.docs.iter().map(move |d| (b.iteration, d))
            })
            .map(|(iteration, d)| {
                rank += 1;
                TraceRow {
                    rank,
                    doc_id: d.doc_id.clone(),
                    relevant: d.relevant,
                    iteration,
                }
            })
            .collect();
        SessionSummary {
            config: self.config.clone(),
            iteration: self.iteration,
            pool_size: self.pool.len(),
            screened: last.screened,
            relevant_found: last.relevant_found,
            remaining: self.remaining,
            finished: self.finished,
            recall_curve: curve,
            outstanding: self.outstanding_batch(dataset),
            trace,
        }
    }

    pub fn to_record(&self) -> ScreeningRecord {
        ScreeningRecord {
            collection: String::new(),
            config: self.config.clone(),
            pool_size: self.pool.len(),
            batches: self.batches.clone(),
            terminal_reason: self.terminal_reason(),
        }
    }
}

fn feature(dataset: &Dataset, row: usize, normalize: bool) -> Result<DenseVector> {
    let embeddings = dataset.embeddings();
    let v = DenseVector::from_f32(embeddings.row(row))?;
    if normalize {
        v.scaled(embeddings.inv_norms()[row])
    } else {
        Ok(v)
    }
}

/// Runs a session to completion with judgments taken from `qrels`
/// (absent documents are non-relevant).
pub fn run_simulation(
    config: SessionConfig,
    dataset: &Dataset,
    qrels: &Qrels,
) -> Result<ScreeningRecord> {
    if let Some(SeedConfig {
        mode: SeedMode::Pos,
        pos_doc_id: Some(doc),
    }) = &config.seed
    {
        if !qrels.is_relevant(&config.topic_id, doc) {
            return Err(Error::InvalidInput(format!(
                "seed document `{doc}` is not relevant for topic `{}`",
                config.topic_id
            )));
        }
    }
    let topic_id = config.topic_id.clone();
    let mut state = SessionState::start(config, dataset)?;
    while !state.is_finished() {
        let batch = state.next_batch(dataset)?;
        let judgments: Vec<Judgment> = batch
            .docs
            .iter()
            .map(|d| Judgment::new(d.doc_id.clone(), qrels.is_relevant(&topic_id, &d.doc_id)))
            .collect();
        state.submit_feedback(dataset, &batch.token, &judgments)?;
    }
    Ok(state.to_record())
}
