//! Logistic-regression active learning with continuous relevance feedback.
//!
//! Features are the same dense embeddings the Rocchio strategy uses. Until
//! both classes have been observed, documents are ranked by inner product
//! with the centroid of the positive examples (the seed included).

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::datastore::EmbeddingSet;
use crate::dense::{self, mean, ranking_order, DenseVector, ScoredDoc};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2_lambda: 0.01,
            learning_rate: 0.1,
            epochs: 200,
        }
    }
}

impl LogisticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_lambda.is_finite() && self.l2_lambda >= 0.0) {
            return Err(Error::InvalidInput("l2_lambda must be finite and >= 0".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidInput("learning_rate must be finite and > 0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: DenseVector,
    pub bias: f64,
    pub params: LogisticParams,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticModel {
    pub fn zero(dim: usize, params: LogisticParams) -> Self {
        Self {
            weights: DenseVector::zeros(dim),
            bias: 0.0,
            params,
        }
    }

    pub fn margin(&self, x: &DenseVector) -> Result<f64> {
        Ok(dense::inner_product(&self.weights, x)? + self.bias)
    }

    pub fn predict(&self, x: &DenseVector) -> Result<f64> {
        self.margin(x).map(sigmoid)
    }

    /// Mean log loss over `examples` plus `l2_lambda / 2 * ||w||^2`.
    pub fn loss(&self, examples: &[(DenseVector, bool)]) -> Result<f64> {
        let mut total = 0.0;
        for (x, y) in examples {
            let z = self.margin(x)?;
            // -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
            total += if *y { softplus(-z) } else { softplus(z) };
        }
        let reg: f64 = self.weights.as_slice().iter().map(|w| w * w).sum();
        Ok(total / examples.len().max(1) as f64 + 0.5 * self.params.l2_lambda * reg)
    }
}

/// Full-batch gradient descent from a zero initialisation.
pub fn fit_logistic(
    examples: &[(DenseVector, bool)],
    params: LogisticParams,
) -> Result<LogisticModel> {
    let weighted: Vec<(&DenseVector, bool, f64)> =
        examples.iter().map(|(x, y)| (x, *y, 1.0)).collect();
    fit_weighted(&weighted, params)
}

/// As [`fit_logistic`], with a non-negative weight per example. The loss is
/// normalised by the total weight, so an example listed twice and an example
/// with weight 2 give the same model.
pub fn fit_weighted(
    examples: &[(&DenseVector, bool, f64)],
    params: LogisticParams,
) -> Result<LogisticModel> {
    params.validate()?;
    let has_pos = examples.iter().any(|e| e.1 && e.2 > 0.0);
    let has_neg = examples.iter().any(|e| !e.1 && e.2 > 0.0);
    if !(has_pos && has_neg) {
        return Err(Error::SingleClass);
    }
    let dim = examples[0].0.dim();
    for (x, _, w) in examples {
        if x.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.dim(),
            });
        }
        if !(w.is_finite() && *w >= 0.0) {
            return Err(Error::InvalidInput("example weights must be finite and >= 0".into()));
        }
    }
    let total_weight: f64 = examples.iter().map(|e| e.2).sum();

    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    let mut grad = vec![0.0f64; dim];
    for _ in 0..params.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        for (x, y, weight) in examples {
            let z: f64 = w.iter().zip(x.as_slice()).map(|(a, c)| a * c).sum::<f64>() + b;
            let err = weight * (sigmoid(z) - if *y { 1.0 } else { 0.0 });
            for (g, c) in grad.iter_mut().zip(x.as_slice()) {
                *g += err * c;
            }
            grad_b += err;
        }
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= params.learning_rate * (g / total_weight + params.l2_lambda * *wi);
        }
        b -= params.learning_rate * grad_b / total_weight;
    }
    Ok(LogisticModel {
        weights: DenseVector::new(w)?,
        bias: b,
        params,
    })
}

/// Ranks `pool \ exclude` by `sigmoid(w.x + b)`, ordered by the raw margin
/// so saturated probabilities do not collapse into ties.
pub fn score_docs(
    model: &LogisticModel,
    pool: &[String],
    embeddings: &EmbeddingSet,
    exclude: &HashSet<String>,
) -> Result<Vec<ScoredDoc>> {
    if model.weights.dim() != embeddings.dim() {
        return Err(Error::DimensionMismatch {
            expected: embeddings.dim(),
            found: model.weights.dim(),
        });
    }
    let rows = pool
        .iter()
        .filter(|id| !exclude.contains(*id))
        .map(|id| {
            embeddings
                .row_of(id)
                .ok_or_else(|| Error::MissingEmbedding(id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let margins = model_margins(model, &rows, embeddings, None);
    let mut scored: Vec<(usize, f64)> = rows.into_iter().zip(margins).collect();
    scored.sort_by(|a, b| ranking_order(a.1, embeddings.id(a.0), b.1, embeddings.id(b.0)));
    Ok(scored
        .into_iter()
        .map(|(row, z)| ScoredDoc {
            doc_id: embeddings.id(row).to_string(),
            score: sigmoid(z),
        })
        .collect())
}

pub(crate) fn model_margins(
    model: &LogisticModel,
    rows: &[usize],
    embeddings: &EmbeddingSet,
    inv_norms: Option<&[f64]>,
) -> Vec<f64> {
    dense::score_rows(model.weights.as_slice(), rows, embeddings, inv_norms)
        .into_iter()
        .map(|s| s + model.bias)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// The encoded review title acts as one positive example.
    Title,
    /// One known relevant document acts as the positive example.
    Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedConfig {
    pub mode: SeedMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_doc_id: Option<String>,
}

impl SeedConfig {
    pub fn title() -> Self {
        Self {
            mode: SeedMode::Title,
            pos_doc_id: None,
        }
    }

    pub fn pos(doc_id: impl Into<String>) -> Self {
        Self {
            mode: SeedMode::Pos,
            pos_doc_id: Some(doc_id.into()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.mode, &self.pos_doc_id) {
            (SeedMode::Pos, None) => Err(Error::InvalidInput(
                "seed mode `pos` requires pos_doc_id".into(),
            )),
            (SeedMode::Title, Some(_)) => Err(Error::InvalidInput(
                "pos_doc_id is only valid with seed mode `pos`".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// What currently orders the remaining documents.
#[derive(Debug, Clone, PartialEq)]
pub enum TarScorer {
    /// Inner product with the positive-example centroid.
    Centroid(DenseVector),
    Logistic(LogisticModel),
}

/// Training state of one TAR session.
#[derive(Debug, Clone, PartialEq)]
pub struct TarState {
    params: LogisticParams,
    seed: Vec<DenseVector>,
    judged: Vec<(DenseVector, bool)>,
    scorer: TarScorer,
}

impl TarState {
    /// `seed` holds the positive seed example(s).
    pub fn new(seed: Vec<DenseVector>, params: LogisticParams) -> Result<Self> {
        params.validate()?;
        if seed.is_empty() {
            return Err(Error::InvalidInput("TAR needs at least one seed example".into()));
        }
        let centroid = mean(&seed, seed[0].dim())?;
        Ok(Self {
            params,
            seed,
            judged: Vec::new(),
            scorer: TarScorer::Centroid(centroid),
        })
    }

    pub fn scorer(&self) -> &TarScorer {
        &self.scorer
    }

    pub fn uses_model(&self) -> bool {
        matches!(self.scorer, TarScorer::Logistic(_))
    }

    pub fn num_judged(&self) -> usize {
        self.judged.len()
    }

    /// Seed examples (positive) followed by judged examples in order.
    pub fn training_set(&self) -> Vec<(DenseVector, bool)> {
        self.seed
            .iter()
            .map(|x| (x.clone(), true))
            .chain(self.judged.iter().cloned())
            .collect()
    }

    /// Scores for rows: probabilities under the model, raw inner products
    /// under the centroid. The second value of each pair is the sort key.
    pub(crate) fn score_rows(
        &self,
        rows: &[usize],
        embeddings: &EmbeddingSet,
        inv_norms: Option<&[f64]>,
    ) -> Vec<(f64, f64)> {
        match &self.scorer {
            TarScorer::Centroid(c) => dense::score_rows(c.as_slice(), rows, embeddings, inv_norms)
                .into_iter()
                .map(|s| (s, s))
                .collect(),
            TarScorer::Logistic(m) => model_margins(m, rows, embeddings, inv_norms)
                .into_iter()
                .map(|z| (sigmoid(z), z))
                .collect(),
        }
    }
}

/// Appends one judged batch and refreshes the scorer: a refit when both
/// classes are present, the positive centroid otherwise.
///
/// `batch` is the issued batch; every judgment must name one of its
/// documents.
pub fn tar_step(
    state: &TarState,
    batch: &[String],
    judgments: &[(String, DenseVector, bool)],
) -> Result<TarState> {
    let issued: HashMap<&str, ()> = batch.iter().map(|d| (d.as_str(), ())).collect();
    for (doc, _, _) in judgments {
        if !issued.contains_key(doc.as_str()) {
            return Err(Error::JudgmentMismatch(format!(
                "`{doc}` was not in the issued batch"
            )));
        }
    }
    let mut next = state.clone();
    next.judged
        .extend(judgments.iter().map(|(_, x, y)| (x.clone(), *y)));
    let training = next.training_set();
    let has_neg = training.iter().any(|(_, y)| !y);
    next.scorer = if has_neg {
        TarScorer::Logistic(fit_logistic(&training, next.params)?)
    } else {
        let positives: Vec<DenseVector> = training.into_iter().map(|(x, _)| x).collect();
        TarScorer::Centroid(mean(&positives, positives[0].dim())?)
    };
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> DenseVector {
        DenseVector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn separable_one_dimensional() {
        let ex = vec![(v(&[1.0]), true), (v(&[-1.0]), false)];
        let m = fit_logistic(&ex, LogisticParams::default()).unwrap();
        assert!(m.predict(&v(&[1.0])).unwrap() > m.predict(&v(&[-1.0])).unwrap());
        assert!(m.weights.as_slice()[0] > 0.0);
    }

    #[test]
    fn symmetric_data_cancels_first_step() {
        let ex = vec![
            (v(&[1.0]), true),
            (v(&[-1.0]), false),
            (v(&[-1.0]), true),
            (v(&[1.0]), false),
        ];
        let params = LogisticParams {
            epochs: 1,
            ..LogisticParams::default()
        };
        let m = fit_logistic(&ex, params).unwrap();
        assert!(m.weights.as_slice()[0].abs() <= params.learning_rate);
        assert_eq!(m.weights.as_slice()[0], 0.0);
    }

    #[test]
    fn duplicates_equal_double_weight() {
        let a = v(&[0.5, -1.0]);
        let b = v(&[-0.3, 0.8]);
        let dup = vec![(a.clone(), true), (a.clone(), true), (b.clone(), false)];
        let m1 = fit_logistic(&dup, LogisticParams::default()).unwrap();
        let m2 = fit_weighted(&[(&a, true, 2.0), (&b, false, 1.0)], LogisticParams::default()).unwrap();
        for (x, y) in m1.weights.as_slice().iter().zip(m2.weights.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((m1.bias - m2.bias).abs() < 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        let ex = vec![(v(&[1.0]), true), (v(&[2.0]), true)];
        assert!(matches!(
            fit_logistic(&ex, LogisticParams::default()),
            Err(Error::SingleClass)
        ));
        let bad = LogisticParams {
            epochs: 0,
            ..LogisticParams::default()
        };
        assert!(fit_logistic(&[(v(&[1.0]), true), (v(&[0.0]), false)], bad).is_err());
    }

    #[test]
    fn training_does_not_increase_loss() {
        let ex = vec![
            (v(&[1.0, 0.2]), true),
            (v(&[0.8, -0.1]), true),
            (v(&[-0.5, 0.4]), false),
            (v(&[-0.9, -0.3]), false),
            (v(&[0.1, 0.9]), false),
        ];
        let params = LogisticParams {
            learning_rate: 0.1,
            epochs: 100,
            l2_lambda: 0.01,
        };
        let fitted = fit_logistic(&ex, params).unwrap();
        let zero = LogisticModel::zero(2, params);
        assert!(fitted.loss(&ex).unwrap() <= zero.loss(&ex).unwrap());
    }

    fn emb(rows: &[(&str, f32)]) -> (EmbeddingSet, Vec<String>) {
        let mut e = EmbeddingSet::new(1).unwrap();
        for (id, x) in rows {
            e.insert(id, &[*x]).unwrap();
        }
        (e, rows.iter().map(|(id, _)| id.to_string()).collect())
    }

    #[test]
    fn score_docs_examples() {
        let (e, pool) = emb(&[("c", 0.3), ("a", 2.0), ("b", -2.0)]);
        let zero = LogisticModel::zero(1, LogisticParams::default());
        let r = score_docs(&zero, &pool, &e, &HashSet::new()).unwrap();
        assert!(r.iter().all(|d| d.score == 0.5));
        assert_eq!(r.iter().map(|d| d.doc_id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);

        let m = LogisticModel {
            weights: v(&[1.0]),
            bias: 0.0,
            params: LogisticParams::default(),
        };
        let r = score_docs(&m, &pool, &e, &HashSet::new()).unwrap();
        assert_eq!(r.iter().map(|d| d.doc_id.as_str()).collect::<Vec<_>>(), ["a", "c", "b"]);
        assert!(r[0].score > r[1].score);
    }

    #[test]
    fn saturated_margins_keep_raw_order() {
        let (e, pool) = emb(&[("a", 50.0), ("b", 60.0)]);
        let m = LogisticModel {
            weights: v(&[10.0]),
            bias: 0.0,
            params: LogisticParams::default(),
        };
        let r = score_docs(&m, &pool, &e, &HashSet::new()).unwrap();
        assert_eq!(r[0].doc_id, "b");
        assert_eq!(r[0].score, r[1].score);
    }

    #[test]
    fn tar_step_switches_to_model() {
        let state = TarState::new(vec![v(&[1.0, 0.0])], LogisticParams::default()).unwrap();
        assert!(!state.uses_model());
        let batch = vec!["d1".to_string(), "d2".to_string()];
        let only_pos = tar_step(&state, &batch, &[("d1".into(), v(&[0.9, 0.1]), true)]).unwrap();
        assert!(!only_pos.uses_model());
        let mixed = tar_step(
            &state,
            &batch,
            &[
                ("d1".into(), v(&[0.9, 0.1]), true),
                ("d2".into(), v(&[-0.8, 0.3]), false),
            ],
        )
        .unwrap();
        assert!(mixed.uses_model());
        assert_eq!(mixed.num_judged(), 2);
        // Deterministic.
        let again = tar_step(
            &state,
            &batch,
            &[
                ("d1".into(), v(&[0.9, 0.1]), true),
                ("d2".into(), v(&[-0.8, 0.3]), false),
            ],
        )
        .unwrap();
        assert_eq!(mixed, again);
    }

    #[test]
    fn tar_step_rejects_foreign_doc() {
        let state = TarState::new(vec![v(&[1.0])], LogisticParams::default()).unwrap();
        let err = tar_step(&state, &["d1".into()], &[("d9".into(), v(&[0.0]), false)]);
        assert!(matches!(err, Err(Error::JudgmentMismatch(_))));
    }

    #[test]
    fn seed_config_validation() {
        assert!(SeedConfig::title().validate().is_ok());
        assert!(SeedConfig::pos("D1").validate().is_ok());
        assert!(SeedConfig { mode: SeedMode::Pos, pos_doc_id: None }.validate().is_err());
    }
}
