//! Dense vectors, exact inner-product ranking and the Rocchio query update.
//!
//! Query-side vectors are held in `f64`; stored document embeddings are `f32`
//! rows of an [`EmbeddingSet`]. Every dot product accumulates in `f64`.

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datastore::EmbeddingSet;
use crate::error::{Error, Result};

/// Below this many candidates scoring stays on the calling thread.
const PARALLEL_THRESHOLD: usize = 4096;

/// A fixed-length vector of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(components))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn from_f32(components: &[f32]) -> Result<Self> {
        Self::new(components.iter().map(|&c| f64::from(c)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|c| c * factor).collect())
    }
}

impl TryFrom<Vec<f64>> for DenseVector {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<DenseVector> for Vec<f64> {
    fn from(value: DenseVector) -> Self {
        value.0
    }
}

/// The (α, β, γ) weights of the query, the relevant centroid and the
/// non-relevant centroid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights")]
pub struct RocchioWeights {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

#[derive(Deserialize)]
struct RawWeights {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl TryFrom<RawWeights> for RocchioWeights {
    type Error = Error;

    fn try_from(raw: RawWeights) -> Result<Self> {
        Self::new(raw.alpha, raw.beta, raw.gamma)
    }
}

impl RocchioWeights {
    /// Weights that leave the query untouched.
    pub const NO_FEEDBACK: RocchioWeights = RocchioWeights {
        alpha: 1.0,
        beta: 0.0,
        gamma: 0.0,
    };

    /// The four feedback settings of the default experiment grid.
    pub const DEFAULT_GRID: [RocchioWeights; 4] = [
        RocchioWeights {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        },
        RocchioWeights {
            alpha: 1.0,
            beta: 0.8,
            gamma: 0.2,
        },
        RocchioWeights {
            alpha: 1.0,
            beta: 0.5,
            gamma: 0.5,
        },
        RocchioWeights {
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.0,
        },
    ];

    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        for (name, value) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "Rocchio weight {name} must be finite and non-negative, got {value}"
                )));
            }
        }
        Ok(Self { alpha, beta, gamma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Default for RocchioWeights {
    fn default() -> Self {
        Self::DEFAULT_GRID[0]
    }
}

impl std::fmt::Display for RocchioWeights {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.alpha, self.beta, self.gamma)
    }
}

impl std::str::FromStr for RocchioWeights {
    type Err = Error;

    /// Parses `alpha,beta,gamma`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "expected three comma-separated weights, got `{s}`"
            )));
        }
        let mut values = [0.0; 3];
        for (slot, part) in values.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad weight `{part}` in `{s}`")))?;
        }
        Self::new(values[0], values[1], values[2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

/// Descending score, then ascending doc id bytes.
pub fn ranking_order(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score
        .partial_cmp(&a_score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a_id.as_bytes().cmp(b_id.as_bytes()))
}

pub fn sort_ranking(docs: &mut [ScoredDoc]) {
    docs.sort_by(|a, b| ranking_order(a.score, &a.doc_id, b.score, &b.doc_id));
}

pub fn inner_product(a: &DenseVector, b: &DenseVector) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum())
}

/// Dot product of an `f64` query with an `f32` embedding row.
#[inline]
pub(crate) fn dot_row(query: &[f64], row: &[f32]) -> f64 {
    debug_assert_eq!(query.len(), row.len());
    let mut acc = [0.0f64; 4];
    let q_chunks = query.chunks_exact(4);
    let r_chunks = row.chunks_exact(4);
    let q_rest = q_chunks.remainder();
    let r_rest = r_chunks.remainder();
    for (q, r) in q_chunks.zip(r_chunks) {
        acc[0] += q[0] * f64::from(r[0]);
        acc[1] += q[1] * f64::from(r[1]);
        acc[2] += q[2] * f64::from(r[2]);
        acc[3] += q[3] * f64::from(r[3]);
    }
    let mut tail = 0.0;
    for (q, r) in q_rest.iter().zip(r_rest) {
        tail += q * f64::from(*r);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Component-wise mean; the mean of no vectors is the zero vector.
pub fn mean(vectors: &[DenseVector], dim: usize) -> Result<DenseVector> {
    let mut sum = vec![0.0; dim];
    for v in vectors {
        check_dim(dim, v.dim())?;
        for (s, c) in sum.iter_mut().zip(&v.0) {
            *s += c;
        }
    }
    if !vectors.is_empty() {
        let n = vectors.len() as f64;
        for s in &mut sum {
            *s /= n;
        }
    }
    DenseVector::new(sum)
}

/// `alpha * query + beta * mean(positives) - gamma * mean(negatives)`.
///
/// An empty list contributes the zero vector, so empty feedback with
/// `alpha = 1` returns the query unchanged. The result is not re-normalized.
pub fn rocchio_update(
    query: &DenseVector,
    positives: &[DenseVector],
    negatives: &[DenseVector],
    weights: RocchioWeights,
) -> Result<DenseVector> {
    let dim = query.dim();
    let pos = mean(positives, dim)?;
    let neg = mean(negatives, dim)?;
    let updated = query
        .0
        .iter()
        .zip(&pos.0)
        .zip(&neg.0)
        .map(|((q, p), n)| weights.alpha * q + weights.beta * p - weights.gamma * n)
        .collect();
    DenseVector::new(updated)
}

pub fn normalize(v: &DenseVector) -> Result<DenseVector> {
    let norm = v.norm();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    DenseVector::new(v.0.iter().map(|c| c / norm).collect())
}

/// Exact ranking of `pool \ exclude` by inner product with `query`.
pub fn rank(
    query: &DenseVector,
    pool: &[String],
    embeddings: &EmbeddingSet,
    exclude: &HashSet<String>,
) -> Result<Vec<ScoredDoc>> {
    check_dim(embeddings.dim(), query.dim())?;
    let rows = pool
        .iter()
        .filter(|id| !exclude.contains(*id))
        .map(|id| {
            embeddings
                .row_of(id)
                .ok_or_else(|| Error::MissingEmbedding(id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let scores = score_rows(query.as_slice(), &rows, embeddings, None);
    let mut ranked: Vec<ScoredDoc> = rows
        .iter()
        .zip(scores)
        .map(|(&row, score)| ScoredDoc {
            doc_id: embeddings.id(row).to_string(),
            score,
        })
        .collect();
    sort_ranking(&mut ranked);
    Ok(ranked)
}

/// Scores each row; `inv_norms`, when given, rescales row `r` by
/// `inv_norms[r]` (cosine scoring over unnormalized storage).
pub(crate) fn score_rows(
    query: &[f64],
    rows: &[usize],
    embeddings: &EmbeddingSet,
    inv_norms: Option<&[f64]>,
) -> Vec<f64> {
    let score = |&row: &usize| {
        let s = dot_row(query, embeddings.row(row));
        match inv_norms {
            Some(scale) => s * scale[row],
            None => s,
        }
    };
    if rows.len() >= PARALLEL_THRESHOLD {
        rows.par_iter().map(score).collect()
    } else {
        rows.iter().map(score).collect()
    }
}

/// Sorts `(key, score)` candidates into ranking order and keeps the first
/// `k`. `id_of` supplies the tie-break id for a key.
pub(crate) fn top_k<'a, K: Copy>(
    candidates: &mut Vec<(K, f64)>,
    k: usize,
    id_of: impl Fn(K) -> &'a str,
) {
    let cmp = |a: &(K, f64), b: &(K, f64)| ranking_order(a.1, id_of(a.0), b.1, id_of(b.0));
    if k < candidates.len() {
        if k > 0 {
            candidates.select_nth_unstable_by(k - 1, cmp);
        }
        candidates.truncate(k);
    }
    candidates.sort_by(cmp);
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(c: &[f64]) -> DenseVector {
        DenseVector::new(c.to_vec()).unwrap()
    }

    fn set(rows: &[(&str, &[f32])]) -> EmbeddingSet {
        let mut s = EmbeddingSet::new(rows[0].1.len()).unwrap();
        for (id, r) in rows {
            s.insert(id, r).unwrap();
        }
        s
    }

    fn ids(ranked: &[ScoredDoc]) -> Vec<&str> {
        ranked.iter().map(|d| d.doc_id.as_str()).collect()
    }

    #[test]
    fn inner_product_examples() {
        assert_eq!(inner_product(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(inner_product(&v(&[1.0, 2.0]), &v(&[3.0, 4.0])).unwrap(), 11.0);
        let u = normalize(&v(&[1.0, 2.0, 2.0])).unwrap();
        assert!((inner_product(&u, &u).unwrap() - 1.0).abs() < 1e-7);
        assert!(matches!(
            inner_product(&v(&[1.0]), &v(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rocchio_examples() {
        let w = RocchioWeights::new(1.0, 1.0, 0.0).unwrap();
        let out = rocchio_update(&v(&[1.0, 0.0]), &[v(&[0.0, 1.0])], &[], w).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 1.0]);

        let w = RocchioWeights::new(1.0, 1.0, 1.0).unwrap();
        let out = rocchio_update(
            &v(&[1.0, 0.0]),
            &[v(&[2.0, 0.0]), v(&[0.0, 2.0])],
            &[v(&[-1.0, 0.0])],
            w,
        )
        .unwrap();
        assert_eq!(out.as_slice(), &[3.0, 1.0]);

        let q = v(&[0.3, -0.7, 2.5]);
        let w = RocchioWeights::new(1.0, 0.8, 0.2).unwrap();
        assert_eq!(rocchio_update(&q, &[], &[], w).unwrap(), q);
    }

    #[test]
    fn rocchio_rejects_mixed_dims() {
        let w = RocchioWeights::default();
        assert!(rocchio_update(&v(&[1.0, 0.0]), &[v(&[1.0])], &[], w).is_err());
        assert!(rocchio_update(&v(&[1.0, 0.0]), &[], &[v(&[1.0, 2.0, 3.0])], w).is_err());
    }

    #[test]
    fn weights_validation_and_parsing() {
        assert!(RocchioWeights::new(-0.1, 1.0, 1.0).is_err());
        assert!(RocchioWeights::new(1.0, f64::NAN, 1.0).is_err());
        let w: RocchioWeights = "1, 0.8,0.2".parse().unwrap();
        assert_eq!((w.alpha(), w.beta(), w.gamma()), (1.0, 0.8, 0.2));
        assert!("1,2".parse::<RocchioWeights>().is_err());
        assert!(serde_json::from_str::<RocchioWeights>(r#"{"alpha":1,"beta":-1,"gamma":0}"#).is_err());
    }

    #[test]
    fn normalize_examples() {
        let n = normalize(&v(&[3.0, 4.0])).unwrap();
        assert!((n.as_slice()[0] - 0.6).abs() < 1e-12);
        assert!((n.as_slice()[1] - 0.8).abs() < 1e-12);
        let again = normalize(&n).unwrap();
        for (a, b) in again.as_slice().iter().zip(n.as_slice()) {
            assert!((a - b).abs() < 1e-7);
        }
        assert!(matches!(normalize(&v(&[0.0, 0.0])), Err(Error::ZeroNorm)));
    }

    #[test]
    fn non_finite_vectors_rejected() {
        assert!(DenseVector::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(DenseVector::from_f32(&[f32::NAN]).is_err());
    }

    #[test]
    fn rank_examples() {
        let emb = set(&[("D1", &[0.9, 0.0]), ("D2", &[0.1, 0.0])]);
        let pool = vec!["D2".to_string(), "D1".to_string()];
        let ranked = rank(&v(&[1.0, 0.0]), &pool, &emb, &HashSet::new()).unwrap();
        assert_eq!(ids(&ranked), ["D1", "D2"]);

        let emb = set(&[("D2", &[0.5, 0.5]), ("D1", &[0.5, 0.5])]);
        let ranked = rank(&v(&[1.0, 0.0]), &pool, &emb, &HashSet::new()).unwrap();
        assert_eq!(ids(&ranked), ["D1", "D2"]);

        let exclude: HashSet<String> = pool.iter().cloned().collect();
        assert!(rank(&v(&[1.0, 0.0]), &pool, &emb, &exclude).unwrap().is_empty());
    }

    #[test]
    fn rank_missing_embedding_names_doc() {
        let emb = set(&[("D1", &[1.0, 0.0])]);
        let pool = vec!["D1".to_string(), "D9".to_string()];
        match rank(&v(&[1.0, 0.0]), &pool, &emb, &HashSet::new()) {
            Err(Error::MissingEmbedding(id)) => assert_eq!(id, "D9"),
            other => panic!("unexpected {other:?}"),
        }
        // Excluded documents need no embedding.
        let exclude: HashSet<String> = ["D9".to_string()].into();
        assert_eq!(rank(&v(&[1.0, 0.0]), &pool, &emb, &exclude).unwrap().len(), 1);
    }

    #[test]
    fn zero_and_negative_zero_scores_tie() {
        let emb = set(&[("B", &[0.0, 1.0]), ("A", &[0.0, -1.0])]);
        let pool = vec!["B".to_string(), "A".to_string()];
        let ranked = rank(&v(&[1.0, 0.0]), &pool, &emb, &HashSet::new()).unwrap();
        assert_eq!(ids(&ranked), ["A", "B"]);
    }

    #[test]
    fn top_k_matches_full_sort_prefix() {
        let mut all: Vec<(usize, f64)> = (0..50).map(|i| (i, ((i * 7919) % 13) as f64)).collect();
        let names: Vec<String> = (0..50).map(|i| format!("d{i:02}")).collect();
        let mut full = all.clone();
        top_k(&mut full, usize::MAX, |i| names[i].as_str());
        top_k(&mut all, 10, |i| names[i].as_str());
        assert_eq!(all, full[..10]);
    }

    fn arb_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, dim)
    }

    proptest! {
        #[test]
        fn identity_weights_return_query_exactly(
            q in arb_vec(6),
            p in proptest::collection::vec(arb_vec(6), 0..5),
            n in proptest::collection::vec(arb_vec(6), 0..5),
        ) {
            let q = v(&q);
            let p: Vec<_> = p.iter().map(|x| v(x)).collect();
            let n: Vec<_> = n.iter().map(|x| v(x)).collect();
            let out = rocchio_update(&q, &p, &n, RocchioWeights::NO_FEEDBACK).unwrap();
            prop_assert_eq!(out, q);
        }

        #[test]
        fn rocchio_permutation_invariant(
            q in arb_vec(4),
            p in proptest::collection::vec(arb_vec(4), 1..6),
            n in proptest::collection::vec(arb_vec(4), 1..6),
            shift in 0usize..6,
        ) {
            let w = RocchioWeights::new(1.0, 0.8, 0.2).unwrap();
            let q = v(&q);
            let p: Vec<_> = p.iter().map(|x| v(x)).collect();
            let n: Vec<_> = n.iter().map(|x| v(x)).collect();
            let mut p2 = p.clone();
            p2.rotate_left(shift % p.len());
            let mut n2 = n.clone();
            n2.reverse();
            let a = rocchio_update(&q, &p, &n, w).unwrap();
            let b = rocchio_update(&q, &p2, &n2, w).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn rocchio_is_linear(
            q in arb_vec(5),
            p in proptest::collection::vec(arb_vec(5), 0..4),
            n in proptest::collection::vec(arb_vec(5), 0..4),
            c in 0.01f64..50.0,
            (a, b, g) in (0.0f64..2.0, 0.0f64..2.0, 0.0f64..2.0),
        ) {
            let w = RocchioWeights::new(a, b, g).unwrap();
            let q = v(&q);
            let p: Vec<_> = p.iter().map(|x| v(x)).collect();
            let n: Vec<_> = n.iter().map(|x| v(x)).collect();
            let lhs = rocchio_update(&q, &p, &n, w).unwrap().scaled(c).unwrap();
            let scale = |xs: &[DenseVector]| xs.iter().map(|x| x.scaled(c).unwrap()).collect::<Vec<_>>();
            let rhs = rocchio_update(&q.scaled(c).unwrap(), &scale(&p), &scale(&n), w).unwrap();
            for (x, y) in lhs.as_slice().iter().zip(rhs.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-6 * x.abs().max(y.abs()).max(1e-12) + 1e-12);
            }
        }

        #[test]
        fn positive_query_scaling_preserves_order(
            q in arb_vec(3),
            rows in proptest::collection::vec(proptest::collection::vec(-1.0f32..1.0, 3), 1..30),
            c in 0.1f64..10.0,
        ) {
            let mut emb = EmbeddingSet::new(3).unwrap();
            let pool: Vec<String> = (0..rows.len()).map(|i| format!("D{i}")).collect();
            for (id, r) in pool.iter().zip(&rows) {
                emb.insert(id, r).unwrap();
            }
            let q = v(&q);
            let a = rank(&q, &pool, &emb, &HashSet::new()).unwrap();
            let b = rank(&q.scaled(c).unwrap(), &pool, &emb, &HashSet::new()).unwrap();
            // Scores that differ only in rounding may swap; compare orders
            // up to exact score ties.
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.score * c - y.score).abs() <= 1e-9 * (1.0 + y.score.abs()));
            }
            let a_ids: Vec<_> = a.iter().map(|d| &d.doc_id).collect();
            let b_ids: Vec<_> = b.iter().map(|d| &d.doc_id).collect();
            let distinct = a.windows(2).all(|w| (w[0].score - w[1].score).abs() > 1e-9);
            if distinct {
                prop_assert_eq!(a_ids, b_ids);
            }
        }
    }
}
