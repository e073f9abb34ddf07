//! Run manifest: one TOML file describing the dataset and experiment.
//!
//! Relative paths are resolved against the directory holding the manifest.
//!
//! ```toml
//! collection = "demo"
//! seed = 42
//! out = "out"
//!
//! [dataset]
//! corpus = "corpus.jsonl"
//! topics = "topics.jsonl"
//! pools = "pools.txt"
//! qrels = "qrels.txt"
//! embeddings = "embeddings.slv"
//!
//! [run]
//! strategy = "dense_rocchio"
//! weights = "1,1,1"
//! k = 25
//!
//! [sweep]
//! weights = ["1,1,1", "1,0.8,0.2", "1,0.5,0.5", "1,1,0"]
//! k = [5, 10, 15, 25, 50]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use screenprio_core::datastore::DatasetPaths;
use screenprio_core::dense::RocchioWeights;
use screenprio_core::session::{FeedbackScope, Strategy};
use screenprio_core::sparse::{Bm25Params, Rm3Params};
use screenprio_core::tar::{LogisticParams, SeedMode};

pub const DEFAULT_K_GRID: [usize; 5] = [5, 10, 15, 25, 50];
pub const DEFAULT_DIM: usize = 768;
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default = "default_collection")]
    pub collection: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub dataset: DatasetPaths,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub tar: TarSection,
    #[serde(default)]
    pub bm25: Bm25Params,
    #[serde(default)]
    pub rm3: Rm3Params,
    #[serde(default)]
    pub logistic: LogisticParams,
    #[serde(default)]
    pub embed: EmbedSection,
    #[serde(default)]
    pub serve: ServeSection,
}

fn default_collection() -> String {
    "default".into()
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub strategy: Option<Strategy>,
    pub weights: Option<String>,
    pub k: Option<usize>,
    /// Maximum number of iterations.
    pub cutoff: Option<usize>,
    pub topics: Option<Vec<String>>,
    #[serde(default)]
    pub feedback_scope: FeedbackScope,
    #[serde(default)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_weight_grid")]
    pub weights: Vec<String>,
    #[serde(default = "default_k_grid")]
    pub k: Vec<usize>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            weights: default_weight_grid(),
            k: default_k_grid(),
            strategies: default_strategies(),
        }
    }
}

fn default_weight_grid() -> Vec<String> {
    RocchioWeights::DEFAULT_GRID.iter().map(|w| format!("{},{},{}", w.alpha(), w.beta(), w.gamma())).collect()
}

fn default_k_grid() -> Vec<usize> {
    DEFAULT_K_GRID.to_vec()
}

fn default_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TarSection {
    #[serde(default)]
    pub seed_mode: Option<SeedMode>,
    /// Seed document per topic for `pos` mode. Topics not listed get a
    /// relevant pool document drawn with the manifest seed.
    #[serde(default)]
    pub pos_docs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedSection {
    #[serde(default = "default_dim")]
    pub dim: usize,
}

impl Default for EmbedSection {
    fn default() -> Self {
        Self { dim: default_dim() }
    }
}

fn default_dim() -> usize {
    DEFAULT_DIM
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeSection {
    pub bind: Option<String>,
    /// Journal directory; defaults to `<out>/journal`.
    pub journal: Option<PathBuf>,
}

impl Manifest {
    pub fn parse(text: &str, base: &Path) -> anyhow::Result<Self> {
        let mut m: Manifest = toml::from_str(text).context("invalid manifest")?;
        m.resolve(base);
        m.check()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).with_context(|| format!("in manifest {}", path.display()))
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let d = &mut self.dataset;
        for p in [&mut d.corpus, &mut d.topics, &mut d.pools, &mut d.qrels, &mut d.embeddings] {
            fix(p);
        }
        if let Some(p) = d.stopwords.as_mut() {
            fix(p);
        }
        fix(&mut self.out);
        if let Some(p) = self.serve.journal.as_mut() {
            fix(p);
        }
    }

    fn check(&self) -> anyhow::Result<()> {
        if self.sweep.weights.is_empty() || self.sweep.k.is_empty() || self.sweep.strategies.is_empty() {
            bail!("sweep grid must not be empty");
        }
        for w in &self.sweep.weights {
            w.parse::<RocchioWeights>().with_context(|| format!("sweep weights `{w}`"))?;
        }
        if let Some(w) = &self.run.weights {
            w.parse::<RocchioWeights>().with_context(|| format!("run weights `{w}`"))?;
        }
        if self.sweep.k.contains(&0) || self.run.k == Some(0) {
            bail!("k must be >= 1");
        }
        if self.run.cutoff == Some(0) {
            bail!("cutoff must be >= 1");
        }
        Ok(())
    }

    pub fn sweep_weights(&self) -> Vec<RocchioWeights> {
        self.sweep.weights.iter().map(|w| w.parse().expect("checked on load")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[dataset]
corpus = "c.jsonl"
topics = "t.jsonl"
pools = "p.txt"
qrels = "q.txt"
embeddings = "/abs/e.slv"
"#;

    #[test]
    fn defaults_and_relative_paths() {
        let m = Manifest::parse(MINIMAL, Path::new("/data/exp")).unwrap();
        assert_eq!(m.dataset.corpus, Path::new("/data/exp/c.jsonl"));
        assert_eq!(m.dataset.embeddings, Path::new("/abs/e.slv"));
        assert_eq!(m.out, Path::new("/data/exp/out"));
        assert_eq!(m.collection, "default");
        assert_eq!(m.sweep_weights(), RocchioWeights::DEFAULT_GRID);
        assert_eq!(m.sweep.k, DEFAULT_K_GRID);
        assert_eq!(m.sweep.strategies.len(), 4);
        assert_eq!(m.embed.dim, DEFAULT_DIM);
    }

    #[test]
    fn rejects_bad_values() {
        let bad_k = format!("{MINIMAL}\n[run]\nk = 0\n");
        assert!(Manifest::parse(&bad_k, Path::new(".")).is_err());
        let bad_w = format!("{MINIMAL}\n[sweep]\nweights = [\"1,-1,0\"]\n");
        assert!(Manifest::parse(&bad_w, Path::new(".")).is_err());
        let unknown = format!("{MINIMAL}\nbogus = 1\n");
        assert!(Manifest::parse(&unknown, Path::new(".")).is_err());
    }

    #[test]
    fn sections_parse() {
        let text = format!(
            "collection = \"clef\"\nseed = 7\n{MINIMAL}\n[run]\nstrategy = \"bm25_rm3_static\"\nk = 10\ncutoff = 20\n\n[tar]\nseed_mode = \"pos\"\npos_docs = {{ T1 = \"D3\" }}\n\n[rm3]\nfb_docs = 5\nfb_terms = 20\nlambda = 0.7\n"
        );
        let m = Manifest::parse(&text, Path::new(".")).unwrap();
        assert_eq!(m.run.strategy, Some(Strategy::Bm25Rm3Static));
        assert_eq!(m.run.cutoff, Some(20));
        assert_eq!(m.tar.seed_mode, Some(SeedMode::Pos));
        assert_eq!(m.tar.pos_docs["T1"], "D3");
        assert_eq!(m.rm3.fb_docs, 5);
        assert_eq!(m.seed, 7);
    }
}
