use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::datastore::{
    attach_pools, parse_corpus, parse_pools, parse_qrels, parse_topics, topic_key,
    validate_dataset, Corpus, EmbeddingSet, Qrels, Topic, ValidationReport,
};
use crate::dense::DenseVector;
use crate::error::{Error, Result};
use crate::sparse::{build_index_with, InvertedIndex, Tokenizer};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    pub corpus: PathBuf,
    pub topics: PathBuf,
    pub pools: PathBuf,
    pub qrels: PathBuf,
    pub embeddings: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopwords: Option<PathBuf>,
}

/// Everything a session needs, immutable once built.
#[derive(Debug)]
pub struct Dataset {
    corpus: Corpus,
    topics: Vec<Topic>,
    topic_index: HashMap<String, usize>,
    qrels: Qrels,
    embeddings: EmbeddingSet,
    tokenizer: Tokenizer,
    sparse: OnceLock<InvertedIndex>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

impl Dataset {
    pub fn new(
        corpus: Corpus,
        topics: Vec<Topic>,
        qrels: Qrels,
        embeddings: EmbeddingSet,
    ) -> Result<Self> {
        let mut topic_index = HashMap::with_capacity(topics.len());
        for (i, t) in topics.iter().enumerate() {
            if topic_index.insert(t.topic_id.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate topic `{}`",
                    t.topic_id
                )));
            }
        }
        Ok(Self {
            corpus,
            topics,
            topic_index,
            qrels,
            embeddings,
            tokenizer: Tokenizer::default(),
            sparse: OnceLock::new(),
        })
    }

    pub fn with_tokenizer(mut self, tokenizer: Tokenizer) -> Self {
        self.tokenizer = tokenizer;
        self.sparse = OnceLock::new();
        self
    }

    pub fn load(paths: &DatasetPaths) -> Result<Self> {
        let name = |p: &Path| p.display().to_string();
        let docs = parse_corpus(open(&paths.corpus)?, &name(&paths.corpus))?;
        let mut topics = parse_topics(open(&paths.topics)?, &name(&paths.topics))?;
        let pools = parse_pools(open(&paths.pools)?, &name(&paths.pools))?;
        attach_pools(&mut topics, pools)?;
        let qrels = parse_qrels(open(&paths.qrels)?, &name(&paths.qrels))?;
        let embeddings = EmbeddingSet::load(&paths.embeddings)?;
        let mut dataset = Self::new(Corpus::new(docs)?, topics, qrels, embeddings)?;
        if let Some(path) = &paths.stopwords {
            let mut words = Vec::new();
            for line in open(path)?.lines() {
                words.push(line.map_err(|e| Error::io(path, e))?);
            }
            dataset = dataset.with_tokenizer(Tokenizer::with_stopwords(words));
        }
        Ok(dataset)
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn topics(&self) -> &[Topic] {
        &self.topics
    }

    pub fn topic(&self, topic_id: &str) -> Result<&Topic> {
        self.topic_index
            .get(topic_id)
            .map(|&i| &self.topics[i])
            .ok_or_else(|| Error::UnknownTopic(topic_id.to_string()))
    }

    pub fn qrels(&self) -> &Qrels {
        &self.qrels
    }

    pub fn embeddings(&self) -> &EmbeddingSet {
        &self.embeddings
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    /// The topic's encoded working title.
    pub fn topic_vector(&self, topic_id: &str) -> Result<DenseVector> {
        self.topic(topic_id)?;
        self.embeddings.vector(&topic_key(topic_id))
    }

    /// BM25 index over the whole corpus, built on first use.
    pub fn sparse_index(&self) -> &InvertedIndex {
        self.sparse.get_or_init(|| {
            build_index_with(self.corpus.docs(), &self.tokenizer)
                .expect("corpus ids are unique by construction")
        })
    }

    pub fn validate(&self) -> ValidationReport {
        validate_dataset(&self.corpus, &self.topics, &self.qrels, &self.embeddings)
    }
}
