#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use screenprio_cli::Overrides;

pub struct Fixture {
    pub dir: TempDir,
    pub manifest: PathBuf,
}

impl Fixture {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn opts(&self) -> Overrides {
        Overrides {
            manifest: self.manifest.clone(),
            ..Default::default()
        }
    }

    pub fn out(&self) -> PathBuf {
        self.path("out")
    }
}

/// Writes a small text collection: each topic has its own pool with
/// `relevant` documents that mention the topic's words.
pub fn write_fixture(topics: usize, pool: usize, relevant: usize, seed: u64) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<String> = (0..150).map(|i| format!("w{i}")).collect();
    let (mut corpus, mut topic_lines, mut pools, mut qrels) =
        (String::new(), String::new(), String::new(), String::new());
    for t in 0..topics {
        let tid = format!("T{t}");
        let words: Vec<String> = ["alpha", "beta", "gamma", "delta", "eps"].iter().map(|w| format!("{w}{t}")).collect();
        writeln!(topic_lines, r#"{{"topic_id":"{tid}","title_query":"{} {} {}"}}"#, words[0], words[1], words[2]).unwrap();
        let mut ids: Vec<usize> = (0..pool).collect();
        ids.shuffle(&mut rng);
        for (rank, i) in ids.into_iter().enumerate() {
            let did = format!("{tid}D{i:03}");
            let is_rel = rank < relevant;
            let mut text: Vec<String> = (0..12).map(|_| vocab.choose(&mut rng).unwrap().clone()).collect();
            let topical = if is_rel { rng.gen_range(2..=4) } else { rng.gen_range(0..=1) };
            for _ in 0..topical {
                let pos = rng.gen_range(0..text.len());
                text.insert(pos, words.choose(&mut rng).unwrap().clone());
            }
            let (title, abs) = text.split_at(4);
            writeln!(corpus, r#"{{"id":"{did}","title":"{}","abstract":"{}"}}"#, title.join(" "), abs.join(" ")).unwrap();
            writeln!(pools, "{tid} {did}").unwrap();
            writeln!(qrels, "{tid} 0 {did} {}", u8::from(is_rel)).unwrap();
        }
    }
    fs::write(dir.path().join("corpus.jsonl"), corpus).unwrap();
    fs::write(dir.path().join("topics.jsonl"), topic_lines).unwrap();
    fs::write(dir.path().join("pools.txt"), pools).unwrap();
    fs::write(dir.path().join("qrels.txt"), qrels).unwrap();
    let manifest = dir.path().join("screenprio.toml");
    fs::write(
        &manifest,
        r#"collection = "fixture"
seed = 11
out = "out"

[dataset]
corpus = "corpus.jsonl"
topics = "topics.jsonl"
pools = "pools.txt"
qrels = "qrels.txt"
embeddings = "embeddings.slv"

[embed]
dim = 64
"#,
    )
    .unwrap();
    let fx = Fixture { dir, manifest };
    screenprio_cli::commands::embed_synthetic(&fx.opts(), None, None).unwrap();
    fx
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn screenprio(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_screenprio"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    Output {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// All files under `dir`, relative path and contents, sorted.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, acc: &mut Vec<(PathBuf, Vec<u8>)>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, acc);
            } else {
                acc.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    let mut acc = Vec::new();
    walk(dir, dir, &mut acc);
    acc.sort();
    acc
}
