#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn relevance(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relevance"))
        .args(args)
        .output()
        .expect("run relevance")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

pub const PROMPTS: &str = "\
uni\tMost university degrees are theoretical. Do you agree or disagree?
crime\tCrime does not pay. Discuss.
tv\tTelevision is the opium of the masses.
";

const WORDS: &[&str] = &[
    "Most",
    "university",
    "degrees",
    "are",
    "theoretical",
    ".",
    "Do",
    "you",
    "agree",
    "or",
    "disagree",
    "?",
    "Crime",
    "does",
    "not",
    "pay",
    "Discuss",
    "Television",
    "is",
    "the",
    "opium",
    "of",
    "masses",
    "students",
    "study",
    "police",
    "film",
];

impl Fixture {
    pub fn new() -> Self {
        let f = Fixture {
            dir: tempfile::tempdir().unwrap(),
        };
        f.write("prompts.tsv", PROMPTS);
        // Each prompt sentence as its own learner sentence.
        let mut sentences = String::new();
        for line in PROMPTS.lines() {
            let (id, text) = line.split_once('\t').unwrap();
            for (i, s) in relevance_core::corpus::split_sentences(text).into_iter().enumerate() {
                sentences.push_str(&format!("{id}\t{id}-e{i}\t{s}\n"));
            }
        }
        f.write("self.tsv", &sentences);
        f.write(
            "corpus.txt",
            "Most university degrees are theoretical .\nDo you agree or disagree ?\nstudents study\n\n\
             Crime does not pay .\nDiscuss .\npolice film\n\n\
             Television is the opium of the masses .\nfilm students\n",
        );
        let mut emb = format!("{} 6\n", WORDS.len() + 1);
        for (i, w) in WORDS.iter().enumerate() {
            let v: Vec<String> = (0..6)
                .map(|j| format!("{}", ((i * 7 + j * 13) % 11) as f64 / 10.0 - 0.45))
                .collect();
            emb.push_str(&format!("{w} {}\n", v.join(" ")));
        }
        emb.push_str("New_York 1 1 1 1 1 1\n");
        f.write("emb.txt", &emb);
        f
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn p(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    pub fn write(&self, name: &str, content: &str) -> PathBuf {
        let path = self.path(name);
        fs::write(&path, content).unwrap();
        path
    }

    pub fn read(&self, name: &str) -> String {
        fs::read_to_string(self.path(name)).unwrap()
    }

    pub fn build_idf(&self) {
        let out = relevance(&["idf", "--corpus", &self.p("corpus.txt"), "--out", &self.p("idf.tsv")]);
        assert!(out.status.success(), "{}", stderr(&out));
    }

    pub fn train(&self, out_name: &str, seed: &str) -> Output {
        relevance(&[
            "train",
            "--corpus",
            &self.p("corpus.txt"),
            "--embeddings",
            &self.p("emb.txt"),
            "--out",
            &self.p(out_name),
            "--seed",
            seed,
        ])
    }
}

pub fn exists(path: &Path) -> bool {
    path.exists()
}
