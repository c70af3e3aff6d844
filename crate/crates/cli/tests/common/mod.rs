#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use semdiv_core::embeddings::{write_embeddings, EmbeddingMatrix};

pub const DIMS: usize = 8;

pub fn semdiv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semdiv"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn semdiv")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

/// Gaussian points around `centers[j]`, `counts[j]` of them per center.
pub fn planted(rng: &mut ChaCha8Rng, centers: &Array2<f64>, counts: &[usize], sigma: f64) -> Array2<f64> {
    let noise = Normal::new(0.0, sigma).unwrap();
    let d = centers.ncols();
    let mut rows = Vec::new();
    for (j, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            for t in 0..d {
                rows.push(centers[[j, t]] + noise.sample(rng));
            }
        }
    }
    Array2::from_shape_vec((rows.len() / d, d), rows).unwrap()
}

pub fn random_centers(rng: &mut ChaCha8Rng, k: usize, d: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((k, d), |_| rng.random_range(-scale..scale))
}

pub fn write_semb(path: &Path, x: &Array2<f64>) {
    let m = EmbeddingMatrix::new(x.mapv(|v| v as f32)).unwrap();
    write_embeddings(&m, path).unwrap();
}

pub fn write_corpus(path: &Path, n: usize, prefix: &str) {
    let words = ["yes", "no", "maybe", "great", "thanks", "sure", "why", "okay"];
    let mut text = String::new();
    for i in 0..n {
        let r = format!(
            "{} {} {}",
            words[i % words.len()],
            words[(i / 3) % words.len()],
            words[(i * 7 + 1) % words.len()]
        );
        text.push_str(&serde_json::json!({"id": format!("{prefix}{i}"), "response": r}).to_string());
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

/// Paths of a small end-to-end fixture: training corpus and embeddings drawn
/// from 4 planted clusters with a heavy head, plus generations that land in
/// every cluster.
pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub train: PathBuf,
    pub train_emb: PathBuf,
    pub gen: PathBuf,
    pub gen_emb: PathBuf,
}

pub fn fixture(seed: u64) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = random_centers(&mut rng, 4, DIMS, 5.0);
    let train_x = planted(&mut rng, &centers, &[120, 40, 25, 15], 0.3);
    let gen_x = planted(&mut rng, &centers, &[60, 60, 40, 40], 0.3);
    let train = dir.path().join("train.jsonl");
    let train_emb = dir.path().join("train.semb");
    let gen = dir.path().join("gen.jsonl");
    let gen_emb = dir.path().join("gen.semb");
    write_corpus(&train, train_x.nrows(), "t");
    write_semb(&train_emb, &train_x);
    write_corpus(&gen, gen_x.nrows(), "g");
    write_semb(&gen_emb, &gen_x);
    Fixture {
        dir,
        train,
        train_emb,
        gen,
        gen_emb,
    }
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
