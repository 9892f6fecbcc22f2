//! Shared helpers for the integration and acceptance suites.

#![allow(dead_code)]

pub mod qp_oracle;

use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn mini_lexicon_path() -> PathBuf {
    fixture("mini_lexicon.jsonl")
}

pub fn mini_corpus_path() -> PathBuf {
    fixture("mini_corpus.tsv")
}

pub fn essays_dir() -> PathBuf {
    fixture("essays")
}

pub fn essay_scores_path() -> PathBuf {
    fixture("essay_scores.tsv")
}

/// Deterministic uniform f64 in [0, 1) from a seeded generator.
pub fn uniform01<R: rand::Rng>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}

/// Standard normal via Box-Muller, so tests stay free of extra dependencies.
pub fn standard_normal<R: rand::Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Upper critical values of the chi-square distribution at alpha = 0.01.
pub fn chi_square_critical_01(df: usize) -> f64 {
    const TABLE: [f64; 10] = [
        6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090, 21.666, 23.209,
    ];
    TABLE[df - 1]
}
