//! Synthetic corpora and oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

pub mod oracle;

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sylvec::{FilterLayout, TrainConfig};

pub const POSTPOSITIONS: [&str; 6] = ["을", "이", "은", "에", "의", "로"];

/// Distinct Hangul syllables that never collide with the postpositions.
pub struct SyllablePool {
    next: u32,
}

impl SyllablePool {
    pub fn new() -> Self {
        SyllablePool { next: 0 }
    }

    pub fn take(&mut self) -> char {
        loop {
            // 29 is coprime to the 11172 block size, so this visits every syllable once
            let c = char::from_u32(0xAC00 + (self.next * 29) % 11172).unwrap();
            self.next += 1;
            if !POSTPOSITIONS.iter().any(|p| p.starts_with(c)) {
                return c;
            }
        }
    }

    pub fn word(&mut self, syllables: usize) -> String {
        (0..syllables).map(|_| self.take()).collect()
    }
}

pub fn write_corpus(dir: &Path, name: &str, lines: &[String]) -> PathBuf {
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    for l in lines {
        writeln!(f, "{l}").unwrap();
    }
    path
}

/// Lines of words drawn from one of a few topics.
pub fn topic_corpus(lines: usize, topics: usize, words_per_topic: usize, seed: u64) -> Vec<String> {
    let mut pool = SyllablePool::new();
    let vocab: Vec<Vec<String>> = (0..topics)
        .map(|_| (0..words_per_topic).map(|i| pool.word(1 + i % 3)).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..lines)
        .map(|_| {
            let topic = &vocab[rng.random_range(0..topics)];
            let len = rng.random_range(6..=10);
            (0..len)
                .map(|_| topic.choose(&mut rng).unwrap().as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

/// Stems inflected with postpositions, with one inflected form per stem held
/// out of the corpus.
pub struct PostpositionCorpus {
    pub stems: Vec<String>,
    /// Held-out (never written) form for each stem.
    pub held_out: Vec<String>,
    pub lines: Vec<String>,
}

impl PostpositionCorpus {
    pub fn generate(stems: usize, lines_per_stem: usize, seed: u64) -> Self {
        let mut pool = SyllablePool::new();
        let topics = 10;
        let topic_words: Vec<Vec<String>> = (0..topics).map(|_| (0..6).map(|_| pool.word(2)).collect()).collect();
        // each postposition is followed by its own set of function words
        let function_words: Vec<Vec<String>> = POSTPOSITIONS.iter().map(|_| (0..3).map(|_| pool.word(2)).collect()).collect();
        let stem_words: Vec<String> = (0..stems).map(|_| pool.word(2)).collect();
        // words that only ever co-occur with one stem
        let private_words: Vec<Vec<String>> = (0..stems).map(|_| (0..2).map(|_| pool.word(2)).collect()).collect();
        let held_out_pp: Vec<usize> = (0..stems).map(|i| 1 + i % 5).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lines = Vec::with_capacity(stems * lines_per_stem);
        for _ in 0..lines_per_stem {
            for (i, stem) in stem_words.iter().enumerate() {
                let topic = &topic_words[i % topics];
                // form 6 is the bare stem
                let form = loop {
                    let f = rng.random_range(0..=POSTPOSITIONS.len());
                    if f != held_out_pp[i] {
                        break f;
                    }
                };
                let mut words: Vec<String> = Vec::new();
                words.push(topic.choose(&mut rng).unwrap().clone());
                words.push(private_words[i].choose(&mut rng).unwrap().clone());
                if form == POSTPOSITIONS.len() {
                    words.push(stem.clone());
                } else {
                    words.push(format!("{stem}{}", POSTPOSITIONS[form]));
                    words.push(function_words[form].choose(&mut rng).unwrap().clone());
                }
                words.push(private_words[i].choose(&mut rng).unwrap().clone());
                words.push(topic.choose(&mut rng).unwrap().clone());
                lines.push(words.join(" "));
            }
        }
        let held_out = stem_words
            .iter()
            .zip(&held_out_pp)
            .map(|(s, &p)| format!("{s}{}", POSTPOSITIONS[p]))
            .collect();
        PostpositionCorpus {
            stems: stem_words,
            held_out,
            lines,
        }
    }

    /// `(stem, stem + 을)` for every stem.
    pub fn object_pairs(&self) -> Vec<(String, String)> {
        self.stems.iter().map(|s| (s.clone(), format!("{s}을"))).collect()
    }
}

/// Small but otherwise default-shaped configuration for desk-scale runs.
pub fn small_config(dim: usize, filters_per_width: usize) -> TrainConfig {
    TrainConfig {
        dim,
        layout: FilterLayout::uniform(&[1, 2, 3, 4], filters_per_width).unwrap(),
        min_count: 1,
        ..TrainConfig::default()
    }
}
