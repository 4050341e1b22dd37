//! Syllable-compositional word embeddings for Korean.
//!
//! Words are split into syllables, each syllable gets a trainable vector, and
//! a bank of convolution filters of several widths followed by max pooling
//! turns the syllable sequence into a word vector. Syllable vectors and
//! filters are trained jointly with skip-gram negative sampling. Because the
//! word vector is a function of its syllables, words never seen during
//! training still get a representation.
//!
//! The crate also carries a word-level skip-gram baseline, the evaluation
//! procedures used to compare the two (cosine similarity, nearest neighbours,
//! Pearson word-similarity scoring, PCA projections of postposition pairs) and
//! a binary model file format.

pub mod baseline;
pub mod cli;
pub mod compose;
pub mod config;
pub mod error;
pub mod eval;
pub mod export;
pub mod linalg;
pub mod model_file;
pub mod pca;
pub mod sampling;
pub mod text;
pub mod trainer;

pub use baseline::{baseline_vector, train_baseline, BaselineModel};
pub use compose::{compose_gradients, compose_word, init_params, ComposerGrads, ComposerParams, WordRepr};
pub use config::{FilterLayout, TrainConfig};
pub use error::{Error, Result};
pub use linalg::Real;
pub use text::{build_syllable_inventory, build_vocab, decompose_syllables, tokenize, SyllableInventory, Token, Vocabulary};
pub use trainer::{train, Model, OutputEmbeddings, TrainReport};
