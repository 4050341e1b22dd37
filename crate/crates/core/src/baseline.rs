//! Word-level skip-gram baseline: the center representation is a direct
//! lookup in an input table, so words outside the vocabulary have no vector.

use std::path::Path;

use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::linalg::{axpy, Real};
use crate::sampling::{stream_rng, Stream};
use crate::text::{build_vocab_with, Vocabulary};
use crate::trainer::{encode_corpus, run_training, CenterEncoder, EpochStats, OutputEmbeddings, TrainReport};

/// Input (center) vectors, one column of length `dim` per vocabulary word.
#[derive(Clone, Debug, PartialEq)]
pub struct LookupTable<F> {
    table: OutputEmbeddings<F>,
}

impl<F: Real> LookupTable<F> {
    /// Uniform in `[-0.5/dim, 0.5/dim]`.
    pub fn random(dim: usize, words: usize, seed: u64) -> Self {
        use rand::Rng;
        let mut rng = stream_rng(seed, Stream::Init);
        let mut table = OutputEmbeddings::zeros(dim, words);
        let half = 0.5 / dim as f64;
        for id in 0..words as u32 {
            for x in table.vector_mut(id) {
                *x = F::from_f64(half * (2.0 * rng.random::<f64>() - 1.0));
            }
        }
        LookupTable { table }
    }

    pub fn zeros(dim: usize, words: usize) -> Self {
        LookupTable {
            table: OutputEmbeddings::zeros(dim, words),
        }
    }

    pub(crate) fn from_table(table: OutputEmbeddings<F>) -> Self {
        LookupTable { table }
    }

    pub fn table(&self) -> &OutputEmbeddings<F> {
        &self.table
    }

    pub fn vector(&self, id: u32) -> &[F] {
        self.table.vector(id)
    }

    pub fn vector_mut(&mut self, id: u32) -> &mut [F] {
        self.table.vector_mut(id)
    }
}

impl<F: Real> CenterEncoder<F> for LookupTable<F> {
    type Repr = Vec<F>;
    type Grads = Vec<f64>;

    fn repr_dim(&self) -> usize {
        self.table.dim()
    }

    fn encode(&self, _vocab: &Vocabulary, word: u32) -> Result<Vec<F>> {
        Ok(self.table.vector(word).to_vec())
    }

    fn gradients(&self, _vocab: &Vocabulary, _word: u32, _repr: &Vec<F>, upstream: &[f64]) -> Result<Vec<f64>> {
        Ok(upstream.to_vec())
    }

    fn update(&mut self, _vocab: &Vocabulary, word: u32, _repr: &Vec<F>, upstream: &[f64], lr: f64) {
        axpy(-lr, upstream, self.table.vector_mut(word));
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineModel<F = f32> {
    pub vocab: Vocabulary,
    pub input: LookupTable<F>,
    pub output: OutputEmbeddings<F>,
    pub config: TrainConfig,
}

impl<F: Real> BaselineModel<F> {
    pub fn new(vocab: Vocabulary, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let h = config.repr_dim();
        let input = LookupTable::random(h, vocab.len(), config.seed);
        let output = OutputEmbeddings::zeros(h, vocab.len());
        Ok(BaselineModel {
            vocab,
            input,
            output,
            config,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.input.table();
        if t.len() != self.vocab.len() || self.output.len() != self.vocab.len() || t.dim() != self.output.dim() {
            return Err(Error::Format("baseline tables do not match the vocabulary".into()));
        }
        Ok(())
    }

    pub fn repr_dim(&self) -> usize {
        self.output.dim()
    }

    pub fn sgns_step(&mut self, center: u32, context: u32, negatives: &[u32], lr: f64) -> Result<f64> {
        crate::trainer::sgns_step(&mut self.input, &mut self.output, &self.vocab, center, context, negatives, lr)
    }

    pub fn sgns_loss(&self, center: u32, context: u32, negatives: &[u32]) -> Result<f64> {
        crate::trainer::sgns_loss(&self.input, &self.output, &self.vocab, center, context, negatives)
    }

    pub fn sgns_gradients(
        &self,
        center: u32,
        context: u32,
        negatives: &[u32],
    ) -> Result<crate::trainer::SgnsGradients<Vec<f64>>> {
        crate::trainer::sgns_gradients(&self.input, &self.output, &self.vocab, center, context, negatives)
    }
}

/// The input-table vector of `word`, or [`Error::NoRepresentation`] when the
/// word is not in the vocabulary.
pub fn baseline_vector<F: Real>(model: &BaselineModel<F>, word: &str) -> Result<Vec<F>> {
    model
        .vocab
        .id(word)
        .map(|id| model.input.vector(id).to_vec())
        .ok_or_else(|| Error::NoRepresentation(word.to_owned()))
}

pub fn train_baseline(corpus_path: impl AsRef<Path>, config: &TrainConfig) -> Result<(BaselineModel, TrainReport)> {
    train_baseline_with_progress(corpus_path, config, &mut |_| {})
}

pub fn train_baseline_with_progress(
    corpus_path: impl AsRef<Path>,
    config: &TrainConfig,
    progress: &mut dyn FnMut(&EpochStats),
) -> Result<(BaselineModel, TrainReport)> {
    config.validate()?;
    let path = corpus_path.as_ref();
    let vocab = build_vocab_with(path, config.min_count, config.lowercase)?;
    let lines = encode_corpus(path, &vocab)?;
    let mut model: BaselineModel = BaselineModel::new(vocab, config.clone())?;
    let report = run_training(&lines, &model.vocab, &mut model.input, &mut model.output, config, progress)?;
    Ok((model, report))
}
