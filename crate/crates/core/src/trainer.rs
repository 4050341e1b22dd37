//! Skip-gram negative sampling over a corpus.
//!
//! The center word is represented by a [`CenterEncoder`]: the syllable
//! composer for the main model, a plain lookup table for the baseline. The
//! context side is always a per-word output table. Everything else (pair
//! generation, negative draws, learning-rate schedule, epoch loop) is shared,
//! so the two models see identical training streams under the same seed.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::compose::{self, compose_word, init_params, ComposerGrads, ComposerParams, WordRepr};
use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, neg_log_sigmoid, sigmoid, Real};
use crate::sampling::{for_each_pair, stream_rng, NegativeSampler, Stream};
use crate::text::{build_syllable_inventory, build_vocab_with, SyllableInventory, Vocabulary};

/// Context ("output") vectors, one column of length `dim` per vocabulary word.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputEmbeddings<F> {
    dim: usize,
    table: Vec<F>,
}

impl<F: Real> OutputEmbeddings<F> {
    pub fn zeros(dim: usize, words: usize) -> Self {
        OutputEmbeddings {
            dim,
            table: vec![F::default(); dim * words],
        }
    }

    pub(crate) fn from_raw(dim: usize, table: Vec<F>) -> Result<Self> {
        if dim == 0 || !table.len().is_multiple_of(dim) {
            return Err(Error::Format("output table shape does not match dimension".into()));
        }
        Ok(OutputEmbeddings { dim, table })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of words (columns).
    pub fn len(&self) -> usize {
        self.table.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn vector(&self, id: u32) -> &[F] {
        let i = id as usize;
        &self.table[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector_mut(&mut self, id: u32) -> &mut [F] {
        let i = id as usize;
        &mut self.table[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[F] {
        &self.table
    }
}

/// Produces the center-word representation and takes gradient steps on it.
pub trait CenterEncoder<F: Real> {
    type Repr: AsRef<[F]>;
    type Grads;

    fn repr_dim(&self) -> usize;

    fn encode(&self, vocab: &Vocabulary, word: u32) -> Result<Self::Repr>;

    /// Gradient of `upstream . encode(word)` with respect to the encoder's
    /// parameters.
    fn gradients(&self, vocab: &Vocabulary, word: u32, repr: &Self::Repr, upstream: &[f64]) -> Result<Self::Grads>;

    /// Applies `params -= lr * gradients(..)` in place.
    fn update(&mut self, vocab: &Vocabulary, word: u32, repr: &Self::Repr, upstream: &[f64], lr: f64);
}

impl<F: Real> AsRef<[F]> for WordRepr<F> {
    fn as_ref(&self) -> &[F] {
        &self.values
    }
}

impl<F: Real> CenterEncoder<F> for ComposerParams<F> {
    type Repr = WordRepr<F>;
    type Grads = ComposerGrads;

    fn repr_dim(&self) -> usize {
        ComposerParams::repr_dim(self)
    }

    fn encode(&self, vocab: &Vocabulary, word: u32) -> Result<WordRepr<F>> {
        compose_word(self, vocab.syllable_ids(word))
    }

    fn gradients(&self, vocab: &Vocabulary, word: u32, repr: &WordRepr<F>, upstream: &[f64]) -> Result<ComposerGrads> {
        compose::backward(self, vocab.syllable_ids(word), repr, upstream)
    }

    fn update(&mut self, vocab: &Vocabulary, word: u32, repr: &WordRepr<F>, upstream: &[f64], lr: f64) {
        self.sgd_update(vocab.syllable_ids(word), repr, upstream, lr);
    }
}

/// Loss and gradients of one skip-gram example.
#[derive(Clone, Debug)]
pub struct SgnsGradients<G> {
    pub loss: f64,
    /// Gradient with respect to the center representation.
    pub center: Vec<f64>,
    pub encoder: G,
    /// Output-table gradients, summed per word, in first-touch order.
    pub outputs: Vec<(u32, Vec<f64>)>,
}

/// `(word id, label)` for the true context followed by the negatives.
fn targets(context: u32, negatives: &[u32]) -> impl Iterator<Item = (u32, f64)> + '_ {
    std::iter::once((context, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)))
}

fn check_ids(vocab: &Vocabulary, center: u32, context: u32, negatives: &[u32]) -> Result<()> {
    let n = vocab.len();
    let bad = std::iter::once(center)
        .chain(std::iter::once(context))
        .chain(negatives.iter().copied())
        .find(|&id| id as usize >= n);
    match bad {
        Some(id) => Err(Error::Input(format!("word id {id} out of range for a vocabulary of {n}"))),
        None => Ok(()),
    }
}

/// Scores every target against the center vector: returns the loss and the
/// per-target coefficients `sigmoid(score) - label`.
fn score<F: Real>(center: &[F], output: &OutputEmbeddings<F>, context: u32, negatives: &[u32]) -> (f64, Vec<f64>) {
    let mut loss = 0.0;
    let coeffs = targets(context, negatives)
        .map(|(id, label)| {
            let s = dot(center, output.vector(id));
            loss += if label > 0.5 { neg_log_sigmoid(s) } else { neg_log_sigmoid(-s) };
            sigmoid(s) - label
        })
        .collect();
    (loss, coeffs)
}

/// Loss of one example without touching any parameter.
pub fn sgns_loss<F: Real, E: CenterEncoder<F>>(
    encoder: &E,
    output: &OutputEmbeddings<F>,
    vocab: &Vocabulary,
    center: u32,
    context: u32,
    negatives: &[u32],
) -> Result<f64> {
    check_ids(vocab, center, context, negatives)?;
    let repr = encoder.encode(vocab, center)?;
    Ok(score(repr.as_ref(), output, context, negatives).0)
}

/// Loss and exact gradients of one example.
pub fn sgns_gradients<F: Real, E: CenterEncoder<F>>(
    encoder: &E,
    output: &OutputEmbeddings<F>,
    vocab: &Vocabulary,
    center: u32,
    context: u32,
    negatives: &[u32],
) -> Result<SgnsGradients<E::Grads>> {
    check_ids(vocab, center, context, negatives)?;
    let repr = encoder.encode(vocab, center)?;
    let y = repr.as_ref();
    let (loss, coeffs) = score(y, output, context, negatives);

    let mut upstream = vec![0.0; y.len()];
    let mut outputs: Vec<(u32, Vec<f64>)> = Vec::new();
    for ((id, _), g) in targets(context, negatives).zip(&coeffs) {
        axpy(*g, output.vector(id), &mut upstream);
        let slot = match outputs.iter().position(|(w, _)| *w == id) {
            Some(i) => i,
            None => {
                outputs.push((id, vec![0.0; y.len()]));
                outputs.len() - 1
            }
        };
        axpy(*g, y, &mut outputs[slot].1);
    }
    let encoder_grads = encoder.gradients(vocab, center, &repr, &upstream)?;
    Ok(SgnsGradients {
        loss,
        center: upstream,
        encoder: encoder_grads,
        outputs,
    })
}

/// One SGD step on `(center, context)` with the given negatives.
///
/// Gradients are taken at the current parameters and then applied with step
/// `lr` to the touched output columns and to the encoder. Returns the loss
/// before the update.
pub fn sgns_step<F: Real, E: CenterEncoder<F>>(
    encoder: &mut E,
    output: &mut OutputEmbeddings<F>,
    vocab: &Vocabulary,
    center: u32,
    context: u32,
    negatives: &[u32],
    lr: f64,
) -> Result<f64> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::Input(format!("learning rate must be positive, got {lr}")));
    }
    check_ids(vocab, center, context, negatives)?;
    step_unchecked(encoder, output, vocab, center, context, negatives, lr)
}

fn step_unchecked<F: Real, E: CenterEncoder<F>>(
    encoder: &mut E,
    output: &mut OutputEmbeddings<F>,
    vocab: &Vocabulary,
    center: u32,
    context: u32,
    negatives: &[u32],
    lr: f64,
) -> Result<f64> {
    let repr = encoder.encode(vocab, center)?;
    let y = repr.as_ref();
    let (loss, coeffs) = score(y, output, context, negatives);

    let mut upstream = vec![0.0; y.len()];
    for ((id, _), g) in targets(context, negatives).zip(&coeffs) {
        axpy(*g, output.vector(id), &mut upstream);
    }
    for ((id, _), g) in targets(context, negatives).zip(&coeffs) {
        axpy(-lr * g, y, output.vector_mut(id));
    }
    encoder.update(vocab, center, &repr, &upstream, lr);
    Ok(loss)
}

/// Trained syllable model: vocabulary, syllable inventory, composer and
/// output table.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<F = f32> {
    pub vocab: Vocabulary,
    pub inventory: SyllableInventory,
    pub composer: ComposerParams<F>,
    pub output: OutputEmbeddings<F>,
    pub config: TrainConfig,
}

impl<F: Real> Model<F> {
    /// Freshly initialized model: random composer, zero output table.
    pub fn new(vocab: Vocabulary, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let inventory = build_syllable_inventory(&vocab);
        let composer = init_params(&config, inventory.len(), config.seed)?;
        let output = OutputEmbeddings::zeros(config.repr_dim(), vocab.len());
        Ok(Model {
            vocab,
            inventory,
            composer,
            output,
            config,
        })
    }

    /// Checks the cross references between the parts.
    pub fn validate(&self) -> Result<()> {
        if self.composer.inventory_size() != self.inventory.len() {
            return Err(Error::Format("composer and inventory disagree on the syllable count".into()));
        }
        if self.output.len() != self.vocab.len() || self.output.dim() != self.composer.repr_dim() {
            return Err(Error::Format("output table does not match vocabulary and filters".into()));
        }
        for id in 0..self.vocab.len() as u32 {
            if self.inventory.encode(self.vocab.word(id))? != self.vocab.syllable_ids(id) {
                return Err(Error::Format(format!("syllable ids of '{}' are inconsistent", self.vocab.word(id))));
            }
        }
        Ok(())
    }

    pub fn repr_dim(&self) -> usize {
        self.composer.repr_dim()
    }

    /// Composes any word whose syllables are all in the inventory, in the
    /// vocabulary or not.
    pub fn compose(&self, word: &str) -> Result<WordRepr<F>> {
        let ids = self.inventory.encode(&self.vocab.normalize(word))?;
        compose_word(&self.composer, &ids)
    }

    pub fn word_vector(&self, word: &str) -> Result<Vec<F>> {
        Ok(self.compose(word)?.values)
    }

    pub fn sgns_step(&mut self, center: u32, context: u32, negatives: &[u32], lr: f64) -> Result<f64> {
        sgns_step(&mut self.composer, &mut self.output, &self.vocab, center, context, negatives, lr)
    }

    pub fn sgns_loss(&self, center: u32, context: u32, negatives: &[u32]) -> Result<f64> {
        sgns_loss(&self.composer, &self.output, &self.vocab, center, context, negatives)
    }

    pub fn sgns_gradients(&self, center: u32, context: u32, negatives: &[u32]) -> Result<SgnsGradients<ComposerGrads>> {
        sgns_gradients(&self.composer, &self.output, &self.vocab, center, context, negatives)
    }
}

/// Per-epoch training statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub pairs: u64,
    pub pairs_per_sec: f64,
    /// Learning rate at the end of the epoch.
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
}

impl TrainReport {
    pub fn epoch_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.mean_loss).collect()
    }

    pub fn total_pairs(&self) -> u64 {
        self.epochs.iter().map(|e| e.pairs).sum()
    }
}

/// Learning rate after `step` of `total` updates: linear decay from
/// `initial` to `min`, never below `min`.
pub fn learning_rate(initial: f64, min: f64, step: u64, total: u64) -> f64 {
    if total == 0 {
        return initial;
    }
    let progress = step as f64 / total as f64;
    (initial + (min - initial) * progress).max(min)
}

/// Reads a corpus and maps each line to retained word ids.
pub(crate) fn encode_corpus(path: &Path, vocab: &Vocabulary) -> Result<Vec<Vec<u32>>> {
    let reader = BufReader::new(File::open(path)?);
    reader
        .lines()
        .map(|line| Ok(vocab.encode_line(&line?)))
        .collect()
}

/// Frequent-word subsampling keep probability, as in word2vec.
fn keep_probability(count: u64, total: u64, threshold: f64) -> f64 {
    let f = count as f64 / total as f64;
    ((f / threshold).sqrt() + 1.0) * threshold / f
}

/// Walks the pair stream of one shard of one epoch.
///
/// The same `(seed, epoch, shard)` always yields the same pairs, which lets
/// the schedule count them ahead of training.
fn shard_pairs(
    lines: &[Vec<u32>],
    vocab: &Vocabulary,
    config: &TrainConfig,
    epoch: usize,
    shard: usize,
    mut visit: impl FnMut(&[(u32, u32)]) -> Result<()>,
) -> Result<()> {
    let mut rng = stream_rng(config.seed, Stream::Pairs { epoch, shard });
    let keep: Option<Vec<f64>> = config.subsample.map(|t| {
        let total = vocab.retained_tokens();
        vocab.counts().iter().map(|&c| keep_probability(c, total, t)).collect()
    });
    let mut kept = Vec::new();
    let mut pairs = Vec::new();
    for line in lines.iter().skip(shard).step_by(config.threads) {
        let tokens: &[u32] = match &keep {
            Some(keep) => {
                kept.clear();
                kept.extend(line.iter().copied().filter(|&w| rng.random::<f64>() < keep[w as usize]));
                &kept
            }
            None => line,
        };
        pairs.clear();
        for_each_pair(tokens, config.window, config.dynamic_window, &mut rng, |c, x| pairs.push((c, x)));
        if !pairs.is_empty() {
            visit(&pairs)?;
        }
    }
    Ok(())
}

/// Trains `encoder` and `output` on pre-encoded corpus lines.
pub(crate) fn run_training<F, E>(
    lines: &[Vec<u32>],
    vocab: &Vocabulary,
    encoder: &mut E,
    output: &mut OutputEmbeddings<F>,
    config: &TrainConfig,
    progress: &mut dyn FnMut(&EpochStats),
) -> Result<TrainReport>
where
    F: Real,
    E: CenterEncoder<F> + Send,
{
    config.validate()?;
    let sampler = NegativeSampler::new(vocab.counts(), config.unigram_power)?;

    let mut per_epoch = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut n = 0u64;
        for shard in 0..config.threads {
            shard_pairs(lines, vocab, config, epoch, shard, |pairs| {
                n += pairs.len() as u64;
                Ok(())
            })?;
        }
        per_epoch.push(n);
    }
    let total: u64 = per_epoch.iter().sum();
    if total == 0 {
        return Err(Error::Config(
            "the corpus yields no training pairs (no line has two retained words)".into(),
        ));
    }

    let mut report = TrainReport::default();
    let mut done = 0u64;
    if config.threads == 1 {
        let mut neg_rng = stream_rng(config.seed, Stream::Negatives { shard: 0 });
        for (epoch, &pairs_in_epoch) in per_epoch.iter().enumerate() {
            let started = Instant::now();
            let mut loss_sum = 0.0;
            let mut negatives = Vec::with_capacity(config.negatives);
            shard_pairs(lines, vocab, config, epoch, 0, |pairs| {
                for &(center, context) in pairs {
                    let lr = learning_rate(config.initial_lr, config.min_lr, done, total);
                    sampler.draw_into(config.negatives, context, &mut neg_rng, &mut negatives);
                    loss_sum += step_unchecked(encoder, output, vocab, center, context, &negatives, lr)?;
                    done += 1;
                }
                Ok(())
            })?;
            let stats = epoch_stats(epoch, loss_sum, pairs_in_epoch, started, config, done, total);
            progress(&stats);
            report.epochs.push(stats);
        }
    } else {
        let mut neg_rngs: Vec<ChaCha8Rng> = (0..config.threads)
            .map(|shard| stream_rng(config.seed, Stream::Negatives { shard }))
            .collect();
        let counter = AtomicU64::new(0);
        let shared = hogwild::Shared::new(encoder, output);
        for (epoch, &pairs_in_epoch) in per_epoch.iter().enumerate() {
            let started = Instant::now();
            let losses = std::thread::scope(|scope| {
                let handles: Vec<_> = neg_rngs
                    .iter_mut()
                    .enumerate()
                    .map(|(shard, neg_rng)| {
                        let shared = &shared;
                        let counter = &counter;
                        let sampler = &sampler;
                        scope.spawn(move || -> Result<f64> {
                            let mut loss_sum = 0.0;
                            let mut negatives = Vec::with_capacity(config.negatives);
                            shard_pairs(lines, vocab, config, epoch, shard, |pairs| {
                                for &(center, context) in pairs {
                                    let t = counter.fetch_add(1, Ordering::Relaxed);
                                    let lr = learning_rate(config.initial_lr, config.min_lr, t, total);
                                    sampler.draw_into(config.negatives, context, neg_rng, &mut negatives);
                                    // SAFETY: see `hogwild`; the parameter buffers outlive the scope
                                    // and are never resized while workers run.
                                    let (encoder, output) = unsafe { shared.get() };
                                    loss_sum += step_unchecked(encoder, output, vocab, center, context, &negatives, lr)?;
                                }
                                Ok(())
                            })?;
                            Ok(loss_sum)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .collect::<Result<Vec<f64>>>()
            })?;
            done += pairs_in_epoch;
            let stats = epoch_stats(epoch, losses.iter().sum(), pairs_in_epoch, started, config, done, total);
            progress(&stats);
            report.epochs.push(stats);
        }
    }
    Ok(report)
}

fn epoch_stats(
    epoch: usize,
    loss_sum: f64,
    pairs: u64,
    started: Instant,
    config: &TrainConfig,
    done: u64,
    total: u64,
) -> EpochStats {
    let secs = started.elapsed().as_secs_f64();
    EpochStats {
        epoch: epoch + 1,
        mean_loss: if pairs == 0 { 0.0 } else { loss_sum / pairs as f64 },
        pairs,
        pairs_per_sec: if secs > 0.0 { pairs as f64 / secs } else { 0.0 },
        lr: learning_rate(config.initial_lr, config.min_lr, done, total),
    }
}

/// Lock-free shared access for the multi-threaded mode.
///
/// Workers update the same parameter buffers without synchronization, and
/// concurrent writes to one element resolve as last-writer-wins. Buffers are
/// allocated before the workers start and never reallocated, so every access
/// stays in bounds; individual values may be torn between readers and
/// writers, which the SGD updates tolerate.
mod hogwild {
    use std::marker::PhantomData;

    use super::OutputEmbeddings;

    pub(super) struct Shared<'a, E, F> {
        encoder: *mut E,
        output: *mut OutputEmbeddings<F>,
        _borrow: PhantomData<&'a mut (E, F)>,
    }

    unsafe impl<E: Send, F: Send> Sync for Shared<'_, E, F> {}
    unsafe impl<E: Send, F: Send> Send for Shared<'_, E, F> {}

    impl<'a, E, F> Shared<'a, E, F> {
        pub(super) fn new(encoder: &'a mut E, output: &'a mut OutputEmbeddings<F>) -> Self {
            Shared {
                encoder,
                output,
                _borrow: PhantomData,
            }
        }

        /// # Safety
        /// Callers accept unsynchronized concurrent updates of the parameter
        /// values; the structures themselves must not be resized.
        #[allow(clippy::mut_from_ref)]
        pub(super) unsafe fn get(&self) -> (&mut E, &mut OutputEmbeddings<F>) {
            (&mut *self.encoder, &mut *self.output)
        }
    }
}

/// Builds the vocabulary and inventory from a corpus file and trains the
/// syllable model on it.
pub fn train(corpus_path: impl AsRef<Path>, config: &TrainConfig) -> Result<(Model, TrainReport)> {
    train_with_progress(corpus_path, config, &mut |_| {})
}

pub fn train_with_progress(
    corpus_path: impl AsRef<Path>,
    config: &TrainConfig,
    progress: &mut dyn FnMut(&EpochStats),
) -> Result<(Model, TrainReport)> {
    config.validate()?;
    let path = corpus_path.as_ref();
    let vocab = build_vocab_with(path, config.min_count, config.lowercase)?;
    let lines = encode_corpus(path, &vocab)?;
    let mut model: Model = Model::new(vocab, config.clone())?;
    let report = run_training(
        &lines,
        &model.vocab,
        &mut model.composer,
        &mut model.output,
        config,
        progress,
    )?;
    Ok((model, report))
}
