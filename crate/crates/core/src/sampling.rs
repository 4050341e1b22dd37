//! Random streams, context-pair generation and the negative sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Independent random streams derived from the single training seed.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Stream {
    Init,
    Negatives { shard: usize },
    Pairs { epoch: usize, shard: usize },
}

pub(crate) fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = match stream {
        Stream::Init => 0,
        Stream::Negatives { shard } => 1 + ((shard as u64) << 32),
        Stream::Pairs { epoch, shard } => 2 + ((epoch as u64 + 1) << 16) + ((shard as u64) << 40),
    };
    rng.set_stream(id);
    rng
}

/// Emits `(center, context)` pairs for one line of word ids.
///
/// With `dynamic` set, every position draws its own effective window from
/// `1..=window`; otherwise the full window is used. Windows never cross the
/// line boundary.
pub fn generate_pairs<R: Rng + ?Sized>(tokens: &[u32], window: usize, dynamic: bool, rng: &mut R) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    for_each_pair(tokens, window, dynamic, rng, |c, x| pairs.push((c, x)));
    pairs
}

pub(crate) fn for_each_pair<R, G>(tokens: &[u32], window: usize, dynamic: bool, rng: &mut R, mut emit: G)
where
    R: Rng + ?Sized,
    G: FnMut(u32, u32),
{
    let n = tokens.len();
    for p in 0..n {
        let c = if dynamic { rng.random_range(1..=window) } else { window };
        let lo = p.saturating_sub(c);
        let hi = (p + c).min(n - 1);
        for q in lo..=hi {
            if q != p {
                emit(tokens[p], tokens[q]);
            }
        }
    }
}

/// Draws noise words from the unigram distribution raised to a power.
#[derive(Clone, Debug)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(counts: &[u64], power: f64) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::Config(
                "negative sampling needs a vocabulary of at least two words".into(),
            ));
        }
        if counts.contains(&0) {
            return Err(Error::Config("every vocabulary word needs a positive count".into()));
        }
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(power)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(NegativeSampler { cumulative })
    }

    /// Probability of drawing word `id`.
    pub fn probability(&self, id: u32) -> f64 {
        let i = id as usize;
        self.cumulative[i] - if i == 0 { 0.0 } else { self.cumulative[i - 1] }
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.cumulative.len() - 1) as u32
    }

    /// `k` independent draws, redrawing any that equal `exclude`.
    pub fn draw_negatives<R: Rng + ?Sized>(&self, k: usize, exclude: u32, rng: &mut R) -> Vec<u32> {
        let mut out = Vec::with_capacity(k);
        self.draw_into(k, exclude, rng, &mut out);
        out
    }

    pub(crate) fn draw_into<R: Rng + ?Sized>(&self, k: usize, exclude: u32, rng: &mut R, out: &mut Vec<u32>) {
        out.clear();
        while out.len() < k {
            let id = self.sample(rng);
            if id != exclude {
                out.push(id);
            }
        }
    }
}
