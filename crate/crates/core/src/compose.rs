//! Word composition from syllable vectors.
//!
//! A word of `l` syllables is the `d x l` slab of its syllable vectors. Each
//! filter `H` (a `d x w` matrix with bias `b`) slides over the slab and
//! produces `tanh(<slab[i..i+w], H> + b)` at every position `i`; max pooling
//! keeps the largest response. Words shorter than a filter are right-padded
//! with the all-zero PAD syllable, leaving a single position. One pooled value
//! per filter, ordered by ascending width and then filter index, makes up the
//! word vector.

use rand::Rng;

use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, Real};
use crate::sampling::{stream_rng, Stream};
use crate::text::PAD;

/// Filters of one width.
///
/// Filter `k` occupies `weights[k * width * dim..(k + 1) * width * dim]`,
/// stored column by column: column `j` (the weights applied to the `j`-th
/// syllable of a window) is a contiguous run of `dim` values.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterBank<F> {
    width: usize,
    count: usize,
    dim: usize,
    weights: Vec<F>,
    biases: Vec<F>,
}

impl<F: Real> FilterBank<F> {
    pub fn zeros(width: usize, count: usize, dim: usize) -> Self {
        FilterBank {
            width,
            count,
            dim,
            weights: vec![F::default(); width * count * dim],
            biases: vec![F::default(); count],
        }
    }

    pub(crate) fn from_raw(width: usize, count: usize, dim: usize, weights: Vec<F>, biases: Vec<F>) -> Result<Self> {
        if weights.len() != width * count * dim || biases.len() != count {
            return Err(Error::Format(format!(
                "filter bank of width {width}: expected {} weights and {count} biases",
                width * count * dim
            )));
        }
        Ok(FilterBank {
            width,
            count,
            dim,
            weights,
            biases,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Weights of filter `k`, column-major `dim x width`.
    pub fn filter(&self, k: usize) -> &[F] {
        let n = self.width * self.dim;
        &self.weights[k * n..(k + 1) * n]
    }

    pub fn filter_mut(&mut self, k: usize) -> &mut [F] {
        let n = self.width * self.dim;
        &mut self.weights[k * n..(k + 1) * n]
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn biases(&self) -> &[F] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [F] {
        &mut self.biases
    }
}

/// Syllable embedding matrix plus the convolution filter banks.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposerParams<F> {
    dim: usize,
    // syllable id s -> syllables[s * dim..(s + 1) * dim]; id 0 is PAD and stays zero
    syllables: Vec<F>,
    banks: Vec<FilterBank<F>>,
}

impl<F: Real> ComposerParams<F> {
    /// All-zero parameters for `inventory_size` syllable ids (PAD included).
    pub fn zeros(dim: usize, inventory_size: usize, layout: &crate::config::FilterLayout) -> Self {
        ComposerParams {
            dim,
            syllables: vec![F::default(); dim * inventory_size],
            banks: layout
                .banks()
                .iter()
                .map(|&(w, n)| FilterBank::zeros(w, n, dim))
                .collect(),
        }
    }

    pub(crate) fn from_raw(dim: usize, syllables: Vec<F>, banks: Vec<FilterBank<F>>) -> Result<Self> {
        if dim == 0 || !syllables.len().is_multiple_of(dim) || syllables.len() < dim {
            return Err(Error::Format("syllable matrix shape does not match dimension".into()));
        }
        if syllables[..dim].iter().any(|&x| x != F::default()) {
            return Err(Error::Format("PAD syllable vector is not zero".into()));
        }
        if banks.iter().any(|b| b.dim != dim) || banks.windows(2).any(|p| p[0].width >= p[1].width) {
            return Err(Error::Format("filter banks are inconsistent".into()));
        }
        Ok(ComposerParams { dim, syllables, banks })
    }

    /// Syllable embedding dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of syllable ids including PAD.
    pub fn inventory_size(&self) -> usize {
        self.syllables.len() / self.dim
    }

    /// Word representation dimension.
    pub fn repr_dim(&self) -> usize {
        self.banks.iter().map(|b| b.count).sum()
    }

    pub fn syllable_vector(&self, id: u32) -> &[F] {
        let id = id as usize;
        &self.syllables[id * self.dim..(id + 1) * self.dim]
    }

    /// Mutable syllable vector. Panics for PAD, which must stay zero.
    pub fn syllable_vector_mut(&mut self, id: u32) -> &mut [F] {
        assert_ne!(id, PAD, "the PAD vector is fixed at zero");
        let id = id as usize;
        &mut self.syllables[id * self.dim..(id + 1) * self.dim]
    }

    pub fn syllable_matrix(&self) -> &[F] {
        &self.syllables
    }

    pub fn banks(&self) -> &[FilterBank<F>] {
        &self.banks
    }

    pub fn banks_mut(&mut self) -> &mut [FilterBank<F>] {
        &mut self.banks
    }

    fn check_ids(&self, ids: &[u32]) -> Result<()> {
        if ids.is_empty() {
            return Err(Error::Input("cannot compose an empty syllable sequence".into()));
        }
        let size = self.inventory_size();
        if let Some(&bad) = ids.iter().find(|&&s| s as usize >= size) {
            return Err(Error::Input(format!(
                "syllable id {bad} out of range for an inventory of {size}"
            )));
        }
        Ok(())
    }

    /// Takes one SGD step `params -= lr * grads`.
    pub fn apply(&mut self, grads: &ComposerGrads, lr: f64) {
        for (id, g) in &grads.syllables {
            if *id != PAD {
                axpy(-lr, g, self.syllable_vector_mut(*id));
            }
        }
        for (bank, g) in self.banks.iter_mut().zip(&grads.banks) {
            axpy(-lr, &g.weights, &mut bank.weights);
            axpy(-lr, &g.biases, &mut bank.biases);
        }
    }

    /// Backpropagates `upstream` through the composition of `ids` and applies
    /// the SGD step in place. Equivalent to
    /// `apply(&compose_gradients(..), lr)` without materializing dense
    /// filter gradients.
    pub(crate) fn sgd_update(&mut self, ids: &[u32], repr: &WordRepr<F>, upstream: &[f64], lr: f64) {
        let dim = self.dim;
        let mut syllable_grads: Vec<(u32, Vec<f64>)> = Vec::with_capacity(ids.len());
        let mut filter_index = 0;
        for bank in &mut self.banks {
            let width = bank.width;
            for k in 0..bank.count {
                let coeff = pooled_coefficient(repr, upstream, filter_index);
                let start = repr.pool_argmax[filter_index];
                filter_index += 1;
                if coeff == 0.0 {
                    continue;
                }
                let n = width * dim;
                let filter = &mut bank.weights[k * n..(k + 1) * n];
                for j in 0..width {
                    let Some(&s) = ids.get(start + j) else { continue };
                    if s == PAD {
                        continue;
                    }
                    let column = &mut filter[j * dim..(j + 1) * dim];
                    accumulate(&mut syllable_grads, s, dim, coeff, column);
                    let q = &self.syllables[s as usize * dim..(s as usize + 1) * dim];
                    axpy(-lr * coeff, q, column);
                }
                let b = &mut bank.biases[k];
                *b = F::from_f64(b.to_f64() - lr * coeff);
            }
        }
        for (s, g) in syllable_grads {
            axpy(-lr, &g, self.syllable_vector_mut(s));
        }
    }
}

fn accumulate<F: Real>(grads: &mut Vec<(u32, Vec<f64>)>, id: u32, dim: usize, coeff: f64, column: &[F]) {
    let slot = match grads.iter().position(|(s, _)| *s == id) {
        Some(i) => i,
        None => {
            grads.push((id, vec![0.0; dim]));
            grads.len() - 1
        }
    };
    axpy(coeff, column, &mut grads[slot].1);
}

/// `upstream[j] * tanh'(pre_j)`, using `1 - y^2` for the pooled value `y`.
#[inline]
fn pooled_coefficient<F: Real>(repr: &WordRepr<F>, upstream: &[f64], j: usize) -> f64 {
    let y = repr.values[j].to_f64();
    upstream[j] * (1.0 - y * y)
}

/// Composed word vector and the pooling positions behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct WordRepr<F> {
    pub values: Vec<F>,
    /// Start position of the winning window for each filter.
    pub pool_argmax: Vec<usize>,
}

/// Gradients of `upstream . values` with respect to the composer parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposerGrads {
    /// Touched syllable ids and their gradients, in first-touch order.
    pub syllables: Vec<(u32, Vec<f64>)>,
    pub banks: Vec<BankGrads>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BankGrads {
    /// Same layout as [`FilterBank`] weights.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl ComposerGrads {
    pub fn syllable(&self, id: u32) -> Option<&[f64]> {
        self.syllables.iter().find(|(s, _)| *s == id).map(|(_, g)| g.as_slice())
    }

    pub fn is_zero(&self) -> bool {
        self.syllables.iter().all(|(_, g)| g.iter().all(|&x| x == 0.0))
            && self
                .banks
                .iter()
                .all(|b| b.weights.iter().chain(&b.biases).all(|&x| x == 0.0))
    }
}

/// Randomly initialized parameters.
///
/// Syllable vectors are uniform in `[-0.5/d, 0.5/d]`, filter weights uniform
/// in `[-r, r]` with `r = sqrt(6 / (d*w + 1))`, biases zero. PAD stays zero.
pub fn init_params<F: Real>(config: &TrainConfig, inventory_size: usize, seed: u64) -> Result<ComposerParams<F>> {
    if config.dim == 0 {
        return Err(Error::Config("syllable dimension must be positive".into()));
    }
    if inventory_size < 2 {
        return Err(Error::Config("the syllable inventory is empty".into()));
    }
    let dim = config.dim;
    let mut rng = stream_rng(seed, Stream::Init);
    let mut params = ComposerParams::zeros(dim, inventory_size, &config.layout);

    let q_range = 0.5 / dim as f64;
    for x in &mut params.syllables[dim..] {
        *x = F::from_f64(uniform(&mut rng, q_range));
    }
    for bank in &mut params.banks {
        let r = (6.0 / (dim * bank.width + 1) as f64).sqrt();
        for x in &mut bank.weights {
            *x = F::from_f64(uniform(&mut rng, r));
        }
    }
    Ok(params)
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, half_width: f64) -> f64 {
    half_width * (2.0 * rng.random::<f64>() - 1.0)
}

/// Composes the word vector for a syllable id sequence.
pub fn compose_word<F: Real>(params: &ComposerParams<F>, syllable_ids: &[u32]) -> Result<WordRepr<F>> {
    params.check_ids(syllable_ids)?;
    let dim = params.dim;
    let len = syllable_ids.len();
    let h = params.repr_dim();
    let mut values = Vec::with_capacity(h);
    let mut pool_argmax = Vec::with_capacity(h);

    for bank in &params.banks {
        let positions = if len >= bank.width { len - bank.width + 1 } else { 1 };
        for k in 0..bank.count {
            let filter = bank.filter(k);
            let bias = bank.biases[k].to_f64();
            let mut best = f64::NEG_INFINITY;
            let mut best_at = 0;
            for i in 0..positions {
                let mut pre = bias;
                for (j, column) in filter.chunks_exact(dim).enumerate() {
                    // positions past the end read PAD, which contributes zero
                    if let Some(&s) = syllable_ids.get(i + j) {
                        pre += dot(params.syllable_vector(s), column);
                    }
                }
                let f = pre.tanh();
                if f > best {
                    best = f;
                    best_at = i;
                }
            }
            values.push(F::from_f64(best));
            pool_argmax.push(best_at);
        }
    }
    Ok(WordRepr { values, pool_argmax })
}

/// Exact gradient of `upstream . compose_word(params, syllable_ids).values`.
pub fn compose_gradients<F: Real>(
    params: &ComposerParams<F>,
    syllable_ids: &[u32],
    upstream: &[f64],
) -> Result<ComposerGrads> {
    let repr = compose_word(params, syllable_ids)?;
    backward(params, syllable_ids, &repr, upstream)
}

pub(crate) fn backward<F: Real>(
    params: &ComposerParams<F>,
    ids: &[u32],
    repr: &WordRepr<F>,
    upstream: &[f64],
) -> Result<ComposerGrads> {
    if upstream.len() != params.repr_dim() {
        return Err(Error::Input(format!(
            "upstream gradient has length {}, expected {}",
            upstream.len(),
            params.repr_dim()
        )));
    }
    let dim = params.dim;
    let mut syllables: Vec<(u32, Vec<f64>)> = Vec::with_capacity(ids.len());
    let mut banks = Vec::with_capacity(params.banks.len());
    let mut filter_index = 0;
    for bank in &params.banks {
        let n = bank.width * dim;
        let mut g = BankGrads {
            weights: vec![0.0; bank.weights.len()],
            biases: vec![0.0; bank.count],
        };
        for k in 0..bank.count {
            let coeff = pooled_coefficient(repr, upstream, filter_index);
            let start = repr.pool_argmax[filter_index];
            filter_index += 1;
            g.biases[k] = coeff;
            let filter = bank.filter(k);
            let grad = &mut g.weights[k * n..(k + 1) * n];
            for j in 0..bank.width {
                let Some(&s) = ids.get(start + j) else { continue };
                if s == PAD {
                    continue;
                }
                axpy(coeff, params.syllable_vector(s), &mut grad[j * dim..(j + 1) * dim]);
                accumulate(&mut syllables, s, dim, coeff, &filter[j * dim..(j + 1) * dim]);
            }
        }
        banks.push(g);
    }
    Ok(ComposerGrads { syllables, banks })
}
