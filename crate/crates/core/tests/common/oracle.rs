//! Brute-force reference forward pass and central-difference gradient checks.
//!
//! The reference code re-derives the convolution from the raw parameter
//! arrays with explicit padding and loops, independent of the library's
//! composition routine.

use sylvec::compose::ComposerParams;
use sylvec::text::PAD;
use sylvec::trainer::OutputEmbeddings;
use sylvec::Model;

pub const STEP: f64 = 1e-4;
pub const REL_TOL: f64 = 1e-4;

/// Pre-activations of every filter at every position, widths ascending.
pub fn reference_preactivations(p: &ComposerParams<f64>, ids: &[u32]) -> Vec<Vec<f64>> {
    let d = p.dim();
    let mut out = Vec::new();
    for bank in p.banks() {
        let w = bank.width();
        let mut padded = ids.to_vec();
        while padded.len() < w {
            padded.push(PAD);
        }
        for k in 0..bank.count() {
            let h = bank.filter(k);
            let mut maps = Vec::new();
            for i in 0..=(padded.len() - w) {
                let mut s = bank.biases()[k];
                for j in 0..w {
                    let q = p.syllable_vector(padded[i + j]);
                    for r in 0..d {
                        s += q[r] * h[j * d + r];
                    }
                }
                maps.push(s);
            }
            out.push(maps);
        }
    }
    out
}

pub fn reference_compose(p: &ComposerParams<f64>, ids: &[u32]) -> Vec<f64> {
    reference_preactivations(p, ids)
        .into_iter()
        .map(|m| m.into_iter().map(f64::tanh).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Smallest gap between the best and second-best position of any filter.
pub fn pooling_margin(p: &ComposerParams<f64>, ids: &[u32]) -> f64 {
    reference_preactivations(p, ids)
        .into_iter()
        .filter(|m| m.len() > 1)
        .map(|mut m| {
            m.sort_by(|a, b| b.partial_cmp(a).unwrap());
            m[0] - m[1]
        })
        .fold(f64::INFINITY, f64::min)
}

fn softplus(x: f64) -> f64 {
    (1.0 + x.exp()).ln()
}

/// `-log sigmoid(y . v_c) - sum_n log sigmoid(-y . v_n)`
pub fn reference_loss(center: &[f64], output: &OutputEmbeddings<f64>, context: u32, negatives: &[u32]) -> f64 {
    let dot = |id: u32| -> f64 { center.iter().zip(output.vector(id)).map(|(a, b)| a * b).sum() };
    softplus(-dot(context)) + negatives.iter().map(|&n| softplus(dot(n))).sum::<f64>()
}

pub fn model_loss(m: &Model<f64>, center: u32, context: u32, negatives: &[u32]) -> f64 {
    let y = reference_compose(&m.composer, m.vocab.syllable_ids(center));
    reference_loss(&y, &m.output, context, negatives)
}

/// Relative disagreement, treating two near-zero values as equal.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-7 {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

#[derive(Debug, Default)]
pub struct CheckSummary {
    pub partials: usize,
    pub worst: f64,
    pub worst_at: String,
}

impl CheckSummary {
    fn record(&mut self, analytic: f64, numeric: f64, what: impl FnOnce() -> String) {
        self.partials += 1;
        let e = rel_err(analytic, numeric);
        if e > self.worst {
            self.worst = e;
            self.worst_at = format!("{} (analytic {analytic}, numeric {numeric})", what());
        }
    }
}

fn central<T>(model: &mut T, mut set: impl FnMut(&mut T, f64), orig: f64, loss: impl Fn(&T) -> f64) -> f64 {
    set(model, orig + STEP);
    let up = loss(model);
    set(model, orig - STEP);
    let down = loss(model);
    set(model, orig);
    (up - down) / (2.0 * STEP)
}

/// Compares every analytic partial of the skip-gram loss of the syllable
/// model (syllable vectors, filters, biases, output vectors) with central
/// differences of the reference loss.
pub fn check_syllable_model(m: &Model<f64>, center: u32, context: u32, negatives: &[u32]) -> CheckSummary {
    let grads = m.sgns_gradients(center, context, negatives).unwrap();
    let loss = |m: &Model<f64>| model_loss(m, center, context, negatives);
    let mut work = m.clone();
    let mut summary = CheckSummary::default();

    let d = m.composer.dim();
    for s in 1..m.composer.inventory_size() as u32 {
        for i in 0..d {
            let orig = work.composer.syllable_vector(s)[i];
            let numeric = central(&mut work, |m, v| m.composer.syllable_vector_mut(s)[i] = v, orig, loss);
            let analytic = grads.encoder.syllable(s).map_or(0.0, |g| g[i]);
            summary.record(analytic, numeric, || format!("Q[{s}][{i}]"));
        }
    }
    for b in 0..m.composer.banks().len() {
        for k in 0..m.composer.banks()[b].count() {
            let n = m.composer.banks()[b].filter(k).len();
            for i in 0..n {
                let orig = work.composer.banks()[b].filter(k)[i];
                let numeric = central(&mut work, |m, v| m.composer.banks_mut()[b].filter_mut(k)[i] = v, orig, loss);
                let analytic = grads.encoder.banks[b].weights[k * n + i];
                summary.record(analytic, numeric, || format!("H[{b}][{k}][{i}]"));
            }
            let orig = work.composer.banks()[b].biases()[k];
            let numeric = central(&mut work, |m, v| m.composer.banks_mut()[b].biases_mut()[k] = v, orig, loss);
            summary.record(grads.encoder.banks[b].biases[k], numeric, || format!("b[{b}][{k}]"));
        }
    }
    for w in 0..m.vocab.len() as u32 {
        for i in 0..m.output.dim() {
            let orig = work.output.vector(w)[i];
            let numeric = central(&mut work, |m, v| m.output.vector_mut(w)[i] = v, orig, loss);
            let analytic = grads
                .outputs
                .iter()
                .find(|(id, _)| *id == w)
                .map_or(0.0, |(_, g)| g[i]);
            summary.record(analytic, numeric, || format!("out[{w}][{i}]"));
        }
    }
    summary
}
