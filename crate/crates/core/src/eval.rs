//! Evaluation: cosine similarity, nearest neighbours, Pearson word-similarity
//! scoring and the postposition displacement analysis.

use std::io::BufRead;

use crate::baseline::{baseline_vector, BaselineModel};
use crate::error::{Error, Result};
use crate::linalg::Real;
use crate::pca::{pca_project, PcaProjection};
use crate::text::Vocabulary;
use crate::trainer::Model;

/// Anything that can map a word to a vector.
pub trait WordVectors {
    fn vocab(&self) -> &Vocabulary;

    fn repr_dim(&self) -> usize;

    /// Vector for an arbitrary word. Words that cannot be represented yield
    /// an error for which [`Error::is_unrepresentable`] holds.
    fn vector(&self, word: &str) -> Result<Vec<f64>>;

    /// Vector for a vocabulary word.
    fn vocab_vector(&self, id: u32) -> Result<Vec<f64>> {
        self.vector(self.vocab().word(id))
    }
}

fn widen<F: Real>(v: &[F]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64()).collect()
}

impl<F: Real> WordVectors for Model<F> {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn repr_dim(&self) -> usize {
        Model::repr_dim(self)
    }

    fn vector(&self, word: &str) -> Result<Vec<f64>> {
        Ok(widen(&self.word_vector(word)?))
    }
}

impl<F: Real> WordVectors for BaselineModel<F> {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn repr_dim(&self) -> usize {
        BaselineModel::repr_dim(self)
    }

    fn vector(&self, word: &str) -> Result<Vec<f64>> {
        Ok(widen(&baseline_vector(self, word)?))
    }

    fn vocab_vector(&self, id: u32) -> Result<Vec<f64>> {
        Ok(widen(self.input.vector(id)))
    }
}

/// `u . v / (|u| |v|)`, clamped to `[-1, 1]`.
pub fn cosine<F: Real>(u: &[F], v: &[F]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Input(format!("vector lengths differ ({} vs {})", u.len(), v.len())));
    }
    let (mut uv, mut uu, mut vv) = (0.0, 0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a.to_f64(), b.to_f64());
        uv += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(Error::UndefinedSimilarity);
    }
    Ok((uv / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0))
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Input(format!("sequence lengths differ ({} vs {})", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::Input("correlation needs at least two observations".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Precomputed vectors of every vocabulary word for repeated neighbour queries.
pub struct NeighborIndex<'a, M: WordVectors + ?Sized> {
    model: &'a M,
    // None for words without a usable (non-zero) vector
    vectors: Vec<Option<(Vec<f64>, f64)>>,
}

impl<'a, M: WordVectors + ?Sized> NeighborIndex<'a, M> {
    pub fn new(model: &'a M) -> Result<Self> {
        let vectors = (0..model.vocab().len() as u32)
            .map(|id| {
                let v = model.vocab_vector(id)?;
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                Ok((norm > 0.0).then_some((v, norm)))
            })
            .collect::<Result<_>>()?;
        Ok(NeighborIndex { model, vectors })
    }

    /// The `k` vocabulary words most similar to `query` by cosine, best
    /// first, ties broken by ascending word id. The query itself is never
    /// returned.
    pub fn nearest(&self, query: &str, k: usize) -> Result<Vec<(String, f64)>> {
        if k == 0 {
            return Err(Error::Input("k must be at least 1".into()));
        }
        let q = self.model.vector(query)?;
        let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if qn == 0.0 {
            return Err(Error::UndefinedSimilarity);
        }
        let vocab = self.model.vocab();
        let own = vocab.id(query);
        let mut scored: Vec<(u32, f64)> = self
            .vectors
            .iter()
            .enumerate()
            .filter(|&(id, _)| Some(id as u32) != own)
            .filter_map(|(id, v)| {
                let (v, n) = v.as_ref()?;
                let s = q.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / (qn * n);
                Some((id as u32, s.clamp(-1.0, 1.0)))
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(id, s)| (vocab.word(id).to_owned(), s))
            .collect())
    }
}

/// One-off neighbour query; build a [`NeighborIndex`] for many queries.
pub fn nearest_neighbors<M: WordVectors + ?Sized>(model: &M, query: &str, k: usize) -> Result<Vec<(String, f64)>> {
    NeighborIndex::new(model)?.nearest(query, k)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityPair {
    pub word_a: String,
    pub word_b: String,
    pub human_score: f64,
}

/// Reads `word_a<TAB>word_b<TAB>score` lines; `#` lines and blank lines are
/// skipped.
pub fn read_similarity_pairs<R: BufRead>(reader: R) -> Result<Vec<SimilarityPair>> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Parse { line: i + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let (a, b) = (fields[0].trim(), fields[1].trim());
        if a.is_empty() || b.is_empty() {
            return Err(bad("empty word".into()));
        }
        let score: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| bad(format!("invalid score {:?}", fields[2])))?;
        if !score.is_finite() {
            return Err(bad(format!("score {score} is not finite")));
        }
        pairs.push(SimilarityPair {
            word_a: a.to_owned(),
            word_b: b.to_owned(),
            human_score: score,
        });
    }
    Ok(pairs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub pearson_r: f64,
    pub pairs_used: usize,
    pub pairs_skipped: usize,
}

/// Correlates model cosines with human scores.
///
/// Pairs where either word has no representation (or a zero vector) are
/// skipped and counted.
pub fn evaluate_wordsim<M: WordVectors + ?Sized>(model: &M, dataset: &[SimilarityPair]) -> Result<EvalReport> {
    if dataset.is_empty() {
        return Err(Error::Evaluation("the similarity dataset is empty".into()));
    }
    let mut cosines = Vec::with_capacity(dataset.len());
    let mut human = Vec::with_capacity(dataset.len());
    for pair in dataset {
        if let Some(c) = pair_cosine(model, pair)? {
            cosines.push(c);
            human.push(pair.human_score);
        }
    }
    if cosines.len() < 2 {
        return Err(Error::Evaluation(format!(
            "only {} of {} pairs could be scored; at least 2 are needed",
            cosines.len(),
            dataset.len()
        )));
    }
    Ok(EvalReport {
        pearson_r: pearson(&cosines, &human)?,
        pairs_used: cosines.len(),
        pairs_skipped: dataset.len() - cosines.len(),
    })
}

fn pair_cosine<M: WordVectors + ?Sized>(model: &M, pair: &SimilarityPair) -> Result<Option<f64>> {
    let vector = |w: &str| match model.vector(w) {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_unrepresentable() => Ok(None),
        Err(e) => Err(e),
    };
    let (Some(a), Some(b)) = (vector(&pair.word_a)?, vector(&pair.word_b)?) else {
        return Ok(None);
    };
    match cosine(&a, &b) {
        Ok(c) => Ok(Some(c)),
        Err(Error::UndefinedSimilarity) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Displacement analysis of `(word, word + postposition)` pairs.
#[derive(Clone, Debug)]
pub struct ClusterReport {
    /// Mean pairwise cosine of the non-zero displacement vectors; `None`
    /// when fewer than two remain.
    pub parallelism: Option<f64>,
    /// Pairs whose two words have identical vectors.
    pub degenerate: usize,
    /// Labels of the projected points: all base words, then all derived words.
    pub labels: Vec<String>,
    pub projection: PcaProjection,
}

pub fn postposition_cluster_report<M: WordVectors + ?Sized>(model: &M, pairs: &[(String, String)]) -> Result<ClusterReport> {
    if pairs.len() < 2 {
        return Err(Error::Input("the postposition analysis needs at least two pairs".into()));
    }
    let base: Vec<Vec<f64>> = pairs.iter().map(|(w, _)| model.vector(w)).collect::<Result<_>>()?;
    let derived: Vec<Vec<f64>> = pairs.iter().map(|(_, w)| model.vector(w)).collect::<Result<_>>()?;

    let displacements: Vec<Vec<f64>> = base
        .iter()
        .zip(&derived)
        .map(|(b, d)| d.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<f64>>())
        .collect();
    let (usable, zero): (Vec<&Vec<f64>>, Vec<&Vec<f64>>) =
        displacements.iter().partition(|d| d.iter().any(|&x| x != 0.0));
    let parallelism = mean_pairwise_cosine(&usable)?;

    let labels = pairs
        .iter()
        .map(|(w, _)| w.clone())
        .chain(pairs.iter().map(|(_, w)| w.clone()))
        .collect();
    let points: Vec<Vec<f64>> = base.into_iter().chain(derived).collect();
    Ok(ClusterReport {
        parallelism,
        degenerate: zero.len(),
        labels,
        projection: pca_project(&points)?,
    })
}

fn mean_pairwise_cosine(vectors: &[&Vec<f64>]) -> Result<Option<f64>> {
    if vectors.len() < 2 {
        return Ok(None);
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            sum += cosine(vectors[i], vectors[j])?;
            n += 1;
        }
    }
    Ok(Some(sum / n as f64))
}
