use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convolution filter widths and how many filters of each width.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterLayout {
    banks: Vec<(usize, usize)>,
}

impl FilterLayout {
    /// `banks` holds `(width, filter count)` pairs; they are sorted by width.
    pub fn new(mut banks: Vec<(usize, usize)>) -> Result<Self> {
        if banks.is_empty() {
            return Err(Error::Config("at least one filter width is required".into()));
        }
        banks.sort_unstable();
        for pair in banks.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::Config(format!("filter width {} listed twice", pair[0].0)));
            }
        }
        if let Some(&(w, n)) = banks.iter().find(|&&(w, n)| w == 0 || n == 0) {
            return Err(Error::Config(format!(
                "filter widths and counts must be positive (got width {w}, count {n})"
            )));
        }
        Ok(FilterLayout { banks })
    }

    /// The same number of filters for every width.
    pub fn uniform(widths: &[usize], filters_per_width: usize) -> Result<Self> {
        Self::new(widths.iter().map(|&w| (w, filters_per_width)).collect())
    }

    pub fn banks(&self) -> &[(usize, usize)] {
        &self.banks
    }

    /// Total number of filters, i.e. the word representation dimension.
    pub fn total_filters(&self) -> usize {
        self.banks.iter().map(|&(_, n)| n).sum()
    }

    pub fn max_width(&self) -> usize {
        self.banks.last().map(|&(w, _)| w).unwrap_or(0)
    }
}

impl Default for FilterLayout {
    /// Widths 1 through 4 with 80 filters each.
    fn default() -> Self {
        FilterLayout::uniform(&[1, 2, 3, 4], 80).unwrap()
    }
}

/// Training hyperparameters shared by the syllable model and the baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Syllable embedding dimension.
    pub dim: usize,
    pub layout: FilterLayout,
    /// Maximum distance between center and context word.
    pub window: usize,
    /// Negative samples per positive pair.
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub min_lr: f64,
    pub min_count: u64,
    pub unigram_power: f64,
    pub seed: u64,
    /// Draw the effective window uniformly from `1..=window` at each position.
    pub dynamic_window: bool,
    pub lowercase: bool,
    /// Frequent-word subsampling threshold; `None` keeps every token.
    pub subsample: Option<f64>,
    /// Worker threads; 1 is the deterministic sequential mode.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 320,
            layout: FilterLayout::default(),
            window: 4,
            negatives: 7,
            epochs: 12,
            initial_lr: 0.025,
            min_lr: 1e-4,
            min_count: 5,
            unigram_power: 0.75,
            seed: 1,
            dynamic_window: true,
            lowercase: false,
            subsample: None,
            threads: 1,
        }
    }
}

impl TrainConfig {
    /// Word representation dimension (number of filters).
    pub fn repr_dim(&self) -> usize {
        self.layout.total_filters()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("window", self.window),
            ("negatives", self.negatives),
            ("epochs", self.epochs),
            ("threads", self.threads),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.min_count == 0 {
            return Err(Error::Config("min_count must be positive".into()));
        }
        if !(self.min_lr > 0.0 && self.min_lr.is_finite()) {
            return Err(Error::Config("min_lr must be positive".into()));
        }
        if !(self.initial_lr.is_finite() && self.min_lr < self.initial_lr) {
            return Err(Error::Config(format!(
                "min_lr ({}) must be below initial_lr ({})",
                self.min_lr, self.initial_lr
            )));
        }
        if !self.unigram_power.is_finite() {
            return Err(Error::Config("unigram_power must be finite".into()));
        }
        if let Some(t) = self.subsample {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config("subsample threshold must be positive".into()));
            }
        }
        // Re-run the layout checks in case the config was deserialized.
        FilterLayout::new(self.layout.banks.clone())?;
        Ok(())
    }
}
