//! Binary model container.
//!
//! ```text
//! magic      "SYLVEC1"
//! kind       u8            0 = syllable model, 1 = baseline
//! config     u32 length + UTF-8 JSON
//! vocabulary u64 words, then per word: u32 byte length + UTF-8 + u64 count;
//!            u64 total tokens, u8 lowercase flag
//! inventory  u64 syllables (PAD excluded), then one u32 scalar value each
//! tensors    u32 rank + u64 per dimension, then f32 values in row-major order
//! ```
//!
//! Syllable models store the syllable matrix `[dim, syllables + 1]`, a u32
//! bank count followed by `[filters, dim, width]` weights and `[filters]`
//! biases per bank, and the output table `[repr_dim, words]`. Baselines store
//! the input and output tables, both `[repr_dim, words]`. All integers and
//! floats are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::baseline::{BaselineModel, LookupTable};
use crate::compose::{ComposerParams, FilterBank};
use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::eval::WordVectors;
use crate::text::{build_syllable_inventory, SyllableInventory, VocabParts, Vocabulary};
use crate::trainer::{Model, OutputEmbeddings};

pub const MAGIC: &[u8; 7] = b"SYLVEC1";

const KIND_SYLLABLE: u8 = 0;
const KIND_BASELINE: u8 = 1;

/// Either model kind, as stored in a model file.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyModel {
    Syllable(Model),
    Baseline(BaselineModel),
}

impl AnyModel {
    pub fn config(&self) -> &TrainConfig {
        match self {
            AnyModel::Syllable(m) => &m.config,
            AnyModel::Baseline(m) => &m.config,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            AnyModel::Syllable(_) => "syllable",
            AnyModel::Baseline(_) => "baseline",
        }
    }

    pub fn as_word_vectors(&self) -> &dyn WordVectors {
        match self {
            AnyModel::Syllable(m) => m,
            AnyModel::Baseline(m) => m,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut input = BufReader::new(File::open(path)?);
        Self::read_from(&mut input)
    }

    pub fn write_to<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(MAGIC)?;
        match self {
            AnyModel::Syllable(m) => {
                out.write_u8(KIND_SYLLABLE)?;
                write_header(out, &m.config, &m.vocab)?;
                write_inventory(out, &m.inventory)?;
                let c = &m.composer;
                let (d, s) = (c.dim(), c.inventory_size());
                write_tensor(out, &[d, s], transpose(c.syllable_matrix(), s, d))?;
                out.write_u32::<LittleEndian>(c.banks().len() as u32)?;
                for bank in c.banks() {
                    let (n, w) = (bank.count(), bank.width());
                    let mut weights = Vec::with_capacity(n * d * w);
                    for k in 0..n {
                        weights.extend(transpose(bank.filter(k), w, d));
                    }
                    write_tensor(out, &[n, d, w], weights)?;
                    write_tensor(out, &[n], bank.biases().to_vec())?;
                }
                write_table(out, &m.output)?;
            }
            AnyModel::Baseline(m) => {
                out.write_u8(KIND_BASELINE)?;
                write_header(out, &m.config, &m.vocab)?;
                write_table(out, m.input.table())?;
                write_table(out, &m.output)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self> {
        let mut magic = [0u8; 7];
        input
            .read_exact(&mut magic)
            .map_err(|_| Error::Format("file is too short to be a model".into()))?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic; not a model file".into()));
        }
        let kind = input.read_u8()?;
        let model = match kind {
            KIND_SYLLABLE => {
                let (config, vocab) = read_header(input)?;
                let inventory = read_inventory(input)?;
                if inventory != build_syllable_inventory(&vocab) {
                    return Err(Error::Format("syllable inventory does not match the vocabulary".into()));
                }
                let (shape, q) = read_tensor(input, 2)?;
                let (d, s) = (shape[0], shape[1]);
                let syllables = transpose(&q, d, s);
                let banks_len = input.read_u32::<LittleEndian>()? as usize;
                let mut banks = Vec::with_capacity(banks_len);
                for _ in 0..banks_len {
                    let (shape, w) = read_tensor(input, 3)?;
                    let (n, bd, width) = (shape[0], shape[1], shape[2]);
                    if bd != d {
                        return Err(Error::Format("filter rows do not match the syllable dimension".into()));
                    }
                    let mut weights = Vec::with_capacity(w.len());
                    for k in 0..n {
                        weights.extend(transpose(&w[k * d * width..(k + 1) * d * width], d, width));
                    }
                    let (bshape, biases) = read_tensor(input, 1)?;
                    if bshape[0] != n {
                        return Err(Error::Format("bias count does not match filter count".into()));
                    }
                    banks.push(FilterBank::from_raw(width, n, d, weights, biases)?);
                }
                let composer = ComposerParams::from_raw(d, syllables, banks)?;
                let output = read_table(input)?;
                let model = Model {
                    vocab,
                    inventory,
                    composer,
                    output,
                    config,
                };
                model.validate()?;
                AnyModel::Syllable(model)
            }
            KIND_BASELINE => {
                let (config, vocab) = read_header(input)?;
                let input_table = LookupTable::from_table(read_table(input)?);
                let output = read_table(input)?;
                let model = BaselineModel {
                    vocab,
                    input: input_table,
                    output,
                    config,
                };
                model.validate()?;
                AnyModel::Baseline(model)
            }
            other => return Err(Error::Format(format!("unknown model kind {other}"))),
        };
        let mut rest = [0u8; 1];
        if input.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after model data".into()));
        }
        Ok(model)
    }
}

impl From<Model> for AnyModel {
    fn from(m: Model) -> Self {
        AnyModel::Syllable(m)
    }
}

impl From<BaselineModel> for AnyModel {
    fn from(m: BaselineModel) -> Self {
        AnyModel::Baseline(m)
    }
}

/// Transposes a row-major `rows x cols` matrix.
fn transpose(m: &[f32], rows: usize, cols: usize) -> Vec<f32> {
    let mut t = vec![0.0; m.len()];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = m[r * cols + c];
        }
    }
    t
}

fn write_header<W: Write>(out: &mut W, config: &TrainConfig, vocab: &Vocabulary) -> Result<()> {
    let json = serde_json::to_vec(config).map_err(|e| Error::Format(e.to_string()))?;
    out.write_u32::<LittleEndian>(json.len() as u32)?;
    out.write_all(&json)?;

    let parts = vocab.to_parts();
    out.write_u64::<LittleEndian>(parts.words.len() as u64)?;
    for (w, c) in parts.words.iter().zip(&parts.counts) {
        out.write_u32::<LittleEndian>(w.len() as u32)?;
        out.write_all(w.as_bytes())?;
        out.write_u64::<LittleEndian>(*c)?;
    }
    out.write_u64::<LittleEndian>(parts.total_tokens)?;
    out.write_u8(parts.lowercase as u8)?;
    Ok(())
}

fn read_header<R: Read>(input: &mut R) -> Result<(TrainConfig, Vocabulary)> {
    let len = input.read_u32::<LittleEndian>()? as usize;
    let json = read_bytes(input, len)?;
    let config: TrainConfig =
        serde_json::from_slice(&json).map_err(|e| Error::Format(format!("config: {e}")))?;
    config.validate().map_err(|e| Error::Format(format!("config: {e}")))?;

    let n = input.read_u64::<LittleEndian>()? as usize;
    let mut words = Vec::with_capacity(n.min(1 << 20));
    let mut counts = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let len = input.read_u32::<LittleEndian>()? as usize;
        let bytes = read_bytes(input, len)?;
        words.push(String::from_utf8(bytes).map_err(|_| Error::Format("word is not UTF-8".into()))?);
        counts.push(input.read_u64::<LittleEndian>()?);
    }
    let total_tokens = input.read_u64::<LittleEndian>()?;
    let lowercase = input.read_u8()? != 0;
    let vocab = Vocabulary::from_parts(VocabParts {
        words,
        counts,
        total_tokens,
        lowercase,
    })
    .map_err(|e| Error::Format(format!("vocabulary: {e}")))?;
    Ok((config, vocab))
}

fn read_bytes<R: Read>(input: &mut R, len: usize) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    input.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(Error::Format("unexpected end of file".into()));
    }
    Ok(buf)
}

fn write_inventory<W: Write>(out: &mut W, inventory: &SyllableInventory) -> Result<()> {
    out.write_u64::<LittleEndian>(inventory.syllables().len() as u64)?;
    for &s in inventory.syllables() {
        out.write_u32::<LittleEndian>(s as u32)?;
    }
    Ok(())
}

fn read_inventory<R: Read>(input: &mut R) -> Result<SyllableInventory> {
    let n = input.read_u64::<LittleEndian>()? as usize;
    let mut syllables = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let code = input.read_u32::<LittleEndian>()?;
        syllables.push(char::from_u32(code).ok_or_else(|| Error::Format(format!("invalid scalar {code:#x}")))?);
    }
    SyllableInventory::from_syllables(syllables).map_err(|e| Error::Format(e.to_string()))
}

fn write_tensor<W: Write>(out: &mut W, shape: &[usize], data: Vec<f32>) -> Result<()> {
    debug_assert_eq!(shape.iter().product::<usize>(), data.len());
    out.write_u32::<LittleEndian>(shape.len() as u32)?;
    for &d in shape {
        out.write_u64::<LittleEndian>(d as u64)?;
    }
    for x in data {
        out.write_f32::<LittleEndian>(x)?;
    }
    Ok(())
}

fn read_tensor<R: Read>(input: &mut R, rank: usize) -> Result<(Vec<usize>, Vec<f32>)> {
    let got = input.read_u32::<LittleEndian>()? as usize;
    if got != rank {
        return Err(Error::Format(format!("expected a rank-{rank} tensor, found rank {got}")));
    }
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        shape.push(input.read_u64::<LittleEndian>()? as usize);
    }
    let len = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("tensor shape overflows".into()))?;
    let bytes = read_bytes(input, len * 4)?;
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok((shape, data))
}

fn write_table<W: Write>(out: &mut W, table: &OutputEmbeddings<f32>) -> Result<()> {
    let (h, v) = (table.dim(), table.len());
    write_tensor(out, &[h, v], transpose(table.as_slice(), v, h))
}

fn read_table<R: Read>(input: &mut R) -> Result<OutputEmbeddings<f32>> {
    let (shape, data) = read_tensor(input, 2)?;
    OutputEmbeddings::from_raw(shape[0], transpose(&data, shape[0], shape[1]))
}
