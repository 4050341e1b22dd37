//! Plain-text embedding format: a `"<words> <dim>"` header, then one line per
//! word with its values in fixed six-decimal notation.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::eval::WordVectors;

/// Writes every vocabulary word, in id order. Syllable models export their
/// composed representations.
pub fn write_text_embeddings<M: WordVectors + ?Sized, W: Write>(model: &M, mut out: W) -> Result<()> {
    let vocab = model.vocab();
    writeln!(out, "{} {}", vocab.len(), model.repr_dim())?;
    for id in 0..vocab.len() as u32 {
        out.write_all(vocab.word(id).as_bytes())?;
        for x in model.vocab_vector(id)? {
            write!(out, " {x:.6}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the text format back into `(word, vector)` rows.
pub fn read_text_embeddings<R: BufRead>(reader: R) -> Result<Vec<(String, Vec<f64>)>> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing header".into(),
    })??;
    let bad_header = || Error::Parse {
        line: 1,
        message: format!("invalid header {header:?}"),
    };
    let mut fields = header.split_whitespace();
    let words: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad_header)?;
    let dim: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad_header)?;

    let mut rows = Vec::with_capacity(words);
    for (i, line) in lines.enumerate() {
        let line = line?;
        let n = i + 2;
        let mut parts = line.split(' ');
        let word = parts.next().filter(|w| !w.is_empty()).ok_or_else(|| Error::Parse {
            line: n,
            message: "missing word".into(),
        })?;
        let values = parts
            .map(|p| {
                p.parse::<f64>().map_err(|_| Error::Parse {
                    line: n,
                    message: format!("invalid value {p:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != dim {
            return Err(Error::Parse {
                line: n,
                message: format!("expected {dim} values, found {}", values.len()),
            });
        }
        rows.push((word.to_owned(), values));
    }
    if rows.len() != words {
        return Err(Error::Parse {
            line: rows.len() + 1,
            message: format!("header announces {words} words, found {}", rows.len()),
        });
    }
    Ok(rows)
}
