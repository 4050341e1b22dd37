//! Corpus ingestion: whitespace tokenization, syllable decomposition, and the
//! word and syllable id tables built from a corpus.
//!
//! A word here is one whitespace-delimited token (an eojeol). Each precomposed
//! Hangul code point (U+AC00..=U+D7A3) is one syllable; any other scalar value
//! (Latin letters, digits, punctuation) is kept as a single atomic unit so that
//! no word decomposes to nothing.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Id reserved for the zero padding syllable.
pub const PAD: u32 = 0;

const HANGUL_FIRST: char = '\u{AC00}';
const HANGUL_LAST: char = '\u{D7A3}';

pub fn is_hangul_syllable(c: char) -> bool {
    (HANGUL_FIRST..=HANGUL_LAST).contains(&c)
}

/// One whitespace-delimited corpus word.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Token(String);

impl Token {
    /// Wraps `text`, rejecting empty strings and strings containing whitespace.
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.is_empty() {
            return Err(Error::Input("empty token".into()));
        }
        if text.chars().any(char::is_whitespace) {
            return Err(Error::Input(format!("token {text:?} contains whitespace")));
        }
        Ok(Token(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl Deref for Token {
    type Target = str;

    fn deref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Splits a line on Unicode whitespace, dropping empty segments.
pub fn tokenize(line: &str) -> Vec<Token> {
    line.split_whitespace().map(|t| Token(t.to_owned())).collect()
}

/// Returns the syllables of `word` in order, one per Unicode scalar value.
pub fn decompose_syllables(word: &str) -> Vec<char> {
    word.chars().collect()
}

/// Applies the optional token normalization used when building a vocabulary.
pub fn normalize_token(token: &str, lowercase: bool) -> String {
    if lowercase {
        token.to_lowercase()
    } else {
        token.to_owned()
    }
}

/// Dense ids for every syllable seen in the vocabulary, with [`PAD`] at 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyllableInventory {
    syllable_to_id: HashMap<char, u32>,
    // id i + 1 -> syllable
    id_to_syllable: Vec<char>,
}

impl SyllableInventory {
    /// Builds an inventory from syllables listed in id order (PAD excluded).
    pub fn from_syllables(syllables: Vec<char>) -> Result<Self> {
        let mut syllable_to_id = HashMap::with_capacity(syllables.len());
        for (i, &s) in syllables.iter().enumerate() {
            if syllable_to_id.insert(s, i as u32 + 1).is_some() {
                return Err(Error::Input(format!("duplicate syllable {s:?} in inventory")));
            }
        }
        Ok(SyllableInventory {
            syllable_to_id,
            id_to_syllable: syllables,
        })
    }

    /// Number of ids including PAD.
    pub fn len(&self) -> usize {
        self.id_to_syllable.len() + 1
    }

    /// Never true: PAD is always present.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, syllable: char) -> Option<u32> {
        self.syllable_to_id.get(&syllable).copied()
    }

    /// The syllable for `id`, or `None` for PAD and out-of-range ids.
    pub fn syllable(&self, id: u32) -> Option<char> {
        if id == PAD {
            return None;
        }
        self.id_to_syllable.get(id as usize - 1).copied()
    }

    /// Syllables in id order, PAD excluded.
    pub fn syllables(&self) -> &[char] {
        &self.id_to_syllable
    }

    /// Maps every syllable of `word` to its id.
    pub fn encode(&self, word: &str) -> Result<Vec<u32>> {
        if word.is_empty() {
            return Err(Error::Input("empty word".into()));
        }
        decompose_syllables(word)
            .into_iter()
            .map(|s| self.id(s).ok_or_else(|| Error::unknown_syllable(s, word)))
            .collect()
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn decode(&self, ids: &[u32]) -> Option<String> {
        ids.iter().map(|&id| self.syllable(id)).collect()
    }
}

/// Retained corpus words with counts and precomputed syllable ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    word_to_id: HashMap<String, u32>,
    id_to_word: Vec<String>,
    counts: Vec<u64>,
    total_tokens: u64,
    syllable_ids: Vec<Vec<u32>>,
    lowercase: bool,
}

/// Serializable form of a vocabulary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct VocabParts {
    pub words: Vec<String>,
    pub counts: Vec<u64>,
    pub total_tokens: u64,
    pub lowercase: bool,
}

impl Vocabulary {
    /// Assembles a vocabulary from words already in id order.
    ///
    /// Syllable ids are resolved against the inventory that
    /// [`build_syllable_inventory`] derives from the same word list.
    pub fn from_words(words: Vec<String>, counts: Vec<u64>, total_tokens: u64, lowercase: bool) -> Result<Self> {
        if words.len() != counts.len() {
            return Err(Error::Input(format!(
                "{} words but {} counts",
                words.len(),
                counts.len()
            )));
        }
        if words.is_empty() {
            return Err(Error::Config("vocabulary is empty".into()));
        }
        let mut word_to_id = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            Token::new(w.as_str())?;
            if word_to_id.insert(w.clone(), i as u32).is_some() {
                return Err(Error::Input(format!("duplicate word {w:?} in vocabulary")));
            }
        }
        let inventory = inventory_of(&words);
        let syllable_ids = words
            .iter()
            .map(|w| inventory.encode(w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Vocabulary {
            word_to_id,
            id_to_word: words,
            counts,
            total_tokens,
            syllable_ids,
            lowercase,
        })
    }

    pub(crate) fn to_parts(&self) -> VocabParts {
        VocabParts {
            words: self.id_to_word.clone(),
            counts: self.counts.clone(),
            total_tokens: self.total_tokens,
            lowercase: self.lowercase,
        }
    }

    pub(crate) fn from_parts(parts: VocabParts) -> Result<Self> {
        Self::from_words(parts.words, parts.counts, parts.total_tokens, parts.lowercase)
    }

    pub fn len(&self) -> usize {
        self.id_to_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_word.is_empty()
    }

    /// Id of `word` after the vocabulary's normalization is applied.
    pub fn id(&self, word: &str) -> Option<u32> {
        if self.lowercase {
            self.word_to_id.get(&word.to_lowercase()).copied()
        } else {
            self.word_to_id.get(word).copied()
        }
    }

    pub fn word(&self, id: u32) -> &str {
        &self.id_to_word[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.id_to_word
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of tokens in the corpus the vocabulary was built from,
    /// including those below the count threshold.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Sum of counts over retained words.
    pub fn retained_tokens(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn syllable_ids(&self, id: u32) -> &[u32] {
        &self.syllable_ids[id as usize]
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    pub fn normalize(&self, word: &str) -> String {
        normalize_token(word, self.lowercase)
    }

    /// Maps a corpus line to retained word ids, dropping everything else.
    pub fn encode_line(&self, line: &str) -> Vec<u32> {
        line.split_whitespace().filter_map(|t| self.id(t)).collect()
    }
}

/// Counts tokens from `reader` and keeps those seen at least `min_count` times.
///
/// Ids go to words in descending count order; equal counts keep the order in
/// which the words first appeared.
pub fn build_vocab_from_reader<R: BufRead>(reader: R, min_count: u64, lowercase: bool) -> Result<Vocabulary> {
    // word -> (count, first occurrence)
    let mut seen: HashMap<String, (u64, usize)> = HashMap::new();
    let mut total = 0u64;
    for line in reader.lines() {
        let line = line?;
        for token in line.split_whitespace() {
            total += 1;
            let next = seen.len();
            let key = normalize_token(token, lowercase);
            seen.entry(key).or_insert((0, next)).0 += 1;
        }
    }

    let mut retained: Vec<(String, u64, usize)> = seen
        .into_iter()
        .filter(|(_, (count, _))| *count >= min_count)
        .map(|(w, (count, first))| (w, count, first))
        .collect();
    if retained.is_empty() {
        return Err(Error::Config(format!(
            "no word occurs at least {min_count} times; the vocabulary would be empty"
        )));
    }
    retained.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));

    let (words, counts) = retained.into_iter().map(|(w, c, _)| (w, c)).unzip();
    Vocabulary::from_words(words, counts, total, lowercase)
}

/// Reads a UTF-8 corpus file and builds its vocabulary. See
/// [`build_vocab_from_reader`].
pub fn build_vocab(corpus_path: impl AsRef<Path>, min_count: u64) -> Result<Vocabulary> {
    build_vocab_with(corpus_path, min_count, false)
}

pub fn build_vocab_with(corpus_path: impl AsRef<Path>, min_count: u64, lowercase: bool) -> Result<Vocabulary> {
    let file = File::open(corpus_path)?;
    build_vocab_from_reader(BufReader::new(file), min_count, lowercase)
}

fn inventory_of(words: &[String]) -> SyllableInventory {
    let mut order = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for w in words {
        for s in w.chars() {
            if seen.insert(s) {
                order.push(s);
            }
        }
    }
    SyllableInventory::from_syllables(order).expect("syllables are deduplicated")
}

/// Collects every syllable of the retained words, in order of first
/// appearance when scanning words by ascending id.
pub fn build_syllable_inventory(vocab: &Vocabulary) -> SyllableInventory {
    inventory_of(vocab.words())
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};
    use std::io::Cursor;

    use proptest::prelude::*;

    use super::*;

    fn vocab_of(corpus: &str, min_count: u64) -> Vocabulary {
        build_vocab_from_reader(Cursor::new(corpus), min_count, false).unwrap()
    }

    fn strings(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(Token::as_str).collect()
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(strings(&tokenize("나는 간다")), ["나는", "간다"]);
        assert!(tokenize("").is_empty());
        assert_eq!(strings(&tokenize("  a  b ")), ["a", "b"]);
        assert_eq!(strings(&tokenize("a\tb\u{3000}c\n")), ["a", "b", "c"]);
    }

    #[test]
    fn token_rejects_empty_and_whitespace() {
        assert!(Token::new("").is_err());
        assert!(Token::new("a b").is_err());
        assert_eq!(Token::new("대학").unwrap().as_str(), "대학");
    }

    #[test]
    fn decompose_examples() {
        assert_eq!(decompose_syllables("안녕하세요"), ['안', '녕', '하', '세', '요']);
        assert_eq!(decompose_syllables("대학"), ['대', '학']);
        assert_eq!(decompose_syllables("a나"), ['a', '나']);
        assert!(is_hangul_syllable('가') && is_hangul_syllable('힣'));
        assert!(!is_hangul_syllable('a') && !is_hangul_syllable('ㄱ'));
    }

    #[test]
    fn vocab_counts_and_order() {
        let v = vocab_of("a a b", 1);
        assert_eq!(v.len(), 2);
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.count(0), 2);
        assert_eq!(v.count(1), 1);
        assert_eq!(v.total_tokens(), 3);

        let v = vocab_of("a a b", 2);
        assert_eq!(v.words(), ["a"]);
        assert_eq!(v.id("b"), None);
    }

    #[test]
    fn vocab_ties_follow_first_occurrence() {
        let v = vocab_of("c b a\na b c", 1);
        assert_eq!(v.words(), ["c", "b", "a"]);
    }

    #[test]
    fn vocab_counts_match_recount() {
        let corpus = "대학 에 간다 대학 을\n나는 대학 에 간다\n  나는 간다 a1 a1 \n";
        let v = vocab_of(corpus, 1);
        let mut oracle: HashMap<&str, u64> = HashMap::new();
        for line in corpus.lines() {
            for t in line.split(' ').filter(|t| !t.is_empty()) {
                *oracle.entry(t).or_default() += 1;
            }
        }
        assert_eq!(v.len(), oracle.len());
        for (w, c) in oracle {
            assert_eq!(v.count(v.id(w).unwrap()), c, "{w}");
        }
    }

    #[test]
    fn empty_vocab_is_a_config_error() {
        let err = build_vocab_from_reader(Cursor::new("a b"), 2, false).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = build_vocab_from_reader(Cursor::new(""), 1, false).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = build_vocab("/definitely/not/here.txt", 1).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    #[test]
    fn lowercasing_is_optional() {
        let v = build_vocab_from_reader(Cursor::new("Seoul seoul"), 1, false).unwrap();
        assert_eq!(v.len(), 2);
        let v = build_vocab_from_reader(Cursor::new("Seoul seoul"), 1, true).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.id("SEOUL"), Some(0));
    }

    #[test]
    fn inventory_examples() {
        let v = Vocabulary::from_words(vec!["대학".into(), "대문".into()], vec![2, 1], 3, false).unwrap();
        let inv = build_syllable_inventory(&v);
        assert_eq!(inv.len(), 4);
        assert_eq!(inv.syllables(), ['대', '학', '문']);
        assert_eq!(inv.syllable(PAD), None);

        let v = Vocabulary::from_words(vec!["aa".into()], vec![1], 1, false).unwrap();
        let inv = build_syllable_inventory(&v);
        assert_eq!(inv.len(), 2);
        assert_eq!(inv.id('a'), Some(1));
    }

    #[test]
    fn inventory_matches_set_union() {
        let v = vocab_of("학교 에서 공부 하는 학생\n대학 에서 공부\n", 1);
        let inv = build_syllable_inventory(&v);
        let oracle: BTreeSet<char> = v.words().iter().flat_map(|w| w.chars()).collect();
        let got: BTreeSet<char> = inv.syllables().iter().copied().collect();
        assert_eq!(got, oracle);
        assert_eq!(inv.len(), oracle.len() + 1);
    }

    #[test]
    fn unknown_syllable_is_named() {
        let v = vocab_of("대학", 1);
        let inv = build_syllable_inventory(&v);
        match inv.encode("대학교").unwrap_err() {
            Error::UnknownSyllable { syllable, .. } => assert_eq!(syllable, '교'),
            e => panic!("unexpected {e}"),
        }
    }

    proptest! {
        #[test]
        fn decomposition_length_is_scalar_count(word in "\\PC{1,12}") {
            prop_assert_eq!(decompose_syllables(&word).len(), word.chars().count());
        }

        #[test]
        fn vocab_round_trips_and_is_deterministic(
            lines in prop::collection::vec(
                prop::collection::vec("[가-힣a-c]{1,4}", 0..8), 1..6)
        ) {
            let corpus: String = lines.iter().map(|l| l.join(" ") + "\n").collect();
            let mut oracle = BTreeMap::new();
            for l in &lines {
                for t in l {
                    *oracle.entry(t.clone()).or_insert(0u64) += 1;
                }
            }
            prop_assume!(!oracle.is_empty());
            let v = vocab_of(&corpus, 1);
            let again = vocab_of(&corpus, 1);
            prop_assert_eq!(&v, &again);
            prop_assert_eq!(v.len(), oracle.len());

            let inv = build_syllable_inventory(&v);
            for id in 0..v.len() as u32 {
                let ids = v.syllable_ids(id);
                prop_assert!(!ids.is_empty());
                prop_assert!(!ids.contains(&PAD));
                prop_assert_eq!(inv.decode(ids).unwrap(), v.word(id));
                prop_assert_eq!(inv.encode(v.word(id)).unwrap(), ids.to_vec());
                prop_assert_eq!(v.count(id), oracle[v.word(id)]);
            }
            for w in 1..v.len() as u32 {
                prop_assert!(v.count(w - 1) >= v.count(w));
            }
        }
    }
}
