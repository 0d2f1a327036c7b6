//! Labeled word samples.
//!
//! The native text format is line oriented: a label (`+`, `-` or `−`)
//! followed by whitespace-separated symbol tokens. A label with no tokens is
//! the empty word. Lines starting with `#` are comments.
//!
//! ```text
//! # two positives, one negative
//! + a b
//! +
//! - a
//! ```
//!
//! Symbols are arbitrary tokens. Ids `1..=n` are assigned by sorting the
//! distinct tokens lexicographically, so the numbering does not depend on
//! line order.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// 1-based symbol index into an [`Alphabet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SymbolId(pub u32);

impl SymbolId {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    tokens: Vec<String>,
}

impl Alphabet {
    /// Builds an alphabet from arbitrary tokens, sorting and deduplicating
    /// them.
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = BTreeSet::new();
        for t in tokens {
            let t = t.into();
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!(
                    "symbol token {t:?} is empty or contains whitespace"
                )));
            }
            set.insert(t);
        }
        Ok(Alphabet {
            tokens: set.into_iter().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id_of(&self, token: &str) -> Option<SymbolId> {
        self.tokens
            .binary_search_by(|t| t.as_str().cmp(token))
            .ok()
            .map(|i| SymbolId(i as u32 + 1))
    }

    pub fn token(&self, id: SymbolId) -> &str {
        &self.tokens[id.index()]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn ids(&self) -> impl Iterator<Item = SymbolId> {
        (1..=self.tokens.len() as u32).map(SymbolId)
    }
}

/// A sequence of symbols. The empty word is λ.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Word(pub Vec<SymbolId>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[SymbolId] {
        &self.0
    }

    /// The first `len` symbols.
    pub fn prefix(&self, len: usize) -> Word {
        Word(self.0[..len].to_vec())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn label(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
        }
    }
}

/// Identifies a word of a sample by its sign and its position in that list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WordRef {
    pub sign: Sign,
    pub index: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSample {
    alphabet: Alphabet,
    positives: Vec<Word>,
    negatives: Vec<Word>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

impl LabeledSample {
    /// Builds a sample from already-indexed words, dropping duplicates within
    /// a label and rejecting words that carry both labels.
    pub fn new(alphabet: Alphabet, positives: Vec<Word>, negatives: Vec<Word>) -> Result<Self> {
        let n = alphabet.len() as u32;
        for w in positives.iter().chain(&negatives) {
            if let Some(bad) = w.0.iter().find(|s| s.0 == 0 || s.0 > n) {
                return Err(Error::OutOfRange {
                    what: "symbol id",
                    value: bad.0 as usize,
                    range: format!("1..={n}"),
                });
            }
        }
        let positives = dedup(positives);
        let negatives = dedup(negatives);
        let pos: HashSet<&Word> = positives.iter().collect();
        if let Some(w) = negatives.iter().find(|w| pos.contains(w)) {
            return Err(Error::InvalidArgument(format!(
                "word {:?} is labeled both positive and negative",
                render(&alphabet, w)
            )));
        }
        Ok(LabeledSample {
            alphabet,
            positives,
            negatives,
        })
    }

    /// Convenience constructor where every character is one symbol and the
    /// alphabet is the set of characters used.
    pub fn from_chars(positives: &[&str], negatives: &[&str]) -> Result<Self> {
        let alphabet = Alphabet::new(
            positives
                .iter()
                .chain(negatives)
                .flat_map(|w| w.chars())
                .map(String::from),
        )?;
        Self::from_chars_over(alphabet, positives, negatives)
    }

    /// Like [`LabeledSample::from_chars`] but over an explicit alphabet,
    /// which may contain symbols no word uses.
    pub fn from_chars_over(alphabet: Alphabet, positives: &[&str], negatives: &[&str]) -> Result<Self> {
        let conv = |w: &&str| -> Result<Word> {
            w.chars()
                .map(|c| {
                    alphabet.id_of(&c.to_string()).ok_or_else(|| {
                        Error::InvalidArgument(format!("symbol {c:?} not in alphabet"))
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(Word)
        };
        let pos = positives.iter().map(conv).collect::<Result<Vec<_>>>()?;
        let neg = negatives.iter().map(conv).collect::<Result<Vec<_>>>()?;
        Self::new(alphabet, pos, neg)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn n(&self) -> usize {
        self.alphabet.len()
    }

    pub fn positives(&self) -> &[Word] {
        &self.positives
    }

    pub fn negatives(&self) -> &[Word] {
        &self.negatives
    }

    pub fn words(&self, sign: Sign) -> &[Word] {
        match sign {
            Sign::Positive => &self.positives,
            Sign::Negative => &self.negatives,
        }
    }

    pub fn word(&self, r: WordRef) -> &Word {
        &self.words(r.sign)[r.index]
    }

    /// All words, positives first, each with its reference.
    pub fn labeled_words(&self) -> impl Iterator<Item = (WordRef, &Word)> {
        let pos = self.positives.iter().enumerate().map(|(index, w)| {
            (
                WordRef {
                    sign: Sign::Positive,
                    index,
                },
                w,
            )
        });
        let neg = self.negatives.iter().enumerate().map(|(index, w)| {
            (
                WordRef {
                    sign: Sign::Negative,
                    index,
                },
                w,
            )
        });
        pos.chain(neg)
    }

    pub fn lambda_positive(&self) -> bool {
        self.positives.iter().any(Word::is_empty)
    }

    pub fn lambda_negative(&self) -> bool {
        self.negatives.iter().any(Word::is_empty)
    }

    pub fn render_word(&self, w: &Word) -> String {
        render(&self.alphabet, w)
    }

    /// Serializes in the native format, positives first.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (r, w) in self.labeled_words() {
            out.push(r.sign.label());
            for s in w.symbols() {
                out.push(' ');
                out.push_str(self.alphabet.token(*s));
            }
            out.push('\n');
        }
        out
    }
}

fn dedup(words: Vec<Word>) -> Vec<Word> {
    let mut seen = HashSet::new();
    words.into_iter().filter(|w| seen.insert(w.clone())).collect()
}

fn render(alphabet: &Alphabet, w: &Word) -> String {
    if w.is_empty() {
        return "λ".to_string();
    }
    let tokens: Vec<&str> = w.symbols().iter().map(|s| alphabet.token(*s)).collect();
    if tokens.iter().all(|t| t.chars().count() == 1) {
        tokens.concat()
    } else {
        tokens.join(" ")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SampleFormat {
    #[default]
    Native,
    Abbadingo,
}

/// Parses the native sample format, logging dropped duplicates.
pub fn parse_sample(text: &str) -> Result<LabeledSample> {
    let (sample, warnings) = parse_sample_with_warnings(text, SampleFormat::Native)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(sample)
}

pub fn parse_sample_as(text: &str, format: SampleFormat) -> Result<LabeledSample> {
    let (sample, warnings) = parse_sample_with_warnings(text, format)?;
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(sample)
}

struct RawLine<'a> {
    line: usize,
    sign: Sign,
    tokens: Vec<&'a str>,
}

pub fn parse_sample_with_warnings(
    text: &str,
    format: SampleFormat,
) -> Result<(LabeledSample, Vec<ParseWarning>)> {
    let mut warnings = Vec::new();
    let raw = match format {
        SampleFormat::Native => read_native(text)?,
        SampleFormat::Abbadingo => read_abbadingo(text, &mut warnings)?,
    };

    let alphabet = Alphabet::new(raw.iter().flat_map(|r| r.tokens.iter().copied()))?;
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    let mut seen: HashMap<Word, (Sign, usize)> = HashMap::new();
    for r in raw {
        let word = Word(
            r.tokens
                .iter()
                .map(|t| alphabet.id_of(t).expect("token collected into alphabet"))
                .collect(),
        );
        match seen.get(&word) {
            Some(&(sign, first)) if sign == r.sign => {
                warnings.push(ParseWarning {
                    line: r.line,
                    msg: format!(
                        "duplicate word {:?} (first seen on line {first}) dropped",
                        render(&alphabet, &word)
                    ),
                });
                continue;
            }
            Some(&(_, first)) => {
                return Err(Error::parse(
                    r.line,
                    format!(
                        "word {:?} labeled both + and - (other label on line {first})",
                        render(&alphabet, &word)
                    ),
                ));
            }
            None => {}
        }
        seen.insert(word.clone(), (r.sign, r.line));
        match r.sign {
            Sign::Positive => positives.push(word),
            Sign::Negative => negatives.push(word),
        }
    }
    Ok((
        LabeledSample {
            alphabet,
            positives,
            negatives,
        },
        warnings,
    ))
}

fn read_native(text: &str) -> Result<Vec<RawLine<'_>>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let label = parts.next().expect("nonempty line");
        let sign = match label {
            "+" => Sign::Positive,
            "-" | "−" => Sign::Negative,
            other => {
                return Err(Error::parse(
                    line_no,
                    format!("malformed label {other:?}; expected '+' or '-' followed by whitespace"),
                ))
            }
        };
        out.push(RawLine {
            line: line_no,
            sign,
            tokens: parts.collect(),
        });
    }
    Ok(out)
}

/// Abbadingo/StaMinA style: a header `count alphabet_size`, then one word per
/// line as `label length sym...` with label `1` (positive), `0` (negative) or
/// `-1` (unlabeled, skipped).
fn read_abbadingo<'a>(text: &'a str, warnings: &mut Vec<ParseWarning>) -> Result<Vec<RawLine<'a>>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header line `count alphabet_size`"))?;
    let nums: Vec<&str> = header.split_whitespace().collect();
    let declared = match nums.as_slice() {
        [count, _alpha] => count
            .parse::<usize>()
            .map_err(|_| Error::parse(hline, format!("bad word count {count:?}")))?,
        _ => {
            return Err(Error::parse(
                hline,
                "header must be `count alphabet_size`",
            ))
        }
    };

    let mut out = Vec::new();
    let mut count = 0;
    for (line_no, line) in lines {
        count += 1;
        let mut parts = line.split_whitespace();
        let label = parts.next().expect("nonempty line");
        let sign = match label {
            "1" => Some(Sign::Positive),
            "0" => Some(Sign::Negative),
            "-1" => None,
            other => return Err(Error::parse(line_no, format!("malformed label {other:?}"))),
        };
        let len_tok = parts
            .next()
            .ok_or_else(|| Error::parse(line_no, "missing word length"))?;
        let len: usize = len_tok
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad word length {len_tok:?}")))?;
        let tokens: Vec<&str> = parts.collect();
        if tokens.len() != len {
            return Err(Error::parse(
                line_no,
                format!("declared length {len} but found {} symbols", tokens.len()),
            ));
        }
        match sign {
            Some(sign) => out.push(RawLine {
                line: line_no,
                sign,
                tokens,
            }),
            None => warnings.push(ParseWarning {
                line: line_no,
                msg: "unlabeled word skipped".into(),
            }),
        }
    }
    if count != declared {
        warnings.push(ParseWarning {
            line: hline,
            msg: format!("header declares {declared} words but {count} were read"),
        });
    }
    Ok(out)
}

/// Per-symbol occurrence counts of a word.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WordMultiset {
    pub counts: Vec<u32>,
}

impl WordMultiset {
    /// The all-zero multiset, which represents λ.
    pub fn bottom(n: usize) -> Self {
        WordMultiset { counts: vec![0; n] }
    }

    pub fn size(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Multiset inclusion: every count is at most the other's.
    pub fn is_subset(&self, other: &WordMultiset) -> bool {
        self.counts.len() == other.counts.len()
            && self.counts.iter().zip(&other.counts).all(|(a, b)| a <= b)
    }

    pub fn is_strict_subset(&self, other: &WordMultiset) -> bool {
        self != other && self.is_subset(other)
    }
}

pub fn multiset_of(w: &Word, n: usize) -> WordMultiset {
    let mut counts = vec![0u32; n];
    for s in w.symbols() {
        counts[s.index()] += 1;
    }
    WordMultiset { counts }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleStats {
    pub positives: usize,
    pub negatives: usize,
    pub longest_positive: usize,
    pub longest_negative: usize,
    pub alphabet_size: usize,
    pub lambda_positive: bool,
    pub lambda_negative: bool,
}

pub fn sample_stats(s: &LabeledSample) -> SampleStats {
    let longest = |ws: &[Word]| ws.iter().map(Word::len).max().unwrap_or(0);
    SampleStats {
        positives: s.positives.len(),
        negatives: s.negatives.len(),
        longest_positive: longest(&s.positives),
        longest_negative: longest(&s.negatives),
        alphabet_size: s.n(),
        lambda_positive: s.lambda_positive(),
        lambda_negative: s.lambda_negative(),
    }
}
