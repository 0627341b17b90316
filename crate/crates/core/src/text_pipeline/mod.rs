//! Text preprocessing: tokenize, drop stopwords, filter by length, lowercase,
//! stem. The order is fixed; the length filter sees the raw token.

mod porter;

use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusStats;
use crate::error::{Error, Result};

pub use porter::stem as porter_stem;

const EMBEDDED_STOPWORDS: &str = include_str!("stopwords_en.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Stemmer {
    #[default]
    Porter,
    None,
}

impl Stemmer {
    pub fn apply(self, term: &str) -> String {
        match self {
            Stemmer::Porter => porter::stem(term),
            Stemmer::None => term.to_string(),
        }
    }
}

impl fmt::Display for Stemmer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stemmer::Porter => "porter",
            Stemmer::None => "none",
        })
    }
}

impl FromStr for Stemmer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "porter" => Ok(Stemmer::Porter),
            "none" => Ok(Stemmer::None),
            other => Err(Error::Config(format!("unknown stemmer `{other}`"))),
        }
    }
}

/// Whether digit runs are part of tokens or act as separators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DigitPolicy {
    #[default]
    Drop,
    Keep,
}

impl fmt::Display for DigitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DigitPolicy::Drop => "drop",
            DigitPolicy::Keep => "keep",
        })
    }
}

/// Stopwords are stored lowercase; lookups lowercase the probe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordSet {
    words: BTreeSet<String>,
    source: String,
}

impl StopwordSet {
    /// The bundled SMART-style English list.
    pub fn english() -> Self {
        Self::from_lines(EMBEDDED_STOPWORDS.lines(), "smart-en")
    }

    pub fn empty() -> Self {
        Self {
            words: BTreeSet::new(),
            source: "none".into(),
        }
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::from_lines(words, "custom")
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut lines = Vec::new();
        for line in std::io::BufReader::new(file).lines() {
            lines.push(line?);
        }
        Ok(Self::from_lines(lines, &path.display().to_string()))
    }

    fn from_lines<I, S>(lines: I, source: &str) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = lines
            .into_iter()
            .map(|l| l.as_ref().trim().to_lowercase())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self {
            words,
            source: source.to_string(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        if word.chars().any(char::is_uppercase) {
            self.words.contains(&word.to_lowercase())
        } else {
            self.words.contains(word)
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl Default for StopwordSet {
    fn default() -> Self {
        Self::english()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub min_len: usize,
    pub max_len: usize,
    pub stopwords: StopwordSet,
    pub stemmer: Stemmer,
    pub digit_policy: DigitPolicy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            min_len: 2,
            max_len: 25,
            stopwords: StopwordSet::english(),
            stemmer: Stemmer::Porter,
            digit_policy: DigitPolicy::Drop,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_len < 1 || self.min_len > self.max_len {
            return Err(Error::Config(format!(
                "token length bounds must satisfy 1 <= min_len <= max_len, got {}..{}",
                self.min_len, self.max_len
            )));
        }
        Ok(())
    }

    /// One-line description written into dataset headers.
    pub fn describe(&self) -> String {
        format!(
            "min_len={} max_len={} stemmer={} digits={} stopwords={}({})",
            self.min_len,
            self.max_len,
            self.stemmer,
            self.digit_policy,
            self.stopwords.source(),
            self.stopwords.len()
        )
    }
}

/// Splits text into maximal runs of letters (plus digits under
/// [`DigitPolicy::Keep`]). Everything else is a separator.
pub fn tokenize(text: &str, digits: DigitPolicy) -> Vec<&str> {
    let is_token_char = |c: char| match digits {
        DigitPolicy::Drop => c.is_alphabetic(),
        DigitPolicy::Keep => c.is_alphanumeric(),
    };
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (is_token_char(c), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                tokens.push(&text[s..i]);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        tokens.push(&text[s..]);
    }
    tokens
}

pub fn process(text: &str, cfg: &PipelineConfig) -> Vec<String> {
    tokenize(text, cfg.digit_policy)
        .into_iter()
        .filter(|t| !cfg.stopwords.contains(t))
        .filter(|t| {
            let len = t.chars().count();
            len >= cfg.min_len && len <= cfg.max_len
        })
        .map(|t| cfg.stemmer.apply(&t.to_lowercase()))
        .collect()
}

/// The `k` terms with the highest collection frequency, ties broken by the
/// term itself in ascending order.
pub fn top_terms(stats: &CorpusStats, k: usize) -> Vec<String> {
    let mut terms: Vec<(&String, u64)> = stats.cf.iter().map(|(t, &c)| (t, c)).collect();
    terms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    terms.into_iter().take(k).map(|(t, _)| t.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_stop() -> PipelineConfig {
        PipelineConfig {
            stopwords: StopwordSet::empty(),
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn tokenize_examples() {
        assert!(tokenize("", DigitPolicy::Drop).is_empty());
        assert_eq!(
            tokenize("U.S.-based news!", DigitPolicy::Drop),
            vec!["U", "S", "based", "news"]
        );
        assert_eq!(tokenize("year 2016 report", DigitPolicy::Drop), vec!["year", "report"]);
        assert_eq!(
            tokenize("year 2016 report", DigitPolicy::Keep),
            vec!["year", "2016", "report"]
        );
    }

    #[test]
    fn process_examples() {
        let cfg = PipelineConfig::default();
        assert_eq!(process("The cats and running dogs", &cfg), vec!["cat", "run", "dog"]);
        assert!(process("a", &no_stop()).is_empty());
        let long = "abcdefghijklmnopqrstuvwxyz";
        assert_eq!(long.len(), 26);
        assert!(process(long, &no_stop()).is_empty());
        assert_eq!(process(&long[..25], &no_stop()).len(), 1);
    }

    #[test]
    fn stopwords_match_any_case() {
        let cfg = PipelineConfig::default();
        assert!(process("THE And But", &cfg).is_empty());
        let set = StopwordSet::english();
        for w in ["and", "the", "but"] {
            assert!(set.contains(w));
        }
    }

    #[test]
    fn length_filter_sees_raw_token() {
        // "ies" is three letters raw but stems to "i"
        let out = process("ies", &no_stop());
        assert_eq!(out, vec!["i"]);
    }

    #[test]
    fn invalid_bounds_rejected() {
        let cfg = PipelineConfig {
            min_len: 5,
            max_len: 4,
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = PipelineConfig {
            min_len: 0,
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
