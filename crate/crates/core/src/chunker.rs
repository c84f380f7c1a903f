//! Sentence-first text chunking.
//!
//! A document is cut into sentences, sentences longer than the word limit
//! are cut along newlines, and anything still too long is split at word
//! boundaries into near-equal pieces. Chunk text is always a trimmed slice
//! of the original document, so spans can be used to recover the source.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default word limit per chunk.
pub const DEFAULT_MAX_WORDS: usize = 32;

/// A contiguous span of the source document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    /// Zero-based chronological position.
    pub index: usize,
    pub text: String,
    /// Number of whitespace-delimited words in `text`.
    pub word_count: usize,
    /// Byte offsets `(start, end)` of `text` in the source document.
    pub char_span: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChunkerConfig {
    pub max_words: usize,
}

impl Default for ChunkerConfig {
    fn default() -> Self {
        Self {
            max_words: DEFAULT_MAX_WORDS,
        }
    }
}

impl ChunkerConfig {
    pub fn new(max_words: usize) -> Result<Self> {
        let config = Self { max_words };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_words == 0 {
            return Err(Error::InvalidParameter("max_words must be >= 1".into()));
        }
        Ok(())
    }
}

/// Split `document` into ordered chunks of at most `config.max_words` words.
///
/// An empty (or whitespace-only) document yields no chunks.
pub fn chunk_text(document: &str, config: &ChunkerConfig) -> Vec<Chunk> {
    let limit = config.max_words.max(1);
    let mut spans = Vec::new();

    for sentence in sentence_spans(document) {
        let Some(sentence) = trim_span(document, sentence) else {
            continue;
        };
        if word_spans(document, sentence).len() <= limit {
            spans.push(sentence);
            continue;
        }
        for line in line_spans(document, sentence) {
            let Some(line) = trim_span(document, line) else {
                continue;
            };
            let words = word_spans(document, line);
            if words.len() <= limit {
                spans.push(line);
            } else {
                spans.extend(balanced_pieces(&words, limit));
            }
        }
    }

    spans
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| {
            let text = &document[start..end];
            Chunk {
                index,
                text: text.to_string(),
                word_count: text.split_whitespace().count(),
                char_span: (start, end),
            }
        })
        .collect()
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Sentence spans: a terminator followed by whitespace or end of text closes
/// a sentence, and the terminator stays with it.
fn sentence_spans(document: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    let mut chars = document.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !is_terminator(c) {
            continue;
        }
        let end = i + c.len_utf8();
        match chars.peek() {
            None => {}
            Some(&(_, next)) if next.is_whitespace() => {}
            _ => continue,
        }
        spans.push((start, end));
        start = end;
    }
    if start < document.len() {
        spans.push((start, document.len()));
    }
    spans
}

fn line_spans(document: &str, (start, end): (usize, usize)) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut line_start = start;
    for (i, c) in document[start..end].char_indices() {
        if c == '\n' {
            spans.push((line_start, start + i));
            line_start = start + i + 1;
        }
    }
    spans.push((line_start, end));
    spans
}

fn trim_span(document: &str, (start, end): (usize, usize)) -> Option<(usize, usize)> {
    let slice = &document[start..end];
    let trimmed_start = slice.len() - slice.trim_start().len();
    let trimmed_end = slice.trim_end().len();
    (trimmed_start < trimmed_end).then(|| (start + trimmed_start, start + trimmed_end))
}

fn word_spans(document: &str, (start, end): (usize, usize)) -> Vec<(usize, usize)> {
    let mut words = Vec::new();
    let mut word_start = None;
    for (i, c) in document[start..end].char_indices() {
        match (c.is_whitespace(), word_start) {
            (true, Some(s)) => {
                words.push((start + s, start + i));
                word_start = None;
            }
            (false, None) => word_start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = word_start {
        words.push((start + s, end));
    }
    words
}

/// Sizes of `ceil(total / limit)` pieces differing by at most one word, with
/// the larger pieces first.
pub(crate) fn balanced_sizes(total: usize, limit: usize) -> Vec<usize> {
    if total == 0 {
        return Vec::new();
    }
    let pieces = total.div_ceil(limit);
    let base = total / pieces;
    let extra = total % pieces;
    (0..pieces).map(|i| base + usize::from(i < extra)).collect()
}

fn balanced_pieces(words: &[(usize, usize)], limit: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut offset = 0;
    for size in balanced_sizes(words.len(), limit) {
        let piece = &words[offset..offset + size];
        out.push((piece[0].0, piece[size - 1].1));
        offset += size;
    }
    out
}
