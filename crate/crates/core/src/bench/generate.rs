//! Seeded synthetic long-context tasks.
//!
//! * needle: filler prose with one "special token" sentence and a question
//!   about it at the end.
//! * hashchain: a shuffled list of `a = b` hash assignments; the query names
//!   the head of one chain and every link of that chain is gold.
//! * frequency: Zipf-distributed words; gold is the five most common words.
//!
//! All filler and frequency words are consonant-vowel pseudo-words, so they
//! never collide with the English words of the needle and query templates.

use std::collections::HashSet;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use super::metrics::top_words;
use crate::{Error, Result};

pub const FILLER_VOCAB_SIZE: usize = 500;
pub const FREQUENCY_VOCAB_SIZE: usize = 1000;
pub const DEFAULT_ZETA_EXPONENT: f64 = 1.2;
pub const GOLD_TOP_WORDS: usize = 5;
pub const HASH_LEN: usize = 8;
pub const MIN_NEEDLE_WORDS: usize = 100;
pub const MIN_FREQUENCY_WORDS: usize = 1000;

const FILLER_VOCAB_SEED: u64 = 0x5eed_f111;
const FREQUENCY_VOCAB_SEED: u64 = 0x5eed_f4e9;
const SYLLABLE_CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const SYLLABLE_VOWELS: &[u8] = b"aeiou";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Needle,
    Hashchain,
    Frequency,
}

impl TaskKind {
    pub fn is_local(self) -> bool {
        !matches!(self, TaskKind::Frequency)
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TaskKind::Needle => "needle",
            TaskKind::Hashchain => "hashchain",
            TaskKind::Frequency => "frequency",
        })
    }
}

impl std::str::FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "needle" => Ok(TaskKind::Needle),
            "hashchain" => Ok(TaskKind::Hashchain),
            "frequency" => Ok(TaskKind::Frequency),
            other => Err(Error::InvalidParameter(format!("unknown task kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Gold {
    Needle {
        text: String,
        /// Byte offsets of the needle sentence in the document.
        span: (usize, usize),
    },
    Hashchain {
        /// Chain hashes from the queried head to the tail.
        hashes: Vec<String>,
        /// Assignment sentences of the chain, in hop order.
        links: Vec<String>,
    },
    Frequency {
        top_words: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub kind: TaskKind,
    pub seed: u64,
    /// Full context; the query is its final sentence.
    pub document: String,
    pub query: String,
    pub gold: Gold,
}

impl TaskInstance {
    /// Texts that must be retrieved for a local task; empty for global ones.
    pub fn gold_items(&self) -> Vec<&str> {
        match &self.gold {
            Gold::Needle { text, .. } => vec![text.as_str()],
            Gold::Hashchain { links, .. } => links.iter().map(String::as_str).collect(),
            Gold::Frequency { .. } => Vec::new(),
        }
    }

    pub fn word_count(&self) -> usize {
        self.document.split_whitespace().count()
    }
}

fn pseudo_words(count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut words = Vec::with_capacity(count);
    while words.len() < count {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(SYLLABLE_CONSONANTS[rng.random_range(0..SYLLABLE_CONSONANTS.len())] as char);
            w.push(SYLLABLE_VOWELS[rng.random_range(0..SYLLABLE_VOWELS.len())] as char);
        }
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

pub fn filler_vocabulary() -> &'static [String] {
    static WORDS: OnceLock<Vec<String>> = OnceLock::new();
    WORDS.get_or_init(|| pseudo_words(FILLER_VOCAB_SIZE, FILLER_VOCAB_SEED))
}

pub fn frequency_vocabulary() -> &'static [String] {
    static WORDS: OnceLock<Vec<String>> = OnceLock::new();
    WORDS.get_or_init(|| {
        let filler: HashSet<&String> = filler_vocabulary().iter().collect();
        pseudo_words(FREQUENCY_VOCAB_SIZE + FILLER_VOCAB_SIZE, FREQUENCY_VOCAB_SEED)
            .into_iter()
            .filter(|w| !filler.contains(w))
            .take(FREQUENCY_VOCAB_SIZE)
            .collect()
    })
}

fn zipf(n: usize, exponent: f64) -> Zipf<f64> {
    Zipf::new(n as f64, exponent).expect("valid zipf parameters")
}

fn capitalize(word: &str) -> String {
    let mut c = word.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// One sentence of 6 to 18 words drawn uniformly from the filler vocabulary.
/// Two such sentences usually share a word or two but rarely reach the
/// graph threshold, so fillers form a sparse, diffuse graph.
fn filler_sentence(rng: &mut ChaCha8Rng) -> String {
    let vocab = filler_vocabulary();
    let len = rng.random_range(6..=18);
    let words: Vec<&str> = (0..len)
        .map(|_| vocab[rng.random_range(0..vocab.len())].as_str())
        .collect();
    let mut s = capitalize(words[0]);
    for w in &words[1..] {
        s.push(' ');
        s.push_str(w);
    }
    s.push('.');
    s
}

/// Join sentences into paragraphs of eight, returning the byte span of each.
fn layout(sentences: &[String]) -> (String, Vec<(usize, usize)>) {
    let mut doc = String::new();
    let mut spans = Vec::with_capacity(sentences.len());
    for (i, s) in sentences.iter().enumerate() {
        if i > 0 {
            doc.push(if i % 8 == 0 { '\n' } else { ' ' });
        }
        spans.push((doc.len(), doc.len() + s.len()));
        doc.push_str(s);
    }
    (doc, spans)
}

fn random_letters(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect()
}

/// Filler document of about `total_words` words with one needle sentence at
/// a random sentence boundary and a question about it at the end.
pub fn gen_needle(total_words: usize, seed: u64) -> Result<TaskInstance> {
    if total_words < MIN_NEEDLE_WORDS {
        return Err(Error::InvalidParameter(format!(
            "needle tasks need at least {MIN_NEEDLE_WORDS} words"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let key = random_letters(&mut rng, 10);
    let value = rng.random_range(1_000_000..10_000_000u32);
    let needle = format!("The special token for {key} is {value}.");
    let query = format!("What is the special token for {key}?");

    let budget = total_words.saturating_sub(needle.split_whitespace().count() + query.split_whitespace().count());
    let mut sentences = Vec::new();
    let mut words = 0;
    while words < budget {
        let s = filler_sentence(&mut rng);
        words += s.split_whitespace().count();
        sentences.push(s);
    }
    let position = rng.random_range(0..=sentences.len());
    sentences.insert(position, needle.clone());
    sentences.push(query.clone());

    let (document, spans) = layout(&sentences);
    Ok(TaskInstance {
        kind: TaskKind::Needle,
        seed,
        document,
        query,
        gold: Gold::Needle {
            text: needle,
            span: spans[position],
        },
    })
}

fn random_hash(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
    loop {
        let h: String = (0..HASH_LEN)
            .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char)
            .collect();
        // at least one digit and one letter: never an ordinary word, never a number
        if h.bytes().any(|b| b.is_ascii_digit()) && h.bytes().any(|b| b.is_ascii_lowercase()) {
            return h;
        }
    }
}

/// Shuffled hash assignments `a = b.` made of disjoint chains of `hops` links.
/// One chain is queried; the others are decoys.
pub fn gen_hashchain(total_words: usize, hops: usize, seed: u64) -> Result<TaskInstance> {
    if hops == 0 {
        return Err(Error::InvalidParameter("hops must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = HashSet::new();
    let mut fresh_chain = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let mut chain = Vec::with_capacity(hops + 1);
        while chain.len() < hops + 1 {
            let h = random_hash(rng);
            if used.insert(h.clone()) {
                chain.push(h);
            }
        }
        chain
    };
    let links_of =
        |chain: &[String]| -> Vec<String> { chain.windows(2).map(|w| format!("{} = {}.", w[0], w[1])).collect() };

    let hashes = fresh_chain(&mut rng);
    let gold_links = links_of(&hashes);
    let query = format!("Which hashes follow {}?", hashes[0]);

    const WORDS_PER_LINK: usize = 3;
    let total_links = (total_words.saturating_sub(4) / WORDS_PER_LINK).max(hops);
    let mut sentences = gold_links.clone();
    while sentences.len() + hops <= total_links {
        let chain = fresh_chain(&mut rng);
        sentences.extend(links_of(&chain));
    }
    sentences.shuffle(&mut rng);
    let mut document = sentences.join("\n");
    document.push('\n');
    document.push_str(&query);

    Ok(TaskInstance {
        kind: TaskKind::Hashchain,
        seed,
        document,
        query,
        gold: Gold::Hashchain {
            hashes,
            links: gold_links,
        },
    })
}

pub fn gen_frequency(total_words: usize, seed: u64) -> Result<TaskInstance> {
    gen_frequency_with(total_words, DEFAULT_ZETA_EXPONENT, seed)
}

/// Sentences of Zeta-distributed words over a per-seed ranking of the
/// frequency vocabulary.
pub fn gen_frequency_with(total_words: usize, exponent: f64, seed: u64) -> Result<TaskInstance> {
    if total_words < MIN_FREQUENCY_WORDS {
        return Err(Error::InvalidParameter(format!(
            "frequency tasks need at least {MIN_FREQUENCY_WORDS} words"
        )));
    }
    if !(exponent > 0.0) {
        return Err(Error::InvalidParameter("zeta exponent must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranked: Vec<&str> = frequency_vocabulary().iter().map(String::as_str).collect();
    ranked.shuffle(&mut rng);
    let dist = zipf(ranked.len(), exponent);

    let query = format!("What are the {GOLD_TOP_WORDS} most common words in the above text?");
    let budget = total_words - query.split_whitespace().count();
    let mut sentences = Vec::new();
    let mut words = 0;
    while words < budget {
        let len = rng.random_range(8..=20).min(budget - words).max(1);
        let sentence: Vec<&str> = (0..len).map(|_| ranked[dist.sample(&mut rng) as usize - 1]).collect();
        sentences.push(format!("{}.", sentence.join(" ")));
        words += len;
    }
    sentences.push(query.clone());
    let (document, _) = layout(&sentences);
    let top_words = top_words(&document, GOLD_TOP_WORDS);

    Ok(TaskInstance {
        kind: TaskKind::Frequency,
        seed,
        document,
        query,
        gold: Gold::Frequency { top_words },
    })
}

/// Generate one instance of `kind`.
pub fn generate(kind: TaskKind, total_words: usize, hops: usize, seed: u64) -> Result<TaskInstance> {
    match kind {
        TaskKind::Needle => gen_needle(total_words, seed),
        TaskKind::Hashchain => gen_hashchain(total_words, hops, seed),
        TaskKind::Frequency => gen_frequency(total_words, seed),
    }
}
