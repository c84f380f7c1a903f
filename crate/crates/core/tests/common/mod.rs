//! Brute-force reference implementations shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};

/// Lowercased ASCII alphanumeric runs of length >= 2.
pub fn oracle_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars().chain(std::iter::once(' ')) {
        if c.is_ascii_alphanumeric() {
            cur.push(c.to_ascii_lowercase());
        } else {
            if cur.len() >= 2 {
                out.push(cur.clone());
            }
            cur.clear();
        }
    }
    out
}

/// Dense TF-IDF: `terms[i]` and `weights[i][j]` for term `i` in chunk `j`.
pub struct DenseTfidf {
    pub terms: Vec<String>,
    pub weights: Vec<Vec<f64>>,
}

pub fn dense_tfidf(texts: &[&str]) -> DenseTfidf {
    let m = texts.len();
    let tokens: Vec<Vec<String>> = texts.iter().map(|t| oracle_tokens(t)).collect();
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for toks in &tokens {
        let mut seen: Vec<&String> = toks.iter().collect();
        seen.sort();
        seen.dedup();
        for t in seen {
            *df.entry(t.clone()).or_default() += 1;
        }
    }
    let terms: Vec<String> = df.keys().cloned().collect();
    let mut weights = vec![vec![0.0; m]; terms.len()];
    for (j, toks) in tokens.iter().enumerate() {
        for (i, term) in terms.iter().enumerate() {
            let tf = toks.iter().filter(|t| *t == term).count() as f64;
            let idf = ((1.0 + m as f64) / (1.0 + df[term] as f64)).ln() + 1.0;
            weights[i][j] = tf * idf;
        }
        let norm: f64 = (0..terms.len())
            .map(|i| weights[i][j] * weights[i][j])
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 {
            for row in weights.iter_mut() {
                row[j] /= norm;
            }
        }
    }
    DenseTfidf { terms, weights }
}

/// Threshold cosine similarities, then scale each column to sum to one.
/// Returns the row-major matrix and the dangling flags.
pub fn dense_graph(texts: &[&str], threshold: f64, self_loops: bool) -> (Vec<Vec<f64>>, Vec<bool>) {
    let e = dense_tfidf(texts);
    let m = texts.len();
    let mut s = vec![vec![0.0; m]; m];
    for x in 0..m {
        for y in 0..m {
            let v: f64 = e.weights.iter().map(|row| row[x] * row[y]).sum();
            if v >= threshold && v > 0.0 && (self_loops || x != y) {
                s[x][y] = v;
            }
        }
    }
    let mut dangling = vec![false; m];
    for y in 0..m {
        let sum: f64 = (0..m).map(|x| s[x][y]).sum();
        if sum > 0.0 {
            for row in s.iter_mut() {
                row[y] /= sum;
            }
        } else {
            dangling[y] = true;
        }
    }
    (s, dangling)
}

/// Random column-stochastic matrix without dangling columns; each column
/// has between one and `m` nonzero entries.
pub fn random_stochastic(rng: &mut impl RngCore, m: usize) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; m]; m];
    for y in 0..m {
        let nnz = rng.random_range(1..=m);
        for _ in 0..nnz {
            let x = rng.random_range(0..m);
            a[x][y] += rng.random::<f64>() + 1e-3;
        }
        let sum: f64 = (0..m).map(|x| a[x][y]).sum();
        for row in a.iter_mut() {
            row[y] /= sum;
        }
    }
    a
}

pub fn random_distribution(rng: &mut impl RngCore, m: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    let sum: f64 = v.iter().sum();
    v.into_iter().map(|x| x / sum).collect()
}

/// `π = α (I − (1 − α) A)⁻¹ p` by LU. Dangling columns of `a` must already
/// be filled in.
pub fn ppr_direct(a: &[Vec<f64>], p: &[f64], alpha: f64) -> Vec<f64> {
    let m = a.len();
    let mat = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.0 } - (1.0 - alpha) * a[i][j]);
    let rhs = DVector::from_iterator(m, p.iter().map(|x| alpha * x));
    let sol = mat.lu().solve(&rhs).expect("nonsingular for alpha > 0");
    sol.iter().copied().collect()
}

/// Replace every all-zero column of `a` by `r`.
pub fn fill_dangling(a: &[Vec<f64>], r: &[f64]) -> Vec<Vec<f64>> {
    let m = a.len();
    let mut out = a.to_vec();
    for y in 0..m {
        if (0..m).all(|x| a[x][y] == 0.0) {
            for x in 0..m {
                out[x][y] = r[x];
            }
        }
    }
    out
}

/// Plain dense power iteration of `π ← (1 − α) A π + α p`.
pub fn dense_power(a: &[Vec<f64>], p: &[f64], alpha: f64, start: &[f64], iterations: usize) -> Vec<f64> {
    let m = a.len();
    let mut x = start.to_vec();
    for _ in 0..iterations {
        x = (0..m)
            .map(|i| (1.0 - alpha) * (0..m).map(|j| a[i][j] * x[j]).sum::<f64>() + alpha * p[i])
            .collect();
    }
    x
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

const DOC_WORDS: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "x", "Zeta", "eta42", "théta", "ok", "a-b",
];

/// Random document with sentence lengths from 1 to 90 words, terminators
/// `.`/`!`/`?`, stray newlines inside sentences, and irregular spacing.
pub fn random_document(rng: &mut impl RngCore) -> String {
    let sentences = rng.random_range(0..40);
    let mut doc = String::new();
    for _ in 0..sentences {
        let len = if rng.random_bool(0.2) {
            rng.random_range(33..90)
        } else {
            rng.random_range(1..20)
        };
        for w in 0..len {
            if w > 0 {
                doc.push_str(match rng.random_range(0..12) {
                    0 => "\n",
                    1 => "  ",
                    2 => "\t",
                    _ => " ",
                });
            }
            doc.push_str(DOC_WORDS[rng.random_range(0..DOC_WORDS.len())]);
        }
        doc.push(['.', '!', '?'][rng.random_range(0..3)]);
        doc.push_str(if rng.random_bool(0.3) { "\n\n" } else { " " });
    }
    doc
}

/// Non-whitespace characters of `text`, in order.
pub fn visible(text: &str) -> String {
    text.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Query phrasings for router checks: `(query, is_global)`.
pub const ROUTER_TEMPLATES: &[(&str, bool)] = &[
    ("Where is the apple located?", false),
    ("Where was Mary before the kitchen?", false),
    ("Before the hallway, where was the milk?", false),
    ("Is John in the office?", false),
    ("Is the bedroom north of the garden?", false),
    ("How many objects is Daniel carrying?", false),
    ("What does Sandra hold?", false),
    ("Who gave the football to Bill?", false),
    ("What is the color of Greg?", false),
    ("What is the special token for xqzvbnmwer?", false),
    (
        "What is the special magic number for lively-garden mentioned in the provided text?",
        false,
    ),
    (
        "What are all the special magic numbers for tidy-harbor mentioned in the provided text?",
        false,
    ),
    (
        "What is the special magic uuid for quiet-river mentioned in the provided text?",
        false,
    ),
    ("Which hashes follow a1b2c3d4?", false),
    ("What is the value of the hash that k9x2m4p7 points to?", false),
    (
        "Find all variables that are assigned the value 12345 in the text above.",
        false,
    ),
    ("What did the author do after graduating?", false),
    ("According to the passage, when was the bridge built?", false),
    ("What is the name of the ship's captain?", false),
    ("Which city did the protagonist move to in chapter three?", false),
    (
        "Answer the question based on the given passages. Question: who founded the company?",
        false,
    ),
    ("What is the tallest mountain mentioned?", false),
    ("Summarize the book.", true),
    ("Summarise the novel.", true),
    ("Please summarize the above report in one paragraph.", true),
    ("Provide a summarization of the meeting transcript.", true),
    ("Write a one-page summary of the above novel.", true),
    ("Give a summary of the whole book.", true),
    ("Provide an overview summarizing the main events.", true),
    ("Write a summary of the entire document.", true),
    ("Describe the entire document in a few sentences.", true),
    ("What are the 10 most common words in the above list?", true),
    ("What are the 5 most common words in the above text?", true),
    ("What is the most common word in this document?", true),
    (
        "What are the 3 most frequently appearing words in the above coded text?",
        true,
    ),
    ("Which word appears most frequently in the passage?", true),
    ("List the most frequent words in the text.", true),
    ("Count the words and report the most frequent word overall.", true),
];

/// One-connection-per-request HTTP stub. Serves `responses` in order and
/// records every raw request.
pub struct MockServer {
    pub url: String,
    pub requests: std::sync::Arc<std::sync::Mutex<Vec<String>>>,
    handle: Option<std::thread::JoinHandle<()>>,
}

impl MockServer {
    pub fn start(responses: Vec<(u16, String)>) -> Self {
        use std::io::{Read, Write};
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let requests = std::sync::Arc::new(std::sync::Mutex::new(Vec::new()));
        let log = requests.clone();
        let handle = std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut raw = Vec::new();
                let mut buf = [0u8; 4096];
                loop {
                    let n = stream.read(&mut buf).unwrap();
                    raw.extend_from_slice(&buf[..n]);
                    let text = String::from_utf8_lossy(&raw);
                    if let Some(end) = text.find("\r\n\r\n") {
                        let len = text[..end]
                            .lines()
                            .find_map(|l| {
                                let (k, v) = l.split_once(':')?;
                                k.eq_ignore_ascii_case("content-length")
                                    .then(|| v.trim().parse::<usize>().unwrap())
                            })
                            .unwrap_or(0);
                        if raw.len() >= end + 4 + len {
                            break;
                        }
                    }
                    if n == 0 {
                        break;
                    }
                }
                log.lock().unwrap().push(String::from_utf8_lossy(&raw).into_owned());
                let reply = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });
        Self {
            url,
            requests,
            handle: Some(handle),
        }
    }

    /// A chat-completions reply whose message content is `answer`.
    pub fn answer(answer: &str) -> (u16, String) {
        let body = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": answer}}]});
        (200, body.to_string())
    }

    pub fn join(mut self) -> Vec<String> {
        self.handle.take().unwrap().join().unwrap();
        self.requests.lock().unwrap().clone()
    }
}
