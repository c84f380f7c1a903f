use std::collections::HashMap;

use super::generate::{Gold, TaskInstance, GOLD_TOP_WORDS};
use crate::embed::tokenize;

/// The `n` most frequent tokens of `text`, ties broken alphabetically.
pub fn top_words(text: &str, n: usize) -> Vec<String> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for tok in tokenize(text) {
        *counts.entry(tok.into_owned()).or_default() += 1;
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.into_iter().take(n).map(|(w, _)| w).collect()
}

/// Fraction of gold items contained in at least one retrieved chunk.
pub fn local_recall<S: AsRef<str>>(retrieved: &[S], instance: &TaskInstance) -> f64 {
    let gold = instance.gold_items();
    if gold.is_empty() {
        return 0.0;
    }
    let hits = gold
        .iter()
        .filter(|g| retrieved.iter().any(|c| c.as_ref().contains(*g)))
        .count();
    hits as f64 / gold.len() as f64
}

/// Share of the gold top words that are also top words of the retrieved text.
pub fn global_overlap(retrieved_text: &str, instance: &TaskInstance) -> f64 {
    let Gold::Frequency { top_words: gold } = &instance.gold else {
        return 0.0;
    };
    let found = top_words(retrieved_text, GOLD_TOP_WORDS);
    let hits = gold.iter().filter(|w| found.contains(w)).count();
    hits as f64 / gold.len().max(1) as f64
}

/// Task score of one retrieval: recall for local tasks, overlap for global ones.
pub fn score<S: AsRef<str>>(retrieved: &[S], instance: &TaskInstance) -> f64 {
    if instance.kind.is_local() {
        local_recall(retrieved, instance)
    } else {
        let text: Vec<&str> = retrieved.iter().map(AsRef::as_ref).collect();
        global_overlap(&text.join("\n"), instance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::generate::TaskKind;

    fn frequency(gold: &[&str]) -> TaskInstance {
        TaskInstance {
            kind: TaskKind::Frequency,
            seed: 0,
            document: String::new(),
            query: String::new(),
            gold: Gold::Frequency {
                top_words: gold.iter().map(|s| s.to_string()).collect(),
            },
        }
    }

    #[test]
    fn top_words_ties_are_alphabetical() {
        assert_eq!(top_words("bb aa cc bb aa dd", 3), ["aa", "bb", "cc"]);
        assert_eq!(top_words("", 3), Vec::<String>::new());
    }

    #[test]
    fn overlap_counts_shared_words() {
        let inst = frequency(&["aa", "bb", "cc", "dd", "ee"]);
        let text = "aa aa aa bb bb bb cc cc cc xx xx xx yy yy yy";
        assert!((global_overlap(text, &inst) - 0.6).abs() < 1e-15);
        assert_eq!(global_overlap("aa bb cc dd ee", &inst), 1.0);
        assert_eq!(global_overlap("", &inst), 0.0);
    }

    #[test]
    fn recall_over_chain_links() {
        let inst = TaskInstance {
            kind: TaskKind::Hashchain,
            seed: 0,
            document: String::new(),
            query: String::new(),
            gold: Gold::Hashchain {
                hashes: vec![],
                links: vec![
                    "a1 = b2.".into(),
                    "b2 = c3.".into(),
                    "c3 = d4.".into(),
                    "d4 = e5.".into(),
                ],
            },
        };
        assert_eq!(local_recall(&["a1 = b2.", "zz = yy."], &inst), 0.25);
        assert_eq!(
            local_recall(&["a1 = b2.", "b2 = c3.", "c3 = d4.", "d4 = e5."], &inst),
            1.0
        );
        assert_eq!(local_recall::<&str>(&[], &inst), 0.0);
        assert_eq!(score(&["a1 = b2.", "b2 = c3."], &inst), 0.5);
    }
}
