mod common;

use common::*;
use mixpr::bench::generate::{gen_frequency, gen_hashchain, gen_needle};
use mixpr::bench::{top_words, Gold};
use mixpr::pagerank::{make_personalization, solve, SolverConfig};
use mixpr::retriever::top_k;
use mixpr::{chunk_text, Index, Method, RetrievalConfig, RouterConfig, TaskScope};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn local() -> RetrievalConfig {
    RetrievalConfig {
        router: RouterConfig::forced(TaskScope::Local),
        ..RetrievalConfig::default()
    }
}

fn chunk_containing(index: &Index, text: &str) -> usize {
    index
        .chunks
        .iter()
        .position(|c| c.text.contains(text))
        .expect("gold text is chunked intact")
}

#[test]
fn needle_chunk_ranks_within_k() {
    for seed in 0..5 {
        let inst = gen_needle(8000, seed).unwrap();
        let Gold::Needle { text, span } = &inst.gold else {
            unreachable!()
        };
        assert_eq!(&inst.document[span.0..span.1], text);
        let index = Index::build(&inst.document, &local()).unwrap();
        let needle = chunk_containing(&index, text);
        assert_eq!(index.chunks[needle].char_span, *span);

        let result = index.retrieve(&local()).unwrap();
        assert!(result.indices().contains(&needle), "seed {seed}");

        // exhaustive rank under an independent dense solve
        let p = make_personalization(&index.chunks).unwrap();
        let dense = index.graph.to_dense();
        let want = ppr_direct(&fill_dangling(&dense, p.as_slice()), p.as_slice(), 0.6);
        let rank = want.iter().filter(|&&s| s > want[needle]).count();
        assert!(rank < 100, "seed {seed}: needle rank {rank}");
    }
}

#[test]
fn filler_documents_chunk_by_sentence() {
    let inst = gen_needle(15_000, 3).unwrap();
    let sentences = inst.document.matches(['.', '?']).count();
    let m = chunk_text(&inst.document, &Default::default()).len();
    assert!(sentences >= 1000);
    assert!(
        (m as f64 - sentences as f64).abs() <= 0.05 * sentences as f64,
        "{m} chunks for {sentences} sentences"
    );
}

#[test]
fn global_route_recovers_top_words() {
    for seed in 0..3 {
        let inst = gen_frequency(20_000, seed).unwrap();
        let Gold::Frequency { top_words: gold } = &inst.gold else {
            unreachable!()
        };
        assert_eq!(gold, &top_words(&inst.document, 5));
        let config = RetrievalConfig {
            router: RouterConfig::forced(TaskScope::Global),
            ..RetrievalConfig::default()
        };
        let index = Index::build(&inst.document, &config).unwrap();
        let context = index.assemble_context(&index.retrieve(&config).unwrap());
        for w in gold {
            assert!(
                context.split(|c: char| !c.is_alphanumeric()).any(|t| t == w),
                "seed {seed}: {w} missing"
            );
        }
    }
}

#[test]
fn heuristic_routing_sends_frequency_queries_to_pagerank() {
    let inst = gen_frequency(5000, 9).unwrap();
    let index = Index::build(&inst.document, &RetrievalConfig::default()).unwrap();
    let routed = index.retrieve(&RetrievalConfig::default()).unwrap();
    let forced = index
        .retrieve(&RetrievalConfig {
            router: RouterConfig::forced(TaskScope::Global),
            ..RetrievalConfig::default()
        })
        .unwrap();
    assert_eq!(routed.query_class.unwrap().scope, TaskScope::Global);
    assert_eq!(routed.selected, forced.selected);
}

#[test]
fn chain_chunks_are_reached_only_by_the_walk() {
    let inst = gen_hashchain(6000, 4, 11).unwrap();
    let Gold::Hashchain { links, .. } = &inst.gold else {
        unreachable!()
    };
    let index = Index::build(&inst.document, &local()).unwrap();
    let chain: Vec<usize> = links.iter().map(|l| chunk_containing(&index, l)).collect();

    let sparse = index.sparse_scores().unwrap();
    assert!(sparse[chain[0]] > 0.0);
    for &c in &chain[1..] {
        assert_eq!(sparse[c], 0.0);
    }

    let p = make_personalization(&index.chunks).unwrap();
    let dist = solve(
        &index.graph,
        &p,
        &SolverConfig {
            tolerance: 1e-14,
            ..SolverConfig::default()
        },
    )
    .unwrap();
    let mut filler: Vec<f64> = (0..index.len())
        .filter(|i| !chain.contains(i) && *i + 1 != index.len())
        .map(|i| dist.scores[i])
        .collect();
    filler.sort_by(f64::total_cmp);
    let median = filler[filler.len() / 2];
    for &c in &chain {
        assert!(
            dist.scores[c] > median,
            "chain chunk {c}: {} vs median {median}",
            dist.scores[c]
        );
    }
    let result = index
        .retrieve(&RetrievalConfig {
            solver: SolverConfig {
                tolerance: 1e-14,
                ..SolverConfig::default()
            },
            ..local()
        })
        .unwrap();
    assert!(chain.iter().all(|c| result.indices().contains(c)));
}

#[test]
fn sparse_nn_matches_dense_cosine_ranking() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let words = ["ant", "bee", "cow", "doe", "elk", "fly"];
    for _ in 0..20 {
        let sentences: Vec<String> = (0..20)
            .map(|_| {
                let n = rng.random_range(3..8);
                let ws: Vec<&str> = (0..n).map(|_| words[rng.random_range(0..words.len())]).collect();
                format!("{}.", ws.join(" "))
            })
            .collect();
        let doc = sentences.join(" ");
        let config = RetrievalConfig {
            k: 5,
            method: Method::SparseNn,
            ..RetrievalConfig::default()
        };
        let index = Index::build(&doc, &config).unwrap();
        let texts: Vec<&str> = index.chunks.iter().map(|c| c.text.as_str()).collect();
        let e = dense_tfidf(&texts);
        let q = texts.len() - 1;
        let cos: Vec<f64> = (0..texts.len())
            .map(|j| e.weights.iter().map(|row| row[j] * row[q]).sum())
            .collect();
        let result = index.retrieve(&config).unwrap();
        let chosen = result.indices();
        let worst_in = chosen.iter().map(|&i| cos[i]).fold(f64::INFINITY, f64::min);
        let best_out = (0..texts.len())
            .filter(|i| !chosen.contains(i))
            .map(|i| cos[i])
            .fold(0.0, f64::max);
        assert!(worst_in >= best_out - 1e-12);
        for s in &result.selected {
            assert!((s.score - cos[s.index]).abs() < 1e-9);
        }
    }
}

#[test]
fn hybrid_matches_recomputed_combination() {
    let inst = gen_needle(2000, 5).unwrap();
    let config = RetrievalConfig {
        k: 10,
        ..RetrievalConfig::default()
    };
    let index = Index::build(&inst.document, &config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dense: Vec<f64> = (0..index.len()).map(|_| rng.random()).collect();
    let sparse = index.sparse_scores().unwrap();
    let combined: Vec<f64> = sparse.iter().zip(&dense).map(|(s, d)| 0.15 * s + 0.85 * d).collect();
    let result = index.retrieve_hybrid_nn(&dense, &config).unwrap();
    assert_eq!(
        result.indices(),
        top_k(&combined, 10).iter().map(|s| s.index).collect::<Vec<_>>()
    );

    let zeros = vec![0.0; index.len()];
    let only_sparse = index.retrieve_hybrid_nn(&zeros, &config).unwrap();
    assert_eq!(
        only_sparse.indices(),
        index.retrieve_sparse_nn(&config).unwrap().indices()
    );
}

#[test]
fn context_follows_document_order() {
    let inst = gen_needle(4000, 8).unwrap();
    let config = RetrievalConfig { k: 40, ..local() };
    let index = Index::build(&inst.document, &config).unwrap();
    let result = index.retrieve(&config).unwrap();
    let spans: Vec<usize> = result
        .selected
        .iter()
        .map(|s| index.chunks[s.index].char_span.0)
        .collect();
    assert!(spans.windows(2).all(|w| w[0] < w[1]));
    let context = index.assemble_context(&result);
    let mut from = 0;
    for line in context.lines() {
        let at = inst.document[from..].find(line).expect("chunk text appears in order") + from;
        from = at + line.len();
    }
}

#[test]
fn index_survives_save_and_load() {
    let inst = gen_needle(3000, 2).unwrap();
    let config = RetrievalConfig::default();
    let index = Index::build(&inst.document, &config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("index.json");
    index.save(&path).unwrap();
    let loaded = Index::load(&path).unwrap();
    assert_eq!(loaded.chunks, index.chunks);
    assert_eq!(loaded.graph, index.graph);
    assert_eq!(
        loaded.retrieve(&config).unwrap().selected,
        index.retrieve(&config).unwrap().selected
    );
    assert!(Index::load(dir.path().join("missing.json")).is_err());
}
