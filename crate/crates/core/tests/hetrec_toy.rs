use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use netbandit::data::{load_hetrec, DatasetKind, LoadOptions};

fn toy_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy")
}

const TOY_STATS: &str = "stat\tvalue
nodes\t3
edges\t1
items\t4
nonzero_payoffs\t5
tag_names\t5
tags_used\t4
tags_after_splitting\t5
tags_kept\t5
items_without_tags\t0
users_without_positives\t0
users_outside_component\t1
kept_nodes\t2
kept_edges\t1
kept_payoffs\t4
";

#[test]
fn toy_stats_golden() {
    let data = load_hetrec(&toy_dir(), DatasetKind::LastFm, LoadOptions::default()).unwrap();
    assert_eq!(data.stats.to_tsv(), TOY_STATS);
    assert_eq!(data.user_ids, ["2", "5"]);
    assert_eq!(data.item_ids, ["51", "52", "60", "75"]);
    // User 9 has no friends and falls outside the largest component.
    assert_eq!(data.graph.n(), 2);
    assert!(data.graph.has_edge(0, 1));
    assert_eq!(data.interactions.positives(0), [0, 1]);
    assert_eq!(data.interactions.positives(1), [1, 2]);
}

/// Hand transcription of the tag pipeline on the toy corpus: split words,
/// raw term counts, `ln(N/df)` weights, unit rows.
fn toy_tfidf() -> Vec<Vec<f64>> {
    // item -> words, after splitting every assignment.
    let words: [&[&str]; 4] = [
        &["hip", "hop", "indie", "rock"], // 51: hip-hop, indie_rock
        &["indie", "rock", "rock"],       // 52: indie_rock, rock
        &["rock"],                        // 60: rock
        &["80s"],                         // 75: 80s
    ];
    let vocab: BTreeSet<&str> = words.iter().flat_map(|w| w.iter().copied()).collect();
    let df: BTreeMap<&str, usize> =
        vocab.iter().map(|v| (*v, words.iter().filter(|w| w.contains(v)).count())).collect();
    words
        .iter()
        .map(|w| {
            let row: Vec<f64> = vocab
                .iter()
                .map(|v| w.iter().filter(|x| *x == v).count() as f64 * (4.0 / df[v] as f64).ln())
                .collect();
            let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            row.into_iter().map(|x| x / n).collect()
        })
        .collect()
}

#[test]
fn toy_tfidf_by_hand() {
    let rows = toy_tfidf();
    // Item 52: indie weighs ln 2, rock weighs 2 ln(4/3).
    let (a, b) = (2f64.ln(), 2.0 * (4.0f64 / 3.0).ln());
    let n = (a * a + b * b).sqrt();
    let vocab = ["80s", "hip", "hop", "indie", "rock"];
    let indie = vocab.iter().position(|v| *v == "indie").unwrap();
    let rock = vocab.iter().position(|v| *v == "rock").unwrap();
    assert!((rows[1][indie] - a / n).abs() < 1e-15);
    assert!((rows[1][rock] - b / n).abs() < 1e-15);
    assert_eq!(rows[3], [1.0, 0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn toy_features_preserve_tfidf_geometry() {
    let data = load_hetrec(&toy_dir(), DatasetKind::LastFm, LoadOptions::default()).unwrap();
    let tfidf = toy_tfidf();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    // Four items span at most three centred directions, so projecting onto
    // the leading components loses nothing: pairwise distances survive.
    for i in 0..4 {
        for j in 0..4 {
            let want = dist(&tfidf[i], &tfidf[j]);
            let got = dist(data.interactions.feature(i), data.interactions.feature(j));
            assert!((want - got).abs() < 1e-10, "items {i},{j}: {want} vs {got}");
        }
    }
}

#[test]
fn toy_prepare_round_trip() {
    use netbandit::data::{cache_key, read_prepared, write_prepared};
    let data = load_hetrec(&toy_dir(), DatasetKind::LastFm, LoadOptions::default()).unwrap();
    let out = tempfile::tempdir().unwrap();
    let key = cache_key(&[b"toy"]);
    write_prepared(out.path(), &data, &key).unwrap();
    let back = read_prepared(out.path()).unwrap();
    assert_eq!(back.key, key);
    assert_eq!(back.graph, data.graph);
    assert_eq!(back.interactions, data.interactions);
    assert_eq!(std::fs::read_to_string(out.path().join("stats.tsv")).unwrap(), TOY_STATS);
}
