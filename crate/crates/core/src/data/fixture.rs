//! Generator for a small bookmarking corpus in the HetRec layout.
//!
//! Users form communities; each community favours one topic. Items carry
//! topic tags (some compound, e.g. `web_design`), and users bookmark mostly
//! items of their community's topic. Friendship links are dense inside a
//! community and sparse across.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{seeded, Purpose};

const STEMS: [&str; 12] =
    ["design", "python", "music", "travel", "science", "cooking", "finance", "games", "photo", "health", "history", "garden"];
const SUFFIXES: [&str; 6] = ["", "tips", "tools", "news", "howto", "blog"];
const GENERAL: [&str; 8] = ["reference", "toread", "cool", "web", "free", "video", "tutorial", "article"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureParams {
    pub users: usize,
    pub communities: usize,
    pub items: usize,
    pub min_bookmarks: usize,
    pub max_bookmarks: usize,
    /// Probability that a bookmark comes from the user's own topic.
    pub own_topic: f64,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
}

impl Default for FixtureParams {
    fn default() -> Self {
        Self {
            users: 200,
            communities: 10,
            items: 1500,
            min_bookmarks: 20,
            max_bookmarks: 40,
            own_topic: 0.8,
            p_in: 0.25,
            p_out: 0.004,
            seed: 1,
        }
    }
}

/// Writes `user_contacts.dat`, `user_taggedbookmarks.dat` and `tags.dat`.
/// Original ids are deliberately sparse (users `8 + 3u`, bookmarks `1 + 2i`).
pub fn write_bookmark_fixture(dir: &Path, p: &FixtureParams) -> Result<()> {
    if p.communities == 0 || p.communities > STEMS.len() || p.users < p.communities || p.items < p.communities {
        return Err(Error::invalid(format!(
            "fixture needs 1..={} communities, at least one user and item per community",
            STEMS.len()
        )));
    }
    if p.min_bookmarks == 0 || p.min_bookmarks > p.max_bookmarks || p.max_bookmarks > p.items {
        return Err(Error::invalid("bookmark counts must satisfy 1 <= min <= max <= items"));
    }
    let mut rng = seeded(p.seed, Purpose::Fixture);
    let community = |u: usize| u * p.communities / p.users;
    let topic_of = |i: usize| i % p.communities;

    // Tag vocabulary: per-topic words, pairwise compounds, general words.
    let mut tags: Vec<String> = Vec::new();
    let mut topic_tags: Vec<Vec<usize>> = vec![Vec::new(); p.communities];
    for (c, tt) in topic_tags.iter_mut().enumerate() {
        let words: Vec<String> = SUFFIXES.iter().map(|s| format!("{}{}", STEMS[c], s)).collect();
        for w in &words {
            tt.push(tags.len());
            tags.push(w.clone());
        }
        for (a, sep) in [(1, "_"), (2, "-"), (3, "_")] {
            tt.push(tags.len());
            tags.push(format!("{}{sep}{}", words[0], words[a]));
        }
    }
    let general: Vec<usize> = GENERAL
        .iter()
        .map(|g| {
            tags.push((*g).to_owned());
            tags.len() - 1
        })
        .collect();

    // Each item's tag profile: three topic tags and one general tag.
    let profiles: Vec<Vec<usize>> = (0..p.items)
        .map(|i| {
            let mut prof: Vec<usize> = topic_tags[topic_of(i)].choose_multiple(&mut rng, 3).copied().collect();
            prof.push(*general.choose(&mut rng).unwrap());
            prof
        })
        .collect();

    let mut contacts = String::from("userID\tcontactID\tdate_day\tdate_month\tdate_year\tdate_hour\tdate_minute\tdate_second\n");
    let uid = |u: usize| 8 + 3 * u;
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for u in 0..p.users {
        for v in u + 1..p.users {
            let prob = if community(u) == community(v) { p.p_in } else { p.p_out };
            if rng.gen_bool(prob) {
                edges.insert((u, v));
            }
        }
    }
    // A chain through every user keeps the graph connected.
    for u in 0..p.users - 1 {
        edges.insert((u, u + 1));
    }
    for &(u, v) in &edges {
        let (day, month) = (rng.gen_range(1..=28), rng.gen_range(1..=12));
        for (a, b) in [(u, v), (v, u)] {
            let _ = writeln!(contacts, "{}\t{}\t{day}\t{month}\t2010\t12\t0\t0", uid(a), uid(b));
        }
    }

    let mut tagged = String::from("userID\tbookmarkID\ttagID\tday\tmonth\tyear\thour\tminute\tsecond\n");
    let by_topic: Vec<Vec<usize>> = (0..p.communities).map(|c| (0..p.items).filter(|&i| topic_of(i) == c).collect()).collect();
    for u in 0..p.users {
        let count = rng.gen_range(p.min_bookmarks..=p.max_bookmarks);
        let mut chosen: BTreeSet<usize> = BTreeSet::new();
        while chosen.len() < count {
            let item = if rng.gen_bool(p.own_topic) {
                *by_topic[community(u)].choose(&mut rng).unwrap()
            } else {
                rng.gen_range(0..p.items)
            };
            chosen.insert(item);
        }
        for &item in &chosen {
            let n_tags = rng.gen_range(1..=3);
            for &tag in profiles[item].choose_multiple(&mut rng, n_tags) {
                let _ = writeln!(tagged, "{}\t{}\t{}\t1\t6\t2010\t10\t0\t0", uid(u), 1 + 2 * item, tag + 1);
            }
        }
    }

    let mut tag_file = String::from("id\tvalue\n");
    for (k, t) in tags.iter().enumerate() {
        let _ = writeln!(tag_file, "{}\t{t}", k + 1);
    }

    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, body) in [("user_contacts.dat", contacts), ("user_taggedbookmarks.dat", tagged), ("tags.dat", tag_file)] {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
