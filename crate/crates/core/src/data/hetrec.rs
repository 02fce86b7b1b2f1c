//! HetRec-style social bookmarking / listening data.
//!
//! Every input file is tab-separated text with one header line. Extra
//! columns are ignored. Payoffs are implicit: 1 if the user interacted with
//! the item, 0 otherwise.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use super::tags::{build_item_features, FeatureParams, TagStats};
use super::{Environment, Feedback};
use crate::bandit::ContextEvent;
use crate::error::{Error, Result};
use crate::graph::UserGraph;
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetKind {
    /// Artists listened to, with friendship links and artist tags.
    LastFm,
    /// Bookmarked URLs, with contact links and bookmark tags.
    Delicious,
}

impl DatasetKind {
    /// `(friends, interactions, tag assignments, tag names)` file names.
    pub fn files(&self) -> [&'static str; 4] {
        match self {
            Self::LastFm => ["user_friends.dat", "user_artists.dat", "user_taggedartists.dat", "tags.dat"],
            Self::Delicious => ["user_contacts.dat", "user_taggedbookmarks.dat", "user_taggedbookmarks.dat", "tags.dat"],
        }
    }

    /// Rare-tag cutoff: 10 for bookmarks, none for artists.
    pub fn default_min_tag_count(&self) -> usize {
        match self {
            Self::LastFm => 1,
            Self::Delicious => 10,
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::LastFm => "lastfm",
            Self::Delicious => "delicious",
        })
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['.', '-', '_'], "").as_str() {
            "lastfm" => Ok(Self::LastFm),
            "delicious" => Ok(Self::Delicious),
            _ => Err(Error::invalid(format!("unknown dataset kind {s:?}; expected lastfm or delicious"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    /// Defaults to the dataset kind's cutoff.
    pub min_tag_count: Option<usize>,
    pub pca_dim: usize,
    /// Keep only the largest connected component of the friendship graph.
    pub largest_component: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { min_tag_count: None, pca_dim: 25, largest_component: true }
    }
}

/// Counts before and after the user filters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetStats {
    /// Distinct users in the friendship and interaction files.
    pub nodes: usize,
    /// Distinct undirected friendship pairs.
    pub edges: usize,
    /// Distinct items in the interaction file.
    pub items: usize,
    /// Distinct (user, item) interaction pairs.
    pub nonzero_payoffs: usize,
    /// Rows in the tag-name file.
    pub tag_names: usize,
    pub tags: TagStats,
    pub users_without_positives: usize,
    pub users_outside_component: usize,
    /// Users and friendship edges actually used.
    pub kept_nodes: usize,
    pub kept_edges: usize,
    pub kept_payoffs: usize,
}

impl DatasetStats {
    /// Two-column `key<TAB>value` report.
    pub fn to_tsv(&self) -> String {
        let rows: [(&str, usize); 14] = [
            ("nodes", self.nodes),
            ("edges", self.edges),
            ("items", self.items),
            ("nonzero_payoffs", self.nonzero_payoffs),
            ("tag_names", self.tag_names),
            ("tags_used", self.tags.raw_tags),
            ("tags_after_splitting", self.tags.split_tags),
            ("tags_kept", self.tags.kept_tags),
            ("items_without_tags", self.tags.zero_items),
            ("users_without_positives", self.users_without_positives),
            ("users_outside_component", self.users_outside_component),
            ("kept_nodes", self.kept_nodes),
            ("kept_edges", self.kept_edges),
            ("kept_payoffs", self.kept_payoffs),
        ];
        let mut out = String::from("stat\tvalue\n");
        for (k, v) in rows {
            out.push_str(&format!("{k}\t{v}\n"));
        }
        out
    }
}

/// Implicit-feedback interactions over densely indexed users and items.
#[derive(Debug, Clone, PartialEq)]
pub struct Interactions {
    /// Sorted positive items per user.
    positives: Vec<Vec<usize>>,
    features: Vec<Vec<f64>>,
    dim: usize,
}

impl Interactions {
    pub fn new(positives: Vec<Vec<usize>>, features: Vec<Vec<f64>>) -> Result<Self> {
        let dim = features.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::invalid("item features are empty"));
        }
        if let Some(bad) = features.iter().find(|f| f.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: bad.len() });
        }
        let items = features.len();
        let mut positives = positives;
        for (u, list) in positives.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            if list.is_empty() {
                return Err(Error::invalid(format!("user {u} has no positive items")));
            }
            if let Some(&bad) = list.iter().find(|&&i| i >= items) {
                return Err(Error::OutOfRange { what: "items", index: bad, len: items });
            }
        }
        Ok(Self { positives, features, dim })
    }

    pub fn users(&self) -> usize {
        self.positives.len()
    }

    pub fn items(&self) -> usize {
        self.features.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positives(&self, user: usize) -> &[usize] {
        &self.positives[user]
    }

    pub fn feature(&self, item: usize) -> &[f64] {
        &self.features[item]
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn payoff(&self, user: usize, item: usize) -> f64 {
        if self.positives[user].binary_search(&item).is_ok() {
            1.0
        } else {
            0.0
        }
    }

    pub fn nonzero_payoffs(&self) -> usize {
        self.positives.iter().map(Vec::len).sum()
    }
}

/// Item ids of one round's context set plus the event built from them.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemSet {
    pub items: Vec<usize>,
    pub event: ContextEvent,
}

/// A uniform user, one of its positive items, and `set_size − 1` other
/// distinct items drawn uniformly; positions are shuffled.
pub fn sample_context_set(inter: &Interactions, set_size: usize, seed: u64, t: u64) -> Result<ItemSet> {
    if set_size == 0 || set_size > inter.items() {
        return Err(Error::invalid(format!("context set size {set_size} not in 1..={}", inter.items())));
    }
    let mut rng = stream(seed, t, Purpose::Context);
    let user = rng.gen_range(0..inter.users());
    let pos = inter.positives(user);
    let forced = pos[rng.gen_range(0..pos.len())];
    let mut items = vec![forced];
    let mut seen: BTreeSet<usize> = items.iter().copied().collect();
    while items.len() < set_size {
        let pick = rng.gen_range(0..inter.items());
        // A pick colliding with the forced positive (or an earlier pick) is redrawn.
        if seen.insert(pick) {
            items.push(pick);
        }
    }
    items.shuffle(&mut rng);
    let candidates = items.iter().map(|&i| inter.feature(i).to_vec()).collect();
    Ok(ItemSet { items, event: ContextEvent { t, user, candidates } })
}

/// Real-data environment: payoff 1 for an item the user interacted with.
#[derive(Debug, Clone)]
pub struct RealEnv {
    pub interactions: Interactions,
    pub set_size: usize,
}

impl RealEnv {
    pub fn new(interactions: Interactions, set_size: usize) -> Result<Self> {
        if set_size == 0 || set_size > interactions.items() {
            return Err(Error::invalid(format!("context set size {set_size} not in 1..={}", interactions.items())));
        }
        Ok(Self { interactions, set_size })
    }

    pub fn item_set(&self, seed: u64, t: u64) -> ItemSet {
        sample_context_set(&self.interactions, self.set_size, seed, t).expect("set size validated at construction")
    }
}

impl Environment for RealEnv {
    fn users(&self) -> usize {
        self.interactions.users()
    }

    fn dim(&self) -> usize {
        self.interactions.dim()
    }

    fn event(&self, seed: u64, t: u64) -> ContextEvent {
        self.item_set(seed, t).event
    }

    fn feedback(&self, seed: u64, event: &ContextEvent) -> Feedback {
        let set = self.item_set(seed, event.t);
        debug_assert_eq!(set.event.user, event.user);
        let payoffs = set.items.iter().map(|&i| self.interactions.payoff(event.user, i)).collect();
        Feedback { payoffs, expected: None, clipped: 0 }
    }
}

/// A loaded dataset: the friendship graph over kept users and their interactions.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub graph: UserGraph,
    pub interactions: Interactions,
    pub stats: DatasetStats,
    /// Original id of each kept user, in dense index order.
    pub user_ids: Vec<String>,
    /// Original id of each item, in dense index order.
    pub item_ids: Vec<String>,
}

struct Table {
    path: PathBuf,
    /// `(line number, fields)`
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table(path: &Path, min_cols: usize) -> Result<Table> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = match String::from_utf8(bytes) {
        Ok(s) => s,
        // Some releases ship Latin-1 tag names.
        Err(e) => e.into_bytes().iter().map(|&b| b as char).collect(),
    };
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(|f| f.trim().to_owned()).collect();
        if fields.len() < min_cols {
            return Err(Error::parse(path, idx + 1, format!("expected at least {min_cols} columns, got {}", fields.len())));
        }
        rows.push((idx + 1, fields));
    }
    Ok(Table { path: path.to_path_buf(), rows })
}

/// Orders ids numerically when they all parse as integers, lexically otherwise.
fn sorted_ids(ids: BTreeSet<String>) -> Vec<String> {
    let mut v: Vec<String> = ids.into_iter().collect();
    if v.iter().all(|s| s.parse::<u64>().is_ok()) {
        v.sort_by_key(|s| s.parse::<u64>().unwrap());
    }
    v
}

pub fn load_hetrec(dir: &Path, kind: DatasetKind, options: LoadOptions) -> Result<Dataset> {
    let [friends_f, inter_f, tagged_f, tags_f] = kind.files();
    let friends = read_table(&dir.join(friends_f), 2)?;
    let inter = read_table(&dir.join(inter_f), 2)?;
    let tagged = if tagged_f == inter_f { None } else { Some(read_table(&dir.join(tagged_f), 3)?) };
    let tag_names = read_table(&dir.join(tags_f), 2)?;
    let tagged = tagged.as_ref().unwrap_or(&inter);
    if tagged.rows.iter().any(|(_, f)| f.len() < 3) {
        let (line, _) = tagged.rows.iter().find(|(_, f)| f.len() < 3).unwrap();
        return Err(Error::parse(&tagged.path, *line, "expected user, item and tag columns"));
    }

    let mut tag_value: HashMap<&str, &str> = HashMap::new();
    for (line, f) in &tag_names.rows {
        if tag_value.insert(&f[0], &f[1]).is_some() {
            return Err(Error::parse(&tag_names.path, *line, format!("duplicate tag id {}", f[0])));
        }
    }

    let mut user_set: BTreeSet<String> = BTreeSet::new();
    let mut item_set: BTreeSet<String> = BTreeSet::new();
    for (_, f) in &friends.rows {
        user_set.insert(f[0].clone());
        user_set.insert(f[1].clone());
    }
    for (_, f) in &inter.rows {
        user_set.insert(f[0].clone());
        item_set.insert(f[1].clone());
    }
    let user_ids = sorted_ids(user_set);
    let item_ids = sorted_ids(item_set);
    let uidx: HashMap<&str, usize> = user_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let iidx: HashMap<&str, usize> = item_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();

    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (line, f) in &friends.rows {
        let (a, b) = (uidx[f[0].as_str()], uidx[f[1].as_str()]);
        if a == b {
            return Err(Error::parse(&friends.path, *line, format!("user {} befriends itself", f[0])));
        }
        edges.insert((a.min(b), a.max(b)));
    }
    let mut positives: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); user_ids.len()];
    for (_, f) in &inter.rows {
        positives[uidx[f[0].as_str()]].insert(iidx[f[1].as_str()]);
    }
    let nonzero_payoffs = positives.iter().map(BTreeSet::len).sum();

    let mut assignments: Vec<(usize, &str)> = Vec::new();
    for (line, f) in &tagged.rows {
        let Some(&item) = iidx.get(f[1].as_str()) else { continue };
        let name = tag_value
            .get(f[2].as_str())
            .ok_or_else(|| Error::parse(&tagged.path, *line, format!("unknown tag id {}", f[2])))?;
        assignments.push((item, name));
    }
    let params = FeatureParams {
        min_tag_count: options.min_tag_count.unwrap_or_else(|| kind.default_min_tag_count()),
        pca_dim: options.pca_dim,
    };
    let features = build_item_features(item_ids.len(), &assignments, params)?;
    if features.dim == 0 {
        return Err(Error::invalid("no tag survives the preprocessing; item features would be empty"));
    }

    let full = UserGraph::from_unweighted(user_ids.len(), edges.iter().copied())?;
    let with_pos: Vec<usize> = (0..user_ids.len()).filter(|&u| !positives[u].is_empty()).collect();
    let users_without_positives = user_ids.len() - with_pos.len();
    let sub = full.induced(&with_pos)?;
    let kept: Vec<usize> = if options.largest_component {
        let comps = sub.components();
        let largest = comps.iter().max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0]))).cloned().unwrap_or_default();
        largest.into_iter().map(|local| with_pos[local]).collect()
    } else {
        with_pos.clone()
    };
    let users_outside_component = with_pos.len() - kept.len();
    let graph = full.induced(&kept)?;
    let kept_positives: Vec<Vec<usize>> = kept.iter().map(|&u| positives[u].iter().copied().collect()).collect();
    let interactions = Interactions::new(kept_positives, features.rows)?;

    let stats = DatasetStats {
        nodes: user_ids.len(),
        edges: edges.len(),
        items: item_ids.len(),
        nonzero_payoffs,
        tag_names: tag_names.rows.len(),
        tags: features.stats,
        users_without_positives,
        users_outside_component,
        kept_nodes: graph.n(),
        kept_edges: graph.edge_count(),
        kept_payoffs: interactions.nonzero_payoffs(),
    };
    let user_ids = kept.iter().map(|&u| user_ids[u].clone()).collect();
    Ok(Dataset { kind, graph, interactions, stats, user_ids, item_ids })
}

/// Restricts a dataset to the users in `keep` (dense indices), e.g. to
/// subsample a community. Items and features are unchanged.
pub fn restrict_users(data: &Dataset, keep: &[usize]) -> Result<Dataset> {
    let graph = data.graph.induced(keep)?;
    let positives = keep.iter().map(|&u| data.interactions.positives(u).to_vec()).collect();
    let interactions = Interactions::new(positives, data.interactions.features().to_vec())?;
    let mut stats = data.stats.clone();
    stats.kept_nodes = graph.n();
    stats.kept_edges = graph.edge_count();
    stats.kept_payoffs = interactions.nonzero_payoffs();
    let user_ids = keep.iter().map(|&u| data.user_ids[u].clone()).collect();
    Ok(Dataset { kind: data.kind, graph, interactions, stats, user_ids, item_ids: data.item_ids.clone() })
}
