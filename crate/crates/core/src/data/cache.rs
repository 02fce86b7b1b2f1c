//! On-disk artifacts: the feature cache and a prepared-dataset directory.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::hetrec::{Dataset, Interactions};
use crate::error::{Error, Result};
use crate::graph::UserGraph;

const FEATURE_MAGIC: &[u8; 8] = b"NBFEAT\0\0";
const FEATURE_VERSION: u32 = 1;

/// SHA-256 over length-prefixed parts, so `["ab", "c"]` and `["a", "bc"]` differ.
pub fn cache_key(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

/// Writes `rows` (all of equal length) tagged with `key`.
pub fn write_feature_cache(path: &Path, key: &[u8; 32], rows: &[Vec<f64>]) -> Result<()> {
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch { expected: cols, actual: bad.len() });
    }
    let mut buf = Vec::with_capacity(60 + 8 * rows.len() * cols);
    buf.extend_from_slice(FEATURE_MAGIC);
    buf.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    buf.extend_from_slice(key);
    buf.extend_from_slice(&(rows.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(cols as u64).to_le_bytes());
    for x in rows.iter().flatten() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Reads a feature cache, returning its key and rows.
pub fn read_feature_cache(path: &Path) -> Result<([u8; 32], Vec<Vec<f64>>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::Snapshot(format!("{}: {msg}", path.display()));
    if bytes.len() < 60 || &bytes[..8] != FEATURE_MAGIC {
        return Err(bad("not a feature cache"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FEATURE_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let key: [u8; 32] = bytes[12..44].try_into().unwrap();
    let rows = u64::from_le_bytes(bytes[44..52].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[52..60].try_into().unwrap()) as usize;
    let body = &bytes[60..];
    if rows.checked_mul(cols).and_then(|c| c.checked_mul(8)) != Some(body.len()) {
        return Err(bad("payload length does not match the header"));
    }
    let values: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let out = if cols == 0 { vec![Vec::new(); rows] } else { values.chunks(cols).map(<[f64]>::to_vec).collect() };
    Ok((key, out))
}

/// A dataset ready to run: graph, positives and features.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub graph: UserGraph,
    pub interactions: Interactions,
    pub key: [u8; 32],
}

/// Writes `graph.tsv`, `positives.tsv`, `features.bin`, `stats.tsv`,
/// `users.tsv` and `items.tsv` into `dir`.
pub fn write_prepared(dir: &Path, data: &Dataset, key: &[u8; 32]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    data.graph.write(&dir.join("graph.tsv"))?;
    let mut pos = String::from("user\titem\n");
    for u in 0..data.interactions.users() {
        for i in data.interactions.positives(u) {
            let _ = writeln!(pos, "{u}\t{i}");
        }
    }
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    write("positives.tsv", pos)?;
    write("stats.tsv", data.stats.to_tsv())?;
    write("users.tsv", id_table("user", &data.user_ids))?;
    write("items.tsv", id_table("item", &data.item_ids))?;
    write_feature_cache(&dir.join("features.bin"), key, data.interactions.features())
}

fn id_table(what: &str, ids: &[String]) -> String {
    let mut out = format!("{what}\toriginal_id\n");
    for (i, id) in ids.iter().enumerate() {
        let _ = writeln!(out, "{i}\t{id}");
    }
    out
}

pub fn read_prepared(dir: &Path) -> Result<Prepared> {
    let graph = UserGraph::read(&dir.join("graph.tsv"))?;
    let (key, features) = read_feature_cache(&dir.join("features.bin"))?;
    let path = dir.join("positives.tsv");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut positives = vec![Vec::new(); graph.n()];
    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.split('\t');
        let mut next = |what: &str| -> Result<usize> {
            f.next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::parse(&path, idx + 1, format!("bad {what} id")))
        };
        let (u, i) = (next("user")?, next("item")?);
        positives
            .get_mut(u)
            .ok_or_else(|| Error::parse(&path, idx + 1, format!("user {u} not in graph")))?
            .push(i);
    }
    let interactions = Interactions::new(positives, features)?;
    Ok(Prepared { graph, interactions, key })
}
