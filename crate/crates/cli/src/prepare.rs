use std::path::{Path, PathBuf};

use anyhow::Context;

use netbandit::data::{
    cache_key, load_hetrec, read_feature_cache, write_bookmark_fixture, write_prepared, DatasetKind, FixtureParams,
    LoadOptions,
};

#[derive(Debug, Clone)]
pub struct PrepareRequest {
    /// Directory holding the HetRec files; ignored with `fixture`.
    pub input: Option<PathBuf>,
    pub kind: DatasetKind,
    pub out: PathBuf,
    pub options: LoadOptions,
    /// Generate a bookmark corpus under `<out>/raw` and prepare that instead.
    pub fixture: Option<FixtureParams>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrepareOutcome {
    Written { stats: String },
    CacheHit,
}

fn key_for(input: &Path, kind: DatasetKind, options: &LoadOptions) -> anyhow::Result<[u8; 32]> {
    let mut parts: Vec<Vec<u8>> = vec![
        kind.to_string().into_bytes(),
        format!("{:?}", options.min_tag_count).into_bytes(),
        options.pca_dim.to_string().into_bytes(),
        options.largest_component.to_string().into_bytes(),
    ];
    for f in kind.files() {
        let p = input.join(f);
        parts.push(std::fs::read(&p).with_context(|| format!("reading {}", p.display()))?);
    }
    let refs: Vec<&[u8]> = parts.iter().map(Vec::as_slice).collect();
    Ok(cache_key(&refs))
}

const OUTPUTS: [&str; 6] = ["graph.tsv", "positives.tsv", "stats.tsv", "users.tsv", "items.tsv", "features.bin"];

pub fn prepare(req: &PrepareRequest) -> anyhow::Result<PrepareOutcome> {
    let (input, kind) = match &req.fixture {
        Some(params) => {
            let raw = req.out.join("raw");
            write_bookmark_fixture(&raw, params)?;
            (raw, DatasetKind::Delicious)
        }
        None => (req.input.clone().context("an input directory is required")?, req.kind),
    };
    let key = key_for(&input, kind, &req.options)?;
    let cached = req.out.join("features.bin");
    if OUTPUTS.iter().all(|f| req.out.join(f).is_file()) {
        if let Ok((k, _)) = read_feature_cache(&cached) {
            if k == key {
                return Ok(PrepareOutcome::CacheHit);
            }
        }
    }
    let data = load_hetrec(&input, kind, req.options)?;
    write_prepared(&req.out, &data, &key)?;
    Ok(PrepareOutcome::Written { stats: data.stats.to_tsv() })
}
