use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use crate::run::mean_stderr;
use crate::svg::{line_chart, Series};
use crate::write_atomic;

/// Most points kept per curve in `curves.csv` and the charts.
const MAX_POINTS: usize = 200;

/// `(graph noise, payoff noise)` labels taken from the `gn_*/pn_*` path
/// components; `"-"` when a run file sits outside that layout.
type Cell = (String, String);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct GroupKey {
    cell: (OrdLabel, OrdLabel),
    algo: String,
    alpha: String,
}

/// Orders numeric labels numerically, others lexically after them.
#[derive(Debug, Clone, PartialEq, Eq)]
struct OrdLabel(String);

impl Ord for OrdLabel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self.0.parse::<f64>(), other.0.parse::<f64>()) {
            (Ok(a), Ok(b)) => a.total_cmp(&b),
            (Ok(_), Err(_)) => std::cmp::Ordering::Less,
            (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
            _ => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for OrdLabel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn find_runs(dir: &Path, out: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .collect::<Result<_, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            find_runs(&p, out)?;
        } else if p.extension().is_some_and(|x| x == "csv")
            && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("seed_"))
        {
            out.push(p);
        }
    }
    Ok(())
}

fn label(rel: &Path, prefix: &str) -> Option<String> {
    rel.components().find_map(|c| c.as_os_str().to_str()?.strip_prefix(prefix).map(str::to_owned))
}

/// `(algo, t, cum_norm_reward)` series of one run file.
fn read_run(path: &Path) -> anyhow::Result<(String, Vec<(f64, f64)>)> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).with_context(|| format!("{}: no `{name}` column", path.display()));
    let (ct, ca, cn) = (col("t")?, col("algo")?, col("cum_norm_reward")?);
    let mut algo = String::new();
    let mut points = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), k + 2))?;
        let parse = |c: usize| -> anyhow::Result<f64> {
            rec.get(c).unwrap_or("").parse().with_context(|| format!("{}: row {}", path.display(), k + 2))
        };
        algo = rec.get(ca).unwrap_or("").to_owned();
        points.push((parse(ct)?, parse(cn)?));
    }
    Ok((algo, points))
}

fn downsample<T: Copy>(xs: &[T]) -> Vec<T> {
    if xs.len() <= MAX_POINTS {
        return xs.to_vec();
    }
    let step = xs.len().div_ceil(MAX_POINTS);
    let mut out: Vec<T> = xs.iter().step_by(step).copied().collect();
    if (xs.len() - 1) % step != 0 {
        out.push(xs[xs.len() - 1]);
    }
    out
}

#[derive(Debug, Clone)]
pub struct ReportSummary {
    pub runs: usize,
    pub groups: usize,
    pub cells: Vec<Cell>,
    pub out_dir: PathBuf,
}

/// Aggregates every `seed_*.csv` under `results` into mean ± stderr curves,
/// a final-reward table, a noise grid and one SVG chart per cell.
pub fn report(results: &Path, out_dir: &Path) -> anyhow::Result<ReportSummary> {
    let mut files = Vec::new();
    find_runs(results, &mut files)?;
    let files: Vec<PathBuf> = files.into_iter().filter(|f| !f.starts_with(out_dir)).collect();
    if files.is_empty() {
        bail!("no seed_*.csv result files under {}", results.display());
    }
    let mut groups: BTreeMap<GroupKey, Vec<Vec<(f64, f64)>>> = BTreeMap::new();
    for f in &files {
        let rel = f.strip_prefix(results).unwrap_or(f);
        let (algo, points) = read_run(f)?;
        let key = GroupKey {
            cell: (
                OrdLabel(label(rel, "gn_").unwrap_or_else(|| "-".into())),
                OrdLabel(label(rel, "pn_").unwrap_or_else(|| "-".into())),
            ),
            algo,
            alpha: label(rel, "alpha_").unwrap_or_else(|| "-".into()),
        };
        groups.entry(key).or_default().push(points);
    }

    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut curves = String::from("graph_noise,payoff_noise,algo,alpha,t,mean,stderr\n");
    let mut finals = String::from("graph_noise,payoff_noise,algo,alpha,seeds,mean,stderr,best\n");
    // (cell, algo) -> (final mean, stderr, alpha, curve) of the best α.
    type Best = (f64, f64, String, Vec<(f64, f64, f64)>);
    let mut best: BTreeMap<((OrdLabel, OrdLabel), String), Best> = BTreeMap::new();
    let mut summaries = Vec::new();
    for (key, runs) in &groups {
        let len = runs.iter().map(Vec::len).min().unwrap_or(0);
        let curve: Vec<(f64, f64, f64)> = (0..len)
            .map(|i| {
                let (m, se) = mean_stderr(&runs.iter().map(|r| r[i].1).collect::<Vec<_>>());
                (runs[0][i].0, m, se)
            })
            .collect();
        for &(t, m, se) in &downsample(&curve) {
            let _ = writeln!(curves, "{},{},{},{},{t},{m},{se}", key.cell.0 .0, key.cell.1 .0, key.algo, key.alpha);
        }
        let (fm, fse) = curve.last().map_or((0.0, 0.0), |&(_, m, se)| (m, se));
        summaries.push((key, runs.len(), fm, fse));
        let slot = best.entry((key.cell.clone(), key.algo.clone())).or_insert((f64::NEG_INFINITY, 0.0, String::new(), Vec::new()));
        if fm > slot.0 {
            *slot = (fm, fse, key.alpha.clone(), downsample(&curve));
        }
    }
    for (key, seeds, fm, fse) in &summaries {
        let is_best = best[&(key.cell.clone(), key.algo.clone())].2 == key.alpha;
        let _ = writeln!(finals, "{},{},{},{},{seeds},{fm},{fse},{}", key.cell.0 .0, key.cell.1 .0, key.algo, key.alpha, u8::from(is_best));
    }
    write_atomic(&out_dir.join("curves.csv"), curves.as_bytes())?;
    write_atomic(&out_dir.join("final.csv"), finals.as_bytes())?;

    let mut cells: Vec<(OrdLabel, OrdLabel)> = best.keys().map(|(c, _)| c.clone()).collect();
    cells.dedup();
    let gns: Vec<&OrdLabel> = {
        let mut v: Vec<&OrdLabel> = cells.iter().map(|c| &c.0).collect();
        v.sort();
        v.dedup();
        v
    };
    let pns: Vec<&OrdLabel> = {
        let mut v: Vec<&OrdLabel> = cells.iter().map(|c| &c.1).collect();
        v.sort();
        v.dedup();
        v
    };
    // Rows: graph noise, increasing downwards. Columns: payoff noise.
    let mut grid = String::from("graph_noise");
    for p in &pns {
        let _ = write!(grid, ",pn_{}", p.0);
    }
    grid.push('\n');
    for g in &gns {
        grid.push_str(&g.0);
        for p in &pns {
            let entries: Vec<String> = best
                .iter()
                .filter(|((c, _), _)| &c.0 == *g && &c.1 == *p)
                .map(|((_, algo), (m, se, _, _))| format!("{algo}={m:.2}+-{se:.2}"))
                .collect();
            let _ = write!(grid, ",{}", entries.join(" "));
        }
        grid.push('\n');
    }
    write_atomic(&out_dir.join("grid.csv"), grid.as_bytes())?;

    for cell in &cells {
        let series: Vec<Series> = best
            .iter()
            .filter(|((c, _), _)| c == cell)
            .map(|((_, algo), (_, _, alpha, curve))| Series { label: format!("{algo} (alpha {alpha})"), points: curve.clone() })
            .collect();
        let title = format!("graph noise {}, payoff noise {}", cell.0 .0, cell.1 .0);
        let svg = line_chart(&title, "round", "normalized cumulative reward", &series);
        let name = format!("cell_gn_{}_pn_{}.svg", cell.0 .0, cell.1 .0);
        write_atomic(&out_dir.join(name), svg.as_bytes())?;
    }
    Ok(ReportSummary {
        runs: files.len(),
        groups: groups.len(),
        cells: cells.into_iter().map(|(g, p)| (g.0, p.0)).collect(),
        out_dir: out_dir.to_path_buf(),
    })
}
