//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Every tolerance is pinned below.
//!
//! Step-size protocol for the comparative criteria: each algorithm's α is
//! picked from `ALPHA_GRID` (scaled by the largest candidate norm `B`) by
//! the mean final normalized reward on `TUNING_SEEDS`, which are disjoint
//! from the evaluation seeds, then evaluated on the evaluation seeds.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;

use netbandit::bandit::{Algorithm, ConfidencePolicy, Runner};
use netbandit::data::{
    load_hetrec, write_bookmark_fixture, DatasetKind, Environment, FixtureParams, FourCliques, LoadOptions, RealEnv,
};
use netbandit::eval::{
    equivalence_suite, identity_checks, inverse_oracle_check, multitask_norm, random_identity_instance,
    run_experiment, regret_bound, trace_extremes_check,
};
use netbandit::graph::{make_4cliques, inject_graph_noise, UserGraph};
use netbandit::rng::{seeded, Purpose};

const EQUIV_TOL: f64 = 1e-9;
const EQUIV_MAX_SECONDS: f64 = 10.0;
const INVERSE_ENTRY_TOL: f64 = 1e-8;
const INVERSE_LOGDET_TOL: f64 = 1e-6;
const IDENTITY_INSTANCES: u64 = 100;
const TRACE_TOL: f64 = 1e-6;
const COVERAGE_SEEDS: u64 = 40;
const COVERAGE_MIN: usize = 39;
const COVERAGE_MAX_SECONDS: f64 = 30.0 * 60.0;
const ALPHA_GRID: [f64; 4] = [0.03, 0.1, 0.3, 1.0];
const TUNING_SEEDS: [u64; 1] = [1000];
const SYNTH_ROUNDS: u64 = 5000;
const SYNTH_SEEDS: u64 = 10;
const NOISY_GRAPH: f64 = 500.0;
const ADVANTAGE_SHRINK: f64 = 0.5;
const REAL_ROUNDS: u64 = 3000;
const REAL_SEEDS: u64 = 5;
const REAL_CLUSTERS: usize = 10;
const REAL_SLACK: f64 = 0.05;
const MIN_ROUNDS_PER_SECOND: f64 = 50.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

type Check = fn() -> netbandit::Result<Outcome>;

fn main() {
    let criteria: [(&str, Check); 11] = [
        ("1 equivalence triad", c1_equivalence),
        ("2 incremental inverse oracle", c2_inverse),
        ("3 lifted identities", c3_identities),
        ("4 trace extremes", c4_trace),
        ("5 regret bound coverage", c5_coverage),
        ("6 payoff-noise ordering", c6_ordering),
        ("7 graph-noise sensitivity", c7_graph_noise),
        ("8 preprocessing counts", c8_preprocessing),
        ("9 bookmark fixture", c9_fixture),
        ("10 determinism", c10_determinism),
        ("11 throughput", c11_throughput),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        // A bare number selects that criterion; anything else matches by substring.
        let selected = |f: &String| match f.parse::<u32>() {
            Ok(_) => name.split(' ').next() == Some(f.as_str()),
            Err(_) => name.contains(f.as_str()),
        };
        if !filter.is_empty() && !filter.iter().any(selected) {
            continue;
        }
        let start = Instant::now();
        let o = check().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        println!("{} criterion {name} ({:.1}s): {}", if o.passed { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64(), o.detail);
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn c1_equivalence() -> netbandit::Result<Outcome> {
    let start = Instant::now();
    let res = equivalence_suite(10, 5, 500, 1)?;
    let secs = start.elapsed().as_secs_f64();
    let worst = res.iter().map(|e| e.max_scalar_gap).fold(0.0, f64::max);
    let mismatches: usize = res.iter().map(|e| e.choice_mismatches).sum();
    let ok = res.len() == 4 && res.iter().all(|e| e.holds(EQUIV_TOL)) && secs < EQUIV_MAX_SECONDS;
    Ok(outcome(ok, format!("{} pairs, max gap {worst:.1e}, {mismatches} choice mismatches, {secs:.2}s", res.len())))
}

fn c2_inverse() -> netbandit::Result<Outcome> {
    let o = inverse_oracle_check(10, 1000, 2)?;
    let ok = o.max_entry_gap <= INVERSE_ENTRY_TOL && o.logdet_gap <= INVERSE_LOGDET_TOL;
    Ok(outcome(ok, format!("entry gap {:.1e}, logdet gap {:.1e}", o.max_entry_gap, o.logdet_gap)))
}

fn c3_identities() -> netbandit::Result<Outcome> {
    let mut rng = seeded(3, Purpose::Fixture);
    let (mut inner, mut rel, mut excess) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    let mut failures = 0;
    for k in 0..IDENTITY_INSTANCES {
        let (n, d) = (rng.gen_range(1..=30), rng.gen_range(1..=10));
        let (g, gt, xs) = random_identity_instance(n, d, 20, 300 + k)?;
        let r = identity_checks(&gt, &g, &xs)?;
        inner = inner.max(r.max_inner_gap);
        rel = rel.max(r.norm_rel_gap);
        excess = excess.max(r.max_norm_excess);
        failures += r.failures.len();
    }
    Ok(outcome(
        failures == 0,
        format!("{IDENTITY_INSTANCES} instances, inner gap {inner:.1e}, norm gap {rel:.1e}, max |phi~|-|x| {excess:.1e}"),
    ))
}

fn c4_trace() -> netbandit::Result<Outcome> {
    let e = trace_extremes_check(&UserGraph::new(10), 5, 200, 4)?;
    let c = trace_extremes_check(&UserGraph::complete(9), 2, 100, 4)?;
    let ok = e.closed_form == Some(250.0)
        && c.closed_form == Some(38.0)
        && e.max_gap() <= TRACE_TOL
        && c.max_gap() <= TRACE_TOL;
    Ok(outcome(ok, format!("edgeless {} (want 250), complete {} (want 38)", e.tracked, c.tracked)))
}

fn c5_coverage() -> netbandit::Result<Outcome> {
    let start = Instant::now();
    let spec = FourCliques { payoff_noise: 0.5, ..FourCliques::default() };
    let (z, delta, rounds) = (0.5, 0.05, 2000);
    let mut covered = 0;
    let mut worst_ratio = 0.0f64;
    for seed in 1..=COVERAGE_SEEDS {
        let inst = spec.build(seed)?;
        let l = multitask_norm(&inst.env.truth, &inst.noisy)?;
        let policy = ConfidencePolicy::Theoretical { sigma: z, delta, norm_bound: l.sqrt() };
        let mut runner = Runner::new(Algorithm::GobLin, &inst.noisy, spec.d, policy)?;
        let rec = run_experiment(&inst.env, &mut runner, seed, rounds)?;
        let regret = rec.cumulative_regret().expect("synthetic runs know the regret");
        let bound = regret_bound(rounds, z, delta, l, rec.max_norm, rec.final_logdet())?;
        covered += usize::from(regret <= bound);
        worst_ratio = worst_ratio.max(regret / bound);
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(outcome(
        covered >= COVERAGE_MIN && secs < COVERAGE_MAX_SECONDS,
        format!("{covered}/{COVERAGE_SEEDS} runs within the bound, largest regret/bound {worst_ratio:.3}"),
    ))
}

/// Mean final normalized reward of `algo` on fresh 4Cliques instances.
fn synth_mean(spec: &FourCliques, algo: Algorithm, alpha: f64, seeds: &[u64]) -> netbandit::Result<f64> {
    let mut total = 0.0;
    for &s in seeds {
        let inst = spec.build(s)?;
        let mut r = Runner::new(algo, &inst.noisy, spec.d, ConfidencePolicy::simplified(alpha))?;
        total += run_experiment(&inst.env, &mut r, s, SYNTH_ROUNDS)?.final_normalized_reward();
    }
    Ok(total / seeds.len() as f64)
}

/// Best grid α on the tuning seeds; contexts are unit vectors, so `B = 1`.
fn tuned_synth(spec: &FourCliques, algo: Algorithm) -> netbandit::Result<(f64, f64)> {
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for a in ALPHA_GRID {
        let m = synth_mean(spec, algo, a, &TUNING_SEEDS)?;
        if m > best.1 {
            best = (a, m);
        }
    }
    let eval: Vec<u64> = (1..=SYNTH_SEEDS).collect();
    Ok((best.0, synth_mean(spec, algo, best.0, &eval)?))
}

fn c6_ordering() -> netbandit::Result<Outcome> {
    let spec = FourCliques { payoff_noise: 0.5, ..FourCliques::default() };
    let (ag, g) = tuned_synth(&spec, Algorithm::GobLin)?;
    let (ai, i) = tuned_synth(&spec, Algorithm::LinUcbInd)?;
    let (as_, s) = tuned_synth(&spec, Algorithm::LinUcbSin)?;
    Ok(outcome(
        g > i && g >= s,
        format!("goblin {g:.1} (alpha {ag}), ind {i:.1} (alpha {ai}), sin {s:.1} (alpha {as_})"),
    ))
}

fn c7_graph_noise() -> netbandit::Result<Outcome> {
    let clean = FourCliques { payoff_noise: 0.1, ..FourCliques::default() };
    let noisy = FourCliques { graph_noise: NOISY_GRAPH, ..clean };
    let (_, ind) = tuned_synth(&clean, Algorithm::LinUcbInd)?;
    let (_, g0) = tuned_synth(&clean, Algorithm::GobLin)?;
    let (_, g500) = tuned_synth(&noisy, Algorithm::GobLin)?;
    // IND ignores the graph, so its reward is the same in both settings.
    let (adv0, adv500) = (g0 - ind, g500 - ind);
    Ok(outcome(
        adv0 > 0.0 && adv500 <= (1.0 - ADVANTAGE_SHRINK) * adv0,
        format!("advantage over ind: {adv0:.1} without graph noise, {adv500:.1} at {NOISY_GRAPH} toggles"),
    ))
}

fn c8_preprocessing() -> netbandit::Result<Outcome> {
    if let Some(dir) = std::env::var_os("NETBANDIT_HETREC_DIR").map(PathBuf::from) {
        return real_counts(&dir);
    }
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy");
    let data = load_hetrec(&dir, DatasetKind::LastFm, LoadOptions::default())?;
    let s = &data.stats;
    let got = [s.nodes, s.edges, s.items, s.nonzero_payoffs, s.tags.raw_tags, s.tags.split_tags, s.tags.kept_tags, s.kept_nodes];
    let want = [3, 1, 4, 5, 4, 5, 5, 2];
    Ok(outcome(got == want, format!("HetRec files not provided; toy fixture stats {got:?}, expected {want:?}")))
}

/// Published counts, checked when the real files are available under
/// `$NETBANDIT_HETREC_DIR/{lastfm,delicious}`.
fn real_counts(dir: &Path) -> netbandit::Result<Outcome> {
    let lfm = load_hetrec(&dir.join("lastfm"), DatasetKind::LastFm, LoadOptions::default())?.stats;
    let del = load_hetrec(&dir.join("delicious"), DatasetKind::Delicious, LoadOptions::default())?.stats;
    let got = [lfm.nodes, lfm.edges, lfm.tags.split_tags, del.edges, del.items, del.nonzero_payoffs, del.tags.kept_tags];
    let want = [1892, 12717, 6036, 7668, 69226, 104799, 9949];
    Ok(outcome(got == want, format!("real files: {got:?}, expected {want:?}")))
}

fn c9_fixture() -> netbandit::Result<Outcome> {
    let dir = tempfile::tempdir().map_err(|e| netbandit::Error::Io { path: "tempdir".into(), source: e })?;
    write_bookmark_fixture(dir.path(), &FixtureParams::default())?;
    let data = load_hetrec(dir.path(), DatasetKind::Delicious, LoadOptions::default())?;
    let env = RealEnv::new(data.interactions.clone(), 25)?;
    let b = data.interactions.features().iter().map(|x| netbandit::linalg::norm(x)).fold(0.0, f64::max);
    let mean = |algo: Algorithm, alpha: f64, seeds: &[u64]| -> netbandit::Result<f64> {
        let mut total = 0.0;
        for &s in seeds {
            let mut r = Runner::new(algo, &data.graph, env.dim(), ConfidencePolicy::simplified(alpha))?;
            total += run_experiment(&env, &mut r, s, REAL_ROUNDS)?.final_normalized_reward();
        }
        Ok(total / seeds.len() as f64)
    };
    let eval: Vec<u64> = (1..=REAL_SEEDS).collect();
    let mut results = Vec::new();
    for algo in [
        Algorithm::LinUcbInd,
        Algorithm::LinUcbSin,
        Algorithm::GobLin,
        Algorithm::GobLinMacro { clusters: REAL_CLUSTERS },
        Algorithm::GobLinBlock { clusters: REAL_CLUSTERS },
    ] {
        let mut best = (f64::NAN, f64::NEG_INFINITY);
        for a in ALPHA_GRID {
            let m = mean(algo, a * b, &TUNING_SEEDS)?;
            if m > best.1 {
                best = (a * b, m);
            }
        }
        results.push((algo, best.0, mean(algo, best.0, &eval)?));
    }
    let baseline = results[0].2.max(results[1].2);
    let floor = baseline - REAL_SLACK * baseline.abs();
    let ok = results[2..].iter().all(|r| r.2 >= floor);
    let detail: Vec<String> = results.iter().map(|(a, al, m)| format!("{a} {m:.1} (alpha {al:.3})")).collect();
    Ok(outcome(ok, format!("{}; floor {floor:.1}", detail.join(", "))))
}

fn c10_determinism() -> netbandit::Result<Outcome> {
    let spec = FourCliques { graph_noise: 30.0, payoff_noise: 0.3, clique_size: 5, ..FourCliques::default() };
    let mut identical = true;
    for algo in [Algorithm::GobLin, Algorithm::LinUcbInd, Algorithm::GobLinBlock { clusters: 4 }] {
        let run = || -> netbandit::Result<String> {
            let inst = spec.build(77)?;
            let mut r = Runner::new(algo, &inst.noisy, spec.d, ConfidencePolicy::simplified(0.3))?;
            Ok(run_experiment(&inst.env, &mut r, 77, 400)?.to_csv())
        };
        identical &= run()? == run()?;
    }
    Ok(outcome(identical, "repeated runs produce byte-identical CSVs"))
}

fn c11_throughput() -> netbandit::Result<Outcome> {
    // A connected 100-node graph, so the whole 1000-dimensional state is live.
    let (g, _) = inject_graph_noise(&make_4cliques(4, 25)?, 300.0, 11)?;
    let spec = FourCliques { clique_size: 25, d: 10, payoff_noise: 0.1, ..FourCliques::default() };
    let env = spec.build(11)?.env;
    let mut r = Runner::new(Algorithm::GobLin, &g, 10, ConfidencePolicy::simplified(0.3))?;
    let connected = g.is_connected();
    let rounds = 1000;
    let start = Instant::now();
    run_experiment(&env, &mut r, 11, rounds)?;
    let rate = rounds as f64 / start.elapsed().as_secs_f64();
    Ok(outcome(connected && rate >= MIN_ROUNDS_PER_SECOND, format!("{rate:.0} rounds/s at dn = 1000 (connected: {connected})")))
}
