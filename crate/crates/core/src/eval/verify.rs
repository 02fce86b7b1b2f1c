//! The desk-scale invariant suite behind `netbandit verify`.

use std::time::Instant;

use rand::Rng;

use super::bounds::{multitask_norm, multitask_norm_quadratic, regret_bound};
use super::checks::{
    corrupt_transform, equivalence_suite, identity_checks_with, inverse_oracle_check, random_identity_instance,
    trace_extremes_check,
};
use super::record::run_experiment;
use crate::bandit::{Algorithm, BanditState, ConfidencePolicy, Runner};
use crate::data::FourCliques;
use crate::error::Result;
use crate::graph::{SharingTransform, UserGraph};
use crate::rng::{seeded, Purpose};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Corrupt the sharing transform fed to the identity checks.
    pub inject_fault: bool,
    /// Seed offset for the randomized checks.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Itemized failures, if any.
    pub failures: Vec<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {} ({:.2}s): {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.seconds,
                c.detail
            ));
            for f in c.failures.iter().take(20) {
                out.push_str(&format!("    {f}\n"));
            }
            if c.failures.len() > 20 {
                out.push_str(&format!("    ... {} more\n", c.failures.len() - 20));
            }
        }
        out
    }
}

fn timed(name: &str, f: impl FnOnce() -> Result<(bool, String, Vec<String>)>) -> CheckResult {
    let start = Instant::now();
    let (passed, detail, failures) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}"), Vec::new()),
    };
    CheckResult { name: name.to_owned(), passed, detail, failures, seconds: start.elapsed().as_secs_f64() }
}

pub fn verify_suite(opts: VerifyOptions) -> VerifyReport {
    let seed = opts.seed;
    let mut checks = Vec::new();

    checks.push(timed("incremental inverse oracle", || {
        let o = inverse_oracle_check(10, 1000, seed)?;
        let ok = o.max_entry_gap <= 1e-8 && o.logdet_gap <= 1e-6;
        Ok((ok, format!("max entry gap {:.2e}, logdet gap {:.2e}", o.max_entry_gap, o.logdet_gap), Vec::new()))
    }));

    checks.push(timed("lifted identities on 100 random instances", || {
        let mut rng = seeded(seed, Purpose::Fixture);
        let mut failures = Vec::new();
        let (mut inner, mut rel) = (0.0f64, 0.0f64);
        for k in 0..100u64 {
            let (n, d) = (rng.gen_range(1..=30), rng.gen_range(1..=10));
            let (g, gt, xs) = random_identity_instance(n, d, 10, seed.wrapping_add(k))?;
            let mut tr = SharingTransform::build(&g)?;
            if opts.inject_fault {
                tr = corrupt_transform(&tr)?;
            }
            let r = identity_checks_with(&gt, &g, &tr, &xs)?;
            inner = inner.max(r.max_inner_gap);
            rel = rel.max(r.norm_rel_gap);
            failures.extend(r.failures.into_iter().map(|f| format!("instance {k} (n={n}, d={d}): {f}")));
        }
        Ok((failures.is_empty(), format!("max inner gap {inner:.2e}, max norm gap {rel:.2e}"), failures))
    }));

    checks.push(timed("multitask norm two ways", || {
        let mut worst = 0.0f64;
        for k in 0..20 {
            let (g, gt, _) = random_identity_instance(15, 5, 0, seed.wrapping_add(1000 + k))?;
            let a = multitask_norm(&gt, &g)?;
            let b = multitask_norm_quadratic(&gt, &SharingTransform::build(&g)?)?;
            worst = worst.max((a - b).abs() / a.max(1.0));
        }
        Ok((worst <= 1e-10, format!("max relative gap {worst:.2e}"), Vec::new()))
    }));

    checks.push(timed("trace extremes", || {
        let e = trace_extremes_check(&UserGraph::new(10), 5, 200, seed)?;
        let c = trace_extremes_check(&UserGraph::complete(9), 2, 100, seed)?;
        let ok = e.max_gap() <= 1e-6 && c.max_gap() <= 1e-6;
        Ok((ok, format!("edgeless tr {} (gap {:.1e}), complete tr {} (gap {:.1e})", e.tracked, e.max_gap(), c.tracked, c.max_gap()), Vec::new()))
    }));

    checks.push(timed("baseline equivalences", || {
        let res = equivalence_suite(10, 5, 500, seed)?;
        let failures: Vec<String> = res
            .iter()
            .filter(|e| !e.holds(1e-9))
            .map(|e| format!("{}: {} choice mismatches, scalar gap {:.2e}", e.name, e.choice_mismatches, e.max_scalar_gap))
            .collect();
        let worst = res.iter().map(|e| e.max_scalar_gap).fold(0.0, f64::max);
        Ok((failures.is_empty(), format!("{} pairs, max scalar gap {worst:.2e}", res.len()), failures))
    }));

    checks.push(timed("snapshot round trip", || {
        let mut s = BanditState::new(4);
        let mut rng = seeded(seed, Purpose::Context);
        for _ in 0..50 {
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            s.update(&v, rng.gen_range(-1.0..1.0))?;
        }
        let mut buf = Vec::new();
        s.write_snapshot(&mut buf)?;
        let back = BanditState::read_snapshot(&buf[..])?;
        Ok((back == s, format!("{} bytes", buf.len()), Vec::new()))
    }));

    checks.push(timed("regret bound coverage (small 4Cliques)", || {
        let spec = FourCliques { clique_count: 4, clique_size: 4, d: 4, set_size: 10, graph_noise: 0.0, payoff_noise: 0.5 };
        let seeds = 10u64;
        let mut covered = 0;
        let mut failures = Vec::new();
        for s in 0..seeds {
            let inst = spec.build(seed.wrapping_add(s))?;
            let l = multitask_norm(&inst.env.truth, &inst.noisy)?;
            let policy = ConfidencePolicy::Theoretical { sigma: 0.5, delta: 0.05, norm_bound: l.sqrt() };
            let mut runner = Runner::new(Algorithm::GobLin, &inst.noisy, spec.d, policy)?;
            let rec = run_experiment(&inst.env, &mut runner, seed.wrapping_add(s), 500)?;
            let regret = rec.cumulative_regret().unwrap_or(f64::INFINITY);
            let bound = regret_bound(500, 0.5, 0.05, l, rec.max_norm, rec.final_logdet())?;
            if regret <= bound {
                covered += 1;
            } else {
                failures.push(format!("seed {s}: regret {regret:.2} > bound {bound:.2}"));
            }
        }
        Ok((covered + 1 >= seeds, format!("{covered}/{seeds} runs within the bound"), failures))
    }));

    VerifyReport { checks }
}
