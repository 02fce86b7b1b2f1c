use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use rayon::prelude::*;

use netbandit::bandit::{Algorithm, ConfidencePolicy, Runner, RunnerOptions};
use netbandit::data::{read_prepared, Environment, FourCliques, GroundTruth, Prepared, RealEnv};
use netbandit::eval::{multitask_norm, run_experiment, regret_bounds_uniform, RunRecord};
use netbandit::graph::{inject_graph_noise, UserGraph};
use netbandit::linalg::norm;

use crate::config::{DatasetSource, ExperimentConfig, PolicyKind, DEFAULT_ALPHA_GRID};
use crate::write_atomic;

/// One (cell, algorithm, step size, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub graph_noise: f64,
    pub payoff_noise: f64,
    pub algorithm: Algorithm,
    /// `None` for the theoretical policy.
    pub alpha: Option<f64>,
    pub seed: u64,
}

impl Job {
    pub fn relative_path(&self) -> PathBuf {
        let alpha = match self.alpha {
            Some(a) => format!("alpha_{a}"),
            None => "theoretical".to_owned(),
        };
        PathBuf::from(format!("gn_{}", self.graph_noise))
            .join(format!("pn_{}", self.payoff_noise))
            .join(self.algorithm.to_string())
            .join(alpha)
            .join(format!("seed_{}.csv", self.seed))
    }
}

#[derive(Debug, Clone)]
pub struct JobResult {
    pub job: Job,
    pub record: RunRecord,
    /// Regret bound under `σ = z` and `σ = z/√3`, for GOB.Lin on cliques.
    pub bounds: Option<(f64, f64)>,
    pub seconds: f64,
}

enum Source {
    Cliques(FourCliques),
    Real(Prepared),
}

/// Largest candidate norm `B` the α grid is scaled by.
fn norm_scale(source: &Source) -> f64 {
    match source {
        Source::Cliques(_) => 1.0,
        Source::Real(p) => p.interactions.features().iter().map(|x| norm(x)).fold(0.0, f64::max),
    }
}

pub fn plan(config: &ExperimentConfig, scale: f64) -> anyhow::Result<Vec<Job>> {
    let alphas: Vec<Option<f64>> = match config.policy.kind {
        PolicyKind::Theoretical => vec![None],
        PolicyKind::Simplified if config.policy.alpha.is_empty() => {
            DEFAULT_ALPHA_GRID.iter().map(|a| Some(a * scale)).collect()
        }
        PolicyKind::Simplified => config.policy.alpha.iter().map(|&a| Some(a)).collect(),
    };
    let mut jobs = Vec::new();
    for &graph_noise in &config.dataset.graph_noise {
        for &payoff_noise in &config.dataset.payoff_noise {
            for algorithm in config.algorithms()? {
                for &alpha in &alphas {
                    for &seed in &config.run.seeds {
                        jobs.push(Job { graph_noise, payoff_noise, algorithm, alpha, seed });
                    }
                }
            }
        }
    }
    Ok(jobs)
}

fn execute(config: &ExperimentConfig, source: &Source, job: &Job) -> anyhow::Result<JobResult> {
    let start = Instant::now();
    let (graph, env, truth): (UserGraph, Box<dyn Environment>, Option<GroundTruth>) = match source {
        Source::Cliques(spec) => {
            let inst = FourCliques { graph_noise: job.graph_noise, payoff_noise: job.payoff_noise, ..*spec }.build(job.seed)?;
            let truth = inst.env.truth.clone();
            (inst.noisy, Box::new(inst.env), Some(truth))
        }
        Source::Real(p) => {
            let (g, _) = inject_graph_noise(&p.graph, job.graph_noise, job.seed)?;
            (g, Box::new(RealEnv::new(p.interactions.clone(), config.set_size())?), None)
        }
    };
    let multitask = truth.as_ref().map(|t| multitask_norm(t, &graph)).transpose()?;
    let policy = match job.alpha {
        Some(alpha) => ConfidencePolicy::simplified(alpha),
        None => ConfidencePolicy::Theoretical {
            sigma: config.policy.sigma.unwrap_or(job.payoff_noise),
            delta: config.policy.delta,
            norm_bound: match (config.policy.norm_bound, multitask) {
                (Some(b), _) => b,
                (None, Some(l)) => l.sqrt(),
                (None, None) => bail!("norm_bound is required without ground truth"),
            },
        },
    };
    let options = RunnerOptions { cluster_seed: config.run.cluster_seed, ..RunnerOptions::default() };
    let mut runner = Runner::with_options(job.algorithm, &graph, env.dim(), policy, options)?;
    let record = run_experiment(env.as_ref(), &mut runner, job.seed, config.run.rounds)?;
    let bounds = match (job.algorithm, multitask) {
        (Algorithm::GobLin, Some(l)) if record.final_logdet() > 0.0 => {
            let pair = regret_bounds_uniform(
                config.run.rounds,
                job.payoff_noise,
                config.policy.delta,
                l,
                record.max_norm,
                record.final_logdet(),
            )?;
            Some((pair.safe, pair.variance_matched))
        }
        _ => None,
    };
    Ok(JobResult { job: job.clone(), record, bounds, seconds: start.elapsed().as_secs_f64() })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn summary_csv(results: &[JobResult]) -> String {
    let mut out = String::from(
        "graph_noise,payoff_noise,algo,alpha,seed,rounds,final_norm_reward,cum_reward,cum_regret,mean_regret,clipped,max_norm,logdet,bound_sigma_z,bound_sigma_z_sqrt3\n",
    );
    for r in results {
        let rec = &r.record;
        let regret = rec.cumulative_regret();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.job.graph_noise,
            r.job.payoff_noise,
            r.job.algorithm,
            opt(r.job.alpha),
            r.job.seed,
            rec.rounds(),
            rec.final_normalized_reward(),
            rec.cumulative_reward().last().copied().unwrap_or(0.0),
            opt(regret),
            opt(regret.map(|s| s / rec.rounds() as f64)),
            rec.clipped,
            rec.max_norm,
            rec.final_logdet(),
            opt(r.bounds.map(|b| b.0)),
            opt(r.bounds.map(|b| b.1)),
        );
    }
    out
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per (cell, algorithm): mean final reward for every α, best one flagged.
pub fn best_csv(results: &[JobResult]) -> String {
    let mut groups: Vec<(&Job, Vec<f64>)> = Vec::new();
    for r in results {
        let same = |j: &Job| {
            j.graph_noise == r.job.graph_noise
                && j.payoff_noise == r.job.payoff_noise
                && j.algorithm == r.job.algorithm
                && j.alpha == r.job.alpha
        };
        match groups.iter_mut().find(|(j, _)| same(j)) {
            Some((_, v)) => v.push(r.record.final_normalized_reward()),
            None => groups.push((&r.job, vec![r.record.final_normalized_reward()])),
        }
    }
    let mut out = String::from("graph_noise,payoff_noise,algo,alpha,seeds,mean_final_norm_reward,stderr,best\n");
    for (j, v) in &groups {
        let (mean, se) = mean_stderr(v);
        let best = groups
            .iter()
            .filter(|(o, _)| o.graph_noise == j.graph_noise && o.payoff_noise == j.payoff_noise && o.algorithm == j.algorithm)
            .map(|(_, w)| mean_stderr(w).0)
            .fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{mean},{se},{}",
            j.graph_noise,
            j.payoff_noise,
            j.algorithm,
            opt(j.alpha),
            v.len(),
            u8::from(mean == best)
        );
    }
    out
}

pub struct RunSummary {
    pub out_dir: PathBuf,
    pub results: Vec<JobResult>,
}

/// Validates, plans and executes every run, then writes per-run CSVs,
/// `summary.csv`, `best.csv`, `timing.csv` and the effective config.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> anyhow::Result<RunSummary> {
    let source = match config.dataset.source {
        DatasetSource::FourCliques => Source::Cliques(FourCliques {
            clique_count: config.dataset.clique_count,
            clique_size: config.dataset.clique_size,
            d: config.dataset.dim,
            set_size: config.set_size(),
            graph_noise: 0.0,
            payoff_noise: 0.0,
        }),
        DatasetSource::Prepared => {
            let dir = config.dataset.path.as_ref().expect("validated");
            Source::Real(read_prepared(dir).with_context(|| format!("loading prepared data from {}", dir.display()))?)
        }
    };
    let jobs = plan(config, norm_scale(&source))?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_atomic(&out_dir.join("config.toml"), config.to_toml().as_bytes())?;

    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.run.jobs).build()?;
    let results: Vec<JobResult> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let r = execute(config, &source, job)
                    .with_context(|| format!("{} seed {}", job.algorithm, job.seed))?;
                let path = out_dir.join(job.relative_path());
                std::fs::create_dir_all(path.parent().expect("run files live in a directory"))?;
                write_atomic(&path, r.record.to_csv().as_bytes())?;
                Ok(r)
            })
            .collect::<anyhow::Result<Vec<_>>>()
    })?;

    write_atomic(&out_dir.join("summary.csv"), summary_csv(&results).as_bytes())?;
    write_atomic(&out_dir.join("best.csv"), best_csv(&results).as_bytes())?;
    let mut timing = String::from("path,seconds\n");
    for r in &results {
        let _ = writeln!(timing, "{},{:.3}", r.job.relative_path().display(), r.seconds);
    }
    write_atomic(&out_dir.join("timing.csv"), timing.as_bytes())?;
    Ok(RunSummary { out_dir: out_dir.to_path_buf(), results })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_scales_default_grid() {
        let c = ExperimentConfig::default();
        let jobs = plan(&c, 2.0).unwrap();
        assert_eq!(jobs.len(), 3 * 6);
        assert_eq!(jobs[0].alpha, Some(0.02));
        assert_eq!(
            jobs[0].relative_path(),
            PathBuf::from("gn_0/pn_0/goblin/alpha_0.02/seed_1.csv")
        );
    }

    #[test]
    fn stderr_of_identical_runs_is_zero() {
        assert_eq!(mean_stderr(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (m, se) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-12);
    }
}
