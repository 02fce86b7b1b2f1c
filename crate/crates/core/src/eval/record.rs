use std::fmt::Write as _;
use std::io::Write;

use crate::bandit::Runner;
use crate::data::Environment;
use crate::error::{Error, Result};
use crate::linalg::norm;

pub const CSV_HEADER: &str = "t,algo,seed,user,chosen,payoff,baseline,regret,cum_reward,cum_norm_reward,logdet";

/// One round of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub t: u64,
    pub user: usize,
    pub chosen: usize,
    pub payoff: f64,
    /// `ā_t`, mean payoff over the round's candidates.
    pub baseline: f64,
    pub regret: Option<f64>,
    pub logdet: f64,
}

/// Per-round log of one (algorithm, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algo: String,
    pub seed: u64,
    pub rows: Vec<Row>,
    /// Payoffs clipped into `[−1, 1]` across all candidates of all rounds.
    pub clipped: usize,
    /// Largest candidate norm seen, the `B` of the regret bound.
    pub max_norm: f64,
}

impl RunRecord {
    pub fn new(algo: impl Into<String>, seed: u64) -> Self {
        Self { algo: algo.into(), seed, rows: Vec::new(), clipped: 0, max_norm: 0.0 }
    }

    pub fn push(&mut self, row: Row) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.t <= last.t {
                return Err(Error::invalid(format!("round {} does not follow round {}", row.t, last.t)));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rounds(&self) -> usize {
        self.rows.len()
    }

    pub fn cumulative_reward(&self) -> Vec<f64> {
        prefix_sums(self.rows.iter().map(|r| r.payoff))
    }

    /// `Σ_{s ≤ t} (a_s − ā_s)`.
    pub fn normalized_cumreward(&self) -> Vec<f64> {
        normalized_cumreward(&self.rows)
    }

    pub fn final_normalized_reward(&self) -> f64 {
        self.normalized_cumreward().last().copied().unwrap_or(0.0)
    }

    /// `Σ r_t`, when ground truth was known.
    pub fn cumulative_regret(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.regret).sum()
    }

    pub fn final_logdet(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.logdet)
    }

    /// The results CSV: LF line endings, shortest round-trip float formatting,
    /// empty `regret` when unknown.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        let mut cum = 0.0;
        let mut cum_norm = 0.0;
        for r in &self.rows {
            cum += r.payoff;
            cum_norm += r.payoff - r.baseline;
            let regret = r.regret.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.t, self.algo, self.seed, r.user, r.chosen, r.payoff, r.baseline, regret, cum, cum_norm, r.logdet
            );
        }
        out
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_csv().as_bytes()).map_err(|e| Error::Snapshot(e.to_string()))
    }
}

fn prefix_sums(xs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    xs.map(|x| {
        acc += x;
        acc
    })
    .collect()
}

/// Prefix sums of `a_t − ā_t`.
pub fn normalized_cumreward(rows: &[Row]) -> Vec<f64> {
    prefix_sums(rows.iter().map(|r| r.payoff - r.baseline))
}

/// Runs `rounds` rounds of `env` under `seed` with `runner`.
pub fn run_experiment<E: Environment + ?Sized>(env: &E, runner: &mut Runner, seed: u64, rounds: u64) -> Result<RunRecord> {
    if runner.n() != env.users() || runner.d() != env.dim() {
        return Err(Error::invalid(format!(
            "runner serves {} users in {} dimensions, environment has {} and {}",
            runner.n(),
            runner.d(),
            env.users(),
            env.dim()
        )));
    }
    let mut rec = RunRecord::new(runner.algorithm().to_string(), seed);
    for t in 1..=rounds {
        let event = env.event(seed, t);
        for x in &event.candidates {
            rec.max_norm = rec.max_norm.max(norm(x));
        }
        let chosen = runner.select(event.user, &event.candidates, t)?;
        let fb = env.feedback(seed, &event);
        rec.clipped += fb.clipped;
        let payoff = fb.payoffs[chosen];
        runner.update(event.user, &event.candidates[chosen], payoff)?;
        rec.push(Row {
            t,
            user: event.user,
            chosen,
            payoff,
            baseline: fb.baseline(),
            regret: fb.regret(chosen),
            logdet: runner.logdet(),
        })?;
    }
    Ok(rec)
}

/// Same environment, but the choice is uniformly random; used to check that
/// the normalized reward of a random policy is centred at zero.
pub fn run_random_policy<E: Environment + ?Sized>(env: &E, seed: u64, rounds: u64) -> Result<RunRecord> {
    use rand::Rng;
    let mut rec = RunRecord::new("random", seed);
    for t in 1..=rounds {
        let event = env.event(seed, t);
        let mut rng = crate::rng::stream(seed, t, crate::rng::Purpose::User);
        let chosen = rng.gen_range(0..event.candidates.len());
        let fb = env.feedback(seed, &event);
        rec.clipped += fb.clipped;
        rec.push(Row {
            t,
            user: event.user,
            chosen,
            payoff: fb.payoffs[chosen],
            baseline: fb.baseline(),
            regret: fb.regret(chosen),
            logdet: 0.0,
        })?;
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: u64, payoff: f64, baseline: f64) -> Row {
        Row { t, user: 0, chosen: 0, payoff, baseline, regret: None, logdet: 0.0 }
    }

    #[test]
    fn normalized_reward_examples() {
        let rows = [row(1, 1.0, 1.0 / 25.0)];
        assert!((normalized_cumreward(&rows)[0] - 0.96).abs() < 1e-15);
        let flat = [row(1, 0.3, 0.3), row(2, -0.2, -0.2)];
        assert_eq!(normalized_cumreward(&flat), vec![0.0, 0.0]);
    }

    #[test]
    fn csv_layout() {
        let mut rec = RunRecord::new("goblin", 7);
        rec.push(Row { t: 1, user: 3, chosen: 2, payoff: 1.0, baseline: 0.25, regret: Some(0.5), logdet: 0.1 }).unwrap();
        rec.push(row(2, 0.0, 0.5)).unwrap();
        assert!(rec.push(row(2, 0.0, 0.0)).is_err());
        let csv = rec.to_csv();
        let lines: Vec<&str> = csv.split('\n').collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "1,goblin,7,3,2,1,0.25,0.5,1,0.75,0.1");
        assert_eq!(lines[2], "2,goblin,7,0,0,0,0.5,,1,0.25,0");
        assert_eq!(lines[3], "");
        assert!(!csv.contains('\r'));
    }
}
