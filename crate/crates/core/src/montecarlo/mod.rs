//! Reproducible Monte Carlo over protocol trials.
//!
//! Trial `i` draws from a ChaCha8 stream keyed by `(seed, i)`, so a trial's
//! randomness does not depend on which worker runs it or in what order.
//! Results are folded into integer counters, which makes the aggregate
//! identical for any degree of parallelism.

mod oracle;
mod stats;

pub use oracle::{
    binomial_outside_window, exact_forge_passive, exact_honest_abort, exact_honest_abort_either,
    exact_split_decision, ln_binomial_pmf, log_sum_exp, FORGE_ORACLE_MAX_LENGTH,
    HONEST_ORACLE_MAX_LENGTH,
};
pub use stats::{hoeffding_bound, hoeffding_two_sided, wilson_interval, Estimate, Z_95};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::adversaries::{
    forge_active_trial, forge_passive_trial, repudiation_trial_abstract, repudiation_trial_physical,
    ActiveResponsePolicy, PhysicalRepudiationStrategy, RepudiationMarginals,
};
use crate::error::{QdsError, Result};
use crate::protocol::{run_honest_trial, ProtocolParams, TrialVerdict};

/// Which party misbehaves, and how.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scenario {
    Honest,
    RepudiateAbstract(RepudiationMarginals),
    RepudiatePhysical(PhysicalRepudiationStrategy),
    ForgePassive,
    ForgeActive(ActiveResponsePolicy),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Honest => "honest",
            Scenario::RepudiateAbstract(_) => "repudiate-abstract",
            Scenario::RepudiatePhysical(_) => "repudiate-physical",
            Scenario::ForgePassive => "forge-passive",
            Scenario::ForgeActive(_) => "forge-active",
        }
    }

    pub fn run_trial(&self, params: &ProtocolParams, rng: &mut ChaCha8Rng) -> Result<TrialVerdict> {
        match self {
            Scenario::Honest => run_honest_trial(params, rng),
            Scenario::RepudiateAbstract(m) => repudiation_trial_abstract(params, m, rng),
            Scenario::RepudiatePhysical(s) => repudiation_trial_physical(params, s, rng),
            Scenario::ForgePassive => forge_passive_trial(params, rng),
            Scenario::ForgeActive(p) => forge_active_trial(params, p, rng),
        }
    }
}

/// Random source for trial `index` under master `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Integer event counts summed over trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Tally {
    pub trials: u64,
    pub any_abort: u64,
    pub bob_abort: u64,
    pub charlie_abort: u64,
    pub bob_authenticated: u64,
    pub charlie_verified: u64,
    pub repudiation: u64,
    pub split_decision: u64,
    pub forge: u64,
    pub trials_with_mismatch: u64,
    pub trials_with_null_click: u64,
    pub bob_unambiguous: u64,
    pub charlie_unambiguous: u64,
    pub bob_mismatches: u64,
    pub charlie_mismatches: u64,
    pub bob_null_clicks: u64,
    pub charlie_null_clicks: u64,
    pub guess_errors: u64,
}

impl Tally {
    pub fn record(v: &TrialVerdict) -> Tally {
        let t = &v.tallies;
        Tally {
            trials: 1,
            any_abort: u64::from(v.any_abort()),
            bob_abort: u64::from(v.bob_abort.is_some()),
            charlie_abort: u64::from(v.charlie_abort.is_some()),
            bob_authenticated: u64::from(v.bob_authenticated),
            charlie_verified: u64::from(v.charlie_verified),
            repudiation: u64::from(v.repudiation_success()),
            split_decision: u64::from(v.split_decision()),
            forge: u64::from(v.forge_success()),
            trials_with_mismatch: u64::from(t.bob_mismatches + t.charlie_mismatches > 0),
            trials_with_null_click: u64::from(t.bob_null_clicks + t.charlie_null_clicks > 0),
            bob_unambiguous: t.bob_unambiguous,
            charlie_unambiguous: t.charlie_unambiguous,
            bob_mismatches: t.bob_mismatches,
            charlie_mismatches: t.charlie_mismatches,
            bob_null_clicks: t.bob_null_clicks,
            charlie_null_clicks: t.charlie_null_clicks,
            guess_errors: t.guess_errors,
        }
    }

    pub fn merge(self, o: Tally) -> Tally {
        Tally {
            trials: self.trials + o.trials,
            any_abort: self.any_abort + o.any_abort,
            bob_abort: self.bob_abort + o.bob_abort,
            charlie_abort: self.charlie_abort + o.charlie_abort,
            bob_authenticated: self.bob_authenticated + o.bob_authenticated,
            charlie_verified: self.charlie_verified + o.charlie_verified,
            repudiation: self.repudiation + o.repudiation,
            split_decision: self.split_decision + o.split_decision,
            forge: self.forge + o.forge,
            trials_with_mismatch: self.trials_with_mismatch + o.trials_with_mismatch,
            trials_with_null_click: self.trials_with_null_click + o.trials_with_null_click,
            bob_unambiguous: self.bob_unambiguous + o.bob_unambiguous,
            charlie_unambiguous: self.charlie_unambiguous + o.charlie_unambiguous,
            bob_mismatches: self.bob_mismatches + o.bob_mismatches,
            charlie_mismatches: self.charlie_mismatches + o.charlie_mismatches,
            bob_null_clicks: self.bob_null_clicks + o.bob_null_clicks,
            charlie_null_clicks: self.charlie_null_clicks + o.charlie_null_clicks,
            guess_errors: self.guess_errors + o.guess_errors,
        }
    }
}

/// Per-element averages over all simulated elements (`trials · L`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElementFractions {
    pub bob_unambiguous: f64,
    pub charlie_unambiguous: f64,
    pub bob_mismatch: f64,
    pub charlie_mismatch: f64,
    pub bob_null_click: f64,
    pub charlie_null_click: f64,
    pub guess_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub scenario: &'static str,
    pub seed: u64,
    /// Either recipient aborted.
    pub honest_abort: Estimate,
    pub repudiation: Estimate,
    /// Bob authenticated and Charlie rejected, aborts ignored.
    pub split_decision: Estimate,
    pub forge: Estimate,
    pub fractions: ElementFractions,
    pub counts: Tally,
}

impl ExperimentReport {
    fn from_tally(scenario: &Scenario, seed: u64, t: Tally, length: usize) -> Result<Self> {
        let elements = (t.trials * length as u64) as f64;
        let frac = |x: u64| x as f64 / elements;
        Ok(ExperimentReport {
            scenario: scenario.name(),
            seed,
            honest_abort: Estimate::new(t.any_abort, t.trials)?,
            repudiation: Estimate::new(t.repudiation, t.trials)?,
            split_decision: Estimate::new(t.split_decision, t.trials)?,
            forge: Estimate::new(t.forge, t.trials)?,
            fractions: ElementFractions {
                bob_unambiguous: frac(t.bob_unambiguous),
                charlie_unambiguous: frac(t.charlie_unambiguous),
                bob_mismatch: frac(t.bob_mismatches),
                charlie_mismatch: frac(t.charlie_mismatches),
                bob_null_click: frac(t.bob_null_clicks),
                charlie_null_click: frac(t.charlie_null_clicks),
                guess_error: frac(t.guess_errors),
            },
            counts: t,
        })
    }

    /// Named estimates in a fixed order.
    pub fn estimates(&self) -> [(&'static str, &Estimate); 4] {
        [
            ("honest_abort", &self.honest_abort),
            ("repudiation", &self.repudiation),
            ("split_decision", &self.split_decision),
            ("forge", &self.forge),
        ]
    }
}

/// Runs `n_trials` trials on the global rayon pool.
pub fn run_experiment(
    scenario: &Scenario,
    params: &ProtocolParams,
    n_trials: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    run_experiment_with_workers(scenario, params, n_trials, seed, 0)
}

/// As [`run_experiment`] on a dedicated pool of `workers` threads (0 = rayon default).
pub fn run_experiment_with_workers(
    scenario: &Scenario,
    params: &ProtocolParams,
    n_trials: u64,
    seed: u64,
    workers: usize,
) -> Result<ExperimentReport> {
    if n_trials == 0 {
        return Err(QdsError::param("trials", "must be at least 1"));
    }
    params.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| QdsError::Runtime(format!("cannot start worker pool: {e}")))?;
    let tally = pool.install(|| {
        (0..n_trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(seed, i);
                scenario.run_trial(params, &mut rng).map(|v| Tally::record(&v))
            })
            .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))
    })?;
    ExperimentReport::from_tally(scenario, seed, tally, params.length)
}
