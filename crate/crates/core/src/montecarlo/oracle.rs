//! Exact probabilities for the simulated scenarios, summed in log space.
//!
//! These share no code with the trial runners: they work from the closed-form
//! per-element probabilities and binomial laws, so agreement between the two
//! is a genuine cross-check.

use statrs::function::factorial::ln_binomial;

use crate::error::{QdsError, Result};
use crate::protocol::{ProtocolParams, Role};

pub const HONEST_ORACLE_MAX_LENGTH: usize = 100_000;
pub const FORGE_ORACLE_MAX_LENGTH: usize = 10_000;

/// `ln P(Bin(n, p) = k)`.
pub fn ln_binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if p <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()
}

/// `ln Σ exp(terms)`.
pub fn log_sum_exp(terms: impl IntoIterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.into_iter().collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `ln P(K ∈ S)` for `K ~ Bin(n, p)` and the counts `S` selected by `keep`.
fn ln_binomial_mass(n: u64, p: f64, keep: impl Fn(u64) -> bool) -> f64 {
    log_sum_exp((0..=n).filter(|&k| keep(k)).map(|k| ln_binomial_pmf(n, k, p)))
}

/// `P(K < lo) + P(K > hi)` for `K ~ Bin(n, p)`, comparing counts as reals.
pub fn binomial_outside_window(n: u64, p: f64, lo: f64, hi: f64) -> f64 {
    ln_binomial_mass(n, p, |k| (k as f64) < lo || (k as f64) > hi).exp()
}

fn check_length(params: &ProtocolParams, limit: usize) -> Result<()> {
    params.validate()?;
    if params.length > limit {
        return Err(QdsError::OracleTooLarge {
            length: params.length,
            limit,
        });
    }
    Ok(())
}

/// Probability that one honest recipient aborts: its conclusive count
/// `K ~ Bin(L, p_usd)` falls outside the accepted window.
pub fn exact_honest_abort(params: &ProtocolParams) -> Result<f64> {
    check_length(params, HONEST_ORACLE_MAX_LENGTH)?;
    let (lo, hi) = params.unambiguous_window();
    Ok(binomial_outside_window(params.length as u64, params.p_usd(), lo, hi))
}

/// Probability that at least one of two independent honest recipients aborts.
pub fn exact_honest_abort_either(params: &ProtocolParams) -> Result<f64> {
    let single = exact_honest_abort(params)?;
    Ok(single * (2.0 - single))
}

/// Probability that Charlie verifies a minimum-error forgery and does not abort.
///
/// Per element Charlie is conclusive with probability `p_usd` and Bob's guess
/// is wrong with probability `p_min`, independently. Conditional on `K`
/// conclusive elements the mismatch count is `Bin(K, p_min)`.
pub fn exact_forge_passive(params: &ProtocolParams) -> Result<f64> {
    check_length(params, FORGE_ORACLE_MAX_LENGTH)?;
    let rates = params.rates();
    let n = params.length as u64;
    let (lo, hi) = params.unambiguous_window();
    let threshold = params.mismatch_threshold(Role::Verifier);
    let terms = (0..=n)
        .filter(|&k| (k as f64) >= lo && (k as f64) <= hi)
        .map(|k| {
            let verify = ln_binomial_mass(k, rates.p_min, |m| (m as f64) < threshold);
            ln_binomial_pmf(n, k, rates.p_usd) + verify
        });
    Ok(log_sum_exp(terms).exp())
}

/// `P(Bob authenticates) · P(Charlie rejects)` when each recipient's mismatch
/// count is an independent `Bin(L, p_mismatch)`, ignoring aborts.
pub fn exact_split_decision(params: &ProtocolParams, p_mismatch: f64) -> Result<f64> {
    check_length(params, HONEST_ORACLE_MAX_LENGTH)?;
    if !(0.0..=1.0).contains(&p_mismatch) {
        return Err(QdsError::param("p_mismatch", format!("must lie in [0, 1], got {p_mismatch}")));
    }
    let n = params.length as u64;
    let auth = params.mismatch_threshold(Role::Authenticator);
    let verify = params.mismatch_threshold(Role::Verifier);
    let ln_ba = ln_binomial_mass(n, p_mismatch, |m| (m as f64) <= auth);
    let ln_cr = ln_binomial_mass(n, p_mismatch, |m| (m as f64) >= verify);
    Ok((ln_ba + ln_cr).exp())
}
