//! Attack strategies: a repudiating sender and a forging recipient.
//!
//! Repudiation is modelled two ways. The abstract model hands Alice direct
//! control of the per-element outcome marginals seen by both recipients (the
//! multiport forces them to be equal). The physical model lets her send
//! arbitrary coherent states to Bob and Charlie and runs them through the
//! multiport.
//!
//! Forging is played by Bob. Passively he only guesses Alice's signs with a
//! minimum-error measurement on his copy. Actively he also replaces the half
//! of his state that Charlie mixes on his final splitter with a coherent
//! "response" of his choice, which Charlie's null port may catch.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QdsError, Result};
use crate::optics::{beam_splitter, guess_with_error, helstrom_error, ComplexAmplitude, Sign, UsdOutcome};
use crate::protocol::{
    abort_check, accepts, assemble_verdict, count_mismatches, Declaration, ElementChannel,
    ProtocolParams, RecipientRecord, Role, TrialTallies, TrialVerdict,
};

const SIMPLEX_TOL: f64 = 1e-12;

/// Per-element probabilities that a recipient's outcome matches, contradicts,
/// or is ambiguous with respect to the sender's declaration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepudiationMarginals {
    pub p_match: f64,
    pub p_mismatch: f64,
    pub p_ambiguous: f64,
}

impl RepudiationMarginals {
    pub fn new(p_match: f64, p_mismatch: f64, p_ambiguous: f64) -> Result<Self> {
        for (name, p) in [("p_match", p_match), ("p_mismatch", p_mismatch), ("p_ambiguous", p_ambiguous)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(QdsError::param(name, format!("must lie in [0, 1], got {p}")));
            }
        }
        let total = p_match + p_mismatch + p_ambiguous;
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(QdsError::param("marginals", format!("must sum to 1, got {total}")));
        }
        Ok(RepudiationMarginals {
            p_match,
            p_mismatch,
            p_ambiguous,
        })
    }

    /// Marginals with the given mismatch rate and an honest conclusive rate
    /// `p_usd`. If `p_mismatch > p_usd` the ambiguous mass shrinks instead.
    pub fn with_mismatch(params: &ProtocolParams, p_mismatch: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_mismatch) {
            return Err(QdsError::param("p_mismatch", format!("must lie in [0, 1], got {p_mismatch}")));
        }
        let p_usd = params.p_usd();
        let p_match = (p_usd - p_mismatch).max(0.0);
        let p_ambiguous = (1.0 - p_mismatch - p_match).max(0.0);
        Self::new(p_match, p_mismatch, p_ambiguous)
    }

    /// Alice's best individual strategy against the Hoeffding bound.
    pub fn optimal(params: &ProtocolParams) -> Result<Self> {
        Self::with_mismatch(params, optimal_repudiation_marginal(params))
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> UsdOutcome {
        let u = rng.random::<f64>();
        if u < self.p_match {
            UsdOutcome::PlusAlpha
        } else if u < self.p_match + self.p_mismatch {
            UsdOutcome::MinusAlpha
        } else {
            UsdOutcome::Ambiguous
        }
    }
}

/// Coherent states a dishonest sender feeds into Bob's and Charlie's multiport
/// inputs, identical for every element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalRepudiationStrategy {
    pub amp_to_bob: ComplexAmplitude,
    pub amp_to_charlie: ComplexAmplitude,
}

impl PhysicalRepudiationStrategy {
    pub fn honest(alpha: f64) -> Self {
        PhysicalRepudiationStrategy {
            amp_to_bob: ComplexAmplitude::real(alpha),
            amp_to_charlie: ComplexAmplitude::real(alpha),
        }
    }
}

/// Coherent response Bob substitutes for the half-state Charlie mixes last.
///
/// The response has magnitude `scale·α/√2` and carries either the true sign
/// (`align_to_guess = false`) or Bob's guessed sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveResponsePolicy {
    pub scale: f64,
    pub align_to_guess: bool,
}

impl ActiveResponsePolicy {
    pub fn new(scale: f64, align_to_guess: bool) -> Result<Self> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(QdsError::param("scale", format!("must be finite and non-negative, got {scale}")));
        }
        Ok(ActiveResponsePolicy { scale, align_to_guess })
    }

    /// Forward the state unchanged.
    pub fn honest() -> Self {
        ActiveResponsePolicy {
            scale: 1.0,
            align_to_guess: false,
        }
    }
}

/// `p_usd·(s_v + s_a)/2`, the mismatch rate that balances Bob's and Charlie's tails.
pub fn optimal_repudiation_marginal(params: &ProtocolParams) -> f64 {
    params.p_usd() * (params.s_v + params.s_a) / 2.0
}

/// Repudiation with Alice choosing the outcome marginals directly. Bob and
/// Charlie are sampled independently from the same marginals; the declaration
/// is all `+1` and null ports never fire.
pub fn repudiation_trial_abstract<R: Rng + ?Sized>(
    params: &ProtocolParams,
    marg: &RepudiationMarginals,
    rng: &mut R,
) -> Result<TrialVerdict> {
    let mut bob = RecipientRecord::with_capacity(params.length);
    let mut charlie = RecipientRecord::with_capacity(params.length);
    for _ in 0..params.length {
        bob.push(marg.sample(rng), false);
        charlie.push(marg.sample(rng), false);
    }
    assemble_verdict(&bob, &charlie, &Declaration::all_plus(false, params.length), params)
}

/// Repudiation with coherent states sent through the multiport.
pub fn repudiation_trial_physical<R: Rng + ?Sized>(
    params: &ProtocolParams,
    strat: &PhysicalRepudiationStrategy,
    rng: &mut R,
) -> Result<TrialVerdict> {
    let channel = ElementChannel::through_multiport(strat.amp_to_bob, strat.amp_to_charlie, params.alpha)?;
    let mut bob = RecipientRecord::with_capacity(params.length);
    let mut charlie = RecipientRecord::with_capacity(params.length);
    for _ in 0..params.length {
        let (o, n) = channel.sample(rng);
        bob.push(o, n);
        let (o, n) = channel.sample(rng);
        charlie.push(o, n);
    }
    assemble_verdict(&bob, &charlie, &Declaration::all_plus(false, params.length), params)
}

fn forged_verdict(
    charlie: &RecipientRecord,
    forged: &Declaration,
    params: &ProtocolParams,
    guess_errors: u64,
) -> Result<TrialVerdict> {
    let mismatches = count_mismatches(charlie, forged)?;
    Ok(TrialVerdict {
        // Bob never aborts or rejects when he is the forger.
        bob_authenticated: true,
        charlie_verified: accepts(mismatches, params, Role::Verifier),
        bob_abort: None,
        charlie_abort: abort_check(charlie, params),
        tallies: TrialTallies {
            charlie_unambiguous: charlie.unambiguous_count() as u64,
            charlie_mismatches: mismatches as u64,
            charlie_null_clicks: charlie.null_count() as u64,
            guess_errors,
            ..TrialTallies::default()
        },
    })
}

/// Honest distribution, then Bob declares his minimum-error guesses of the signs.
pub fn forge_passive_trial<R: Rng + ?Sized>(params: &ProtocolParams, rng: &mut R) -> Result<TrialVerdict> {
    let alpha = params.alpha;
    let p_err = helstrom_error(alpha)?;
    let channel = |s: Sign| ElementChannel::through_multiport(s.amplitude(alpha), s.amplitude(alpha), alpha);
    let plus = channel(Sign::Plus)?;
    let minus = channel(Sign::Minus)?;

    let mut charlie = RecipientRecord::with_capacity(params.length);
    let mut forged = Declaration::all_plus(rng.random(), params.length);
    let mut guess_errors = 0;
    for slot in forged.signs.iter_mut() {
        let sign = Sign::random(rng);
        let ch = if sign == Sign::Plus { &plus } else { &minus };
        let (o, n) = ch.sample(rng);
        charlie.push(o, n);
        *slot = guess_with_error(sign, p_err, rng);
        guess_errors += u64::from(*slot != sign);
    }
    forged_verdict(&charlie, &forged, params, guess_errors)
}

/// Bob guesses with the full `√(3/2)·α` available to him and injects a
/// coherent response into Charlie's last splitter.
///
/// Charlie keeps `b·α/√2` and mixes it with Bob's response `β`, producing the
/// signal `b·α/2 + β/√2` and the null mode `b·α/2 − β/√2`.
pub fn forge_active_trial<R: Rng + ?Sized>(
    params: &ProtocolParams,
    policy: &ActiveResponsePolicy,
    rng: &mut R,
) -> Result<TrialVerdict> {
    let alpha = params.alpha;
    let p_err = helstrom_error(1.5f64.sqrt() * alpha)?;
    let magnitude = policy.scale * alpha * FRAC_1_SQRT_2;
    // indexed by [true sign is minus][response sign differs from true sign]
    let mut channels = [[None; 2]; 2];
    for (i, sign) in [Sign::Plus, Sign::Minus].into_iter().enumerate() {
        for (j, response_sign) in [sign, sign.flipped()].into_iter().enumerate() {
            let kept = sign.amplitude(alpha) * FRAC_1_SQRT_2;
            let response = response_sign.amplitude(magnitude);
            let (signal, null) = beam_splitter(kept, response);
            channels[i][j] = Some(ElementChannel::new(signal, null, alpha)?);
        }
    }

    let mut charlie = RecipientRecord::with_capacity(params.length);
    let mut forged = Declaration::all_plus(rng.random(), params.length);
    let mut guess_errors = 0;
    for slot in forged.signs.iter_mut() {
        let sign = Sign::random(rng);
        let guess = guess_with_error(sign, p_err, rng);
        let wrong = guess != sign;
        let steered = policy.align_to_guess && wrong;
        let ch = channels[usize::from(sign == Sign::Minus)][usize::from(steered)]
            .as_ref()
            .expect("all channels initialised");
        let (o, n) = ch.sample(rng);
        charlie.push(o, n);
        *slot = guess;
        guess_errors += u64::from(wrong);
    }
    forged_verdict(&charlie, &forged, params, guess_errors)
}
