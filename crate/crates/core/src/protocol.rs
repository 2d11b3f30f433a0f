//! Honest-party state machines: key generation, the distribution stage through
//! the multiport, and the messaging-stage abort and acceptance rules.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QdsError, Result};
use crate::optics::{
    click_probability, helstrom_error, multiport, usd_distribution, usd_success_probability,
    ComplexAmplitude, OutcomeDistribution, Sign, UsdOutcome,
};

/// Tunable protocol parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Coherent amplitude of each signature element.
    pub alpha: f64,
    /// Signature length `L`.
    pub length: usize,
    /// Authentication threshold, as a fraction of `p_usd·L`.
    pub s_a: f64,
    /// Verification threshold, as a fraction of `p_usd·L`.
    pub s_v: f64,
    /// Half-width of the accepted unambiguous-count window, as a fraction of `L`.
    pub delta: f64,
    /// Null-port abort fraction.
    pub r: f64,
    /// Slack on the null-port estimate used by the active-forging bound.
    pub epsilon: f64,
}

impl ProtocolParams {
    pub fn new(
        alpha: f64,
        length: usize,
        s_a: f64,
        s_v: f64,
        delta: f64,
        r: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let params = ProtocolParams {
            alpha,
            length,
            s_a,
            s_v,
            delta,
            r,
            epsilon,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("alpha", self.alpha),
            ("s_a", self.s_a),
            ("s_v", self.s_v),
            ("delta", self.delta),
            ("r", self.r),
            ("epsilon", self.epsilon),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(QdsError::param(name, format!("must be finite, got {value}")));
            }
        }
        if self.alpha <= 0.0 {
            return Err(QdsError::param("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if self.length == 0 {
            return Err(QdsError::param("length", "signature length must be at least 1"));
        }
        if self.s_a < 0.0 {
            return Err(QdsError::param("s_a", format!("must be non-negative, got {}", self.s_a)));
        }
        if self.s_v >= 1.0 {
            return Err(QdsError::param("s_v", format!("must be below 1, got {}", self.s_v)));
        }
        if self.s_v <= self.s_a {
            return Err(QdsError::param(
                "s_v",
                format!("s_v > s_a is required, got s_v = {} and s_a = {}", self.s_v, self.s_a),
            ));
        }
        let p_usd = self.p_usd();
        if !(self.delta > 0.0 && self.delta < p_usd) {
            return Err(QdsError::param(
                "delta",
                format!("0 < delta < p_usd = {p_usd} is required, got {}", self.delta),
            ));
        }
        if !(0.0..1.0).contains(&self.r) {
            return Err(QdsError::param("r", format!("must lie in [0, 1), got {}", self.r)));
        }
        if self.epsilon <= 0.0 {
            return Err(QdsError::param(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        Ok(())
    }

    pub fn p_usd(&self) -> f64 {
        usd_success_probability(self.alpha)
    }

    pub fn rates(&self) -> DerivedRates {
        DerivedRates::for_alpha(self.alpha)
    }

    /// Inclusive bounds `[(p_usd−δ)L, (p_usd+δ)L]` on the unambiguous count.
    pub fn unambiguous_window(&self) -> (f64, f64) {
        let p = self.p_usd();
        let l = self.length as f64;
        ((p - self.delta) * l, (p + self.delta) * l)
    }

    /// Largest null-click count that does not trigger an abort is `≤ r·L`.
    pub fn null_threshold(&self) -> f64 {
        self.r * self.length as f64
    }

    pub fn mismatch_threshold(&self, role: Role) -> f64 {
        let s = match role {
            Role::Authenticator => self.s_a,
            Role::Verifier => self.s_v,
        };
        s * self.p_usd() * self.length as f64
    }
}

/// Probabilities induced by the amplitude `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    pub p_usd: f64,
    pub p_min: f64,
    pub p_min_prime: f64,
}

impl DerivedRates {
    /// Closed forms for `α ≥ 0`; callers validate `α > 0`.
    pub fn for_alpha(alpha: f64) -> Self {
        DerivedRates {
            p_usd: usd_success_probability(alpha),
            p_min: helstrom_error(alpha).unwrap_or(f64::NAN),
            p_min_prime: helstrom_error(1.5f64.sqrt() * alpha).unwrap_or(f64::NAN),
        }
    }
}

/// A message bit with its private sign sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivateKey {
    pub message: bool,
    pub signs: Vec<Sign>,
}

/// A declared message and sign sequence, checked against a recipient's measurements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declaration {
    pub message: bool,
    pub signs: Vec<Sign>,
}

impl From<&PrivateKey> for Declaration {
    fn from(key: &PrivateKey) -> Self {
        Declaration {
            message: key.message,
            signs: key.signs.clone(),
        }
    }
}

impl Declaration {
    pub fn all_plus(message: bool, length: usize) -> Self {
        Declaration {
            message,
            signs: vec![Sign::Plus; length],
        }
    }
}

/// One recipient's stored USD outcomes and null-port clicks.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RecipientRecord {
    pub outcomes: Vec<UsdOutcome>,
    pub null_clicked: Vec<bool>,
}

impl RecipientRecord {
    pub fn with_capacity(length: usize) -> Self {
        RecipientRecord {
            outcomes: Vec::with_capacity(length),
            null_clicked: Vec::with_capacity(length),
        }
    }

    pub fn push(&mut self, outcome: UsdOutcome, null_click: bool) {
        self.outcomes.push(outcome);
        self.null_clicked.push(null_click);
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Conclusive outcomes only; conflicts are not valid USD results.
    pub fn unambiguous_count(&self) -> usize {
        self.outcomes.iter().filter(|o| o.sign().is_some()).count()
    }

    pub fn null_count(&self) -> usize {
        self.null_clicked.iter().filter(|&&c| c).count()
    }

    pub fn conflict_count(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|&&o| o == UsdOutcome::Conflict)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AbortReason {
    UnambiguousWindow,
    NullPortThreshold,
}

/// Which acceptance rule a recipient applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    /// Message received directly from the sender; non-strict threshold `s_a`.
    Authenticator,
    /// Message forwarded by another recipient; strict threshold `s_v`.
    Verifier,
}

/// Raw per-trial counts, aggregated by the Monte Carlo driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialTallies {
    pub bob_unambiguous: u64,
    pub charlie_unambiguous: u64,
    pub bob_mismatches: u64,
    pub charlie_mismatches: u64,
    pub bob_null_clicks: u64,
    pub charlie_null_clicks: u64,
    /// Wrong guesses made by a forging Bob.
    pub guess_errors: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialVerdict {
    pub bob_authenticated: bool,
    pub charlie_verified: bool,
    pub bob_abort: Option<AbortReason>,
    pub charlie_abort: Option<AbortReason>,
    pub tallies: TrialTallies,
}

impl TrialVerdict {
    pub fn any_abort(&self) -> bool {
        self.bob_abort.is_some() || self.charlie_abort.is_some()
    }

    /// Bob accepts, Charlie rejects, nobody aborts.
    pub fn repudiation_success(&self) -> bool {
        self.bob_authenticated && !self.charlie_verified && !self.any_abort()
    }

    /// Bob accepts and Charlie rejects, regardless of aborts.
    pub fn split_decision(&self) -> bool {
        self.bob_authenticated && !self.charlie_verified
    }

    /// Charlie verifies a forged declaration and does not abort.
    pub fn forge_success(&self) -> bool {
        self.charlie_verified && self.charlie_abort.is_none()
    }
}

pub(crate) fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    p > 0.0 && rng.random::<f64>() < p
}

/// Outcome law for one signature element as seen by a recipient.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ElementChannel {
    pub usd: OutcomeDistribution,
    pub null_click: f64,
}

impl ElementChannel {
    pub fn new(signal: ComplexAmplitude, null: ComplexAmplitude, alpha: f64) -> Result<Self> {
        Ok(ElementChannel {
            usd: usd_distribution(signal, alpha)?,
            null_click: click_probability(null),
        })
    }

    /// Channel for a multiport fed with `(in_b, in_c)`; Bob and Charlie see the same law.
    pub fn through_multiport(in_b: ComplexAmplitude, in_c: ComplexAmplitude, alpha: f64) -> Result<Self> {
        let quad = multiport(in_b, in_c);
        debug_assert_eq!(quad.b_signal, quad.c_signal);
        Self::new(quad.b_signal, quad.b_null, alpha)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (UsdOutcome, bool) {
        let outcome = self.usd.sample(rng);
        (outcome, bernoulli(self.null_click, rng))
    }
}

pub fn generate_keys<R: Rng + ?Sized>(params: &ProtocolParams, rng: &mut R) -> (PrivateKey, PrivateKey) {
    let mut key = |message| PrivateKey {
        message,
        signs: (0..params.length).map(|_| Sign::random(rng)).collect(),
    };
    let k0 = key(false);
    let k1 = key(true);
    (k0, k1)
}

/// Honest distribution of one signature: Alice sends `|b_l·α⟩` to both
/// recipients, who pass them through the multiport and measure.
pub fn run_distribution_honest<R: Rng + ?Sized>(
    key: &PrivateKey,
    params: &ProtocolParams,
    rng: &mut R,
) -> Result<(RecipientRecord, RecipientRecord)> {
    let alpha = params.alpha;
    let channel = |s: Sign| ElementChannel::through_multiport(s.amplitude(alpha), s.amplitude(alpha), alpha);
    let plus = channel(Sign::Plus)?;
    let minus = channel(Sign::Minus)?;

    let mut bob = RecipientRecord::with_capacity(params.length);
    let mut charlie = RecipientRecord::with_capacity(params.length);
    for &sign in &key.signs {
        let ch = match sign {
            Sign::Plus => &plus,
            Sign::Minus => &minus,
        };
        let (o, n) = ch.sample(rng);
        bob.push(o, n);
        let (o, n) = ch.sample(rng);
        charlie.push(o, n);
    }
    Ok((bob, charlie))
}

/// Abort decision for one recipient; the null-port check runs first.
pub fn abort_check(record: &RecipientRecord, params: &ProtocolParams) -> Option<AbortReason> {
    if record.null_count() as f64 > params.null_threshold() {
        return Some(AbortReason::NullPortThreshold);
    }
    let (lo, hi) = params.unambiguous_window();
    let k = record.unambiguous_count() as f64;
    if k < lo || k > hi {
        return Some(AbortReason::UnambiguousWindow);
    }
    None
}

/// Conclusive outcomes disagreeing with the declaration, plus every conflict.
pub fn count_mismatches(record: &RecipientRecord, decl: &Declaration) -> Result<usize> {
    if record.outcomes.len() != decl.signs.len() {
        return Err(QdsError::LengthMismatch {
            expected: record.outcomes.len(),
            found: decl.signs.len(),
        });
    }
    Ok(record
        .outcomes
        .iter()
        .zip(&decl.signs)
        .filter(|(o, s)| match o {
            UsdOutcome::PlusAlpha | UsdOutcome::MinusAlpha => o.sign() != Some(**s),
            UsdOutcome::Conflict => true,
            UsdOutcome::Ambiguous => false,
        })
        .count())
}

pub fn accepts(mismatches: usize, params: &ProtocolParams, role: Role) -> bool {
    let m = mismatches as f64;
    let threshold = params.mismatch_threshold(role);
    match role {
        Role::Authenticator => m <= threshold,
        Role::Verifier => m < threshold,
    }
}

pub fn decide(
    record: &RecipientRecord,
    decl: &Declaration,
    params: &ProtocolParams,
    role: Role,
) -> Result<bool> {
    Ok(accepts(count_mismatches(record, decl)?, params, role))
}

/// Bob authenticates and Charlie verifies the same declaration, each with an abort check.
pub(crate) fn assemble_verdict(
    bob: &RecipientRecord,
    charlie: &RecipientRecord,
    decl: &Declaration,
    params: &ProtocolParams,
) -> Result<TrialVerdict> {
    let bob_mismatches = count_mismatches(bob, decl)?;
    let charlie_mismatches = count_mismatches(charlie, decl)?;
    Ok(TrialVerdict {
        bob_authenticated: accepts(bob_mismatches, params, Role::Authenticator),
        charlie_verified: accepts(charlie_mismatches, params, Role::Verifier),
        bob_abort: abort_check(bob, params),
        charlie_abort: abort_check(charlie, params),
        tallies: TrialTallies {
            bob_unambiguous: bob.unambiguous_count() as u64,
            charlie_unambiguous: charlie.unambiguous_count() as u64,
            bob_mismatches: bob_mismatches as u64,
            charlie_mismatches: charlie_mismatches as u64,
            bob_null_clicks: bob.null_count() as u64,
            charlie_null_clicks: charlie.null_count() as u64,
            guess_errors: 0,
        },
    })
}

/// One complete honest execution: keys, distribution, and both acceptance decisions.
pub fn run_honest_trial<R: Rng + ?Sized>(params: &ProtocolParams, rng: &mut R) -> Result<TrialVerdict> {
    let (k0, k1) = generate_keys(params, rng);
    let key = if rng.random::<bool>() { k1 } else { k0 };
    let (bob, charlie) = run_distribution_honest(&key, params, rng)?;
    assemble_verdict(&bob, &charlie, &Declaration::from(&key), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(alpha: f64, length: usize) -> ProtocolParams {
        let p = usd_success_probability(alpha);
        ProtocolParams::new(alpha, length, 0.0, 0.05, 0.1 * p, 0.0, 0.01).unwrap()
    }

    fn record(outcomes: &[UsdOutcome]) -> RecipientRecord {
        RecipientRecord {
            outcomes: outcomes.to_vec(),
            null_clicked: vec![false; outcomes.len()],
        }
    }

    #[test]
    fn validation() {
        let ok = params(0.5, 10);
        assert!(ok.validate().is_ok());
        let bad = |f: fn(&mut ProtocolParams)| {
            let mut p = ok;
            f(&mut p);
            p.validate().unwrap_err()
        };
        assert!(matches!(bad(|p| p.alpha = 0.0), QdsError::InvalidParameter { name: "alpha", .. }));
        assert!(matches!(bad(|p| p.length = 0), QdsError::InvalidParameter { name: "length", .. }));
        assert!(matches!(bad(|p| p.s_v = p.s_a), QdsError::InvalidParameter { name: "s_v", .. }));
        assert!(matches!(bad(|p| p.s_v = 1.0), QdsError::InvalidParameter { name: "s_v", .. }));
        assert!(matches!(bad(|p| p.delta = 0.5), QdsError::InvalidParameter { name: "delta", .. }));
        assert!(matches!(bad(|p| p.r = 1.0), QdsError::InvalidParameter { name: "r", .. }));
        assert!(matches!(bad(|p| p.epsilon = 0.0), QdsError::InvalidParameter { name: "epsilon", .. }));
        assert!(matches!(bad(|p| p.s_a = f64::NAN), QdsError::InvalidParameter { name: "s_a", .. }));
    }

    #[test]
    fn key_shapes_and_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (k0, k1) = generate_keys(&params(0.5, 4), &mut rng);
        assert_eq!((k0.signs.len(), k1.signs.len()), (4, 4));
        assert!(!k0.message && k1.message);

        let n = 100_000;
        let (k0, k1) = generate_keys(&params(0.5, n), &mut rng);
        let sigma = (1.0 / n as f64).sqrt();
        let mean: f64 = k0.signs.iter().map(|s| s.value()).sum::<f64>() / n as f64;
        assert!(mean.abs() <= 4.0 * sigma, "mean {mean}");
        let agree = k0.signs.iter().zip(&k1.signs).filter(|(a, b)| a == b).count() as f64 / n as f64;
        assert!((agree - 0.5).abs() <= 4.0 * 0.5 * sigma, "agreement {agree}");
    }

    #[test]
    fn honest_distribution_is_clean() {
        let alpha = 0.5;
        let length = 10_000;
        let p = params(alpha, length);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (k0, _) = generate_keys(&p, &mut rng);
        let (bob, charlie) = run_distribution_honest(&k0, &p, &mut rng).unwrap();
        let p_usd = usd_success_probability(alpha);
        let sigma = (p_usd * (1.0 - p_usd) / length as f64).sqrt();
        let decl = Declaration::from(&k0);
        for rec in [&bob, &charlie] {
            assert_eq!(rec.len(), length);
            assert_eq!(rec.null_count(), 0);
            assert_eq!(rec.conflict_count(), 0);
            assert_eq!(count_mismatches(rec, &decl).unwrap(), 0);
            let frac = rec.unambiguous_count() as f64 / length as f64;
            assert!((frac - p_usd).abs() <= 4.0 * sigma, "{frac} vs {p_usd}");
        }
        assert_ne!(bob.outcomes, charlie.outcomes);
    }

    #[test]
    fn abort_rules() {
        let p = params(0.5, 100);
        let centre = (p.p_usd() * 100.0).round() as usize;
        let mut outcomes = vec![UsdOutcome::PlusAlpha; centre];
        outcomes.resize(100, UsdOutcome::Ambiguous);
        let mut rec = record(&outcomes);
        assert_eq!(abort_check(&rec, &p), None);

        let empty = record(&[UsdOutcome::Ambiguous; 100]);
        assert_eq!(abort_check(&empty, &p), Some(AbortReason::UnambiguousWindow));

        rec.null_clicked[17] = true;
        assert_eq!(abort_check(&rec, &p), Some(AbortReason::NullPortThreshold));

        // null check wins even when the window also fails
        let mut both = empty.clone();
        both.null_clicked[0] = true;
        assert_eq!(abort_check(&both, &p), Some(AbortReason::NullPortThreshold));
    }

    #[test]
    fn window_is_inclusive() {
        // p_usd = 0.5 would need an irrational alpha; check the edges of whatever window we get
        let p = params(0.5, 1000);
        let (lo, hi) = p.unambiguous_window();
        let at = |k: usize| {
            let mut o = vec![UsdOutcome::MinusAlpha; k];
            o.resize(1000, UsdOutcome::Ambiguous);
            abort_check(&record(&o), &p)
        };
        assert_eq!(at(lo.ceil() as usize), None);
        assert_eq!(at(lo.ceil() as usize - 1), Some(AbortReason::UnambiguousWindow));
        assert_eq!(at(hi.floor() as usize), None);
        assert_eq!(at(hi.floor() as usize + 1), Some(AbortReason::UnambiguousWindow));
    }

    #[test]
    fn mismatch_counting() {
        use UsdOutcome::*;
        let all_amb = record(&[Ambiguous; 4]);
        let decl = Declaration {
            message: false,
            signs: vec![Sign::Plus, Sign::Plus, Sign::Minus, Sign::Plus],
        };
        assert_eq!(count_mismatches(&all_amb, &decl).unwrap(), 0);

        let matching = record(&[PlusAlpha, PlusAlpha, MinusAlpha, Ambiguous]);
        assert_eq!(count_mismatches(&matching, &decl).unwrap(), 0);

        let mixed = record(&[PlusAlpha, MinusAlpha, Ambiguous, Conflict]);
        assert_eq!(count_mismatches(&mixed, &decl).unwrap(), 2);

        let short = record(&[PlusAlpha]);
        assert_eq!(
            count_mismatches(&short, &decl),
            Err(QdsError::LengthMismatch { expected: 1, found: 4 })
        );
    }

    #[test]
    fn decision_thresholds() {
        use UsdOutcome::*;
        let p = params(0.5, 4);
        let decl = Declaration::all_plus(true, 4);
        let clean = record(&[PlusAlpha, Ambiguous, PlusAlpha, Ambiguous]);
        let one_bad = record(&[PlusAlpha, MinusAlpha, PlusAlpha, Ambiguous]);
        assert!(decide(&clean, &decl, &p, Role::Authenticator).unwrap());
        assert!(!decide(&one_bad, &decl, &p, Role::Authenticator).unwrap());
    }

    #[test]
    fn verifier_is_strict_at_exact_threshold() {
        let base = params(0.5, 1000);
        let mut found = 0;
        for k in 1..200usize {
            let mut q = base;
            q.s_v = k as f64 / (q.p_usd() * 1000.0);
            if q.s_v >= 1.0 || q.mismatch_threshold(Role::Verifier) != k as f64 {
                continue;
            }
            found += 1;
            assert!(!accepts(k, &q, Role::Verifier));
            assert!(accepts(k - 1, &q, Role::Verifier));
            q.s_a = q.s_v / 2.0;
            let ta = q.mismatch_threshold(Role::Authenticator);
            assert!(accepts(ta.floor() as usize, &q, Role::Authenticator));
        }
        assert!(found > 10, "only {found} exactly representable thresholds");
    }

    #[test]
    fn honest_trials_never_reject() {
        let p = params(0.5, 200);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..2000 {
            let v = run_honest_trial(&p, &mut rng).unwrap();
            assert!(v.bob_authenticated && v.charlie_verified);
            assert!(!v.repudiation_success());
            for a in [v.bob_abort, v.charlie_abort].into_iter().flatten() {
                assert_eq!(a, AbortReason::UnambiguousWindow);
            }
            assert_eq!(v.tallies.bob_null_clicks + v.tallies.charlie_null_clicks, 0);
        }
    }
}
