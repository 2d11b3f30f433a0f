//! Coherent-state linear optics.
//!
//! Every state in the protocol is a product of coherent states and every device
//! is a passive linear-optical network followed by threshold detection, so a
//! mode is fully described by one complex amplitude. A beam splitter maps the
//! input amplitudes linearly and a detector fires with probability
//! `1 - exp(-|γ|²)`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QdsError, Result};

/// Amplitude of a single coherent optical mode, in units of √photon.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexAmplitude(Complex64);

impl ComplexAmplitude {
    pub const VACUUM: ComplexAmplitude = ComplexAmplitude(Complex64::new(0.0, 0.0));

    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() {
            return Err(QdsError::param("amplitude", format!("non-finite value {re}+{im}i")));
        }
        Ok(ComplexAmplitude(Complex64::new(re, im)))
    }

    /// A real amplitude. Panics on non-finite input.
    pub fn real(re: f64) -> Self {
        assert!(re.is_finite(), "non-finite amplitude {re}");
        ComplexAmplitude(Complex64::new(re, 0.0))
    }

    pub fn re(self) -> f64 {
        self.0.re
    }

    pub fn im(self) -> f64 {
        self.0.im
    }

    /// Mean photon number `|γ|²`.
    pub fn mean_photons(self) -> f64 {
        self.0.norm_sqr()
    }

    pub fn norm(self) -> f64 {
        self.0.norm()
    }

    pub fn as_complex(self) -> Complex64 {
        self.0
    }
}

impl From<Complex64> for ComplexAmplitude {
    fn from(value: Complex64) -> Self {
        ComplexAmplitude(value)
    }
}

impl Add for ComplexAmplitude {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        ComplexAmplitude(self.0 + rhs.0)
    }
}

impl Sub for ComplexAmplitude {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        ComplexAmplitude(self.0 - rhs.0)
    }
}

impl Neg for ComplexAmplitude {
    type Output = Self;
    fn neg(self) -> Self {
        ComplexAmplitude(-self.0)
    }
}

impl Mul<f64> for ComplexAmplitude {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        ComplexAmplitude(self.0 * rhs)
    }
}

impl fmt::Display for ComplexAmplitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Phase of a signature element: the state is `|sign·α⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// Uniformly random sign.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Sign {
        if rng.random::<bool>() {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    /// Coherent amplitude `sign·α`.
    pub fn amplitude(self, alpha: f64) -> ComplexAmplitude {
        ComplexAmplitude::real(self.value() * alpha)
    }
}

impl TryFrom<i64> for Sign {
    type Error = QdsError;

    fn try_from(value: i64) -> Result<Self> {
        match value {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(QdsError::InvalidSign(other)),
        }
    }
}

/// Output of the symmetrizing multiport: two signal modes and two null-port modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeQuadruple {
    pub b_signal: ComplexAmplitude,
    pub c_signal: ComplexAmplitude,
    pub b_null: ComplexAmplitude,
    pub c_null: ComplexAmplitude,
}

impl ModeQuadruple {
    pub fn total_photons(&self) -> f64 {
        self.b_signal.mean_photons()
            + self.c_signal.mean_photons()
            + self.b_null.mean_photons()
            + self.c_null.mean_photons()
    }
}

/// Result of one unambiguous state discrimination measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UsdOutcome {
    PlusAlpha,
    MinusAlpha,
    Ambiguous,
    /// Both detectors fired. Impossible for honest `±α` inputs.
    Conflict,
}

impl UsdOutcome {
    /// The sign identified by a conclusive outcome.
    pub fn sign(self) -> Option<Sign> {
        match self {
            UsdOutcome::PlusAlpha => Some(Sign::Plus),
            UsdOutcome::MinusAlpha => Some(Sign::Minus),
            UsdOutcome::Ambiguous | UsdOutcome::Conflict => None,
        }
    }

    pub fn conclusive(sign: Sign) -> UsdOutcome {
        match sign {
            Sign::Plus => UsdOutcome::PlusAlpha,
            Sign::Minus => UsdOutcome::MinusAlpha,
        }
    }
}

/// Probabilities of the four USD outcomes for one input mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeDistribution {
    pub p_plus: f64,
    pub p_minus: f64,
    pub p_ambiguous: f64,
    pub p_conflict: f64,
}

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.p_plus + self.p_minus + self.p_ambiguous + self.p_conflict
    }

    /// Maps a uniform draw in `[0, 1)` onto an outcome. The unit interval is
    /// partitioned in the order plus, minus, conflict, ambiguous.
    pub fn outcome_at(&self, u: f64) -> UsdOutcome {
        let mut edge = self.p_plus;
        if u < edge {
            return UsdOutcome::PlusAlpha;
        }
        edge += self.p_minus;
        if u < edge {
            return UsdOutcome::MinusAlpha;
        }
        edge += self.p_conflict;
        if u < edge {
            return UsdOutcome::Conflict;
        }
        UsdOutcome::Ambiguous
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> UsdOutcome {
        self.outcome_at(rng.random::<f64>())
    }
}

/// 50:50 beam splitter acting on two coherent inputs: `((a+b)/√2, (a−b)/√2)`.
pub fn beam_splitter(
    a: ComplexAmplitude,
    b: ComplexAmplitude,
) -> (ComplexAmplitude, ComplexAmplitude) {
    ((a + b) * FRAC_1_SQRT_2, (a - b) * FRAC_1_SQRT_2)
}

/// Closed-form output of the four-splitter multiport for Bob's and Charlie's inputs.
///
/// Both signal ports carry `(b+c)/2` and both null ports carry `(b−c)/2`; the
/// null ports are vacuum exactly when the inputs agree.
pub fn multiport(in_b: ComplexAmplitude, in_c: ComplexAmplitude) -> ModeQuadruple {
    let signal = (in_b + in_c) * 0.5;
    let null = (in_b - in_c) * 0.5;
    ModeQuadruple {
        b_signal: signal,
        c_signal: signal,
        b_null: null,
        c_null: null,
    }
}

/// The multiport built from its four beam splitters.
///
/// Bob and Charlie each split their input against vacuum, keep one half and
/// forward the other; each then mixes the forwarded half from the other party
/// with the kept half. Bob's last splitter sees (kept, forwarded), Charlie's
/// sees (forwarded, kept), which makes the two null ports carry equal
/// amplitudes.
pub fn multiport_by_splitters(in_b: ComplexAmplitude, in_c: ComplexAmplitude) -> ModeQuadruple {
    let (b_kept, b_sent) = beam_splitter(in_b, ComplexAmplitude::VACUUM);
    let (c_kept, c_sent) = beam_splitter(in_c, ComplexAmplitude::VACUUM);
    let (b_signal, b_null) = beam_splitter(b_kept, c_sent);
    let (c_signal, c_null) = beam_splitter(b_sent, c_kept);
    ModeQuadruple {
        b_signal,
        c_signal,
        b_null,
        c_null,
    }
}

/// Probability that an ideal threshold detector registers at least one photon.
pub fn click_probability(mode: ComplexAmplitude) -> f64 {
    -(-mode.mean_photons()).exp_m1()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(QdsError::param("alpha", format!("must be positive and finite, got {alpha}")))
    }
}

/// Outcome probabilities of the linear-optics USD receiver.
///
/// The signal is interfered with a local reference `α`; the sum port then
/// carries `(γ+α)/√2` and fires only for `+α`, the difference port carries
/// `(γ−α)/√2` and fires only for `−α`. The two detectors are independent.
pub fn usd_distribution(signal: ComplexAmplitude, alpha: f64) -> Result<OutcomeDistribution> {
    check_alpha(alpha)?;
    let (plus_port, minus_port) = beam_splitter(signal, ComplexAmplitude::real(alpha));
    let p1 = click_probability(plus_port);
    let p2 = click_probability(minus_port);
    let q1 = (-plus_port.mean_photons()).exp();
    let q2 = (-minus_port.mean_photons()).exp();
    Ok(OutcomeDistribution {
        p_plus: p1 * q2,
        p_minus: p2 * q1,
        p_ambiguous: q1 * q2,
        p_conflict: p1 * p2,
    })
}

pub fn sample_usd<R: Rng + ?Sized>(
    signal: ComplexAmplitude,
    alpha: f64,
    rng: &mut R,
) -> Result<UsdOutcome> {
    Ok(usd_distribution(signal, alpha)?.sample(rng))
}

/// Optimal USD success probability between `|α⟩` and `|−α⟩`: `1 − e^{−2α²}`.
pub fn usd_success_probability(alpha: f64) -> f64 {
    -(-2.0 * alpha * alpha).exp_m1()
}

/// Helstrom minimum-error probability for discriminating `|±a⟩`.
///
/// Evaluates `½(1 − √(1 − e^{−4a²}))` as `x / (2(1 + √(1−x)))` so that the
/// large-amplitude tail does not cancel to zero early.
pub fn helstrom_error(alpha_eff: f64) -> Result<f64> {
    if alpha_eff.is_nan() || alpha_eff < 0.0 {
        return Err(QdsError::param(
            "alpha_eff",
            format!("must be non-negative, got {alpha_eff}"),
        ));
    }
    let overlap = (-4.0 * alpha_eff * alpha_eff).exp();
    Ok(overlap / (2.0 * (1.0 + (1.0 - overlap).sqrt())))
}

/// Guess of a minimum-error measurement on `|true_sign·a⟩`.
pub fn sample_min_error_guess<R: Rng + ?Sized>(
    true_sign: Sign,
    alpha_eff: f64,
    rng: &mut R,
) -> Result<Sign> {
    let p_err = helstrom_error(alpha_eff)?;
    Ok(guess_with_error(true_sign, p_err, rng))
}

/// Returns `true_sign` flipped with probability `p_err`.
pub(crate) fn guess_with_error<R: Rng + ?Sized>(true_sign: Sign, p_err: f64, rng: &mut R) -> Sign {
    if rng.random::<f64>() < p_err {
        true_sign.flipped()
    } else {
        true_sign
    }
}
