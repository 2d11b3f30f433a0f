//! Closed-form correctness and security bounds, evaluated in log space.
//!
//! All four bounds are reported as `log10` of an upper bound on the event
//! probability, capped at 0. A bound whose validity condition fails (for
//! example a non-positive forging margin) is reported as 0, i.e. the trivial
//! bound 1.

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use crate::error::{QdsError, Result};
use crate::protocol::{DerivedRates, ProtocolParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub sv_gt_sa: bool,
    /// `p'_min − s_v·p_usd/(p_usd−δ) − √(ε+r)`; the forging bound needs this positive.
    pub forge_margin: f64,
    pub delta_valid: bool,
}

impl ConstraintReport {
    pub fn satisfied(&self) -> bool {
        self.sv_gt_sa && self.delta_valid && self.forge_margin > 0.0
    }

    /// Human-readable names of the violated constraints.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.sv_gt_sa {
            out.push("s_v > s_a".to_string());
        }
        if !self.delta_valid {
            out.push("0 < delta < p_usd".to_string());
        }
        if self.forge_margin.is_nan() || self.forge_margin <= 0.0 {
            out.push(format!(
                "active forging margin p'_min - s_v*p_usd/(p_usd-delta) - sqrt(epsilon+r) > 0 (margin {:.6})",
                self.forge_margin
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub log10_honest_abort_ub: f64,
    pub log10_repudiation_ub: f64,
    pub log10_forge_passive_ub: f64,
    pub log10_forge_active_ub: f64,
    pub rates: DerivedRates,
    pub constraints: ConstraintReport,
}

impl BoundsReport {
    /// The largest of the repudiation, active-forging and honest-abort bounds.
    pub fn worst_log10(&self) -> f64 {
        self.log10_repudiation_ub
            .max(self.log10_forge_active_ub)
            .max(self.log10_honest_abort_ub)
    }
}

pub fn derived_rates(alpha: f64) -> Result<DerivedRates> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(QdsError::param("alpha", format!("must be positive and finite, got {alpha}")));
    }
    Ok(DerivedRates::for_alpha(alpha))
}

pub fn check_constraints(params: &ProtocolParams) -> ConstraintReport {
    let rates = params.rates();
    let p_usd = rates.p_usd;
    let delta = params.delta;
    ConstraintReport {
        sv_gt_sa: params.s_v > params.s_a,
        forge_margin: rates.p_min_prime
            - params.s_v * p_usd / (p_usd - delta)
            - (params.epsilon + params.r).sqrt(),
        delta_valid: delta > 0.0 && delta < p_usd,
    }
}

/// `ln(e^a + e^b)`.
fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

fn to_log10(ln_p: f64) -> f64 {
    (ln_p / LN_10).min(0.0)
}

pub(crate) fn bounds_unchecked(params: &ProtocolParams) -> BoundsReport {
    let rates = params.rates();
    let constraints = check_constraints(params);
    let l = params.length as f64;
    let p_usd = rates.p_usd;
    let delta = params.delta;
    let shrink = p_usd - delta;

    // two recipients, each outside the window with probability ≤ 2e^{−2δ²L}
    let ln_x = std::f64::consts::LN_2 - 2.0 * delta * delta * l;
    let honest = to_log10(ln_honest_abort(ln_x));

    let gap = params.s_v - params.s_a;
    let repudiation = if gap > 0.0 {
        to_log10(-p_usd * p_usd * gap * gap * l / 2.0)
    } else {
        0.0
    };

    let passive_margin = rates.p_min - params.s_v * p_usd / shrink;
    let passive = if passive_margin > 0.0 && shrink > 0.0 {
        to_log10(-2.0 * passive_margin * passive_margin * shrink * l)
    } else {
        0.0
    };

    let m = constraints.forge_margin;
    let active = if m > 0.0 && shrink > 0.0 {
        let main = -2.0 * m * m * shrink * l;
        let slack = std::f64::consts::LN_2 - 2.0 * params.epsilon * params.epsilon * l;
        to_log10(log_add_exp(main, slack))
    } else {
        0.0
    };

    BoundsReport {
        log10_honest_abort_ub: honest,
        log10_repudiation_ub: repudiation,
        log10_forge_passive_ub: passive,
        log10_forge_active_ub: active,
        rates,
        constraints,
    }
}

/// `ln(1 − (1 − x)²) = ln x + ln(2 − x)` given `ln x`.
fn ln_honest_abort(ln_x: f64) -> f64 {
    if ln_x >= 0.0 {
        return 0.0;
    }
    ln_x + (2.0 - ln_x.exp()).ln()
}

/// Evaluates all bounds for validated parameters. Constraint failures do not
/// error; they show up in the report and the affected bounds read 0.
pub fn compute_bounds(params: &ProtocolParams) -> Result<BoundsReport> {
    params.validate()?;
    Ok(bounds_unchecked(params))
}

pub(crate) fn default_params_unchecked(alpha: f64, length: usize) -> ProtocolParams {
    let rates = DerivedRates::for_alpha(alpha);
    let s_v = rates.p_min_prime / 4.0;
    ProtocolParams {
        alpha,
        length,
        s_a: 0.0,
        s_v,
        delta: 0.1 * rates.p_usd,
        r: 0.0,
        epsilon: s_v * s_v,
    }
}

/// Ideal-case defaults: `δ = 0.1·p_usd`, `s_v = √ε = p'_min/4`, `s_a = r = 0`.
pub fn default_params(alpha: f64, length: usize) -> Result<ProtocolParams> {
    derived_rates(alpha)?;
    let params = default_params_unchecked(alpha, length);
    params.validate()?;
    let report = check_constraints(&params);
    if !report.satisfied() {
        return Err(QdsError::ConstraintViolation(report.violations().join("; ")));
    }
    Ok(params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub params: ProtocolParams,
    pub report: BoundsReport,
}

impl SweepPoint {
    pub fn constraints_ok(&self) -> bool {
        self.params.validate().is_ok() && self.report.constraints.satisfied()
    }
}

/// Evenly spaced `α` grid with default parameters at each point. Points that
/// violate a constraint are kept and flagged.
pub fn sweep_alpha(alpha_min: f64, alpha_max: f64, steps: usize, length: usize) -> Result<Vec<SweepPoint>> {
    if !(alpha_min.is_finite() && alpha_max.is_finite() && alpha_min > 0.0 && alpha_min < alpha_max) {
        return Err(QdsError::param(
            "alpha range",
            format!("need 0 < alpha_min < alpha_max, got [{alpha_min}, {alpha_max}]"),
        ));
    }
    if steps < 2 {
        return Err(QdsError::param("steps", format!("need at least 2 grid points, got {steps}")));
    }
    if length == 0 {
        return Err(QdsError::param("length", "signature length must be at least 1"));
    }
    let span = alpha_max - alpha_min;
    Ok((0..steps)
        .map(|i| {
            let alpha = if i + 1 == steps {
                alpha_max
            } else {
                alpha_min + span * i as f64 / (steps - 1) as f64
            };
            let params = default_params_unchecked(alpha, length);
            SweepPoint {
                alpha,
                params,
                report: bounds_unchecked(&params),
            }
        })
        .collect())
}
