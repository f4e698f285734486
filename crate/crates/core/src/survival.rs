//! Closed-form survival probabilities for structural default models with a
//! (possibly discretely monitored) collateral barrier.
//!
//! Every model variant reduces to a cash-or-nothing call, optionally knocked
//! out at a down barrier, divided by the discount factor:
//!
//! * no barrier: terminal check only (Merton);
//! * continuous barrier at the strike (Black-Cox);
//! * continuous barrier at an arbitrary level (partial collateral);
//! * discretely monitored barrier, via the continuity-corrected level
//!   `B * exp(-beta * sigma * sqrt(dt))`;
//! * several discrete barriers collapsed to the highest corrected level.

use crate::error::{Error, Result};
use crate::model::{BarrierSpec, Branch, CompositeBarrier, FirmParams, SurvivalResult};
use crate::normal::std_normal_cdf;

/// `-zeta(1/2) / sqrt(2 pi)`, the discrete-monitoring continuity correction.
pub const BETA: f64 = 0.582_597_157_9;

/// Values this far outside `[0, 1]` are treated as rounding noise.
const RANGE_SLACK: f64 = 1e-9;

pub fn beta_constant() -> f64 {
    BETA
}

/// Price of a cash-or-nothing call paying one unit at the horizon if the
/// firm value finishes above `strike`.
pub fn binary_call(params: &FirmParams, strike: f64) -> Result<f64> {
    params.validate()?;
    if !(strike.is_finite() && strike > 0.0) {
        return Err(Error::invalid("strike", format!("must be positive, got {strike}")));
    }
    Ok(cash_or_nothing(params, params.firm_value, strike))
}

// Same payoff started from an arbitrary spot; used for the reflected term.
fn cash_or_nothing(params: &FirmParams, spot: f64, strike: f64) -> f64 {
    let vol_sqrt_t = params.sigma * params.horizon.sqrt();
    let drift = params.rate - params.dividend - 0.5 * params.sigma * params.sigma;
    let d2 = ((spot / strike).ln() + drift * params.horizon) / vol_sqrt_t;
    params.discount() * std_normal_cdf(d2)
}

/// Reflection exponent of the knocked-out term, `(V / B)^(2 alpha)`.
pub fn alpha(params: &FirmParams) -> f64 {
    let half_var = 0.5 * params.sigma * params.sigma;
    0.5 * (1.0 - (params.rate - params.dividend) / half_var)
}

/// Continuity-corrected barrier level for a discretely monitored barrier.
/// Never above the input level; unchanged for continuous monitoring.
pub fn barrier_shift(barrier: &BarrierSpec, sigma: f64) -> f64 {
    if barrier.interval == 0.0 {
        return barrier.level;
    }
    barrier.level * (-BETA * sigma * barrier.interval.sqrt()).exp()
}

pub fn survival_probability(params: &FirmParams, barrier: &BarrierSpec) -> Result<SurvivalResult> {
    params.validate()?;
    barrier.validate()?;

    if barrier.is_merton() {
        return Ok(SurvivalResult {
            probability: merton_survival(params)?,
            effective_barrier: 0.0,
            branch: Branch::MertonDegenerate,
        });
    }

    let shifted = barrier_shift(barrier, params.sigma);
    let (strike, branch) = if params.strike > shifted {
        (params.strike, Branch::StrikeAboveBarrier)
    } else {
        (shifted, Branch::BarrierAtOrAboveStrike)
    };
    let probability = knocked_out_survival(params, shifted, strike)?;
    Ok(SurvivalResult {
        probability,
        effective_barrier: shifted,
        branch,
    })
}

/// Survival with several barriers on different schedules. The barrier is the
/// highest continuity-corrected level, and the terminal strike is set to that
/// same level, overriding `params.strike`.
pub fn composite_survival(params: &FirmParams, composite: &CompositeBarrier) -> Result<SurvivalResult> {
    params.validate()?;
    let shifted = composite
        .barriers()
        .iter()
        .map(|b| barrier_shift(b, params.sigma))
        .fold(0.0_f64, f64::max);

    if shifted == 0.0 {
        // All levels are zero, so the forced strike is zero as well.
        return Ok(SurvivalResult {
            probability: 1.0,
            effective_barrier: 0.0,
            branch: Branch::MertonDegenerate,
        });
    }
    let probability = knocked_out_survival(&params.with_strike(shifted), shifted, shifted)?;
    Ok(SurvivalResult {
        probability,
        effective_barrier: shifted,
        branch: Branch::BarrierAtOrAboveStrike,
    })
}

fn merton_survival(params: &FirmParams) -> Result<f64> {
    if params.strike == 0.0 {
        return Ok(1.0);
    }
    let p = binary_call(params, params.strike)? / params.discount();
    check_range(p)
}

fn knocked_out_survival(params: &FirmParams, barrier: f64, strike: f64) -> Result<f64> {
    let v = params.firm_value;
    if v <= barrier {
        return Err(Error::FirmDefaulted {
            firm_value: v,
            barrier,
        });
    }
    let direct = cash_or_nothing(params, v, strike);
    let reflected = cash_or_nothing(params, barrier * barrier / v, strike);
    // The weight can overflow when the reflected price has already underflowed.
    let reflected_term = if reflected == 0.0 {
        0.0
    } else {
        (2.0 * alpha(params) * (v / barrier).ln() + reflected.ln()).exp()
    };
    check_range((direct - reflected_term) / params.discount())
}

fn check_range(p: f64) -> Result<f64> {
    if !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&p) {
        return Err(Error::NumericalRange { value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}
