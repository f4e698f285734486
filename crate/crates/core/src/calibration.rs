//! Solve for the unobserved structural parameter so the model survival
//! matches a target quote.
//!
//! Survival is monotone in the firm value, and in volatility away from the
//! money, so a bracketing bisection is enough and never leaves the bracket.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BarrierSpec, FirmParams};
use crate::survival::{barrier_shift, survival_probability};

/// Parameter held fixed while the other one is solved for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fixed {
    Sigma(f64),
    FirmValue(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTarget {
    pub target_survival: f64,
    pub strike: f64,
    pub horizon: f64,
    pub rate: f64,
    pub dividend: f64,
    pub fixed: Fixed,
    /// Collateral barrier in force when the quote was observed. Defaults to
    /// none (uncollateralized).
    pub barrier: BarrierSpec,
}

impl CalibrationTarget {
    pub fn firm_value(target_survival: f64, strike: f64, horizon: f64, rate: f64, dividend: f64, sigma: f64) -> Self {
        CalibrationTarget {
            target_survival,
            strike,
            horizon,
            rate,
            dividend,
            fixed: Fixed::Sigma(sigma),
            barrier: BarrierSpec::none(),
        }
    }

    pub fn sigma(target_survival: f64, strike: f64, horizon: f64, rate: f64, dividend: f64, firm_value: f64) -> Self {
        CalibrationTarget {
            fixed: Fixed::FirmValue(firm_value),
            ..Self::firm_value(target_survival, strike, horizon, rate, dividend, 1.0)
        }
    }

    pub fn with_barrier(self, barrier: BarrierSpec) -> Self {
        CalibrationTarget { barrier, ..self }
    }

    fn validate(&self) -> Result<()> {
        if !(self.target_survival > 0.0 && self.target_survival < 1.0) {
            return Err(Error::invalid(
                "target_survival",
                format!("must lie in (0, 1), got {}", self.target_survival),
            ));
        }
        self.barrier.validate()?;
        // Placeholder values for the solved parameter; the fixed ones are checked.
        let (v, s) = match self.fixed {
            Fixed::Sigma(s) => (1.0, s),
            Fixed::FirmValue(v) => (v, 1.0),
        };
        self.params(v, s).validate()
    }

    fn params(&self, firm_value: f64, sigma: f64) -> FirmParams {
        FirmParams {
            firm_value,
            strike: self.strike,
            horizon: self.horizon,
            rate: self.rate,
            dividend: self.dividend,
            sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootFindConfig {
    pub abs_tol: f64,
    pub max_iter: usize,
    /// Search interval; `None` uses the default for the solved parameter.
    pub bracket: Option<(f64, f64)>,
}

impl Default for RootFindConfig {
    fn default() -> Self {
        RootFindConfig {
            abs_tol: 1e-10,
            max_iter: 200,
            bracket: None,
        }
    }
}

impl RootFindConfig {
    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::invalid("abs_tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        if let Some((lo, hi)) = self.bracket {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid("bracket", format!("need lo < hi, got ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

pub const DEFAULT_SIGMA_BRACKET: (f64, f64) = (1e-4, 5.0);

/// Default firm-value bracket: just above the larger of the strike and the
/// effective barrier, up to a thousand times the strike.
pub fn default_firm_value_bracket(strike: f64, effective_barrier: f64) -> (f64, f64) {
    let floor = strike.max(effective_barrier);
    (floor * (1.0 + 1e-6), floor * 1e3)
}

/// Firm value at which the model survival equals the target.
pub fn calibrate_firm_value(target: &CalibrationTarget, config: &RootFindConfig) -> Result<f64> {
    target.validate()?;
    config.validate()?;
    let sigma = match target.fixed {
        Fixed::Sigma(s) => s,
        Fixed::FirmValue(_) => return Err(Error::invalid("fixed", "solving for V requires a fixed sigma")),
    };
    let (lo, hi) = config
        .bracket
        .unwrap_or_else(|| default_firm_value_bracket(target.strike, barrier_shift(&target.barrier, sigma)));
    let f = |v: f64| -> Result<f64> {
        Ok(survival_probability(&target.params(v, sigma), &target.barrier)?.probability - target.target_survival)
    };
    bisect(f, lo, hi, config)
}

/// Volatility at which the model survival equals the target.
pub fn calibrate_sigma(target: &CalibrationTarget, config: &RootFindConfig) -> Result<f64> {
    target.validate()?;
    config.validate()?;
    let firm_value = match target.fixed {
        Fixed::FirmValue(v) => v,
        Fixed::Sigma(_) => return Err(Error::invalid("fixed", "solving for sigma requires a fixed V")),
    };
    if firm_value == target.strike {
        return Err(Error::AtTheMoney(firm_value));
    }
    let (lo, hi) = config.bracket.unwrap_or(DEFAULT_SIGMA_BRACKET);
    if lo <= 0.0 {
        return Err(Error::invalid("bracket", "volatility bracket must be positive"));
    }
    let f = |s: f64| -> Result<f64> {
        Ok(survival_probability(&target.params(firm_value, s), &target.barrier)?.probability - target.target_survival)
    };
    bisect(f, lo, hi, config)
}

/// Bisection on a sign change of `f` over `[lo, hi]`. Stops as soon as
/// `|f| <= abs_tol` or the interval can no longer be split.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, config: &RootFindConfig) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let f_lo = f(lo)?;
    if f_lo.abs() <= config.abs_tol {
        return Ok(lo);
    }
    let f_hi = f(hi)?;
    if f_hi.abs() <= config.abs_tol {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoBracket { lo, hi, f_lo, f_hi });
    }
    let lo_negative = f_lo < 0.0;

    let mut mismatch = f_lo.abs().min(f_hi.abs());
    for _ in 0..config.max_iter {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid.abs() <= config.abs_tol {
            return Ok(mid);
        }
        mismatch = f_mid.abs();
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::MaxIterations {
        max_iter: config.max_iter,
        mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::credit::{pd_from_spread, CreditQuote};

    fn merton(v: f64, sigma: f64) -> f64 {
        let p = FirmParams::new(v, 1.0, 5.0, 0.02, 0.0, sigma).unwrap();
        survival_probability(&p, &BarrierSpec::none()).unwrap().probability
    }

    #[test]
    fn recovers_known_firm_value() {
        let v0 = std::f64::consts::E;
        let target = CalibrationTarget::firm_value(merton(v0, 0.25), 1.0, 5.0, 0.02, 0.0, 0.25);
        let v = calibrate_firm_value(&target, &RootFindConfig::default()).unwrap();
        assert!((merton(v, 0.25) - target.target_survival).abs() <= 1e-10);
        assert!((v - v0).abs() < 1e-6);
    }

    #[test]
    fn a_rated_quote() {
        let pd = pd_from_spread(&CreditQuote::new(90.0, 0.38, 5.0).unwrap()).unwrap();
        let target = CalibrationTarget::firm_value(1.0 - pd, 1.0, 5.0, 0.02, 0.0, 0.2);
        let v = calibrate_firm_value(&target, &RootFindConfig::default()).unwrap();
        assert!((merton(v, 0.2) - (1.0 - pd)).abs() <= 1e-10);
    }

    #[test]
    fn higher_target_needs_more_assets() {
        let cfg = RootFindConfig::default();
        let vs: Vec<f64> = [0.6, 0.8, 0.95, 0.999]
            .iter()
            .map(|&p| calibrate_firm_value(&CalibrationTarget::firm_value(p, 1.0, 5.0, 0.02, 0.0, 0.3), &cfg).unwrap())
            .collect();
        assert!(vs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn deterministic() {
        let target = CalibrationTarget::firm_value(0.93, 1.0, 5.0, 0.02, 0.0, 0.4);
        let cfg = RootFindConfig::default();
        let a = calibrate_firm_value(&target, &cfg).unwrap();
        let b = calibrate_firm_value(&target, &cfg).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn calibrates_under_a_barrier() {
        let barrier = BarrierSpec::discrete(0.7, crate::model::DAILY);
        let target = CalibrationTarget::firm_value(0.9, 1.0, 5.0, 0.02, 0.0, 0.2).with_barrier(barrier);
        let v = calibrate_firm_value(&target, &RootFindConfig::default()).unwrap();
        let p = FirmParams::new(v, 1.0, 5.0, 0.02, 0.0, 0.2).unwrap();
        assert!((survival_probability(&p, &barrier).unwrap().probability - 0.9).abs() <= 1e-10);
    }

    #[test]
    fn infeasible_firm_value_target() {
        // Bracket capped at V = 1.5 cannot reach near-certain survival.
        let target = CalibrationTarget::firm_value(0.999_999, 1.0, 5.0, 0.02, 0.0, 0.8);
        let cfg = RootFindConfig {
            bracket: Some((1.01, 1.5)),
            ..RootFindConfig::default()
        };
        assert!(matches!(calibrate_firm_value(&target, &cfg), Err(Error::NoBracket { .. })));
    }

    #[test]
    fn max_iterations_reported() {
        let target = CalibrationTarget::firm_value(0.9, 1.0, 5.0, 0.02, 0.0, 0.3);
        let cfg = RootFindConfig {
            max_iter: 3,
            ..RootFindConfig::default()
        };
        assert!(matches!(calibrate_firm_value(&target, &cfg), Err(Error::MaxIterations { .. })));
    }

    #[test]
    fn sigma_round_trip() {
        let target = CalibrationTarget::sigma(merton(1.8, 0.3), 1.0, 5.0, 0.02, 0.0, 1.8);
        let s = calibrate_sigma(&target, &RootFindConfig::default()).unwrap();
        assert!((s - 0.3).abs() < 1e-6);
        assert!((merton(1.8, s) - target.target_survival).abs() <= 1e-10);
    }

    #[test]
    fn sigma_deep_in_the_money() {
        let target = CalibrationTarget::sigma(0.9999, 1.0, 5.0, 0.02, 0.0, 20.0);
        let s = calibrate_sigma(&target, &RootFindConfig::default()).unwrap();
        assert!(s < 1.0);
        assert!((merton(20.0, s) - 0.9999).abs() <= 1e-10);
    }

    #[test]
    fn sigma_infeasible_below_strike() {
        let target = CalibrationTarget::sigma(0.7, 1.0, 5.0, 0.02, 0.0, 0.8);
        assert!(matches!(
            calibrate_sigma(&target, &RootFindConfig::default()),
            Err(Error::NoBracket { .. })
        ));
    }

    #[test]
    fn sigma_at_the_money_rejected() {
        let target = CalibrationTarget::sigma(0.5, 1.0, 5.0, 0.02, 0.0, 1.0);
        assert_eq!(
            calibrate_sigma(&target, &RootFindConfig::default()),
            Err(Error::AtTheMoney(1.0))
        );
    }

    #[test]
    fn rejects_degenerate_targets() {
        let cfg = RootFindConfig::default();
        assert!(calibrate_firm_value(&CalibrationTarget::firm_value(1.0, 1.0, 5.0, 0.02, 0.0, 0.2), &cfg).is_err());
        assert!(calibrate_firm_value(&CalibrationTarget::firm_value(0.0, 1.0, 5.0, 0.02, 0.0, 0.2), &cfg).is_err());
        let bad = RootFindConfig {
            bracket: Some((2.0, 1.0)),
            ..cfg
        };
        assert!(calibrate_firm_value(&CalibrationTarget::firm_value(0.9, 1.0, 5.0, 0.02, 0.0, 0.2), &bad).is_err());
    }

    #[test]
    fn bisection_interval_shrinks() {
        use std::cell::RefCell;
        let seen = RefCell::new(Vec::new());
        let cfg = RootFindConfig {
            abs_tol: 1e-14,
            max_iter: 100,
            bracket: None,
        };
        let root = bisect(
            |x| {
                seen.borrow_mut().push(x);
                Ok(x * x - 2.0)
            },
            0.0,
            2.0,
            &cfg,
        )
        .unwrap();
        assert!((root - 2f64.sqrt()).abs() < 1e-13);
        // Successive midpoints move by halving steps.
        let mids = &seen.borrow()[2..];
        let steps: Vec<f64> = mids.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        assert!(steps.windows(2).all(|w| w[1] <= w[0] * 0.5 + 1e-18));
        assert!(mids.len() <= (2.0f64 / 1e-14).log2().ceil() as usize + 1);
    }
}
