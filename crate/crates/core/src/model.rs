//! Domain types shared by the pricing, calibration and simulation modules.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Business-day year fraction used for daily remargining.
pub const DAILY: f64 = 1.0 / 252.0;
/// Weekly remargining interval.
pub const WEEKLY: f64 = 1.0 / 52.0;
/// Monthly remargining interval.
pub const MONTHLY: f64 = 1.0 / 12.0;

/// Firm asset dynamics (geometric Brownian motion) together with the
/// liability strike and horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirmParams {
    /// Firm asset value at time zero.
    pub firm_value: f64,
    /// Liabilities checked at the horizon.
    pub strike: f64,
    /// Horizon in years.
    pub horizon: f64,
    /// Riskless rate, continuously compounded.
    pub rate: f64,
    /// Payout rate of the firm value.
    pub dividend: f64,
    /// Asset volatility.
    pub sigma: f64,
}

impl FirmParams {
    pub fn new(
        firm_value: f64,
        strike: f64,
        horizon: f64,
        rate: f64,
        dividend: f64,
        sigma: f64,
    ) -> Result<Self> {
        let params = FirmParams {
            firm_value,
            strike,
            horizon,
            rate,
            dividend,
            sigma,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.firm_value.is_finite() && self.firm_value > 0.0) {
            return Err(Error::invalid("V", format!("must be positive, got {}", self.firm_value)));
        }
        if !(self.strike.is_finite() && self.strike >= 0.0) {
            return Err(Error::invalid("K", format!("must be non-negative, got {}", self.strike)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::invalid("T", format!("must be positive, got {}", self.horizon)));
        }
        if !self.rate.is_finite() {
            return Err(Error::invalid("r", "must be finite"));
        }
        if !self.dividend.is_finite() {
            return Err(Error::invalid("D", "must be finite"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::invalid("sigma", format!("must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    pub fn with_firm_value(self, firm_value: f64) -> Self {
        FirmParams { firm_value, ..self }
    }

    pub fn with_strike(self, strike: f64) -> Self {
        FirmParams { strike, ..self }
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        FirmParams { sigma, ..self }
    }

    pub(crate) fn discount(&self) -> f64 {
        (-self.rate * self.horizon).exp()
    }
}

/// A single collateral barrier: default is triggered when the firm value is
/// at or below `level` on a monitoring date. An `interval` of zero means
/// continuous monitoring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub level: f64,
    pub interval: f64,
}

impl BarrierSpec {
    pub fn new(level: f64, interval: f64) -> Result<Self> {
        let barrier = BarrierSpec { level, interval };
        barrier.validate()?;
        Ok(barrier)
    }

    /// No barrier at all: the uncollateralized (Merton) case.
    pub const fn none() -> Self {
        BarrierSpec {
            level: 0.0,
            interval: 0.0,
        }
    }

    pub const fn continuous(level: f64) -> Self {
        BarrierSpec {
            level,
            interval: 0.0,
        }
    }

    pub const fn discrete(level: f64, interval: f64) -> Self {
        BarrierSpec { level, interval }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.level.is_finite() && self.level >= 0.0) {
            return Err(Error::invalid("B", format!("must be non-negative, got {}", self.level)));
        }
        if !(self.interval.is_finite() && self.interval >= 0.0) {
            return Err(Error::invalid("dt", format!("must be non-negative, got {}", self.interval)));
        }
        Ok(())
    }

    pub fn is_merton(&self) -> bool {
        self.level == 0.0
    }
}

/// Several barriers monitored on different schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeBarrier {
    barriers: Vec<BarrierSpec>,
}

impl CompositeBarrier {
    pub fn new(barriers: Vec<BarrierSpec>) -> Result<Self> {
        if barriers.is_empty() {
            return Err(Error::EmptyComposite);
        }
        for b in &barriers {
            b.validate()?;
        }
        Ok(CompositeBarrier { barriers })
    }

    pub fn barriers(&self) -> &[BarrierSpec] {
        &self.barriers
    }
}

/// Which case of the survival formula produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    StrikeAboveBarrier,
    BarrierAtOrAboveStrike,
    MertonDegenerate,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::StrikeAboveBarrier => "strike-above-barrier",
            Branch::BarrierAtOrAboveStrike => "barrier-at-or-above-strike",
            Branch::MertonDegenerate => "merton-degenerate",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalResult {
    pub probability: f64,
    pub effective_barrier: f64,
    pub branch: Branch,
}
