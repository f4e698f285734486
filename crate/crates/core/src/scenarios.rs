//! Collateralization sweeps.
//!
//! Each starting spread is turned into a target survival probability, the
//! firm value is calibrated so that the model at the first collateral
//! fraction reproduces it, and the collateral fraction is then raised along
//! a grid. A fraction `c` maps to a barrier `B = c * K` remargined every
//! `remargin_dt` years; `c = 0` is the uncollateralized case.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate_firm_value, CalibrationTarget, RootFindConfig};
use crate::credit::{spread_from_survival, survival_from_spread, table1_recovery_for, CreditQuote};
use crate::error::{Error, Result};
use crate::model::{BarrierSpec, FirmParams, DAILY};
use crate::survival::survival_probability;

/// Liabilities are the numeraire.
pub const STRIKE: f64 = 1.0;

/// Recovery used for spreads that do not appear in the reference table.
pub const FALLBACK_RECOVERY: f64 = 0.38;

pub const CSV_HEADER: &str = "starting_spread_bps,collateral_fraction,sigma,survival,equiv_spread_bps,delta_spread_bps";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VolSchedule {
    Fixed { sigma_fixed: f64 },
    /// Volatility rising linearly from `sigma_start` at the first collateral
    /// fraction to `sigma_end` at full collateralization.
    Sliding { sigma_start: f64, sigma_end: f64 },
}

impl VolSchedule {
    pub fn sigma_at(&self, fraction: f64, coll_start: f64) -> f64 {
        match *self {
            VolSchedule::Fixed { sigma_fixed } => sigma_fixed,
            VolSchedule::Sliding { sigma_start, sigma_end } => {
                if coll_start >= 1.0 {
                    return sigma_start;
                }
                sigma_start + (sigma_end - sigma_start) * (fraction - coll_start) / (1.0 - coll_start)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, s: f64| {
            if s.is_finite() && s > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("vol.{name} must be positive, got {s}")))
            }
        };
        match *self {
            VolSchedule::Fixed { sigma_fixed } => positive("sigma_fixed", sigma_fixed),
            VolSchedule::Sliding { sigma_start, sigma_end } => {
                positive("sigma_start", sigma_start)?;
                positive("sigma_end", sigma_end)?;
                if sigma_start > sigma_end {
                    return Err(Error::Config(format!(
                        "vol.sigma_start ({sigma_start}) must not exceed vol.sigma_end ({sigma_end})"
                    )));
                }
                Ok(())
            }
        }
    }
}

fn default_tenor() -> f64 {
    5.0
}
fn default_rate() -> f64 {
    0.02
}
fn default_coll_end() -> f64 {
    1.0
}
fn default_n_steps() -> usize {
    21
}
fn default_remargin_dt() -> f64 {
    DAILY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Identifies the sweep when several are run together.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub starting_spreads_bps: Vec<f64>,
    /// Recovery for every spread line. When absent each spread takes the
    /// reference-table recovery it appears with, else 38%.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovery: Option<f64>,
    #[serde(default = "default_tenor")]
    pub tenor: f64,
    #[serde(rename = "r", default = "default_rate")]
    pub rate: f64,
    #[serde(rename = "D", default)]
    pub dividend: f64,
    #[serde(default)]
    pub coll_start: f64,
    #[serde(default = "default_coll_end")]
    pub coll_end: f64,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    pub vol: VolSchedule,
    #[serde(default = "default_remargin_dt")]
    pub remargin_dt: f64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if self.starting_spreads_bps.is_empty() {
            return cfg("starting_spreads_bps must not be empty".into());
        }
        if let Some(s) = self.starting_spreads_bps.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return cfg(format!("starting_spreads_bps must be positive, got {s}"));
        }
        if let Some(r) = self.recovery {
            if !(0.0..1.0).contains(&r) {
                return cfg(format!("recovery must lie in [0, 1), got {r}"));
            }
        }
        if !(self.tenor.is_finite() && self.tenor > 0.0) {
            return cfg(format!("tenor must be positive, got {}", self.tenor));
        }
        if !self.rate.is_finite() || !self.dividend.is_finite() {
            return cfg("r and D must be finite".into());
        }
        if !(0.0..=1.0).contains(&self.coll_start) || !(0.0..=1.0).contains(&self.coll_end) {
            return cfg(format!(
                "coll_start and coll_end must lie in [0, 1], got {} and {}",
                self.coll_start, self.coll_end
            ));
        }
        if self.coll_end < self.coll_start {
            return cfg(format!(
                "coll_end ({}) must not be below coll_start ({})",
                self.coll_end, self.coll_start
            ));
        }
        if self.n_steps < 2 {
            return cfg(format!("n_steps must be at least 2, got {}", self.n_steps));
        }
        if !(self.remargin_dt.is_finite() && self.remargin_dt >= 0.0) {
            return cfg(format!("remargin_dt must be non-negative, got {}", self.remargin_dt));
        }
        self.vol.validate()
    }

    /// Collateral fractions visited. Collapses to a single point when
    /// `coll_start == coll_end`.
    pub fn grid(&self) -> Vec<f64> {
        if self.coll_start == self.coll_end {
            return vec![self.coll_start];
        }
        let span = self.coll_end - self.coll_start;
        let last = self.n_steps - 1;
        (0..self.n_steps)
            .map(|i| {
                if i == last {
                    self.coll_end
                } else {
                    self.coll_start + span * i as f64 / last as f64
                }
            })
            .collect()
    }

    pub fn recovery_for(&self, spread_bps: f64) -> f64 {
        self.recovery
            .or_else(|| table1_recovery_for(spread_bps))
            .unwrap_or(FALLBACK_RECOVERY)
    }

    fn barrier_at(&self, fraction: f64) -> BarrierSpec {
        if fraction == 0.0 {
            BarrierSpec::none()
        } else {
            BarrierSpec::discrete(fraction * STRIKE, self.remargin_dt)
        }
    }
}

/// Parses one sweep configuration document.
pub fn load_config(text: &str) -> Result<SweepConfig> {
    let config: SweepConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PlanDocument {
    Many(Vec<serde_json::Value>),
    One(serde_json::Value),
}

/// Parses a document holding either one sweep or an array of sweeps.
pub fn load_plan(text: &str) -> Result<Vec<SweepConfig>> {
    let doc: PlanDocument = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let values = match doc {
        PlanDocument::Many(v) => v,
        PlanDocument::One(v) => vec![v],
    };
    if values.is_empty() {
        return Err(Error::Config("plan contains no sweeps".into()));
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let config: SweepConfig =
                serde_json::from_value(v).map_err(|e| Error::Config(format!("sweep #{i}: {e}")))?;
            config
                .validate()
                .map_err(|e| Error::Config(format!("sweep #{i}: {e}")))?;
            Ok(config)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub collateral_fraction: f64,
    pub sigma: f64,
    pub survival: f64,
    pub equiv_spread_bps: f64,
    pub delta_spread_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepLine {
    pub starting_spread_bps: f64,
    pub recovery: f64,
    pub firm_value: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepLine {
    pub fn final_delta(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.delta_spread_bps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub label: Option<String>,
    pub lines: Vec<SweepLine>,
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let grid = config.grid();
    let lines = config
        .starting_spreads_bps
        .par_iter()
        .map(|&spread| {
            run_line(config, &grid, spread).map_err(|e| Error::Calibration {
                spread_bps: spread,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        label: config.label.clone(),
        lines,
    })
}

fn run_line(config: &SweepConfig, grid: &[f64], spread: f64) -> Result<SweepLine> {
    let recovery = config.recovery_for(spread);
    let target = survival_from_spread(&CreditQuote::new(spread, recovery, config.tenor)?)?;
    let start = grid[0];
    let sigma0 = config.vol.sigma_at(start, config.coll_start);

    let calib = CalibrationTarget::firm_value(target, STRIKE, config.tenor, config.rate, config.dividend, sigma0)
        .with_barrier(config.barrier_at(start));
    let firm_value = calibrate_firm_value(&calib, &RootFindConfig::default())?;
    let base = FirmParams::new(firm_value, STRIKE, config.tenor, config.rate, config.dividend, sigma0)?;

    let mut rows = Vec::with_capacity(grid.len());
    let mut anchor = None;
    for &c in grid {
        let sigma = config.vol.sigma_at(c, config.coll_start);
        let survival = survival_probability(&base.with_sigma(sigma), &config.barrier_at(c))?.probability;
        let equiv = spread_from_survival(survival, recovery, config.tenor)?;
        let anchor = *anchor.get_or_insert(equiv);
        rows.push(SweepRow {
            collateral_fraction: c,
            sigma,
            survival,
            equiv_spread_bps: equiv,
            delta_spread_bps: equiv - anchor,
        });
    }
    Ok(SweepLine {
        starting_spread_bps: spread,
        recovery,
        firm_value,
        rows,
    })
}

/// Full-precision (17 significant digit) rendering.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV rendering. A leading `sweep` column is added when more than one
/// sweep is written, so rows stay attributable.
pub fn to_csv(results: &[SweepResult]) -> String {
    let labelled = results.len() > 1;
    let mut out = String::new();
    if labelled {
        out.push_str("sweep,");
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, result) in results.iter().enumerate() {
        let label = sweep_label(result, i);
        for line in &result.lines {
            for row in &line.rows {
                if labelled {
                    out.push_str(&label);
                    out.push(',');
                }
                let fields = [
                    fmt_full(line.starting_spread_bps),
                    fmt_full(row.collateral_fraction),
                    fmt_full(row.sigma),
                    fmt_full(row.survival),
                    fmt_full(row.equiv_spread_bps),
                    fmt_full(row.delta_spread_bps),
                ];
                out.push_str(&fields.join(","));
                out.push('\n');
            }
        }
    }
    out
}

/// One JSON object per row, mirroring the CSV columns.
pub fn to_json_lines(results: &[SweepResult]) -> String {
    let labelled = results.len() > 1;
    let mut out = String::new();
    for (i, result) in results.iter().enumerate() {
        let label = sweep_label(result, i);
        for line in &result.lines {
            for row in &line.rows {
                let mut obj = serde_json::Map::new();
                if labelled {
                    obj.insert("sweep".into(), label.clone().into());
                }
                obj.insert("starting_spread_bps".into(), line.starting_spread_bps.into());
                obj.insert("collateral_fraction".into(), row.collateral_fraction.into());
                obj.insert("sigma".into(), row.sigma.into());
                obj.insert("survival".into(), row.survival.into());
                obj.insert("equiv_spread_bps".into(), row.equiv_spread_bps.into());
                obj.insert("delta_spread_bps".into(), row.delta_spread_bps.into());
                out.push_str(&serde_json::Value::Object(obj).to_string());
                out.push('\n');
            }
        }
    }
    out
}

fn sweep_label(result: &SweepResult, index: usize) -> String {
    result.label.clone().unwrap_or_else(|| format!("sweep{index}"))
}
