//! Monte Carlo survival estimator used to check the closed forms.
//!
//! Firm value is simulated exactly (log-normal increments) on the union of
//! all monitoring dates plus the horizon. Discrete schedules are checked on
//! their own dates only. Continuous schedules are checked on every simulated
//! date and, with `bridge` on, through the Brownian-bridge probability of
//! crossing between dates, which makes them exact for any grid.
//!
//! Each path owns a ChaCha stream keyed by the seed and indexed by the path
//! number, so the estimate does not depend on how paths are split across
//! worker threads, and two configurations with the same seed see the same
//! normal draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FirmParams;

/// Paths handed to one worker at a time.
pub const CHUNK_SIZE: u64 = 4096;

pub const DEFAULT_PATHS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitoring {
    /// Sorted observation dates in `(0, T]`.
    Discrete(Vec<f64>),
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierSchedule {
    pub level: f64,
    pub monitoring: Monitoring,
}

impl BarrierSchedule {
    /// Observations every `interval` years up to the horizon; `interval == 0`
    /// gives continuous monitoring.
    pub fn every(level: f64, interval: f64, horizon: f64) -> Self {
        if interval == 0.0 {
            return Self::continuous(level);
        }
        let n = (horizon / interval + 1e-9).floor() as usize;
        let dates = (1..=n).map(|k| k as f64 * interval).collect();
        BarrierSchedule {
            level,
            monitoring: Monitoring::Discrete(dates),
        }
    }

    pub fn continuous(level: f64) -> Self {
        BarrierSchedule {
            level,
            monitoring: Monitoring::Continuous,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_paths: u64,
    pub seed: u64,
    pub schedules: Vec<BarrierSchedule>,
    pub bridge: bool,
}

impl McConfig {
    pub fn new(n_paths: u64, seed: u64) -> Self {
        McConfig {
            n_paths,
            seed,
            schedules: Vec::new(),
            bridge: false,
        }
    }

    pub fn with_schedule(mut self, schedule: BarrierSchedule) -> Self {
        self.schedules.push(schedule);
        self
    }

    pub fn with_bridge(mut self, bridge: bool) -> Self {
        self.bridge = bridge;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub p_hat: f64,
    pub std_err: f64,
    pub n_paths: u64,
}

impl McEstimate {
    fn from_counts(survivors: u64, n_paths: u64) -> Self {
        let n = n_paths as f64;
        let p_hat = survivors as f64 / n;
        McEstimate {
            p_hat,
            std_err: (p_hat * (1.0 - p_hat) / n).sqrt(),
            n_paths,
        }
    }
}

/// One simulation step ending at a grid date.
#[derive(Debug, Clone, Copy)]
struct Step {
    drift: f64,
    vol: f64,
    /// `sigma^2 * dt`, for the bridge crossing probability.
    var: f64,
    /// Log of the highest barrier observed at the end of this step.
    threshold: f64,
}

#[derive(Debug)]
struct Plan {
    start: f64,
    steps: Vec<Step>,
    log_strike: f64,
    /// Log of the highest continuously monitored barrier, if any.
    continuous: Option<f64>,
    bridge: bool,
}

fn ln_level(level: f64) -> f64 {
    if level > 0.0 {
        level.ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn build_plan(params: &FirmParams, config: &McConfig) -> Result<Plan> {
    params.validate()?;
    if config.n_paths == 0 {
        return Err(Error::invalid("n_paths", "must be at least 1"));
    }
    let horizon = params.horizon;
    let tol = 1e-12 * horizon.max(1.0);

    let mut dates = vec![horizon];
    let mut continuous: Option<f64> = None;
    for sched in &config.schedules {
        if !(sched.level.is_finite() && sched.level >= 0.0) {
            return Err(Error::invalid("schedule", format!("barrier level {} must be non-negative", sched.level)));
        }
        match &sched.monitoring {
            Monitoring::Continuous => {
                let l = ln_level(sched.level);
                continuous = Some(continuous.map_or(l, |c| c.max(l)));
            }
            Monitoring::Discrete(grid) => {
                if grid.is_empty() {
                    return Err(Error::invalid("schedule", "discrete grid is empty"));
                }
                if grid.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid("schedule", "grid must be strictly increasing"));
                }
                if !(grid[0] > 0.0) || grid[grid.len() - 1] > horizon + tol {
                    return Err(Error::invalid("schedule", format!("grid dates must lie in (0, {horizon}]")));
                }
                dates.extend_from_slice(grid);
            }
        }
    }
    dates.sort_by(|a, b| a.total_cmp(b));
    dates.dedup_by(|b, a| (*b - *a).abs() <= tol);
    // Snap the last date onto the horizon exactly.
    *dates.last_mut().expect("horizon present") = horizon;

    let cont_threshold = continuous.unwrap_or(f64::NEG_INFINITY);
    let mut thresholds = vec![cont_threshold; dates.len()];
    for sched in &config.schedules {
        if let Monitoring::Discrete(grid) = &sched.monitoring {
            let l = ln_level(sched.level);
            for &d in grid {
                let idx = dates.partition_point(|&x| x < d - tol);
                thresholds[idx] = thresholds[idx].max(l);
            }
        }
    }

    let mu = params.rate - params.dividend - 0.5 * params.sigma * params.sigma;
    let mut prev = 0.0;
    let steps = dates
        .iter()
        .zip(&thresholds)
        .map(|(&d, &threshold)| {
            let dt = d - prev;
            prev = d;
            Step {
                drift: mu * dt,
                vol: params.sigma * dt.sqrt(),
                var: params.sigma * params.sigma * dt,
                threshold,
            }
        })
        .collect();

    Ok(Plan {
        start: params.firm_value.ln(),
        steps,
        log_strike: ln_level(params.strike),
        continuous,
        bridge: config.bridge,
    })
}

impl Plan {
    fn path_survives(&self, rng: &mut ChaCha8Rng) -> bool {
        let mut x = self.start;
        if let Some(c) = self.continuous {
            if x <= c {
                return false;
            }
        }
        for step in &self.steps {
            let z: f64 = rng.sample(StandardNormal);
            // Drawn whenever a continuous barrier exists so that bridge on/off
            // runs consume identical streams.
            let u: f64 = match self.continuous {
                Some(_) => rng.random(),
                None => 0.0,
            };
            let next = x + step.drift + step.vol * z;
            if next <= step.threshold {
                return false;
            }
            if self.bridge {
                if let Some(c) = self.continuous {
                    let p_cross = (-2.0 * (x - c) * (next - c) / step.var).exp();
                    if u < p_cross {
                        return false;
                    }
                }
            }
            x = next;
        }
        x > self.log_strike
    }
}

/// Estimated probability that the firm survives every barrier and ends
/// above the strike.
pub fn simulate_survival(params: &FirmParams, config: &McConfig) -> Result<McEstimate> {
    let plan = build_plan(params, config)?;
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let n_chunks = config.n_paths.div_ceil(CHUNK_SIZE);

    let survivors: u64 = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let first = chunk * CHUNK_SIZE;
            let last = (first + CHUNK_SIZE).min(config.n_paths);
            let mut alive = 0u64;
            for path in first..last {
                let mut rng = base.clone();
                rng.set_stream(path);
                if plan.path_survives(&mut rng) {
                    alive += 1;
                }
            }
            alive
        })
        .sum();

    Ok(McEstimate::from_counts(survivors, config.n_paths))
}
