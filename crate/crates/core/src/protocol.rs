//! One coherence block of the transmission protocol, Monte Carlo sweeps and
//! reference rates.
//!
//! Seed derivation: a trial seed is `mix(mix(base_seed, axis_index),
//! trial_index)` where `mix(a, b) = splitmix64(a ^ splitmix64(b))` and
//! `axis_index` is the position of the swept parameter in [`SweepAxis::ALL`].
//! Each trial then owns four ChaCha8 streams seeded with `mix(trial_seed, k)`:
//! k = 0 channel gains, 1 random beams, 2 sensing symbols and noise,
//! 3 training feedback noise. All points of a sweep, and every configuration
//! swept along the same axis, therefore see the same random draws for the
//! same trial index.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::beamforming::{
    bisection_training, isac_combiner, isac_phase_beam, pc_phase_beams, random_pc_beam,
    random_phase_beam, upper_bound_pc_rate, BeamGeometry, PhaseTuple, TrainingTrace,
};
use crate::channel::{synth_channels, ChannelSet};
use crate::config::{FailurePolicy, Feedback, ProtocolMode, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geometry::Position;
use crate::numerics::CVector;
use crate::sensing::{sense_location, LocationEstimate, SensingContext};
use crate::signal::{
    expected_received_power, measure_power, pc_surface_gains, rate_from_gain, rate_isac, rate_pc,
    simulate_sensing_snapshots, RadioParams,
};

/// Slot allocation of a coherence block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeBudget {
    /// T, all slots of the block.
    pub total: usize,
    /// T1, slots of the ISAC period.
    pub isac: usize,
    /// Slots of the first ISAC time block.
    pub tau1: usize,
}

impl TimeBudget {
    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.tau1 && self.tau1 < self.isac && self.isac < self.total) {
            return Err(Error::InvalidConfig(format!(
                "budget must satisfy 1 <= tau1 < T1 < T (tau1 = {}, T1 = {}, T = {})",
                self.tau1, self.isac, self.total
            )));
        }
        Ok(())
    }

    pub fn tau2(&self) -> usize {
        self.isac - self.tau1
    }

    pub fn pc(&self) -> usize {
        self.total - self.isac
    }
}

/// splitmix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn mix_seed(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

pub fn trial_seed(base_seed: u64, axis_index: usize, trial_index: usize) -> u64 {
    mix_seed(mix_seed(base_seed, axis_index as u64), trial_index as u64)
}

/// Independent random streams of one trial.
#[derive(Debug, Clone)]
pub struct TrialStreams {
    pub channel: ChaCha8Rng,
    pub beams: ChaCha8Rng,
    pub sensing: ChaCha8Rng,
    pub feedback: ChaCha8Rng,
}

impl TrialStreams {
    pub fn new(seed: u64) -> Self {
        let s = |k| ChaCha8Rng::seed_from_u64(mix_seed(seed, k));
        Self {
            channel: s(0),
            beams: s(1),
            sensing: s(2),
            feedback: s(3),
        }
    }
}

/// Channel realization of a trial, identical to the one used by
/// [`run_coherence_block`] with the same seed.
pub fn trial_channels(cfg: &ScenarioConfig, seed: u64) -> Result<ChannelSet> {
    synth_channels(cfg, &mut TrialStreams::new(seed).channel)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SensingOutcome {
    Estimated {
        estimate: LocationEstimate,
        error_m: f64,
    },
    /// True location injected instead of sensing.
    Oracle {
        position: Position,
    },
    Failed {
        reason: String,
    },
    NotRun,
}

impl SensingOutcome {
    pub fn position(&self) -> Option<Position> {
        match self {
            SensingOutcome::Estimated { estimate, .. } => Some(estimate.position),
            SensingOutcome::Oracle { position } => Some(*position),
            _ => None,
        }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, SensingOutcome::Failed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockResult {
    pub seed: u64,
    pub mode: ProtocolMode,
    pub budget: TimeBudget,
    pub loc_block1: SensingOutcome,
    pub loc_block2: SensingOutcome,
    pub training: Option<TrainingTrace>,
    /// Per-slot rate over all T slots, bits/s/Hz.
    pub rates: Vec<f64>,
    pub avg_isac: f64,
    pub avg_pc: f64,
    pub avg_total: f64,
    /// Rate of each slot of the first and second ISAC time blocks.
    pub rate_block1: f64,
    pub rate_block2: f64,
    /// Rate with the trained tuple, used after the probe slots.
    pub exploit_rate: f64,
    pub upper_bound_pc: f64,
    pub probe_slots: usize,
    pub exploit_slots: usize,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

struct PcPeriod {
    rates: Vec<f64>,
    training: Option<TrainingTrace>,
    exploit_rate: f64,
    probe_slots: usize,
}

fn composite_gain(gains: &[Complex64; 3], t: PhaseTuple) -> Complex64 {
    gains[0]
        + gains[1] * Complex64::from_polar(1.0, t.phi2)
        + gains[2] * Complex64::from_polar(1.0, t.phi3)
}

#[allow(clippy::too_many_arguments)]
fn run_pc_period(
    cfg: &ScenarioConfig,
    ch: &ChannelSet,
    w: &CVector<f64>,
    geom: &BeamGeometry,
    estimate: Option<Position>,
    radio: &RadioParams,
    slots: usize,
    streams: &mut TrialStreams,
) -> Result<PcPeriod> {
    let base = match estimate.map(|p| pc_phase_beams(&p, geom, PhaseTuple::default())) {
        Some(Ok(b)) => b,
        _ => random_pc_beam(&geom.specs, &mut streams.beams),
    };
    let gains = pc_surface_gains(w, &base.concat(), ch);
    let t = &cfg.training;
    let per_probe = t.slots_per_probe;
    let max_rounds = t.max_rounds.min(slots / (5 * per_probe));
    let mut rates = Vec::with_capacity(slots);
    let mut training = None;
    let mut final_tuple = PhaseTuple::default();
    if max_rounds > 0 {
        let feedback = &mut streams.feedback;
        let epsilon = t.epsilon_over_noise * radio.noise_power;
        let trace = bisection_training(
            |tuple| {
                let g = composite_gain(&gains, tuple);
                let r = rate_from_gain(g, radio);
                rates.extend(std::iter::repeat_n(r, per_probe));
                match t.feedback {
                    Feedback::Noisy => measure_power(g, radio, per_probe, feedback),
                    Feedback::Noiseless => expected_received_power(g, radio),
                }
            },
            epsilon,
            max_rounds,
        )?;
        final_tuple = trace.final_tuple;
        training = Some(trace);
    }
    let probe_slots = rates.len();
    let exploit_rate = rate_from_gain(composite_gain(&gains, final_tuple), radio);
    rates.resize(slots, exploit_rate);
    Ok(PcPeriod {
        rates,
        training,
        exploit_rate,
        probe_slots,
    })
}

/// Runs one coherence block of the configured protocol.
pub fn run_coherence_block(cfg: &ScenarioConfig, seed: u64) -> Result<BlockResult> {
    let budget = cfg.time_budget();
    budget.validate()?;
    let mut streams = TrialStreams::new(seed);
    let ch = synth_channels(cfg, &mut streams.channel)?;
    let radio = cfg.radio_params();
    let geom = BeamGeometry::from_config(cfg);
    let ctx = SensingContext::from_config(cfg)?;
    let g = &cfg.geometry;
    let truth = g.user;
    let w = isac_combiner(&g.bs, &g.irs1, geom.bs_antennas, geom.spacing_over_lambda)?;
    let m1 = geom.specs[0].len();

    let sense = |theta: &CVector<f64>, slots: usize, rng: &mut ChaCha8Rng| -> SensingOutcome {
        if cfg.run.oracle_location {
            return SensingOutcome::Oracle { position: truth };
        }
        let located = simulate_sensing_snapshots(&ch, theta, &radio, slots, rng)
            .and_then(|(b2, b3)| sense_location(&b2, &b3, &ctx));
        match located {
            Ok(estimate) => SensingOutcome::Estimated {
                error_m: estimate.position.distance(&truth),
                estimate,
            },
            Err(e) => SensingOutcome::Failed {
                reason: e.to_string(),
            },
        }
    };

    let mut rates = Vec::with_capacity(budget.total);
    let theta1 = random_phase_beam(m1, &mut streams.beams);
    let (loc_block1, loc_block2, rate_block1, rate_block2, pc_estimate) = match cfg.run.protocol {
        ProtocolMode::Isac => {
            let r1 = rate_isac(&w, &theta1, &ch, &radio)?;
            let loc1 = sense(&theta1, budget.tau1, &mut streams.sensing);
            let designed = loc1.position().and_then(|p| {
                isac_phase_beam(&p, &g.irs1, &g.bs, &geom.specs[0], geom.spacing_over_lambda).ok()
            });
            let theta2 = match (designed, cfg.run.sensing_failure) {
                (Some(t), _) => t,
                (None, FailurePolicy::KeepPrevious) => theta1.clone(),
                (None, FailurePolicy::RandomBeam) => random_phase_beam(m1, &mut streams.beams),
            };
            let r2 = rate_isac(&w, &theta2, &ch, &radio)?;
            let loc2 = sense(&theta2, budget.tau2(), &mut streams.sensing);
            rates.extend(std::iter::repeat_n(r1, budget.tau1));
            rates.extend(std::iter::repeat_n(r2, budget.tau2()));
            let est = loc2.position().or_else(|| loc1.position());
            (loc1, loc2, r1, r2, est)
        }
        ProtocolMode::Benchmark => {
            let loc1 = sense(&theta1, budget.isac, &mut streams.sensing);
            rates.extend(std::iter::repeat_n(0.0, budget.isac));
            let est = loc1.position();
            (loc1, SensingOutcome::NotRun, 0.0, 0.0, est)
        }
    };

    let pc = run_pc_period(
        cfg,
        &ch,
        &w,
        &geom,
        pc_estimate,
        &radio,
        budget.pc(),
        &mut streams,
    )?;
    rates.extend_from_slice(&pc.rates);
    debug_assert_eq!(rates.len(), budget.total);
    let t1 = budget.isac;
    Ok(BlockResult {
        seed,
        mode: cfg.run.protocol,
        budget,
        loc_block1,
        loc_block2,
        training: pc.training,
        avg_isac: mean(&rates[..t1]),
        avg_pc: mean(&rates[t1..]),
        avg_total: mean(&rates),
        rates,
        rate_block1,
        rate_block2,
        exploit_rate: pc.exploit_rate,
        upper_bound_pc: upper_bound_pc_rate(&ch, &w, &radio),
        probe_slots: pc.probe_slots,
        exploit_slots: budget.pc() - pc.probe_slots,
    })
}

/// RMSE with its delta-method standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmseSummary {
    pub rmse: f64,
    pub stderr: f64,
    /// Estimates entering the mean.
    pub used: usize,
    pub failures: usize,
}

/// Root mean squared position error. Failed estimates (`None`) are excluded,
/// or counted with error `penalty` when one is given.
pub fn rmse(
    estimates: &[Option<Position>],
    truth: &Position,
    penalty: Option<f64>,
) -> Result<RmseSummary> {
    if estimates.is_empty() {
        return Err(Error::InvalidInput("rmse of an empty estimate list".into()));
    }
    let failures = estimates.iter().filter(|e| e.is_none()).count();
    let sq: Vec<f64> = estimates
        .iter()
        .filter_map(|e| match e {
            Some(p) => Some(p.distance(truth).powi(2)),
            None => penalty.map(|d| d * d),
        })
        .collect();
    if sq.is_empty() {
        return Err(Error::InvalidInput("every estimate failed".into()));
    }
    let (mse, se) = mean_and_stderr(&sq);
    let rmse = mse.sqrt();
    let stderr = if rmse > 0.0 { se / (2.0 * rmse) } else { 0.0 };
    Ok(RmseSummary {
        rmse,
        stderr,
        used: sq.len(),
        failures,
    })
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Transmit power, dBm.
    TxPower,
    /// Slots of the first ISAC time block.
    Tau1,
    /// Elements per semi-passive surface (a square number).
    MSemi,
    /// Elements of the passive surface (a square number).
    MPassive,
    /// Horizontal user distance from sub-IRS 2 along x, meters.
    UserDistance,
    /// T1 / T; keeps the template's tau1 / T1 ratio.
    T1OverT,
    /// tau1 / T1.
    Tau1OverT1,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 7] = [
        SweepAxis::TxPower,
        SweepAxis::Tau1,
        SweepAxis::MSemi,
        SweepAxis::MPassive,
        SweepAxis::UserDistance,
        SweepAxis::T1OverT,
        SweepAxis::Tau1OverT1,
    ];

    /// Position in [`SweepAxis::ALL`], used for seed derivation.
    pub fn index(&self) -> usize {
        SweepAxis::ALL
            .iter()
            .position(|a| a == self)
            .expect("listed axis")
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::TxPower => "tx_power",
            SweepAxis::Tau1 => "tau1",
            SweepAxis::MSemi => "m_semi",
            SweepAxis::MPassive => "m_passive",
            SweepAxis::UserDistance => "user_distance",
            SweepAxis::T1OverT => "t1_over_t",
            SweepAxis::Tau1OverT1 => "tau1_over_t1",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown sweep axis '{s}'")))
    }
}

fn as_count(axis: SweepAxis, value: f64) -> Result<usize> {
    if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(Error::InvalidInput(format!(
            "{axis} value {value} must be a nonnegative integer"
        )))
    }
}

fn square_side(axis: SweepAxis, value: f64) -> Result<usize> {
    let m = as_count(axis, value)?;
    let side = (m as f64).sqrt().round() as usize;
    if side * side != m || side == 0 {
        return Err(Error::InvalidInput(format!(
            "{axis} value {m} is not a perfect square"
        )));
    }
    Ok(side)
}

fn ratio_slots(axis: SweepAxis, ratio: f64, of: usize) -> Result<usize> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidInput(format!(
            "{axis} value {ratio} must lie in (0, 1)"
        )));
    }
    Ok(((ratio * of as f64).round() as usize).max(1))
}

/// Applies one sweep value to a copy of the template and validates it.
pub fn apply_axis(
    template: &ScenarioConfig,
    axis: SweepAxis,
    value: f64,
) -> Result<ScenarioConfig> {
    let mut cfg = template.clone();
    match axis {
        SweepAxis::TxPower => cfg.radio.tx_power_dbm = value,
        SweepAxis::Tau1 => cfg.budget.tau1 = as_count(axis, value)?,
        SweepAxis::MSemi => {
            let s = square_side(axis, value)?;
            cfg.arrays.irs2 = [s, s];
            cfg.arrays.irs3 = [s, s];
        }
        SweepAxis::MPassive => {
            let s = square_side(axis, value)?;
            cfg.arrays.irs1 = [s, s];
        }
        SweepAxis::UserDistance => {
            if !(value > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{axis} value {value} must be positive"
                )));
            }
            cfg.geometry.user.x = cfg.geometry.irs2.x + value;
        }
        SweepAxis::T1OverT => {
            let share = template.budget.tau1 as f64 / template.budget.isac as f64;
            cfg.budget.isac = ratio_slots(axis, value, cfg.budget.total)?;
            cfg.budget.tau1 = ((share * cfg.budget.isac as f64).round() as usize).max(1);
        }
        SweepAxis::Tau1OverT1 => cfg.budget.tau1 = ratio_slots(axis, value, cfg.budget.isac)?,
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
    /// Samples behind the value.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub trials: usize,
    pub metrics: Vec<MetricSummary>,
}

impl SweepPoint {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.name == name)
    }

    /// Value of a metric; NaN when it is absent.
    pub fn get(&self, name: &str) -> f64 {
        self.metric(name).map_or(f64::NAN, |m| m.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub base_seed: u64,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn series(&self, metric: &str) -> Vec<f64> {
        self.points.iter().map(|p| p.get(metric)).collect()
    }
}

/// Metric names emitted per sweep point.
pub mod metric {
    pub const RMSE_BLOCK1: &str = "rmse_block1_m";
    pub const RMSE_BLOCK2: &str = "rmse_block2_m";
    pub const FAILURES_BLOCK1: &str = "sensing_failures_block1";
    pub const RATE_BLOCK1: &str = "rate_block1";
    pub const RATE_BLOCK2: &str = "rate_block2";
    pub const AVG_ISAC: &str = "avg_rate_isac";
    pub const AVG_PC: &str = "avg_rate_pc";
    pub const AVG_TOTAL: &str = "avg_rate_total";
    pub const EXPLOIT_PC: &str = "exploit_rate_pc";
    pub const UPPER_BOUND_PC: &str = "upper_bound_pc";
}

fn summarize(cfg: &ScenarioConfig, blocks: &[BlockResult]) -> Vec<MetricSummary> {
    let mut out = Vec::new();
    let truth = cfg.geometry.user;
    let penalty = cfg.run.rmse_failure_penalty_m;
    let mut push_rmse = |name: &str, outcomes: Vec<&SensingOutcome>| {
        if outcomes.iter().all(|o| matches!(o, SensingOutcome::NotRun)) {
            return;
        }
        let est: Vec<Option<Position>> = outcomes.iter().map(|o| o.position()).collect();
        let s = rmse(&est, &truth, penalty).unwrap_or(RmseSummary {
            rmse: f64::NAN,
            stderr: f64::NAN,
            used: 0,
            failures: est.len(),
        });
        out.push(MetricSummary {
            name: name.into(),
            value: s.rmse,
            stderr: s.stderr,
            count: s.used,
        });
    };
    push_rmse(
        metric::RMSE_BLOCK1,
        blocks.iter().map(|b| &b.loc_block1).collect(),
    );
    push_rmse(
        metric::RMSE_BLOCK2,
        blocks.iter().map(|b| &b.loc_block2).collect(),
    );
    out.push(MetricSummary {
        name: metric::FAILURES_BLOCK1.into(),
        value: blocks.iter().filter(|b| b.loc_block1.is_failed()).count() as f64,
        stderr: 0.0,
        count: blocks.len(),
    });
    let mut push_mean = |name: &str, f: fn(&BlockResult) -> f64| {
        let xs: Vec<f64> = blocks.iter().map(f).collect();
        let (m, se) = mean_and_stderr(&xs);
        out.push(MetricSummary {
            name: name.into(),
            value: m,
            stderr: se,
            count: xs.len(),
        });
    };
    push_mean(metric::RATE_BLOCK1, |b| b.rate_block1);
    push_mean(metric::RATE_BLOCK2, |b| b.rate_block2);
    push_mean(metric::AVG_ISAC, |b| b.avg_isac);
    push_mean(metric::AVG_PC, |b| b.avg_pc);
    push_mean(metric::AVG_TOTAL, |b| b.avg_total);
    push_mean(metric::EXPLOIT_PC, |b| b.exploit_rate);
    push_mean(metric::UPPER_BOUND_PC, |b| b.upper_bound_pc);
    out
}

/// Runs `trials` independent blocks per point, in parallel, reducing in
/// trial order.
pub fn run_trials(
    cfg: &ScenarioConfig,
    axis_index: usize,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<BlockResult>> {
    (0..trials)
        .into_par_iter()
        .map(|t| run_coherence_block(cfg, trial_seed(base_seed, axis_index, t)))
        .collect()
}

pub fn monte_carlo_sweep(
    template: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    trials: usize,
    base_seed: u64,
) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::InvalidInput("sweep needs at least one value".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidInput("sweep needs at least one trial".into()));
    }
    let configs = values
        .iter()
        .map(|&v| apply_axis(template, axis, v))
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(values.len());
    for (cfg, &value) in configs.iter().zip(values) {
        let blocks = run_trials(cfg, axis.index(), trials, base_seed)?;
        points.push(SweepPoint {
            value,
            trials,
            metrics: summarize(cfg, &blocks),
        });
    }
    Ok(SweepResult {
        axis,
        base_seed,
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkMode {
    /// ISAC-period rate with beams designed from the true location.
    OptimalIsac,
    /// ISAC-period rate averaged over random sub-IRS 1 phases.
    RandomIsac,
    /// PC-period rate at the co-phased amplitude bound.
    UpperBoundPc,
    /// PC-period rate averaged over random phases on all surfaces.
    RandomPc,
}

pub const RANDOM_BENCHMARK_DRAWS: usize = 100;

/// Reference rates for one channel realization.
pub fn benchmark_rates<R: rand::Rng + ?Sized>(
    cfg: &ScenarioConfig,
    ch: &ChannelSet,
    mode: BenchmarkMode,
    rng: &mut R,
) -> Result<f64> {
    let radio = cfg.radio_params();
    let geom = BeamGeometry::from_config(cfg);
    let g = &cfg.geometry;
    let w = isac_combiner(&g.bs, &g.irs1, geom.bs_antennas, geom.spacing_over_lambda)?;
    let m1 = geom.specs[0].len();
    match mode {
        BenchmarkMode::OptimalIsac => {
            let xi = isac_phase_beam(
                &g.user,
                &g.irs1,
                &g.bs,
                &geom.specs[0],
                geom.spacing_over_lambda,
            )?;
            rate_isac(&w, &xi, ch, &radio)
        }
        BenchmarkMode::RandomIsac => {
            let mut total = 0.0;
            for _ in 0..RANDOM_BENCHMARK_DRAWS {
                total += rate_isac(&w, &random_phase_beam(m1, rng), ch, &radio)?;
            }
            Ok(total / RANDOM_BENCHMARK_DRAWS as f64)
        }
        BenchmarkMode::UpperBoundPc => Ok(upper_bound_pc_rate(ch, &w, &radio)),
        BenchmarkMode::RandomPc => {
            let mut total = 0.0;
            for _ in 0..RANDOM_BENCHMARK_DRAWS {
                total += rate_pc(&w, &random_pc_beam(&geom.specs, rng).concat(), ch, &radio)?;
            }
            Ok(total / RANDOM_BENCHMARK_DRAWS as f64)
        }
    }
}
