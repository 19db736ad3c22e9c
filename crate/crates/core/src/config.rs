//! Scenario configuration: geometry, arrays, radio, time budget, training
//! and run settings. Absent TOML fields take the defaults below.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{ArraySpec, PathGainModel};
use crate::error::{Error, Result};
use crate::geometry::{Position, HALF_WAVELENGTH};
use crate::numerics::JacobiOptions;
use crate::protocol::TimeBudget;
use crate::signal::RadioParams;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub bs: Position,
    pub irs1: Position,
    pub irs2: Position,
    pub irs3: Position,
    pub user: Position,
    pub spacing_over_lambda: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            bs: Position::new(-50.0, 47.0, 20.0),
            irs1: Position::new(0.0, 50.0, 5.0),
            irs2: Position::new(0.0, 47.0, 7.0),
            irs3: Position::new(0.0, 53.0, 8.0),
            user: Position::new(6.0, 47.0, 0.0),
            spacing_over_lambda: HALF_WAVELENGTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub bs_antennas: usize,
    /// `[M_y, M_z]` of each sub-IRS.
    pub irs1: [usize; 2],
    pub irs2: [usize; 2],
    pub irs3: [usize; 2],
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            bs_antennas: 8,
            irs1: [16, 16],
            irs2: [4, 4],
            irs3: [4, 4],
        }
    }
}

impl ArrayConfig {
    pub fn bs_spec(&self) -> ArraySpec {
        ArraySpec::ula(self.bs_antennas)
    }

    pub fn irs_specs(&self) -> [ArraySpec; 3] {
        [self.irs1, self.irs2, self.irs3].map(|[ny, nz]| ArraySpec::ura(ny, nz))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossConfig {
    pub ref_loss_db: f64,
    pub i2b_exponent: f64,
    pub u2i_exponent: f64,
    pub i2i_exponent: f64,
}

impl Default for PathLossConfig {
    fn default() -> Self {
        Self {
            ref_loss_db: 30.0,
            i2b_exponent: 2.3,
            u2i_exponent: 2.2,
            i2i_exponent: 2.1,
        }
    }
}

impl PathLossConfig {
    pub fn i2b(&self) -> PathGainModel {
        PathGainModel {
            ref_loss_db: self.ref_loss_db,
            exponent: self.i2b_exponent,
        }
    }

    pub fn u2i(&self) -> PathGainModel {
        PathGainModel {
            ref_loss_db: self.ref_loss_db,
            exponent: self.u2i_exponent,
        }
    }

    pub fn i2i(&self) -> PathGainModel {
        PathGainModel {
            ref_loss_db: self.ref_loss_db,
            exponent: self.i2i_exponent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub tx_power_dbm: f64,
    pub noise_power_dbm: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            tx_power_dbm: 20.0,
            noise_power_dbm: -80.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    /// T, slots per coherence block.
    pub total: usize,
    /// T1, slots of the ISAC period.
    pub isac: usize,
    /// tau1, slots of the first ISAC time block.
    pub tau1: usize,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            total: 1200,
            isac: 120,
            tau1: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    /// Empirical mean of |y(t)|^2 over the probe slots.
    Noisy,
    /// Expected received power.
    Noiseless,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    /// Stop tolerance on the winner-power improvement, in units of the noise
    /// power.
    pub epsilon_over_noise: f64,
    pub max_rounds: usize,
    pub slots_per_probe: usize,
    pub feedback: Feedback,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epsilon_over_noise: 0.01,
            max_rounds: 8,
            slots_per_probe: 1,
            feedback: Feedback::Noisy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingConfig {
    /// Micro-surface size `[Q_y, Q_z]`; `None` picks `n - 1` per axis.
    pub micro: Option<[usize; 2]>,
    pub eig_tol: f64,
    pub eig_max_sweeps: usize,
}

impl Default for SensingConfig {
    fn default() -> Self {
        let j = JacobiOptions::<f64>::default();
        Self {
            micro: None,
            eig_tol: j.tol,
            eig_max_sweeps: j.max_sweeps,
        }
    }
}

impl SensingConfig {
    pub fn jacobi(&self) -> JacobiOptions<f64> {
        JacobiOptions {
            tol: self.eig_tol,
            max_sweeps: self.eig_max_sweeps,
        }
    }

    /// Micro-surface size used for a parent array.
    pub fn micro_for(&self, spec: &ArraySpec) -> (usize, usize) {
        match self.micro {
            Some([qy, qz]) => (qy, qz),
            None => (default_micro(spec.n_y), default_micro(spec.n_z)),
        }
    }
}

fn default_micro(n: usize) -> usize {
    n.saturating_sub(1).max(2).min(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolMode {
    /// Sensing shares the slots of the ISAC period with data transmission.
    Isac,
    /// Sensing-only first period at zero rate, then pure communication.
    Benchmark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    /// Reuse the previous block's estimate; random beams if there is none.
    KeepPrevious,
    /// Fall back to random beams.
    RandomBeam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub trials: usize,
    pub base_seed: u64,
    pub protocol: ProtocolMode,
    pub sensing_failure: FailurePolicy,
    /// Squared-error penalty applied to failed estimates; failures are
    /// excluded from the RMSE when absent.
    pub rmse_failure_penalty_m: Option<f64>,
    /// Use the true user position instead of sensing (oracle runs).
    pub oracle_location: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            trials: 200,
            base_seed: 1,
            protocol: ProtocolMode::Isac,
            sensing_failure: FailurePolicy::KeepPrevious,
            rmse_failure_penalty_m: None,
            oracle_location: false,
        }
    }
}

/// Everything one run needs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub geometry: GeometryConfig,
    pub arrays: ArrayConfig,
    pub path_loss: PathLossConfig,
    pub radio: RadioConfig,
    pub budget: BudgetConfig,
    pub training: TrainingConfig,
    pub sensing: SensingConfig,
    pub run: RunConfig,
}

impl ScenarioConfig {
    pub fn radio_params(&self) -> RadioParams {
        RadioParams {
            tx_power: dbm_to_mw(self.radio.tx_power_dbm),
            noise_power: dbm_to_mw(self.radio.noise_power_dbm),
        }
    }

    pub fn time_budget(&self) -> TimeBudget {
        TimeBudget {
            total: self.budget.total,
            isac: self.budget.isac,
            tau1: self.budget.tau1,
        }
    }

    /// Checks every cross-field constraint, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        let g = &self.geometry;
        let points = [
            ("bs", g.bs),
            ("irs1", g.irs1),
            ("irs2", g.irs2),
            ("irs3", g.irs3),
            ("user", g.user),
        ];
        for (name, p) in points {
            if !p.is_finite() {
                return bad(format!("geometry.{name} must be finite"));
            }
        }
        for (i, (na, a)) in points.iter().enumerate() {
            for (nb, b) in &points[i + 1..] {
                if a.distance(b) <= 0.0 {
                    return bad(format!("geometry.{na} and geometry.{nb} coincide"));
                }
            }
        }
        if !(g.spacing_over_lambda > 0.0) {
            return bad("geometry.spacing_over_lambda must be > 0".into());
        }
        if self.arrays.bs_antennas == 0 {
            return bad("arrays.bs_antennas must be >= 1".into());
        }
        for (name, [ny, nz]) in [
            ("irs1", self.arrays.irs1),
            ("irs2", self.arrays.irs2),
            ("irs3", self.arrays.irs3),
        ] {
            if ny == 0 || nz == 0 {
                return bad(format!("arrays.{name} dimensions must be >= 1"));
            }
        }
        for (name, [ny, nz]) in [("irs2", self.arrays.irs2), ("irs3", self.arrays.irs3)] {
            let (qy, qz) = self.sensing.micro_for(&ArraySpec::ura(ny, nz));
            if qy < 2 || qz < 2 || qy > ny || qz > nz {
                return bad(format!(
                    "sensing.micro ({qy}x{qz}) must satisfy 2 <= q <= n for arrays.{name} ({ny}x{nz})"
                ));
            }
            if qy * qz <= 2 {
                return bad(format!(
                    "sensing.micro must have more than 2 elements for arrays.{name}"
                ));
            }
        }
        let pl = &self.path_loss;
        if !(pl.ref_loss_db >= 0.0) {
            return bad("path_loss.ref_loss_db must be >= 0".into());
        }
        for (name, e) in [
            ("i2b", pl.i2b_exponent),
            ("u2i", pl.u2i_exponent),
            ("i2i", pl.i2i_exponent),
        ] {
            if !(e > 0.0) {
                return bad(format!("path_loss.{name}_exponent must be > 0"));
            }
        }
        if !self.radio.tx_power_dbm.is_finite() || !self.radio.noise_power_dbm.is_finite() {
            return bad("radio powers must be finite".into());
        }
        let b = &self.budget;
        if b.tau1 < 1 {
            return bad("budget.tau1 must be >= 1".into());
        }
        if b.tau1 >= b.isac {
            return bad(format!(
                "budget: tau1 < T1 violated (tau1 = {}, T1 = {})",
                b.tau1, b.isac
            ));
        }
        if b.isac >= b.total {
            return bad(format!(
                "budget: T1 < T violated (T1 = {}, T = {})",
                b.isac, b.total
            ));
        }
        let t = &self.training;
        if !(t.epsilon_over_noise > 0.0) {
            return bad("training.epsilon_over_noise must be > 0".into());
        }
        if t.max_rounds < 1 {
            return bad("training.max_rounds must be >= 1".into());
        }
        if t.slots_per_probe < 1 {
            return bad("training.slots_per_probe must be >= 1".into());
        }
        if !(self.sensing.eig_tol > 0.0) || self.sensing.eig_max_sweeps == 0 {
            return bad("sensing.eig_tol and sensing.eig_max_sweeps must be positive".into());
        }
        if self.run.trials < 1 {
            return bad("run.trials must be >= 1".into());
        }
        if let Some(p) = self.run.rmse_failure_penalty_m {
            if !(p >= 0.0) {
                return bad("run.rmse_failure_penalty_m must be >= 0".into());
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Reads, parses and validates a TOML scenario file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_toml_str(&text)
}
