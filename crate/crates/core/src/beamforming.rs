//! Location-driven combiner and phase designs, and bisection phase training.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::channel::{ula_response, ura_response, ArraySpec, ChannelSet};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::{departure_cosines, direction_cosines, to_effective, Position};
use crate::numerics::CVector;
use crate::scalar::wrap_two_pi;
use crate::signal::RadioParams;

/// Reflection vectors of the three sub-IRSs.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBeam {
    pub xi: [CVector<f64>; 3],
}

impl PhaseBeam {
    pub fn concat(&self) -> CVector<f64> {
        CVector::concat(&[&self.xi[0], &self.xi[1], &self.xi[2]])
    }

    pub fn unit_modulus_defect(&self) -> f64 {
        self.xi
            .iter()
            .map(|x| x.unit_modulus_defect())
            .fold(0.0, f64::max)
    }

    /// Rotates sub-IRS 2 and 3 by the tuple's phases.
    pub fn with_tuple(&self, tuple: PhaseTuple) -> PhaseBeam {
        PhaseBeam {
            xi: [
                self.xi[0].clone(),
                self.xi[1].scale(Complex64::from_polar(1.0, tuple.phi2)),
                self.xi[2].scale(Complex64::from_polar(1.0, tuple.phi3)),
            ],
        }
    }
}

/// Phase offsets of sub-IRS 2 and 3 relative to sub-IRS 1, in `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseTuple {
    pub phi2: f64,
    pub phi3: f64,
}

impl PhaseTuple {
    pub fn new(phi2: f64, phi3: f64) -> Self {
        Self {
            phi2: wrap_two_pi(phi2),
            phi3: wrap_two_pi(phi3),
        }
    }

    pub fn offset(&self, d2: f64, d3: f64) -> Self {
        Self::new(self.phi2 + d2, self.phi3 + d3)
    }

    /// Componentwise circular distance.
    pub fn circular_gap(&self, other: &Self) -> (f64, f64) {
        let d = |a: f64, b: f64| {
            let x = wrap_two_pi(a - b);
            x.min(2.0 * PI - x)
        };
        (d(self.phi2, other.phi2), d(self.phi3, other.phi3))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRound {
    pub candidates: [PhaseTuple; 5],
    pub powers: [f64; 5],
    pub winner: usize,
}

impl TrainingRound {
    pub fn winner_tuple(&self) -> PhaseTuple {
        self.candidates[self.winner]
    }

    pub fn winner_power(&self) -> f64 {
        self.powers[self.winner]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub rounds: Vec<TrainingRound>,
    pub final_tuple: PhaseTuple,
    /// Measured power of the final tuple.
    pub final_power: f64,
    /// Number of probe evaluations (five per round).
    pub probes: usize,
}

/// Geometry needed to design beams: positions, array shapes and spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGeometry {
    pub bs: Position,
    pub irs: [Position; 3],
    pub specs: [ArraySpec; 3],
    pub bs_antennas: usize,
    pub spacing_over_lambda: f64,
}

impl BeamGeometry {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        let g = &cfg.geometry;
        Self {
            bs: g.bs,
            irs: [g.irs1, g.irs2, g.irs3],
            specs: cfg.arrays.irs_specs(),
            bs_antennas: cfg.arrays.bs_antennas,
            spacing_over_lambda: g.spacing_over_lambda,
        }
    }
}

/// Unit-norm combiner matched to the arrival direction of sub-IRS 1.
pub fn isac_combiner(
    bs: &Position,
    irs1: &Position,
    n: usize,
    spacing_over_lambda: f64,
) -> Result<CVector<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput(
            "combiner needs at least one antenna".into(),
        ));
    }
    let u = to_effective(direction_cosines(bs, irs1)?, spacing_over_lambda).u;
    Ok(ula_response(u, n).scale_real(1.0 / (n as f64).sqrt()))
}

/// Phases of one surface that co-phase the user arrival with the departure
/// towards the BS.
pub fn surface_beam(
    user_est: &Position,
    irs: &Position,
    bs: &Position,
    spec: &ArraySpec,
    spacing_over_lambda: f64,
) -> Result<CVector<f64>> {
    let arr = to_effective(direction_cosines(irs, user_est)?, spacing_over_lambda);
    let dep = to_effective(departure_cosines(irs, bs)?, spacing_over_lambda);
    let a = ura_response(arr.u, arr.v, spec);
    let d = ura_response(dep.u, dep.v, spec);
    Ok(a.conj().hadamard(&d))
}

/// Sub-IRS 1 phases for the second ISAC block.
pub fn isac_phase_beam(
    user_est: &Position,
    irs1: &Position,
    bs: &Position,
    spec1: &ArraySpec,
    spacing_over_lambda: f64,
) -> Result<CVector<f64>> {
    surface_beam(user_est, irs1, bs, spec1, spacing_over_lambda)
}

/// I.i.d. uniform phases.
pub fn random_phase_beam<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CVector<f64> {
    (0..m)
        .map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU))
        .collect()
}

pub fn random_pc_beam<R: Rng + ?Sized>(specs: &[ArraySpec; 3], rng: &mut R) -> PhaseBeam {
    PhaseBeam {
        xi: std::array::from_fn(|i| random_phase_beam(specs[i].len(), rng)),
    }
}

/// Per-surface beams for the PC period with the tuple's offsets applied.
pub fn pc_phase_beams(
    user_est: &Position,
    geom: &BeamGeometry,
    tuple: PhaseTuple,
) -> Result<PhaseBeam> {
    let beam = |i: usize| {
        surface_beam(
            user_est,
            &geom.irs[i],
            &geom.bs,
            &geom.specs[i],
            geom.spacing_over_lambda,
        )
    };
    let xi = [beam(0)?, beam(1)?, beam(2)?];
    Ok(PhaseBeam { xi }.with_tuple(tuple))
}

/// `sqrt(rho) alpha_I2B,i alpha_U2I,i (w^H a(u_i))` for each surface.
pub fn zeta(ch: &ChannelSet, w: &CVector<f64>, radio: &RadioParams) -> [Complex64; 3] {
    let amp = radio.tx_power.sqrt();
    std::array::from_fn(|i| {
        let a = ula_response(ch.angles.i2b_arrival[i], w.len());
        ch.gains.i2b[i] * ch.gains.u2i[i] * w.dot(&a) * amp
    })
}

/// Tuple that co-phases all three surface contributions.
pub fn optimal_tuple(zeta: &[Complex64; 3]) -> PhaseTuple {
    PhaseTuple::new(zeta[0].arg() - zeta[1].arg(), zeta[0].arg() - zeta[2].arg())
}

/// `sum_i |zeta_i| M_i`, the largest achievable received amplitude.
pub fn upper_bound_amplitude(zeta: &[Complex64; 3], sizes: [usize; 3]) -> f64 {
    zeta.iter()
        .zip(sizes)
        .map(|(z, m)| z.norm() * m as f64)
        .sum()
}

pub fn upper_bound_pc_rate(ch: &ChannelSet, w: &CVector<f64>, radio: &RadioParams) -> f64 {
    let z = zeta(ch, w, radio);
    let sizes = std::array::from_fn(|i| ch.u2i[i].len());
    let amp = upper_bound_amplitude(&z, sizes);
    (1.0 + amp * amp / radio.noise_power).log2()
}

fn round_candidates(center: PhaseTuple, step: f64) -> [PhaseTuple; 5] {
    [
        center,
        center.offset(-step, -step),
        center.offset(-step, step),
        center.offset(step, -step),
        center.offset(step, step),
    ]
}

/// Bisection search over the phase tuple.
///
/// Round `r` (1-based) probes the current center and its four diagonal
/// neighbours at `+-pi / 2^r`; the first center is `(pi, pi)`. The search
/// stops once the winning power improves by no more than `epsilon` over the
/// previous round, or after `max_rounds` rounds.
pub fn bisection_training<F: FnMut(PhaseTuple) -> f64>(
    mut probe: F,
    epsilon: f64,
    max_rounds: usize,
) -> Result<TrainingTrace> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if max_rounds == 0 {
        return Err(Error::InvalidInput(
            "at least one training round is required".into(),
        ));
    }
    let mut rounds: Vec<TrainingRound> = Vec::new();
    let mut center = PhaseTuple::new(PI, PI);
    for r in 1..=max_rounds {
        let step = PI / 2f64.powi(r as i32);
        let candidates = round_candidates(center, step);
        let powers = candidates.map(&mut probe);
        let mut winner = 0;
        for k in 1..5 {
            if powers[k] > powers[winner] {
                winner = k;
            }
        }
        let round = TrainingRound {
            candidates,
            powers,
            winner,
        };
        center = round.winner_tuple();
        let stop = rounds
            .last()
            .is_some_and(|prev| round.winner_power() - prev.winner_power() <= epsilon);
        rounds.push(round);
        if stop {
            break;
        }
    }
    let last = rounds.last().expect("at least one round");
    Ok(TrainingTrace {
        final_tuple: last.winner_tuple(),
        final_power: last.winner_power(),
        probes: 5 * rounds.len(),
        rounds,
    })
}
