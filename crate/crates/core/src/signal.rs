//! Slot-level transmit/receive simulation and achievable rates.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::numerics::CVector;

/// Transmit power and noise power, both in milliwatts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub tx_power: f64,
    pub noise_power: f64,
}

impl RadioParams {
    pub fn snr(&self, gain: Complex64) -> f64 {
        self.tx_power * gain.norm_sqr() / self.noise_power
    }
}

/// Samples received by one semi-passive sub-IRS during a sensing block.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBatch {
    /// 2 or 3.
    pub sub_irs_id: u8,
    pub samples: Vec<CVector<f64>>,
}

impl SnapshotBatch {
    pub fn slots(&self) -> usize {
        self.samples.len()
    }

    pub fn elements(&self) -> usize {
        self.samples.first().map_or(0, |s| s.len())
    }
}

/// Circularly symmetric complex Gaussian with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

fn check_unit_modulus(xi: &CVector<f64>, what: &str) -> Result<()> {
    if xi.unit_modulus_defect() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "{what} entries must have unit modulus"
        )));
    }
    Ok(())
}

fn check_combiner(w: &CVector<f64>) -> Result<()> {
    if (w.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("combiner must have unit norm".into()));
    }
    Ok(())
}

/// Noise-free signature seen at sub-IRS `i` (2 or 3) per unit symbol:
/// the direct user path plus the reflection through sub-IRS 1.
pub fn sensing_signature(ch: &ChannelSet, theta1: &CVector<f64>, i: usize) -> CVector<f64> {
    let k = i - 2;
    let reflected = theta1.hadamard(&ch.u2i[0]);
    ch.u2i[i - 1].add(&ch.i2i[k].mul_vec(&reflected))
}

/// Simulates `slots` sensing snapshots at sub-IRS 2 and 3.
pub fn simulate_sensing_snapshots<R: Rng + ?Sized>(
    ch: &ChannelSet,
    theta1: &CVector<f64>,
    radio: &RadioParams,
    slots: usize,
    rng: &mut R,
) -> Result<(SnapshotBatch, SnapshotBatch)> {
    check_unit_modulus(theta1, "theta1")?;
    if slots == 0 {
        return Err(Error::InvalidInput(
            "at least one sensing slot is required".into(),
        ));
    }
    if theta1.len() != ch.u2i[0].len() {
        return Err(Error::InvalidInput(
            "theta1 length must match sub-IRS 1".into(),
        ));
    }
    let amp = radio.tx_power.sqrt();
    let sig2 = sensing_signature(ch, theta1, 2).scale_real(amp);
    let sig3 = sensing_signature(ch, theta1, 3).scale_real(amp);
    let mut b2 = Vec::with_capacity(slots);
    let mut b3 = Vec::with_capacity(slots);
    for _ in 0..slots {
        let s = complex_gaussian(rng, 1.0);
        let x2: CVector<f64> = sig2
            .iter()
            .map(|g| g * s + complex_gaussian(rng, radio.noise_power))
            .collect();
        let x3: CVector<f64> = sig3
            .iter()
            .map(|g| g * s + complex_gaussian(rng, radio.noise_power))
            .collect();
        b2.push(x2);
        b3.push(x3);
    }
    Ok((
        SnapshotBatch {
            sub_irs_id: 2,
            samples: b2,
        },
        SnapshotBatch {
            sub_irs_id: 3,
            samples: b3,
        },
    ))
}

/// `w^H H_I2B,1 diag(theta1) h_U2I,1`.
pub fn isac_gain(w: &CVector<f64>, theta1: &CVector<f64>, ch: &ChannelSet) -> Complex64 {
    w.dot(&ch.i2b[0].mul_vec(&theta1.hadamard(&ch.u2i[0])))
}

/// Per-surface terms `w^H H_I2B,i diag(xi_i) h_U2I,i`; `xi` is the
/// concatenation of the three surface beams.
pub fn pc_surface_gains(w: &CVector<f64>, xi: &CVector<f64>, ch: &ChannelSet) -> [Complex64; 3] {
    let mut offset = 0;
    std::array::from_fn(|i| {
        let m = ch.u2i[i].len();
        let part: CVector<f64> = xi[offset..offset + m].iter().copied().collect();
        offset += m;
        w.dot(&ch.i2b[i].mul_vec(&part.hadamard(&ch.u2i[i])))
    })
}

/// Sum of the per-surface terms.
pub fn pc_gain(w: &CVector<f64>, xi: &CVector<f64>, ch: &ChannelSet) -> Complex64 {
    pc_surface_gains(w, xi, ch).iter().sum()
}

/// `w^H H_I2B diag(xi) h_U2I` on the concatenated channel.
pub fn pc_gain_stacked(w: &CVector<f64>, xi: &CVector<f64>, ch: &ChannelSet) -> Complex64 {
    w.dot(&ch.i2b_stacked().mul_vec(&xi.hadamard(&ch.u2i_stacked())))
}

pub fn rate_from_gain(gain: Complex64, radio: &RadioParams) -> f64 {
    (1.0 + radio.snr(gain)).log2()
}

/// Achievable rate of an ISAC-period slot (only sub-IRS 1 reflects).
pub fn rate_isac(
    w: &CVector<f64>,
    theta1: &CVector<f64>,
    ch: &ChannelSet,
    radio: &RadioParams,
) -> Result<f64> {
    check_combiner(w)?;
    check_unit_modulus(theta1, "theta1")?;
    Ok(rate_from_gain(isac_gain(w, theta1, ch), radio))
}

/// Achievable rate of a PC-period slot (all three surfaces reflect).
pub fn rate_pc(
    w: &CVector<f64>,
    xi: &CVector<f64>,
    ch: &ChannelSet,
    radio: &RadioParams,
) -> Result<f64> {
    check_combiner(w)?;
    check_unit_modulus(xi, "xi")?;
    let m: usize = ch.u2i.iter().map(|h| h.len()).sum();
    if xi.len() != m {
        return Err(Error::InvalidInput(format!(
            "xi must have {m} entries, got {}",
            xi.len()
        )));
    }
    Ok(rate_from_gain(pc_gain(w, xi, ch), radio))
}

/// Expectation of |y(t)|^2 in the PC period.
pub fn expected_received_power(gain: Complex64, radio: &RadioParams) -> f64 {
    radio.tx_power * gain.norm_sqr() + radio.noise_power
}

/// Unit-modulus pilot symbol with a uniformly random phase.
pub fn pilot_symbol<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)
}

/// Empirical mean of |y(t)|^2 over `slots` PC-period slots for a known
/// composite gain. Probe slots carry unit-modulus pilots, so only the noise
/// makes the measurement random.
pub fn measure_power<R: Rng + ?Sized>(
    gain: Complex64,
    radio: &RadioParams,
    slots: usize,
    rng: &mut R,
) -> f64 {
    let amp = radio.tx_power.sqrt();
    let total: f64 = (0..slots)
        .map(|_| {
            let s = pilot_symbol(rng);
            // w^H n with ||w|| = 1 is CN(0, noise_power).
            let n = complex_gaussian(rng, radio.noise_power);
            (gain * s * amp + n).norm_sqr()
        })
        .sum();
    total / slots as f64
}

/// Received power at the BS averaged over `slots` PC-period slots.
pub fn received_power_pc<R: Rng + ?Sized>(
    w: &CVector<f64>,
    xi: &CVector<f64>,
    ch: &ChannelSet,
    radio: &RadioParams,
    slots: usize,
    rng: &mut R,
) -> Result<f64> {
    check_combiner(w)?;
    check_unit_modulus(xi, "xi")?;
    if slots == 0 {
        return Err(Error::InvalidInput("at least one slot is required".into()));
    }
    Ok(measure_power(pc_gain(w, xi, ch), radio, slots, rng))
}
