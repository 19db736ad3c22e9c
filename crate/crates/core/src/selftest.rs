//! Invariant suite runnable from the command line.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beamforming::{
    bisection_training, isac_combiner, isac_phase_beam, pc_phase_beams, random_phase_beam,
    BeamGeometry, PhaseTuple,
};
use crate::channel::{synth_channels, ura_response};
use crate::config::ScenarioConfig;
use crate::geometry::{direction_cosines, Position};
use crate::numerics::{hermitian_eig, CMatrix, JacobiOptions};
use crate::protocol::{monte_carlo_sweep, run_coherence_block, SweepAxis};
use crate::sensing::{
    aux_selectors, build_micro_layout, esprit_axis, fbss_covariance, localize, Axis,
};
use crate::signal::{rate_pc, simulate_sensing_snapshots, RadioParams};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

type Outcome = std::result::Result<String, String>;
type CheckFn = fn() -> Outcome;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn covariance_is_hermitian_psd() -> Outcome {
    let cfg = ScenarioConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let ch = synth_channels(&cfg, &mut rng).map_err(|e| e.to_string())?;
    let theta = random_phase_beam(256, &mut rng);
    let (b2, _) = simulate_sensing_snapshots(&ch, &theta, &cfg.radio_params(), 20, &mut rng)
        .map_err(|e| e.to_string())?;
    let layout = build_micro_layout(&cfg.arrays.irs_specs()[1], 3, 3).map_err(|e| e.to_string())?;
    let r = fbss_covariance(&b2.samples, &layout).map_err(|e| e.to_string())?;
    let scale = r.max_abs();
    let defect = r.hermitian_defect();
    ensure(defect < 1e-12, || format!("hermitian defect {defect:e}"))?;
    let e = hermitian_eig(&r).map_err(|e| e.to_string())?;
    let min = e.values.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure(min >= -1e-12 * scale, || {
        format!("smallest eigenvalue {min:e}")
    })?;
    Ok(format!("defect {defect:.1e}, min eigenvalue {min:.1e}"))
}

fn esprit_rotation_invariance() -> Outcome {
    let layout = build_micro_layout(&crate::channel::ArraySpec::ura(4, 4), 3, 3)
        .map_err(|e| e.to_string())?;
    let micro = layout.micro_spec();
    let a = ura_response(0.4, 1.3, &micro);
    let b = ura_response(-1.1, -0.6, &micro);
    let r = CMatrix::outer(&a, &a).add(&CMatrix::outer(&b, &b));
    let e = hermitian_eig(&r).map_err(|e| e.to_string())?;
    let us = e.vectors.columns(0..2);
    let (j1, j2) = aux_selectors(&layout, Axis::Y).map_err(|e| e.to_string())?;
    let opts = JacobiOptions::default();
    let mut base = esprit_axis(&us, &j1, &j2, opts).map_err(|e| e.to_string())?;
    base.sort_by(f64::total_cmp);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let t: f64 = rng.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let (p, q): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let u = CMatrix::from_row_major(
            2,
            2,
            vec![
                Complex64::from_polar(t.cos(), p),
                Complex64::from_polar(t.sin(), q),
                Complex64::from_polar(-t.sin(), -q),
                Complex64::from_polar(t.cos(), -p),
            ],
        )
        .map_err(|e| e.to_string())?;
        let mut got = esprit_axis(&us.matmul(&u), &j1, &j2, opts).map_err(|e| e.to_string())?;
        got.sort_by(f64::total_cmp);
        worst = worst
            .max((got[0] - base[0]).abs())
            .max((got[1] - base[1]).abs());
    }
    ensure(worst < 1e-9, || format!("angle drift {worst:e}"))?;
    Ok(format!("max drift {worst:.1e} rad over 20 rotations"))
}

fn localize_round_trip() -> Outcome {
    let q2 = Position::new(0.0, 47.0, 7.0);
    let q3 = Position::new(0.0, 53.0, 8.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let user = Position::new(
            rng.random_range(0.5..30.0),
            rng.random_range(30.0..70.0),
            rng.random_range(-5.0..3.0),
        );
        let c2 = direction_cosines(&q2, &user).map_err(|e| e.to_string())?;
        let c3 = direction_cosines(&q3, &user).map_err(|e| e.to_string())?;
        let e = localize(c2, c3, &q2, &q3).map_err(|e| e.to_string())?;
        worst = worst.max(e.position.distance(&user));
    }
    ensure(worst < 1e-9, || format!("round-trip error {worst:e} m"))?;
    Ok(format!("max error {worst:.1e} m over 1000 positions"))
}

fn beams_are_unit_modulus() -> Outcome {
    let cfg = ScenarioConfig::default();
    let g = &cfg.geometry;
    let geom = BeamGeometry::from_config(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut norm_gap = 0.0f64;
    for _ in 0..100 {
        let user = Position::new(
            rng.random_range(0.5..20.0),
            rng.random_range(35.0..60.0),
            rng.random_range(-2.0..2.0),
        );
        let w = isac_combiner(&g.bs, &g.irs1, 8, 0.5).map_err(|e| e.to_string())?;
        norm_gap = norm_gap.max((w.norm() - 1.0).abs());
        let xi = isac_phase_beam(&user, &g.irs1, &g.bs, &geom.specs[0], 0.5)
            .map_err(|e| e.to_string())?;
        let tuple = PhaseTuple::new(rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0));
        let pc = pc_phase_beams(&user, &geom, tuple).map_err(|e| e.to_string())?;
        let rnd = random_phase_beam(64, &mut rng);
        worst = worst
            .max(xi.unit_modulus_defect())
            .max(pc.unit_modulus_defect())
            .max(rnd.unit_modulus_defect());
    }
    ensure(worst < 1e-12 && norm_gap < 1e-12, || {
        format!("modulus defect {worst:e}, norm gap {norm_gap:e}")
    })?;
    Ok(format!("modulus defect {worst:.1e}"))
}

fn slot_conservation() -> Outcome {
    let cfg = ScenarioConfig::default();
    for seed in 0..10 {
        let b = run_coherence_block(&cfg, seed).map_err(|e| e.to_string())?;
        let t2 = b.budget.pc();
        ensure(b.probe_slots + b.exploit_slots == t2, || {
            format!("seed {seed}: slots do not add up to T2")
        })?;
        ensure(b.rates.len() == b.budget.total, || {
            format!("seed {seed}: {} rates", b.rates.len())
        })?;
    }
    Ok("10 blocks".into())
}

fn rate_monotone_in_power() -> Outcome {
    let cfg = ScenarioConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ch = synth_channels(&cfg, &mut rng).map_err(|e| e.to_string())?;
    let g = &cfg.geometry;
    let w = isac_combiner(&g.bs, &g.irs1, 8, 0.5).map_err(|e| e.to_string())?;
    let xi = random_phase_beam(288, &mut rng);
    let mut last = 0.0;
    for p in [1e-3, 1e-1, 1.0, 10.0, 100.0] {
        let r = rate_pc(
            &w,
            &xi,
            &ch,
            &RadioParams {
                tx_power: p,
                noise_power: 1e-11,
            },
        )
        .map_err(|e| e.to_string())?;
        ensure(r >= last, || {
            format!("rate fell from {last} to {r} at {p} mW")
        })?;
        last = r;
    }
    Ok("nondecreasing over 5 powers".into())
}

fn training_is_monotone() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let z: [Complex64; 3] = std::array::from_fn(|_| {
            Complex64::from_polar(rng.random_range(0.2..1.0), rng.random_range(0.0..6.3))
        });
        let f = |t: PhaseTuple| {
            (z[0]
                + z[1] * Complex64::from_polar(1.0, t.phi2)
                + z[2] * Complex64::from_polar(1.0, t.phi3))
            .norm_sqr()
        };
        let trace = bisection_training(f, 1e-12, 8).map_err(|e| e.to_string())?;
        for w in trace.rounds.windows(2) {
            ensure(w[1].winner_power() >= w[0].winner_power(), || {
                "winner power decreased".into()
            })?;
        }
    }
    Ok("50 objectives".into())
}

fn determinism() -> Outcome {
    let mut cfg = ScenarioConfig::default();
    cfg.run.trials = 4;
    let a = monte_carlo_sweep(&cfg, SweepAxis::TxPower, &[10.0, 20.0], 4, 9)
        .map_err(|e| e.to_string())?;
    let b = monte_carlo_sweep(&cfg, SweepAxis::TxPower, &[10.0, 20.0], 4, 9)
        .map_err(|e| e.to_string())?;
    ensure(a == b, || "repeated sweep differs".into())?;
    Ok("identical sweeps".into())
}

/// Runs every check and collects the outcomes.
pub fn run_selftest() -> SelftestReport {
    let checks: [(&'static str, CheckFn); 8] = [
        ("covariance hermitian and psd", covariance_is_hermitian_psd),
        (
            "esprit subspace rotation invariance",
            esprit_rotation_invariance,
        ),
        ("localize round trip", localize_round_trip),
        (
            "unit-modulus beams and unit-norm combiner",
            beams_are_unit_modulus,
        ),
        ("slot conservation", slot_conservation),
        ("rate monotone in power", rate_monotone_in_power),
        ("training winners nondecreasing", training_is_monotone),
        ("sweep determinism", determinism),
    ];
    SelftestReport {
        checks: checks
            .into_iter()
            .map(|(name, f)| {
                let (passed, detail) = match f() {
                    Ok(d) => (true, d),
                    Err(d) => (false, d),
                };
                Check {
                    name,
                    passed,
                    detail,
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    #[test]
    fn selftest_passes() {
        let report = super::run_selftest();
        for c in &report.checks {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
