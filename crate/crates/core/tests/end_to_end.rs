use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use irs_isac::beamforming::random_phase_beam;
use irs_isac::channel::synth_channels;
use irs_isac::config::{Feedback, ProtocolMode};
use irs_isac::protocol::{run_coherence_block, SensingOutcome};
use irs_isac::sensing::{sense_location, SensingContext};
use irs_isac::signal::simulate_sensing_snapshots;
use irs_isac::ScenarioConfig;

#[test]
fn sensing_error_shrinks_with_noise() {
    let mut cfg = ScenarioConfig::default();
    let mut last = f64::INFINITY;
    for noise in [-80.0, -120.0, -160.0, -200.0] {
        cfg.radio.noise_power_dbm = noise;
        let ctx = SensingContext::from_config(&cfg).unwrap();
        let mut worst = 0.0f64;
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ch = synth_channels(&cfg, &mut rng).unwrap();
            let theta = random_phase_beam(256, &mut rng);
            let (b2, b3) =
                simulate_sensing_snapshots(&ch, &theta, &cfg.radio_params(), 20, &mut rng).unwrap();
            let est = sense_location(&b2, &b3, &ctx).unwrap();
            worst = worst.max(est.position.distance(&cfg.geometry.user));
        }
        assert!(worst < last, "{noise} dBm: {worst} not below {last}");
        last = worst;
    }
    assert!(last < 1e-6, "{last}");
}

#[test]
fn oracle_location_reaches_the_pc_bound() {
    let mut cfg = ScenarioConfig::default();
    cfg.run.oracle_location = true;
    cfg.training.feedback = Feedback::Noiseless;
    for seed in 0..20 {
        let b = run_coherence_block(&cfg, seed).unwrap();
        assert!(matches!(b.loc_block1, SensingOutcome::Oracle { .. }));
        assert!(b.exploit_rate <= b.upper_bound_pc + 1e-12);
        assert!(
            b.exploit_rate >= 0.99 * b.upper_bound_pc,
            "{} vs {}",
            b.exploit_rate,
            b.upper_bound_pc
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn block_bookkeeping_holds(seed in any::<u64>(), power in 0.0f64..25.0, benchmark in any::<bool>()) {
        let mut cfg = ScenarioConfig::default();
        cfg.radio.tx_power_dbm = power;
        if benchmark {
            cfg.run.protocol = ProtocolMode::Benchmark;
        }
        let b = run_coherence_block(&cfg, seed).unwrap();
        prop_assert_eq!(b.rates.len(), b.budget.total);
        prop_assert_eq!(b.probe_slots + b.exploit_slots, b.budget.pc());
        prop_assert!(b.rates.iter().all(|r| r.is_finite() && *r >= 0.0));
        prop_assert!(b.exploit_rate <= b.upper_bound_pc * (1.0 + 1e-12));
        if benchmark {
            prop_assert!(b.rates[..b.budget.isac].iter().all(|r| *r == 0.0));
            prop_assert_eq!(&b.loc_block2, &SensingOutcome::NotRun);
        }
        prop_assert_eq!(&b, &run_coherence_block(&cfg, seed).unwrap());
    }
}
