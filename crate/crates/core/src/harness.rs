//! Experiment presets and CSV output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use crate::config::{ProtocolMode, ScenarioConfig};
use crate::error::{Error, Result};
use crate::protocol::{
    apply_axis, benchmark_rates, mean_and_stderr, mix_seed, monte_carlo_sweep, trial_channels,
    trial_seed, BenchmarkMode, MetricSummary, SweepAxis, SweepResult,
};

/// One metric of one sweep point. Column order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub experiment: String,
    pub axis: String,
    pub axis_value: f64,
    pub metric: String,
    pub value: f64,
    pub trials: usize,
    pub stderr: f64,
    pub seed: u64,
}

pub const CSV_COLUMNS: [&str; 8] = [
    "experiment",
    "axis",
    "axis_value",
    "metric",
    "value",
    "trials",
    "stderr",
    "seed",
];

pub fn sweep_rows(experiment: &str, result: &SweepResult) -> Vec<CsvRow> {
    result
        .points
        .iter()
        .flat_map(|p| {
            p.metrics.iter().map(move |m| CsvRow {
                experiment: experiment.to_string(),
                axis: result.axis.name().to_string(),
                axis_value: p.value,
                metric: m.name.clone(),
                value: m.value,
                trials: p.trials,
                stderr: m.stderr,
                seed: result.base_seed,
            })
        })
        .collect()
}

pub fn write_csv<W: Write>(out: W, rows: &[CsvRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(Error::InvalidInput(format!(
            "unexpected CSV header {headers:?}"
        )));
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// One curve of a figure: a labelled template swept along the figure axis.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub id: String,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub series: Vec<Series>,
    pub trials: usize,
    /// Adds the reference-rate metrics of [`BenchmarkMode`] to every point.
    pub with_benchmarks: bool,
}

pub const PRESETS: [&str; 9] = [
    "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12", "fig13", "distance",
];

fn ratios() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

fn variants(
    base: &ScenarioConfig,
    name: &str,
    values: &[f64],
    f: impl Fn(&mut ScenarioConfig, f64),
) -> Vec<Series> {
    values
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            f(&mut c, v);
            Series {
                label: format!("{name}={v}"),
                config: c,
            }
        })
        .collect()
}

fn semi(c: &mut ScenarioConfig, m: f64) {
    let s = (m.sqrt().round()) as usize;
    c.arrays.irs2 = [s, s];
    c.arrays.irs3 = [s, s];
}

fn long_block(c: &mut ScenarioConfig, isac: usize, tau1: usize) {
    c.budget.total = 2000;
    c.budget.isac = isac;
    c.budget.tau1 = tau1;
}

/// Figure preset built on top of `base`.
pub fn preset(name: &str, base: &ScenarioConfig) -> Result<Experiment> {
    let trials = base.run.trials;
    let (axis, values, series, with_benchmarks) = match name {
        "fig6" => (
            SweepAxis::TxPower,
            vec![0.0, 5.0, 10.0, 15.0, 20.0, 22.0],
            variants(base, "m_semi", &[16.0, 36.0], semi),
            false,
        ),
        "fig7" => (
            SweepAxis::Tau1,
            vec![10.0, 20.0, 30.0, 40.0, 50.0],
            variants(base, "m_passive", &[64.0, 256.0], |c, m| {
                let s = m.sqrt().round() as usize;
                c.arrays.irs1 = [s, s];
            }),
            false,
        ),
        "fig8" => (
            SweepAxis::MSemi,
            vec![9.0, 16.0, 25.0, 36.0, 49.0],
            variants(base, "tau1", &[10.0, 30.0], |c, t| {
                c.budget.tau1 = t as usize
            }),
            false,
        ),
        "distance" => (
            SweepAxis::UserDistance,
            vec![4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0],
            variants(base, "m_semi", &[16.0, 25.0, 36.0], semi),
            false,
        ),
        "fig9" => (
            SweepAxis::TxPower,
            vec![0.0, 5.0, 10.0, 15.0, 20.0],
            variants(base, "m_semi", &[16.0, 36.0], semi),
            true,
        ),
        "fig10" => (
            SweepAxis::MPassive,
            vec![64.0, 144.0, 256.0, 400.0, 576.0],
            variants(base, "m_semi", &[16.0, 36.0], semi),
            true,
        ),
        "fig11" => (
            SweepAxis::T1OverT,
            ratios(),
            variants(base, "tx_power", &[0.0, 10.0, 20.0], |c, p| {
                c.radio.tx_power_dbm = p;
                long_block(c, 200, 20);
            }),
            false,
        ),
        "fig12" => (
            SweepAxis::Tau1OverT1,
            ratios(),
            variants(base, "tx_power", &[0.0, 10.0, 20.0], |c, p| {
                c.radio.tx_power_dbm = p;
                long_block(c, 200, 20);
            }),
            false,
        ),
        "fig13" => {
            let mut isac = base.clone();
            long_block(&mut isac, 200, 20);
            let mut bench = isac.clone();
            isac.run.protocol = ProtocolMode::Isac;
            bench.run.protocol = ProtocolMode::Benchmark;
            (
                SweepAxis::T1OverT,
                ratios(),
                vec![
                    Series {
                        label: "protocol=isac".into(),
                        config: isac,
                    },
                    Series {
                        label: "protocol=benchmark".into(),
                        config: bench,
                    },
                ],
                false,
            )
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown experiment '{other}' (expected one of {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(Experiment {
        id: name.to_string(),
        axis,
        values,
        series,
        trials,
        with_benchmarks,
    })
}

/// Reference rates averaged over the channel draws of a sweep.
pub fn benchmark_sweep(
    template: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    trials: usize,
    base_seed: u64,
) -> Result<Vec<Vec<MetricSummary>>> {
    let modes = [
        (BenchmarkMode::OptimalIsac, "bench_optimal_isac"),
        (BenchmarkMode::RandomIsac, "bench_random_isac"),
        (BenchmarkMode::UpperBoundPc, "bench_upper_bound_pc"),
        (BenchmarkMode::RandomPc, "bench_random_pc"),
    ];
    values
        .iter()
        .map(|&v| {
            let cfg = apply_axis(template, axis, v)?;
            let per_trial = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let seed = trial_seed(base_seed, axis.index(), t);
                    let ch = trial_channels(&cfg, seed)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 4));
                    modes
                        .iter()
                        .map(|(m, _)| benchmark_rates(&cfg, &ch, *m, &mut rng))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(modes
                .iter()
                .enumerate()
                .map(|(k, (_, name))| {
                    let xs: Vec<f64> = per_trial.iter().map(|r| r[k]).collect();
                    let (m, se) = mean_and_stderr(&xs);
                    MetricSummary {
                        name: name.to_string(),
                        value: m,
                        stderr: se,
                        count: xs.len(),
                    }
                })
                .collect())
        })
        .collect()
}

/// Sweep results per series, labelled `<experiment>/<series>`.
pub fn run_experiment(exp: &Experiment, base_seed: u64) -> Result<Vec<(String, SweepResult)>> {
    exp.series
        .iter()
        .map(|s| {
            let mut result =
                monte_carlo_sweep(&s.config, exp.axis, &exp.values, exp.trials, base_seed)?;
            if exp.with_benchmarks {
                let extra =
                    benchmark_sweep(&s.config, exp.axis, &exp.values, exp.trials, base_seed)?;
                for (p, e) in result.points.iter_mut().zip(extra) {
                    p.metrics.extend(e);
                }
            }
            Ok((format!("{}/{}", exp.id, s.label), result))
        })
        .collect()
}

pub fn experiment_rows(results: &[(String, SweepResult)]) -> Vec<CsvRow> {
    results
        .iter()
        .flat_map(|(id, r)| sweep_rows(id, r))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_and_header() {
        let rows = vec![
            CsvRow {
                experiment: "fig6/m_semi=16".into(),
                axis: "tx_power".into(),
                axis_value: 22.0,
                metric: "rmse_block1_m".into(),
                value: 0.0123,
                trials: 200,
                stderr: 1e-4,
                seed: 7,
            },
            CsvRow {
                experiment: "x".into(),
                axis: "tau1".into(),
                axis_value: 10.0,
                metric: "m".into(),
                value: f64::NAN,
                trials: 1,
                stderr: 0.0,
                seed: u64::MAX,
            },
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(text.lines().count(), 3);
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back[0], rows[0]);
        assert!(back[1].value.is_nan());
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn presets_exist_with_paper_axes() {
        let base = ScenarioConfig::default();
        for name in PRESETS {
            let e = preset(name, &base).unwrap();
            for s in &e.series {
                for &v in &e.values {
                    apply_axis(&s.config, e.axis, v).unwrap();
                }
            }
        }
        assert_eq!(
            preset("fig6", &base).unwrap().values,
            vec![0.0, 5.0, 10.0, 15.0, 20.0, 22.0]
        );
        let f11 = preset("fig11", &base).unwrap();
        assert_eq!(f11.series[0].config.budget.total, 2000);
        assert!(preset("fig99", &base).is_err());
    }

    #[test]
    fn experiment_output_is_byte_identical() {
        let mut base = ScenarioConfig::default();
        base.run.trials = 3;
        let mut e = preset("fig9", &base).unwrap();
        e.values.truncate(2);
        let render = || {
            let mut buf = Vec::new();
            write_csv(&mut buf, &experiment_rows(&run_experiment(&e, 5).unwrap())).unwrap();
            buf
        };
        let a = render();
        assert_eq!(a, render());
        let text = String::from_utf8(a).unwrap();
        assert!(text.contains("bench_optimal_isac"));
        assert!(text.contains("fig9/m_semi=36"));
    }
}
