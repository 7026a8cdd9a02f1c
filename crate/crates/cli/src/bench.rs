//! Grid measurements of test counts, timings and recovery rates.

use serde::{Deserialize, Serialize};

use crate::bundle::generate;
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::simulate::{run, summarize, SimulationOptions};

pub const ASYMPTOTIC_NOTE: &str = "measured values only; asymptotic test-count and decoding-time \
bounds are not reproduced at this scale";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: usize,
    pub d: usize,
    pub u: usize,
    pub e: usize,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub d: usize,
    pub u: usize,
    pub e: usize,
    pub p: f64,
    pub t: usize,
    pub h: usize,
    pub k: usize,
    pub trials: usize,
    pub recovery_rate: f64,
    pub mean_encode_ns: f64,
    pub mean_decode_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub note: String,
    pub rows: Vec<BenchRow>,
}

/// Cartesian product of the given axes.
pub fn grid(ns: &[usize], ds: &[usize], us: &[usize], es: &[usize], p: f64) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for &n in ns {
        for &d in ds {
            for &u in us {
                for &e in es {
                    out.push(GridPoint { n, d, u, e, p });
                }
            }
        }
    }
    out
}

/// Builds a bundle per point (seeded from `base.seed`) and runs `base.trials`
/// trials with exactly `e` random flips.
pub fn run_grid(points: &[GridPoint], base: &ExperimentConfig) -> Result<BenchReport> {
    if points.is_empty() {
        return Err(CliError::Usage("benchmark grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(points.len());
    for pt in points {
        let config = ExperimentConfig {
            n: pt.n,
            d: pt.d,
            u: pt.u,
            e: pt.e,
            p: pt.p,
            ..base.clone()
        };
        config.validate()?;
        let bundle = generate(&config)?;
        let records = run(
            &bundle,
            &SimulationOptions::for_bundle(&bundle, config.trials, config.seed),
        )?;
        let s = summarize(&bundle, &records);
        rows.push(BenchRow {
            n: pt.n,
            d: pt.d,
            u: pt.u,
            e: pt.e,
            p: pt.p,
            t: bundle.scheme.tests(),
            h: bundle.scheme.h(),
            k: bundle.scheme.k(),
            trials: s.trials,
            recovery_rate: s.recovery_rate,
            mean_encode_ns: s.mean_encode_ns,
            mean_decode_ns: s.mean_decode_ns,
        });
    }
    Ok(BenchReport {
        note: ASYMPTOTIC_NOTE.into(),
        rows,
    })
}

pub fn report_csv(report: &BenchReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Csv(e.into_error().into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_is_usage_error() {
        let err = run_grid(&[], &ExperimentConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn t_grows_with_n() {
        let base = ExperimentConfig {
            trials: 3,
            seed: 4,
            ..ExperimentConfig::default()
        };
        let report = run_grid(&grid(&[32, 64, 128], &[4], &[2], &[0], 0.0), &base).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert!(report.rows.windows(2).all(|w| w[0].t < w[1].t));
        assert!(report.note.contains("not reproduced"));
        for r in &report.rows {
            assert_eq!(r.t, (2 * r.k + 1) * r.h);
        }
    }

    #[test]
    fn single_point_single_row() {
        let base = ExperimentConfig {
            trials: 2,
            ..ExperimentConfig::default()
        };
        let report = run_grid(&grid(&[16], &[3], &[2], &[0], 0.0), &base).unwrap();
        let csv = String::from_utf8(report_csv(&report).unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 2);
    }
}
