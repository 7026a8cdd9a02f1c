use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use tgt_core::{rng_from_seed, DisjunctConfig, GoodConfig, SchemeParams, SeededRng};

use crate::error::{CliError, Result};

/// ChaCha stream ids carved out of one master seed.
pub const M_STREAM: u64 = 1;
pub const G_STREAM: u64 = 2;
pub const TRIAL_STREAM: u64 = 3;

/// An RNG on `stream` of the ChaCha8 generator keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = rng_from_seed(seed);
    rng.set_stream(stream);
    rng
}

/// RNG for trial `trial`: keyed by `seed ^ trial` on the trial stream.
pub fn trial_rng(seed: u64, trial: u64) -> SeededRng {
    stream_rng(seed ^ trial, TRIAL_STREAM)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: usize,
    pub u: usize,
    pub e: usize,
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
    pub c: f64,
    pub c_g: f64,
    /// Work cap for exhaustive verification.
    pub budget: u128,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let dc = DisjunctConfig::default();
        let gc = GoodConfig::default();
        Self {
            n: 32,
            d: 4,
            u: 2,
            e: 0,
            p: 0.0,
            trials: 100,
            seed: 0,
            c: dc.c,
            c_g: gc.c_g,
            budget: dc.budget,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn params(&self) -> Result<SchemeParams> {
        SchemeParams::new(self.n, self.d, self.u, self.e, self.p).map_err(usage)
    }

    pub fn validate(&self) -> Result<SchemeParams> {
        let params = self.params()?;
        if self.trials == 0 {
            return Err(CliError::Usage("trials must be at least 1".into()));
        }
        if !(self.c > 0.0 && self.c_g > 0.0) {
            return Err(CliError::Usage(
                "constants c and c_g must be positive".into(),
            ));
        }
        Ok(params)
    }

    pub fn disjunct_config(&self) -> DisjunctConfig {
        DisjunctConfig {
            c: self.c,
            budget: self.budget,
            ..DisjunctConfig::default()
        }
    }

    pub fn good_config(&self) -> GoodConfig {
        GoodConfig {
            c_g: self.c_g,
            ..GoodConfig::default()
        }
    }
}

fn usage(e: tgt_core::Error) -> CliError {
    match e {
        tgt_core::Error::Parameter(msg) => CliError::Usage(msg),
        other => CliError::Core(other),
    }
}
