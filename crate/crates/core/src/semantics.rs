//! Test operators and outcome corruption.
//!
//! `threshold_test` is the u-threshold outcome of one pool: positive iff the
//! pool contains at least `u` defectives. `or_test` is the classical
//! (u = 1) outcome.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{BitMatrix, BitVector};

/// Scheme parameters. The gap is always zero, so the negative threshold is
/// `u - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    pub n: usize,
    pub d: usize,
    pub u: usize,
    pub e: usize,
    pub p: f64,
}

impl SchemeParams {
    pub fn new(n: usize, d: usize, u: usize, e: usize, p: f64) -> Result<Self> {
        let params = Self { n, d, u, e, p };
        params.validate()?;
        Ok(params)
    }

    /// Checks `2 <= u <= d < n` and `0 <= p < 1`.
    pub fn validate(&self) -> Result<()> {
        if self.u < 2 {
            return Err(Error::Parameter(format!(
                "u must be at least 2, got {}",
                self.u
            )));
        }
        if self.u > self.d {
            return Err(Error::Parameter(format!(
                "u ({}) must not exceed d ({})",
                self.u, self.d
            )));
        }
        if self.d >= self.n {
            return Err(Error::Parameter(format!(
                "d ({}) must be smaller than n ({})",
                self.d, self.n
            )));
        }
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::Parameter(format!(
                "p must lie in [0, 1), got {}",
                self.p
            )));
        }
        Ok(())
    }

    /// `max(u, d - u)`.
    pub fn d0(&self) -> usize {
        self.u.max(self.d - self.u)
    }

    /// Largest defective count that still yields a negative test.
    pub fn ell(&self) -> usize {
        self.u - 1
    }

    pub fn gap(&self) -> usize {
        self.u - self.ell() - 1
    }
}

pub fn threshold_test(row: &BitVector, x: &BitVector, u: usize) -> Result<bool> {
    if u == 0 {
        return Err(Error::Parameter("threshold must be at least 1".into()));
    }
    let hits = row
        .intersection_weight(x)
        .map_err(|_| Error::dim("threshold test", row.len(), x.len()))?;
    Ok(hits >= u)
}

pub fn or_test(row: &BitVector, x: &BitVector) -> Result<bool> {
    threshold_test(row, x, 1)
}

/// `m ⊗ x`: one threshold outcome per row of `m`.
pub fn apply_threshold(m: &BitMatrix, x: &BitVector, u: usize) -> Result<BitVector> {
    if u == 0 {
        return Err(Error::Parameter("threshold must be at least 1".into()));
    }
    if m.cols() != x.len() {
        return Err(Error::dim("apply_threshold", m.cols(), x.len()));
    }
    Ok(BitVector::from_fn(m.rows(), |r| {
        m.row_intersection(r, x) >= u
    }))
}

/// `m ⊙ x`: Boolean OR semantics.
pub fn apply_or(m: &BitMatrix, x: &BitVector) -> Result<BitVector> {
    apply_threshold(m, x, 1)
}

/// How many positions `inject_errors` flips.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlipMode {
    /// Exactly `e` positions.
    #[default]
    Exact,
    /// A count drawn uniformly from `0..=e`.
    UpTo,
}

/// Flips distinct positions of `y` chosen uniformly without replacement.
///
/// Returns the corrupted vector and the sorted flip positions (0-based).
pub fn inject_errors<R: Rng + ?Sized>(
    y: &BitVector,
    e: usize,
    mode: FlipMode,
    rng: &mut R,
) -> Result<(BitVector, Vec<usize>)> {
    if e > y.len() {
        return Err(Error::Parameter(format!(
            "cannot flip {e} positions of a length-{} vector",
            y.len()
        )));
    }
    let count = match mode {
        FlipMode::Exact => e,
        FlipMode::UpTo => rng.random_range(0..=e),
    };
    let mut flips = index::sample(rng, y.len(), count).into_vec();
    flips.sort_unstable();
    let corrupted = y.with_flipped(&flips)?;
    Ok((corrupted, flips))
}
