//! Non-adaptive threshold group testing with no gap.
//!
//! A test on a pool of items is positive iff the pool holds at least `u`
//! defective items. This crate builds the measurement matrices used to pool
//! items, simulates test outcomes, and recovers the defective set with an
//! error-free decoder and a multiset-voting decoder that tolerates up to `e`
//! flipped outcomes.
//!
//! Layout:
//!
//! * [`matrix`]: bit-packed matrices/vectors and the `TGTMAT`/`TGTVEC` file format.
//! * [`semantics`]: threshold and OR test operators, error injection.
//! * [`constructions`]: disjunct and good measurement matrices with verifiers.
//! * [`codec`]: the block encoder and both decoders.
//! * [`oracle`]: exhaustive ground-truth decoding for cross-validation.

pub mod codec;
pub mod constructions;
pub mod error;
pub mod matrix;
pub mod oracle;
pub mod semantics;
mod serde_util;

pub use codec::{
    build_scheme, cover_decode, dec_natgt, encode, find_defectives, find_defectives_multiset,
    flatten, recover_yprime, split_blocks, BlockOutcome, BlockTrace, BlockVerdict,
    CandidateMultiset, CoverResult, DecodeOutput, DecodeStatus, Decoder, RejectReason, Sanitizer,
    Scheme,
};
pub use constructions::{
    construct_disjunct, construct_good, is_good_for, lemma1_check, lemma1_partition,
    verify_disjunct, verify_threshold_disjunct, CriticalZeroPair, DisjunctCertificate,
    DisjunctConfig, GoodCertificate, GoodConfig, GoodnessReport, Lemma1Check,
    ThresholdDisjunctReport, VerifyMethod, VerifyMode,
};
pub use error::{Error, Result};
pub use matrix::{restrict_row, BitMatrix, BitVector, DefectiveSet, MatrixFile, MatrixKind};
pub use oracle::{
    brute_force_decode, cross_check, ConsistencySet, CrossCheck, DEFAULT_ENUMERATION_LIMIT,
};
pub use semantics::{
    apply_or, apply_threshold, inject_errors, or_test, threshold_test, FlipMode, SchemeParams,
};

/// Deterministic RNG used everywhere a seed is accepted.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the crate's RNG from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
