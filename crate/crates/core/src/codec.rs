//! Block encoder and the two decoders.
//!
//! The measurement matrix `T` stacks, for every row `g_i` of `G`, the row
//! itself followed by `M × diag(g_i)` and `M̄ × diag(g_i)`; it has
//! `(2k + 1) h` rows. Block `i` of the outcome therefore observes the
//! defectives restricted to `g_i`, through `M` and its complement.
//!
//! When a block holds exactly `u` defectives, the pair of outcome vectors
//! determines the OR outcome `y′ = M ⊙ x_i` bitwise, and the cover decoder
//! on `M` recovers the block's defectives. The error-tolerant decoder adds
//! every accepted block to a multiset and keeps items seen at least `e + 1`
//! times.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{restrict_row, BitMatrix, BitVector, DefectiveSet};
use crate::semantics::{apply_or, apply_threshold, threshold_test, SchemeParams};
use crate::serde_util::{one_based, one_based_counts};

/// The matrices of one encoding scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    params: SchemeParams,
    g: BitMatrix,
    m: BitMatrix,
    m_bar: BitMatrix,
    t: BitMatrix,
}

impl Scheme {
    /// Assembles `T` from the indicating matrix `g` (h×n) and the
    /// disjunct matrix `m` (k×n).
    pub fn build(params: SchemeParams, g: BitMatrix, m: BitMatrix) -> Result<Scheme> {
        params.validate()?;
        if g.cols() != m.cols() {
            return Err(Error::dim("G and M column counts", g.cols(), m.cols()));
        }
        if g.cols() != params.n {
            return Err(Error::dim("matrix columns vs n", params.n, g.cols()));
        }
        let m_bar = m.complement();
        let mut parts = Vec::with_capacity(3 * g.rows());
        for i in 0..g.rows() {
            let row = g.row(i);
            parts.push(BitMatrix::from_rows(std::slice::from_ref(&row))?);
            parts.push(m.mask_columns(&row)?);
            parts.push(m_bar.mask_columns(&row)?);
        }
        let t = BitMatrix::stack_all(&parts.iter().collect::<Vec<_>>())?;
        Ok(Scheme {
            params,
            g,
            m,
            m_bar,
            t,
        })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn g(&self) -> &BitMatrix {
        &self.g
    }

    pub fn m(&self) -> &BitMatrix {
        &self.m
    }

    pub fn m_bar(&self) -> &BitMatrix {
        &self.m_bar
    }

    /// The full `(2k + 1) h × n` measurement matrix.
    pub fn t(&self) -> &BitMatrix {
        &self.t
    }

    pub fn h(&self) -> usize {
        self.g.rows()
    }

    pub fn k(&self) -> usize {
        self.m.rows()
    }

    pub fn tests(&self) -> usize {
        self.t.rows()
    }

    pub fn block_len(&self) -> usize {
        2 * self.k() + 1
    }
}

pub fn build_scheme(params: SchemeParams, g: BitMatrix, m: BitMatrix) -> Result<Scheme> {
    Scheme::build(params, g, m)
}

/// Outcomes of one block: the indicator test on `g_i` and the `M`/`M̄` parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockOutcome {
    pub indicator: bool,
    pub y_block: BitVector,
    pub y_bar_block: BitVector,
}

impl BlockOutcome {
    pub fn new(indicator: bool, y_block: BitVector, y_bar_block: BitVector) -> Result<Self> {
        if y_block.len() != y_bar_block.len() {
            return Err(Error::dim("block halves", y_block.len(), y_bar_block.len()));
        }
        Ok(Self {
            indicator,
            y_block,
            y_bar_block,
        })
    }
}

pub fn encode(scheme: &Scheme, x: &BitVector) -> Result<Vec<BlockOutcome>> {
    let n = scheme.params.n;
    if x.len() != n {
        return Err(Error::dim("item vector length", n, x.len()));
    }
    let u = scheme.params.u;
    (0..scheme.h())
        .into_par_iter()
        .map(|i| {
            let g_row = scheme.g.row(i);
            let x_i = restrict_row(x, &g_row)?;
            Ok(BlockOutcome {
                indicator: threshold_test(&g_row, x, u)?,
                y_block: apply_threshold(&scheme.m, &x_i, u)?,
                y_bar_block: apply_threshold(&scheme.m_bar, &x_i, u)?,
            })
        })
        .collect()
}

/// Concatenates blocks in test order: `y_1, y_1-block, ȳ_1-block, y_2, ...`.
pub fn flatten(blocks: &[BlockOutcome]) -> BitVector {
    let indicators: Vec<BitVector> = blocks
        .iter()
        .map(|b| BitVector::from_bools(&[b.indicator]))
        .collect();
    let parts = blocks
        .iter()
        .zip(&indicators)
        .flat_map(|(b, ind)| [ind, &b.y_block, &b.y_bar_block]);
    BitVector::concat(parts)
}

/// Inverse of [`flatten`] for a scheme with `h` blocks of `k`-row halves.
pub fn split_blocks(flat: &BitVector, h: usize, k: usize) -> Result<Vec<BlockOutcome>> {
    let block = 2 * k + 1;
    if flat.len() != block * h {
        return Err(Error::dim("outcome vector length", block * h, flat.len()));
    }
    Ok((0..h)
        .map(|i| {
            let base = i * block;
            BlockOutcome {
                indicator: flat.get(base),
                y_block: flat.slice(base + 1, k),
                y_bar_block: flat.slice(base + 1 + k, k),
            }
        })
        .collect())
}

/// Per row: `y′ = 1` if `y = 1`; `0` if `(y, ȳ) = (0, 1)`; `1` if `(0, 0)`.
///
/// Equals `M ⊙ x_i` whenever the block holds exactly `u` defectives.
pub fn recover_yprime(block: &BlockOutcome) -> BitVector {
    block
        .y_block
        .or(&block.y_bar_block.not())
        .expect("block halves have equal length")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverResult {
    Items(DefectiveSet),
    /// More than `cap` columns survived.
    Overflow {
        found: usize,
    },
}

/// Naive OR decoder: item `j` survives iff every row containing it is positive.
pub fn cover_decode(m: &BitMatrix, yprime: &BitVector, cap: usize) -> Result<CoverResult> {
    if m.rows() != yprime.len() {
        return Err(Error::dim(
            "cover_decode outcome length",
            m.rows(),
            yprime.len(),
        ));
    }
    let words = m.cols().div_ceil(64);
    let mut eliminated = vec![0u64; words];
    for r in 0..m.rows() {
        if !yprime.get(r) {
            for (e, w) in eliminated.iter_mut().zip(m.row_words(r)) {
                *e |= w;
            }
        }
    }
    let survivors = BitVector::from_fn(m.cols(), |j| eliminated[j / 64] >> (j % 64) & 1 == 0);
    let found = survivors.weight();
    if found > cap {
        return Ok(CoverResult::Overflow { found });
    }
    Ok(CoverResult::Items(DefectiveSet::from_vector(&survivors)))
}

/// What a candidate block set is compared against before acceptance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sanitizer {
    /// OR of the candidate's `M` columns must equal the recovered `y′`.
    #[default]
    RecoveredOr,
    /// OR of the candidate's `M` columns must equal the raw threshold block
    /// `M ⊗ x_i`. For `u >= 2` a disjunct `M` makes these differ on the
    /// isolating rows, so this variant rejects correctly decoded blocks.
    ThresholdOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum RejectReason {
    Overflow { found: usize },
    WrongSize { found: usize },
    Mismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum BlockVerdict {
    /// Indicator test negative.
    Skipped,
    Accepted {
        items: DefectiveSet,
    },
    Rejected(RejectReason),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTrace {
    #[serde(with = "one_based")]
    pub block: usize,
    pub indicator: bool,
    #[serde(flatten)]
    pub verdict: BlockVerdict,
}

/// Multiset of candidate defectives with occurrence counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateMultiset {
    #[serde(with = "one_based_counts")]
    counts: BTreeMap<usize, usize>,
}

impl CandidateMultiset {
    pub fn add(&mut self, items: &DefectiveSet) {
        for j in items.iter() {
            *self.counts.entry(j).or_insert(0) += 1;
        }
    }

    pub fn merge(&mut self, other: &CandidateMultiset) {
        for (&j, &c) in &other.counts {
            *self.counts.entry(j).or_insert(0) += c;
        }
    }

    pub fn count(&self, j: usize) -> usize {
        self.counts.get(&j).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<usize, usize> {
        &self.counts
    }

    /// Total size counting multiplicity.
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Distinct items.
    pub fn collapse(&self) -> DefectiveSet {
        self.counts.keys().copied().collect()
    }

    /// Items occurring at least `min` times.
    pub fn at_least(&self, min: usize) -> DefectiveSet {
        self.counts
            .iter()
            .filter(|(_, &c)| c >= min)
            .map(|(&j, _)| j)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeStatus {
    Decoded,
    /// No indicator test was positive (e.g. fewer than `u` defectives).
    NoPositiveTests,
    /// Some indicator was positive but every such block failed sanitization.
    AllBlocksRejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeOutput {
    pub multiset: CandidateMultiset,
    pub trace: Vec<BlockTrace>,
    pub status: DecodeStatus,
}

impl DecodeOutput {
    /// Union of accepted blocks.
    pub fn defectives(&self) -> DefectiveSet {
        self.multiset.collapse()
    }

    /// Items voted for by at least `e + 1` accepted blocks.
    pub fn voted(&self, e: usize) -> DefectiveSet {
        self.multiset.at_least(e + 1)
    }

    pub fn accepted_blocks(&self) -> usize {
        self.trace
            .iter()
            .filter(|t| matches!(t.verdict, BlockVerdict::Accepted { .. }))
            .count()
    }

    pub fn rejected_blocks(&self) -> usize {
        self.trace
            .iter()
            .filter(|t| matches!(t.verdict, BlockVerdict::Rejected(_)))
            .count()
    }
}

/// Block decoder with configurable cover cap and sanitization.
#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    scheme: &'a Scheme,
    cap: usize,
    sanitizer: Sanitizer,
}

impl<'a> Decoder<'a> {
    pub fn new(scheme: &'a Scheme) -> Self {
        Self {
            scheme,
            cap: scheme.params.d + 1,
            sanitizer: Sanitizer::default(),
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_sanitizer(mut self, sanitizer: Sanitizer) -> Self {
        self.sanitizer = sanitizer;
        self
    }

    fn check_dims(&self, outcomes: &[BlockOutcome]) -> Result<()> {
        if outcomes.len() != self.scheme.h() {
            return Err(Error::dim(
                "number of blocks",
                self.scheme.h(),
                outcomes.len(),
            ));
        }
        let k = self.scheme.k();
        for b in outcomes {
            if b.y_block.len() != k || b.y_bar_block.len() != k {
                return Err(Error::dim("block half length", k, b.y_block.len()));
            }
        }
        Ok(())
    }

    pub fn decode_block(&self, index: usize, block: &BlockOutcome) -> BlockTrace {
        let verdict = if !block.indicator {
            BlockVerdict::Skipped
        } else {
            self.sanitize(block)
        };
        BlockTrace {
            block: index,
            indicator: block.indicator,
            verdict,
        }
    }

    fn sanitize(&self, block: &BlockOutcome) -> BlockVerdict {
        let m = &self.scheme.m;
        let yprime = recover_yprime(block);
        let items = match cover_decode(m, &yprime, self.cap).expect("dimensions checked") {
            CoverResult::Overflow { found } => {
                return BlockVerdict::Rejected(RejectReason::Overflow { found })
            }
            CoverResult::Items(items) => items,
        };
        if items.len() != self.scheme.params.u {
            return BlockVerdict::Rejected(RejectReason::WrongSize { found: items.len() });
        }
        let indicator = items.to_vector(m.cols()).expect("decoded items in range");
        let union = apply_or(m, &indicator).expect("dimensions match");
        let reference = match self.sanitizer {
            Sanitizer::RecoveredOr => &yprime,
            Sanitizer::ThresholdOutcome => &block.y_block,
        };
        if &union == reference {
            BlockVerdict::Accepted { items }
        } else {
            BlockVerdict::Rejected(RejectReason::Mismatch)
        }
    }

    /// Runs every block and collects accepted sets with multiplicity.
    pub fn run(&self, outcomes: &[BlockOutcome]) -> Result<DecodeOutput> {
        self.check_dims(outcomes)?;
        let trace: Vec<BlockTrace> = outcomes
            .par_iter()
            .enumerate()
            .map(|(i, b)| self.decode_block(i, b))
            .collect();
        let mut multiset = CandidateMultiset::default();
        for t in &trace {
            if let BlockVerdict::Accepted { items } = &t.verdict {
                multiset.add(items);
            }
        }
        let status = if !multiset.is_empty() {
            DecodeStatus::Decoded
        } else if trace.iter().any(|t| t.indicator) {
            DecodeStatus::AllBlocksRejected
        } else {
            DecodeStatus::NoPositiveTests
        };
        Ok(DecodeOutput {
            multiset,
            trace,
            status,
        })
    }
}

/// Error-free decoder: union of all accepted blocks.
pub fn find_defectives(scheme: &Scheme, outcomes: &[BlockOutcome]) -> Result<DefectiveSet> {
    Ok(Decoder::new(scheme).run(outcomes)?.defectives())
}

/// Like [`find_defectives`] but keeps every accepted block's items with multiplicity.
pub fn find_defectives_multiset(
    scheme: &Scheme,
    outcomes: &[BlockOutcome],
) -> Result<CandidateMultiset> {
    Ok(Decoder::new(scheme).run(outcomes)?.multiset)
}

/// Error-tolerant decoder: items accepted by at least `e + 1` blocks.
pub fn dec_natgt(scheme: &Scheme, outcomes: &[BlockOutcome], e: usize) -> Result<DefectiveSet> {
    Ok(Decoder::new(scheme).run(outcomes)?.voted(e))
}
