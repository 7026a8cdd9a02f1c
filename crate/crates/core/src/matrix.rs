//! Bit-packed binary vectors and matrices.
//!
//! Matrices are stored row-major with each row padded to a whole number of
//! `u64` words; bit `c` of a row lives in word `c / 64` at position `c % 64`
//! (LSB first). Padding bits are always zero, so word-wise popcounts are exact.
//!
//! The on-disk format is a single header line followed by a base64 payload:
//!
//! ```text
//! TGTMAT v1 rows=<r> cols=<c> kind=<disjunct|good|augmented|final> params=<json>
//! <base64 of ceil(r*c/64) little-endian u64 words>
//! ```
//!
//! The payload packs the `r*c` bits contiguously (bit index `row*cols + col`)
//! rather than row-padded, and any trailing padding bits must be zero.

use std::fmt;
use std::str::FromStr;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const WORD: usize = 64;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

fn tail_mask(bits: usize) -> u64 {
    match bits % WORD {
        0 => !0,
        r => (1u64 << r) - 1,
    }
}

/// A fixed-length packed binary vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        Self::zeros(len).not()
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut v = Self::zeros(len);
        for i in 0..len {
            if f(i) {
                v.words[i / WORD] |= 1 << (i % WORD);
            }
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self::from_fn(bits.len(), |i| bits[i])
    }

    /// Vector of length `len` with ones exactly at the given 0-based indices.
    pub fn from_support(len: usize, support: &[usize]) -> Result<Self> {
        let mut v = Self::zeros(len);
        for &i in support {
            if i >= len {
                return Err(Error::Parameter(format!(
                    "index {} out of range for length {len}",
                    i + 1
                )));
            }
            v.words[i / WORD] |= 1 << (i % WORD);
        }
        Ok(v)
    }

    pub(crate) fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), words_for(len));
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        Self { len, words }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    /// Number of set bits.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Strictly increasing 0-based indices of the set bits.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.weight());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                out.push(wi * WORD + w.trailing_zeros() as usize);
                w &= w - 1;
            }
        }
        out
    }

    fn check_len(&self, other: &BitVector, context: &'static str) -> Result<()> {
        if self.len != other.len {
            return Err(Error::dim(context, self.len, other.len));
        }
        Ok(())
    }

    fn zip_words(&self, other: &BitVector, f: impl Fn(u64, u64) -> u64) -> BitVector {
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| f(a, b))
            .collect();
        BitVector::from_words(self.len, words)
    }

    pub fn and(&self, other: &BitVector) -> Result<BitVector> {
        self.check_len(other, "vector AND")?;
        Ok(self.zip_words(other, |a, b| a & b))
    }

    pub fn or(&self, other: &BitVector) -> Result<BitVector> {
        self.check_len(other, "vector OR")?;
        Ok(self.zip_words(other, |a, b| a | b))
    }

    /// Bitwise complement; padding stays zero.
    pub fn not(&self) -> BitVector {
        BitVector::from_words(self.len, self.words.iter().map(|w| !w).collect())
    }

    /// `|supp(self) ∩ supp(other)|`.
    pub fn intersection_weight(&self, other: &BitVector) -> Result<usize> {
        self.check_len(other, "vector intersection")?;
        Ok(popcount_and(&self.words, &other.words))
    }

    pub fn hamming(&self, other: &BitVector) -> Result<usize> {
        self.check_len(other, "hamming distance")?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// True when every set bit of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BitVector) -> Result<bool> {
        self.check_len(other, "subset test")?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0))
    }

    /// Copy with the bits at `positions` inverted.
    pub fn with_flipped(&self, positions: &[usize]) -> Result<BitVector> {
        let mut out = self.clone();
        for &p in positions {
            if p >= self.len {
                return Err(Error::Parameter(format!(
                    "flip position {} out of range for length {}",
                    p + 1,
                    self.len
                )));
            }
            out.words[p / WORD] ^= 1 << (p % WORD);
        }
        Ok(out)
    }

    /// Bits `start..start + len` as a new vector.
    pub fn slice(&self, start: usize, len: usize) -> BitVector {
        assert!(start + len <= self.len, "slice out of range");
        BitVector::from_fn(len, |i| self.get(start + i))
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a BitVector>) -> BitVector {
        let parts: Vec<&BitVector> = parts.into_iter().collect();
        let len = parts.iter().map(|p| p.len).sum();
        let mut out = BitVector::zeros(len);
        let mut offset = 0;
        for p in parts {
            for i in p.support() {
                let j = offset + i;
                out.words[j / WORD] |= 1 << (j % WORD);
            }
            offset += p.len;
        }
        out
    }

    /// `TGTVEC v1 len=<n>` header plus base64 payload.
    pub fn to_text(&self) -> String {
        format!(
            "TGTVEC v1 len={}\n{}\n",
            self.len,
            B64.encode(words_to_bytes(&self.words))
        )
    }

    pub fn from_text(text: &str) -> Result<BitVector> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .filter(|l| !l.trim().is_empty())
            .ok_or_else(|| Error::Parse("empty input".into()))?;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("TGTVEC") || tokens.next() != Some("v1") {
            return Err(Error::Parse(format!("not a TGTVEC v1 header: {header:?}")));
        }
        let len = parse_field(tokens.next(), "len")?;
        if let Some(extra) = tokens.next() {
            return Err(Error::Parse(format!("unexpected header token {extra:?}")));
        }
        let words = decode_payload(lines.next(), len)?;
        Ok(BitVector { len, words })
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector(")?;
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        write!(f, ")")
    }
}

/// Parses a string of `0`/`1` characters; whitespace is ignored.
impl FromStr for BitVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BitVector::from_bools(&bits))
    }
}

/// Restricts `x` to the support of `g_row`: output bit `j` is `x_j AND g_j`.
pub fn restrict_row(x: &BitVector, g_row: &BitVector) -> Result<BitVector> {
    x.and(g_row)
        .map_err(|_| Error::dim("restrict_row", x.len(), g_row.len()))
}

#[inline]
pub(crate) fn popcount_and(a: &[u64], b: &[u64]) -> usize {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x & y).count_ones() as usize)
        .sum()
}

/// Immutable dense binary matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    /// Panics if either dimension is zero.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        let words_per_row = words_for(cols);
        let mut data = vec![0u64; rows * words_per_row];
        for r in 0..rows {
            for c in 0..cols {
                if f(r, c) {
                    data[r * words_per_row + c / WORD] |= 1 << (c % WORD);
                }
            }
        }
        Self {
            rows,
            cols,
            words_per_row,
            data,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| false)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| r == c)
    }

    pub fn from_rows(rows: &[BitVector]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Parameter("matrix needs at least one row".into()))?;
        let cols = first.len();
        if cols == 0 {
            return Err(Error::Parameter("matrix needs at least one column".into()));
        }
        let words_per_row = words_for(cols);
        let mut data = Vec::with_capacity(rows.len() * words_per_row);
        for row in rows {
            if row.len() != cols {
                return Err(Error::dim("matrix row length", cols, row.len()));
            }
            data.extend_from_slice(row.words());
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            words_per_row,
            data,
        })
    }

    /// Builds a matrix from `0`/`1` strings, one per row.
    pub fn parse_rows(rows: &[&str]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| r.parse::<BitVector>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(
            r < self.rows && c < self.cols,
            "index ({r}, {c}) out of range"
        );
        self.data[r * self.words_per_row + c / WORD] >> (c % WORD) & 1 == 1
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        let start = r * self.words_per_row;
        &self.data[start..start + self.words_per_row]
    }

    pub fn row(&self, r: usize) -> BitVector {
        assert!(r < self.rows, "row {r} out of range");
        BitVector::from_words(self.cols, self.row_words(r).to_vec())
    }

    pub fn row_iter(&self) -> impl Iterator<Item = BitVector> + '_ {
        (0..self.rows).map(|r| self.row(r))
    }

    /// Column `c` as a vector of length `rows`.
    pub fn column(&self, c: usize) -> BitVector {
        BitVector::from_fn(self.rows, |r| self.get(r, c))
    }

    pub fn transpose(&self) -> BitMatrix {
        BitMatrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `|supp(row r) ∩ supp(x)|`; `x` must have length `cols`.
    #[inline]
    pub fn row_intersection(&self, r: usize, x: &BitVector) -> usize {
        debug_assert_eq!(x.len(), self.cols);
        popcount_and(self.row_words(r), x.words())
    }

    /// Entrywise complement with identical dimensions.
    pub fn complement(&self) -> BitMatrix {
        let mask = tail_mask(self.cols);
        let mut data: Vec<u64> = self.data.iter().map(|w| !w).collect();
        for r in 0..self.rows {
            data[r * self.words_per_row + self.words_per_row - 1] &= mask;
        }
        BitMatrix { data, ..*self }
    }

    /// Rows of `top` followed by rows of `bottom`.
    pub fn stack(top: &BitMatrix, bottom: &BitMatrix) -> Result<BitMatrix> {
        Self::stack_all(&[top, bottom])
    }

    pub fn stack_all(parts: &[&BitMatrix]) -> Result<BitMatrix> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Parameter("nothing to stack".into()))?;
        let cols = first.cols;
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            if p.cols != cols {
                return Err(Error::dim("stack column count", cols, p.cols));
            }
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Ok(BitMatrix {
            rows,
            cols,
            words_per_row: first.words_per_row,
            data,
        })
    }

    /// `self × diag(g_row)`: every row ANDed with `g_row`.
    pub fn mask_columns(&self, g_row: &BitVector) -> Result<BitMatrix> {
        if g_row.len() != self.cols {
            return Err(Error::dim("column mask length", self.cols, g_row.len()));
        }
        let mut data = self.data.clone();
        for chunk in data.chunks_mut(self.words_per_row) {
            for (w, g) in chunk.iter_mut().zip(g_row.words()) {
                *w &= g;
            }
        }
        Ok(BitMatrix { data, ..*self })
    }

    fn packed_payload(&self) -> Vec<u64> {
        let total = self.rows * self.cols;
        let mut out = vec![0u64; words_for(total)];
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    let i = r * self.cols + c;
                    out[i / WORD] |= 1 << (i % WORD);
                }
            }
        }
        out
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            f.write_str("  ")?;
            for c in 0..self.cols {
                f.write_str(if self.get(r, c) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Role of a matrix in a scheme, recorded in the file header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    /// The OR-decodable matrix `M`.
    Disjunct,
    /// The indicating matrix `G`.
    Good,
    /// `M` stacked over its complement.
    Augmented,
    /// The full measurement matrix `T`.
    Final,
}

impl MatrixKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MatrixKind::Disjunct => "disjunct",
            MatrixKind::Good => "good",
            MatrixKind::Augmented => "augmented",
            MatrixKind::Final => "final",
        }
    }
}

impl FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "disjunct" => MatrixKind::Disjunct,
            "good" => MatrixKind::Good,
            "augmented" => MatrixKind::Augmented,
            "final" => MatrixKind::Final,
            other => return Err(Error::Parse(format!("unknown matrix kind {other:?}"))),
        })
    }
}

/// A matrix together with its header metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub matrix: BitMatrix,
    pub kind: MatrixKind,
    pub params: serde_json::Value,
}

impl MatrixFile {
    pub fn new(matrix: BitMatrix, kind: MatrixKind, params: serde_json::Value) -> Self {
        Self {
            matrix,
            kind,
            params,
        }
    }

    pub fn to_text(&self) -> String {
        // serde_json's compact form never emits a raw newline.
        let params = serde_json::to_string(&self.params).expect("JSON value serializes");
        format!(
            "TGTMAT v1 rows={} cols={} kind={} params={}\n{}\n",
            self.matrix.rows,
            self.matrix.cols,
            self.kind.as_str(),
            params,
            B64.encode(words_to_bytes(&self.matrix.packed_payload()))
        )
    }

    pub fn from_text(text: &str) -> Result<MatrixFile> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .filter(|l| !l.trim().is_empty())
            .ok_or_else(|| Error::Parse("empty input".into()))?;
        let (fixed, params) = header
            .split_once(" params=")
            .ok_or_else(|| Error::Parse("header lacks params field".into()))?;
        let mut tokens = fixed.split_whitespace();
        if tokens.next() != Some("TGTMAT") || tokens.next() != Some("v1") {
            return Err(Error::Parse(format!("not a TGTMAT v1 header: {header:?}")));
        }
        let rows = parse_field(tokens.next(), "rows")?;
        let cols = parse_field(tokens.next(), "cols")?;
        let kind = tokens
            .next()
            .and_then(|t| t.strip_prefix("kind="))
            .ok_or_else(|| Error::Parse("missing kind field".into()))?
            .parse::<MatrixKind>()?;
        if let Some(extra) = tokens.next() {
            return Err(Error::Parse(format!("unexpected header token {extra:?}")));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::Parse("matrix dimensions must be positive".into()));
        }
        let params: serde_json::Value = serde_json::from_str(params)
            .map_err(|e| Error::Parse(format!("params is not valid JSON: {e}")))?;
        let total = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Parse("matrix dimensions overflow".into()))?;
        let payload = decode_payload(lines.next(), total)?;
        let bit = |i: usize| payload[i / WORD] >> (i % WORD) & 1 == 1;
        let matrix = BitMatrix::from_fn(rows, cols, |r, c| bit(r * cols + c));
        Ok(MatrixFile {
            matrix,
            kind,
            params,
        })
    }
}

fn parse_field(token: Option<&str>, name: &str) -> Result<usize> {
    token
        .and_then(|t| t.strip_prefix(name))
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| Error::Parse(format!("missing {name} field")))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad {name} value: {e}")))
}

fn words_to_bytes(words: &[u64]) -> Vec<u8> {
    words.iter().flat_map(|w| w.to_le_bytes()).collect()
}

fn decode_payload(line: Option<&str>, bits: usize) -> Result<Vec<u64>> {
    let line = line.map(str::trim).unwrap_or("");
    let bytes = B64
        .decode(line)
        .map_err(|e| Error::Parse(format!("payload is not base64: {e}")))?;
    let expected = words_for(bits) * 8;
    if bytes.len() != expected {
        return Err(Error::Parse(format!(
            "payload has {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let words: Vec<u64> = bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if let Some(&last) = words.last() {
        if last & !tail_mask(bits) != 0 {
            return Err(Error::Parse("nonzero padding bits".into()));
        }
    }
    Ok(words)
}

/// Sorted set of defective item indices, 0-based internally.
///
/// `Display` and JSON use 1-based indices.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DefectiveSet {
    indices: Vec<usize>,
}

impl DefectiveSet {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_one_based(items: &[usize]) -> Result<Self> {
        let zero_based = items
            .iter()
            .map(|&i| {
                i.checked_sub(1)
                    .ok_or_else(|| Error::Parameter("item indices are 1-based".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(zero_based))
    }

    pub fn from_vector(x: &BitVector) -> Self {
        Self {
            indices: x.support(),
        }
    }

    pub fn to_vector(&self, n: usize) -> Result<BitVector> {
        BitVector::from_support(n, &self.indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }
}

impl fmt::Display for DefectiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for DefectiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DefectiveSet{self}")
    }
}

impl FromIterator<usize> for DefectiveSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::new(iter)
    }
}

impl Serialize for DefectiveSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DefectiveSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<usize>::deserialize(d)?;
        DefectiveSet::from_one_based(&raw).map_err(serde::de::Error::custom)
    }
}
