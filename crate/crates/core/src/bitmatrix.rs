//! Tiled bit-matrix storage.
//!
//! The matrix is cut into 512×512-bit tiles. Each tile is stored as a
//! 512×64 matrix of bytes in column-major order: byte `(r, w)` holds the
//! eight bits `(r, 8w..8w+8)` of the tile, least-significant bit first,
//! and the 512 bytes of one byte-column are contiguous. A *lane* is one
//! bit position of one byte-column, i.e. 512 bits spread over 512
//! consecutive bytes.
//!
//! In [`Orientation::ColumnMajorTiles`] a lane is a 512-bit segment of a
//! logical column, which makes column operations contiguous. After
//! [`TiledBitMatrix::local_transpose`] every tile is transposed in place
//! and a lane becomes a 512-bit segment of a logical row. The matrix as
//! seen through [`TiledBitMatrix::get`] does not change.
//!
//! Tiles are stored tile-column by tile-column so that each group of 512
//! logical columns owns one contiguous chunk of memory.

use rayon::prelude::*;
use thiserror::Error;

use crate::bits::BitVec;

/// Side length of a tile in bits.
pub const TILE_BITS: usize = 512;
/// Storage size of one tile.
pub const TILE_BYTES: usize = TILE_BITS * TILE_BITS / 8;

const LANE_BYTES: usize = TILE_BITS;
const LSB: u64 = 0x0101_0101_0101_0101;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BitMatrixError {
    #[error("index ({row}, {col}) out of range for {rows}x{cols} matrix")]
    OutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("operation requires {required:?} orientation")]
    WrongOrientation { required: Orientation },
    #[error("source and destination {0} must differ")]
    SameIndex(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("malformed bitmap text at line {line}: {msg}")]
    BadText { line: usize, msg: String },
}

/// Which logical axis a lane runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    ColumnMajorTiles,
    RowMajorTiles,
}

impl Orientation {
    fn flipped(self) -> Self {
        match self {
            Self::ColumnMajorTiles => Self::RowMajorTiles,
            Self::RowMajorTiles => Self::ColumnMajorTiles,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Lane {
    offset: usize,
    bit: u32,
}

#[inline(always)]
fn load(buf: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(buf[at..at + 8].try_into().unwrap())
}

#[inline(always)]
fn store(buf: &mut [u8], at: usize, v: u64) {
    buf[at..at + 8].copy_from_slice(&v.to_le_bytes());
}

/// Eight lane bits (one per byte, at the byte's LSB) for chunk `k`.
#[inline(always)]
fn lane_chunk(buf: &[u8], lane: Lane, k: usize) -> u64 {
    (load(buf, lane.offset + 8 * k) >> lane.bit) & LSB
}

#[inline(always)]
fn lane_xor_chunk(buf: &mut [u8], lane: Lane, k: usize, v: u64) {
    let at = lane.offset + 8 * k;
    let d = load(buf, at);
    store(buf, at, d ^ ((v & LSB) << lane.bit));
}

#[inline(always)]
fn lane_put_chunk(buf: &mut [u8], lane: Lane, k: usize, v: u64) {
    let at = lane.offset + 8 * k;
    let mask = LSB << lane.bit;
    let d = load(buf, at);
    store(buf, at, (d & !mask) | ((v & LSB) << lane.bit));
}

/// Packs the LSBs of eight bytes into one byte.
#[inline(always)]
fn gather8(v: u64) -> u8 {
    ((v & LSB).wrapping_mul(0x0102_0408_1020_4080) >> 56) as u8
}

const fn spread_table() -> [u64; 256] {
    let mut t = [0u64; 256];
    let mut b = 0;
    while b < 256 {
        let mut v = 0u64;
        let mut i = 0;
        while i < 8 {
            v |= (((b >> i) & 1) as u64) << (8 * i);
            i += 1;
        }
        t[b] = v;
        b += 1;
    }
    t
}

/// `SPREAD[b]` has bit `i` of `b` at the LSB of byte `i`.
static SPREAD: [u64; 256] = spread_table();

fn lane_read_bits(buf: &[u8], lane: Lane) -> [u64; 8] {
    let mut out = [0u64; 8];
    for k in 0..64 {
        out[k / 8] |= (gather8(lane_chunk(buf, lane, k)) as u64) << (8 * (k % 8));
    }
    out
}

fn lane_write_bits(buf: &mut [u8], lane: Lane, bits: &[u64; 8]) {
    for k in 0..64 {
        let byte = (bits[k / 8] >> (8 * (k % 8))) as u8;
        lane_put_chunk(buf, lane, k, SPREAD[byte as usize]);
    }
}

/// Transposes an 8×8 bit block held as bytes (rows) of LSB-first bits.
#[inline(always)]
fn transpose8(mut x: u64) -> u64 {
    let t = (x ^ (x >> 7)) & 0x00AA_00AA_00AA_00AA;
    x ^= t ^ (t << 7);
    let t = (x ^ (x >> 14)) & 0x0000_CCCC_0000_CCCC;
    x ^= t ^ (t << 14);
    let t = (x ^ (x >> 28)) & 0x0000_0000_F0F0_F0F0;
    x ^= t ^ (t << 28);
    x
}

fn transpose_tile(tile: &mut [u8]) {
    debug_assert_eq!(tile.len(), TILE_BYTES);
    // Block (lane group g, position group p) lives at g*512 + 8p.
    for g in 0..64 {
        let diag = g * LANE_BYTES + 8 * g;
        let v = load(tile, diag);
        store(tile, diag, transpose8(v));
        for p in (g + 1)..64 {
            let a = g * LANE_BYTES + 8 * p;
            let b = p * LANE_BYTES + 8 * g;
            let va = load(tile, a);
            let vb = load(tile, b);
            store(tile, a, transpose8(vb));
            store(tile, b, transpose8(va));
        }
    }
}

/// A dense bit-matrix stored as 512×512 tiles.
#[derive(Clone, PartialEq, Eq)]
pub struct TiledBitMatrix {
    rows: usize,
    cols: usize,
    tile_rows: usize,
    tile_cols: usize,
    orientation: Orientation,
    data: Vec<u8>,
}

impl std::fmt::Debug for TiledBitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TiledBitMatrix")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("orientation", &self.orientation)
            .finish_non_exhaustive()
    }
}

impl TiledBitMatrix {
    /// All-zero matrix in column-major tile orientation.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::zeros_oriented(rows, cols, Orientation::ColumnMajorTiles)
    }

    pub fn zeros_oriented(rows: usize, cols: usize, orientation: Orientation) -> Self {
        let tile_rows = rows.div_ceil(TILE_BITS);
        let tile_cols = cols.div_ceil(TILE_BITS);
        Self {
            rows,
            cols,
            tile_rows,
            tile_cols,
            orientation,
            data: vec![0; tile_rows * tile_cols * TILE_BYTES],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if f(r, c) {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn tile_grid(&self) -> (usize, usize) {
        (self.tile_rows, self.tile_cols)
    }

    /// Raw bytes of tile `(tr, tc)` in its current orientation.
    pub fn tile_bytes(&self, tr: usize, tc: usize) -> &[u8] {
        let off = self.tile_offset(tr, tc);
        &self.data[off..off + TILE_BYTES]
    }

    /// Raw storage, tile-column by tile-column.
    pub fn raw(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    fn tile_offset(&self, tr: usize, tc: usize) -> usize {
        (tc * self.tile_rows + tr) * TILE_BYTES
    }

    #[inline]
    fn locate(&self, r: usize, c: usize) -> (usize, u32) {
        let (lane, pos) = match self.orientation {
            Orientation::ColumnMajorTiles => (c % TILE_BITS, r % TILE_BITS),
            Orientation::RowMajorTiles => (r % TILE_BITS, c % TILE_BITS),
        };
        let off = self.tile_offset(r / TILE_BITS, c / TILE_BITS) + (lane / 8) * LANE_BYTES + pos;
        (off, (lane % 8) as u32)
    }

    fn check(&self, r: usize, c: usize) -> Result<(), BitMatrixError> {
        if r < self.rows && c < self.cols {
            Ok(())
        } else {
            Err(BitMatrixError::OutOfRange {
                row: r,
                col: c,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn try_get(&self, r: usize, c: usize) -> Result<bool, BitMatrixError> {
        self.check(r, c)?;
        Ok(self.get_unchecked(r, c))
    }

    /// Reads logical bit `(r, c)`. Panics when out of range.
    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "({r}, {c}) out of range");
        self.get_unchecked(r, c)
    }

    #[inline]
    fn get_unchecked(&self, r: usize, c: usize) -> bool {
        let (off, bit) = self.locate(r, c);
        (self.data[off] >> bit) & 1 == 1
    }

    pub fn try_set(&mut self, r: usize, c: usize, value: bool) -> Result<(), BitMatrixError> {
        self.check(r, c)?;
        self.set(r, c, value);
        Ok(())
    }

    /// Writes logical bit `(r, c)`. Panics when out of range.
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols, "({r}, {c}) out of range");
        let (off, bit) = self.locate(r, c);
        if value {
            self.data[off] |= 1 << bit;
        } else {
            self.data[off] &= !(1 << bit);
        }
    }

    #[inline]
    pub fn flip(&mut self, r: usize, c: usize) {
        assert!(r < self.rows && c < self.cols, "({r}, {c}) out of range");
        let (off, bit) = self.locate(r, c);
        self.data[off] ^= 1 << bit;
    }

    /// Transposes every tile in place and flips the orientation flag.
    pub fn local_transpose(&mut self) {
        self.data.par_chunks_mut(TILE_BYTES).for_each(transpose_tile);
        self.orientation = self.orientation.flipped();
    }

    /// Like [`local_transpose`](Self::local_transpose) but only touches the
    /// tiles holding columns `< ncols`. Every tile past that must be all
    /// zero, which is orientation-independent.
    pub(crate) fn local_transpose_prefix(&mut self, ncols: usize) {
        let tcs = ncols.div_ceil(TILE_BITS).min(self.tile_cols);
        let end = tcs * self.tile_rows * TILE_BYTES;
        self.data[..end].par_chunks_mut(TILE_BYTES).for_each(transpose_tile);
        self.orientation = self.orientation.flipped();
    }

    pub fn set_orientation(&mut self, orientation: Orientation) {
        if self.orientation != orientation {
            self.local_transpose();
        }
    }

    fn require(&self, required: Orientation) -> Result<(), BitMatrixError> {
        if self.orientation == required {
            Ok(())
        } else {
            Err(BitMatrixError::WrongOrientation { required })
        }
    }

    // ---- column lanes (column-major orientation) ----

    #[inline]
    fn column_lane(&self, tr: usize, c: usize) -> Lane {
        let local = c % TILE_BITS;
        Lane {
            offset: self.tile_offset(tr, c / TILE_BITS) + (local / 8) * LANE_BYTES,
            bit: (local % 8) as u32,
        }
    }

    #[inline]
    fn row_lane(&self, r: usize, tc: usize) -> Lane {
        let local = r % TILE_BITS;
        Lane {
            offset: self.tile_offset(r / TILE_BITS, tc) + (local / 8) * LANE_BYTES,
            bit: (local % 8) as u32,
        }
    }

    fn check_col(&self, c: usize) -> Result<(), BitMatrixError> {
        self.check(0, c).or_else(|e| if self.rows == 0 && c < self.cols { Ok(()) } else { Err(e) })
    }

    fn check_row(&self, r: usize) -> Result<(), BitMatrixError> {
        self.check(r, 0).or_else(|e| if self.cols == 0 && r < self.rows { Ok(()) } else { Err(e) })
    }

    /// `column[dst] ^= column[src]` for every row.
    pub fn column_op_xor(&mut self, dst: usize, src: usize) -> Result<(), BitMatrixError> {
        self.require(Orientation::ColumnMajorTiles)?;
        self.check_col(dst)?;
        self.check_col(src)?;
        if dst == src {
            return Err(BitMatrixError::SameIndex(dst));
        }
        self.column_update(dst, [src], |[s]| s);
        Ok(())
    }

    /// Per-row AND of two columns.
    pub fn column_select_and(&self, col_a: usize, col_b: usize) -> Result<BitVec, BitMatrixError> {
        self.require(Orientation::ColumnMajorTiles)?;
        self.check_col(col_a)?;
        self.check_col(col_b)?;
        let mut words = vec![0u64; self.tile_rows * 8];
        for tr in 0..self.tile_rows {
            let a = self.column_lane(tr, col_a);
            let b = self.column_lane(tr, col_b);
            for k in 0..64 {
                let v = lane_chunk(&self.data, a, k) & lane_chunk(&self.data, b, k);
                words[tr * 8 + k / 8] |= (gather8(v) as u64) << (8 * (k % 8));
            }
        }
        Ok(BitVec::from_words(words, self.rows))
    }

    /// `column[dst] ^= f(column[srcs[0]], ...)`, evaluated lane-parallel.
    ///
    /// `f` receives each source chunk with one bit per byte at the byte's
    /// LSB and must keep its result within those positions (it is masked
    /// anyway). Requires column-major orientation; indices are trusted.
    #[inline]
    pub(crate) fn column_update<const K: usize>(
        &mut self,
        dst: usize,
        srcs: [usize; K],
        f: impl Fn([u64; K]) -> u64,
    ) {
        debug_assert_eq!(self.orientation, Orientation::ColumnMajorTiles);
        for tr in 0..self.tile_rows {
            let d = self.column_lane(tr, dst);
            let s = srcs.map(|c| self.column_lane(tr, c));
            for k in 0..64 {
                let vals = s.map(|l| lane_chunk(&self.data, l, k));
                lane_xor_chunk(&mut self.data, d, k, f(vals));
            }
        }
    }

    /// Exchanges two columns. Requires column-major orientation.
    pub fn column_swap(&mut self, a: usize, b: usize) -> Result<(), BitMatrixError> {
        self.require(Orientation::ColumnMajorTiles)?;
        self.check_col(a)?;
        self.check_col(b)?;
        if a != b {
            for tr in 0..self.tile_rows {
                let la = self.column_lane(tr, a);
                let lb = self.column_lane(tr, b);
                for k in 0..64 {
                    let va = lane_chunk(&self.data, la, k);
                    let vb = lane_chunk(&self.data, lb, k);
                    lane_put_chunk(&mut self.data, la, k, vb);
                    lane_put_chunk(&mut self.data, lb, k, va);
                }
            }
        }
        Ok(())
    }

    /// Copies column `c` out as a bit-vector; works in either orientation.
    pub fn read_column(&self, c: usize) -> BitVec {
        assert!(c < self.cols, "column {c} out of range");
        match self.orientation {
            Orientation::ColumnMajorTiles => {
                let mut words = Vec::with_capacity(self.tile_rows * 8);
                for tr in 0..self.tile_rows {
                    words.extend_from_slice(&lane_read_bits(&self.data, self.column_lane(tr, c)));
                }
                BitVec::from_words(words, self.rows)
            }
            Orientation::RowMajorTiles => {
                let mut v = BitVec::zeros(self.rows);
                for r in 0..self.rows {
                    if self.get_unchecked(r, c) {
                        v.set(r, true);
                    }
                }
                v
            }
        }
    }

    // ---- row lanes (row-major orientation) ----

    /// `row[dst] ^= row[src]` across all columns.
    pub fn row_op_xor(&mut self, dst: usize, src: usize) -> Result<(), BitMatrixError> {
        self.require(Orientation::RowMajorTiles)?;
        self.check_row(dst)?;
        self.check_row(src)?;
        if dst == src {
            return Err(BitMatrixError::SameIndex(dst));
        }
        self.row_xor_prefix(dst, src, self.cols);
        Ok(())
    }

    /// `row[dst] ^= row[src]`, touching only the tiles that hold columns
    /// `< ncols`. Columns past `ncols` in those tiles are XOR-ed as well.
    /// Requires row-major orientation; indices are trusted.
    #[inline]
    pub(crate) fn row_xor_prefix(&mut self, dst: usize, src: usize, ncols: usize) {
        debug_assert_eq!(self.orientation, Orientation::RowMajorTiles);
        for tc in 0..ncols.div_ceil(TILE_BITS).min(self.tile_cols) {
            let d = self.row_lane(dst, tc);
            let s = self.row_lane(src, tc);
            for k in 0..64 {
                let v = lane_chunk(&self.data, s, k);
                lane_xor_chunk(&mut self.data, d, k, v);
            }
        }
    }

    /// Zeroes a row. Requires row-major orientation.
    pub(crate) fn row_clear(&mut self, r: usize) {
        debug_assert_eq!(self.orientation, Orientation::RowMajorTiles);
        for tc in 0..self.tile_cols {
            let l = self.row_lane(r, tc);
            for k in 0..64 {
                lane_put_chunk(&mut self.data, l, k, 0);
            }
        }
    }

    /// Overwrites `row[dst]` with `row[src]`. Requires row-major orientation.
    pub(crate) fn row_copy(&mut self, dst: usize, src: usize) {
        debug_assert_eq!(self.orientation, Orientation::RowMajorTiles);
        for tc in 0..self.tile_cols {
            let d = self.row_lane(dst, tc);
            let s = self.row_lane(src, tc);
            for k in 0..64 {
                let v = lane_chunk(&self.data, s, k);
                lane_put_chunk(&mut self.data, d, k, v);
            }
        }
    }

    /// Reads `len` bits of row `r` starting at column `start`.
    pub fn read_row_range(&self, r: usize, start: usize, len: usize) -> BitVec {
        assert!(r < self.rows && start + len <= self.cols, "row range out of bounds");
        if len == 0 {
            return BitVec::zeros(0);
        }
        match self.orientation {
            Orientation::RowMajorTiles => {
                let first = start / TILE_BITS;
                let last = (start + len - 1) / TILE_BITS;
                let mut words = Vec::with_capacity((last - first + 1) * 8);
                for tc in first..=last {
                    words.extend_from_slice(&lane_read_bits(&self.data, self.row_lane(r, tc)));
                }
                extract_bits(&words, start - first * TILE_BITS, len)
            }
            Orientation::ColumnMajorTiles => {
                let mut v = BitVec::zeros(len);
                for i in 0..len {
                    if self.get_unchecked(r, start + i) {
                        v.set(i, true);
                    }
                }
                v
            }
        }
    }

    pub fn read_row(&self, r: usize) -> BitVec {
        self.read_row_range(r, 0, self.cols)
    }

    /// Writes 512 bits into row `r` for the columns of tile-column `tc`.
    /// Bits past the logical column count are dropped. Requires row-major
    /// orientation.
    pub(crate) fn write_row_segment(&mut self, r: usize, tc: usize, bits: &[u64; 8]) {
        debug_assert_eq!(self.orientation, Orientation::RowMajorTiles);
        let mut bits = *bits;
        let valid = self.cols.saturating_sub(tc * TILE_BITS).min(TILE_BITS);
        for (w, word) in bits.iter_mut().enumerate() {
            let lo = w * 64;
            if valid <= lo {
                *word = 0;
            } else if valid < lo + 64 {
                *word &= (1u64 << (valid - lo)) - 1;
            }
        }
        let lane = self.row_lane(r, tc);
        lane_write_bits(&mut self.data, lane, &bits);
    }

    /// `self.row[dst] ^= other.row[src]`; both must be row-major with equal
    /// column counts.
    pub fn xor_row_from(
        &mut self,
        dst: usize,
        other: &TiledBitMatrix,
        src: usize,
    ) -> Result<(), BitMatrixError> {
        self.require(Orientation::RowMajorTiles)?;
        other.require(Orientation::RowMajorTiles)?;
        if self.cols != other.cols {
            return Err(BitMatrixError::DimensionMismatch(format!(
                "{} vs {} columns",
                self.cols, other.cols
            )));
        }
        self.check_row(dst)?;
        other.check_row(src)?;
        for tc in 0..self.tile_cols {
            let d = self.row_lane(dst, tc);
            let s = other.row_lane(src, tc);
            for k in 0..64 {
                let v = lane_chunk(&other.data, s, k);
                lane_xor_chunk(&mut self.data, d, k, v);
            }
        }
        Ok(())
    }

    /// True when every stored bit outside the logical shape is zero.
    pub fn padding_is_zero(&self) -> bool {
        for tr in 0..self.tile_rows {
            for tc in 0..self.tile_cols {
                let tile = self.tile_bytes(tr, tc);
                for lane in 0..TILE_BITS {
                    for pos in 0..TILE_BITS {
                        let (r, c) = match self.orientation {
                            Orientation::ColumnMajorTiles => (tr * TILE_BITS + pos, tc * TILE_BITS + lane),
                            Orientation::RowMajorTiles => (tr * TILE_BITS + lane, tc * TILE_BITS + pos),
                        };
                        if r >= self.rows || c >= self.cols {
                            let byte = tile[(lane / 8) * LANE_BYTES + pos];
                            if (byte >> (lane % 8)) & 1 == 1 {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }

    /// Debug dump: one line per row of `0`/`1` characters.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.rows * (self.cols + 1));
        for r in 0..self.rows {
            for c in 0..self.cols {
                s.push(if self.get_unchecked(r, c) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, BitMatrixError> {
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let cols = lines.first().map_or(0, |l| l.trim().len());
        let mut m = Self::zeros(lines.len(), cols);
        for (r, line) in lines.iter().enumerate() {
            let line = line.trim();
            if line.len() != cols {
                return Err(BitMatrixError::BadText {
                    line: r + 1,
                    msg: format!("expected {cols} columns, found {}", line.len()),
                });
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => m.set(r, c, true),
                    other => {
                        return Err(BitMatrixError::BadText {
                            line: r + 1,
                            msg: format!("unexpected character {other:?}"),
                        })
                    }
                }
            }
        }
        Ok(m)
    }

    /// Returns a copy in row-major orientation (no copy if already).
    fn as_row_major(&self) -> std::borrow::Cow<'_, TiledBitMatrix> {
        if self.orientation == Orientation::RowMajorTiles {
            std::borrow::Cow::Borrowed(self)
        } else {
            let mut m = self.clone();
            m.local_transpose();
            std::borrow::Cow::Owned(m)
        }
    }

    fn as_column_major(&self) -> std::borrow::Cow<'_, TiledBitMatrix> {
        if self.orientation == Orientation::ColumnMajorTiles {
            std::borrow::Cow::Borrowed(self)
        } else {
            let mut m = self.clone();
            m.local_transpose();
            std::borrow::Cow::Owned(m)
        }
    }

    /// Glues matrices side by side. Every part must have the same row
    /// count and orientation, and all but the last must have a column
    /// count that is a multiple of the tile width.
    pub fn concat_columns(parts: Vec<TiledBitMatrix>) -> Result<TiledBitMatrix, BitMatrixError> {
        let Some(first) = parts.first() else {
            return Ok(TiledBitMatrix::zeros(0, 0));
        };
        let (rows, orientation) = (first.rows, first.orientation);
        let last = parts.len() - 1;
        for (i, p) in parts.iter().enumerate() {
            if p.rows != rows || p.orientation != orientation {
                return Err(BitMatrixError::DimensionMismatch(format!(
                    "part {i} is {}x{} {:?}, expected {rows} rows {:?}",
                    p.rows, p.cols, p.orientation, orientation
                )));
            }
            if i < last && p.cols % TILE_BITS != 0 {
                return Err(BitMatrixError::DimensionMismatch(format!(
                    "part {i} has {} columns, not a multiple of {TILE_BITS}",
                    p.cols
                )));
            }
        }
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.data.len()).sum());
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        let tile_rows = rows.div_ceil(TILE_BITS);
        let tile_cols = cols.div_ceil(TILE_BITS);
        debug_assert_eq!(data.len(), tile_rows * tile_cols * TILE_BYTES);
        Ok(TiledBitMatrix { rows, cols, tile_rows, tile_cols, orientation, data })
    }
}

fn extract_bits(words: &[u64], start: usize, len: usize) -> BitVec {
    let mut out = vec![0u64; len.div_ceil(64)];
    let shift = start % 64;
    let base = start / 64;
    for (i, o) in out.iter_mut().enumerate() {
        let lo = words.get(base + i).copied().unwrap_or(0);
        let hi = words.get(base + i + 1).copied().unwrap_or(0);
        *o = if shift == 0 { lo } else { (lo >> shift) | (hi << (64 - shift)) };
    }
    BitVec::from_words(out, len)
}

/// GF(2) product `a · b`, computed as inner products of rows of `a` with
/// columns of `b`.
pub fn gf2_multiply(a: &TiledBitMatrix, b: &TiledBitMatrix) -> Result<TiledBitMatrix, BitMatrixError> {
    if a.cols != b.rows {
        return Err(BitMatrixError::DimensionMismatch(format!(
            "{}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let a_rows = a.as_row_major();
    let b_cols = b.as_column_major();
    let rows: Vec<BitVec> = (0..a.rows).map(|i| a_rows.read_row(i)).collect();
    let cols: Vec<BitVec> = (0..b.cols).map(|j| b_cols.read_column(j)).collect();
    let mut out = TiledBitMatrix::zeros(a.rows, b.cols);
    for (i, row) in rows.iter().enumerate() {
        for (j, col) in cols.iter().enumerate() {
            let parity = row
                .words()
                .iter()
                .zip(col.words())
                .fold(0u32, |acc, (x, y)| acc ^ (x & y).count_ones())
                & 1;
            if parity == 1 {
                out.set(i, j, true);
            }
        }
    }
    Ok(out)
}

/// GF(2) product of a sparse row-list matrix with `b`: row `i` of the
/// result is the XOR of the rows of `b` listed in `a_rows[i]`.
///
/// The result is row-major. Tile-columns of the result are independent and
/// are processed in parallel.
pub fn gf2_multiply_sparse<I: AsRef<[usize]> + Sync>(
    a_rows: &[I],
    b: &TiledBitMatrix,
) -> Result<TiledBitMatrix, BitMatrixError> {
    for (i, row) in a_rows.iter().enumerate() {
        if let Some(&t) = row.as_ref().iter().find(|&&t| t >= b.rows) {
            return Err(BitMatrixError::OutOfRange {
                row: i,
                col: t,
                rows: a_rows.len(),
                cols: b.rows,
            });
        }
    }
    let b = b.as_row_major();
    let mut out = TiledBitMatrix::zeros_oriented(a_rows.len(), b.cols, Orientation::RowMajorTiles);
    if out.data.is_empty() {
        return Ok(out);
    }
    let chunk = out.tile_rows * TILE_BYTES;
    let out_tile_rows = out.tile_rows;
    out.data.par_chunks_mut(chunk).enumerate().for_each(|(tc, dst)| {
        for (i, row) in a_rows.iter().enumerate() {
            let local = i % TILE_BITS;
            let d = Lane {
                offset: (i / TILE_BITS) * TILE_BYTES + (local / 8) * LANE_BYTES,
                bit: (local % 8) as u32,
            };
            debug_assert!(i / TILE_BITS < out_tile_rows);
            for &t in row.as_ref() {
                let s = b.row_lane(t, tc);
                for k in 0..64 {
                    let v = lane_chunk(&b.data, s, k);
                    lane_xor_chunk(dst, d, k, v);
                }
            }
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn describe(m: &TiledBitMatrix) -> String {
        format!("{}x{} {:?}", m.rows, m.cols, m.orientation)
    }

    /// Unpacked mirror used as the reference for every kernel.
    #[derive(Clone)]
    struct Naive {
        rows: usize,
        cols: usize,
        bits: Vec<bool>,
    }

    impl Naive {
        fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
            Self {
                rows,
                cols,
                bits: (0..rows * cols).map(|_| rng.gen()).collect(),
            }
        }
        fn get(&self, r: usize, c: usize) -> bool {
            self.bits[r * self.cols + c]
        }
        fn set(&mut self, r: usize, c: usize, v: bool) {
            self.bits[r * self.cols + c] = v;
        }
        fn tiled(&self) -> TiledBitMatrix {
            TiledBitMatrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c))
        }
        fn mul(&self, other: &Naive) -> Naive {
            let mut out = Naive { rows: self.rows, cols: other.cols, bits: vec![false; self.rows * other.cols] };
            for i in 0..self.rows {
                for j in 0..other.cols {
                    let mut acc = false;
                    for t in 0..self.cols {
                        acc ^= self.get(i, t) & other.get(t, j);
                    }
                    out.set(i, j, acc);
                }
            }
            out
        }
    }

    fn assert_same(m: &TiledBitMatrix, n: &Naive) {
        assert_eq!((m.rows(), m.cols()), (n.rows, n.cols));
        for r in 0..n.rows {
            for c in 0..n.cols {
                assert_eq!(m.get(r, c), n.get(r, c), "mismatch at ({r}, {c}) in {}", describe(m));
            }
        }
    }

    #[test]
    fn transpose8_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let x: u64 = rng.gen();
            let t = transpose8(x);
            for i in 0..8 {
                for j in 0..8 {
                    assert_eq!((x >> (8 * i + j)) & 1, (t >> (8 * j + i)) & 1);
                }
            }
        }
    }

    #[test]
    fn gather_and_spread_are_inverse() {
        for b in 0..=255u8 {
            assert_eq!(gather8(SPREAD[b as usize]), b);
        }
    }

    #[test]
    fn zero_matrix_reads_zero() {
        let m = TiledBitMatrix::zeros(600, 700);
        assert!(!m.get(0, 0));
        assert!(!m.get(599, 699));
        assert_eq!(m.tile_grid(), (2, 2));
        assert_eq!(m.raw().len(), 4 * TILE_BYTES);
    }

    #[test]
    fn set_get_across_tile_boundary() {
        let mut m = TiledBitMatrix::zeros(10, 1000);
        m.set(5, 700, true);
        assert!(m.get(5, 700));
        assert!(m.try_get(10, 0).is_err());
        assert!(m.try_set(0, 1000, true).is_err());
    }

    #[test]
    fn transpose_moves_storage_but_not_logical_bit() {
        let mut m = TiledBitMatrix::zeros(512, 512);
        m.set(3, 200, true);
        let before = m.tile_bytes(0, 0).to_vec();
        // column-major: lane 200, position 3
        assert_eq!(before[(200 / 8) * 512 + 3], 1 << (200 % 8));
        m.local_transpose();
        let after = m.tile_bytes(0, 0);
        // now lane 3 (the row), position 200
        assert_eq!(after[(3 / 8) * 512 + 200], 1 << 3);
        assert!(m.get(3, 200));
        m.local_transpose();
        assert_eq!(m.tile_bytes(0, 0), &before[..]);
    }

    #[test]
    fn transpose_preserves_random_content() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = Naive::random(2048, 1536, &mut rng);
        let mut m = n.tiled();
        let raw = m.raw().to_vec();
        m.local_transpose();
        assert_eq!(m.orientation(), Orientation::RowMajorTiles);
        for _ in 0..10_000 {
            let r = rng.gen_range(0..2048);
            let c = rng.gen_range(0..1536);
            assert_eq!(m.get(r, c), n.get(r, c));
        }
        m.local_transpose();
        assert_eq!(m.raw(), &raw[..]);
    }

    #[test]
    fn column_xor_rejects_self_and_wrong_orientation() {
        let mut m = TiledBitMatrix::identity(4);
        assert_eq!(m.column_op_xor(1, 1), Err(BitMatrixError::SameIndex(1)));
        m.column_op_xor(1, 0).unwrap();
        assert!(m.get(0, 1) && m.get(1, 1));
        m.local_transpose();
        assert!(matches!(m.column_op_xor(2, 0), Err(BitMatrixError::WrongOrientation { .. })));
        assert!(matches!(m.row_op_xor(2, 0), Ok(())));
    }

    #[test]
    fn column_ops_match_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut n = Naive::random(1024, 1024, &mut rng);
        let mut m = n.tiled();
        for _ in 0..100 {
            let d = rng.gen_range(0..1024);
            let s = rng.gen_range(0..1024);
            if d == s {
                continue;
            }
            m.column_op_xor(d, s).unwrap();
            for r in 0..1024 {
                let v = n.get(r, d) ^ n.get(r, s);
                n.set(r, d, v);
            }
        }
        assert_same(&m, &n);
    }

    #[test]
    fn column_and_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = Naive::random(700, 40, &mut rng);
        let m = n.tiled();
        let ones = TiledBitMatrix::from_fn(3, 2, |_, c| c == 0);
        assert!(ones.column_select_and(0, 1).unwrap().is_zero());
        for _ in 0..20 {
            let a = rng.gen_range(0..40);
            let b = rng.gen_range(0..40);
            let v = m.column_select_and(a, b).unwrap();
            for r in 0..700 {
                assert_eq!(v.get(r), n.get(r, a) & n.get(r, b));
            }
        }
        assert_eq!(m.column_select_and(3, 3).unwrap(), m.read_column(3));
    }

    #[test]
    fn row_ops_match_naive_at_boundary_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for &size in &[511usize, 512, 513, 1024, 1537] {
            let mut n = Naive::random(size, size, &mut rng);
            let mut m = n.tiled();
            m.local_transpose();
            for _ in 0..20 {
                let d = rng.gen_range(0..size);
                let s = rng.gen_range(0..size);
                if d == s {
                    continue;
                }
                m.row_op_xor(d, s).unwrap();
                for c in 0..size {
                    let v = n.get(d, c) ^ n.get(s, c);
                    n.set(d, c, v);
                }
            }
            assert_same(&m, &n);
            assert!(m.padding_is_zero());
            let r = rng.gen_range(0..size);
            let row = m.read_row(r);
            for c in 0..size {
                assert_eq!(row.get(c), n.get(r, c));
            }
        }
    }

    #[test]
    fn read_row_range_matches_in_both_orientations() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let n = Naive::random(20, 1300, &mut rng);
        let mut m = n.tiled();
        for _ in 0..2 {
            for _ in 0..20 {
                let r = rng.gen_range(0..20);
                let start = rng.gen_range(0..1300);
                let len = rng.gen_range(0..=1300 - start);
                let v = m.read_row_range(r, start, len);
                for i in 0..len {
                    assert_eq!(v.get(i), n.get(r, start + i));
                }
            }
            m.local_transpose();
        }
    }

    #[test]
    fn multiply_identity_and_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let b = Naive::random(30, 17, &mut rng);
        let prod = gf2_multiply(&TiledBitMatrix::identity(30), &b.tiled()).unwrap();
        assert_same(&prod, &b);
        let ones3 = TiledBitMatrix::from_fn(3, 3, |_, _| true);
        let ones1 = TiledBitMatrix::from_fn(3, 1, |_, _| true);
        let p = gf2_multiply(&ones3, &ones1).unwrap();
        assert!((0..3).all(|r| p.get(r, 0)));
        assert!(gf2_multiply(&ones3, &TiledBitMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn multiply_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let a = Naive::random(100, 70, &mut rng);
        let b = Naive::random(70, 200, &mut rng);
        assert_same(&gf2_multiply(&a.tiled(), &b.tiled()).unwrap(), &a.mul(&b));
    }

    #[test]
    fn sparse_multiply_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let k = 600;
        let b = Naive::random(k, 530, &mut rng);
        let rows: Vec<Vec<usize>> = (0..40)
            .map(|_| {
                let cnt = rng.gen_range(0..=5);
                (0..cnt).map(|_| rng.gen_range(0..k)).collect()
            })
            .collect();
        let dense_a = TiledBitMatrix::from_fn(40, k, |i, t| rows[i].iter().filter(|&&x| x == t).count() % 2 == 1);
        let sparse = gf2_multiply_sparse(&rows, &b.tiled()).unwrap();
        let dense = gf2_multiply(&dense_a, &b.tiled()).unwrap();
        for i in 0..40 {
            for j in 0..530 {
                assert_eq!(sparse.get(i, j), dense.get(i, j));
            }
        }
        assert!(sparse.padding_is_zero());
    }

    #[test]
    fn sparse_multiply_edge_cases() {
        let b = TiledBitMatrix::from_fn(4, 5, |r, c| (r + c) % 2 == 0);
        let rows: Vec<Vec<usize>> = vec![vec![], vec![2]];
        let p = gf2_multiply_sparse(&rows, &b).unwrap();
        for c in 0..5 {
            assert!(!p.get(0, c));
            assert_eq!(p.get(1, c), b.get(2, c));
        }
        assert!(gf2_multiply_sparse(&[vec![4usize]], &b).is_err());
    }

    #[test]
    fn text_round_trip() {
        let m = TiledBitMatrix::from_text("010\n111\n").unwrap();
        assert_eq!(m.to_text(), "010\n111\n");
        assert!(TiledBitMatrix::from_text("01\n1\n").is_err());
    }

    #[test]
    fn write_row_segment_masks_tail() {
        let mut m = TiledBitMatrix::zeros_oriented(3, 700, Orientation::RowMajorTiles);
        m.write_row_segment(1, 1, &[u64::MAX; 8]);
        assert!(m.get(1, 699));
        assert!(!m.get(1, 511));
        assert_eq!(m.read_row(1).count_ones(), 700 - 512);
        assert!(m.padding_is_zero());
    }

    #[test]
    fn concat_columns_matches_whole() {
        let f = |r: usize, c: usize| (r * 7 + c * 13) % 5 == 0;
        let whole = TiledBitMatrix::from_fn(600, 1100, f);
        let parts = vec![
            TiledBitMatrix::from_fn(600, 512, f),
            TiledBitMatrix::from_fn(600, 512, |r, c| f(r, c + 512)),
            TiledBitMatrix::from_fn(600, 76, |r, c| f(r, c + 1024)),
        ];
        assert_eq!(TiledBitMatrix::concat_columns(parts).unwrap(), whole);
        let bad = vec![TiledBitMatrix::zeros(3, 10), TiledBitMatrix::zeros(3, 10)];
        assert!(TiledBitMatrix::concat_columns(bad).is_err());
    }

    #[test]
    fn prefix_transpose_leaves_zero_tiles_valid() {
        let mut m = TiledBitMatrix::zeros(20, 1500);
        m.set(3, 100, true);
        m.set(19, 511, true);
        m.local_transpose_prefix(512);
        assert_eq!(m.orientation(), Orientation::RowMajorTiles);
        assert!(m.get(3, 100) && m.get(19, 511));
        m.set(4, 1400, true);
        m.local_transpose_prefix(1500);
        assert!(m.get(3, 100) && m.get(19, 511) && m.get(4, 1400));
        assert_eq!(m.read_column(100).count_ones(), 1);
    }
}
