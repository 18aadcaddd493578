//! Shot sampling: draw symbol assignments, then XOR together the rows each
//! measurement expression selects.
//!
//! Shots are produced in batches of 512 (one tile column). Each fault group
//! owns a ChaCha8 stream; batch `b` of group `g` reads that stream starting
//! at word `b << 32`. A batch's content therefore depends only on
//! `(seed, group, batch)` and batches can be generated in any order or in
//! parallel.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::bitmatrix::{gf2_multiply_sparse, BitMatrixError, Orientation, TiledBitMatrix, TILE_BITS};
use crate::bits::BitVec;
use crate::init::CompiledCircuit;
use crate::symbols::{Distribution, SymbolGroup, SymbolRegistry};
use crate::tableau::MeasurementExpression;

/// Shots per batch.
pub const SHOT_BATCH: usize = TILE_BITS;

/// Below this probability Bernoulli rows are drawn by skipping ahead
/// geometrically instead of testing every shot.
const SPARSE_P: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("expression {measurement} uses symbol s{symbol} but only {available} symbols were drawn")]
    SymbolOutOfRange {
        measurement: usize,
        symbol: usize,
        available: usize,
    },
    #[error(transparent)]
    Matrix(#[from] BitMatrixError),
}

/// Symbol values for a run of shots: row `j` is symbol `s_j`, column `k`
/// is shot `k`. Row 0 is all ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolAssignmentBatch {
    data: TiledBitMatrix,
}

impl SymbolAssignmentBatch {
    pub fn new(data: TiledBitMatrix) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &TiledBitMatrix {
        &self.data
    }

    pub fn num_symbols(&self) -> usize {
        self.data.rows()
    }

    pub fn shots(&self) -> usize {
        self.data.cols()
    }

    pub fn get(&self, symbol: usize, shot: usize) -> bool {
        self.data.get(symbol, shot)
    }

    /// Values of all symbols in one shot.
    pub fn assignment(&self, shot: usize) -> BitVec {
        self.data.read_column(shot)
    }

    /// One line per shot, symbol 0 first.
    pub fn to_text(&self) -> String {
        let cols = match self.data.orientation() {
            Orientation::ColumnMajorTiles => std::borrow::Cow::Borrowed(&self.data),
            Orientation::RowMajorTiles => {
                let mut m = self.data.clone();
                m.local_transpose();
                std::borrow::Cow::Owned(m)
            }
        };
        let mut out = String::with_capacity(self.shots() * (self.num_symbols() + 1));
        for shot in 0..self.shots() {
            let col = cols.read_column(shot);
            out.extend((0..col.len()).map(|i| if col.get(i) { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }
}

/// Measurement outcomes: row `k` is measurement `k`, column `j` is shot `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleMatrix {
    data: TiledBitMatrix,
    measurement_order: Vec<usize>,
}

impl SampleMatrix {
    pub fn new(data: TiledBitMatrix) -> Self {
        let measurement_order = (0..data.rows()).collect();
        Self { data, measurement_order }
    }

    pub fn data(&self) -> &TiledBitMatrix {
        &self.data
    }

    /// Circuit measurement index of each row.
    pub fn measurement_order(&self) -> &[usize] {
        &self.measurement_order
    }

    pub fn num_measurements(&self) -> usize {
        self.data.rows()
    }

    pub fn shots(&self) -> usize {
        self.data.cols()
    }

    pub fn get(&self, measurement: usize, shot: usize) -> bool {
        self.data.get(measurement, shot)
    }

    /// All outcomes of one shot.
    pub fn shot(&self, shot: usize) -> BitVec {
        self.data.read_column(shot)
    }

    /// Number of shots in which measurement `k` read 1.
    pub fn count_ones(&self, measurement: usize) -> usize {
        self.data.read_row(measurement).count_ones()
    }
}

fn group_rng(seed: u64, group: usize, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(group as u64);
    rng.set_word_pos((batch as u128) << 32);
    rng
}

fn set_bit(bits: &mut [u64; 8], i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

/// `width` independent Bernoulli(p) bits.
fn bernoulli_bits(rng: &mut ChaCha8Rng, p: f64, width: usize) -> [u64; 8] {
    let mut bits = [0u64; 8];
    if p <= 0.0 {
        return bits;
    }
    if p >= 1.0 {
        return [u64::MAX; 8];
    }
    if p < SPARSE_P {
        // gaps between ones are geometric
        let log_q = (-p).ln_1p();
        let mut pos = 0.0f64;
        loop {
            let u = 1.0 - rng.gen::<f64>();
            pos += (u.ln() / log_q).floor();
            if pos >= width as f64 {
                break;
            }
            set_bit(&mut bits, pos as usize);
            pos += 1.0;
        }
    } else {
        let threshold = (p * 2f64.powi(64)) as u64;
        for i in 0..width {
            if rng.next_u64() < threshold {
                set_bit(&mut bits, i);
            }
        }
    }
    bits
}

/// Rows for one group in one batch, one `[u64; 8]` per symbol.
fn draw_group(group: &SymbolGroup, seed: u64, batch: usize, width: usize) -> Vec<[u64; 8]> {
    let mut rng = group_rng(seed, group.id, batch);
    match group.distribution {
        Distribution::FairCoin => {
            let mut bits = [0u64; 8];
            for w in bits.iter_mut() {
                *w = rng.next_u64();
            }
            vec![bits]
        }
        Distribution::Bernoulli(p) => vec![bernoulli_bits(&mut rng, p, width)],
        Distribution::Depolarize1(p) | Distribution::Depolarize2(p) => {
            let arity = group.distribution.arity();
            let fired = bernoulli_bits(&mut rng, p, width);
            let mut rows = vec![[0u64; 8]; arity];
            for i in (0..width).filter(|&i| fired[i / 64] >> (i % 64) & 1 == 1) {
                let pattern: usize = rng.gen_range(1..1 << arity);
                for (k, row) in rows.iter_mut().enumerate() {
                    if pattern >> k & 1 == 1 {
                        set_bit(row, i);
                    }
                }
            }
            rows
        }
    }
}

/// Assignments for shots `batch * 512 .. batch * 512 + width`.
fn draw_batch(registry: &SymbolRegistry, seed: u64, batch: usize, width: usize) -> TiledBitMatrix {
    let mut m = TiledBitMatrix::zeros_oriented(registry.len(), width, Orientation::RowMajorTiles);
    m.write_row_segment(0, 0, &[u64::MAX; 8]);
    for group in registry.groups() {
        for (row, bits) in group.symbols.iter().zip(draw_group(group, seed, batch, width)) {
            m.write_row_segment(*row, 0, &bits);
        }
    }
    m
}

fn batch_widths(shots: usize) -> Vec<(usize, usize)> {
    (0..shots.div_ceil(SHOT_BATCH))
        .map(|b| (b, SHOT_BATCH.min(shots - b * SHOT_BATCH)))
        .collect()
}

/// Draws symbol values for `shots` shots.
pub fn draw_assignments(registry: &SymbolRegistry, shots: usize, seed: u64) -> SymbolAssignmentBatch {
    let parts: Vec<TiledBitMatrix> = batch_widths(shots)
        .into_par_iter()
        .map(|(b, w)| draw_batch(registry, seed, b, w))
        .collect();
    let data = if parts.is_empty() {
        TiledBitMatrix::zeros_oriented(registry.len(), 0, Orientation::RowMajorTiles)
    } else {
        TiledBitMatrix::concat_columns(parts).expect("uniform batches")
    };
    SymbolAssignmentBatch { data }
}

fn check_expressions(expressions: &[MeasurementExpression], available: usize) -> Result<(), SampleError> {
    for (measurement, e) in expressions.iter().enumerate() {
        if let Some(&symbol) = e.symbols().iter().find(|&&s| s >= available) {
            return Err(SampleError::SymbolOutOfRange { measurement, symbol, available });
        }
    }
    Ok(())
}

/// Row `k` of the result is the XOR of the assignment rows listed in
/// `expressions[k]`.
pub fn sample(
    expressions: &[MeasurementExpression],
    batch: &SymbolAssignmentBatch,
) -> Result<SampleMatrix, SampleError> {
    check_expressions(expressions, batch.num_symbols())?;
    let rows: Vec<&[usize]> = expressions.iter().map(|e| e.symbols()).collect();
    Ok(SampleMatrix::new(gf2_multiply_sparse(&rows, batch.data())?))
}

/// Draws and evaluates batch by batch without materializing the full
/// assignment matrix. Equal to `sample(expressions, draw_assignments(..))`.
pub fn sample_compiled(compiled: &CompiledCircuit, shots: usize, seed: u64) -> Result<SampleMatrix, SampleError> {
    check_expressions(&compiled.expressions, compiled.registry.len())?;
    let rows: Vec<&[usize]> = compiled.expressions.iter().map(|e| e.symbols()).collect();
    let parts = batch_widths(shots)
        .into_par_iter()
        .map(|(b, w)| {
            let batch = draw_batch(&compiled.registry, seed, b, w);
            gf2_multiply_sparse(&rows, &batch)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let data = if parts.is_empty() {
        TiledBitMatrix::zeros_oriented(rows.len(), 0, Orientation::RowMajorTiles)
    } else {
        TiledBitMatrix::concat_columns(parts)?
    };
    Ok(SampleMatrix::new(data))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    /// One line of `0`/`1` characters per shot.
    #[default]
    ZeroOne,
    /// `ceil(n_m / 8)` bytes per shot, LSB first.
    B8,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "01" => Ok(Self::ZeroOne),
            "b8" => Ok(Self::B8),
            _ => Err(format!("unknown format '{s}' (expected 01 or b8)")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ZeroOne => "01",
            Self::B8 => "b8",
        })
    }
}

pub fn write_shots<W: Write + ?Sized>(m: &SampleMatrix, format: OutputFormat, out: &mut W) -> io::Result<()> {
    let mut cols = m.data.clone();
    cols.set_orientation(Orientation::ColumnMajorTiles);
    let n_m = m.num_measurements();
    let mut buf = Vec::with_capacity(n_m + 1);
    for shot in 0..m.shots() {
        let bits = cols.read_column(shot);
        buf.clear();
        match format {
            OutputFormat::ZeroOne => {
                buf.extend((0..n_m).map(|k| if bits.get(k) { b'1' } else { b'0' }));
                buf.push(b'\n');
            }
            OutputFormat::B8 => {
                for k in 0..n_m.div_ceil(8) {
                    buf.push((bits.words()[k / 8] >> (8 * (k % 8))) as u8);
                }
            }
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

pub fn encode_shots(m: &SampleMatrix, format: OutputFormat) -> Vec<u8> {
    let mut out = Vec::new();
    write_shots(m, format, &mut out).expect("writing to memory");
    out
}
