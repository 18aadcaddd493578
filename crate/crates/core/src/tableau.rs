//! Stabilizer tableau whose generator signs are XOR expressions over
//! bit-symbols.
//!
//! Storage is a [`TiledBitMatrix`] with `2n + 1` rows and
//! `2n + capacity` columns laid out as `[X | Z | phases]`. Rows `0..n` are
//! destabilizers, rows `n..2n` stabilizers and row `2n` is the scratch row
//! used by deterministic measurements. Phase column `j` holds symbol `s_j`;
//! column 0 is the constant.

use std::fmt;

use thiserror::Error;

use crate::bitmatrix::{Orientation, TiledBitMatrix};
use crate::bits::BitVec;
use crate::circuit::Axis;
use crate::pauli::{phase_exponent_sum, render_symbols, PauliRow, SymbolicPhase};
use crate::symbols::{SymbolError, SymbolId, SymbolRegistry, CONSTANT_SYMBOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableauError {
    #[error("a tableau needs at least one qubit")]
    ZeroQubits,
    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("two-qubit gate on qubit {0} twice")]
    SameQubit(usize),
    #[error("unknown symbol s{0}")]
    UnknownSymbol(SymbolId),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error("rows {target} and {other} anticommute (phase exponent {exponent})")]
    Anticommuting { target: usize, other: usize, exponent: u8 },
}

/// A measurement outcome as the XOR of the listed symbols.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct MeasurementExpression {
    symbols: Vec<SymbolId>,
}

impl MeasurementExpression {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(s: SymbolId) -> Self {
        Self { symbols: vec![s] }
    }

    /// Builds an expression from any list of ids; repeated ids cancel.
    pub fn from_symbols(ids: impl IntoIterator<Item = SymbolId>) -> Self {
        let mut v: Vec<SymbolId> = ids.into_iter().collect();
        v.sort_unstable();
        let mut out: Vec<SymbolId> = Vec::with_capacity(v.len());
        for s in v {
            if out.last() == Some(&s) {
                out.pop();
            } else {
                out.push(s);
            }
        }
        Self { symbols: out }
    }

    pub fn symbols(&self) -> &[SymbolId] {
        &self.symbols
    }

    pub fn is_zero(&self) -> bool {
        self.symbols.is_empty()
    }

    /// True if the outcome does not depend on any symbol.
    pub fn is_constant(&self) -> bool {
        self.symbols.iter().all(|&s| s == CONSTANT_SYMBOL)
    }

    /// Evaluates under an assignment; the constant symbol always reads 1
    /// regardless of `assignment[0]`.
    pub fn eval(&self, assignment: &BitVec) -> bool {
        self.symbols
            .iter()
            .fold(false, |acc, &s| acc ^ (s == CONSTANT_SYMBOL || assignment.get(s)))
    }

    pub fn xor(&self, other: &Self) -> Self {
        Self::from_symbols(self.symbols.iter().chain(other.symbols.iter()).copied())
    }

    pub fn render(&self) -> String {
        render_symbols(self.symbols.iter().copied())
    }
}

impl fmt::Debug for MeasurementExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MeasurementExpression({})", self.render())
    }
}

impl fmt::Display for MeasurementExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementKind {
    Deterministic,
    /// Random outcome; the stabilizer row that was replaced.
    Random { pivot: usize },
}

#[derive(Clone)]
pub struct SymbolicTableau {
    n: usize,
    storage: TiledBitMatrix,
    registry: SymbolRegistry,
    instruction_index: Option<usize>,
    last_kind: Option<MeasurementKind>,
}

impl fmt::Debug for SymbolicTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymbolicTableau(n={}, symbols={})", self.n, self.registry.len())?;
        for i in 0..2 * self.n {
            writeln!(f, "  {}", self.row(i))?;
        }
        Ok(())
    }
}

impl SymbolicTableau {
    /// The tableau of `|0…0⟩` with room for `symbol_capacity` symbols
    /// (constant included).
    pub fn new(n: usize, symbol_capacity: usize) -> Result<Self, TableauError> {
        Self::with_registry(n, SymbolRegistry::with_capacity(symbol_capacity))
    }

    /// Like [`new`](Self::new) but continues an existing registry.
    pub fn with_registry(n: usize, registry: SymbolRegistry) -> Result<Self, TableauError> {
        if n == 0 {
            return Err(TableauError::ZeroQubits);
        }
        let mut storage = TiledBitMatrix::zeros(2 * n + 1, 2 * n + registry.capacity());
        for i in 0..2 * n {
            storage.set(i, i, true);
        }
        Ok(Self {
            n,
            storage,
            registry,
            instruction_index: None,
            last_kind: None,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn registry(&self) -> &SymbolRegistry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut SymbolRegistry {
        &mut self.registry
    }

    pub fn into_registry(self) -> SymbolRegistry {
        self.registry
    }

    pub fn storage(&self) -> &TiledBitMatrix {
        &self.storage
    }

    /// Instruction index recorded in the origin of symbols allocated by
    /// subsequent measurements.
    pub fn set_instruction_index(&mut self, index: Option<usize>) {
        self.instruction_index = index;
    }

    /// Branch taken by the most recent measurement.
    pub fn last_measurement_kind(&self) -> Option<MeasurementKind> {
        self.last_kind
    }

    fn phase_col(&self, s: SymbolId) -> usize {
        2 * self.n + s
    }

    fn used_cols(&self) -> usize {
        2 * self.n + self.registry.len()
    }

    fn check_qubit(&self, a: usize) -> Result<(), TableauError> {
        if a < self.n {
            Ok(())
        } else {
            Err(TableauError::QubitOutOfRange { qubit: a, n: self.n })
        }
    }

    fn check_symbol(&self, s: SymbolId) -> Result<(), TableauError> {
        if self.registry.contains(s) {
            Ok(())
        } else {
            Err(TableauError::UnknownSymbol(s))
        }
    }

    fn columns(&mut self) {
        if self.storage.orientation() != Orientation::ColumnMajorTiles {
            let used = self.used_cols();
            self.storage.local_transpose_prefix(used);
        }
    }

    fn rows_mode(&mut self) {
        if self.storage.orientation() != Orientation::RowMajorTiles {
            let used = self.used_cols();
            self.storage.local_transpose_prefix(used);
        }
    }

    pub fn apply_h(&mut self, a: usize) -> Result<(), TableauError> {
        self.check_qubit(a)?;
        self.columns();
        let (x, z, r) = (a, self.n + a, self.phase_col(0));
        self.storage.column_update(r, [x, z], |[x, z]| x & z);
        self.storage.column_swap(x, z).expect("column-major");
        Ok(())
    }

    pub fn apply_s(&mut self, a: usize) -> Result<(), TableauError> {
        self.check_qubit(a)?;
        self.columns();
        let (x, z, r) = (a, self.n + a, self.phase_col(0));
        self.storage.column_update(r, [x, z], |[x, z]| x & z);
        self.storage.column_update(z, [x], |[x]| x);
        Ok(())
    }

    pub fn apply_s_dag(&mut self, a: usize) -> Result<(), TableauError> {
        self.check_qubit(a)?;
        self.columns();
        let (x, z, r) = (a, self.n + a, self.phase_col(0));
        self.storage.column_update(r, [x, z], |[x, z]| x & !z);
        self.storage.column_update(z, [x], |[x]| x);
        Ok(())
    }

    pub fn apply_cnot(&mut self, a: usize, b: usize) -> Result<(), TableauError> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(TableauError::SameQubit(a));
        }
        self.columns();
        let n = self.n;
        let (xa, za, xb, zb) = (a, n + a, b, n + b);
        let r = self.phase_col(0);
        self.storage
            .column_update(r, [xa, za, xb, zb], |[xa, za, xb, zb]| xa & zb & !(xb ^ za));
        self.storage.column_update(xb, [xa], |[x]| x);
        self.storage.column_update(za, [zb], |[z]| z);
        Ok(())
    }

    /// Applies `X^s` on qubit `a`. With `s = 0` this is a plain X gate.
    pub fn apply_symbolic_pauli_x(&mut self, a: usize, s: SymbolId) -> Result<(), TableauError> {
        self.check_qubit(a)?;
        self.check_symbol(s)?;
        self.columns();
        let (z, c) = (self.n + a, self.phase_col(s));
        self.storage.column_update(c, [z], |[z]| z);
        Ok(())
    }

    pub fn apply_symbolic_pauli_z(&mut self, a: usize, s: SymbolId) -> Result<(), TableauError> {
        self.check_qubit(a)?;
        self.check_symbol(s)?;
        self.columns();
        let c = self.phase_col(s);
        self.storage.column_update(c, [a], |[x]| x);
        Ok(())
    }

    pub fn apply_symbolic_pauli_y(&mut self, a: usize, s: SymbolId) -> Result<(), TableauError> {
        self.check_qubit(a)?;
        self.check_symbol(s)?;
        self.columns();
        let (z, c) = (self.n + a, self.phase_col(s));
        self.storage.column_update(c, [a, z], |[x, z]| x ^ z);
        Ok(())
    }

    pub fn apply_symbolic_pauli(&mut self, a: usize, axis: Axis, s: SymbolId) -> Result<(), TableauError> {
        match axis {
            Axis::X => self.apply_symbolic_pauli_x(a, s),
            Axis::Y => self.apply_symbolic_pauli_y(a, s),
            Axis::Z => self.apply_symbolic_pauli_z(a, s),
        }
    }

    /// Applies `P^e` for an expression `e`, one symbol at a time.
    pub fn apply_conditional_pauli(
        &mut self,
        a: usize,
        axis: Axis,
        e: &MeasurementExpression,
    ) -> Result<(), TableauError> {
        for &s in e.symbols() {
            self.check_symbol(s)?;
        }
        for &s in e.symbols() {
            self.apply_symbolic_pauli(a, axis, s)?;
        }
        Ok(())
    }

    fn xz(&self, r: usize) -> (BitVec, BitVec) {
        (
            self.storage.read_row_range(r, 0, self.n),
            self.storage.read_row_range(r, self.n, self.n),
        )
    }

    /// `row[target] := row[source] · row[target]`; row-major orientation.
    fn rowsum(&mut self, target: usize, source: usize, src: &(BitVec, BitVec)) -> Result<(), TableauError> {
        let (tx, tz) = self.xz(target);
        let exponent = phase_exponent_sum(src.0.words(), src.1.words(), tx.words(), tz.words());
        if exponent % 2 == 1 {
            return Err(TableauError::Anticommuting { target, other: source, exponent });
        }
        let used = self.used_cols();
        self.storage.row_xor_prefix(target, source, used);
        if exponent == 2 {
            self.storage.flip(target, self.phase_col(0));
        }
        Ok(())
    }

    /// Measures qubit `a` in the computational basis.
    ///
    /// A random outcome is represented by a fresh fair-coin symbol which
    /// becomes the sign of the new `Z_a` stabilizer. A deterministic
    /// outcome is read off the stabilizers selected by the destabilizers'
    /// X bits on `a`.
    pub fn measure(&mut self, a: usize) -> Result<MeasurementExpression, TableauError> {
        self.check_qubit(a)?;
        let n = self.n;
        let xcol = self.storage.read_column(a);
        let pivot = (n..2 * n).find(|&i| xcol.get(i));
        self.rows_mode();

        match pivot {
            Some(p) => {
                let s = self.registry.allocate_measurement(self.instruction_index, a)?;
                let src = self.xz(p);
                for i in xcol.ones().filter(|&i| i < 2 * n && i != p && i != p - n) {
                    self.rowsum(i, p, &src)?;
                }
                self.storage.row_copy(p - n, p);
                self.storage.row_clear(p);
                self.storage.set(p, n + a, true);
                self.storage.set(p, self.phase_col(s), true);
                self.last_kind = Some(MeasurementKind::Random { pivot: p });
                Ok(MeasurementExpression::single(s))
            }
            None => {
                let scratch = 2 * n;
                self.storage.row_clear(scratch);
                for i in xcol.ones().filter(|&i| i < n) {
                    let src = self.xz(n + i);
                    self.rowsum(scratch, n + i, &src)?;
                }
                let phase = self.storage.read_row_range(scratch, 2 * n, self.registry.len());
                self.last_kind = Some(MeasurementKind::Deterministic);
                Ok(MeasurementExpression::from_symbols(phase.ones()))
            }
        }
    }

    /// Resets qubit `a` to `|0⟩`: a measurement followed by `X^m`. Returns
    /// the discarded outcome expression.
    pub fn reset(&mut self, a: usize) -> Result<MeasurementExpression, TableauError> {
        let m = self.measure(a)?;
        self.apply_conditional_pauli(a, Axis::X, &m)?;
        Ok(m)
    }

    /// Generator `i` (destabilizers `0..n`, stabilizers `n..2n`) with its
    /// phase truncated to the allocated symbols.
    pub fn row(&self, i: usize) -> PauliRow {
        assert!(i < 2 * self.n, "row {i} out of range");
        let (xs, zs) = self.xz(i);
        let phase = self.storage.read_row_range(i, 2 * self.n, self.registry.len());
        PauliRow { xs, zs, phase: SymbolicPhase(phase) }
    }

    pub fn destabilizer(&self, i: usize) -> PauliRow {
        self.row(i)
    }

    pub fn stabilizer(&self, i: usize) -> PauliRow {
        self.row(self.n + i)
    }

    pub fn stabilizers(&self) -> Vec<PauliRow> {
        (0..self.n).map(|i| self.stabilizer(i)).collect()
    }

    /// One `(-1)^(expr) PAULIS` line per stabilizer generator.
    pub fn dump_stabilizers(&self) -> String {
        self.stabilizers().iter().map(|r| format!("{r}\n")).collect()
    }

    /// Checks the commutation structure of the generators: stabilizers
    /// commute pairwise, destabilizers commute pairwise, and destabilizer
    /// `i` anticommutes exactly with stabilizer `i`.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.n;
        let rows: Vec<PauliRow> = (0..2 * n).map(|i| self.row(i)).collect();
        for i in 0..2 * n {
            for j in (i + 1)..2 * n {
                let anti = i < n && j == i + n;
                if rows[i].commutes_with(&rows[j]) == anti {
                    return Err(format!(
                        "rows {i} ({}) and {j} ({}) should {}",
                        rows[i].pauli_string(),
                        rows[j].pauli_string(),
                        if anti { "anticommute" } else { "commute" }
                    ));
                }
            }
        }
        Ok(())
    }
}
