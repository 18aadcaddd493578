//! Pauli strings in x/z bit-pair form and the phase-correct row product.
//!
//! Generators of a stabilizer state always carry a real sign, so only the
//! sign is stored. Powers of `i` appear transiently while two rows are
//! multiplied and must cancel to a real sign; if they don't, the rows did
//! not commute and the tableau is corrupt.

use std::fmt;

use thiserror::Error;

use crate::bits::BitVec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PauliError {
    #[error("row shape mismatch: target has {target_qubits} qubits/{target_phase} phase bits, source has {source_qubits}/{source_phase}")]
    ShapeMismatch {
        target_qubits: usize,
        target_phase: usize,
        source_qubits: usize,
        source_phase: usize,
    },
    /// The product of the two rows is not Hermitian (the rows anticommute).
    #[error("row product has imaginary phase i^{exponent}; rows anticommute")]
    NonHermitianProduct { exponent: u8 },
}

/// Single-qubit Pauli as an `(x, z)` bit pair: I=00, X=10, Z=01, Y=11.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliXZ {
    pub x: bool,
    pub z: bool,
}

impl PauliXZ {
    pub const I: Self = Self { x: false, z: false };
    pub const X: Self = Self { x: true, z: false };
    pub const Z: Self = Self { x: false, z: true };
    pub const Y: Self = Self { x: true, z: true };

    pub const ALL: [Self; 4] = [Self::I, Self::X, Self::Z, Self::Y];

    pub fn new(x: bool, z: bool) -> Self {
        Self { x, z }
    }

    pub fn symbol(self) -> char {
        match (self.x, self.z) {
            (false, false) => 'I',
            (true, false) => 'X',
            (false, true) => 'Z',
            (true, true) => 'Y',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' | '_' => Some(Self::I),
            'X' => Some(Self::X),
            'Y' => Some(Self::Y),
            'Z' => Some(Self::Z),
            _ => None,
        }
    }

    pub fn commutes_with(self, other: Self) -> bool {
        !((self.x & other.z) ^ (self.z & other.x))
    }
}

/// Exponent `g` of `i` picked up by the product `a · b` of single-qubit
/// Paulis, i.e. `σ(a)σ(b) = i^g σ(a ⊕ b)`.
pub fn single_qubit_phase_exponent(a: PauliXZ, b: PauliXZ) -> i32 {
    let (xb, zb) = (b.x as i32, b.z as i32);
    match (a.x, a.z) {
        (false, false) => 0,
        (true, true) => zb - xb,
        (true, false) => zb * (2 * xb - 1),
        (false, true) => xb * (1 - 2 * zb),
    }
}

/// Sum of per-qubit phase exponents of the product `a · b`, reduced mod 4,
/// computed over packed x/z words.
pub fn phase_exponent_sum(ax: &[u64], az: &[u64], bx: &[u64], bz: &[u64]) -> u8 {
    debug_assert!(ax.len() == az.len() && bx.len() == bz.len() && ax.len() == bx.len());
    let mut plus: u32 = 0;
    let mut minus: u32 = 0;
    for i in 0..ax.len() {
        let (x1, z1, x2, z2) = (ax[i], az[i], bx[i], bz[i]);
        let a_x = x1 & !z1;
        let a_y = x1 & z1;
        let a_z = !x1 & z1;
        let b_x = x2 & !z2;
        let b_y = x2 & z2;
        let b_z = !x2 & z2;
        plus = plus.wrapping_add(((a_x & b_y) | (a_y & b_z) | (a_z & b_x)).count_ones());
        minus = minus.wrapping_add(((a_x & b_z) | (a_y & b_x) | (a_z & b_y)).count_ones());
    }
    (plus.wrapping_sub(minus) & 3) as u8
}

/// Sign of a generator as an XOR expression over symbols.
///
/// Bit 0 is the constant symbol (the literal `1`); bit `j` is symbol `s_j`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct SymbolicPhase(pub BitVec);

impl SymbolicPhase {
    pub fn zero(width: usize) -> Self {
        Self(BitVec::zeros(width))
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn constant(&self) -> bool {
        self.0.len() > 0 && self.0.get(0)
    }

    pub fn symbols(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.ones()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// Renders as `0`, `1`, or `s1 ^ s4` (with `1 ^ ...` for a constant term).
    pub fn render(&self) -> String {
        render_symbols(self.0.ones())
    }
}

impl fmt::Debug for SymbolicPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymbolicPhase({})", self.render())
    }
}

pub(crate) fn render_symbols(ids: impl Iterator<Item = usize>) -> String {
    let parts: Vec<String> = ids
        .map(|s| if s == 0 { "1".to_string() } else { format!("s{s}") })
        .collect();
    if parts.is_empty() {
        "0".to_string()
    } else {
        parts.join(" ^ ")
    }
}

/// One tableau row: an n-qubit Pauli with a symbolic sign.
#[derive(Clone, PartialEq, Eq)]
pub struct PauliRow {
    pub xs: BitVec,
    pub zs: BitVec,
    pub phase: SymbolicPhase,
}

impl PauliRow {
    pub fn identity(n: usize, phase_width: usize) -> Self {
        Self {
            xs: BitVec::zeros(n),
            zs: BitVec::zeros(n),
            phase: SymbolicPhase::zero(phase_width),
        }
    }

    /// Parses `"XZ_Y"`-style strings, optionally prefixed by `-` or `+`.
    pub fn from_str_with_width(s: &str, phase_width: usize) -> Option<Self> {
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let paulis: Option<Vec<PauliXZ>> = body.chars().map(PauliXZ::from_symbol).collect();
        let paulis = paulis?;
        let mut row = Self::identity(paulis.len(), phase_width.max(1));
        for (q, p) in paulis.into_iter().enumerate() {
            row.set_pauli(q, p);
        }
        if neg {
            row.phase.0.set(0, true);
        }
        Some(row)
    }

    pub fn num_qubits(&self) -> usize {
        self.xs.len()
    }

    pub fn pauli(&self, q: usize) -> PauliXZ {
        PauliXZ::new(self.xs.get(q), self.zs.get(q))
    }

    pub fn set_pauli(&mut self, q: usize, p: PauliXZ) {
        self.xs.set(q, p.x);
        self.zs.set(q, p.z);
    }

    pub fn pauli_string(&self) -> String {
        (0..self.num_qubits()).map(|q| self.pauli(q).symbol()).collect()
    }

    pub fn commutes_with(&self, other: &PauliRow) -> bool {
        let mut acc = 0u64;
        for i in 0..self.xs.words().len() {
            acc ^= (self.xs.words()[i] & other.zs.words()[i]) ^ (self.zs.words()[i] & other.xs.words()[i]);
        }
        acc.count_ones() % 2 == 0
    }

    /// Replaces `self` with `source · self`, XOR-ing symbolic phases and
    /// folding the real sign of the product into the constant symbol.
    pub fn multiply_into(&mut self, source: &PauliRow) -> Result<(), PauliError> {
        if self.num_qubits() != source.num_qubits() || self.phase.width() != source.phase.width() {
            return Err(PauliError::ShapeMismatch {
                target_qubits: self.num_qubits(),
                target_phase: self.phase.width(),
                source_qubits: source.num_qubits(),
                source_phase: source.phase.width(),
            });
        }
        let exponent = phase_exponent_sum(
            source.xs.words(),
            source.zs.words(),
            self.xs.words(),
            self.zs.words(),
        );
        if exponent % 2 == 1 {
            return Err(PauliError::NonHermitianProduct { exponent });
        }
        self.xs.xor_assign(&source.xs);
        self.zs.xor_assign(&source.zs);
        self.phase.0.xor_assign(&source.phase.0);
        if exponent == 2 {
            self.phase.0.flip(0);
        }
        Ok(())
    }
}

/// Free-function form of [`PauliRow::multiply_into`].
pub fn row_multiply_into(target: &mut PauliRow, source: &PauliRow) -> Result<(), PauliError> {
    target.multiply_into(source)
}

impl fmt::Debug for PauliRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(-1)^({}) {}", self.phase.render(), self.pauli_string())
    }
}

impl fmt::Display for PauliRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64 as C;
    use proptest::prelude::*;

    use super::*;

    type M2 = [[C; 2]; 2];

    fn matrix(p: PauliXZ) -> M2 {
        let o = C::new(0.0, 0.0);
        let l = C::new(1.0, 0.0);
        let i = C::new(0.0, 1.0);
        match p.symbol() {
            'I' => [[l, o], [o, l]],
            'X' => [[o, l], [l, o]],
            'Y' => [[o, -i], [i, o]],
            'Z' => [[l, o], [o, -l]],
            _ => unreachable!(),
        }
    }

    fn mul(a: &M2, b: &M2) -> M2 {
        let mut out = [[C::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                for k in 0..2 {
                    out[r][c] += a[r][k] * b[k][c];
                }
            }
        }
        out
    }

    fn close(a: &M2, b: &M2) -> bool {
        (0..2).all(|r| (0..2).all(|c| (a[r][c] - b[r][c]).norm() < 1e-12))
    }

    fn i_pow(g: i32) -> C {
        match g.rem_euclid(4) {
            0 => C::new(1.0, 0.0),
            1 => C::new(0.0, 1.0),
            2 => C::new(-1.0, 0.0),
            _ => C::new(0.0, -1.0),
        }
    }

    #[test]
    fn exponent_matches_matrix_products_exhaustively() {
        for a in PauliXZ::ALL {
            for b in PauliXZ::ALL {
                let g = single_qubit_phase_exponent(a, b);
                let prod = mul(&matrix(a), &matrix(b));
                let c = PauliXZ::new(a.x ^ b.x, a.z ^ b.z);
                let scaled = matrix(c).map(|row| row.map(|v| v * i_pow(g)));
                assert!(close(&prod, &scaled), "{}{} g={g}", a.symbol(), b.symbol());
            }
        }
    }

    #[test]
    fn exponent_examples() {
        assert_eq!(single_qubit_phase_exponent(PauliXZ::I, PauliXZ::Y), 0);
        assert_eq!(single_qubit_phase_exponent(PauliXZ::X, PauliXZ::Z), -1);
        assert_eq!(single_qubit_phase_exponent(PauliXZ::Z, PauliXZ::X), 1);
        assert_eq!(single_qubit_phase_exponent(PauliXZ::Y, PauliXZ::Y), 0);
    }

    #[test]
    fn packed_exponent_sum_matches_scalar_rule() {
        for a in PauliXZ::ALL {
            for b in PauliXZ::ALL {
                let s = phase_exponent_sum(&[a.x as u64], &[a.z as u64], &[b.x as u64], &[b.z as u64]);
                assert_eq!(s as i32, single_qubit_phase_exponent(a, b).rem_euclid(4));
            }
        }
    }

    #[test]
    fn row_times_itself_is_identity() {
        let mut t = PauliRow::from_str_with_width("Z", 2).unwrap();
        let s = t.clone();
        t.multiply_into(&s).unwrap();
        assert_eq!(t, PauliRow::identity(1, 2));
    }

    #[test]
    fn anticommuting_rows_are_rejected() {
        // X·Z = -iY: not a valid generator product.
        let mut t = PauliRow::from_str_with_width("X", 1).unwrap();
        let s = PauliRow::from_str_with_width("Z", 1).unwrap();
        assert_eq!(
            t.multiply_into(&s),
            Err(PauliError::NonHermitianProduct { exponent: 1 })
        );
    }

    #[test]
    fn sign_from_commuting_product() {
        // (XX)(ZZ) = (XZ)(XZ) = (-iY)(-iY) = -YY
        let mut t = PauliRow::from_str_with_width("ZZ", 1).unwrap();
        let s = PauliRow::from_str_with_width("XX", 1).unwrap();
        t.multiply_into(&s).unwrap();
        assert_eq!(t.pauli_string(), "YY");
        assert!(t.phase.constant());
    }

    #[test]
    fn symbolic_phases_xor() {
        let mut t = PauliRow::from_str_with_width("Z", 4).unwrap();
        t.phase.0.set(1, true);
        let mut s = PauliRow::identity(1, 4);
        s.phase.0.set(2, true);
        s.phase.0.set(0, true);
        t.multiply_into(&s).unwrap();
        assert_eq!(t.phase.render(), "1 ^ s1 ^ s2");
    }

    // Dense 2^n x 2^n oracle for multi-qubit products.
    fn dense(row: &PauliRow) -> Vec<Vec<C>> {
        let mut m = vec![vec![C::new(1.0, 0.0)]];
        for q in 0..row.num_qubits() {
            let p = matrix(row.pauli(q));
            let d = m.len();
            let mut out = vec![vec![C::new(0.0, 0.0); d * 2]; d * 2];
            for r in 0..d {
                for c in 0..d {
                    for pr in 0..2 {
                        for pc in 0..2 {
                            out[r * 2 + pr][c * 2 + pc] = m[r][c] * p[pr][pc];
                        }
                    }
                }
            }
            m = out;
        }
        let sign = if row.phase.constant() { -1.0 } else { 1.0 };
        m.into_iter().map(|r| r.into_iter().map(|v| v * sign).collect()).collect()
    }

    fn dense_mul(a: &[Vec<C>], b: &[Vec<C>]) -> Vec<Vec<C>> {
        let d = a.len();
        (0..d)
            .map(|r| (0..d).map(|c| (0..d).map(|k| a[r][k] * b[k][c]).sum()).collect())
            .collect()
    }

    fn pauli_row_strategy(n: usize) -> impl Strategy<Value = PauliRow> {
        (proptest::collection::vec(0u8..4, n), any::<bool>()).prop_map(|(ps, neg)| {
            let s: String = ps.iter().map(|&p| PauliXZ::ALL[p as usize].symbol()).collect();
            let s = if neg { format!("-{s}") } else { s };
            PauliRow::from_str_with_width(&s, 1).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig { max_global_rejects: 20_000, ..ProptestConfig::default() })]

        #[test]
        fn product_matches_dense_oracle(
            (a, b) in (1usize..=4).prop_flat_map(|n| (pauli_row_strategy(n), pauli_row_strategy(n)))
        ) {
            let mut t = b.clone();
            match t.multiply_into(&a) {
                Ok(()) => {
                    prop_assert!(a.commutes_with(&b));
                    let want = dense_mul(&dense(&a), &dense(&b));
                    let got = dense(&t);
                    for r in 0..want.len() {
                        for c in 0..want.len() {
                            prop_assert!((want[r][c] - got[r][c]).norm() < 1e-9);
                        }
                    }
                }
                Err(PauliError::NonHermitianProduct { .. }) => prop_assert!(!a.commutes_with(&b)),
                Err(e) => prop_assert!(false, "{e}"),
            }
        }

        #[test]
        fn product_is_associative_for_commuting_triples(
            a in pauli_row_strategy(2), b in pauli_row_strategy(2), c in pauli_row_strategy(2)
        ) {
            prop_assume!(a.commutes_with(&b) && b.commutes_with(&c) && a.commutes_with(&c));
            // c <- a·(b·c) versus c <- (a·b)·c
            let mut left = c.clone();
            left.multiply_into(&b).unwrap();
            left.multiply_into(&a).unwrap();
            let mut ab = b.clone();
            ab.multiply_into(&a).unwrap();
            let mut right = c.clone();
            right.multiply_into(&ab).unwrap();
            prop_assert_eq!(left, right);
        }
    }
}
