//! Slow, independent reference simulators used to check the symbolic
//! pipeline: a concrete-sign tableau run shot by shot, and a dense state
//! vector for small circuits.
//!
//! Nothing here shares kernels with the packed implementation.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bits::BitVec;
use crate::circuit::{Circuit, Gate, Instruction};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{n} qubits is too many for the state-vector oracle (limit {limit})")]
    TooManyQubits { n: usize, limit: usize },
    #[error("state-vector oracle only handles noiseless circuits")]
    Noisy,
}

pub const STATE_VECTOR_LIMIT: usize = 12;

/// Aaronson–Gottesman tableau with one concrete sign bit per row; row `2n`
/// is scratch space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteTableau {
    n: usize,
    x: Vec<Vec<bool>>,
    z: Vec<Vec<bool>>,
    r: Vec<bool>,
}

/// Exponent of `i` picked up when multiplying single-qubit Paulis
/// `(x1,z1) · (x2,z2)`.
fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
    let (x2, z2) = (x2 as i32, z2 as i32);
    match (x1, z1) {
        (false, false) => 0,
        (true, true) => z2 - x2,
        (true, false) => z2 * (2 * x2 - 1),
        (false, true) => x2 * (1 - 2 * z2),
    }
}

impl ConcreteTableau {
    pub fn new(n: usize) -> Self {
        let mut x = vec![vec![false; n]; 2 * n + 1];
        let mut z = vec![vec![false; n]; 2 * n + 1];
        for i in 0..n {
            x[i][i] = true;
            z[n + i][i] = true;
        }
        Self { n, x, z, r: vec![false; 2 * n + 1] }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Stabilizer `i` as `(negative, "XZIY")`.
    pub fn stabilizer(&self, i: usize) -> (bool, String) {
        let row = self.n + i;
        let s = (0..self.n)
            .map(|q| match (self.x[row][q], self.z[row][q]) {
                (false, false) => 'I',
                (true, false) => 'X',
                (false, true) => 'Z',
                (true, true) => 'Y',
            })
            .collect();
        (self.r[row], s)
    }

    pub fn h(&mut self, a: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][a] && self.z[i][a];
            let t = self.x[i][a];
            self.x[i][a] = self.z[i][a];
            self.z[i][a] = t;
        }
    }

    pub fn s(&mut self, a: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][a] && self.z[i][a];
            self.z[i][a] ^= self.x[i][a];
        }
    }

    pub fn s_dag(&mut self, a: usize) {
        self.s(a);
        self.s(a);
        self.s(a);
    }

    pub fn cx(&mut self, a: usize, b: usize) {
        for i in 0..2 * self.n {
            let (xa, za, xb, zb) = (self.x[i][a], self.z[i][a], self.x[i][b], self.z[i][b]);
            self.r[i] ^= xa && zb && (xb == za);
            self.x[i][b] = xb ^ xa;
            self.z[i][a] = za ^ zb;
        }
    }

    pub fn pauli_x(&mut self, a: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.z[i][a];
        }
    }

    pub fn pauli_z(&mut self, a: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][a];
        }
    }

    pub fn pauli_y(&mut self, a: usize) {
        self.pauli_x(a);
        self.pauli_z(a);
    }

    fn rowsum(&mut self, h: usize, i: usize) {
        let mut sum = 2 * self.r[h] as i32 + 2 * self.r[i] as i32;
        for j in 0..self.n {
            sum += g(self.x[i][j], self.z[i][j], self.x[h][j], self.z[h][j]);
        }
        self.r[h] = sum.rem_euclid(4) == 2;
        for j in 0..self.n {
            self.x[h][j] ^= self.x[i][j];
            self.z[h][j] ^= self.z[i][j];
        }
    }

    /// True if measuring `a` now would give a random result.
    pub fn is_random(&self, a: usize) -> bool {
        (self.n..2 * self.n).any(|p| self.x[p][a])
    }

    /// Measures `a`; a random outcome is taken from `coin`.
    pub fn measure(&mut self, a: usize, coin: impl FnOnce() -> bool) -> bool {
        let n = self.n;
        if let Some(p) = (n..2 * n).find(|&p| self.x[p][a]) {
            for i in 0..2 * n {
                if i != p && self.x[i][a] {
                    self.rowsum(i, p);
                }
            }
            self.x[p - n] = self.x[p].clone();
            self.z[p - n] = self.z[p].clone();
            self.r[p - n] = self.r[p];
            self.x[p] = vec![false; n];
            self.z[p] = vec![false; n];
            self.z[p][a] = true;
            let outcome = coin();
            self.r[p] = outcome;
            outcome
        } else {
            let s = 2 * n;
            self.x[s] = vec![false; n];
            self.z[s] = vec![false; n];
            self.r[s] = false;
            for i in 0..n {
                if self.x[i][a] {
                    self.rowsum(s, i + n);
                }
            }
            self.r[s]
        }
    }
}

/// Supplies fault and coin values while a circuit is replayed.
trait Chooser {
    fn fault_pattern(&mut self, gate: Gate, p: f64) -> Vec<bool>;
    fn coin(&mut self) -> bool;
}

struct Random(ChaCha8Rng);

impl Chooser for Random {
    fn fault_pattern(&mut self, gate: Gate, p: f64) -> Vec<bool> {
        let arity = match gate {
            Gate::Depolarize1 => 2,
            Gate::Depolarize2 => 4,
            _ => 1,
        };
        if !self.0.gen_bool(p) {
            return vec![false; arity];
        }
        if arity == 1 {
            return vec![true];
        }
        let pattern = self.0.gen_range(1..1usize << arity);
        (0..arity).map(|k| pattern >> k & 1 == 1).collect()
    }

    fn coin(&mut self) -> bool {
        self.0.gen()
    }
}

/// Reads symbol values in allocation order: fault symbols where noise
/// appears, one symbol per random measurement.
struct Forced<'a> {
    bits: &'a BitVec,
    next: usize,
}

impl Forced<'_> {
    fn take(&mut self) -> bool {
        self.next += 1;
        self.next < self.bits.len() && self.bits.get(self.next)
    }
}

impl Chooser for Forced<'_> {
    fn fault_pattern(&mut self, gate: Gate, _p: f64) -> Vec<bool> {
        let arity = match gate {
            Gate::Depolarize1 => 2,
            Gate::Depolarize2 => 4,
            _ => 1,
        };
        (0..arity).map(|_| self.take()).collect()
    }

    fn coin(&mut self) -> bool {
        self.take()
    }
}

fn apply_fault(t: &mut ConcreteTableau, gate: Gate, qubits: &[usize], pattern: &[bool]) {
    match gate {
        Gate::XError if pattern[0] => t.pauli_x(qubits[0]),
        Gate::YError if pattern[0] => t.pauli_y(qubits[0]),
        Gate::ZError if pattern[0] => t.pauli_z(qubits[0]),
        Gate::Depolarize1 | Gate::Depolarize2 => {
            for (k, &q) in qubits.iter().enumerate() {
                if pattern[2 * k] {
                    t.pauli_x(q);
                }
                if pattern[2 * k + 1] {
                    t.pauli_z(q);
                }
            }
        }
        _ => {}
    }
}

fn replay(circuit: &Circuit, chooser: &mut impl Chooser) -> Vec<bool> {
    let n = circuit.num_qubits().max(1);
    let mut t = ConcreteTableau::new(n);
    let mut out = Vec::new();
    for inst in &circuit.instructions {
        replay_instruction(&mut t, inst, chooser, &mut out);
    }
    out
}

fn replay_instruction(t: &mut ConcreteTableau, inst: &Instruction, chooser: &mut impl Chooser, out: &mut Vec<bool>) {
    let ts = &inst.targets;
    match inst.gate {
        Gate::H => ts.iter().for_each(|&q| t.h(q)),
        Gate::S => ts.iter().for_each(|&q| t.s(q)),
        Gate::SDag => ts.iter().for_each(|&q| t.s_dag(q)),
        Gate::X => ts.iter().for_each(|&q| t.pauli_x(q)),
        Gate::Y => ts.iter().for_each(|&q| t.pauli_y(q)),
        Gate::Z => ts.iter().for_each(|&q| t.pauli_z(q)),
        Gate::Cx => ts.chunks(2).for_each(|p| t.cx(p[0], p[1])),
        Gate::M => {
            for &q in ts {
                let m = t.measure(q, || chooser.coin());
                out.push(m);
            }
        }
        Gate::R => {
            for &q in ts {
                if t.measure(q, || chooser.coin()) {
                    t.pauli_x(q);
                }
            }
        }
        Gate::Tick => {}
        Gate::Depolarize2 => {
            for pair in ts.chunks(2) {
                let pattern = chooser.fault_pattern(inst.gate, inst.param.unwrap_or(0.0));
                apply_fault(t, inst.gate, pair, &pattern);
            }
        }
        gate => {
            for &q in ts {
                let pattern = chooser.fault_pattern(gate, inst.param.unwrap_or(0.0));
                apply_fault(t, gate, &[q], &pattern);
            }
        }
    }
}

/// Simulates `shots` independent noisy runs; `result[shot][k]` is the
/// outcome of measurement `k`.
pub fn run_concrete(circuit: &Circuit, seed: u64, shots: usize) -> Vec<Vec<bool>> {
    let mut chooser = Random(ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    (0..shots).map(|_| replay(circuit, &mut chooser)).collect()
}

/// One run where bit `j` of `assignment` decides symbol `s_j` (bit 0 is
/// ignored). Missing trailing symbols read as 0.
pub fn run_concrete_forced(circuit: &Circuit, assignment: &BitVec) -> Vec<bool> {
    replay(circuit, &mut Forced { bits: assignment, next: 0 })
}

/// Dense `2^n` amplitude vector; qubit `q` is bit `q` of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n: usize) -> Result<Self, OracleError> {
        if n > STATE_VECTOR_LIMIT {
            return Err(OracleError::TooManyQubits { n, limit: STATE_VECTOR_LIMIT });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn single(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1 << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply(&mut self, gate: Gate, q: usize) {
        let o = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let m = match gate {
            Gate::H => [[r, r], [r, -r]],
            Gate::S => [[o, z], [z, i]],
            Gate::SDag => [[o, z], [z, -i]],
            Gate::X => [[z, o], [o, z]],
            Gate::Y => [[z, -i], [i, z]],
            Gate::Z => [[o, z], [z, -o]],
            other => panic!("{other} is not a single-qubit gate"),
        };
        self.single(q, m);
    }

    pub fn cx(&mut self, a: usize, b: usize) {
        let (ca, tb) = (1 << a, 1 << b);
        for i in 0..self.amps.len() {
            if i & ca != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }

    /// Probability that qubit `q` reads 1.
    pub fn prob_one(&self, q: usize) -> f64 {
        let bit = 1 << q;
        (0..self.amps.len()).filter(|i| i & bit != 0).map(|i| self.amps[i].norm_sqr()).sum()
    }

    /// Projects qubit `q` onto `outcome` and renormalizes.
    pub fn project(&mut self, q: usize, outcome: bool) {
        let bit = 1 << q;
        let mut norm = 0.0;
        for i in 0..self.amps.len() {
            if (i & bit != 0) != outcome {
                self.amps[i] = Complex64::new(0.0, 0.0);
            } else {
                norm += self.amps[i].norm_sqr();
            }
        }
        let scale = 1.0 / norm.sqrt();
        for a in &mut self.amps {
            *a *= scale;
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }
}

/// Outcome probabilities of a noiseless circuit, keyed by the outcome
/// bits in measurement order.
pub fn exact_distribution(circuit: &Circuit) -> Result<BTreeMap<Vec<bool>, f64>, OracleError> {
    if !circuit.is_noiseless() {
        return Err(OracleError::Noisy);
    }
    let n = circuit.num_qubits().max(1);
    // (state, probability, outcomes so far)
    let mut branches = vec![(StateVector::new(n)?, 1.0f64, Vec::new())];
    for inst in &circuit.instructions {
        match inst.gate {
            Gate::Cx => {
                for (s, _, _) in &mut branches {
                    inst.pairs().for_each(|(a, b)| s.cx(a, b));
                }
            }
            Gate::M | Gate::R => {
                for &q in &inst.targets {
                    let mut next = Vec::new();
                    for (s, p, rec) in branches {
                        let p1 = s.prob_one(q);
                        for (outcome, po) in [(false, 1.0 - p1), (true, p1)] {
                            if po < 1e-12 {
                                continue;
                            }
                            let mut s2 = s.clone();
                            s2.project(q, outcome);
                            let mut rec2 = rec.clone();
                            if inst.gate == Gate::M {
                                rec2.push(outcome);
                            } else if outcome {
                                s2.apply(Gate::X, q);
                            }
                            next.push((s2, p * po, rec2));
                        }
                    }
                    branches = merge(next);
                }
            }
            Gate::Tick => {}
            g => {
                for (s, _, _) in &mut branches {
                    inst.targets.iter().for_each(|&q| s.apply(g, q));
                }
            }
        }
    }
    let mut dist = BTreeMap::new();
    for (_, p, rec) in branches {
        *dist.entry(rec).or_insert(0.0) += p;
    }
    Ok(dist)
}

/// Combines branches with identical records whose states coincide, so
/// repeated resets do not double the branch count.
fn merge(branches: Vec<(StateVector, f64, Vec<bool>)>) -> Vec<(StateVector, f64, Vec<bool>)> {
    let mut out: Vec<(StateVector, f64, Vec<bool>)> = Vec::new();
    for (s, p, rec) in branches {
        let same = out.iter_mut().find(|(s2, _, r2)| {
            *r2 == rec && s2.amps.iter().zip(&s.amps).all(|(a, b)| (a - b).norm() < 1e-9)
        });
        match same {
            Some(entry) => entry.1 += p,
            None => out.push((s, p, rec)),
        }
    }
    out
}

/// Empirical outcome distribution of a set of shots.
pub fn empirical_distribution(shots: &[Vec<bool>]) -> BTreeMap<Vec<bool>, f64> {
    let mut d = BTreeMap::new();
    let w = 1.0 / shots.len().max(1) as f64;
    for s in shots {
        *d.entry(s.clone()).or_insert(0.0) += w;
    }
    d
}

pub fn total_variation(a: &BTreeMap<Vec<bool>, f64>, b: &BTreeMap<Vec<bool>, f64>) -> f64 {
    let mut sum = 0.0;
    for (k, pa) in a {
        sum += (pa - b.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, pb) in b {
        if !a.contains_key(k) {
            sum += pb;
        }
    }
    sum / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;

    fn dist(text: &str) -> BTreeMap<Vec<bool>, f64> {
        exact_distribution(&parse_circuit(text).unwrap()).unwrap()
    }

    fn close(d: &BTreeMap<Vec<bool>, f64>, expect: &[(&[bool], f64)]) -> bool {
        let e: BTreeMap<Vec<bool>, f64> = expect.iter().map(|(k, p)| (k.to_vec(), *p)).collect();
        total_variation(d, &e) < 1e-9
    }

    #[test]
    fn exact_small_circuits() {
        assert!(close(&dist("H 0\nM 0"), &[(&[false], 0.5), (&[true], 0.5)]));
        assert!(close(&dist("H 0\nCX 0 1\nM 0\nM 1"), &[(&[false, false], 0.5), (&[true, true], 0.5)]));
        let fig1 = "H 0\nCX 0 1\nCX 1 2\nCX 2 3\nCX 2 3\nCX 1 2\nCX 0 1\nH 0\nM 0 1 2 3";
        assert!(close(&dist(fig1), &[(&[false; 4], 1.0)]));
        assert!(close(&dist("H 0\nR 0\nM 0"), &[(&[false], 1.0)]));
        assert!(close(&dist("H 0\nS 0\nS 0\nH 0\nM 0"), &[(&[true], 1.0)]));
        assert!(close(&dist("H 0\nS 0\nS_DAG 0\nH 0\nM 0"), &[(&[false], 1.0)]));
        assert!(close(&dist("H 0\nS 0\nH 0\nM 0"), &[(&[false], 0.5), (&[true], 0.5)]));
    }

    #[test]
    fn state_vector_guards() {
        assert!(matches!(StateVector::new(13), Err(OracleError::TooManyQubits { .. })));
        assert!(matches!(exact_distribution(&parse_circuit("X_ERROR(0.1) 0").unwrap()), Err(OracleError::Noisy)));
        let mut s = StateVector::new(3).unwrap();
        for g in [Gate::H, Gate::S, Gate::Y, Gate::SDag, Gate::H] {
            s.apply(g, 1);
        }
        s.cx(1, 2);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn concrete_runs() {
        let c = parse_circuit("X 0\nM 0").unwrap();
        assert!(run_concrete(&c, 1, 50).iter().all(|s| s == &[true]));
        let bell = parse_circuit("H 0\nCX 0 1\nM 0 1").unwrap();
        let shots = run_concrete(&bell, 2, 2000);
        assert!(shots.iter().all(|s| s[0] == s[1]));
        let ones = shots.iter().filter(|s| s[0]).count();
        assert!((800..1200).contains(&ones));
    }

    #[test]
    fn forced_assignment_mode() {
        let c = parse_circuit("H 0\nCX 0 1\nX_ERROR(0.1) 0 1\nM 0 1").unwrap();
        // s1 = 1, s2 = 0, s3 = 1  ->  m1 = s3 = 1, m2 = s1^s2^s3 = 0
        let a = BitVec::from_bools(&[true, true, false, true]);
        assert_eq!(run_concrete_forced(&c, &a), vec![true, false]);
        let a = BitVec::from_bools(&[true, false, true, false]);
        assert_eq!(run_concrete_forced(&c, &a), vec![false, true]);
    }

    #[test]
    fn concrete_tableau_matches_state_vector_on_deterministic_outcomes() {
        // GHZ-like state then basis change: parity of X measurements is fixed
        let c = parse_circuit("H 0\nCX 0 1\nCX 1 2\nH 0 1 2\nM 0 1 2").unwrap();
        let d = dist("H 0\nCX 0 1\nCX 1 2\nH 0 1 2\nM 0 1 2");
        for shot in run_concrete(&c, 9, 200) {
            assert!(d.contains_key(&shot));
            assert_eq!(shot.iter().filter(|&&b| b).count() % 2, 0);
        }
    }

    #[test]
    fn tvd_basics() {
        let a: BTreeMap<Vec<bool>, f64> = [(vec![false], 1.0)].into();
        let b: BTreeMap<Vec<bool>, f64> = [(vec![true], 1.0)].into();
        assert!((total_variation(&a, &b) - 1.0).abs() < 1e-12);
        assert_eq!(total_variation(&a, &a), 0.0);
    }
}
