//! Layered random circuits used for benchmarking.
//!
//! A circuit of family `f` on `n` qubits has `n` layers. Every layer
//! applies one of `H`, `S` or identity to each qubit (uniformly), then a
//! round of `CX` gates, then measures `ceil(n / 20)` distinct random
//! qubits. The circuit ends by measuring every qubit.
//!
//! * family `a`: 5 random `CX` pairs per layer (qubits within a pair
//!   distinct, pairs may overlap);
//! * family `b`: `floor(n / 2)` disjoint random pairs;
//! * family `c`: as `b`, followed by `DEPOLARIZE1(p)` on every qubit.
//!
//! All choices come from a ChaCha8 generator seeded with the given seed, so
//! a `(family, n, seed)` triple always yields the same circuit.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Gate, Instruction};

pub const DEFAULT_NOISE: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    A,
    B,
    C,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::A, Family::B, Family::C];
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Self::A),
            "b" => Ok(Self::B),
            "c" => Ok(Self::C),
            _ => Err(format!("unknown family '{s}' (expected a, b or c)")),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::A => "a",
            Self::B => "b",
            Self::C => "c",
        })
    }
}

/// Builds the benchmark circuit; `noise` is only used by family `c`.
pub fn layered_circuit(family: Family, n: usize, seed: u64, noise: f64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = Circuit::default();
    let measured_per_layer = n.div_ceil(20);
    let mut qubits: Vec<usize> = (0..n).collect();

    for _ in 0..n {
        let mut hs = Vec::new();
        let mut ss = Vec::new();
        for q in 0..n {
            match rng.gen_range(0..3) {
                0 => hs.push(q),
                1 => ss.push(q),
                _ => {}
            }
        }
        if !hs.is_empty() {
            c.push(Instruction::new(Gate::H, hs));
        }
        if !ss.is_empty() {
            c.push(Instruction::new(Gate::S, ss));
        }

        let mut pairs = Vec::new();
        if n >= 2 {
            match family {
                Family::A => {
                    for _ in 0..5 {
                        let a = rng.gen_range(0..n);
                        let mut b = rng.gen_range(0..n - 1);
                        if b >= a {
                            b += 1;
                        }
                        pairs.extend([a, b]);
                    }
                }
                Family::B | Family::C => {
                    qubits.shuffle(&mut rng);
                    pairs.extend_from_slice(&qubits[..2 * (n / 2)]);
                }
            }
        }
        if !pairs.is_empty() {
            c.push(Instruction::new(Gate::Cx, pairs));
        }
        if family == Family::C {
            c.push(Instruction::noise(Gate::Depolarize1, noise, (0..n).collect()));
        }

        let mut measured = index::sample(&mut rng, n, measured_per_layer).into_vec();
        measured.sort_unstable();
        c.push(Instruction::new(Gate::M, measured));
    }
    if n > 0 {
        c.push(Instruction::new(Gate::M, (0..n).collect()));
    }
    c
}

/// `count` Clifford gates that cancel pairwise (`H H`, `S S_DAG`,
/// `CX CX`), on qubits `< n`.
pub fn identity_padding(n: usize, count: usize, seed: u64) -> Vec<Instruction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() + 2 <= count {
        let a = rng.gen_range(0..n);
        match rng.gen_range(0..3) {
            0 => {
                out.push(Instruction::new(Gate::H, vec![a]));
                out.push(Instruction::new(Gate::H, vec![a]));
            }
            1 => {
                out.push(Instruction::new(Gate::S, vec![a]));
                out.push(Instruction::new(Gate::SDag, vec![a]));
            }
            _ if n >= 2 => {
                let b = (a + rng.gen_range(1..n)) % n;
                out.push(Instruction::new(Gate::Cx, vec![a, b]));
                out.push(Instruction::new(Gate::Cx, vec![a, b]));
            }
            _ => {
                out.push(Instruction::new(Gate::H, vec![a]));
                out.push(Instruction::new(Gate::H, vec![a]));
            }
        }
    }
    out
}
