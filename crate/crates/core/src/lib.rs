//! Stabilizer circuit sampling with symbolic phases.
//!
//! A circuit is simulated once with every Pauli fault and every random
//! measurement outcome represented by a bit-symbol. Each measurement then
//! becomes an XOR of symbols, and sampling reduces to drawing symbol values
//! and evaluating those XORs for many shots at once.
//!
//! ```
//! use stabsym_core::{initialize, parse_circuit, sample_compiled};
//!
//! let circuit = parse_circuit("H 0\nCX 0 1\nX_ERROR(0.1) 0 1\nM 0 1").unwrap();
//! let compiled = initialize(&circuit).unwrap();
//! assert_eq!(compiled.expressions[1].render(), "s1 ^ s2 ^ s3");
//! let shots = sample_compiled(&compiled, 1000, 7).unwrap();
//! assert_eq!(shots.shots(), 1000);
//! ```

pub mod bitmatrix;
pub mod bits;
pub mod circuit;
pub mod generate;
pub mod init;
pub mod oracle;
pub mod pauli;
pub mod sampler;
pub mod symbols;
pub mod tableau;

pub use bitmatrix::{gf2_multiply, gf2_multiply_sparse, BitMatrixError, Orientation, TiledBitMatrix};
pub use bits::BitVec;
pub use circuit::{parse_circuit, summarize, Axis, Circuit, CircuitSummary, Gate, Instruction, ParseError};
pub use init::{initialize, initialize_with, CompiledCircuit, InitError, MeasurementSite};
pub use pauli::{PauliRow, SymbolicPhase};
pub use sampler::{
    draw_assignments, encode_shots, sample, sample_compiled, write_shots, OutputFormat, SampleError,
    SampleMatrix, SymbolAssignmentBatch,
};
pub use symbols::{Distribution, SymbolId, SymbolKind, SymbolRegistry};
pub use tableau::{MeasurementExpression, SymbolicTableau, TableauError};
