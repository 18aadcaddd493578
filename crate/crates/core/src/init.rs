//! One pass over a circuit that turns every measurement into an XOR
//! expression over symbols.

use thiserror::Error;

use crate::circuit::{decompose_noise, summarize, Circuit, CircuitSummary, Gate, NoiseError};
use crate::symbols::SymbolRegistry;
use crate::tableau::{MeasurementExpression, SymbolicTableau, TableauError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InitError {
    #[error("instruction {index} (line {line}): {source}")]
    Tableau {
        index: usize,
        line: usize,
        #[source]
        source: TableauError,
    },
    #[error("instruction {index} (line {line}): {source}")]
    Noise {
        index: usize,
        line: usize,
        #[source]
        source: NoiseError,
    },
}

/// Where a measurement came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementSite {
    pub instruction_index: usize,
    pub line: usize,
    pub qubit: usize,
}

/// Output of initialization: everything the sampler needs.
#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    pub summary: CircuitSummary,
    pub registry: SymbolRegistry,
    pub expressions: Vec<MeasurementExpression>,
    pub sites: Vec<MeasurementSite>,
}

impl CompiledCircuit {
    pub fn num_measurements(&self) -> usize {
        self.expressions.len()
    }

    pub fn num_symbols(&self) -> usize {
        self.registry.len()
    }
}

pub fn initialize(circuit: &Circuit) -> Result<CompiledCircuit, InitError> {
    initialize_with(circuit, |_, _| {})
}

/// Like [`initialize`], calling `observe(index, tableau)` after every
/// instruction.
pub fn initialize_with(
    circuit: &Circuit,
    mut observe: impl FnMut(usize, &SymbolicTableau),
) -> Result<CompiledCircuit, InitError> {
    let summary = summarize(circuit);
    let n = summary.n_qubits.max(1);
    let mut tab = SymbolicTableau::new(n, summary.symbol_capacity()).expect("n >= 1");
    let mut expressions = Vec::with_capacity(summary.n_measurements);
    let mut sites = Vec::with_capacity(summary.n_measurements);

    for (index, inst) in circuit.instructions.iter().enumerate() {
        let line = inst.line;
        let te = |source| InitError::Tableau { index, line, source };
        tab.set_instruction_index(Some(index));
        match inst.gate {
            Gate::H => for_each(&inst.targets, |q| tab.apply_h(q)).map_err(te)?,
            Gate::S => for_each(&inst.targets, |q| tab.apply_s(q)).map_err(te)?,
            Gate::SDag => for_each(&inst.targets, |q| tab.apply_s_dag(q)).map_err(te)?,
            Gate::X => for_each(&inst.targets, |q| tab.apply_symbolic_pauli_x(q, 0)).map_err(te)?,
            Gate::Y => for_each(&inst.targets, |q| tab.apply_symbolic_pauli_y(q, 0)).map_err(te)?,
            Gate::Z => for_each(&inst.targets, |q| tab.apply_symbolic_pauli_z(q, 0)).map_err(te)?,
            Gate::Cx => {
                for (a, b) in inst.pairs() {
                    tab.apply_cnot(a, b).map_err(te)?;
                }
            }
            Gate::M => {
                for &q in &inst.targets {
                    expressions.push(tab.measure(q).map_err(te)?);
                    sites.push(MeasurementSite { instruction_index: index, line, qubit: q });
                }
            }
            Gate::R => for_each(&inst.targets, |q| tab.reset(q).map(|_| ())).map_err(te)?,
            Gate::Tick => {}
            _ => {
                let apps = decompose_noise(inst, index, tab.registry_mut())
                    .map_err(|source| InitError::Noise { index, line, source })?;
                for (q, axis, s) in apps {
                    tab.apply_symbolic_pauli(q, axis, s).map_err(te)?;
                }
            }
        }
        observe(index, &tab);
    }

    Ok(CompiledCircuit {
        summary,
        registry: tab.into_registry(),
        expressions,
        sites,
    })
}

fn for_each(
    targets: &[usize],
    mut f: impl FnMut(usize) -> Result<(), TableauError>,
) -> Result<(), TableauError> {
    targets.iter().try_for_each(|&q| f(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use crate::symbols::{Distribution, SymbolKind};

    fn rendered(text: &str) -> Vec<String> {
        let c = parse_circuit(text).unwrap();
        initialize(&c).unwrap().expressions.iter().map(|e| e.render()).collect()
    }

    #[test]
    fn bell_example() {
        let c = parse_circuit("H 0\nCX 0 1\nX_ERROR(0.1) 0 1\nM 0 1\n").unwrap();
        let out = initialize(&c).unwrap();
        let r: Vec<String> = out.expressions.iter().map(|e| e.render()).collect();
        assert_eq!(r, ["s3", "s1 ^ s2 ^ s3"]);
        assert_eq!(out.registry.origin(3).unwrap().kind, SymbolKind::MeasurementRandomness);
        assert_eq!(out.registry.groups()[0].distribution, Distribution::Bernoulli(0.1));
        assert_eq!(out.sites[1], MeasurementSite { instruction_index: 3, line: 4, qubit: 1 });
    }

    #[test]
    fn four_qubit_example() {
        let text = "H 0\nCX 0 1\nCX 1 2\nCX 2 3\nZ_ERROR(0.1) 0\nX_ERROR(0.1) 1 2 3\nCX 2 3\nCX 1 2\nCX 0 1\nH 0\nM 0 1 2 3\n";
        assert_eq!(rendered(text), ["s1", "s2", "s2 ^ s3", "s3 ^ s4"]);
    }

    #[test]
    fn trivial_circuits() {
        assert_eq!(rendered("M 0"), ["0"]);
        assert_eq!(rendered("X 0\nM 0"), ["1"]);
        assert!(rendered("").is_empty());
        assert_eq!(rendered("H 0\nR 0\nM 0"), ["0"]);
        assert_eq!(rendered("X 0 1\nR 1\nM 0 1"), ["1", "0"]);
    }

    #[test]
    fn symbol_use_within_capacity() {
        let c = parse_circuit("H 0 1 2\nM 0 1 2\nR 0 1 2\nDEPOLARIZE2(0.1) 0 1\nM 0 1 2\n").unwrap();
        let out = initialize(&c).unwrap();
        assert!(out.registry.len() <= out.summary.symbol_capacity());
        assert_eq!(out.registry.len(), 1 + 3 + 4);
    }

    #[test]
    fn observer_sees_every_instruction() {
        let c = parse_circuit("H 0\nTICK\nM 0").unwrap();
        let mut seen = Vec::new();
        initialize_with(&c, |i, t| seen.push((i, t.registry().len()))).unwrap();
        assert_eq!(seen, [(0, 1), (1, 1), (2, 2)]);
    }
}
