//! Circuit text format, instruction list, pre-pass summary and the
//! lowering of noise channels to symbol-conditioned Paulis.
//!
//! Grammar, one instruction per line:
//!
//! ```text
//! NAME ['(' PROBABILITY ')'] TARGET*      # comment
//! ```
//!
//! Names are case-insensitive. `CNOT` is an alias of `CX` and `MZ` of `M`.

use std::fmt;

use thiserror::Error;

use crate::symbols::{Distribution, SymbolError, SymbolId, SymbolRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    H,
    S,
    SDag,
    X,
    Y,
    Z,
    Cx,
    M,
    R,
    XError,
    YError,
    ZError,
    Depolarize1,
    Depolarize2,
    Tick,
}

impl Gate {
    pub const ALL: [Gate; 15] = [
        Gate::H,
        Gate::S,
        Gate::SDag,
        Gate::X,
        Gate::Y,
        Gate::Z,
        Gate::Cx,
        Gate::M,
        Gate::R,
        Gate::XError,
        Gate::YError,
        Gate::ZError,
        Gate::Depolarize1,
        Gate::Depolarize2,
        Gate::Tick,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Gate::H => "H",
            Gate::S => "S",
            Gate::SDag => "S_DAG",
            Gate::X => "X",
            Gate::Y => "Y",
            Gate::Z => "Z",
            Gate::Cx => "CX",
            Gate::M => "M",
            Gate::R => "R",
            Gate::XError => "X_ERROR",
            Gate::YError => "Y_ERROR",
            Gate::ZError => "Z_ERROR",
            Gate::Depolarize1 => "DEPOLARIZE1",
            Gate::Depolarize2 => "DEPOLARIZE2",
            Gate::Tick => "TICK",
        }
    }

    pub fn from_name(name: &str) -> Option<Gate> {
        let upper = name.to_ascii_uppercase();
        match upper.as_str() {
            "CNOT" => Some(Gate::Cx),
            "MZ" => Some(Gate::M),
            _ => Gate::ALL.into_iter().find(|g| g.name() == upper),
        }
    }

    pub fn is_noise(self) -> bool {
        matches!(
            self,
            Gate::XError | Gate::YError | Gate::ZError | Gate::Depolarize1 | Gate::Depolarize2
        )
    }

    pub fn is_pairwise(self) -> bool {
        matches!(self, Gate::Cx | Gate::Depolarize2)
    }

    pub fn is_clifford(self) -> bool {
        matches!(self, Gate::H | Gate::S | Gate::SDag | Gate::X | Gate::Y | Gate::Z | Gate::Cx)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instruction {
    pub gate: Gate,
    pub targets: Vec<usize>,
    /// Probability, present exactly for noise instructions.
    pub param: Option<f64>,
    /// 1-based source line, or 0 for generated instructions.
    pub line: usize,
}

impl Instruction {
    pub fn new(gate: Gate, targets: Vec<usize>) -> Self {
        Self { gate, targets, param: None, line: 0 }
    }

    pub fn noise(gate: Gate, p: f64, targets: Vec<usize>) -> Self {
        Self { gate, targets, param: Some(p), line: 0 }
    }

    /// Target pairs for pairwise gates.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.targets.chunks_exact(2).map(|p| (p[0], p[1]))
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.gate.name())?;
        if let Some(p) = self.param {
            write!(f, "({p})")?;
        }
        for t in &self.targets {
            write!(f, " {t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(instructions: Vec<Instruction>) -> Self {
        Self { instructions }
    }

    /// One more than the largest target index.
    pub fn num_qubits(&self) -> usize {
        self.instructions
            .iter()
            .flat_map(|i| i.targets.iter())
            .max()
            .map_or(0, |&m| m + 1)
    }

    pub fn num_measurements(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| i.gate == Gate::M)
            .map(|i| i.targets.len())
            .sum()
    }

    pub fn is_noiseless(&self) -> bool {
        !self.instructions.iter().any(|i| i.gate.is_noise())
    }

    pub fn push(&mut self, inst: Instruction) {
        self.instructions.push(inst);
    }
}

/// Canonical form: one instruction per line, upper-case names, single
/// spaces, shortest round-trip probabilities.
impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for inst in &self.instructions {
            writeln!(f, "{inst}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unknown instruction '{0}'")]
    UnknownInstruction(String),
    #[error("'{0}' is not supported (flat circuits only)")]
    Unsupported(String),
    #[error("invalid target '{0}'")]
    BadTarget(String),
    #[error("invalid probability '{0}'")]
    BadParam(String),
    #[error("probability {0} outside [0, 1]")]
    ParamOutOfRange(f64),
    #[error("{0} requires a probability argument")]
    MissingParam(Gate),
    #[error("{0} takes no argument")]
    UnexpectedParam(Gate),
    #[error("{0} needs an even number of targets")]
    OddTargets(Gate),
    #[error("{gate} pair uses qubit {qubit} twice")]
    DuplicatePairTarget { gate: Gate, qubit: usize },
    #[error("{0} needs at least one target")]
    NoTargets(Gate),
    #[error("TICK takes no targets")]
    TargetsOnTick,
}

const UNSUPPORTED: &[&str] = &[
    "REPEAT",
    "DETECTOR",
    "OBSERVABLE_INCLUDE",
    "QUBIT_COORDS",
    "SHIFT_COORDS",
    "MPP",
    "}",
];

pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    let mut instructions = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let inst = parse_line(content, line).map_err(|kind| ParseError { line, kind })?;
        instructions.push(inst);
    }
    Ok(Circuit { instructions })
}

fn parse_line(content: &str, line: usize) -> Result<Instruction, ParseErrorKind> {
    let name_end = content
        .find(|c: char| c.is_whitespace() || c == '(')
        .unwrap_or(content.len());
    let name = &content[..name_end];
    let mut rest = content[name_end..].trim_start();

    let gate = match Gate::from_name(name) {
        Some(g) => g,
        None => {
            let upper = name.to_ascii_uppercase();
            return Err(if UNSUPPORTED.contains(&upper.as_str()) || content.contains('{') {
                ParseErrorKind::Unsupported(upper)
            } else {
                ParseErrorKind::UnknownInstruction(name.to_string())
            });
        }
    };

    let mut param = None;
    if let Some(after) = rest.strip_prefix('(') {
        let close = after
            .find(')')
            .ok_or_else(|| ParseErrorKind::BadParam(after.to_string()))?;
        let text = after[..close].trim();
        let p: f64 = text
            .parse()
            .map_err(|_| ParseErrorKind::BadParam(text.to_string()))?;
        if !p.is_finite() {
            return Err(ParseErrorKind::BadParam(text.to_string()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(ParseErrorKind::ParamOutOfRange(p));
        }
        param = Some(p);
        rest = after[close + 1..].trim_start();
    }

    let targets = rest
        .split_whitespace()
        .map(|tok| tok.parse::<usize>().map_err(|_| ParseErrorKind::BadTarget(tok.to_string())))
        .collect::<Result<Vec<_>, _>>()?;

    let inst = Instruction { gate, targets, param, line };
    validate(&inst)?;
    Ok(inst)
}

fn validate(inst: &Instruction) -> Result<(), ParseErrorKind> {
    let gate = inst.gate;
    match (gate.is_noise(), inst.param) {
        (true, None) => return Err(ParseErrorKind::MissingParam(gate)),
        (false, Some(_)) => return Err(ParseErrorKind::UnexpectedParam(gate)),
        _ => {}
    }
    if gate == Gate::Tick {
        if !inst.targets.is_empty() {
            return Err(ParseErrorKind::TargetsOnTick);
        }
        return Ok(());
    }
    if inst.targets.is_empty() {
        return Err(ParseErrorKind::NoTargets(gate));
    }
    if gate.is_pairwise() {
        if inst.targets.len() % 2 != 0 {
            return Err(ParseErrorKind::OddTargets(gate));
        }
        if let Some((q, _)) = inst.pairs().find(|(a, b)| a == b) {
            return Err(ParseErrorKind::DuplicatePairTarget { gate, qubit: q });
        }
    }
    Ok(())
}

/// Sizes computed by the pre-pass.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSummary {
    pub n_qubits: usize,
    pub n_measurements: usize,
    pub n_resets: usize,
    pub n_fault_symbols: usize,
    pub symbol_groups: Vec<GroupSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub group_id: usize,
    pub arity: usize,
    pub distribution: Distribution,
    pub instruction_index: usize,
}

impl CircuitSummary {
    /// Upper bound on symbols initialization can allocate, constant included.
    pub fn symbol_capacity(&self) -> usize {
        1 + self.n_fault_symbols + self.n_measurements + self.n_resets
    }
}

fn noise_distribution(inst: &Instruction) -> Option<Distribution> {
    let p = inst.param?;
    match inst.gate {
        Gate::XError | Gate::YError | Gate::ZError => Some(Distribution::Bernoulli(p)),
        Gate::Depolarize1 => Some(Distribution::Depolarize1(p)),
        Gate::Depolarize2 => Some(Distribution::Depolarize2(p)),
        _ => None,
    }
}

/// Groups one noise instruction expands to: one per target, or one per
/// pair for two-qubit channels.
fn noise_groups(inst: &Instruction) -> Vec<(Distribution, Vec<usize>)> {
    let Some(dist) = noise_distribution(inst) else {
        return Vec::new();
    };
    if inst.gate.is_pairwise() {
        inst.pairs().map(|(a, b)| (dist, vec![a, b])).collect()
    } else {
        inst.targets.iter().map(|&q| (dist, vec![q])).collect()
    }
}

pub fn summarize(circuit: &Circuit) -> CircuitSummary {
    let mut summary = CircuitSummary {
        n_qubits: circuit.num_qubits(),
        n_measurements: 0,
        n_resets: 0,
        n_fault_symbols: 0,
        symbol_groups: Vec::new(),
    };
    for (idx, inst) in circuit.instructions.iter().enumerate() {
        match inst.gate {
            Gate::M => summary.n_measurements += inst.targets.len(),
            Gate::R => summary.n_resets += inst.targets.len(),
            g if g.is_noise() => {
                for (dist, _) in noise_groups(inst) {
                    summary.n_fault_symbols += dist.arity();
                    summary.symbol_groups.push(GroupSummary {
                        group_id: summary.symbol_groups.len(),
                        arity: dist.arity(),
                        distribution: dist,
                        instruction_index: idx,
                    });
                }
            }
            _ => {}
        }
    }
    summary
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error("{0} is not a noise instruction")]
    NotNoise(Gate),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

/// Allocates the fault symbols of a noise instruction and returns the
/// symbol-conditioned Paulis `(qubit, axis, symbol)` it stands for.
///
/// `Y_ERROR` uses one symbol for both its X and Z parts; `Y^s` and
/// `X^s Z^s` differ only by a global phase.
pub fn decompose_noise(
    inst: &Instruction,
    instruction_index: usize,
    registry: &mut SymbolRegistry,
) -> Result<Vec<(usize, Axis, SymbolId)>, NoiseError> {
    if !inst.gate.is_noise() {
        return Err(NoiseError::NotNoise(inst.gate));
    }
    let mut out = Vec::new();
    for (dist, qubits) in noise_groups(inst) {
        let syms = registry.allocate_group(dist, Some(instruction_index), qubits.clone())?;
        match inst.gate {
            Gate::XError => out.push((qubits[0], Axis::X, syms[0])),
            Gate::ZError => out.push((qubits[0], Axis::Z, syms[0])),
            Gate::YError => {
                out.push((qubits[0], Axis::X, syms[0]));
                out.push((qubits[0], Axis::Z, syms[0]));
            }
            Gate::Depolarize1 => {
                out.push((qubits[0], Axis::X, syms[0]));
                out.push((qubits[0], Axis::Z, syms[1]));
            }
            Gate::Depolarize2 => {
                out.push((qubits[0], Axis::X, syms[0]));
                out.push((qubits[0], Axis::Z, syms[1]));
                out.push((qubits[1], Axis::X, syms[2]));
                out.push((qubits[1], Axis::Z, syms[3]));
            }
            _ => unreachable!(),
        }
    }
    Ok(out)
}
