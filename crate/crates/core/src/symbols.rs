//! Symbol bookkeeping: which bit-symbol came from where and how it is
//! distributed.

use thiserror::Error;

/// Index of a bit-symbol. Symbol 0 is the constant `1`.
pub type SymbolId = usize;

pub const CONSTANT_SYMBOL: SymbolId = 0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolError {
    #[error("symbol capacity {capacity} exhausted (requested {requested} more)")]
    CapacityExhausted { capacity: usize, requested: usize },
    #[error("unknown symbol s{0}")]
    Unknown(SymbolId),
}

/// Joint distribution of the symbols in one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    /// One symbol, `P(1) = p`.
    Bernoulli(f64),
    /// Symbols `(x, z)`: `00` with `1-p`, each of `10`, `01`, `11` with `p/3`.
    Depolarize1(f64),
    /// Symbols `(x1, z1, x2, z2)`: `0000` with `1-p`, each other pattern `p/15`.
    Depolarize2(f64),
    /// One symbol, a fair coin (random measurement outcome).
    FairCoin,
}

impl Distribution {
    pub fn arity(&self) -> usize {
        match self {
            Self::Bernoulli(_) | Self::FairCoin => 1,
            Self::Depolarize1(_) => 2,
            Self::Depolarize2(_) => 4,
        }
    }

    /// Probability of each bit pattern; bit `k` of the index is symbol `k`
    /// of the group.
    pub fn pmf(&self) -> Vec<f64> {
        match *self {
            Self::Bernoulli(p) => vec![1.0 - p, p],
            Self::FairCoin => vec![0.5, 0.5],
            Self::Depolarize1(p) => {
                let mut v = vec![p / 3.0; 4];
                v[0] = 1.0 - p;
                v
            }
            Self::Depolarize2(p) => {
                let mut v = vec![p / 15.0; 16];
                v[0] = 1.0 - p;
                v
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Bernoulli(p) => format!("bernoulli(p={p})"),
            Self::FairCoin => "fair coin".to_string(),
            Self::Depolarize1(p) => format!("depolarize1(p={p})"),
            Self::Depolarize2(p) => format!("depolarize2(p={p})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    Constant,
    Fault,
    MeasurementRandomness,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolOrigin {
    pub kind: SymbolKind,
    /// Position of the originating instruction in the circuit.
    pub instruction_index: Option<usize>,
    pub group_id: Option<usize>,
    /// Position of this symbol inside its group.
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGroup {
    pub id: usize,
    pub distribution: Distribution,
    pub symbols: Vec<SymbolId>,
    pub instruction_index: Option<usize>,
    pub qubits: Vec<usize>,
}

/// Dense, traversal-ordered list of allocated symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolRegistry {
    entries: Vec<SymbolOrigin>,
    groups: Vec<SymbolGroup>,
    capacity: usize,
}

impl SymbolRegistry {
    /// A registry holding only the constant symbol, able to grow to
    /// `capacity` symbols in total (constant included).
    pub fn with_capacity(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            entries: vec![SymbolOrigin {
                kind: SymbolKind::Constant,
                instruction_index: None,
                group_id: None,
                component: 0,
            }],
            groups: Vec::new(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn entries(&self) -> &[SymbolOrigin] {
        &self.entries
    }

    pub fn groups(&self) -> &[SymbolGroup] {
        &self.groups
    }

    pub fn origin(&self, s: SymbolId) -> Option<&SymbolOrigin> {
        self.entries.get(s)
    }

    pub fn group_of(&self, s: SymbolId) -> Option<&SymbolGroup> {
        self.entries.get(s)?.group_id.map(|g| &self.groups[g])
    }

    pub fn contains(&self, s: SymbolId) -> bool {
        s < self.entries.len()
    }

    /// Allocates a fresh group of symbols and returns their ids.
    pub fn allocate_group(
        &mut self,
        distribution: Distribution,
        instruction_index: Option<usize>,
        qubits: Vec<usize>,
    ) -> Result<Vec<SymbolId>, SymbolError> {
        let arity = distribution.arity();
        if self.entries.len() + arity > self.capacity {
            return Err(SymbolError::CapacityExhausted {
                capacity: self.capacity,
                requested: arity,
            });
        }
        let kind = match distribution {
            Distribution::FairCoin => SymbolKind::MeasurementRandomness,
            _ => SymbolKind::Fault,
        };
        let group_id = self.groups.len();
        let start = self.entries.len();
        for component in 0..arity {
            self.entries.push(SymbolOrigin {
                kind,
                instruction_index,
                group_id: Some(group_id),
                component,
            });
        }
        let symbols: Vec<SymbolId> = (start..start + arity).collect();
        self.groups.push(SymbolGroup {
            id: group_id,
            distribution,
            symbols: symbols.clone(),
            instruction_index,
            qubits,
        });
        Ok(symbols)
    }

    pub fn allocate_measurement(&mut self, instruction_index: Option<usize>, qubit: usize) -> Result<SymbolId, SymbolError> {
        Ok(self.allocate_group(Distribution::FairCoin, instruction_index, vec![qubit])?[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmfs_sum_to_one() {
        for d in [
            Distribution::Bernoulli(0.2),
            Distribution::FairCoin,
            Distribution::Depolarize1(0.3),
            Distribution::Depolarize2(0.15),
        ] {
            let pmf = d.pmf();
            assert_eq!(pmf.len(), 1 << d.arity());
            assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let d1 = Distribution::Depolarize1(0.3).pmf();
        assert!((d1[0] - 0.7).abs() < 1e-12 && d1[1..].iter().all(|p| (p - 0.1).abs() < 1e-12));
    }

    #[test]
    fn allocation_is_dense_and_bounded() {
        let mut r = SymbolRegistry::with_capacity(4);
        assert_eq!(r.allocate_group(Distribution::Depolarize1(0.1), Some(0), vec![0]).unwrap(), vec![1, 2]);
        assert_eq!(r.allocate_measurement(Some(1), 0).unwrap(), 3);
        assert_eq!(r.origin(3).unwrap().kind, SymbolKind::MeasurementRandomness);
        assert!(matches!(r.allocate_measurement(Some(2), 0), Err(SymbolError::CapacityExhausted { .. })));
        assert_eq!(r.group_of(2).unwrap().id, 0);
    }
}
