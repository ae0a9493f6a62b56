use serde::{Deserialize, Serialize};

use super::TmError;

/// Tape symbol. `Minus` is the blank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Symbol {
    Minus,
    Plus,
}

impl Symbol {
    pub const BLANK: Symbol = Symbol::Minus;

    pub fn value(self) -> i8 {
        match self {
            Symbol::Minus => -1,
            Symbol::Plus => 1,
        }
    }

    /// Bit convention: 1 -> +1, 0 -> -1.
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Symbol::Plus
        } else {
            Symbol::Minus
        }
    }

    pub fn bit(self) -> bool {
        self == Symbol::Plus
    }

    pub fn from_sign(value: i64) -> Option<Self> {
        match value {
            -1 => Some(Symbol::Minus),
            1 => Some(Symbol::Plus),
            _ => None,
        }
    }
}

impl TryFrom<i8> for Symbol {
    type Error = String;
    fn try_from(value: i8) -> Result<Self, Self::Error> {
        Symbol::from_sign(i64::from(value)).ok_or_else(|| format!("tape symbol must be -1 or 1, got {value}"))
    }
}

impl From<Symbol> for i8 {
    fn from(s: Symbol) -> i8 {
        s.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Move {
    Left,
    Right,
}

impl Move {
    pub fn offset(self) -> i64 {
        match self {
            Move::Left => -1,
            Move::Right => 1,
        }
    }
}

impl TryFrom<i8> for Move {
    type Error = String;
    fn try_from(value: i8) -> Result<Self, Self::Error> {
        match value {
            -1 => Ok(Move::Left),
            1 => Ok(Move::Right),
            _ => Err(format!("head move must be -1 or 1, got {value}")),
        }
    }
}

impl From<Move> for i8 {
    fn from(m: Move) -> i8 {
        m.offset() as i8
    }
}

/// One row of the transition table: `(next state, written symbols, moves)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub next: usize,
    pub write: Vec<Symbol>,
    pub moves: Vec<Move>,
}

/// A validated machine. The transition table is total on `Q x {-1,+1}^d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuringMachine {
    names: Vec<String>,
    initial: usize,
    accepting: Vec<bool>,
    read_only: Vec<bool>,
    tapes: usize,
    table: Vec<Transition>,
}

impl TuringMachine {
    /// Builds a machine from a dense table indexed by `state * 2^d + code(read)`.
    pub fn new(
        names: Vec<String>,
        initial: usize,
        accepting: Vec<bool>,
        read_only: Vec<bool>,
        table: Vec<Transition>,
    ) -> Result<Self, TmError> {
        let tapes = read_only.len();
        if tapes == 0 {
            return Err(TmError::InvalidMachine("at least one tape is required".into()));
        }
        if tapes > 16 {
            return Err(TmError::InvalidMachine(format!("{tapes} tapes is beyond the supported 16")));
        }
        if names.is_empty() {
            return Err(TmError::InvalidMachine("state set is empty".into()));
        }
        if accepting.len() != names.len() {
            return Err(TmError::InvalidMachine("accepting mask length differs from state count".into()));
        }
        if initial >= names.len() {
            return Err(TmError::InvalidMachine(format!("initial state {initial} out of range")));
        }
        let reads = 1usize << tapes;
        if table.len() != names.len() * reads {
            return Err(TmError::InvalidMachine(format!(
                "transition table has {} rows, expected {}",
                table.len(),
                names.len() * reads
            )));
        }
        let tm = TuringMachine {
            names,
            initial,
            accepting,
            read_only,
            tapes,
            table,
        };
        for q in 0..tm.state_count() {
            for code in 0..reads {
                let tr = &tm.table[q * reads + code];
                if tr.next >= tm.state_count() {
                    return Err(TmError::InvalidMachine(format!(
                        "transition from {} targets unknown state {}",
                        tm.names[q], tr.next
                    )));
                }
                if tr.write.len() != tapes || tr.moves.len() != tapes {
                    return Err(TmError::InvalidMachine(format!(
                        "transition from {} has wrong arity",
                        tm.names[q]
                    )));
                }
                let read = tm.decode(code);
                for i in 0..tapes {
                    if tm.read_only[i] && tr.write[i] != read[i] {
                        return Err(TmError::InvalidMachine(format!(
                            "transition from {} writes to read-only tape {i}",
                            tm.names[q]
                        )));
                    }
                }
            }
        }
        Ok(tm)
    }

    pub fn state_count(&self) -> usize {
        self.names.len()
    }

    pub fn tape_count(&self) -> usize {
        self.tapes
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn name(&self, q: usize) -> &str {
        &self.names[q]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn accepting_mask(&self) -> &[bool] {
        &self.accepting
    }

    pub fn is_read_only(&self, tape: usize) -> bool {
        self.read_only[tape]
    }

    pub fn read_only_mask(&self) -> &[bool] {
        &self.read_only
    }

    /// Tape that receives the input payload: the first read-only tape, or tape 0.
    pub fn input_tape(&self) -> usize {
        self.read_only.iter().position(|&r| r).unwrap_or(0)
    }

    /// Number of distinct head-symbol tuples, `2^d`.
    pub fn read_count(&self) -> usize {
        1 << self.tapes
    }

    /// Bit `i` of the code is set iff tape `i` reads `+1`.
    pub fn encode(&self, read: &[Symbol]) -> usize {
        read.iter()
            .enumerate()
            .fold(0, |acc, (i, s)| if s.bit() { acc | (1 << i) } else { acc })
    }

    pub fn decode(&self, code: usize) -> Vec<Symbol> {
        (0..self.tapes).map(|i| Symbol::from_bit(code & (1 << i) != 0)).collect()
    }

    pub fn transition(&self, q: usize, read: &[Symbol]) -> &Transition {
        self.transition_code(q, self.encode(read))
    }

    pub fn transition_code(&self, q: usize, code: usize) -> &Transition {
        &self.table[q * self.read_count() + code]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_codes_round_trip() {
        let tm = crate::corpus::copy_machine();
        for code in 0..tm.read_count() {
            assert_eq!(tm.encode(&tm.decode(code)), code);
        }
    }

    #[test]
    fn rejects_writes_on_read_only_tape() {
        let t = |next, w: [Symbol; 1]| Transition {
            next,
            write: w.to_vec(),
            moves: vec![Move::Right],
        };
        let err = TuringMachine::new(
            vec!["a".into()],
            0,
            vec![false],
            vec![true],
            vec![t(0, [Symbol::Plus]), t(0, [Symbol::Plus])],
        )
        .unwrap_err();
        assert!(matches!(err, TmError::InvalidMachine(_)));
    }

    #[test]
    fn symbol_serde_uses_signs() {
        let s: Vec<Symbol> = serde_json::from_str("[1,-1]").unwrap();
        assert_eq!(s, vec![Symbol::Plus, Symbol::Minus]);
        assert!(serde_json::from_str::<Symbol>("0").is_err());
    }
}
