//! JSON machine files.
//!
//! ```json
//! {"states": ["a", "halt"], "initial": "a", "accepting": ["halt"], "tapes": 2,
//!  "read_only": [0],
//!  "delta": [{"from": "a", "read": [1, -1], "to": "halt", "write": [1, 1], "move": [1, 1]}]}
//! ```
//!
//! Tape indices are 0-based. Rows for accepting states may be omitted; the
//! simulator never consults them and they default to an identity self-loop.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Move, Symbol, TmError, Transition, TuringMachine};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub from: String,
    pub read: Vec<Symbol>,
    pub to: String,
    pub write: Vec<Symbol>,
    #[serde(rename = "move")]
    pub moves: Vec<Move>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub states: Vec<String>,
    pub initial: String,
    pub accepting: Vec<String>,
    pub tapes: usize,
    #[serde(default)]
    pub read_only: Vec<usize>,
    pub delta: Vec<TransitionSpec>,
}

impl MachineSpec {
    pub fn from_json(text: &str) -> Result<Self, TmError> {
        serde_json::from_str(text).map_err(|e| TmError::InvalidMachine(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("machine spec serializes")
    }

    pub fn build(&self) -> Result<TuringMachine, TmError> {
        let d = self.tapes;
        if d == 0 || d > 16 {
            return Err(TmError::InvalidMachine(format!("unsupported tape count {d}")));
        }
        let index: HashMap<&str, usize> = self
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        if index.len() != self.states.len() {
            return Err(TmError::InvalidMachine("duplicate state names".into()));
        }
        let lookup = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| TmError::InvalidMachine(format!("unknown state {name:?}")))
        };
        let initial = lookup(&self.initial)?;
        let mut accepting = vec![false; self.states.len()];
        for a in &self.accepting {
            accepting[lookup(a)?] = true;
        }
        let mut read_only = vec![false; d];
        for &r in &self.read_only {
            if r >= d {
                return Err(TmError::InvalidMachine(format!("read-only tape {r} out of range")));
            }
            read_only[r] = true;
        }

        let reads = 1usize << d;
        let code = |read: &[Symbol]| {
            read.iter()
                .enumerate()
                .fold(0, |acc, (i, s)| if s.bit() { acc | (1 << i) } else { acc })
        };
        let mut table: Vec<Option<Transition>> = vec![None; self.states.len() * reads];
        for row in &self.delta {
            if row.read.len() != d || row.write.len() != d || row.moves.len() != d {
                return Err(TmError::InvalidMachine(format!(
                    "transition from {:?} must list {d} symbols and moves",
                    row.from
                )));
            }
            let slot = lookup(&row.from)? * reads + code(&row.read);
            if table[slot].is_some() {
                return Err(TmError::InvalidMachine(format!(
                    "duplicate transition from {:?} on {:?}",
                    row.from, row.read
                )));
            }
            table[slot] = Some(Transition {
                next: lookup(&row.to)?,
                write: row.write.clone(),
                moves: row.moves.clone(),
            });
        }
        let mut dense = Vec::with_capacity(table.len());
        for (slot, entry) in table.into_iter().enumerate() {
            let q = slot / reads;
            let read: Vec<Symbol> = (0..d).map(|i| Symbol::from_bit(slot % reads & (1 << i) != 0)).collect();
            match entry {
                Some(t) => dense.push(t),
                None if accepting[q] => dense.push(Transition {
                    next: q,
                    write: read,
                    moves: vec![Move::Right; d],
                }),
                None => {
                    return Err(TmError::InvalidMachine(format!(
                        "transition function not total: missing ({:?}, {:?})",
                        self.states[q],
                        read.iter().map(|s| s.value()).collect::<Vec<_>>()
                    )))
                }
            }
        }
        TuringMachine::new(self.states.clone(), initial, accepting, read_only, dense)
    }

    /// Inverse of [`MachineSpec::build`], listing every non-accepting row.
    pub fn from_machine(tm: &TuringMachine, name: Option<String>) -> Self {
        let mut delta = Vec::new();
        for q in 0..tm.state_count() {
            if tm.is_accepting(q) {
                continue;
            }
            for code in 0..tm.read_count() {
                let t = tm.transition_code(q, code);
                delta.push(TransitionSpec {
                    from: tm.name(q).to_string(),
                    read: tm.decode(code),
                    to: tm.name(t.next).to_string(),
                    write: t.write.clone(),
                    moves: t.moves.clone(),
                });
            }
        }
        MachineSpec {
            name,
            states: tm.names().to_vec(),
            initial: tm.name(tm.initial()).to_string(),
            accepting: (0..tm.state_count())
                .filter(|&q| tm.is_accepting(q))
                .map(|q| tm.name(q).to_string())
                .collect(),
            tapes: tm.tape_count(),
            read_only: (0..tm.tape_count()).filter(|&i| tm.is_read_only(i)).collect(),
            delta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"{
        "states": ["a", "h"], "initial": "a", "accepting": ["h"], "tapes": 1,
        "delta": [
            {"from": "a", "read": [1], "to": "h", "write": [-1], "move": [1]},
            {"from": "a", "read": [-1], "to": "a", "write": [1], "move": [-1]}
        ]}"#;

    #[test]
    fn parses_and_defaults_accepting_rows() {
        let tm = MachineSpec::from_json(TINY).unwrap().build().unwrap();
        assert_eq!(tm.state_count(), 2);
        assert!(tm.is_accepting(1));
        let t = tm.transition(0, &[Symbol::Plus]);
        assert_eq!((t.next, t.write[0], t.moves[0]), (1, Symbol::Minus, Move::Right));
        assert_eq!(tm.transition(1, &[Symbol::Plus]).next, 1);
    }

    #[test]
    fn missing_rows_are_rejected() {
        let text = TINY.replace(
            r#",
            {"from": "a", "read": [-1], "to": "a", "write": [1], "move": [-1]}"#,
            "",
        );
        let err = MachineSpec::from_json(&text).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("not total"), "{err}");
    }

    #[test]
    fn spec_round_trip_preserves_machine() {
        for (name, tm) in crate::corpus::all() {
            let spec = MachineSpec::from_machine(&tm, Some(name.to_string()));
            let again = MachineSpec::from_json(&spec.to_json()).unwrap().build().unwrap();
            assert_eq!(again, tm, "{name}");
        }
    }
}
