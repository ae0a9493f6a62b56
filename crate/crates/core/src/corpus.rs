//! Demo machines shipped with the library.
//!
//! Every machine keeps its input on read-only tape 0 in the framed layout of
//! [`frame_bits`]: a marker cell `+1` before each data cell, so the first
//! blank marker ends the input. Machines are stored as JSON under `corpus/`.

use crate::tm::{frame_bits, MachineSpec, Move, Symbol, Transition, TuringMachine};

const COPY: &str = include_str!("../corpus/copy.json");
const INCREMENT: &str = include_str!("../corpus/increment.json");
const MARK_COPY: &str = include_str!("../corpus/mark_copy.json");
const PENDULUM: &str = include_str!("../corpus/pendulum.json");

/// Names of the halting corpus machines, in the order returned by [`all`].
pub const NAMES: [&str; 3] = ["copy", "increment", "mark_copy"];

fn load(text: &str) -> TuringMachine {
    MachineSpec::from_json(text)
        .and_then(|s| s.build())
        .expect("embedded corpus machine is valid")
}

/// JSON source of a corpus machine, including `pendulum`.
pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "copy" => Some(COPY),
        "increment" => Some(INCREMENT),
        "mark_copy" => Some(MARK_COPY),
        "pendulum" => Some(PENDULUM),
        _ => None,
    }
}

pub fn machine(name: &str) -> Option<TuringMachine> {
    source(name).map(load)
}

/// Two tapes, three states: copies the framed input from tape 0 to tape 1.
pub fn copy_machine() -> TuringMachine {
    load(COPY)
}

/// Two tapes: writes the framed little-endian successor of the input to tape 1.
pub fn increment_machine() -> TuringMachine {
    load(INCREMENT)
}

/// Three tapes: marks the input span on tape 1, walks back, then copies the
/// data cells to tape 2.
pub fn mark_copy_machine() -> TuringMachine {
    load(MARK_COPY)
}

/// Swings its heads right and left forever.
pub fn pendulum_machine() -> TuringMachine {
    load(PENDULUM)
}

pub fn all() -> Vec<(&'static str, TuringMachine)> {
    NAMES.iter().map(|&n| (n, machine(n).unwrap())).collect()
}

/// One non-accepting state, identity writes, every head moves right.
pub fn right_walker(tapes: usize) -> TuringMachine {
    let reads = 1usize << tapes;
    let table = (0..reads)
        .map(|code| Transition {
            next: 0,
            write: (0..tapes).map(|i| Symbol::from_bit(code & (1 << i) != 0)).collect(),
            moves: vec![Move::Right; tapes],
        })
        .collect();
    TuringMachine::new(vec!["walk".into()], 0, vec![false], vec![false; tapes], table)
        .expect("walker is valid")
}

/// Framed payloads used by tests and `verify`; at least two per machine.
pub fn sample_inputs(name: &str) -> Vec<Vec<bool>> {
    let raw: &[&[u8]] = match name {
        "copy" => &[&[1], &[1, 0, 1], &[0, 1, 1, 0]],
        "increment" => &[&[1, 1], &[0, 1, 1], &[1, 0, 1]],
        "mark_copy" => &[&[1, 0], &[0, 1, 1]],
        _ => &[],
    };
    raw.iter()
        .map(|bits| frame_bits(&bits.iter().map(|&b| b == 1).collect::<Vec<_>>()))
        .collect()
}

/// Tape length that keeps every head of the corpus machines off the guard
/// cells for a framed payload of `len` cells.
pub fn tau_for(_name: &str, len: usize) -> usize {
    len + 5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tm::{make_initial, run};

    fn unframe(cells: &[bool]) -> Vec<bool> {
        cells.chunks(2).take_while(|c| c[0]).map(|c| c[1]).collect()
    }

    fn outcome(name: &str, payload: &[bool]) -> crate::tm::ExecutionTrace {
        let tm = machine(name).unwrap();
        let tau = tau_for(name, payload.len());
        run(&tm, &make_initial(&tm, payload, tau).unwrap(), 10_000).unwrap()
    }

    #[test]
    fn copy_copies() {
        for payload in sample_inputs("copy") {
            let trace = outcome("copy", &payload);
            assert!(trace.halted);
            assert_eq!(trace.steps(), payload.len() + 1);
            assert_eq!(trace.last().window(1, 1, payload.len()), payload);
        }
    }

    #[test]
    fn increment_adds_one() {
        let value = |bits: &[bool]| bits.iter().rev().fold(0u64, |acc, &b| 2 * acc + u64::from(b));
        for payload in sample_inputs("increment") {
            let trace = outcome("increment", &payload);
            assert!(trace.halted);
            let out: Vec<bool> = (1..trace.last().tau() - 1).map(|i| trace.last().tapes[1][i].bit()).collect();
            assert_eq!(value(&unframe(&out)), value(&unframe(&payload)) + 1);
        }
    }

    #[test]
    fn mark_copy_moves_data_to_third_tape() {
        for payload in sample_inputs("mark_copy") {
            let trace = outcome("mark_copy", &payload);
            assert!(trace.halted);
            let last = trace.last();
            for k in 0..payload.len() / 2 {
                assert_eq!(last.tapes[2][2 + 2 * k].bit(), payload[1 + 2 * k]);
            }
            assert!(trace.configs.windows(2).any(|w| w[1].heads[0] < w[0].heads[0]));
        }
    }

    #[test]
    fn pendulum_never_halts() {
        let tm = pendulum_machine();
        let trace = run(&tm, &make_initial(&tm, &[true, true], 6).unwrap(), 50).unwrap();
        assert!(!trace.halted);
        assert_eq!(trace.steps(), 50);
    }

    #[test]
    fn corpus_fits_small_control() {
        for (name, tm) in all() {
            assert!(tm.state_count() <= 8, "{name}");
            assert!(tm.is_read_only(0));
        }
    }
}

