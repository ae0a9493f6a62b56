use serde::{Deserialize, Serialize};

use super::{Symbol, TmError, TuringMachine};

/// Machine state, tape contents (one column of length tau per tape) and heads.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub state: usize,
    pub tapes: Vec<Vec<Symbol>>,
    pub heads: Vec<usize>,
}

impl Configuration {
    pub fn tau(&self) -> usize {
        self.tapes.first().map_or(0, Vec::len)
    }

    /// Symbols under the heads.
    pub fn read(&self) -> Vec<Symbol> {
        self.tapes
            .iter()
            .zip(&self.heads)
            .map(|(tape, &h)| tape[h])
            .collect()
    }

    /// `len` cells of `tape` starting at `start`, as bits.
    pub fn window(&self, tape: usize, start: usize, len: usize) -> Vec<bool> {
        self.tapes[tape][start..start + len].iter().map(|s| s.bit()).collect()
    }

    fn check_shape(&self, tm: &TuringMachine) -> Result<(), TmError> {
        if self.tapes.len() != tm.tape_count() || self.heads.len() != tm.tape_count() {
            return Err(TmError::MalformedConfiguration(format!(
                "expected {} tapes",
                tm.tape_count()
            )));
        }
        let tau = self.tau();
        if self.tapes.iter().any(|t| t.len() != tau) {
            return Err(TmError::MalformedConfiguration("ragged tapes".into()));
        }
        if self.state >= tm.state_count() {
            return Err(TmError::MalformedConfiguration(format!("unknown state {}", self.state)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub configs: Vec<Configuration>,
    pub halted: bool,
}

impl ExecutionTrace {
    /// Number of transitions taken, `k_t`.
    pub fn steps(&self) -> usize {
        self.configs.len() - 1
    }

    pub fn last(&self) -> &Configuration {
        self.configs.last().expect("trace is never empty")
    }
}

fn interior(tape: usize, position: i64, tau: usize) -> Result<usize, TmError> {
    if position < 1 || position > tau as i64 - 2 {
        Err(TmError::TapeBound { tape, position, tau })
    } else {
        Ok(position as usize)
    }
}

/// One transition. Heads must stay in `[1, tau-2]` before and after.
pub fn step(tm: &TuringMachine, c: &Configuration) -> Result<Configuration, TmError> {
    c.check_shape(tm)?;
    if tm.is_accepting(c.state) {
        return Err(TmError::AlreadyHalted {
            state: tm.name(c.state).to_string(),
        });
    }
    let tau = c.tau();
    for (i, &h) in c.heads.iter().enumerate() {
        interior(i, h as i64, tau)?;
    }
    let tr = tm.transition(c.state, &c.read());
    let mut next = c.clone();
    next.state = tr.next;
    for i in 0..tm.tape_count() {
        let h = c.heads[i];
        next.tapes[i][h] = tr.write[i];
        next.heads[i] = interior(i, h as i64 + tr.moves[i].offset(), tau)?;
    }
    Ok(next)
}

/// Iterates [`step`] until an accepting state or `max_steps` transitions.
pub fn run(tm: &TuringMachine, c0: &Configuration, max_steps: usize) -> Result<ExecutionTrace, TmError> {
    c0.check_shape(tm)?;
    let mut configs = vec![c0.clone()];
    while configs.len() <= max_steps && !tm.is_accepting(configs.last().unwrap().state) {
        let next = step(tm, configs.last().unwrap())?;
        configs.push(next);
    }
    let halted = tm.is_accepting(configs.last().unwrap().state);
    Ok(ExecutionTrace { configs, halted })
}

/// Initial configuration with `payload` on the input tape starting at cell 1,
/// every head on cell 1 and everything else blank.
pub fn make_initial(tm: &TuringMachine, payload: &[bool], tau: usize) -> Result<Configuration, TmError> {
    if payload.len() + 2 > tau || tau < 3 {
        return Err(TmError::PayloadTooLong {
            len: payload.len(),
            tau,
        });
    }
    let mut tapes = vec![vec![Symbol::BLANK; tau]; tm.tape_count()];
    let input = tm.input_tape();
    for (k, &bit) in payload.iter().enumerate() {
        tapes[input][1 + k] = Symbol::from_bit(bit);
    }
    Ok(Configuration {
        state: tm.initial(),
        tapes,
        heads: vec![1; tm.tape_count()],
    })
}

/// Self-delimiting layout: every bit `b` becomes the cell pair `(1, b)`, so a
/// blank in a marker cell ends the data.
pub fn frame_bits(bits: &[bool]) -> Vec<bool> {
    bits.iter().flat_map(|&b| [true, b]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use Symbol::{Minus, Plus};

    #[test]
    fn copy_machine_single_step() {
        let tm = corpus::copy_machine();
        let c = make_initial(&tm, &[true, true], 8).unwrap();
        assert_eq!(c.tapes[0][..4], [Minus, Plus, Plus, Minus]);
        let next = step(&tm, &c).unwrap();
        assert_eq!(next.heads, vec![2, 2]);
        assert_eq!(next.tapes[1][1], Plus);
        assert_eq!(next.tapes[0], c.tapes[0]);
    }

    #[test]
    fn copy_machine_run_counts_blank_detect() {
        let tm = corpus::copy_machine();
        let c = make_initial(&tm, &[true, true], 8).unwrap();
        let trace = run(&tm, &c, 100).unwrap();
        assert!(trace.halted);
        assert_eq!(trace.steps(), 3);
        assert_eq!(trace.last().window(1, 1, 2), vec![true, true]);
    }

    #[test]
    fn zero_budget_and_halted_start() {
        let tm = corpus::copy_machine();
        let c = make_initial(&tm, &[true], 6).unwrap();
        let trace = run(&tm, &c, 0).unwrap();
        assert_eq!(trace.configs.len(), 1);
        assert!(!trace.halted);

        let mut done = c.clone();
        done.state = tm.state_index("halt").unwrap();
        let trace = run(&tm, &done, 10).unwrap();
        assert_eq!(trace.steps(), 0);
        assert!(trace.halted);
        assert!(matches!(step(&tm, &done), Err(TmError::AlreadyHalted { .. })));
    }

    #[test]
    fn identity_writes_move_every_head_right() {
        let tm = corpus::right_walker(2);
        let mut c = make_initial(&tm, &[true, false, true], 10).unwrap();
        c.tapes[1][3] = Plus;
        let next = step(&tm, &c).unwrap();
        assert_eq!(next.tapes, c.tapes);
        assert_eq!(next.heads, vec![2, 2]);
    }

    #[test]
    fn tape_bound_is_an_error() {
        let tm = corpus::right_walker(2);
        let c = make_initial(&tm, &[], 3).unwrap();
        assert!(matches!(step(&tm, &c), Err(TmError::TapeBound { .. })));
        assert!(matches!(
            make_initial(&tm, &[true; 5], 6),
            Err(TmError::PayloadTooLong { .. })
        ));
    }

    #[test]
    fn payload_window_round_trip() {
        let tm = corpus::copy_machine();
        let c = make_initial(&tm, &[], 5).unwrap();
        assert!(c.tapes.iter().all(|t| t.iter().all(|&s| s == Minus)));
        assert_eq!(c.heads, vec![1, 1]);

        let c = make_initial(&tm, &[true, false], 5).unwrap();
        assert_eq!((c.tapes[0][1], c.tapes[0][2]), (Plus, Minus));
        let payload = [true, false, false, true, true, false];
        let c = make_initial(&tm, &payload, 9).unwrap();
        assert_eq!(c.window(0, 1, payload.len()), payload);
    }
}
