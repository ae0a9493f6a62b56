use crate::simplex::{corner_argmin, SimplexPoint};
use crate::Scalar;

use super::{ExternalError, MachineState, TapeLoss};

/// What one descent step did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepInfo {
    pub from: usize,
    pub to: usize,
    /// Tapes whose vertex symbol already matched the symbol under the
    /// shifted head.
    pub matched: usize,
    /// Tapes where the read coupling had to overrule the vertex symbol.
    pub mismatched: usize,
}

fn violation<S: Scalar>(step: usize, detail: String, st: &MachineState<S>) -> ExternalError {
    ExternalError::Violation {
        step,
        detail,
        dump: format!("{st:?}"),
    }
}

/// One step: Frank-Wolfe with corners of width one quarter on `s`, then
/// `T -= grad_T / gamma` and `H -= grad_H / gamma`, all from the same state.
pub fn gd_step<S: Scalar>(
    loss: &TapeLoss<S>,
    st: &MachineState<S>,
    step: usize,
) -> Result<(MachineState<S>, StepInfo), ExternalError> {
    let v = st
        .s
        .as_vertex()
        .ok_or_else(|| violation(step, "s is not a vertex".into(), st))?;
    if loss.is_halting(v) {
        return Err(violation(step, format!("vertex {v} is already halting"), st));
    }
    let quad = loss.read_quadratic(v, st);
    let down = loss.down(&st.s);
    let matched = down.iter().zip(&quad.target).filter(|(a, b)| a == b).count();
    let w = corner_argmin(loss.simplex(), v, S::ratio(1, 4), Some(&quad));

    let inv = S::one() / loss.params().gamma;
    let axpy = |x: &[Vec<S>], g: &[Vec<S>]| -> Vec<Vec<S>> {
        x.iter()
            .zip(g)
            .map(|(a, b)| a.iter().zip(b).map(|(&p, &q)| p - inv * q).collect())
            .collect()
    };
    let next = MachineState {
        s: SimplexPoint::vertex(loss.dim(), w),
        tapes: axpy(&st.tapes, &loss.grad_tapes(st)),
        heads: axpy(&st.heads, &loss.grad_heads(st)),
    };
    loss.decode(&next).map_err(|e| violation(step, e, &next))?;
    Ok((
        next,
        StepInfo {
            from: v,
            to: w,
            matched,
            mismatched: loss.tapes() - matched,
        },
    ))
}

/// States, losses and per-step diagnostics of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalTrace<S> {
    pub states: Vec<MachineState<S>>,
    pub losses: Vec<S>,
    pub steps: Vec<StepInfo>,
}

impl<S> ExternalTrace<S> {
    /// Number of descent steps taken.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Tape reads where the vertex symbol already matched, and where it did not.
    pub fn case_counts(&self) -> (usize, usize) {
        self.steps.iter().fold((0, 0), |(a, b), s| (a + s.matched, b + s.mismatched))
    }
}

/// Descends until the loss drops to the halting ceiling. The loss is the
/// only halting signal used, as in the wrapper network.
pub fn trace<S: Scalar>(
    loss: &TapeLoss<S>,
    initial: MachineState<S>,
    max_iters: usize,
) -> Result<ExternalTrace<S>, ExternalError> {
    let ceiling = loss.params().halting_ceiling();
    let mut out = ExternalTrace {
        losses: vec![loss.value(&initial)?],
        states: vec![initial],
        steps: Vec::new(),
    };
    loop {
        if *out.losses.last().expect("nonempty") <= ceiling {
            return Ok(out);
        }
        if out.steps.len() >= max_iters {
            return Err(ExternalError::NoHalt(max_iters));
        }
        let (next, info) = gd_step(loss, out.states.last().expect("nonempty"), out.steps.len() + 1)?;
        out.losses.push(loss.value(&next)?);
        out.states.push(next);
        out.steps.push(info);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::external::ExternalParams;
    use crate::tm::{make_initial, run, triple_states};

    #[test]
    fn copy_machine_is_traced_exactly() {
        let tm = triple_states(&corpus::copy_machine());
        let payload = vec![true, true, true, false];
        let tau = payload.len() + 5;
        let loss = TapeLoss::build(&tm, tau, ExternalParams::choose(2, 1.0, true)).unwrap();
        let c0 = make_initial(&tm, &payload, tau).unwrap();
        let sim = run(&tm, &c0, 100).unwrap();
        let t = trace(&loss, loss.encode(&c0).unwrap(), 100).unwrap();
        assert_eq!(t.len(), sim.steps());
        for (st, c) in t.states.iter().zip(&sim.configs) {
            assert_eq!(&loss.decode(st).unwrap(), c);
        }
        let p = loss.params();
        for (k, &l) in t.losses.iter().enumerate() {
            if k < t.len() {
                assert!(p.nonhalting_floor() <= l && l <= p.nonhalting_ceiling(), "step {k}: {l}");
            } else {
                assert!(l <= p.halting_ceiling());
            }
        }
    }

    #[test]
    fn non_halting_machine_runs_out_of_iterations() {
        let tm = triple_states(&corpus::right_walker(2));
        let loss = TapeLoss::build(&tm, 12, ExternalParams::choose(2, 1.0, true)).unwrap();
        let c0 = make_initial(&tm, &[], 12).unwrap();
        assert!(matches!(trace(&loss, loss.encode(&c0).unwrap(), 5), Err(ExternalError::NoHalt(5))));
    }
}
