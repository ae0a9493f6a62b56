use super::{Transition, TuringMachine};

/// Copies per state produced by [`triple_states`].
pub const TRIPLE: usize = 3;

/// State `[q, r]` is stored at index `3q + r`; every transition advances `r`
/// modulo 3, so no two head-symbol vertices can follow each other both ways.
pub fn triple_states(tm: &TuringMachine) -> TuringMachine {
    let reads = tm.read_count();
    let mut names = Vec::with_capacity(tm.state_count() * TRIPLE);
    let mut accepting = Vec::with_capacity(names.capacity());
    for q in 0..tm.state_count() {
        for r in 0..TRIPLE {
            names.push(format!("{}#{r}", tm.name(q)));
            accepting.push(tm.is_accepting(q));
        }
    }
    let mut table = Vec::with_capacity(names.len() * reads);
    for q in 0..tm.state_count() {
        for r in 0..TRIPLE {
            for code in 0..reads {
                let t = tm.transition_code(q, code);
                table.push(Transition {
                    next: TRIPLE * t.next + (r + 1) % TRIPLE,
                    write: t.write.clone(),
                    moves: t.moves.clone(),
                });
            }
        }
    }
    TuringMachine::new(
        names,
        TRIPLE * tm.initial(),
        accepting,
        tm.read_only_mask().to_vec(),
        table,
    )
    .expect("tripling preserves validity")
}

/// Pairs of head-symbol vertices `((q,t), (q',t'))` with `q' = next(q,t)` and
/// `q = next(q',t')`, both sources non-accepting. Vertices are encoded as
/// `state * 2^d + code(t)`.
pub fn back_step_pairs(tm: &TuringMachine) -> Vec<(usize, usize)> {
    let reads = tm.read_count();
    let mut pairs = Vec::new();
    for q in 0..tm.state_count() {
        if tm.is_accepting(q) {
            continue;
        }
        for t in 0..reads {
            let q2 = tm.transition_code(q, t).next;
            if tm.is_accepting(q2) {
                continue;
            }
            for t2 in 0..reads {
                if tm.transition_code(q2, t2).next == q {
                    pairs.push((q * reads + t, q2 * reads + t2));
                }
            }
        }
    }
    pairs
}

pub fn satisfies_no_back_step(tm: &TuringMachine) -> bool {
    back_step_pairs(tm).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::tm::{make_initial, run};

    #[test]
    fn tripling_sizes_and_soundness() {
        for (name, tm) in corpus::all() {
            let t3 = triple_states(&tm);
            assert_eq!(t3.state_count(), 3 * tm.state_count(), "{name}");
            assert!(satisfies_no_back_step(&t3), "{name}");
        }
        assert!(!satisfies_no_back_step(&corpus::copy_machine()));
    }

    #[test]
    fn tripled_run_projects_to_original() {
        for (name, tm) in corpus::all() {
            let t3 = triple_states(&tm);
            for payload in corpus::sample_inputs(name) {
                let tau = corpus::tau_for(name, payload.len());
                let a = run(&tm, &make_initial(&tm, &payload, tau).unwrap(), 10_000).unwrap();
                let b = run(&t3, &make_initial(&t3, &payload, tau).unwrap(), 10_000).unwrap();
                assert_eq!(a.configs.len(), b.configs.len());
                for (k, (x, y)) in a.configs.iter().zip(&b.configs).enumerate() {
                    assert_eq!(y.state / TRIPLE, x.state);
                    assert_eq!(y.state % TRIPLE, k % TRIPLE);
                    assert_eq!((&y.tapes, &y.heads), (&x.tapes, &x.heads));
                }
            }
        }
    }
}
