use std::collections::BTreeMap;

use gdtm::codec::FloatCodec;
use gdtm::corpus;
use gdtm::engine::{Block, Feed, Graph, Sparse};
use gdtm::internal::{self, default_ladder, GraphMode, StateGraph, StepRule, WeightAssignment};
use gdtm::simplex::{dir_deriv, Basis, SimplexLoss, SimplexPoint};
use gdtm::tm::{back_step_pairs, frame_bits, make_initial, run, triple_states, Move, Symbol, Transition, TuringMachine};
use gdtm::trace_io::{self, TraceRecord};
use gdtm::{Rational, Scalar};
use proptest::prelude::*;

fn corpus_name() -> impl Strategy<Value = &'static str> {
    prop::sample::select(corpus::NAMES.to_vec())
}

fn framed(max: usize) -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), 1..=max).prop_map(|b| frame_bits(&b))
}

/// Random machine over `tapes` writable tapes with one accepting state.
fn random_machine() -> impl Strategy<Value = TuringMachine> {
    (2usize..=4, 1usize..=2).prop_flat_map(|(states, tapes)| {
        let rows = states * (1 << tapes);
        let row = (0..states, prop::collection::vec(any::<bool>(), tapes), prop::collection::vec(any::<bool>(), tapes));
        prop::collection::vec(row, rows).prop_map(move |table| {
            let table = table
                .into_iter()
                .map(|(next, write, moves)| Transition {
                    next,
                    write: write.into_iter().map(Symbol::from_bit).collect(),
                    moves: moves.into_iter().map(|r| if r { Move::Right } else { Move::Left }).collect(),
                })
                .collect();
            let names = (0..states).map(|q| format!("q{q}")).collect();
            let accepting = (0..states).map(|q| q == states - 1).collect();
            TuringMachine::new(names, 0, accepting, vec![false; tapes], table).expect("valid random machine")
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulation_is_deterministic_and_keeps_inputs(name in corpus_name(), payload in framed(4)) {
        let tm = corpus::machine(name).unwrap();
        let tau = corpus::tau_for(name, payload.len());
        let c0 = make_initial(&tm, &payload, tau).unwrap();
        let a = run(&tm, &c0, 1000).unwrap();
        prop_assert_eq!(&a, &run(&tm, &c0, 1000).unwrap());
        prop_assert!(a.halted);
        let input = tm.input_tape();
        for c in &a.configs {
            prop_assert_eq!(&c.tapes[input], &c0.tapes[input]);
            prop_assert!(c.heads.iter().all(|&h| h >= 1 && h + 2 <= tau));
        }
    }

    #[test]
    fn tripling_removes_back_steps_and_projects_back(tm in random_machine(), bits in prop::collection::vec(any::<bool>(), 0..3)) {
        let t3 = triple_states(&tm);
        prop_assert!(back_step_pairs(&t3).is_empty());
        prop_assert_eq!(t3.state_count(), 3 * tm.state_count());
        let tau = 16;
        let original = run(&tm, &make_initial(&tm, &bits, tau).unwrap(), 5);
        let tripled = run(&t3, &make_initial(&t3, &bits, tau).unwrap(), 5);
        match (original, tripled) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.configs.len(), b.configs.len());
                for (k, (x, y)) in a.configs.iter().zip(&b.configs).enumerate() {
                    prop_assert_eq!(y.state / 3, x.state);
                    prop_assert_eq!(y.state % 3, k % 3);
                    prop_assert_eq!(&y.tapes, &x.tapes);
                    prop_assert_eq!(&y.heads, &x.heads);
                }
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "runs disagree on failure: {:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }

    #[test]
    fn internal_tracer_follows_random_inputs(name in prop::sample::select(vec!["copy", "increment"]), payload in framed(3)) {
        let tm = corpus::machine(name).unwrap();
        let c0 = make_initial(&tm, &payload, corpus::tau_for(name, payload.len())).unwrap();
        let sim = run(&tm, &c0, 1000).unwrap();
        let g = StateGraph::build(&tm, c0.tau(), std::slice::from_ref(&c0), GraphMode::Reachable, 1000).unwrap();
        let loss = WeightAssignment::<Rational>::new(&g, default_ladder(g.horizon())).unwrap().build_loss().unwrap();
        let tr = internal::trace(&loss, g.index_of(&c0).unwrap(), StepRule::Unit, 1000).unwrap();
        let visited: Vec<_> = tr.vertices.iter().map(|&v| g.vertex(v).clone()).collect();
        prop_assert_eq!(visited, sim.configs);
        prop_assert!(tr.strictly_decreasing() && tr.fixed_point);

        let records = trace_io::internal_records(&tm, &g, &tr);
        let mut buf = Vec::new();
        trace_io::write_jsonl(&mut buf, &records).unwrap();
        let back: Vec<TraceRecord> = trace_io::read_jsonl(&buf[..]).unwrap();
        prop_assert_eq!(back, records);
    }

    #[test]
    fn directional_derivative_is_positively_homogeneous(
        weights in prop::collection::vec((-8i64..=8, 1i64..=4), 1..6),
        alpha in (1i64..=9, 1i64..=5),
        v in 0usize..5,
        w in 0usize..5,
    ) {
        let m = 5;
        let mut loss = SimplexLoss::<Rational>::new(m);
        for (k, &(n, d)) in weights.iter().enumerate() {
            let (a, b) = (k % m, (k + 1 + k / m) % m);
            let basis = match k % 3 {
                0 => Basis::Hat { v: a, mu: Rational::ratio(1, 4) },
                1 => Basis::EdgeBump { v: a, w: b },
                _ => Basis::Profile { v: a, w: b },
            };
            loss.push(Rational::ratio(n, d), basis).unwrap();
        }
        let alpha = Rational::ratio(alpha.0, alpha.1);
        let (x, y) = (SimplexPoint::vertex(m, v), SimplexPoint::vertex(m, w));
        let mu = Rational::ratio(1, 4);
        prop_assert_eq!(dir_deriv(&loss.scaled(alpha), &x, &y, mu), alpha * dir_deriv(&loss, &x, &y, mu));
    }

    #[test]
    fn passthrough_round_trips_every_finite_double(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let c = FloatCodec::Passthrough64;
        prop_assert_eq!(c.dequantize(&c.quantize(x).unwrap()).unwrap().to_bits(), bits);
    }

    #[test]
    fn exponent_window_brackets_the_value(x in 1.0f64..500.0, negative in any::<bool>()) {
        let c = FloatCodec::MantissaExponent { mantissa: 10, exponent: 4 };
        let x = if negative { -x } else { x };
        let word = c.quantize(x).unwrap();
        let k: i32 = (0..4).map(|j| i32::from(word[1 + j]) << j).sum();
        let e = 2f64.powi(k);
        prop_assert!(e <= x.abs() && x.abs() < 2.0 * e);
        prop_assert_eq!(word[0], negative);
        prop_assert_eq!(c.quantize_surrogate(x).unwrap(), word.clone());
        let back = c.dequantize(&word).unwrap();
        prop_assert!((back - x).abs() <= e * 2f64.powi(-10));
        prop_assert_eq!(c.quantize(back).unwrap(), word);
    }

    #[test]
    fn stop_gradients_do_not_change_values(t in prop::collection::vec(-3.0f64..3.0, 3)) {
        let build = |marked: bool| {
            let mut g = Graph::new();
            let p = g.param(Block::T, 3);
            let a = if marked { g.stop_gradient(p) } else { p };
            let r = g.relu(a);
            let prod = g.product(r, p);
            let n = g.square_norm(prod);
            let s = g.linear(vec![(a, Sparse::sum(3)), (n, Sparse::identity(1))], vec![0.5]);
            g.set_output(s);
            g
        };
        let feed = Feed { params: BTreeMap::from([(Block::T, t)]), inputs: BTreeMap::new() };
        prop_assert_eq!(build(true).run(&feed).unwrap(), build(false).run(&feed).unwrap());
    }
}
