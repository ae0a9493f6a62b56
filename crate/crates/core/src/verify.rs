//! End-to-end checks shared by the acceptance tests and `gdtm verify`.
//!
//! Each check compares the library against an independent computation:
//! the plain simulator, dense hyperplane forms of the basis functions,
//! brute-force enumeration or finite differences.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::codec::FloatCodec;
use crate::corpus;
use crate::engine::{Block, Feed, Graph, Sparse};
use crate::external::{self, ExternalError, ExternalParams, TapeLoss};
use crate::internal::{self, default_ladder, full_dimension, GraphMode, StateGraph, StepRule, WeightAssignment};
use crate::network::{train, Branch, Construction, Dataset, ExtendedNet, LinearNet, NetConfig, TrainOptions};
use crate::simplex::{
    corner_argmin, edge_bump_dense, edge_plane, hat, unsymmetric_corner, AffinePiece, Basis, Quadratic, SimplexLoss,
    SimplexPoint,
};
use crate::tm::{make_initial, run, triple_states, Configuration, ExecutionTrace, TuringMachine};
use crate::{Rational, Scalar};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub assertions: usize,
}

/// Counts assertions and keeps the first few failures.
#[derive(Debug, Default)]
struct Tally {
    count: usize,
    failures: Vec<String>,
    failed: usize,
}

impl Tally {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.count += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < 5 {
                self.failures.push(msg());
            }
        }
    }

    fn error(&mut self, msg: String) {
        self.check(false, || msg);
    }

    fn finish(self, id: u8, name: &'static str, summary: String) -> CheckResult {
        let passed = self.failed == 0;
        let detail = if passed {
            summary
        } else {
            format!("{} of {} failed: {}", self.failed, self.count, self.failures.join("; "))
        };
        CheckResult {
            id,
            name,
            passed,
            detail,
            assertions: self.count,
        }
    }
}

fn q(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

fn initial(tm: &TuringMachine, name: &str, payload: &[bool]) -> Result<(Configuration, ExecutionTrace), String> {
    let tau = corpus::tau_for(name, payload.len());
    let c0 = make_initial(tm, payload, tau).map_err(|e| e.to_string())?;
    let sim = run(tm, &c0, 10_000).map_err(|e| e.to_string())?;
    if !sim.halted {
        return Err(format!("{name} does not halt on {payload:?}"));
    }
    Ok((c0, sim))
}

/// One row of the corpus table: a machine on one sample input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusRow {
    pub machine: &'static str,
    pub states: usize,
    pub tapes: usize,
    pub tau: usize,
    pub payload_cells: usize,
    pub steps: usize,
}

pub fn corpus_table() -> Vec<CorpusRow> {
    let mut rows = Vec::new();
    for (name, tm) in corpus::all() {
        for payload in corpus::sample_inputs(name) {
            let tau = corpus::tau_for(name, payload.len());
            let steps = initial(&tm, name, &payload).map_or(usize::MAX, |(_, sim)| sim.steps());
            rows.push(CorpusRow {
                machine: name,
                states: tm.state_count(),
                tapes: tm.tape_count(),
                tau,
                payload_cells: payload.len(),
                steps,
            });
        }
    }
    rows
}

/// Full-configuration tracer against the simulator, both step rules, exact
/// arithmetic.
pub fn internal_equivalence() -> CheckResult {
    let mut t = Tally::default();
    let mut runs = 0;
    for (name, tm) in corpus::all() {
        let mut starts = Vec::new();
        for payload in corpus::sample_inputs(name) {
            match initial(&tm, name, &payload) {
                Ok(x) => starts.push(x),
                Err(e) => t.error(e),
            }
        }
        let tau = starts.iter().map(|(c, _)| c.tau()).max().unwrap_or(0);
        // One graph per tape length.
        for tau_k in (0..=tau).filter(|&k| starts.iter().any(|(c, _)| c.tau() == k)) {
            let group: Vec<_> = starts.iter().filter(|(c, _)| c.tau() == tau_k).collect();
            let inputs: Vec<Configuration> = group.iter().map(|(c, _)| c.clone()).collect();
            let built = StateGraph::build(&tm, tau_k, &inputs, GraphMode::Reachable, 10_000)
                .and_then(|g| {
                    let wa = WeightAssignment::<Rational>::new(&g, default_ladder(g.horizon()))?;
                    Ok((wa.build_loss()?, g))
                });
            let (loss, g) = match built {
                Ok(x) => x,
                Err(e) => {
                    t.error(format!("{name}: {e}"));
                    continue;
                }
            };
            for (c0, sim) in &group {
                let v0 = g.index_of(c0).expect("input is a vertex");
                for rule in [StepRule::Unit, StepRule::LineSearch] {
                    runs += 1;
                    let tr = match internal::trace(&loss, v0, rule, sim.steps() + 5) {
                        Ok(tr) => tr,
                        Err(e) => {
                            t.error(format!("{name} {rule:?}: {e}"));
                            continue;
                        }
                    };
                    t.check(tr.vertices.len() == sim.configs.len(), || {
                        format!("{name} {rule:?}: {} iterates for {} configurations", tr.vertices.len(), sim.configs.len())
                    });
                    for (k, (&v, c)) in tr.vertices.iter().zip(&sim.configs).enumerate() {
                        t.check(g.vertex(v) == c, || format!("{name} {rule:?}: step {k} differs"));
                    }
                    t.check(tr.strictly_decreasing(), || format!("{name} {rule:?}: loss not strictly decreasing"));
                    t.check(tr.fixed_point, || format!("{name} {rule:?}: halting vertex is not a fixed point"));
                }
            }
        }
    }
    t.finish(1, "internal tracer equals simulator", format!("{runs} runs, exact"))
}

/// Tape-variable tracer on tripled machines: decoded states, exact
/// encodings and the loss bounds at every step.
pub fn external_equivalence() -> CheckResult {
    let mut t = Tally::default();
    let (mut runs, mut matched, mut mismatched) = (0, 0, 0);
    for (name, tm) in corpus::all() {
        let tm3 = triple_states(&tm);
        let d = tm3.tape_count();
        let params = ExternalParams::<Rational>::choose(d, Rational::from_int(1), true);
        if d == 2 {
            t.check(params.b == 17, || format!("b = {} for two tapes", params.b));
            t.check(params.c == Rational::from_int(4947), || format!("c = {}", params.c));
            t.check(params.nonhalting_floor() == Rational::from_int(4947), || "floor".into());
            t.check(params.halting_ceiling() == Rational::from_int(4664), || {
                format!("halting ceiling {}", params.halting_ceiling())
            });
        }
        for payload in corpus::sample_inputs(name) {
            let (c0, sim) = match initial(&tm3, name, &payload) {
                Ok(x) => x,
                Err(e) => {
                    t.error(e);
                    continue;
                }
            };
            runs += 1;
            let outcome = TapeLoss::build(&tm3, c0.tau(), params)
                .and_then(|loss| {
                    let st = loss.encode(&c0)?;
                    Ok((external::trace(&loss, st, sim.steps() + 5)?, loss))
                });
            let (tr, loss) = match outcome {
                Ok(x) => x,
                Err(e) => {
                    t.error(format!("{name}: {e}"));
                    continue;
                }
            };
            t.check(tr.len() == sim.steps(), || format!("{name}: {} steps for k_t = {}", tr.len(), sim.steps()));
            for (k, (st, c)) in tr.states.iter().zip(&sim.configs).enumerate() {
                t.check(loss.decode(st).as_ref() == Ok(c), || format!("{name}: step {k} decodes wrongly"));
                t.check(loss.encode(c).is_ok_and(|e| &e == st), || format!("{name}: step {k} is not the exact encoding"));
            }
            let p = loss.params();
            for (k, &l) in tr.losses.iter().enumerate() {
                if k < tr.len() {
                    t.check(p.nonhalting_floor() <= l && l <= p.nonhalting_ceiling(), || {
                        format!("{name}: loss {l} at step {k} outside the non-halting band")
                    });
                } else {
                    t.check(l <= p.halting_ceiling(), || format!("{name}: final loss {l} above the halting ceiling"));
                }
            }
            let (a, b) = tr.case_counts();
            matched += a;
            mismatched += b;
        }
    }
    t.check(matched > 0 && mismatched > 0, || format!("read cases {matched}/{mismatched}: one never occurred"));
    t.finish(
        2,
        "external tracer equals simulator",
        format!("{runs} runs, b = 17, c = 4947, ceiling 4664, reads {matched} matched / {mismatched} overruled"),
    )
}

/// The copy demo: a constant primary network receives its labels through
/// the machine.
pub fn end_to_end() -> CheckResult {
    let mut t = Tally::default();
    let data = Dataset::new(vec![vec![0.5]], vec![vec![0.0, 3.0]], None).expect("demo dataset");
    let report = ExtendedNet::<f64>::build(&corpus::copy_machine(), &data, NetConfig::default())
        .and_then(|net| train(&net, TrainOptions::default()));
    let summary = match report {
        Ok(r) => {
            t.check(r.steps == r.machine_steps + 1, || format!("{} steps for k_t = {}", r.steps, r.machine_steps));
            t.check(r.output_matches_direct, || format!("{:?} vs {:?}", r.final_output, r.direct_output));
            t.check(r.output_equals_labels, || format!("output {:?} is not y", r.final_output));
            t.check(r.z_written_once, || "z changed after step 1".into());
            t.check(r.init_flips == [1], || format!("s_init flips {:?}", r.init_flips));
            t.check(r.net_flips == [r.steps], || format!("s_net flips {:?}", r.net_flips));
            t.check(r.trace_matches_simulator, || "tape state differs from the simulator".into());
            t.check(r.weight_gradient_zero, || "primary weights received a gradient".into());
            format!("k_t = {}, {} steps, output {:?}", r.machine_steps, r.steps, r.final_output)
        }
        Err(e) => {
            t.error(e.to_string());
            String::new()
        }
    };
    t.finish(3, "training installs the machine output", summary)
}

fn random_point(rng: &mut ChaCha8Rng, m: usize) -> SimplexPoint<f64> {
    let w: Vec<f64> = (0..m).map(|_| -rng.gen_range(1e-9f64..1.0).ln()).collect();
    let total: f64 = w.iter().sum();
    let mut x: Vec<f64> = w.iter().map(|v| v / total).collect();
    let rest: f64 = x[..m - 1].iter().sum();
    x[m - 1] = (1.0 - rest).max(0.0);
    SimplexPoint::from_dense(&x).expect("normalised point")
}

/// Point of the corner of width `nu` at `e_u`.
fn corner_point(rng: &mut ChaCha8Rng, m: usize, u: usize, nu: f64) -> SimplexPoint<f64> {
    let y = random_point(rng, m);
    SimplexPoint::combine(rng.gen_range(0.0..=nu), &SimplexPoint::vertex(m, u), &y)
}

fn dense_profile<S: Scalar>(v: usize, w: usize, m: usize, x: &[S]) -> S {
    let corner = unsymmetric_corner(v, w, S::ratio(1, 4), m).expect("valid corner");
    edge_plane(v, w, m).eval(x) - hat(w, S::half(), m).eval(x) - corner.eval(x)
}

/// Interpolation values and affinity on corners for every basis function.
pub fn basis_identities() -> CheckResult {
    let mut t = Tally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11);
    let (tol_value, tol_affine) = (1e-12, 1e-10);
    let close = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol;
    for m in 3..=8 {
        let e = |k: usize| SimplexPoint::<f64>::vertex(m, k);
        let mid = |a: usize, b: usize| SimplexPoint::<f64>::edge_point(m, a, b, 0.5);
        for mu in [0.25, 0.5] {
            for v in 0..m {
                let h = Basis::Hat { v, mu };
                let dense = hat(v, mu, m);
                t.check(close(h.eval(&e(v)), 1.0, tol_value), || format!("hat {v} at its vertex, m={m}"));
                for _ in 0..3 {
                    let x = random_point(&mut rng, m);
                    t.check(close(h.eval(&x), dense.eval(&x.to_dense()), tol_value), || {
                        format!("hat {v} reduced vs dense, m={m} mu={mu}")
                    });
                }
                for w in (0..m).filter(|&w| w != v) {
                    t.check(close(h.eval(&e(w)), 0.0, tol_value), || format!("hat {v} at vertex {w}"));
                    let edge = SimplexPoint::edge_point(m, v, w, mu);
                    t.check(close(h.eval(&edge), 0.0, tol_value), || format!("hat {v} at corner edge toward {w}"));

                    let uc = Basis::UnsymCorner { v, w, mu };
                    let Ok(plane) = unsymmetric_corner(v, w, mu, m) else {
                        t.error(format!("corner system ({v}, {w}) singular, m={m}"));
                        continue;
                    };
                    t.check(close(uc.eval(&e(v)), 1.0, tol_value), || format!("corner ({v},{w}) at e_v"));
                    t.check(close(uc.eval(&edge), 0.0, tol_value), || format!("corner ({v},{w}) at its edge point"));
                    for u in (0..m).filter(|&u| u != v && u != w) {
                        t.check(close(uc.eval(&mid(v, u)), 0.0, tol_value), || format!("corner ({v},{w}) at mid ({v},{u})"));
                    }
                    let x = random_point(&mut rng, m);
                    t.check(close(uc.eval(&x), plane.eval(&x.to_dense()), tol_value), || {
                        format!("corner ({v},{w}) reduced vs dense, m={m} mu={mu}")
                    });

                    if w > v {
                        let eb = Basis::EdgeBump { v, w };
                        t.check(close(eb.eval(&mid(v, w)), 1.0, tol_value), || format!("bump ({v},{w}) at its midpoint"));
                        for k in 0..m {
                            t.check(close(eb.eval(&e(k)), 0.0, tol_value), || format!("bump ({v},{w}) at vertex {k}"));
                        }
                        for a in 0..m {
                            for b in (a + 1..m).filter(|&b| (a, b) != (v, w)) {
                                t.check(close(eb.eval(&mid(a, b)), 0.0, tol_value), || {
                                    format!("bump ({v},{w}) at mid ({a},{b})")
                                });
                            }
                        }
                        let x = random_point(&mut rng, m);
                        t.check(close(eb.eval(&x), edge_bump_dense(v, w, &x.to_dense()), tol_value), || {
                            format!("bump ({v},{w}) reduced vs dense")
                        });
                    }

                    if mu == 0.25 {
                        let p = Basis::Profile { v, w };
                        let near = SimplexPoint::edge_point(m, v, w, 0.25);
                        let far = SimplexPoint::edge_point(m, v, w, 0.75);
                        t.check(close(p.eval(&near), 1.0, tol_value), || format!("profile ({v},{w}) near v"));
                        t.check(close(p.eval(&far), 0.5, tol_value), || format!("profile ({v},{w}) near w"));
                        for k in 0..m {
                            t.check(close(p.eval(&e(k)), 0.0, tol_value), || format!("profile ({v},{w}) at vertex {k}"));
                        }
                        let x = random_point(&mut rng, m);
                        t.check(close(p.eval(&x), dense_profile(v, w, m, &x.to_dense()), tol_value), || {
                            format!("profile ({v},{w}) reduced vs dense")
                        });
                    }
                }
            }

            // Affinity on every corner of width mu.
            for u in 0..m {
                let v = rng.gen_range(0..m);
                let w = (v + rng.gen_range(1..m)) % m;
                let mut family = vec![
                    Basis::Hat { v, mu },
                    Basis::Hat { v: u, mu },
                    Basis::UnsymCorner { v, w, mu },
                    Basis::UnsymCorner { v: u, w: (u + 1) % m, mu },
                    Basis::EdgeBump { v, w },
                ];
                if mu == 0.25 {
                    family.push(Basis::Profile { v, w });
                    family.push(Basis::Hat { v, mu: 0.5 });
                }
                for f in family.into_iter().filter(|f| f.validate(m).is_ok()) {
                    for _ in 0..2 {
                        let (a, b) = (corner_point(&mut rng, m, u, mu), corner_point(&mut rng, m, u, mu));
                        let lambda: f64 = rng.gen_range(0.0..=1.0);
                        let c = SimplexPoint::combine(lambda, &a, &b);
                        let lhs = f.eval(&c);
                        let rhs = (1.0 - lambda) * f.eval(&a) + lambda * f.eval(&b);
                        t.check(close(lhs, rhs, tol_affine), || format!("{f:?} not affine on corner {u} (m={m}, width {mu})"));
                    }
                }
            }
        }
    }
    let n = t.count;
    t.finish(4, "basis interpolation and corner affinity", format!("{n} assertions, m = 3..8, widths 1/4 and 1/2"))
}

/// Dense hyperplane form of a basis function, used as an evaluator that
/// shares nothing with the reduced pieces.
fn dense_pieces(b: &Basis<Rational>, m: usize) -> Vec<(Rational, AffinePiece<Rational>)> {
    let one = Rational::from_int(1);
    match *b {
        Basis::Hat { v, mu } => vec![(one, hat(v, mu, m))],
        Basis::UnsymCorner { v, w, mu } => vec![(one, unsymmetric_corner(v, w, mu, m).expect("valid corner"))],
        Basis::EdgeBump { v, w } => vec![(one, edge_plane(v, w, m)), (-one, hat(v, q(1, 2), m)), (-one, hat(w, q(1, 2), m))],
        Basis::Profile { v, w } => vec![
            (one, edge_plane(v, w, m)),
            (-one, hat(w, q(1, 2), m)),
            (-one, unsymmetric_corner(v, w, q(1, 4), m).expect("valid corner")),
        ],
    }
}

struct DenseLoss {
    m: usize,
    pieces: Vec<(Rational, AffinePiece<Rational>)>,
}

impl DenseLoss {
    fn new(loss: &SimplexLoss<Rational>) -> Self {
        let m = loss.dim();
        let pieces = loss
            .terms()
            .iter()
            .flat_map(|term| dense_pieces(&term.basis, m).into_iter().map(move |(s, p)| (s * term.weight, p)))
            .collect();
        DenseLoss { m, pieces }
    }

    fn eval(&self, x: &[Rational]) -> Rational {
        self.pieces.iter().fold(Rational::from_int(0), |acc, (c, p)| acc + *c * p.eval(x))
    }

    fn vertex(&self, v: usize) -> Vec<Rational> {
        let mut x = vec![Rational::from_int(0); self.m];
        x[v] = Rational::from_int(1);
        x
    }
}

fn random_loss(rng: &mut ChaCha8Rng, m: usize, quarter: bool) -> SimplexLoss<Rational> {
    let mut loss = SimplexLoss::new(m);
    let terms = rng.gen_range(1..=3 * m);
    for _ in 0..terms {
        let v = rng.gen_range(0..m);
        let w = (v + rng.gen_range(1..m)) % m;
        let mu = if quarter { q(1, 4) } else { q(1, 2) };
        let basis = match rng.gen_range(0..if quarter { 5 } else { 3 }) {
            0 => Basis::Hat { v, mu },
            1 => Basis::EdgeBump { v, w },
            2 => Basis::UnsymCorner { v, w, mu },
            3 => Basis::Profile { v, w },
            _ => Basis::Hat { v, mu: q(1, 2) },
        };
        let weight = q(rng.gen_range(-16..=16), rng.gen_range(1..=4));
        loss.push(weight, basis).expect("valid random term");
    }
    loss
}

fn random_quadratic(rng: &mut ChaCha8Rng, m: usize) -> (Quadratic<Rational>, Vec<Vec<Rational>>) {
    let rows = rng.gen_range(1..=3);
    let dense: Vec<Vec<Rational>> = (0..m)
        .map(|_| (0..rows).map(|_| Rational::from_int(rng.gen_range(-2..=2))).collect())
        .collect();
    let columns = dense
        .iter()
        .map(|col| col.iter().enumerate().filter(|(_, a)| **a != Rational::from_int(0)).map(|(r, &a)| (r, a)).collect())
        .collect();
    let target = (0..rows).map(|_| q(rng.gen_range(-6..=6), 2)).collect();
    let coeff = q(rng.gen_range(1..=12), rng.gen_range(1..=3));
    (Quadratic::new(rows, columns, target, coeff), dense)
}

/// Frank-Wolfe vertex by enumeration: one-sided derivative toward each
/// vertex from dense evaluation inside the corner, plus the exact
/// derivative of the quadratic; ties stay, then lowest index.
fn brute_force_vertex(
    dense: &DenseLoss,
    v: usize,
    mu: Rational,
    quad: Option<(&Quadratic<Rational>, &[Vec<Rational>])>,
) -> usize {
    let h = mu / Rational::from_int(2);
    let ev = dense.vertex(v);
    let base = dense.eval(&ev);
    let residual: Option<Vec<Rational>> = quad.map(|(qd, cols)| cols[v].iter().zip(&qd.target).map(|(&a, &t)| a - t).collect());
    let mut best = (Rational::from_int(0), v);
    for u in (0..dense.m).filter(|&u| u != v) {
        let mut x = ev.clone();
        x[v] = x[v] - h;
        x[u] = x[u] + h;
        let mut d = (dense.eval(&x) - base) / h;
        if let (Some((qd, cols)), Some(r)) = (quad, &residual) {
            let dot = (0..qd.rows).fold(Rational::from_int(0), |acc, k| acc + r[k] * (cols[u][k] - cols[v][k]));
            d = d + qd.coeff * dot;
        }
        if d < best.0 {
            best = (d, u);
        }
    }
    best.1
}

/// `corner_argmin` against enumeration on random corner-affine losses.
pub fn argmin_oracle() -> CheckResult {
    let mut t = Tally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x3_1);
    let mut moves = 0;
    for i in 0..100 {
        let m = rng.gen_range(3..=8);
        let quarter = i % 2 == 0;
        let mu = if quarter { q(1, 4) } else { q(1, 2) };
        let loss = random_loss(&mut rng, m, quarter);
        let dense = DenseLoss::new(&loss);
        let (quad, cols) = random_quadratic(&mut rng, m);
        for v in 0..m {
            let plain = corner_argmin(&loss, v, mu, None);
            let expect = brute_force_vertex(&dense, v, mu, None);
            t.check(plain == expect, || format!("loss {i}, vertex {v}: {plain} vs {expect}"));
            let coupled = corner_argmin(&loss, v, mu, Some(&quad));
            let expect_q = brute_force_vertex(&dense, v, mu, Some((&quad, &cols)));
            t.check(coupled == expect_q, || format!("loss {i}, vertex {v} with coupling: {coupled} vs {expect_q}"));
            moves += usize::from(plain != v) + usize::from(coupled != v);
        }
    }
    let n = t.count;
    t.finish(5, "Frank-Wolfe vertex equals enumeration", format!("{n} cases on 100 losses, {moves} moves"))
}

fn fd_graph() -> Graph<f64> {
    let mut sl = SimplexLoss::new(3);
    sl.push(1.5, Basis::Hat { v: 0, mu: 0.7 }).expect("valid");
    sl.push(-2.0, Basis::EdgeBump { v: 1, w: 2 }).expect("valid");
    sl.push(0.75, Basis::Profile { v: 0, w: 2 }).expect("valid");
    sl.push(3.0, Basis::UnsymCorner { v: 2, w: 1, mu: 0.25 }).expect("valid");

    let mut g = Graph::new();
    let t = g.param(Block::T, 3);
    let z = g.param(Block::Z, 2);
    let s = g.param(Block::S, 3);
    let th = g.param(Block::Probe, 2);
    let x = g.input("x", 2);
    let a = g.linear(
        vec![(t, Sparse::new(2, 3, vec![(0, 0, 1.0), (0, 1, -2.0), (1, 2, 0.5), (1, 0, 1.0)]))],
        vec![0.3, -0.1],
    );
    let r = g.relu(a);
    let nt = g.square_norm(t);
    let shifted = g.linear(vec![(nt, Sparse::identity(1))], vec![1.0]);
    let root = g.sqrt(shifted);
    let rep = g.replicate(root, 2);
    let p = g.product(r, rep);
    let o = g.ortho_unit(z);
    let po = g.product(p, o);
    let npo = g.square_norm(po);
    let total = g.linear(vec![(t, Sparse::sum(3))], vec![0.0]);
    let c = g.cutoff(total, vec![(-1.0, 0.0), (0.5, 2.0), (1.0, 1.0)]);
    let loss = g.simplex_loss(s, Arc::new(sl));
    let net = Arc::new(LinearNet {
        input_dim: 2,
        output_dim: 1,
    });
    let pr = g.primary(th, x, net, 1);
    let pr2 = g.product(pr, pr);
    let parts = [npo, c, loss, pr2];
    let out = g.linear(parts.iter().map(|&id| (id, Sparse::identity(1))).collect(), vec![0.0]);
    g.set_output(out);
    g
}

fn fd_feed(rng: &mut ChaCha8Rng) -> Feed<f64> {
    let mut params = BTreeMap::new();
    params.insert(Block::T, (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect());
    params.insert(Block::Z, (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect());
    let s = random_point(rng, 3).to_dense();
    params.insert(Block::S, s);
    params.insert(Block::Probe, (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let mut inputs = BTreeMap::new();
    inputs.insert("x".to_string(), vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
    Feed { params, inputs }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn check_finite_differences(t: &mut Tally) {
    let g = fd_graph();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let blocks = [Block::T, Block::Z, Block::S, Block::Probe];
    for _ in 0..20 {
        let feed = fd_feed(&mut rng);
        let (Ok(vals), Ok(grads)) = (g.eval(&feed), g.grad(&feed, &blocks)) else {
            t.error("fixture failed to evaluate".into());
            return;
        };
        for b in blocks {
            let n = grads[&b].len();
            let dirs: Vec<Vec<f64>> = if b == Block::S {
                vec![vec![1.0, -1.0, 0.0], vec![0.0, 1.0, -1.0], vec![-1.0, 0.0, 1.0]]
            } else {
                (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect()
            };
            for dir in dirs {
                let h = 1e-6;
                let shifted = |sign: f64| {
                    let mut f = feed.clone();
                    for (p, d) in f.params.get_mut(&b).expect("block").iter_mut().zip(&dir) {
                        *p += sign * h * d;
                    }
                    g.run(&f).map_or(f64::NAN, |v| v[0])
                };
                let numeric = (shifted(1.0) - shifted(-1.0)) / (2.0 * h);
                let reverse: f64 = grads[&b].iter().zip(&dir).map(|(x, y)| x * y).sum();
                let forward = g.jvp(&vals, b, &dir).map_or(f64::NAN, |v| v[0]);
                t.check(rel_close(reverse, numeric, 1e-6), || format!("{b:?} reverse {reverse} vs {numeric}"));
                t.check(rel_close(forward, numeric, 1e-6), || format!("{b:?} forward {forward} vs {numeric}"));
            }
        }
    }
}

fn check_stop_gradient(t: &mut Tally) {
    let mut g = Graph::new();
    let x = g.param(Block::T, 3);
    let sg = g.stop_gradient(x);
    let p = g.product(x, sg);
    let out = g.linear(vec![(p, Sparse::sum(3))], vec![0.0]);
    g.set_output(out);
    let point = vec![1.5, -2.0, 0.25];
    let feed = Feed {
        params: BTreeMap::from([(Block::T, point.clone())]),
        inputs: BTreeMap::new(),
    };
    let grad = g.grad(&feed, &[Block::T]).map(|mut m| m.remove(&Block::T));
    t.check(grad.as_ref().ok().and_then(Option::as_ref) == Some(&point), || format!("x * sg(x) gradient {grad:?}"));
}

/// At states of the demo run, the gradient of the output loss on `T` and
/// `H` equals the gradient of the machine loss, and both equal the
/// closed-form tape and head gradients.
fn check_lift_identity(t: &mut Tally) -> usize {
    let data = Dataset::new(vec![vec![0.5]], vec![vec![0.0, 3.0]], None).expect("demo dataset");
    let net = match ExtendedNet::<f64>::build(&corpus::copy_machine(), &data, NetConfig::default()) {
        Ok(n) => n,
        Err(e) => {
            t.error(e.to_string());
            return 0;
        }
    };
    let Branch::External { loss } = &net.branch else { unreachable!("default construction is external") };
    let c0 = &net.oracle.configs[0];
    let bare = match loss.encode(c0).map_err(|e| e.to_string()).and_then(|st| {
        external::trace(loss, st, net.machine_steps() + 5).map_err(|e| e.to_string())
    }) {
        Ok(b) => b,
        Err(e) => {
            t.error(e);
            return 0;
        }
    };
    let mut g_loss = net.graph.clone();
    g_loss.set_output(net.nodes.loss_tm);
    let mut g_lift = net.graph.clone();
    g_lift.set_output(net.nodes.f_tm);
    let y = data.flat_y();
    let input = net.machine.input_tape();
    let tau = net.tau;
    let blocks = [Block::T, Block::H];
    let mut states = 0;
    // The halting state needs no gradient.
    for (k, st) in bare.states.iter().enumerate().take(bare.len()) {
        let mut params = net.initial.clone();
        params.insert(Block::S, st.s.to_dense());
        let mut tapes = Vec::with_capacity(st.tapes.len() * tau);
        for (j, col) in st.tapes.iter().enumerate() {
            if j == input {
                tapes.extend(std::iter::repeat(-1.0).take(tau));
            } else {
                tapes.extend_from_slice(col);
            }
        }
        params.insert(Block::T, tapes);
        params.insert(Block::H, st.heads.concat());
        params.insert(Block::Z, y.clone());
        let Ok(vals) = net.graph.eval(&net.feed(&params)) else {
            t.error(format!("state {k} does not evaluate"));
            continue;
        };
        let out = &vals[net.nodes.output.0];
        let seed: Vec<f64> = out.iter().zip(&y).map(|(o, t)| o - t).collect();
        let (Ok(lift), Ok(direct)) = (g_lift.vjp(&vals, &seed, &blocks), g_loss.vjp(&vals, &[1.0], &blocks)) else {
            t.error(format!("state {k}: gradient failed"));
            continue;
        };
        let closed = [
            (Block::T, loss.grad_tapes(st).concat()),
            (Block::H, loss.grad_heads(st).concat()),
        ];
        for (b, reference) in closed {
            let worst = lift[&b]
                .iter()
                .zip(&direct[&b])
                .zip(&reference)
                .map(|((a, d), r)| (a - d).abs().max((d - r).abs()) / r.abs().max(1.0))
                .fold(0.0f64, f64::max);
            t.check(worst <= 1e-9, || format!("state {k}: {b:?} gradients differ by {worst:e}"));
        }
        // One-sided derivatives toward every other vertex agree as well.
        if k % 8 == 0 {
            let v = st.s.as_vertex().expect("traced states are vertices");
            let mut dir = vec![0.0; st.s.dim()];
            for u in (0..dir.len()).filter(|&u| u != v) {
                dir[u] = 1.0;
                dir[v] = -1.0;
                let lifted = g_lift.jvp(&vals, Block::S, &dir).map(|d| d.iter().zip(&seed).map(|(a, b)| a * b).sum::<f64>());
                let plain = g_loss.jvp(&vals, Block::S, &dir).map(|d| d[0]);
                dir[u] = 0.0;
                t.check(
                    matches!((lifted, plain), (Ok(a), Ok(b)) if (a - b).abs() <= 1e-9 * b.abs().max(1.0)),
                    || format!("state {k}: s-derivative toward {u} differs"),
                );
            }
        }
        states += 1;
    }
    states
}

pub fn engine_checks() -> CheckResult {
    let mut t = Tally::default();
    check_finite_differences(&mut t);
    check_stop_gradient(&mut t);
    let states = check_lift_identity(&mut t);
    let n = t.count;
    t.finish(
        6,
        "gradient engine",
        format!("{n} assertions; lifted-loss identity on {states} training states"),
    )
}

/// Trainable dimension and depth of the assembled network, and the number
/// of configurations of full enumeration.
pub fn size_accounting() -> CheckResult {
    let mut t = Tally::default();
    let tm = corpus::copy_machine();
    let data = Dataset::new(vec![vec![0.5]], vec![vec![0.0, 3.0]], None).expect("demo dataset");
    let mut summary = Vec::new();
    match ExtendedNet::<f64>::build(&tm, &data, NetConfig::default()) {
        Ok(net) => {
            let (states, d, tau, nm) = (tm.state_count(), tm.tape_count(), net.tau, data.samples() * data.output_dim());
            let expect = 3 * states * (1 << d) + 2 * d * tau + nm;
            t.check(net.trainable_dim() == expect, || format!("trainable {} vs {expect}", net.trainable_dim()));
            t.check(net.depth() <= 12, || format!("depth {}", net.depth()));
            summary.push(format!("external dim {} = 3*{states}*2^{d} + 2*{d}*{tau} + {nm}, depth {}", expect, net.depth()));
        }
        Err(e) => t.error(e.to_string()),
    }
    let internal_cfg = NetConfig {
        construction: Construction::Internal,
        ..NetConfig::default()
    };
    match ExtendedNet::<f64>::build(&tm, &data, internal_cfg) {
        Ok(net) => t.check(net.depth() <= 12, || format!("internal depth {}", net.depth())),
        Err(e) => t.error(e.to_string()),
    }

    let (name, small) = corpus::all()
        .into_iter()
        .min_by_key(|(_, m)| (m.state_count(), m.tape_count()))
        .expect("corpus is nonempty");
    let tau = 3;
    let (states, d) = (small.state_count() as u128, small.tape_count() as u32);
    let expect = states * (1u128 << (d * tau as u32)) * (tau as u128).pow(d);
    t.check(full_dimension(&small, tau) == expect, || format!("formula {}", full_dimension(&small, tau)));
    let built = make_initial(&small, &[], tau).map_err(|e| e.to_string()).and_then(|mut c| {
        // A halted start keeps the enumeration independent of run length.
        c.state = (0..small.state_count()).find(|&q| small.is_accepting(q)).ok_or("no accepting state")?;
        StateGraph::build(&small, tau, &[c], GraphMode::Full, 10).map_err(|e| e.to_string())
    });
    match built {
        Ok(g) => {
            t.check(g.len() as u128 == expect, || format!("enumerated {} vs {expect}", g.len()));
            summary.push(format!("full enumeration of {name} at tau {tau}: {}", g.len()));
        }
        Err(e) => t.error(e),
    }
    t.finish(7, "size accounting", summary.join("; "))
}

/// Round trips: random finite doubles through the passthrough codec, every
/// representable word of two mantissa-exponent codecs.
pub fn codec_roundtrip() -> CheckResult {
    let mut t = Tally::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0DEC);
    let pass = FloatCodec::Passthrough64;
    let mut drawn = 0;
    while drawn < 10_000 {
        let x = f64::from_bits(rng.gen());
        if !x.is_finite() {
            continue;
        }
        drawn += 1;
        let back = pass.quantize(x).and_then(|w| pass.dequantize(&w));
        t.check(back.as_ref().is_ok_and(|y| y.to_bits() == x.to_bits()), || format!("{x:e} -> {back:?}"));
    }
    let mut words = 0;
    for (mantissa, exponent) in [(3u32, 3u32), (10, 4)] {
        let codec = FloatCodec::MantissaExponent { mantissa, exponent };
        let n = codec.word_len();
        let base = 1 + exponent as usize;
        let mut all = vec![vec![false; n]];
        for code in 0u64..1 << (n - 1) {
            let mut w: Vec<bool> = (0..n).map(|i| i > 0 && (code >> (i - 1)) & 1 == 1).collect();
            w[0] = code >> (n - 2) & 1 == 1;
            if !w[base] {
                continue;
            }
            all.push(w);
        }
        for w in all {
            words += 1;
            let Ok(x) = codec.dequantize(&w) else {
                t.error(format!("word {w:?} rejected"));
                continue;
            };
            t.check(codec.quantize(x).as_ref() == Ok(&w), || format!("{x} does not return to its word"));
            t.check(codec.quantize_surrogate(x).as_ref() == Ok(&w), || format!("{x}: surrogate differs"));
            t.check(codec.representable(x), || format!("{x} not representable"));
        }
    }
    t.finish(8, "codec round trips", format!("10000 passthrough values, {words} mantissa-exponent words"))
}

/// Constants that break halting separation and untripled machines are
/// refused.
pub fn negative_controls() -> CheckResult {
    let mut t = Tally::default();
    match ExternalParams::<f64>::with_b(16, 2, 1.0, true) {
        Ok(_) => t.error("b = 16 accepted".into()),
        Err(e) => t.check(e.to_string().contains("4102 >= 4096"), || format!("unexpected message: {e}")),
    }
    let data = Dataset::new(vec![vec![0.5]], vec![vec![0.0, 3.0]], None).expect("demo dataset");
    let cfg = NetConfig {
        b: Some(16),
        ..NetConfig::default()
    };
    t.check(ExtendedNet::<f64>::build(&corpus::copy_machine(), &data, cfg).is_err(), || "network built with b = 16".into());
    let tm = corpus::copy_machine();
    let params = ExternalParams::<f64>::choose(2, 1.0, true);
    match TapeLoss::build(&tm, 9, params) {
        Err(ExternalError::BackStep { count, .. }) => t.check(count > 0, || "empty back-step report".into()),
        other => t.error(format!("untripled copy machine: {:?}", other.map(|_| ()))),
    }
    t.check(TapeLoss::build(&triple_states(&tm), 9, params).is_ok(), || "tripled copy machine refused".into());
    t.finish(9, "negative controls", "b = 16 fails 4102 >= 4096; untripled copy refused".into())
}

pub type Check = fn() -> CheckResult;

pub const CHECKS: [Check; 9] = [
    internal_equivalence,
    external_equivalence,
    end_to_end,
    basis_identities,
    argmin_oracle,
    engine_checks,
    size_accounting,
    codec_roundtrip,
    negative_controls,
];

pub fn run_all() -> Vec<CheckResult> {
    CHECKS.iter().map(|c| c()).collect()
}
