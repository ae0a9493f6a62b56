//! Tracing with whole configurations as simplex vertices.
//!
//! Every configuration a machine can visit becomes a vertex. Vertex and edge
//! weights decrease along the computation, and a loss interpolating them on
//! the simplex makes each Frank-Wolfe step move to the successor
//! configuration.

use std::collections::HashMap;

use crate::simplex::{corner_argmin, line_search, Basis, SimplexError, SimplexLoss, SimplexPoint};
use crate::tm::{run, step, Configuration, Symbol, TmError, TuringMachine};
use crate::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum InternalError {
    #[error(transparent)]
    Machine(#[from] TmError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error("input {input} does not halt within {steps} steps")]
    NonHalting { input: usize, steps: usize },
    #[error("the loss needs at least 3 vertices, the graph has {0}")]
    TooFewVertices(usize),
    #[error("full enumeration would create {0} vertices")]
    TooLarge(u128),
    #[error("invalid ladder: {0}")]
    Ladder(String),
    #[error("weight condition violated: {0}")]
    Weights(String),
    #[error("iterate left the vertex set at step {step}: {detail}")]
    LeftVertexSet { step: usize, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphMode {
    /// Union of the forward orbits of the given inputs.
    Reachable,
    /// Every configuration with tapes of length `tau`.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepRule {
    Unit,
    #[serde(alias = "line_search")]
    LineSearch,
}

/// Limit on the number of vertices created by [`GraphMode::Full`].
pub const FULL_LIMIT: u128 = 1 << 20;

/// Configurations, their successors and their distance to halting.
#[derive(Debug, Clone)]
pub struct StateGraph {
    vertices: Vec<Configuration>,
    index: HashMap<Configuration, usize>,
    succ: Vec<Option<usize>>,
    k: Vec<usize>,
    horizon: usize,
    initial: Vec<usize>,
}

/// `|Q| 2^{d tau} tau^d`, the number of configurations with tape length `tau`.
pub fn full_dimension(tm: &TuringMachine, tau: usize) -> u128 {
    let d = tm.tape_count() as u32;
    let tapes = 1u128.checked_shl(d * tau as u32).unwrap_or(u128::MAX);
    (tm.state_count() as u128)
        .saturating_mul(tapes)
        .saturating_mul((tau as u128).saturating_pow(d))
}

impl StateGraph {
    /// Builds the graph. Every input must halt within `max_steps`; the
    /// horizon `K` is one more than the longest run.
    pub fn build(
        tm: &TuringMachine,
        tau: usize,
        inputs: &[Configuration],
        mode: GraphMode,
        max_steps: usize,
    ) -> Result<Self, InternalError> {
        let mut g = StateGraph {
            vertices: Vec::new(),
            index: HashMap::new(),
            succ: Vec::new(),
            k: Vec::new(),
            horizon: 0,
            initial: Vec::new(),
        };
        let mut longest = 0;
        let mut traces = Vec::with_capacity(inputs.len());
        for (i, c0) in inputs.iter().enumerate() {
            let trace = run(tm, c0, max_steps)?;
            if !trace.halted {
                return Err(InternalError::NonHalting { input: i, steps: max_steps });
            }
            longest = longest.max(trace.steps());
            traces.push(trace);
        }
        match mode {
            GraphMode::Reachable => {
                for trace in &traces {
                    for c in &trace.configs {
                        g.insert(c.clone());
                    }
                }
                for v in 0..g.vertices.len() {
                    g.succ[v] = if tm.is_accepting(g.vertices[v].state) {
                        None
                    } else {
                        g.index.get(&step(tm, &g.vertices[v])?).copied()
                    };
                }
            }
            GraphMode::Full => {
                let total = full_dimension(tm, tau);
                if total > FULL_LIMIT {
                    return Err(InternalError::TooLarge(total));
                }
                for code in 0..total as usize {
                    g.insert(decode_configuration(tm, tau, code));
                }
                for v in 0..g.vertices.len() {
                    let c = &g.vertices[v];
                    g.succ[v] = if tm.is_accepting(c.state) {
                        None
                    } else {
                        // Heads on the guard cells have no admissible successor.
                        step(tm, c).ok().and_then(|n| g.index.get(&n).copied())
                    };
                }
            }
        }
        g.horizon = longest + 1;
        g.compute_distances(tm);
        g.initial = inputs.iter().map(|c| g.index[c]).collect();
        Ok(g)
    }

    fn insert(&mut self, c: Configuration) -> usize {
        if let Some(&i) = self.index.get(&c) {
            return i;
        }
        let i = self.vertices.len();
        self.index.insert(c.clone(), i);
        self.vertices.push(c);
        self.succ.push(None);
        self.k.push(0);
        i
    }

    fn compute_distances(&mut self, tm: &TuringMachine) {
        for v in 0..self.vertices.len() {
            let mut cur = v;
            let mut steps = 0;
            self.k[v] = loop {
                if tm.is_accepting(self.vertices[cur].state) {
                    break steps;
                }
                if steps >= self.horizon {
                    break self.horizon;
                }
                match self.succ[cur] {
                    Some(n) => {
                        cur = n;
                        steps += 1;
                    }
                    None => break self.horizon,
                }
            };
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, v: usize) -> &Configuration {
        &self.vertices[v]
    }

    pub fn index_of(&self, c: &Configuration) -> Option<usize> {
        self.index.get(c).copied()
    }

    pub fn successor(&self, v: usize) -> Option<usize> {
        self.succ[v]
    }

    /// Steps from `v` to a halting configuration, or `K` if there are none
    /// within the horizon.
    pub fn k(&self, v: usize) -> usize {
        self.k[v]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Vertex indices of the inputs, in the order given to [`Self::build`].
    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    /// True if `w` follows `v` or `v` follows `w`.
    pub fn adjacent(&self, v: usize, w: usize) -> bool {
        v != w && (self.succ[v] == Some(w) || self.succ[w] == Some(v))
    }
}

/// Configuration number `code` in mixed radix: heads, then tape cells, then
/// the state.
fn decode_configuration(tm: &TuringMachine, tau: usize, mut code: usize) -> Configuration {
    let d = tm.tape_count();
    let mut heads = Vec::with_capacity(d);
    for _ in 0..d {
        heads.push(code % tau);
        code /= tau;
    }
    let mut tapes = vec![vec![Symbol::BLANK; tau]; d];
    for tape in tapes.iter_mut() {
        for cell in tape.iter_mut() {
            *cell = Symbol::from_bit(code % 2 == 1);
            code /= 2;
        }
    }
    Configuration {
        state: code,
        tapes,
        heads,
    }
}

/// `W_j = 1 + j` for `j = 0..=K`.
pub fn default_ladder<S: Scalar>(horizon: usize) -> Vec<S> {
    (0..=horizon).map(|j| S::from_int(1 + j as i64)).collect()
}

/// Vertex weights `W_{k(v)}` and pair weights: the mean of the endpoint
/// weights on edges, `B = W_K` elsewhere.
#[derive(Debug, Clone)]
pub struct WeightAssignment<S> {
    ladder: Vec<S>,
    k: Vec<usize>,
    succ: Vec<Option<usize>>,
}

impl<S: Scalar> WeightAssignment<S> {
    pub fn new(g: &StateGraph, ladder: Vec<S>) -> Result<Self, InternalError> {
        if ladder.len() != g.horizon() + 1 {
            return Err(InternalError::Ladder(format!(
                "need {} entries for horizon {}, got {}",
                g.horizon() + 1,
                g.horizon(),
                ladder.len()
            )));
        }
        if let Some(j) = (1..ladder.len()).find(|&j| ladder[j] <= ladder[j - 1]) {
            return Err(InternalError::Ladder(format!("W_{j} = {} is not above W_{} = {}", ladder[j], j - 1, ladder[j - 1])));
        }
        let wa = WeightAssignment {
            ladder,
            k: g.k.clone(),
            succ: g.succ.clone(),
        };
        wa.validate()?;
        Ok(wa)
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    pub fn bound(&self) -> S {
        *self.ladder.last().expect("ladder is nonempty")
    }

    pub fn omega_v(&self, v: usize) -> S {
        self.ladder[self.k[v]]
    }

    pub fn omega_vw(&self, v: usize, w: usize) -> S {
        if v != w && (self.succ[v] == Some(w) || self.succ[w] == Some(v)) {
            (self.omega_v(v) + self.omega_v(w)) * S::half()
        } else {
            self.bound()
        }
    }

    /// Checks the ordering conditions on every edge that starts at a vertex
    /// which halts within the horizon. Vertices that never halt sit at the
    /// bound and are never visited from an admitted input.
    pub fn validate(&self) -> Result<(), InternalError> {
        let horizon = self.ladder.len() - 1;
        let b = self.bound();
        for v in 0..self.dim() {
            if self.k[v] >= horizon {
                continue;
            }
            if self.omega_v(v) >= b {
                return Err(InternalError::Weights(format!("vertex {v} reaches the bound")));
            }
            let Some(w) = self.succ[v] else { continue };
            let (wv, wvw, ww) = (self.omega_v(v), self.omega_vw(v, w), self.omega_v(w));
            if !(wv > wvw && wvw > ww) {
                return Err(InternalError::Weights(format!("edge ({v}, {w}): {wv}, {wvw}, {ww} not decreasing")));
            }
            if let Some(x) = self.succ[w] {
                if x != v && self.omega_vw(v, w) <= self.omega_vw(w, x) {
                    return Err(InternalError::Weights(format!("edges ({v}, {w}) and ({w}, {x}) not decreasing")));
                }
            }
            if self.omega_vw(v, w) != self.omega_vw(w, v) {
                return Err(InternalError::Weights(format!("pair ({v}, {w}) is not symmetric")));
            }
        }
        Ok(())
    }

    /// Hats of width one half at every vertex plus an edge bump for every
    /// unordered pair.
    pub fn build_loss(&self) -> Result<SimplexLoss<S>, InternalError> {
        let m = self.dim();
        if m < 3 {
            return Err(InternalError::TooFewVertices(m));
        }
        let mut loss = SimplexLoss::new(m);
        for v in 0..m {
            loss.push(self.omega_v(v), Basis::Hat { v, mu: S::half() })?;
        }
        for v in 0..m {
            for w in v + 1..m {
                loss.push(self.omega_vw(v, w), Basis::EdgeBump { v, w })?;
            }
        }
        Ok(loss)
    }
}

/// Iterates and losses of a Frank-Wolfe run started at a vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalTrace<S> {
    pub vertices: Vec<usize>,
    pub losses: Vec<S>,
    /// The last iterate is its own Frank-Wolfe vertex.
    pub fixed_point: bool,
}

impl<S: Scalar> InternalTrace<S> {
    pub fn strictly_decreasing(&self) -> bool {
        self.losses.windows(2).all(|w| w[1] < w[0])
    }
}

/// Frank-Wolfe descent from `e_{v0}` with corners of width one half.
pub fn trace<S: Scalar>(
    loss: &SimplexLoss<S>,
    v0: usize,
    rule: StepRule,
    max_iters: usize,
) -> Result<InternalTrace<S>, InternalError> {
    let m = loss.dim();
    let mut v = v0;
    let mut out = InternalTrace {
        vertices: vec![v0],
        losses: vec![loss.eval(&SimplexPoint::vertex(m, v0))],
        fixed_point: false,
    };
    for it in 0..max_iters {
        let w = corner_argmin(loss, v, S::half(), None);
        if w == v {
            out.fixed_point = true;
            break;
        }
        let value = match rule {
            StepRule::Unit => loss.eval(&SimplexPoint::vertex(m, w)),
            StepRule::LineSearch => {
                let (alpha, value) = line_search(loss, &SimplexPoint::vertex(m, v), &SimplexPoint::vertex(m, w));
                if !alpha.is_one() {
                    return Err(InternalError::LeftVertexSet {
                        step: it + 1,
                        detail: format!("line search from {v} toward {w} stopped at {alpha}"),
                    });
                }
                value
            }
        };
        v = w;
        out.vertices.push(w);
        out.losses.push(value);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::tm::make_initial;
    use crate::Rational;

    fn copy_graph(payloads: &[Vec<bool>]) -> (TuringMachine, StateGraph) {
        let tm = corpus::copy_machine();
        let tau = payloads.iter().map(Vec::len).max().unwrap() + 5;
        let inputs: Vec<_> = payloads.iter().map(|p| make_initial(&tm, p, tau).unwrap()).collect();
        let g = StateGraph::build(&tm, tau, &inputs, GraphMode::Reachable, 1000).unwrap();
        (tm, g)
    }

    #[test]
    fn reachable_graph_of_one_input() {
        let (_, g) = copy_graph(&[vec![true, true]]);
        assert_eq!(g.len(), 4);
        assert_eq!(g.horizon(), 4);
        let v0 = g.initial()[0];
        assert_eq!(g.k(v0), 3);
        let mut v = v0;
        while let Some(w) = g.successor(v) {
            assert_eq!(g.k(w) + 1, g.k(v));
            v = w;
        }
        assert_eq!(g.k(v), 0);
    }

    #[test]
    fn halted_input_is_a_single_vertex() {
        let tm = corpus::copy_machine();
        let mut c = make_initial(&tm, &[], 4).unwrap();
        c.state = tm.state_index("halt").unwrap();
        let g = StateGraph::build(&tm, 4, &[c], GraphMode::Reachable, 10).unwrap();
        assert_eq!((g.len(), g.k(0)), (1, 0));
    }

    #[test]
    fn full_enumeration_counts_every_configuration() {
        let tm = corpus::copy_machine();
        assert_eq!(full_dimension(&tm, 3), 1728);
        let mut input = make_initial(&tm, &[], 3).unwrap();
        input.state = tm.state_index("halt").unwrap();
        let g = StateGraph::build(&tm, 3, &[input], GraphMode::Full, 10).unwrap();
        assert_eq!(g.len(), 1728);
    }

    #[test]
    fn weights_on_edges_and_non_edges() {
        let (_, g) = copy_graph(&[vec![true, false, true, true]]);
        let wa = WeightAssignment::<Rational>::new(&g, default_ladder(g.horizon())).unwrap();
        let v = g.initial()[0];
        let w = g.successor(v).unwrap();
        assert_eq!(wa.omega_vw(v, w), (wa.omega_v(v) + wa.omega_v(w)) / Rational::from(2));
        let far = g.successor(g.successor(w).unwrap()).unwrap();
        assert_eq!(wa.omega_vw(v, far), wa.bound());
        assert!(WeightAssignment::<Rational>::new(&g, vec![Rational::from(1); g.horizon() + 1]).is_err());
    }

    #[test]
    fn loss_interpolates_weights() {
        let (_, g) = copy_graph(&[vec![true, true], vec![false, true]]);
        let wa = WeightAssignment::<Rational>::new(&g, default_ladder(g.horizon())).unwrap();
        let loss = wa.build_loss().unwrap();
        let m = g.len();
        let half = Rational::new(1, 2);
        for v in 0..m {
            assert_eq!(loss.eval(&SimplexPoint::vertex(m, v)), wa.omega_v(v));
            for w in 0..m {
                if v != w {
                    assert_eq!(loss.eval(&SimplexPoint::edge_point(m, v, w, half)), wa.omega_vw(v, w));
                }
            }
        }
    }

    #[test]
    fn trace_follows_the_machine() {
        let payload = vec![true, true, true, false];
        let (tm, g) = copy_graph(&[payload.clone()]);
        let wa = WeightAssignment::<f64>::new(&g, default_ladder(g.horizon())).unwrap();
        let loss = wa.build_loss().unwrap();
        let sim = run(&tm, g.vertex(g.initial()[0]), 100).unwrap();
        let expected: Vec<usize> = sim.configs.iter().map(|c| g.index_of(c).unwrap()).collect();
        for rule in [StepRule::Unit, StepRule::LineSearch] {
            let t = trace(&loss, g.initial()[0], rule, 100).unwrap();
            assert_eq!(t.vertices, expected);
            assert!(t.fixed_point && t.strictly_decreasing());
        }
    }
}
