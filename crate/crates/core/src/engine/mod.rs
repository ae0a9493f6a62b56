//! Small computation graph over flat vectors.
//!
//! Every node holds a vector. Stop-gradient and quantization barriers pass
//! values through unchanged and cut the edge for both reverse-mode
//! gradients ([`Graph::vjp`]) and forward one-sided directional derivatives
//! ([`Graph::jvp`]).

mod diff;
mod eval;
mod ortho;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::codec::{CodecError, FloatCodec};
use crate::network::PrimaryNetwork;
use crate::simplex::SimplexLoss;
use crate::Real;

pub use ortho::{ortho_unit, ORTHO_THRESHOLD};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("shape mismatch at node {node}: {detail}")]
    Shape { node: usize, detail: String },
    #[error("missing value for {0}")]
    Missing(String),
    #[error("node {node}: {source}")]
    Codec { node: usize, source: CodecError },
    #[error("node {node}: {detail}")]
    Domain { node: usize, detail: String },
    #[error("graph has no output node")]
    NoOutput,
}

/// Trainable parameter blocks. `Probe` is a zero-valued, never-updated
/// perturbation of the primary weights used to observe their gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Block {
    S,
    T,
    H,
    Z,
    Probe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

/// Sparse matrix given by `(row, col, value)` triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct Sparse<F> {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, F)>,
}

impl<F: Real> Sparse<F> {
    pub fn new(rows: usize, cols: usize, entries: Vec<(usize, usize, F)>) -> Self {
        assert!(entries.iter().all(|&(r, c, _)| r < rows && c < cols), "entry out of range");
        Sparse { rows, cols, entries }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, F::one())
    }

    pub fn scaled_identity(n: usize, c: F) -> Self {
        Sparse::new(n, n, (0..n).map(|i| (i, i, c)).collect())
    }

    /// `rows x 1` column of ones.
    pub fn replicate(rows: usize) -> Self {
        Sparse::new(rows, 1, (0..rows).map(|i| (i, 0, F::one())).collect())
    }

    /// `1 x cols` row of ones.
    pub fn sum(cols: usize) -> Self {
        Sparse::new(1, cols, (0..cols).map(|j| (0, j, F::one())).collect())
    }

    /// Places an input of length `cols` at `offset` inside an output of
    /// length `rows`.
    pub fn embed(rows: usize, cols: usize, offset: usize) -> Self {
        Sparse::new(rows, cols, (0..cols).map(|j| (offset + j, j, F::one())).collect())
    }

    pub fn apply_into(&self, x: &[F], out: &mut [F]) {
        for &(r, c, a) in &self.entries {
            out[r] = out[r] + a * x[c];
        }
    }

    pub fn apply_transpose_into(&self, g: &[F], out: &mut [F]) {
        for &(r, c, a) in &self.entries {
            out[c] = out[c] + a * g[r];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BarrierKind {
    /// Floats to a tape column of `tau` cells holding `+-1`: blanks up to
    /// `start`, then the words of every input value with each bit preceded
    /// by a `+1` marker cell when `framed`.
    Encode {
        codec: FloatCodec,
        tau: usize,
        start: usize,
        framed: bool,
    },
    /// Reads `count` bits at `start, start + stride, ...` (positive cell
    /// means 1) and decodes them as consecutive words. Non-finite results
    /// become 0.
    Decode {
        codec: FloatCodec,
        start: usize,
        stride: usize,
        count: usize,
    },
}

#[derive(Clone)]
pub enum Op<F> {
    Input(String),
    Param(Block),
    Constant(Vec<F>),
    /// `sum_k A_k x_k + bias`.
    Linear {
        terms: Vec<(NodeId, Sparse<F>)>,
        bias: Vec<F>,
    },
    Relu(NodeId),
    Sqrt(NodeId),
    /// Elementwise product.
    Product(NodeId, NodeId),
    SquareNorm(NodeId),
    /// Elementwise piecewise-linear map through `knots`, constant outside.
    Cutoff {
        input: NodeId,
        knots: Vec<(F, F)>,
    },
    StopGradient(NodeId),
    Barrier {
        input: NodeId,
        kind: BarrierKind,
    },
    /// Unit vector orthogonal to the input.
    OrthoUnit(NodeId),
    SimplexLoss {
        input: NodeId,
        loss: Arc<SimplexLoss<F>>,
    },
    Primary {
        theta: NodeId,
        x: NodeId,
        net: Arc<dyn PrimaryNetwork<F>>,
    },
}

impl<F: Real> Op<F> {
    pub fn children(&self) -> Vec<NodeId> {
        match self {
            Op::Input(_) | Op::Param(_) | Op::Constant(_) => vec![],
            Op::Linear { terms, .. } => terms.iter().map(|t| t.0).collect(),
            Op::Relu(a) | Op::Sqrt(a) | Op::SquareNorm(a) | Op::StopGradient(a) | Op::OrthoUnit(a) => vec![*a],
            Op::Cutoff { input, .. } | Op::Barrier { input, .. } | Op::SimplexLoss { input, .. } => vec![*input],
            Op::Product(a, b) => vec![*a, *b],
            Op::Primary { theta, x, .. } => vec![*theta, *x],
        }
    }

    /// Whether derivatives flow from the children into this node.
    pub fn passes_derivatives(&self) -> bool {
        !matches!(self, Op::StopGradient(_) | Op::Barrier { .. })
    }

    /// Layers charged to the node when measuring depth.
    pub fn layer_cost(&self) -> usize {
        match self {
            Op::Relu(_) | Op::Sqrt(_) | Op::Product(..) | Op::SquareNorm(_) | Op::Cutoff { .. } => 1,
            Op::OrthoUnit(_) => 5,
            Op::SimplexLoss { .. } => 2,
            _ => 0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Op::Input(_) => "input",
            Op::Param(_) => "param",
            Op::Constant(_) => "constant",
            Op::Linear { .. } => "linear",
            Op::Relu(_) => "relu",
            Op::Sqrt(_) => "sqrt",
            Op::Product(..) => "product",
            Op::SquareNorm(_) => "square_norm",
            Op::Cutoff { .. } => "cutoff",
            Op::StopGradient(_) => "stop_gradient",
            Op::Barrier { kind: BarrierKind::Encode { .. }, .. } => "quantize",
            Op::Barrier { kind: BarrierKind::Decode { .. }, .. } => "dequantize",
            Op::OrthoUnit(_) => "ortho_unit",
            Op::SimplexLoss { .. } => "simplex_loss",
            Op::Primary { .. } => "primary",
        }
    }
}

#[derive(Clone)]
pub struct Node<F> {
    pub op: Op<F>,
    pub len: usize,
    pub label: Option<String>,
}

/// Values of every node after a forward pass.
pub type Values<F> = Vec<Vec<F>>;

/// Parameter and input values for a forward pass.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Feed<F> {
    pub params: BTreeMap<Block, Vec<F>>,
    pub inputs: BTreeMap<String, Vec<F>>,
}

#[derive(Clone, Default)]
pub struct Graph<F> {
    nodes: Vec<Node<F>>,
    params: BTreeMap<Block, NodeId>,
    inputs: BTreeMap<String, NodeId>,
    output: Option<NodeId>,
}

impl<F: Real> Graph<F> {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            params: BTreeMap::new(),
            inputs: BTreeMap::new(),
            output: None,
        }
    }

    pub fn nodes(&self) -> &[Node<F>] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node<F> {
        &self.nodes[id.0]
    }

    pub fn len_of(&self, id: NodeId) -> usize {
        self.nodes[id.0].len
    }

    pub fn param_node(&self, block: Block) -> Option<NodeId> {
        self.params.get(&block).copied()
    }

    pub fn blocks(&self) -> impl Iterator<Item = (Block, usize)> + '_ {
        self.params.iter().map(|(&b, &id)| (b, self.nodes[id.0].len))
    }

    pub fn output(&self) -> Result<NodeId, EngineError> {
        self.output.ok_or(EngineError::NoOutput)
    }

    pub fn set_output(&mut self, id: NodeId) {
        self.output = Some(id);
    }

    pub fn set_label(&mut self, id: NodeId, label: &str) {
        self.nodes[id.0].label = Some(label.to_string());
    }

    fn push(&mut self, op: Op<F>, len: usize) -> NodeId {
        self.nodes.push(Node { op, len, label: None });
        NodeId(self.nodes.len() - 1)
    }

    fn same_len(&self, a: NodeId, b: NodeId) {
        assert_eq!(self.len_of(a), self.len_of(b), "operands of different length");
    }

    pub fn input(&mut self, name: &str, len: usize) -> NodeId {
        assert!(!self.inputs.contains_key(name), "input {name} declared twice");
        let id = self.push(Op::Input(name.to_string()), len);
        self.inputs.insert(name.to_string(), id);
        id
    }

    /// Each block can be declared once.
    pub fn param(&mut self, block: Block, len: usize) -> NodeId {
        assert!(!self.params.contains_key(&block), "parameter block {block:?} declared twice");
        let id = self.push(Op::Param(block), len);
        self.params.insert(block, id);
        id
    }

    pub fn constant(&mut self, value: Vec<F>) -> NodeId {
        let len = value.len();
        self.push(Op::Constant(value), len)
    }

    pub fn linear(&mut self, terms: Vec<(NodeId, Sparse<F>)>, bias: Vec<F>) -> NodeId {
        let len = bias.len();
        for (id, a) in &terms {
            assert_eq!(a.rows, len, "matrix rows differ from bias length");
            assert_eq!(a.cols, self.len_of(*id), "matrix columns differ from operand length");
        }
        self.push(Op::Linear { terms, bias }, len)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let len = self.len_of(a);
        self.push(Op::Relu(a), len)
    }

    pub fn sqrt(&mut self, a: NodeId) -> NodeId {
        let len = self.len_of(a);
        self.push(Op::Sqrt(a), len)
    }

    pub fn product(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.same_len(a, b);
        let len = self.len_of(a);
        self.push(Op::Product(a, b), len)
    }

    pub fn square_norm(&mut self, a: NodeId) -> NodeId {
        self.push(Op::SquareNorm(a), 1)
    }

    pub fn cutoff(&mut self, input: NodeId, knots: Vec<(F, F)>) -> NodeId {
        assert!(!knots.is_empty(), "cutoff needs knots");
        assert!(knots.windows(2).all(|w| w[0].0 < w[1].0), "knots must increase");
        let len = self.len_of(input);
        self.push(Op::Cutoff { input, knots }, len)
    }

    pub fn stop_gradient(&mut self, a: NodeId) -> NodeId {
        let len = self.len_of(a);
        self.push(Op::StopGradient(a), len)
    }

    pub fn encode(&mut self, input: NodeId, codec: FloatCodec, tau: usize, start: usize, framed: bool) -> NodeId {
        self.push(
            Op::Barrier {
                input,
                kind: BarrierKind::Encode {
                    codec,
                    tau,
                    start,
                    framed,
                },
            },
            tau,
        )
    }

    pub fn decode(&mut self, input: NodeId, codec: FloatCodec, start: usize, stride: usize, count: usize) -> NodeId {
        let word = codec.word_len();
        assert!(count % word == 0, "bit count must be a whole number of words");
        assert!(
            count == 0 || start + stride * (count - 1) < self.len_of(input),
            "decode window leaves the input"
        );
        self.push(
            Op::Barrier {
                input,
                kind: BarrierKind::Decode {
                    codec,
                    start,
                    stride,
                    count,
                },
            },
            count / word,
        )
    }

    pub fn ortho_unit(&mut self, a: NodeId) -> NodeId {
        let len = self.len_of(a);
        assert!(len >= 2, "orthogonal unit vector needs dimension two");
        self.push(Op::OrthoUnit(a), len)
    }

    pub fn simplex_loss(&mut self, input: NodeId, loss: Arc<SimplexLoss<F>>) -> NodeId {
        assert_eq!(loss.dim(), self.len_of(input), "simplex dimension differs from operand");
        self.push(Op::SimplexLoss { input, loss }, 1)
    }

    pub fn primary(&mut self, theta: NodeId, x: NodeId, net: Arc<dyn PrimaryNetwork<F>>, samples: usize) -> NodeId {
        assert_eq!(self.len_of(theta), net.weight_dim(), "weight length");
        let len = samples * net.output_dim();
        self.push(Op::Primary { theta, x, net }, len)
    }

    /// `c * a`.
    pub fn scale(&mut self, a: NodeId, c: F) -> NodeId {
        let n = self.len_of(a);
        self.linear(vec![(a, Sparse::scaled_identity(n, c))], vec![F::zero(); n])
    }

    /// `a + b`.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.same_len(a, b);
        let n = self.len_of(a);
        self.linear(vec![(a, Sparse::identity(n)), (b, Sparse::identity(n))], vec![F::zero(); n])
    }

    /// Scalar node copied `n` times.
    pub fn replicate(&mut self, a: NodeId, n: usize) -> NodeId {
        assert_eq!(self.len_of(a), 1, "only scalars are replicated");
        self.linear(vec![(a, Sparse::replicate(n))], vec![F::zero(); n])
    }

    /// `(1 - w) a + w b` for a scalar weight node `w`.
    pub fn blend(&mut self, w: NodeId, a: NodeId, b: NodeId) -> NodeId {
        self.same_len(a, b);
        let n = self.len_of(a);
        let wr = self.replicate(w, n);
        let keep = self.linear(vec![(wr, Sparse::scaled_identity(n, -F::one()))], vec![F::one(); n]);
        let pa = self.product(keep, a);
        let pb = self.product(wr, b);
        self.add(pa, pb)
    }

    /// Layers on the longest path into each node.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            let below = node.op.children().iter().map(|c| depth[c.0]).max().unwrap_or(0);
            depth[i] = below + node.op.layer_cost();
        }
        depth
    }

    /// Layers on the longest path into the output, not counting the layers
    /// inside the primary network.
    pub fn depth(&self) -> Result<usize, EngineError> {
        Ok(self.depths()[self.output()?.0])
    }

    /// One line per node: id, kind, length, children, label.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, node) in self.nodes.iter().enumerate() {
            let children: Vec<String> = node.op.children().iter().map(|c| format!("n{}", c.0)).collect();
            let extra = match &node.op {
                Op::Param(b) => format!(" block={b:?}"),
                Op::Input(name) => format!(" name={name}"),
                Op::Cutoff { knots, .. } => format!(" knots={knots:?}"),
                Op::Primary { net, .. } => format!(" net={}", net.name()),
                Op::Barrier { kind, .. } => format!(" {kind:?}"),
                _ => String::new(),
            };
            let _ = write!(out, "n{i} {} len={} <- [{}]{extra}", node.op.kind(), node.len, children.join(", "));
            if let Some(label) = &node.label {
                let _ = write!(out, " # {label}");
            }
            if Some(NodeId(i)) == self.output {
                out.push_str(" (output)");
            }
            out.push('\n');
        }
        out
    }
}
