use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::codec::FloatCodec;
use crate::engine::{Block, Feed, Graph, NodeId, Sparse};
use crate::external::{ExternalParams, MachineState, TapeLoss};
use crate::internal::{default_ladder, GraphMode, StateGraph, WeightAssignment};
use crate::simplex::{SimplexLoss, SimplexPoint};
use crate::tm::{frame_bits, make_initial, run, triple_states, Configuration, ExecutionTrace, Move, TuringMachine};
use crate::Real;

use super::{ConstantNet, Dataset, LinearNet, NetworkError, PrimaryNetwork, SwitchParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    Internal,
    #[default]
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PrimaryKind {
    #[default]
    Constant,
    Linear,
}

/// Tape cells holding the bits of the primary weights once the machine
/// halts: `start, start + stride, ...` on `tape`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaWindow {
    pub tape: usize,
    pub start: usize,
    pub stride: usize,
}

impl ThetaWindow {
    /// Where a framed copy of `[x | y]` onto tape 1 leaves the labels:
    /// data cells after the `input_len` input words.
    pub fn copied_labels(codec: FloatCodec, input_len: usize) -> Self {
        ThetaWindow {
            tape: 1,
            start: 2 + 2 * codec.word_len() * input_len,
            stride: 2,
        }
    }

    pub fn cells(&self, count: usize) -> impl Iterator<Item = usize> + '_ {
        (0..count).map(move |k| self.start + self.stride * k)
    }
}

/// Assembly options. `None` fields take derived defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub construction: Construction,
    pub codec: FloatCodec,
    pub primary: PrimaryKind,
    pub window: Option<ThetaWindow>,
    pub tau: Option<usize>,
    pub b: Option<u64>,
    pub c: Option<f64>,
    pub gamma: f64,
    /// Simulator budget used to find `k_t`.
    pub max_machine_steps: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            construction: Construction::External,
            codec: FloatCodec::Passthrough64,
            primary: PrimaryKind::Constant,
            window: None,
            tau: None,
            b: None,
            c: None,
            gamma: 1.0,
            max_machine_steps: 100_000,
        }
    }
}

/// Nodes the training loop reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetNodes {
    pub output: NodeId,
    pub primary: NodeId,
    pub f_tm: NodeId,
    pub loss_tm: NodeId,
    pub theta: NodeId,
    pub phi: NodeId,
    pub psi: NodeId,
    /// Tape matrix seen by the loss (external only).
    pub tapes: Option<NodeId>,
}

/// Machine-specific parts of the network.
#[derive(Debug, Clone)]
pub enum Branch<F> {
    Internal { graph: StateGraph, loss: Arc<SimplexLoss<F>> },
    External { loss: TapeLoss<F> },
}

/// The wrapper network around a primary model, ready for training.
pub struct ExtendedNet<F> {
    pub graph: Graph<F>,
    pub nodes: NetNodes,
    pub branch: Branch<F>,
    pub config: NetConfig,
    pub switch: SwitchParams,
    pub data: Dataset,
    pub net: Arc<dyn PrimaryNetwork<F>>,
    /// Machine actually traced (state-tripled for the external loss).
    pub machine: TuringMachine,
    pub tau: usize,
    pub window: ThetaWindow,
    /// Simulator run on the framed `[x | y]`.
    pub oracle: ExecutionTrace,
    pub initial: BTreeMap<Block, Vec<F>>,
}

fn cast<F: Real>(v: &[f64]) -> Vec<F> {
    v.iter().map(|&x| F::from_f64_lossy(x)).collect()
}

fn primary_net<F: Real>(kind: PrimaryKind, input_dim: usize, output_dim: usize) -> Arc<dyn PrimaryNetwork<F>> {
    match kind {
        PrimaryKind::Constant => Arc::new(ConstantNet { input_dim, output_dim }),
        PrimaryKind::Linear => Arc::new(LinearNet { input_dim, output_dim }),
    }
}

/// Framed bits of `[x | y]` as placed on the input tape.
pub fn payload(codec: FloatCodec, data: &Dataset) -> Result<Vec<bool>, NetworkError> {
    let mut values = data.flat_x();
    values.extend(data.flat_y());
    Ok(frame_bits(&codec.quantize_all(&values)?))
}

/// Weights read from `window` of a configuration; non-finite words become 0.
pub fn read_theta(codec: FloatCodec, window: &ThetaWindow, count: usize, c: &Configuration) -> Result<Vec<f64>, NetworkError> {
    let tape = &c.tapes[window.tape];
    let bits: Vec<bool> = window.cells(count).map(|i| tape[i].bit()).collect();
    Ok(codec
        .dequantize_all(&bits)?
        .into_iter()
        .map(|t| if t.is_finite() { t } else { 0.0 })
        .collect())
}

struct Common {
    x: NodeId,
    z: NodeId,
    probe: NodeId,
}

impl<F: Real> ExtendedNet<F> {
    pub fn build(tm: &TuringMachine, data: &Dataset, config: NetConfig) -> Result<Self, NetworkError> {
        data.validate()?;
        let (n, big_m, m) = (data.samples(), data.input_dim(), data.output_dim());
        if n * m < 2 {
            return Err(NetworkError::Shape("the label matrix needs at least two entries".into()));
        }
        if !(config.gamma > 0.0) {
            return Err(NetworkError::Constants(format!("gamma = {} must be positive", config.gamma)));
        }
        let net = primary_net::<F>(config.primary, big_m, m);
        let codec = config.codec;
        let window = config.window.unwrap_or_else(|| ThetaWindow::copied_labels(codec, n * big_m));
        let count = codec.word_len() * net.weight_dim();
        let bits = payload(codec, data)?;
        let tau = config.tau.unwrap_or(bits.len() + 5);
        let machine = match config.construction {
            Construction::External => triple_states(tm),
            Construction::Internal => tm.clone(),
        };
        if window.tape >= machine.tape_count() || (count > 0 && window.start + window.stride * (count - 1) >= tau) {
            return Err(NetworkError::Shape(format!("weight window {window:?} with {count} bits leaves the tapes")));
        }
        let c0 = make_initial(&machine, &bits, tau)?;
        let oracle = run(&machine, &c0, config.max_machine_steps)?;
        if !oracle.halted {
            return Err(NetworkError::NoHalt(config.max_machine_steps));
        }

        let mut g = Graph::new();
        let s_dim;
        let branch;
        let mut initial = BTreeMap::new();
        let x = g.input("x", n * big_m);
        let z = g.param(Block::Z, n * m);
        let probe = g.param(Block::Probe, net.weight_dim());
        let common = Common { x, z, probe };
        let (loss_tm, theta_raw, tapes, switch);
        match config.construction {
            Construction::External => {
                let d = machine.tape_count();
                let gamma = F::from_f64_lossy(config.gamma);
                let mut params = match config.b {
                    Some(b) => ExternalParams::with_b(b, d, gamma, true)?,
                    None => ExternalParams::choose(d, gamma, true),
                };
                if let Some(c) = config.c {
                    params = params.with_c(F::from_f64_lossy(c))?;
                }
                let loss = TapeLoss::build(&machine, tau, params)?;
                s_dim = loss.dim();
                switch = SwitchParams::from_gap(
                    params.halting_ceiling().real(),
                    params.nonhalting_floor().real(),
                    data.epsilon(),
                )?;
                // The first read must not depend on the labels.
                let blank_labels = make_initial(&machine, &payload(codec, &Dataset { y: vec![vec![0.0; m]; n], ..data.clone() })?, tau)?;
                if blank_labels.read() != c0.read() {
                    return Err(NetworkError::Shape("the symbols under the initial heads depend on the labels".into()));
                }
                let st = loss.encode(&c0)?;
                let input = machine.input_tape();
                let mut t0 = Vec::with_capacity(d * tau);
                for (j, col) in st.tapes.iter().enumerate() {
                    if j == input {
                        t0.extend(std::iter::repeat(-F::one()).take(tau));
                    } else {
                        t0.extend_from_slice(col);
                    }
                }
                initial.insert(Block::S, st.s.to_dense());
                initial.insert(Block::T, t0);
                initial.insert(Block::H, st.heads.concat());
                let s = g.param(Block::S, s_dim);
                let (ell, t_eff) = external_loss(&mut g, &loss, s, &common, codec, n * big_m + n * m)?;
                loss_tm = ell;
                tapes = Some(t_eff);
                theta_raw = g.decode(t_eff, codec, window.tape * tau + window.start, window.stride, count);
                branch = Branch::External { loss };
            }
            Construction::Internal => {
                let sg = StateGraph::build(&machine, tau, std::slice::from_ref(&c0), GraphMode::Reachable, config.max_machine_steps)?;
                let ladder: Vec<F> = default_ladder(sg.horizon());
                let weights = WeightAssignment::new(&sg, ladder.clone())?;
                let loss = Arc::new(weights.build_loss()?);
                s_dim = loss.dim();
                switch = SwitchParams::from_gap(ladder[0].real(), ladder[1].real(), data.epsilon())?;
                let v0 = sg.index_of(&c0).expect("initial configuration is a vertex");
                initial.insert(Block::S, SimplexPoint::<F>::vertex(s_dim, v0).to_dense());
                let s = g.param(Block::S, s_dim);
                loss_tm = g.simplex_loss(s, loss.clone());
                tapes = None;
                let mut entries = Vec::new();
                for v in 0..sg.len() {
                    let tape = &sg.vertex(v).tapes[window.tape];
                    for (k, cell) in window.cells(count).enumerate() {
                        entries.push((k, v, F::from_int(i64::from(tape[cell].value()))));
                    }
                }
                let cells = g.linear(vec![(s, Sparse::new(count, s_dim, entries))], vec![F::zero(); count]);
                theta_raw = g.decode(cells, codec, 0, 1, count);
                branch = Branch::Internal { graph: sg, loss };
            }
        }
        initial.insert(Block::Z, vec![F::zero(); n * m]);
        initial.insert(Block::Probe, vec![F::zero(); net.weight_dim()]);
        let nodes = wrap(&mut g, &common, net.clone(), n, loss_tm, theta_raw, tapes, &switch);
        Ok(ExtendedNet {
            graph: g,
            nodes,
            branch,
            config,
            switch,
            data: data.clone(),
            net,
            machine,
            tau,
            window,
            oracle,
            initial,
        })
    }

    /// `k_t`, the number of machine steps on `[x | y]`.
    pub fn machine_steps(&self) -> usize {
        self.oracle.steps()
    }

    pub fn simplex_dim(&self) -> usize {
        self.graph.len_of(self.graph.param_node(Block::S).expect("s block"))
    }

    /// Trainable scalars: simplex coordinates, tape and head variables, and
    /// the label copy `z`. The probe block is not trainable.
    pub fn trainable_dim(&self) -> usize {
        self.graph
            .blocks()
            .filter(|(b, _)| *b != Block::Probe)
            .map(|(_, len)| len)
            .sum()
    }

    pub fn depth(&self) -> usize {
        self.graph.depth().expect("output is set")
    }

    pub fn feed(&self, params: &BTreeMap<Block, Vec<F>>) -> Feed<F> {
        let mut inputs = BTreeMap::new();
        inputs.insert("x".to_string(), cast(&self.data.flat_x()));
        Feed {
            params: params.clone(),
            inputs,
        }
    }

    pub fn forward(&self, params: &BTreeMap<Block, Vec<F>>) -> Result<Vec<F>, NetworkError> {
        Ok(self.graph.run(&self.feed(params))?)
    }

    /// `f_{TM(x,y)}(x)`: the primary network at the weights the simulator
    /// leaves in the window.
    pub fn direct_output(&self) -> Result<Vec<F>, NetworkError> {
        let count = self.config.codec.word_len() * self.net.weight_dim();
        let theta = read_theta(self.config.codec, &self.window, count, self.oracle.last())?;
        Ok(self.net.forward(&cast(&theta), &cast(&self.data.flat_x())))
    }

    /// Machine state held by `s`, `T` and `H` (external), or by `s` alone
    /// (internal). `tapes` is the loss-side tape matrix from a forward pass.
    pub fn configuration(&self, params: &BTreeMap<Block, Vec<F>>, tapes: Option<&[F]>) -> Result<Configuration, String> {
        let s = SimplexPoint::from_dense(&params[&Block::S]).map_err(|e| e.to_string())?;
        match &self.branch {
            Branch::Internal { graph, .. } => {
                let v = s.as_vertex().ok_or("s is not a vertex")?;
                Ok(graph.vertex(v).clone())
            }
            Branch::External { loss } => {
                let tau = self.tau;
                let split = |flat: &[F]| flat.chunks(tau).map(<[F]>::to_vec).collect::<Vec<_>>();
                let st = MachineState {
                    s,
                    tapes: split(tapes.ok_or("tape matrix missing")?),
                    heads: split(&params[&Block::H]),
                };
                loss.decode(&st)
            }
        }
    }
}

/// Loss of the external construction on the effective tape matrix, whose
/// input column is the encoded `[x | z]` and whose other columns are `T`.
fn external_loss<F: Real>(
    g: &mut Graph<F>,
    loss: &TapeLoss<F>,
    s: NodeId,
    common: &Common,
    codec: FloatCodec,
    words: usize,
) -> Result<(NodeId, NodeId), NetworkError> {
    let tm = loss.machine();
    let (d, tau, dim) = (loss.tapes(), loss.tau(), loss.dim());
    let dt = d * tau;
    let zero = |k: usize| vec![F::zero(); k];
    let p = *loss.params();
    let b = p.b_scalar();
    let gamma = p.gamma;

    let xz = g.linear(
        vec![
            (common.x, Sparse::embed(words, g.len_of(common.x), 0)),
            (common.z, Sparse::embed(words, g.len_of(common.z), g.len_of(common.x))),
        ],
        zero(words),
    );
    let ro = g.encode(xz, codec, tau, 1, true);
    g.set_label(ro, "input tape");
    let t = g.param(Block::T, dt);
    let h = g.param(Block::H, dt);
    let input = tm.input_tape();
    let keep: Vec<(usize, usize, F)> = (0..dt).filter(|i| i / tau != input).map(|i| (i, i, F::one())).collect();
    let t_eff = g.linear(
        vec![(ro, Sparse::embed(dt, tau, input * tau)), (t, Sparse::new(dt, dt, keep))],
        zero(dt),
    );
    g.set_label(t_eff, "tapes");

    // S(x) H: for each tape and head offset, the mass of vertices moving by
    // that offset times the shifted indicator column.
    let mut shifted_parts = Vec::new();
    for j in 0..d {
        for mv in [Move::Left, Move::Right] {
            let off = mv.offset();
            let movers: Vec<(usize, usize, F)> = (0..dim)
                .filter(|&v| loss.moves_of(v)[j] == mv)
                .map(|v| (0, v, F::one()))
                .collect();
            if movers.is_empty() {
                continue;
            }
            let mass = g.linear(vec![(s, Sparse::new(1, dim, movers))], zero(1));
            let mass = g.replicate(mass, tau);
            let shift: Vec<(usize, usize, F)> = (0..tau as i64)
                .filter(|&i| (0..tau as i64).contains(&(i - off)))
                .map(|i| (i as usize, j * tau + (i - off) as usize, F::one()))
                .collect();
            let moved = g.linear(vec![(h, Sparse::new(tau, dt, shift))], zero(tau));
            let part = g.product(mass, moved);
            shifted_parts.push((part, Sparse::embed(dt, tau, j * tau)));
        }
    }
    let sh = g.linear(shifted_parts, zero(dt));
    g.set_label(sh, "shifted heads");

    let column_sums = Sparse::new(d, dt, (0..dt).map(|i| (i / tau, i, F::one())).collect());
    let by_vertex = |f: &dyn Fn(usize) -> Vec<F>| {
        let mut e = Vec::new();
        for v in 0..dim {
            for (j, x) in f(v).into_iter().enumerate() {
                if !x.is_zero() {
                    e.push((j, v, x));
                }
            }
        }
        Sparse::new(d, dim, e)
    };
    let write_map = by_vertex(&|v| loss.write_of(v));
    let down_map = by_vertex(&|v| {
        let mut col = vec![F::zero(); d];
        for &(i, x) in &loss.down_columns()[v] {
            col[i] = x;
        }
        col
    });
    let neg = |a: Sparse<F>| Sparse::new(a.rows, a.cols, a.entries.into_iter().map(|(r, c, x)| (r, c, -x)).collect());

    // Write: diag(T^T sg(H)) against sg(T_write s).
    let sg_h = g.stop_gradient(h);
    let at_heads = g.product(t_eff, sg_h);
    let written = g.linear(vec![(s, write_map)], zero(d));
    let sg_written = g.stop_gradient(written);
    let write_res = g.linear(vec![(at_heads, column_sums.clone()), (sg_written, Sparse::scaled_identity(d, -F::one()))], zero(d));
    let write = g.square_norm(write_res);

    // Read: sg(diag(T^T S(s) H)) against T_down s.
    let at_next = g.product(t_eff, sh);
    let read_diag = g.linear(vec![(at_next, column_sums)], zero(d));
    let sg_read = g.stop_gradient(read_diag);
    let read_res = g.linear(vec![(sg_read, Sparse::identity(d)), (s, neg(down_map))], zero(d));
    let read = g.square_norm(read_res);

    // Head: sg(S(s) H) against H.
    let sg_sh = g.stop_gradient(sh);
    let head_res = g.linear(vec![(sg_sh, Sparse::identity(dt)), (h, Sparse::scaled_identity(dt, -F::one()))], zero(dt));
    let head = g.square_norm(head_res);

    let simplex = g.simplex_loss(s, Arc::new(loss.simplex().clone()));
    let half_gamma = gamma * F::half();
    let two = F::from_int(2);
    let ell = g.linear(
        vec![
            (simplex, Sparse::identity(1)),
            (write, Sparse::scaled_identity(1, half_gamma)),
            (read, Sparse::scaled_identity(1, two * b * b * gamma)),
            (head, Sparse::scaled_identity(1, half_gamma)),
        ],
        vec![p.c],
    );
    g.set_label(ell, "machine loss");
    Ok((ell, t_eff))
}

/// `f_TM`, both switches and the primary call.
#[allow(clippy::too_many_arguments)]
fn wrap<F: Real>(
    g: &mut Graph<F>,
    common: &Common,
    net: Arc<dyn PrimaryNetwork<F>>,
    samples: usize,
    loss_tm: NodeId,
    theta_raw: NodeId,
    tapes: Option<NodeId>,
    switch: &SwitchParams,
) -> NetNodes {
    let width = g.len_of(common.z);
    let theta = g.add(theta_raw, common.probe);
    g.set_label(theta, "primary weights");
    let primary = g.primary(theta, common.x, net, samples);
    let twice = g.scale(loss_tm, F::from_int(2));
    let radius = g.sqrt(twice);
    let radius = g.replicate(radius, width);
    let z_frozen = g.stop_gradient(common.z);
    let perp = g.ortho_unit(z_frozen);
    let f_tm = g.product(radius, perp);
    g.set_label(f_tm, "f_TM");
    let knots = |k: [(f64, f64); 2]| k.iter().map(|&(a, b)| (F::from_f64_lossy(a), F::from_f64_lossy(b))).collect();
    let u2 = g.square_norm(f_tm);
    let phi = g.cutoff(u2, knots(switch.phi_knots()));
    g.set_label(phi, "phi");
    let s_net = g.blend(phi, primary, f_tm);
    let z2 = g.square_norm(common.z);
    let psi = g.cutoff(z2, knots(switch.psi_knots()));
    g.set_label(psi, "psi");
    let output = g.blend(psi, s_net, common.z);
    g.set_label(output, "output");
    g.set_output(output);
    NetNodes {
        output,
        primary,
        f_tm,
        loss_tm,
        theta,
        phi,
        psi,
        tapes,
    }
}
