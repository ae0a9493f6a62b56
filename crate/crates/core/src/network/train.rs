use serde::Serialize;

use crate::engine::Block;
use crate::tm::Configuration;
use crate::Real;

use super::{Construction, ExtendedNet, NetworkError, SwitchParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrainOptions {
    pub max_steps: usize,
    /// Keep the decoded machine configuration of every step in the report.
    pub snapshots: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            max_steps: 100_000,
            snapshots: false,
        }
    }
}

/// State after `step` updates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    /// `1/2 ||out - y||^2`.
    pub loss: f64,
    pub machine_loss: f64,
    pub psi: f64,
    pub phi: f64,
    /// `s_init` still passes `z` through.
    pub labels_pending: bool,
    /// `s_net` shows the machine branch.
    pub machine_branch: bool,
    pub vertex: usize,
    /// Largest gradient entry on the primary weights; absent at the final
    /// state, where no gradient is taken.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_gradient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<Configuration>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainReport {
    pub construction: Construction,
    pub machine_steps: usize,
    pub steps: usize,
    pub steps_match: bool,
    pub switch: SwitchParams,
    pub trainable_dim: usize,
    pub depth: usize,
    pub z_written_once: bool,
    pub weight_gradient_zero: bool,
    pub init_flips: Vec<usize>,
    pub net_flips: Vec<usize>,
    /// Steps `1..` hold the simulator configurations `0..` in order.
    pub trace_matches_simulator: bool,
    pub labels: Vec<f64>,
    pub final_output: Vec<f64>,
    pub direct_output: Vec<f64>,
    pub output_matches_direct: bool,
    pub output_equals_labels: bool,
    pub records: Vec<StepRecord>,
}

fn to_f64<F: Real>(v: &[F]) -> Vec<f64> {
    v.iter().map(|&x| x.real()).collect()
}

fn flips(flags: impl Iterator<Item = bool>) -> Vec<usize> {
    let flags: Vec<bool> = flags.collect();
    (1..flags.len()).filter(|&k| flags[k] != flags[k - 1]).collect()
}

fn bit_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits() || (*x == 0.0 && *y == 0.0))
}

/// Frank-Wolfe on `s` (corner chosen by one-sided derivatives of the
/// output loss, ties keep `s`), plain gradient steps on `T`, `H` with rate
/// `1/gamma` and on `z` with rate 1. Stops once `1/2 ||out - y||^2` drops
/// to the stopping threshold after an update.
pub fn train<F: Real>(net: &ExtendedNet<F>, opts: TrainOptions) -> Result<TrainReport, NetworkError> {
    let g = &net.graph;
    let y: Vec<F> = net.data.flat_y().iter().map(|&t| F::from_f64_lossy(t)).collect();
    let b_stop = net.switch.b_stop;
    let inv_gamma = F::one() / F::from_f64_lossy(net.config.gamma);
    let blocks: Vec<Block> = [Block::T, Block::H, Block::Z, Block::Probe]
        .into_iter()
        .filter(|b| g.param_node(*b).is_some())
        .collect();
    let oracle = &net.oracle.configs;

    let mut params = net.initial.clone();
    let mut records: Vec<StepRecord> = Vec::new();
    let mut zs: Vec<Vec<F>> = Vec::new();
    let mut matches = true;
    for step in 0.. {
        let vals = g.eval(&net.feed(&params))?;
        let out = &vals[net.nodes.output.0];
        let seed: Vec<F> = out.iter().zip(&y).map(|(&o, &t)| o - t).collect();
        let loss = seed.iter().fold(F::zero(), |a, &r| a + r * r).real() / 2.0;
        let s = &params[&Block::S];
        let v = (0..s.len()).find(|&k| s[k].is_one()).ok_or(NetworkError::NotVertex(step))?;
        let config = net.configuration(&params, net.nodes.tapes.map(|id| vals[id.0].as_slice()));
        if step >= 1 {
            matches &= config.as_ref().ok() == oracle.get(step - 1);
        }
        records.push(StepRecord {
            step,
            loss,
            machine_loss: vals[net.nodes.loss_tm.0][0].real(),
            psi: vals[net.nodes.psi.0][0].real(),
            phi: vals[net.nodes.phi.0][0].real(),
            labels_pending: vals[net.nodes.psi.0][0].real() > 0.5,
            machine_branch: vals[net.nodes.phi.0][0].real() > 0.5,
            vertex: v,
            weight_gradient: None,
            config: if opts.snapshots { config.ok() } else { None },
        });
        zs.push(params[&Block::Z].clone());
        if loss <= b_stop {
            if step == 0 {
                return Err(NetworkError::StopsAtStart(loss));
            }
            break;
        }
        if step >= opts.max_steps {
            return Err(NetworkError::NoStop(opts.max_steps));
        }

        let grads = g.vjp(&vals, &seed, &blocks)?;
        let m = s.len();
        let mut best = (F::zero(), v);
        let mut dir = vec![F::zero(); m];
        for u in (0..m).filter(|&u| u != v) {
            dir[u] = F::one();
            dir[v] = -F::one();
            let t = g.jvp(&vals, Block::S, &dir)?;
            dir[u] = F::zero();
            let d = seed.iter().zip(&t).fold(F::zero(), |a, (&r, &x)| a + r * x);
            if d < best.0 {
                best = (d, u);
            }
        }
        let probe = &grads[&Block::Probe];
        records.last_mut().expect("pushed above").weight_gradient =
            Some(probe.iter().fold(0.0f64, |a, x| a.max(x.real().abs())));

        let mut next_s = vec![F::zero(); m];
        next_s[best.1] = F::one();
        params.insert(Block::S, next_s);
        for (b, rate) in [(Block::T, inv_gamma), (Block::H, inv_gamma), (Block::Z, F::one())] {
            if let Some(grad) = grads.get(&b) {
                let p = params.get_mut(&b).expect("block has values");
                for (x, &d) in p.iter_mut().zip(grad) {
                    *x = *x - rate * d;
                }
            }
        }
    }

    let steps = records.len() - 1;
    let final_output = to_f64(&net.forward(&params)?);
    let direct_output = to_f64(&net.direct_output()?);
    let labels = net.data.flat_y();
    let z_written_once = zs.len() >= 2 && zs[1..].iter().all(|z| bit_equal(&to_f64(z), &labels));
    Ok(TrainReport {
        construction: net.config.construction,
        machine_steps: net.machine_steps(),
        steps,
        steps_match: steps == net.machine_steps() + 1,
        switch: net.switch,
        trainable_dim: net.trainable_dim(),
        depth: net.depth(),
        z_written_once,
        weight_gradient_zero: records.iter().all(|r| r.weight_gradient.is_none_or(|x| x == 0.0)),
        init_flips: flips(records.iter().map(|r| r.labels_pending)),
        net_flips: flips(records.iter().map(|r| r.machine_branch)),
        trace_matches_simulator: matches && steps == oracle.len(),
        output_matches_direct: bit_equal(&final_output, &direct_output),
        output_equals_labels: bit_equal(&final_output, &labels),
        labels,
        final_output,
        direct_output,
        records,
    })
}
