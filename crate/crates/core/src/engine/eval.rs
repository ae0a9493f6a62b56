use crate::simplex::SimplexPoint;
use crate::Real;

use super::ortho::ortho_forward;
use super::{BarrierKind, EngineError, Feed, Graph, Op, Values};

pub(crate) fn cutoff_value<F: Real>(knots: &[(F, F)], t: F) -> F {
    let (first, last) = (knots[0], knots[knots.len() - 1]);
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let i = knots.iter().position(|k| k.0 > t).expect("t is below the last knot");
    let (a, b) = (knots[i - 1], knots[i]);
    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
}

/// Slope of the cutoff at `t`, taken from the right at knots when
/// `right` is set and from the left otherwise.
pub(crate) fn cutoff_slope<F: Real>(knots: &[(F, F)], t: F, right: bool) -> F {
    let segment = if right {
        knots.iter().position(|k| k.0 > t)
    } else {
        knots.iter().position(|k| k.0 >= t)
    };
    match segment {
        Some(i) if i > 0 => {
            let (a, b) = (knots[i - 1], knots[i]);
            (b.1 - a.1) / (b.0 - a.0)
        }
        _ => F::zero(),
    }
}

pub(crate) fn point<F: Real>(node: usize, s: &[F]) -> Result<SimplexPoint<F>, EngineError> {
    SimplexPoint::from_dense(s).map_err(|e| EngineError::Domain {
        node,
        detail: e.to_string(),
    })
}

impl<F: Real> Graph<F> {
    /// Forward pass; returns the value of every node.
    pub fn eval(&self, feed: &Feed<F>) -> Result<Values<F>, EngineError> {
        let mut vals: Values<F> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let v = |id: super::NodeId| &vals[id.0];
            let out = match &node.op {
                Op::Input(name) => feed
                    .inputs
                    .get(name)
                    .cloned()
                    .ok_or_else(|| EngineError::Missing(format!("input {name}")))?,
                Op::Param(block) => feed
                    .params
                    .get(block)
                    .cloned()
                    .ok_or_else(|| EngineError::Missing(format!("parameter block {block:?}")))?,
                Op::Constant(c) => c.clone(),
                Op::Linear { terms, bias } => {
                    let mut out = bias.clone();
                    for (id, a) in terms {
                        a.apply_into(v(*id), &mut out);
                    }
                    out
                }
                Op::Relu(a) => v(*a).iter().map(|&x| x.relu()).collect(),
                Op::Sqrt(a) => {
                    let x = v(*a);
                    if let Some(bad) = x.iter().find(|&&t| t < F::zero()) {
                        return Err(EngineError::Domain {
                            node: i,
                            detail: format!("square root of {bad}"),
                        });
                    }
                    x.iter().map(|&t| t.sqrt()).collect()
                }
                Op::Product(a, b) => v(*a).iter().zip(v(*b)).map(|(&x, &y)| x * y).collect(),
                Op::SquareNorm(a) => vec![v(*a).iter().fold(F::zero(), |s, &x| s + x * x)],
                Op::Cutoff { input, knots } => v(*input).iter().map(|&t| cutoff_value(knots, t)).collect(),
                Op::StopGradient(a) => v(*a).clone(),
                Op::Barrier { input, kind } => barrier(i, kind, v(*input))?,
                Op::OrthoUnit(a) => ortho_forward(v(*a)).0,
                Op::SimplexLoss { input, loss } => vec![loss.eval(&point(i, v(*input))?)],
                Op::Primary { theta, x, net } => net.forward(v(*theta), v(*x)),
            };
            if out.len() != node.len {
                return Err(EngineError::Shape {
                    node: i,
                    detail: format!("value has length {}, node has {}", out.len(), node.len),
                });
            }
            vals.push(out);
        }
        Ok(vals)
    }

    /// Output value of a forward pass.
    pub fn run(&self, feed: &Feed<F>) -> Result<Vec<F>, EngineError> {
        let out = self.output()?;
        Ok(self.eval(feed)?.swap_remove(out.0))
    }
}

fn barrier<F: Real>(node: usize, kind: &BarrierKind, x: &[F]) -> Result<Vec<F>, EngineError> {
    let codec_err = |source| EngineError::Codec { node, source };
    match *kind {
        BarrierKind::Encode {
            codec,
            tau,
            start,
            framed,
        } => {
            let values: Vec<f64> = x.iter().map(|&t| crate::Scalar::to_f64(t)).collect();
            let bits = codec.quantize_all(&values).map_err(codec_err)?;
            let width = if framed { 2 } else { 1 };
            if start + width * bits.len() > tau {
                return Err(EngineError::Domain {
                    node,
                    detail: format!("{} bits do not fit on {tau} cells from {start}", bits.len()),
                });
            }
            let mut cells = vec![-F::one(); tau];
            for (k, &b) in bits.iter().enumerate() {
                let at = start + width * k;
                if framed {
                    cells[at] = F::one();
                }
                cells[at + width - 1] = if b { F::one() } else { -F::one() };
            }
            Ok(cells)
        }
        BarrierKind::Decode {
            codec,
            start,
            stride,
            count,
        } => {
            let bits: Vec<bool> = (0..count).map(|k| x[start + stride * k] > F::zero()).collect();
            let values = codec.dequantize_all(&bits).map_err(codec_err)?;
            Ok(values
                .into_iter()
                .map(|t| if t.is_finite() { F::from_f64_lossy(t) } else { F::zero() })
                .collect())
        }
    }
}
