use std::collections::BTreeMap;

use crate::Real;

use super::eval::{cutoff_slope, point};
use super::ortho::{ortho_forward, ortho_jvp, ortho_vjp};
use super::{Block, EngineError, Feed, Graph, NodeId, Op, Values};

fn add_into<F: Real>(slot: &mut Option<Vec<F>>, g: Vec<F>) {
    match slot {
        Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a = *a + b),
        None => *slot = Some(g),
    }
}

/// Product in which an exact zero factor wins over infinities, so a switch
/// that is fully off also blocks non-finite derivatives.
fn strong_mul<F: Real>(a: F, b: F) -> F {
    if a.is_zero() || b.is_zero() {
        F::zero()
    } else {
        a * b
    }
}

impl<F: Real> Graph<F> {
    /// Nodes whose value depends differentiably on one of `blocks`.
    pub fn depends_on(&self, blocks: &[Block]) -> Vec<bool> {
        let mut reach = vec![false; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            reach[i] = match &node.op {
                Op::Param(b) => blocks.contains(b),
                op if op.passes_derivatives() => op.children().iter().any(|c| reach[c.0]),
                _ => false,
            };
        }
        reach
    }

    /// Nodes with a derivative path into `target`.
    pub fn feeds(&self, target: NodeId) -> Vec<bool> {
        let mut live = vec![false; self.nodes.len()];
        live[target.0] = true;
        for i in (0..=target.0).rev() {
            if live[i] && self.nodes[i].op.passes_derivatives() {
                for c in self.nodes[i].op.children() {
                    live[c.0] = true;
                }
            }
        }
        live
    }

    /// Reverse-mode product of `seed` with the Jacobian of the output,
    /// for each requested block. No derivative crosses a stop-gradient or a
    /// quantization barrier, and none flows into graph inputs. `relu` and
    /// the cutoffs use their right derivative at kinks, except that
    /// `relu'(0) = 0`.
    pub fn vjp(&self, vals: &Values<F>, seed: &[F], blocks: &[Block]) -> Result<BTreeMap<Block, Vec<F>>, EngineError> {
        let out = self.output()?;
        if seed.len() != self.nodes[out.0].len {
            return Err(EngineError::Shape {
                node: out.0,
                detail: format!("seed has length {}", seed.len()),
            });
        }
        let reach = self.depends_on(blocks);
        let mut adj: Vec<Option<Vec<F>>> = vec![None; self.nodes.len()];
        if reach[out.0] {
            adj[out.0] = Some(seed.to_vec());
        }
        for i in (0..=out.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let node = &self.nodes[i];
            if let Op::Param(b) = node.op {
                adj[i] = Some(g);
                debug_assert!(blocks.contains(&b));
                continue;
            }
            if !node.op.passes_derivatives() {
                continue;
            }
            let mut send = |id: NodeId, grad: Vec<F>| {
                if reach[id.0] {
                    add_into(&mut adj[id.0], grad);
                }
            };
            let v = |id: NodeId| &vals[id.0];
            match &node.op {
                Op::Linear { terms, .. } => {
                    for (id, a) in terms {
                        if reach[id.0] {
                            let mut grad = vec![F::zero(); self.nodes[id.0].len];
                            a.apply_transpose_into(&g, &mut grad);
                            send(*id, grad);
                        }
                    }
                }
                Op::Relu(a) => {
                    let grad = g.iter().zip(v(*a)).map(|(&gi, &x)| if x > F::zero() { gi } else { F::zero() }).collect();
                    send(*a, grad);
                }
                Op::Sqrt(a) => {
                    let two = F::from_int(2);
                    let grad = g.iter().zip(&vals[i]).map(|(&gi, &s)| gi / (two * s)).collect();
                    send(*a, grad);
                }
                Op::Product(a, b) => {
                    send(*a, g.iter().zip(v(*b)).map(|(&gi, &y)| strong_mul(gi, y)).collect());
                    send(*b, g.iter().zip(v(*a)).map(|(&gi, &x)| strong_mul(gi, x)).collect());
                }
                Op::SquareNorm(a) => {
                    let two_g = F::from_int(2) * g[0];
                    send(*a, v(*a).iter().map(|&x| two_g * x).collect());
                }
                Op::Cutoff { input, knots } => {
                    let grad = g
                        .iter()
                        .zip(v(*input))
                        .map(|(&gi, &t)| strong_mul(gi, cutoff_slope(knots, t, true)))
                        .collect();
                    send(*input, grad);
                }
                Op::OrthoUnit(a) => {
                    let z = v(*a);
                    let info = ortho_forward(z).1;
                    send(*a, ortho_vjp(z, &vals[i], info, &g));
                }
                Op::SimplexLoss { input, loss } => {
                    let x = point(i, v(*input))?;
                    let mut grad = vec![F::zero(); loss.dim()];
                    for term in loss.terms() {
                        for (sign, piece) in term.basis.pieces() {
                            if piece.at(&x) > F::zero() {
                                let c = g[0] * term.weight * sign;
                                for &(k, coeff) in &piece.coeffs {
                                    grad[k] = grad[k] + c * coeff;
                                }
                            }
                        }
                    }
                    send(*input, grad);
                }
                Op::Primary { theta, x, net } => {
                    if reach[theta.0] {
                        send(*theta, net.vjp_theta(v(*theta), v(*x), &g));
                    }
                }
                Op::Input(_) | Op::Param(_) | Op::Constant(_) | Op::StopGradient(_) | Op::Barrier { .. } => {}
            }
        }
        Ok(blocks
            .iter()
            .filter_map(|&b| {
                let id = self.params.get(&b)?;
                let len = self.nodes[id.0].len;
                Some((b, adj[id.0].take().unwrap_or_else(|| vec![F::zero(); len])))
            })
            .collect())
    }

    /// Gradient of a scalar output with respect to each requested block.
    pub fn grad(&self, feed: &Feed<F>, blocks: &[Block]) -> Result<BTreeMap<Block, Vec<F>>, EngineError> {
        let vals = self.eval(feed)?;
        self.vjp(&vals, &[F::one()], blocks)
    }

    /// One-sided directional derivative of the output when `block` moves
    /// along `dir`. Kinks take the slope on the side the tangent points to.
    pub fn jvp(&self, vals: &Values<F>, block: Block, dir: &[F]) -> Result<Vec<F>, EngineError> {
        let out = self.output()?;
        let reach = self.depends_on(&[block]);
        let live = self.feeds(out);
        let mut tan: Vec<Option<Vec<F>>> = vec![None; self.nodes.len()];
        let zero = F::zero();
        for i in 0..=out.0 {
            if !(reach[i] && live[i]) {
                continue;
            }
            let node = &self.nodes[i];
            let v = |id: NodeId| &vals[id.0];
            let t = |id: NodeId| tan[id.0].as_deref();
            let dense = |id: NodeId| -> Vec<F> { t(id).map_or_else(|| vec![zero; self.nodes[id.0].len], <[F]>::to_vec) };
            let result: Option<Vec<F>> = match &node.op {
                Op::Param(b) => {
                    if dir.len() != node.len {
                        return Err(EngineError::Shape {
                            node: i,
                            detail: format!("direction for {b:?} has length {}", dir.len()),
                        });
                    }
                    Some(dir.to_vec())
                }
                Op::Linear { terms, .. } => {
                    let mut acc = vec![zero; node.len];
                    let mut any = false;
                    for (id, a) in terms {
                        if let Some(ti) = t(*id) {
                            a.apply_into(ti, &mut acc);
                            any = true;
                        }
                    }
                    any.then_some(acc)
                }
                Op::Relu(a) => t(*a).map(|ta| {
                    ta.iter()
                        .zip(v(*a))
                        .map(|(&d, &x)| {
                            if x > zero {
                                d
                            } else if x < zero {
                                zero
                            } else {
                                d.relu()
                            }
                        })
                        .collect()
                }),
                Op::Sqrt(a) => {
                    let two = F::from_int(2);
                    t(*a).map(|ta| ta.iter().zip(&vals[i]).map(|(&d, &s)| d / (two * s)).collect())
                }
                Op::Product(a, b) => {
                    if t(*a).is_none() && t(*b).is_none() {
                        None
                    } else {
                        let (da, db) = (dense(*a), dense(*b));
                        Some(
                            (0..node.len)
                                .map(|k| strong_mul(da[k], v(*b)[k]) + strong_mul(db[k], v(*a)[k]))
                                .collect(),
                        )
                    }
                }
                Op::SquareNorm(a) => t(*a).map(|ta| {
                    let two = F::from_int(2);
                    vec![two * ta.iter().zip(v(*a)).fold(zero, |s, (&d, &x)| s + d * x)]
                }),
                Op::Cutoff { input, knots } => t(*input).map(|ta| {
                    ta.iter()
                        .zip(v(*input))
                        .map(|(&d, &x)| strong_mul(d, cutoff_slope(knots, x, d >= zero)))
                        .collect()
                }),
                Op::OrthoUnit(a) => t(*a).map(|ta| {
                    let z = v(*a);
                    ortho_jvp(z, &vals[i], ortho_forward(z).1, ta)
                }),
                Op::SimplexLoss { input, loss } => match t(*input) {
                    Some(ta) => {
                        let x = point(i, v(*input))?;
                        let sparse: Vec<(usize, F)> =
                            ta.iter().enumerate().filter(|e| !e.1.is_zero()).map(|(k, &d)| (k, d)).collect();
                        Some(vec![loss.jvp(&x, &sparse)])
                    }
                    None => None,
                },
                Op::Primary { theta, x, net } => t(*theta).map(|tt| net.jvp_theta(v(*theta), v(*x), tt)),
                Op::Input(_) | Op::Constant(_) | Op::StopGradient(_) | Op::Barrier { .. } => None,
            };
            tan[i] = result;
        }
        Ok(tan[out.0].take().unwrap_or_else(|| vec![zero; self.nodes[out.0].len]))
    }
}
