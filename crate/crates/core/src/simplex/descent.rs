//! Frank-Wolfe primitives on corner-affine losses.

use crate::Scalar;

use super::{SimplexLoss, SimplexPoint};

/// `(l((1 - mu) x + mu y) - l(x)) / mu`.
///
/// For a loss that is affine on the corner at `x` this is the exact
/// one-sided derivative in direction `y - x`.
pub fn dir_deriv<S: Scalar>(loss: &SimplexLoss<S>, x: &SimplexPoint<S>, y: &SimplexPoint<S>, mu: S) -> S {
    let moved = SimplexPoint::combine(mu, x, y);
    (loss.eval(&moved) - loss.eval(x)) / mu
}

/// Quadratic coupling `coeff/2 * ||A x - target||^2` with `A` stored by
/// columns, one column per simplex vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic<S> {
    pub rows: usize,
    pub columns: Vec<Vec<(usize, S)>>,
    pub target: Vec<S>,
    pub coeff: S,
}

impl<S: Scalar> Quadratic<S> {
    pub fn new(rows: usize, columns: Vec<Vec<(usize, S)>>, target: Vec<S>, coeff: S) -> Self {
        assert_eq!(target.len(), rows, "target length must equal row count");
        assert!(columns.iter().flatten().all(|&(r, _)| r < rows), "column entry out of range");
        Quadratic {
            rows,
            columns,
            target,
            coeff,
        }
    }

    /// `(A e_v - target)^T A e_u`.
    pub fn residual_dot(&self, v: usize, u: usize) -> S {
        let mut residual = self.target.iter().map(|&t| -t).collect::<Vec<_>>();
        for &(r, a) in &self.columns[v] {
            residual[r] = residual[r] + a;
        }
        self.columns[u].iter().fold(S::zero(), |acc, &(r, a)| acc + residual[r] * a)
    }

    /// `coeff/2 * ||A x - target||^2`.
    pub fn value(&self, x: &SimplexPoint<S>) -> S {
        let mut ax = vec![S::zero(); self.rows];
        for &(k, c) in x.entries() {
            for &(r, a) in &self.columns[k] {
                ax[r] = ax[r] + a * c;
            }
        }
        let sq = ax.iter().zip(&self.target).fold(S::zero(), |acc, (&a, &t)| acc + (a - t) * (a - t));
        self.coeff * sq / S::from_int(2)
    }
}

/// Value minimised over `u` by [`corner_argmin`]:
/// `l((1 - mu) e_v + mu e_u) + coeff * mu * (A e_v - target)^T A e_u`.
pub fn corner_objective<S: Scalar>(
    loss: &SimplexLoss<S>,
    v: usize,
    mu: S,
    quad: Option<&Quadratic<S>>,
    u: usize,
) -> S {
    let m = loss.dim();
    let point = SimplexPoint::edge_point(m, v, u, mu);
    let coupling = quad.map_or(S::zero(), |q| q.coeff * mu * q.residual_dot(v, u));
    loss.eval(&point) + coupling
}

/// Frank-Wolfe vertex at `e_v`: the minimiser of [`corner_objective`] over
/// all vertices. Staying at `v` wins ties, otherwise the lowest index.
pub fn corner_argmin<S: Scalar>(loss: &SimplexLoss<S>, v: usize, mu: S, quad: Option<&Quadratic<S>>) -> usize {
    let mut best = v;
    let mut best_value = corner_objective(loss, v, mu, quad, v);
    for u in 0..loss.dim() {
        if u == v {
            continue;
        }
        let value = corner_objective(loss, v, mu, quad, u);
        if value < best_value {
            best = u;
            best_value = value;
        }
    }
    best
}

/// Exact minimisation of the loss on the segment `x -> y`. The loss is
/// piecewise linear there, so the minimum sits on a breakpoint. Returns the
/// step and the attained value; ties go to the longest step.
pub fn line_search<S: Scalar>(loss: &SimplexLoss<S>, x: &SimplexPoint<S>, y: &SimplexPoint<S>) -> (S, S) {
    let mut best = (S::zero(), loss.eval(x));
    for alpha in loss.segment_breakpoints(x, y) {
        let value = loss.eval(&SimplexPoint::combine(alpha, x, y));
        if value <= best.1 {
            best = (alpha, value);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::Basis;
    use crate::Rational;

    type Q = Rational;

    fn q(n: i64, d: i64) -> Q {
        <Q as Scalar>::ratio(n, d)
    }

    #[test]
    fn linear_loss_derivative() {
        let mut l = SimplexLoss::new(2);
        l.push(q(2, 1), Basis::Hat { v: 0, mu: q(1, 1) }).unwrap();
        l.push(q(5, 1), Basis::Hat { v: 1, mu: q(1, 1) }).unwrap();
        let (e0, e1) = (SimplexPoint::vertex(2, 0), SimplexPoint::vertex(2, 1));
        assert_eq!(dir_deriv(&l, &e0, &e1, q(1, 2)), q(3, 1));
        assert_eq!(dir_deriv(&l, &e0, &e0, q(1, 2)), q(0, 1));
    }

    #[test]
    fn argmin_examples() {
        // Corner values toward 0, 1, 2 from vertex 0 are 0, -1, -3.
        let mut l = SimplexLoss::new(3);
        l.push(q(-4, 1), Basis::Hat { v: 1, mu: q(1, 1) }).unwrap();
        l.push(q(-12, 1), Basis::Hat { v: 2, mu: q(1, 1) }).unwrap();
        let mu = q(1, 4);
        let vals: Vec<Q> = (0..3).map(|u| corner_objective(&l, 0, mu, None, u)).collect();
        assert_eq!(vals, vec![q(0, 1), q(-1, 1), q(-3, 1)]);
        assert_eq!(corner_argmin(&l, 0, mu, None), 2);

        let flat = SimplexLoss::<Q>::new(4);
        assert_eq!(corner_argmin(&flat, 2, mu, None), 2);

        let ident = (0..3).map(|k| vec![(k, q(1, 1))]).collect();
        let quad = Quadratic::new(3, ident, vec![q(0, 1), q(1, 1), q(0, 1)], q(1, 1));
        assert_eq!(corner_argmin(&SimplexLoss::new(3), 0, q(1, 1), Some(&quad)), 1);
    }

    #[test]
    fn line_search_prefers_longest_step() {
        let mut l = SimplexLoss::new(3);
        l.push(q(1, 1), Basis::Hat { v: 0, mu: q(1, 2) }).unwrap();
        let (a, v) = line_search(&l, &SimplexPoint::vertex(3, 0), &SimplexPoint::vertex(3, 1));
        assert_eq!((a, v), (q(1, 1), q(0, 1)));
    }
}
