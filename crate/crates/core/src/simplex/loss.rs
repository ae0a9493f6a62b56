use std::collections::HashMap;

use crate::Scalar;

use super::{Basis, SimplexError, SimplexPoint};

#[derive(Debug, Clone, PartialEq)]
pub struct Term<S> {
    pub weight: S,
    pub basis: Basis<S>,
}

/// Weighted sum of basis functions over the simplex of dimension `dim`.
///
/// A basis function vanishes on every face that misses one of its required
/// vertices, so terms are indexed by those vertices and evaluation only
/// visits the terms supported on the face of the argument.
#[derive(Debug, Clone, Default)]
pub struct SimplexLoss<S> {
    dim: usize,
    terms: Vec<Term<S>>,
    by_vertex: HashMap<usize, Vec<usize>>,
    by_pair: HashMap<(usize, usize), Vec<usize>>,
}

impl<S: Scalar> SimplexLoss<S> {
    pub fn new(dim: usize) -> Self {
        SimplexLoss {
            dim,
            terms: Vec::new(),
            by_vertex: HashMap::new(),
            by_pair: HashMap::new(),
        }
    }

    pub fn push(&mut self, weight: S, basis: Basis<S>) -> Result<(), SimplexError> {
        basis.validate(self.dim)?;
        let id = self.terms.len();
        match basis.required() {
            (v, None) => self.by_vertex.entry(v).or_default().push(id),
            (v, Some(w)) => self.by_pair.entry((v.min(w), v.max(w))).or_default().push(id),
        }
        self.terms.push(Term { weight, basis });
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term<S>] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Ids of the terms that can be nonzero on the face spanned by `face`.
    pub fn terms_on_face(&self, face: &[usize]) -> Vec<usize> {
        let mut ids = Vec::new();
        for (i, &v) in face.iter().enumerate() {
            if let Some(list) = self.by_vertex.get(&v) {
                ids.extend_from_slice(list);
            }
            for &w in &face[i + 1..] {
                if w == v {
                    continue;
                }
                if let Some(list) = self.by_pair.get(&(v.min(w), v.max(w))) {
                    ids.extend_from_slice(list);
                }
            }
        }
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    fn check(&self, x: &SimplexPoint<S>) {
        assert_eq!(x.dim(), self.dim, "point dimension does not match loss");
    }

    pub fn eval(&self, x: &SimplexPoint<S>) -> S {
        self.check(x);
        let face: Vec<usize> = x.support().collect();
        self.terms_on_face(&face)
            .into_iter()
            .fold(S::zero(), |a, id| a + self.terms[id].weight * self.terms[id].basis.eval(x))
    }

    /// Evaluates every term, ignoring the face index.
    pub fn eval_all(&self, x: &SimplexPoint<S>) -> S {
        self.check(x);
        self.terms.iter().fold(S::zero(), |a, t| a + t.weight * t.basis.eval(x))
    }

    /// One-sided directional derivative at `x` along the sparse direction
    /// `dir` (entries sorted or not; zero-sum for directions in the simplex).
    pub fn jvp(&self, x: &SimplexPoint<S>, dir: &[(usize, S)]) -> S {
        self.check(x);
        let mut face: Vec<usize> = x.support().chain(dir.iter().map(|e| e.0)).collect();
        face.sort_unstable();
        face.dedup();
        self.terms_on_face(&face)
            .into_iter()
            .fold(S::zero(), |a, id| a + self.terms[id].weight * self.terms[id].basis.jvp(x, dir))
    }

    /// `0`, `1` and every kink of the loss on the segment `x -> y`, sorted.
    pub fn segment_breakpoints(&self, x: &SimplexPoint<S>, y: &SimplexPoint<S>) -> Vec<S> {
        self.check(x);
        self.check(y);
        let mut face: Vec<usize> = x.support().chain(y.support()).collect();
        face.sort_unstable();
        face.dedup();
        let mut out = vec![S::zero(), S::one()];
        for id in self.terms_on_face(&face) {
            self.terms[id].basis.kinks(x, y, &mut out);
        }
        out.sort_by(|a, b| a.partial_cmp(b).expect("breakpoints are ordered"));
        out.dedup();
        out
    }

    /// The loss multiplied by `factor`.
    pub fn scaled(&self, factor: S) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.weight = t.weight * factor;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    type Q = Rational;

    fn q(n: i64, d: i64) -> Q {
        <Q as Scalar>::ratio(n, d)
    }

    fn sample() -> SimplexLoss<Q> {
        let mut l = SimplexLoss::new(5);
        l.push(q(3, 1), Basis::Hat { v: 0, mu: q(1, 2) }).unwrap();
        l.push(q(-2, 1), Basis::EdgeBump { v: 0, w: 2 }).unwrap();
        l.push(q(5, 1), Basis::Profile { v: 3, w: 1 }).unwrap();
        l.push(q(7, 2), Basis::UnsymCorner { v: 4, w: 2, mu: q(1, 4) }).unwrap();
        l
    }

    #[test]
    fn face_index_matches_full_sum() {
        let l = sample();
        for v in 0..5 {
            for w in 0..5 {
                for t in [q(0, 1), q(1, 4), q(1, 2), q(2, 3), q(1, 1)] {
                    let x = SimplexPoint::edge_point(5, v, w, t);
                    assert_eq!(l.eval(&x), l.eval_all(&x));
                }
            }
        }
    }

    #[test]
    fn rejects_invalid_terms() {
        let mut l = SimplexLoss::<f64>::new(3);
        assert!(l.push(1.0, Basis::EdgeBump { v: 1, w: 1 }).is_err());
        assert!(l.push(1.0, Basis::Hat { v: 3, mu: 0.5 }).is_err());
        assert!(l.is_empty());
    }

    #[test]
    fn jvp_matches_difference_quotient_in_corner() {
        let l = sample();
        for v in 0..5 {
            for u in 0..5 {
                let x = SimplexPoint::vertex(5, v);
                let dir = if u == v { vec![] } else { vec![(u, q(1, 1)), (v, q(-1, 1))] };
                let h = q(1, 8);
                let moved = SimplexPoint::edge_point(5, v, u, h);
                assert_eq!(l.jvp(&x, &dir), (l.eval(&moved) - l.eval(&x)) / h, "v={v} u={u}");
            }
        }
    }

    #[test]
    fn breakpoints_bracket_linear_pieces() {
        let l = sample();
        let x = SimplexPoint::vertex(5, 3);
        let y = SimplexPoint::vertex(5, 1);
        let bp = l.segment_breakpoints(&x, &y);
        assert_eq!(bp, vec![q(0, 1), q(1, 4), q(1, 2), q(1, 1)]);
    }
}
