use crate::Scalar;

use super::SimplexError;

/// Point of the standard simplex in `R^dim`, stored by its nonzero
/// barycentric coordinates in increasing index order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint<S> {
    dim: usize,
    entries: Vec<(usize, S)>,
}

impl<S: Scalar> SimplexPoint<S> {
    /// The vertex `e_v`.
    pub fn vertex(dim: usize, v: usize) -> Self {
        assert!(v < dim, "vertex {v} outside dimension {dim}");
        SimplexPoint {
            dim,
            entries: vec![(v, S::one())],
        }
    }

    /// `e_vw^mu = (1 - mu) e_v + mu e_w`.
    pub fn edge_point(dim: usize, v: usize, w: usize, mu: S) -> Self {
        Self::combine(mu, &Self::vertex(dim, v), &Self::vertex(dim, w))
    }

    pub fn barycenter(dim: usize) -> Self {
        let share = S::one() / S::from_int(dim as i64);
        SimplexPoint {
            dim,
            entries: (0..dim).map(|k| (k, share)).collect(),
        }
    }

    /// `(1 - lambda) a + lambda b`.
    pub fn combine(lambda: S, a: &Self, b: &Self) -> Self {
        assert_eq!(a.dim, b.dim, "points from different simplices");
        let keep = S::one() - lambda;
        let mut entries: Vec<(usize, S)> = Vec::with_capacity(a.entries.len() + b.entries.len());
        let (mut i, mut j) = (0, 0);
        while i < a.entries.len() || j < b.entries.len() {
            let next = match (a.entries.get(i), b.entries.get(j)) {
                (Some(&(ka, va)), Some(&(kb, vb))) if ka == kb => {
                    i += 1;
                    j += 1;
                    (ka, keep * va + lambda * vb)
                }
                (Some(&(ka, va)), Some(&(kb, _))) if ka < kb => {
                    i += 1;
                    (ka, keep * va)
                }
                (Some(&(ka, va)), None) => {
                    i += 1;
                    (ka, keep * va)
                }
                (_, Some(&(kb, vb))) => {
                    j += 1;
                    (kb, lambda * vb)
                }
                (None, None) => unreachable!(),
            };
            if !next.1.is_zero() {
                entries.push(next);
            }
        }
        SimplexPoint { dim: a.dim, entries }
    }

    /// Accepts nonnegative coordinates summing to one (exactly for exact
    /// scalars, within `1e-12` otherwise).
    pub fn from_dense(coords: &[S]) -> Result<Self, SimplexError> {
        let mut total = S::zero();
        let mut entries = Vec::new();
        for (k, &c) in coords.iter().enumerate() {
            if c < S::zero() {
                return Err(SimplexError::NotInSimplex(format!("coordinate {k} is negative ({c})")));
            }
            total = total + c;
            if !c.is_zero() {
                entries.push((k, c));
            }
        }
        let off = (total - S::one()).abs();
        let tol_ok = if S::is_exact() { off.is_zero() } else { off.to_f64() <= 1e-12 };
        if !tol_ok || coords.is_empty() {
            return Err(SimplexError::NotInSimplex(format!("coordinates sum to {total}")));
        }
        Ok(SimplexPoint {
            dim: coords.len(),
            entries,
        })
    }

    pub fn to_dense(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        for &(k, c) in &self.entries {
            out[k] = c;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize) -> S {
        self.entries
            .binary_search_by_key(&k, |e| e.0)
            .map_or_else(|_| S::zero(), |i| self.entries[i].1)
    }

    pub fn entries(&self) -> &[(usize, S)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    /// Index `v` if the point is the vertex `e_v`.
    pub fn as_vertex(&self) -> Option<usize> {
        match self.entries.as_slice() {
            [(v, c)] if c.is_one() => Some(*v),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    type Q = Rational;

    #[test]
    fn edge_points_and_vertices() {
        let p = SimplexPoint::<Q>::edge_point(4, 0, 2, Q::new(1, 4));
        assert_eq!(p.to_dense(), vec![Q::new(3, 4), Q::from(0), Q::new(1, 4), Q::from(0)]);
        assert_eq!(p.as_vertex(), None);
        assert_eq!(SimplexPoint::<Q>::edge_point(4, 1, 3, Q::from(1)).as_vertex(), Some(3));
        assert_eq!(SimplexPoint::<Q>::edge_point(4, 1, 1, Q::new(1, 2)).as_vertex(), Some(1));
    }

    #[test]
    fn dense_round_trip_and_validation() {
        let b = SimplexPoint::<f64>::barycenter(3);
        let again = SimplexPoint::from_dense(&b.to_dense()).unwrap();
        assert_eq!(again, b);
        assert!(SimplexPoint::from_dense(&[0.5, 0.6]).is_err());
        assert!(SimplexPoint::from_dense(&[1.5, -0.5]).is_err());
        assert!(SimplexPoint::<Q>::from_dense(&[Q::new(1, 3), Q::new(2, 3)]).is_ok());
    }

    #[test]
    fn combine_is_sparse() {
        let a = SimplexPoint::<f64>::vertex(10, 7);
        let b = SimplexPoint::<f64>::vertex(10, 2);
        let c = SimplexPoint::combine(0.25, &a, &b);
        assert_eq!(c.entries(), &[(2, 0.25), (7, 0.75)]);
        assert_eq!(c.get(5), 0.0);
    }
}
