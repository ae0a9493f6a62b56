//! Corner basis functions on the standard simplex.
//!
//! Every function is a signed sum of `relu` over affine maps. On the simplex
//! an affine map is determined by its restriction to the hull `sum x = 1`,
//! so the library stores each one in a reduced form that only touches the
//! coordinates it depends on ([`ReducedPiece`]). The dense hyperplane forms
//! ([`AffinePiece`]) are kept for reference and cross-checks.

use crate::Scalar;

use super::{SimplexError, SimplexPoint};

/// `max{0, n^T x - offset}` with a dense normal.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePiece<S> {
    pub normal: Vec<S>,
    pub offset: S,
}

impl<S: Scalar> AffinePiece<S> {
    /// Value before the `relu`.
    pub fn affine(&self, x: &[S]) -> S {
        assert_eq!(x.len(), self.normal.len(), "dimension mismatch");
        self.normal.iter().zip(x).fold(-self.offset, |acc, (&n, &c)| acc + n * c)
    }

    pub fn eval(&self, x: &[S]) -> S {
        self.affine(x).relu()
    }
}

/// Hat function `l_v^mu`: normal `(1/(mu m)) sum_{w != v} (e_v - e_w)`,
/// offset `((1 - mu) m - 1) / (mu m)`.
pub fn hat<S: Scalar>(v: usize, mu: S, m: usize) -> AffinePiece<S> {
    assert!(m >= 2 && v < m);
    let mm = S::from_int(m as i64);
    let scale = S::one() / (mu * mm);
    let normal = (0..m)
        .map(|k| {
            if k == v {
                scale * S::from_int(m as i64 - 1)
            } else {
                -scale
            }
        })
        .collect();
    let offset = ((S::one() - mu) * mm - S::one()) * scale;
    AffinePiece { normal, offset }
}

/// Plane of the edge bump: normal `4 (e_vw - b)` with `e_vw` the edge
/// midpoint and `b` the barycenter, offset `1 - 4/m`.
pub fn edge_plane<S: Scalar>(v: usize, w: usize, m: usize) -> AffinePiece<S> {
    assert!(m >= 3 && v < m && w < m && v != w);
    let four = S::from_int(4);
    let bary = S::one() / S::from_int(m as i64);
    let normal = (0..m)
        .map(|k| {
            let mid = if k == v || k == w { S::half() } else { S::zero() };
            four * (mid - bary)
        })
        .collect();
    AffinePiece {
        normal,
        offset: S::one() - four * bary,
    }
}

/// Edge bump `l_vw` evaluated from the dense planes.
pub fn edge_bump_dense<S: Scalar>(v: usize, w: usize, x: &[S]) -> S {
    let m = x.len();
    edge_plane(v, w, m).eval(x) - hat(v, S::half(), m).eval(x) - hat(w, S::half(), m).eval(x)
}

/// Hyperplane of the unsymmetric corner at `v` toward `w`, found by solving
/// the interpolation system: zero at `(1 - mu) e_v + mu e_w` and at the
/// midpoints `(e_v + e_u)/2` for `u` not in `{v, w}`, one at `e_v`, and
/// `sum n = 0` to fix the hull gauge.
pub fn unsymmetric_corner<S: Scalar>(v: usize, w: usize, mu: S, m: usize) -> Result<AffinePiece<S>, SimplexError> {
    if !(m >= 3 && v < m && w < m && v != w) {
        return Err(SimplexError::InvalidBasis(format!("unsymmetric corner ({v}, {w}) in dimension {m}")));
    }
    if !(mu > S::zero() && mu <= S::one()) {
        return Err(SimplexError::InvalidBasis(format!("corner parameter {mu} outside (0, 1]")));
    }
    // Unknowns: n_0..n_{m-1}, then d. Each row is (coefficients, rhs).
    let mut rows: Vec<(Vec<S>, S)> = Vec::with_capacity(m + 1);
    let point_row = |p: Vec<S>, rhs: S| {
        let mut r = p;
        r.push(-S::one());
        (r, rhs)
    };
    rows.push(point_row(SimplexPoint::edge_point(m, v, w, mu).to_dense(), S::zero()));
    for u in (0..m).filter(|&u| u != v && u != w) {
        rows.push(point_row(SimplexPoint::edge_point(m, v, u, S::half()).to_dense(), S::zero()));
    }
    rows.push(point_row(SimplexPoint::vertex(m, v).to_dense(), S::one()));
    let mut gauge = vec![S::one(); m];
    gauge.push(S::zero());
    rows.push((gauge, S::zero()));

    let sol = solve(rows.clone())?;
    let residual = rows
        .iter()
        .map(|(r, rhs)| (r.iter().zip(&sol).fold(S::zero(), |a, (&c, &s)| a + c * s) - *rhs).abs().to_f64())
        .fold(0.0, f64::max);
    if residual > 1e-8 {
        return Err(SimplexError::Singular(format!("residual {residual:e}")));
    }
    let offset = sol[m];
    Ok(AffinePiece {
        normal: sol[..m].to_vec(),
        offset,
    })
}

/// Square Gaussian elimination with partial pivoting.
fn solve<S: Scalar>(mut rows: Vec<(Vec<S>, S)>) -> Result<Vec<S>, SimplexError> {
    let n = rows.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| {
                rows[a].0[col]
                    .abs()
                    .partial_cmp(&rows[b].0[col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("nonempty range");
        let p = rows[pivot].0[col];
        if p.is_zero() || (!S::is_exact() && p.abs().to_f64() < 1e-14) {
            return Err(SimplexError::Singular(format!("no pivot in column {col}")));
        }
        rows.swap(col, pivot);
        let (head, tail) = rows.split_at_mut(col + 1);
        let (prow, prhs) = &head[col];
        for (r, rhs) in tail.iter_mut() {
            let f = r[col] / p;
            if f.is_zero() {
                continue;
            }
            for k in col..n {
                r[k] = r[k] - f * prow[k];
            }
            *rhs = *rhs - f * *prhs;
        }
    }
    let mut sol = vec![S::zero(); n];
    for i in (0..n).rev() {
        let (r, rhs) = &rows[i];
        let acc = (i + 1..n).fold(*rhs, |a, k| a - r[k] * sol[k]);
        sol[i] = acc / r[i];
    }
    Ok(sol)
}

/// Affine map `constant + sum coeff_k x_k`, equal on the simplex to some
/// dense `n^T x - offset` (take `n = coeffs`, `offset = -constant`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPiece<S> {
    pub constant: S,
    pub coeffs: Vec<(usize, S)>,
}

impl<S: Scalar> ReducedPiece<S> {
    pub fn at(&self, x: &SimplexPoint<S>) -> S {
        self.coeffs.iter().fold(self.constant, |a, &(k, c)| a + c * x.get(k))
    }

    /// Linear part applied to a sparse direction.
    pub fn slope(&self, dir: &[(usize, S)]) -> S {
        self.coeffs.iter().fold(S::zero(), |a, &(k, c)| {
            dir.iter().find(|e| e.0 == k).map_or(a, |e| a + c * e.1)
        })
    }

    pub fn to_dense(&self, m: usize) -> AffinePiece<S> {
        let mut normal = vec![S::zero(); m];
        for &(k, c) in &self.coeffs {
            normal[k] = normal[k] + c;
        }
        AffinePiece {
            normal,
            offset: -self.constant,
        }
    }
}

/// Basis functions available to a [`super::SimplexLoss`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Basis<S> {
    /// `l_v^mu`: one at `e_v`, zero outside the corner of width `mu`.
    Hat { v: usize, mu: S },
    /// `l_vw`: one at the edge midpoint, zero at every vertex and at the
    /// midpoints of the other edges.
    EdgeBump { v: usize, w: usize },
    /// `l_vw^mu`: one at `e_v`, zero at `(1 - mu) e_v + mu e_w` and at the
    /// midpoints of the other edges through `v`.
    UnsymCorner { v: usize, w: usize, mu: S },
    /// `l_vw + l_v^{1/2} - l_vw^{1/4}`: one at the quarter point near `v`,
    /// one half at the quarter point near `w`, zero at every vertex.
    Profile { v: usize, w: usize },
}

impl<S: Scalar> Basis<S> {
    /// Vertices that must carry mass for the function to be nonzero.
    pub fn required(&self) -> (usize, Option<usize>) {
        match *self {
            Basis::Hat { v, .. } | Basis::UnsymCorner { v, .. } => (v, None),
            Basis::EdgeBump { v, w } | Basis::Profile { v, w } => (v, Some(w)),
        }
    }

    pub fn validate(&self, m: usize) -> Result<(), SimplexError> {
        let bad = |msg: String| Err(SimplexError::InvalidBasis(msg));
        let in_range = |mu: S| mu > S::zero() && mu <= S::one();
        match *self {
            Basis::Hat { v, mu } => {
                if v >= m || !in_range(mu) {
                    return bad(format!("hat at {v} with width {mu} in dimension {m}"));
                }
            }
            Basis::EdgeBump { v, w } | Basis::Profile { v, w } | Basis::UnsymCorner { v, w, .. } => {
                if v >= m || w >= m || v == w {
                    return bad(format!("pair ({v}, {w}) in dimension {m}"));
                }
                if let Basis::UnsymCorner { mu, .. } = *self {
                    if !in_range(mu) {
                        return bad(format!("corner parameter {mu}"));
                    }
                }
            }
        }
        Ok(())
    }

    fn hat_piece(v: usize, mu: S) -> ReducedPiece<S> {
        ReducedPiece {
            constant: (mu - S::one()) / mu,
            coeffs: vec![(v, S::one() / mu)],
        }
    }

    fn edge_piece(v: usize, w: usize) -> ReducedPiece<S> {
        let two = S::from_int(2);
        ReducedPiece {
            constant: -S::one(),
            coeffs: vec![(v, two), (w, two)],
        }
    }

    fn unsym_piece(v: usize, w: usize, mu: S) -> ReducedPiece<S> {
        let two = S::from_int(2);
        ReducedPiece {
            constant: -S::one(),
            coeffs: vec![(v, two), (w, (two * mu - S::one()) / mu)],
        }
    }

    /// Signed `relu` pieces: the function is `sum sign * relu(piece)`.
    pub fn pieces(&self) -> Vec<(S, ReducedPiece<S>)> {
        let one = S::one();
        match *self {
            Basis::Hat { v, mu } => vec![(one, Self::hat_piece(v, mu))],
            Basis::UnsymCorner { v, w, mu } => vec![(one, Self::unsym_piece(v, w, mu))],
            Basis::EdgeBump { v, w } => vec![
                (one, Self::edge_piece(v, w)),
                (-one, Self::hat_piece(v, S::half())),
                (-one, Self::hat_piece(w, S::half())),
            ],
            // The hat at v cancels against the one inside the edge bump.
            Basis::Profile { v, w } => vec![
                (one, Self::edge_piece(v, w)),
                (-one, Self::hat_piece(w, S::half())),
                (-one, Self::unsym_piece(v, w, S::ratio(1, 4))),
            ],
        }
    }

    pub fn eval(&self, x: &SimplexPoint<S>) -> S {
        let two = S::from_int(2);
        let hat = |v: usize, mu: S| ((x.get(v) - S::one() + mu) / mu).relu();
        let unsym = |v: usize, w: usize, mu: S| (two * x.get(v) - S::one() + x.get(w) * (two * mu - S::one()) / mu).relu();
        let edge = |v: usize, w: usize| (two * (x.get(v) + x.get(w)) - S::one()).relu();
        match *self {
            Basis::Hat { v, mu } => hat(v, mu),
            Basis::UnsymCorner { v, w, mu } => unsym(v, w, mu),
            Basis::EdgeBump { v, w } => edge(v, w) - hat(v, S::half()) - hat(w, S::half()),
            Basis::Profile { v, w } => edge(v, w) - hat(w, S::half()) - unsym(v, w, S::ratio(1, 4)),
        }
    }

    /// One-sided derivative at `x` along the sparse direction `dir`.
    pub fn jvp(&self, x: &SimplexPoint<S>, dir: &[(usize, S)]) -> S {
        self.pieces().iter().fold(S::zero(), |acc, (sign, p)| {
            let value = p.at(x);
            let slope = p.slope(dir);
            let d = if value > S::zero() {
                slope
            } else if value < S::zero() {
                S::zero()
            } else {
                slope.relu()
            };
            acc + *sign * d
        })
    }

    /// Interior kink parameters `alpha` in `(0, 1)` on the segment `x -> y`.
    pub fn kinks(&self, x: &SimplexPoint<S>, y: &SimplexPoint<S>, out: &mut Vec<S>) {
        for (_, p) in self.pieces() {
            let (f0, f1) = (p.at(x), p.at(y));
            if (f0 < S::zero() && f1 > S::zero()) || (f0 > S::zero() && f1 < S::zero()) {
                out.push(f0 / (f0 - f1));
            }
        }
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

    #[test]
    fn hat_values() {
        let h = hat(0, 0.5f64, 3);
        assert!((h.eval(&[1.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);
        assert_eq!(h.eval(&[0.0, 1.0, 0.0]), 0.0);
        assert!((h.affine(&[1.0 / 3.0; 3]) + 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(h.eval(&[1.0 / 3.0; 3]), 0.0);
    }

    #[test]
    fn edge_plane_in_four_dimensions() {
        let p = edge_plane::<Q>(0, 1, 4);
        assert_eq!(p.normal, vec![q(1, 1), q(1, 1), q(-1, 1), q(-1, 1)]);
        assert_eq!(p.offset, q(0, 1));
        let mid = SimplexPoint::edge_point(4, 0, 1, q(1, 2)).to_dense();
        assert_eq!(edge_bump_dense(0, 1, &mid), q(1, 1));
        let other = SimplexPoint::edge_point(4, 2, 3, q(1, 2)).to_dense();
        assert_eq!(edge_bump_dense(0, 1, &other), q(0, 1));
    }

    #[test]
    fn solved_corner_matches_closed_form_on_hull() {
        for m in 3..7 {
            for mu in [q(1, 4), q(1, 2), q(1, 1)] {
                let solved = unsymmetric_corner(0, 1, mu, m).unwrap();
                let closed = Basis::UnsymCorner { v: 0, w: 1, mu }.pieces()[0].1.to_dense(m);
                for u in 0..m {
                    for t in [q(0, 1), q(1, 3), q(1, 1)] {
                        let x = SimplexPoint::edge_point(m, u, (u + 1) % m, t).to_dense();
                        assert_eq!(solved.affine(&x), closed.affine(&x), "m={m} mu={mu} u={u}");
                    }
                }
            }
        }
        let c = unsymmetric_corner(0, 1, q(1, 4), 3).unwrap();
        assert!(c.affine(&[q(0, 1), q(0, 1), q(1, 1)]) <= q(0, 1));
    }

    #[test]
    fn unsymmetric_corner_rejects_bad_input() {
        assert!(unsymmetric_corner(0, 0, 0.5, 4).is_err());
        assert!(unsymmetric_corner(0, 1, 0.0, 4).is_err());
    }

    #[test]
    fn profile_table() {
        let b = Basis::Profile { v: 1, w: 3 };
        let at = |p: SimplexPoint<Q>| b.eval(&p);
        assert_eq!(at(SimplexPoint::edge_point(5, 1, 3, q(1, 4))), q(1, 1));
        assert_eq!(at(SimplexPoint::edge_point(5, 1, 3, q(3, 4))), q(1, 2));
        assert_eq!(at(SimplexPoint::edge_point(5, 1, 3, q(1, 2))), q(1, 1));
        for u in 0..5 {
            assert_eq!(at(SimplexPoint::vertex(5, u)), q(0, 1));
        }
    }

    #[test]
    fn eval_agrees_with_pieces() {
        let x = SimplexPoint::from_dense(&[q(1, 5), q(2, 5), q(1, 10), q(3, 10)]).unwrap();
        let bases = [
            Basis::Hat { v: 1, mu: q(1, 4) },
            Basis::EdgeBump { v: 1, w: 3 },
            Basis::UnsymCorner { v: 3, w: 0, mu: q(1, 4) },
            Basis::Profile { v: 1, w: 3 },
            Basis::Profile { v: 3, w: 1 },
        ];
        for b in bases {
            let via = b.pieces().iter().fold(q(0, 1), |a, (s, p)| a + *s * p.at(&x).relu());
            assert_eq!(via, b.eval(&x), "{b:?}");
        }
    }
}
