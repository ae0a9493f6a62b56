use crate::simplex::{Basis, Quadratic, SimplexLoss, SimplexPoint};
use crate::tm::{back_step_pairs, Configuration, Move, Symbol, TuringMachine};
use crate::Scalar;

use super::{ExternalError, ExternalParams};

/// Trainable variables: simplex point `s`, tapes `T` and head indicators
/// `H`, the last two stored one column per tape.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineState<S> {
    pub s: SimplexPoint<S>,
    pub tapes: Vec<Vec<S>>,
    pub heads: Vec<Vec<S>>,
}

/// Loss terms at a state. `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts<S> {
    pub constant: S,
    pub simplex: S,
    /// `gamma/2 ||diag(T^T H) - T_write x||^2`
    pub write: S,
    /// `2 b^2 gamma ||diag(T^T S(x) H) - T_down x||^2`
    pub read: S,
    /// `gamma/2 ||S(x) H - H||^2`
    pub head: S,
}

impl<S: Scalar> LossParts<S> {
    pub fn total(&self) -> S {
        self.constant + self.simplex + self.write + self.read + self.head
    }
}

/// The loss `l(x, T, H)` of a tripled machine with tapes of length `tau`.
#[derive(Debug, Clone)]
pub struct TapeLoss<S> {
    tm: TuringMachine,
    tau: usize,
    params: ExternalParams<S>,
    simplex: SimplexLoss<S>,
    /// `T_down e_v` for every vertex, as sparse columns.
    down_columns: Vec<Vec<(usize, S)>>,
}

fn sym<S: Scalar>(s: Symbol) -> S {
    S::from_int(i64::from(s.value()))
}

impl<S: Scalar> TapeLoss<S> {
    /// Builds the loss. Refuses machines in which two vertices can follow
    /// each other both ways, including self-loops.
    pub fn build(tm: &TuringMachine, tau: usize, params: ExternalParams<S>) -> Result<Self, ExternalError> {
        let pairs = back_step_pairs(tm);
        if let Some(&first) = pairs.first() {
            return Err(ExternalError::BackStep {
                first,
                count: pairs.len(),
            });
        }
        if params.tapes != tm.tape_count() {
            return Err(ExternalError::Constants(format!(
                "constants were chosen for {} tapes, machine has {}",
                params.tapes,
                tm.tape_count()
            )));
        }
        let reads = tm.read_count();
        let dim = tm.state_count() * reads;
        let mut loss = TapeLoss {
            tm: tm.clone(),
            tau,
            params,
            simplex: SimplexLoss::new(dim),
            down_columns: Vec::with_capacity(dim),
        };
        let quarter = S::ratio(1, 4);
        for v in 0..dim {
            let (q, code) = (v / reads, v % reads);
            loss.down_columns.push(
                tm.decode(code)
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| (i, sym(s)))
                    .collect(),
            );
            if tm.is_accepting(q) {
                loss.simplex.push(-params.halting_reward(), Basis::Hat { v, mu: quarter })?;
                continue;
            }
            let next = tm.transition_code(q, code).next;
            for code2 in 0..reads {
                let w = next * reads + code2;
                loss.simplex.push(loss.omega_vw(v, w), Basis::Profile { v, w })?;
            }
        }
        Ok(loss)
    }

    pub fn machine(&self) -> &TuringMachine {
        &self.tm
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn params(&self) -> &ExternalParams<S> {
        &self.params
    }

    pub fn simplex(&self) -> &SimplexLoss<S> {
        &self.simplex
    }

    /// Number of vertices `|Q| 2^d`.
    pub fn dim(&self) -> usize {
        self.simplex.dim()
    }

    pub fn tapes(&self) -> usize {
        self.tm.tape_count()
    }

    /// Trainable scalars: simplex coordinates plus `T` and `H`.
    pub fn parameter_count(&self) -> usize {
        self.dim() + 2 * self.tapes() * self.tau
    }

    pub fn vertex(&self, q: usize, read: &[Symbol]) -> usize {
        q * self.tm.read_count() + self.tm.encode(read)
    }

    pub fn state_of(&self, v: usize) -> usize {
        v / self.tm.read_count()
    }

    pub fn symbols_of(&self, v: usize) -> Vec<Symbol> {
        self.tm.decode(v % self.tm.read_count())
    }

    pub fn is_halting(&self, v: usize) -> bool {
        self.tm.is_accepting(self.state_of(v))
    }

    pub fn down_columns(&self) -> &[Vec<(usize, S)>] {
        &self.down_columns
    }

    /// Symbols written by the transition at vertex `v`.
    pub fn write_of(&self, v: usize) -> Vec<S> {
        let r = self.tm.read_count();
        self.tm.transition_code(v / r, v % r).write.iter().map(|&s| sym(s)).collect()
    }

    /// Head offsets of the transition at vertex `v`.
    pub fn moves_of(&self, v: usize) -> &[Move] {
        let r = self.tm.read_count();
        &self.tm.transition_code(v / r, v % r).moves
    }

    pub fn omega_v(&self, v: usize) -> S {
        if self.is_halting(v) {
            -self.params.halting_reward()
        } else {
            S::zero()
        }
    }

    /// `-(b^3 + b #{i : t'_i = t_i}) gamma` if `w` follows `v`, else zero.
    pub fn omega_vw(&self, v: usize, w: usize) -> S {
        let reads = self.tm.read_count();
        let (q, code) = (v / reads, v % reads);
        if self.tm.is_accepting(q) || self.tm.transition_code(q, code).next != w / reads {
            return S::zero();
        }
        let same = (0..self.tapes()).filter(|&i| (code >> i) & 1 == ((w % reads) >> i) & 1).count();
        let b = self.params.b_scalar();
        -(b * b * b + b * S::from_int(same as i64)) * self.params.gamma
    }

    fn check_state(&self, st: &MachineState<S>) -> Result<(), ExternalError> {
        let d = self.tapes();
        let ok = st.s.dim() == self.dim()
            && st.tapes.len() == d
            && st.heads.len() == d
            && st.tapes.iter().chain(&st.heads).all(|c| c.len() == self.tau);
        if ok {
            Ok(())
        } else {
            Err(ExternalError::Shape(format!(
                "expected {} vertices and {d} columns of length {}",
                self.dim(),
                self.tau
            )))
        }
    }

    /// State encoding a configuration of the (tripled) machine.
    pub fn encode(&self, c: &Configuration) -> Result<MachineState<S>, ExternalError> {
        if c.tapes.len() != self.tapes() || c.tau() != self.tau || c.state >= self.tm.state_count() {
            return Err(ExternalError::Shape("configuration does not fit the loss".into()));
        }
        let v = self.vertex(c.state, &c.read());
        Ok(MachineState {
            s: SimplexPoint::vertex(self.dim(), v),
            tapes: c.tapes.iter().map(|col| col.iter().map(|&s| sym(s)).collect()).collect(),
            heads: c
                .heads
                .iter()
                .map(|&h| (0..self.tau).map(|i| if i == h { S::one() } else { S::zero() }).collect())
                .collect(),
        })
    }

    /// Inverse of [`Self::encode`]; fails unless `s` is a vertex, `T` is
    /// `+-1` and every head column is one-hot.
    pub fn decode(&self, st: &MachineState<S>) -> Result<Configuration, String> {
        let v = st.s.as_vertex().ok_or_else(|| format!("s is not a vertex: {:?}", st.s.entries()))?;
        let mut tapes = Vec::with_capacity(st.tapes.len());
        for (j, col) in st.tapes.iter().enumerate() {
            let mut out = Vec::with_capacity(col.len());
            for (i, &x) in col.iter().enumerate() {
                out.push(if x.is_one() {
                    Symbol::Plus
                } else if x == -S::one() {
                    Symbol::Minus
                } else {
                    return Err(format!("T[{i}, {j}] = {x} is not a tape symbol"));
                });
            }
            tapes.push(out);
        }
        let mut heads = Vec::with_capacity(st.heads.len());
        for (j, col) in st.heads.iter().enumerate() {
            let ones: Vec<usize> = (0..col.len()).filter(|&i| col[i].is_one()).collect();
            let zeros = col.iter().filter(|x| x.is_zero()).count();
            if ones.len() != 1 || zeros + 1 != col.len() {
                return Err(format!("head column {j} is not one-hot: {col:?}"));
            }
            heads.push(ones[0]);
        }
        let config = Configuration {
            state: self.state_of(v),
            tapes,
            heads,
        };
        if self.symbols_of(v) != config.read() {
            return Err(format!("vertex {v} does not hold the symbols under the heads"));
        }
        Ok(config)
    }

    /// `S(x) H`: each vertex shifts the head indicators by its moves, head
    /// index increasing by the move; mass shifted off the tape is dropped.
    pub fn shifted_heads(&self, s: &SimplexPoint<S>, heads: &[Vec<S>]) -> Vec<Vec<S>> {
        let tau = self.tau as i64;
        let mut out = vec![vec![S::zero(); self.tau]; heads.len()];
        for &(v, weight) in s.entries() {
            for (j, mv) in self.moves_of(v).iter().enumerate() {
                let off = mv.offset();
                for i in 0..tau {
                    let src = i - off;
                    if (0..tau).contains(&src) {
                        let h = heads[j][src as usize];
                        out[j][i as usize] = out[j][i as usize] + weight * h;
                    }
                }
            }
        }
        out
    }

    /// `diag(T^T M)`.
    pub fn read_diag(tapes: &[Vec<S>], m: &[Vec<S>]) -> Vec<S> {
        tapes
            .iter()
            .zip(m)
            .map(|(t, h)| t.iter().zip(h).fold(S::zero(), |a, (&x, &y)| a + x * y))
            .collect()
    }

    /// `T_down x`.
    pub fn down(&self, s: &SimplexPoint<S>) -> Vec<S> {
        let mut out = vec![S::zero(); self.tapes()];
        for &(v, weight) in s.entries() {
            for &(i, x) in &self.down_columns[v] {
                out[i] = out[i] + weight * x;
            }
        }
        out
    }

    /// `T_write x`.
    pub fn written(&self, s: &SimplexPoint<S>) -> Vec<S> {
        let mut out = vec![S::zero(); self.tapes()];
        for &(v, weight) in s.entries() {
            for (i, x) in self.write_of(v).into_iter().enumerate() {
                out[i] = out[i] + weight * x;
            }
        }
        out
    }

    pub fn parts(&self, st: &MachineState<S>) -> Result<LossParts<S>, ExternalError> {
        self.check_state(st)?;
        let g = self.params.gamma;
        let half = S::half();
        let b = self.params.b_scalar();
        let sq = |a: &[S], b: &[S]| a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y));
        let shifted = self.shifted_heads(&st.s, &st.heads);
        let at_heads = Self::read_diag(&st.tapes, &st.heads);
        let at_next = Self::read_diag(&st.tapes, &shifted);
        let head = shifted
            .iter()
            .zip(&st.heads)
            .fold(S::zero(), |acc, (a, h)| acc + sq(a, h));
        Ok(LossParts {
            constant: self.params.c,
            simplex: self.simplex.eval(&st.s),
            write: half * g * sq(&at_heads, &self.written(&st.s)),
            read: S::from_int(2) * b * b * g * sq(&at_next, &self.down(&st.s)),
            head: half * g * head,
        })
    }

    pub fn value(&self, st: &MachineState<S>) -> Result<S, ExternalError> {
        Ok(self.parts(st)?.total())
    }

    /// Read coupling used by the Frank-Wolfe step at vertex `v`:
    /// `2 b^2 gamma ||T_down x - target||^2` with the target
    /// `diag(T^T S(e_v) H)` frozen.
    pub fn read_quadratic(&self, v: usize, st: &MachineState<S>) -> Quadratic<S> {
        let shifted = self.shifted_heads(&SimplexPoint::vertex(self.dim(), v), &st.heads);
        let target = Self::read_diag(&st.tapes, &shifted);
        let b = self.params.b_scalar();
        Quadratic::new(self.tapes(), self.down_columns.clone(), target, S::from_int(4) * b * b * self.params.gamma)
    }

    /// `grad_T l` on writable tapes: `gamma H_i (T_i^T H_i - (T_write x)_i)`;
    /// read-only columns are zero.
    pub fn grad_tapes(&self, st: &MachineState<S>) -> Vec<Vec<S>> {
        let at_heads = Self::read_diag(&st.tapes, &st.heads);
        let written = self.written(&st.s);
        let g = self.params.gamma;
        (0..self.tapes())
            .map(|i| {
                if self.tm.is_read_only(i) {
                    return vec![S::zero(); self.tau];
                }
                let r = at_heads[i] - written[i];
                st.heads[i].iter().map(|&h| g * h * r).collect()
            })
            .collect()
    }

    /// `grad_H l = -gamma (S(x) H - H)`.
    pub fn grad_heads(&self, st: &MachineState<S>) -> Vec<Vec<S>> {
        let shifted = self.shifted_heads(&st.s, &st.heads);
        let g = self.params.gamma;
        shifted
            .iter()
            .zip(&st.heads)
            .map(|(a, h)| a.iter().zip(h).map(|(&x, &y)| -g * (x - y)).collect())
            .collect()
    }
}
