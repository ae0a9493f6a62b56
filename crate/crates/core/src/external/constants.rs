use crate::Scalar;

use super::ExternalError;

/// Scale base `b`, global scale `gamma` and additive constant `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalParams<S> {
    pub b: u64,
    pub gamma: S,
    pub c: S,
    pub tapes: usize,
    /// Whether the halting loss must sit strictly below every non-halting
    /// loss (`8 b^2 d + 3 d < b^3`).
    pub separation: bool,
}

impl<S: Scalar> ExternalParams<S> {
    /// Checks the inequalities on `b`; the error names the first failure.
    pub fn check_b(b: u64, tapes: usize, separation: bool) -> Result<(), ExternalError> {
        let (b, d) = (b as u128, tapes as u128);
        let cube = b * b * b;
        if 2 * cube < cube + d * b {
            return Err(ExternalError::Constants(format!("b^3 >= (b^3 + db)/2 fails for b = {b}, d = {d}")));
        }
        if cube < 2 * d * b + 4 * d * b * b {
            return Err(ExternalError::Constants(format!("b^3/2 - db >= 2db^2 fails for b = {b}, d = {d}")));
        }
        if b * b <= b {
            return Err(ExternalError::Constants(format!("b^2 > b fails for b = {b}")));
        }
        if separation && 8 * b * b * d + 3 * d >= cube {
            return Err(ExternalError::Constants(format!(
                "halting separation 8b^2 d + 3d < b^3 fails for b = {b}, d = {d}: {} >= {cube}",
                8 * b * b * d + 3 * d
            )));
        }
        Ok(())
    }

    /// Smallest admissible integer `b`, with `c = (b^3 + d b) gamma`.
    pub fn choose(tapes: usize, gamma: S, separation: bool) -> Self {
        let b = (2..)
            .find(|&b| Self::check_b(b, tapes, separation).is_ok())
            .expect("large b always passes");
        Self::with_b(b, tapes, gamma, separation).expect("chosen b is admissible")
    }

    pub fn with_b(b: u64, tapes: usize, gamma: S, separation: bool) -> Result<Self, ExternalError> {
        Self::check_b(b, tapes, separation)?;
        if gamma <= S::zero() {
            return Err(ExternalError::Constants(format!("gamma = {gamma} must be positive")));
        }
        let bs = S::from_int(b as i64);
        let c = (bs * bs * bs + S::from_int(tapes as i64) * bs) * gamma;
        Ok(ExternalParams {
            b,
            gamma,
            c,
            tapes,
            separation,
        })
    }

    /// Replaces `c`; it must keep the loss nonnegative.
    pub fn with_c(mut self, c: S) -> Result<Self, ExternalError> {
        if c < self.min_c() {
            return Err(ExternalError::Constants(format!("c = {c} is below (b^3 + db) gamma = {}", self.min_c())));
        }
        self.c = c;
        Ok(self)
    }

    fn min_c(&self) -> S {
        let b = self.b_scalar();
        (b * b * b + S::from_int(self.tapes as i64) * b) * self.gamma
    }

    pub fn b_scalar(&self) -> S {
        S::from_int(self.b as i64)
    }

    /// `b^3 gamma`, the reward for reaching a halting vertex.
    pub fn halting_reward(&self) -> S {
        let b = self.b_scalar();
        b * b * b * self.gamma
    }

    /// Lower bound of the loss at every traced step.
    pub fn nonhalting_floor(&self) -> S {
        self.c
    }

    /// `c + (8 b^2 d + 3 d) gamma`.
    pub fn nonhalting_ceiling(&self) -> S {
        let b = self.b_scalar();
        let d = S::from_int(self.tapes as i64);
        self.c + (S::from_int(8) * b * b * d + S::from_int(3) * d) * self.gamma
    }

    /// Upper bound of the loss at the halting step.
    pub fn halting_ceiling(&self) -> S {
        self.nonhalting_ceiling() - self.halting_reward()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_tape_constants() {
        let p = ExternalParams::<f64>::choose(2, 1.0, true);
        assert_eq!((p.b, p.c), (17, 4947.0));
        assert_eq!(p.halting_ceiling(), 4664.0);
        assert_eq!(ExternalParams::<f64>::choose(2, 1.0, false).b, 9);
        let err = ExternalParams::<f64>::with_b(16, 2, 1.0, true).unwrap_err();
        assert!(err.to_string().contains("4102 >= 4096"), "{err}");
        assert!(ExternalParams::<f64>::with_b(16, 2, 1.0, false).is_ok());
    }

    #[test]
    fn c_cannot_drop_below_minimum() {
        let p = ExternalParams::<f64>::choose(2, 1.0, true);
        assert!(p.with_c(4946.0).is_err());
        assert_eq!(p.with_c(5000.0).unwrap().c, 5000.0);
    }
}
