use serde::Serialize;

use super::NetworkError;

/// Thresholds of both switches and of the stopping rule.
///
/// `s_net` sees `||u||^2 = 2 l_TM`. With `lo` the largest loss at a halting
/// state and `hi` the smallest loss at any other traced state, the
/// thresholds sit at the quarter points of the gap:
/// `B_lo = lo + g/4`, `B_hi = lo + 3g/4`, margin `delta = g/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchParams {
    pub lo: f64,
    pub hi: f64,
    pub b_lo: f64,
    pub b_hi: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// Stopping threshold on `1/2 ||out - y||^2`, set to `epsilon / 4`.
    pub b_stop: f64,
}

impl SwitchParams {
    pub fn from_gap(lo: f64, hi: f64, epsilon: f64) -> Result<Self, NetworkError> {
        if !(lo < hi) {
            return Err(NetworkError::Constants(format!(
                "halting loss bound {lo} is not below the non-halting bound {hi}"
            )));
        }
        if !(epsilon > 0.0) {
            return Err(NetworkError::Constants(format!("epsilon = {epsilon} must be positive")));
        }
        let g = hi - lo;
        let p = SwitchParams {
            lo,
            hi,
            b_lo: lo + g / 4.0,
            b_hi: lo + 3.0 * g / 4.0,
            delta: g / 4.0,
            epsilon,
            b_stop: epsilon / 4.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let chain = self.lo < self.b_lo
            && self.b_lo < self.b_hi
            && self.b_hi <= self.hi
            && self.delta > 0.0
            && 2.0 * self.b_lo + self.delta < 2.0 * self.b_hi - self.delta;
        if !chain {
            return Err(NetworkError::Constants(format!("switch thresholds out of order: {self:?}")));
        }
        if !(self.b_stop > 0.0 && self.b_stop < self.epsilon / 2.0) {
            return Err(NetworkError::Constants(format!(
                "stopping threshold {} must lie in (0, epsilon/2)",
                self.b_stop
            )));
        }
        Ok(())
    }

    /// Knots of `phi` on `||u||^2`.
    pub fn phi_knots(&self) -> [(f64, f64); 2] {
        [(2.0 * self.b_lo + self.delta, 0.0), (2.0 * self.b_hi - self.delta, 1.0)]
    }

    /// Knots of `psi` on `||z||^2`.
    pub fn psi_knots(&self) -> [(f64, f64); 2] {
        [(self.epsilon / 3.0, 1.0), (2.0 * self.epsilon / 3.0, 0.0)]
    }
}

fn ramp(knots: [(f64, f64); 2], t: f64) -> f64 {
    let [(a, fa), (b, fb)] = knots;
    if t <= a {
        fa
    } else if t >= b {
        fb
    } else {
        fa + (fb - fa) * (t - a) / (b - a)
    }
}

/// `psi(t)`: 1 below `epsilon/3`, 0 above `2 epsilon/3`.
pub fn psi(p: &SwitchParams, t: f64) -> f64 {
    ramp(p.psi_knots(), t)
}

/// `phi(t)`: 0 up to `2 B_lo + delta`, 1 from `2 B_hi - delta`.
pub fn phi(p: &SwitchParams, t: f64) -> f64 {
    ramp(p.phi_knots(), t)
}

/// `(1 - psi(||z||^2)) u + psi(||z||^2) z`.
pub fn s_init(p: &SwitchParams, u: &[f64], z: &[f64]) -> Vec<f64> {
    let w = psi(p, z.iter().map(|v| v * v).sum());
    u.iter().zip(z).map(|(&a, &b)| (1.0 - w) * a + w * b).collect()
}

/// `(1 - phi(||u||^2)) f + phi(||u||^2) u`.
pub fn s_net(p: &SwitchParams, f: &[f64], u: &[f64]) -> Vec<f64> {
    let w = phi(p, u.iter().map(|v| v * v).sum());
    f.iter().zip(u).map(|(&a, &b)| (1.0 - w) * a + w * b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn external_thresholds() {
        let p = SwitchParams::from_gap(4664.0, 4947.0, 9.0).unwrap();
        assert_eq!((p.b_lo, p.b_hi, p.delta), (4734.75, 4876.25, 70.75));
        assert!(2.0 * 4947.0 > 2.0 * p.b_hi);
        assert_eq!(phi(&p, 2.0 * 4947.0), 1.0);
        assert_eq!(phi(&p, 2.0 * 4664.0), 0.0);
        assert_eq!(psi(&p, 4.5), 0.5);
        assert!(SwitchParams::from_gap(5.0, 5.0, 1.0).is_err());
    }

    #[test]
    fn switch_ends() {
        let p = SwitchParams::from_gap(1.0, 2.0, 1.0).unwrap();
        assert_eq!(s_init(&p, &[5.0, 6.0], &[0.0, 0.0]), vec![0.0, 0.0]);
        assert_eq!(s_init(&p, &[5.0, 6.0], &[1.0, 0.0]), vec![5.0, 6.0]);
        assert_eq!(s_net(&p, &[7.0, 8.0], &[0.5, 0.5]), vec![7.0, 8.0]);
        assert_eq!(s_net(&p, &[7.0, 8.0], &[3.0, 0.0]), vec![3.0, 0.0]);
    }
}
