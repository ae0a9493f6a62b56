use std::fmt::Debug;

use crate::Real;

/// Model trained by the wrapper: `x -> f_theta(x)` for one sample, applied
/// row by row to `x` of shape `n x input_dim`.
pub trait PrimaryNetwork<F>: Debug + Send + Sync {
    fn name(&self) -> &str;
    fn weight_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    /// Row-major outputs, `n x output_dim`.
    fn forward(&self, theta: &[F], x: &[F]) -> Vec<F>;
    /// `J_theta^T g`.
    fn vjp_theta(&self, theta: &[F], x: &[F], g: &[F]) -> Vec<F>;
    /// `J_theta dtheta`.
    fn jvp_theta(&self, theta: &[F], x: &[F], dtheta: &[F]) -> Vec<F>;
}

/// `f_theta(x) = theta` for every sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantNet {
    pub input_dim: usize,
    pub output_dim: usize,
}

impl<F: Real> PrimaryNetwork<F> for ConstantNet {
    fn name(&self) -> &str {
        "constant"
    }
    fn weight_dim(&self) -> usize {
        self.output_dim
    }
    fn input_dim(&self) -> usize {
        self.input_dim
    }
    fn output_dim(&self) -> usize {
        self.output_dim
    }
    fn forward(&self, theta: &[F], x: &[F]) -> Vec<F> {
        let n = x.len() / self.input_dim.max(1);
        theta.iter().copied().cycle().take(n * self.output_dim).collect()
    }
    fn vjp_theta(&self, _theta: &[F], _x: &[F], g: &[F]) -> Vec<F> {
        let mut out = vec![F::zero(); self.output_dim];
        for (k, &gk) in g.iter().enumerate() {
            out[k % self.output_dim] = out[k % self.output_dim] + gk;
        }
        out
    }
    fn jvp_theta(&self, _theta: &[F], x: &[F], dtheta: &[F]) -> Vec<F> {
        self.forward(dtheta, x)
    }
}

/// `f_theta(x) = x W` with `W` stored row-major as `input_dim x output_dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearNet {
    pub input_dim: usize,
    pub output_dim: usize,
}

impl<F: Real> PrimaryNetwork<F> for LinearNet {
    fn name(&self) -> &str {
        "linear"
    }
    fn weight_dim(&self) -> usize {
        self.input_dim * self.output_dim
    }
    fn input_dim(&self) -> usize {
        self.input_dim
    }
    fn output_dim(&self) -> usize {
        self.output_dim
    }
    fn forward(&self, theta: &[F], x: &[F]) -> Vec<F> {
        let (p, m) = (self.input_dim, self.output_dim);
        x.chunks(p)
            .flat_map(|row| {
                (0..m).map(move |j| row.iter().enumerate().fold(F::zero(), |s, (i, &xi)| s + xi * theta[i * m + j]))
            })
            .collect()
    }
    fn vjp_theta(&self, _theta: &[F], x: &[F], g: &[F]) -> Vec<F> {
        let (p, m) = (self.input_dim, self.output_dim);
        let mut out = vec![F::zero(); p * m];
        for (row, gr) in x.chunks(p).zip(g.chunks(m)) {
            for i in 0..p {
                for j in 0..m {
                    out[i * m + j] = out[i * m + j] + row[i] * gr[j];
                }
            }
        }
        out
    }
    fn jvp_theta(&self, _theta: &[F], x: &[F], dtheta: &[F]) -> Vec<F> {
        self.forward(dtheta, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_net_matches_matrix_product() {
        let net = LinearNet {
            input_dim: 2,
            output_dim: 1,
        };
        let y = PrimaryNetwork::<f64>::forward(&net, &[2.0, -1.0], &[1.0, 3.0, 0.5, 0.5]);
        assert_eq!(y, vec![-1.0, 0.5]);
        let g = PrimaryNetwork::<f64>::vjp_theta(&net, &[0.0, 0.0], &[1.0, 3.0, 0.5, 0.5], &[1.0, 2.0]);
        assert_eq!(g, vec![2.0, 4.0]);
    }

    #[test]
    fn constant_net_repeats_weights() {
        let net = ConstantNet {
            input_dim: 1,
            output_dim: 2,
        };
        assert_eq!(PrimaryNetwork::<f64>::forward(&net, &[0.0, 3.0], &[0.5, 0.7]), vec![0.0, 3.0, 0.0, 3.0]);
        assert_eq!(PrimaryNetwork::<f64>::vjp_theta(&net, &[0.0, 3.0], &[0.5, 0.7], &[1.0, 2.0, 3.0, 4.0]), vec![4.0, 6.0]);
    }
}
