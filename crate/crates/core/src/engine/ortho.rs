use crate::Real;

/// Below this squared norm the projection of `e_0` is replaced by the
/// projection of `e_1`.
pub const ORTHO_THRESHOLD: f64 = 0.25;

/// Which axis was projected, `a = z_axis / |z|^2` and `|y_bar|`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OrthoInfo<F> {
    pub axis: usize,
    pub a: F,
    pub zz: F,
    pub norm: F,
}

/// Unit vector orthogonal to `z`: the normalised projection of `e_0` onto
/// the complement of `z`, or of `e_1` if that projection is short. Maps 0 to
/// `e_0`.
pub fn ortho_unit<F: Real>(z: &[F]) -> Vec<F> {
    ortho_forward(z).0
}

pub(crate) fn ortho_forward<F: Real>(z: &[F]) -> (Vec<F>, Option<OrthoInfo<F>>) {
    let n = z.len();
    let zz = z.iter().fold(F::zero(), |a, &x| a + x * x);
    let mut y = vec![F::zero(); n];
    if zz.is_zero() {
        y[0] = F::one();
        return (y, None);
    }
    let threshold = F::from_f64_lossy(ORTHO_THRESHOLD);
    for axis in 0..2 {
        let a = z[axis] / zz;
        for (k, yk) in y.iter_mut().enumerate() {
            let e = if k == axis { F::one() } else { F::zero() };
            *yk = e - a * z[k];
        }
        let nb2 = y.iter().fold(F::zero(), |s, &x| s + x * x);
        if nb2 >= threshold || axis == 1 {
            let norm = nb2.sqrt();
            for yk in &mut y {
                *yk = *yk / norm;
            }
            return (y, Some(OrthoInfo { axis, a, zz, norm }));
        }
    }
    unreachable!()
}

fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |s, (&x, &y)| s + x * y)
}

/// Gradient with respect to `z` given the cotangent `g` of the output `y`.
pub(crate) fn ortho_vjp<F: Real>(z: &[F], y: &[F], info: Option<OrthoInfo<F>>, g: &[F]) -> Vec<F> {
    let Some(OrthoInfo { axis, a, zz, norm }) = info else {
        return vec![F::zero(); z.len()];
    };
    let yg = dot(y, g);
    let gbar: Vec<F> = g.iter().zip(y).map(|(&gi, &yi)| (gi - yg * yi) / norm).collect();
    let gz = dot(&gbar, z);
    let two = F::from_int(2);
    // y_bar = e_axis - a z, with grad a = e_axis / zz - 2 z_axis z / zz^2.
    z.iter()
        .enumerate()
        .map(|(k, &zk)| {
            let e = if k == axis { F::one() / zz } else { F::zero() };
            let grad_a = e - two * z[axis] * zk / (zz * zz);
            -a * gbar[k] - gz * grad_a
        })
        .collect()
}

/// Tangent of the output along `dz`.
pub(crate) fn ortho_jvp<F: Real>(z: &[F], y: &[F], info: Option<OrthoInfo<F>>, dz: &[F]) -> Vec<F> {
    let Some(OrthoInfo { axis, a, zz, norm }) = info else {
        return vec![F::zero(); z.len()];
    };
    let two = F::from_int(2);
    let da = dz[axis] / zz - two * z[axis] * dot(z, dz) / (zz * zz);
    let dbar: Vec<F> = z.iter().zip(dz).map(|(&zk, &dk)| -da * zk - a * dk).collect();
    let yd = dot(y, &dbar);
    dbar.iter().zip(y).map(|(&d, &yk)| (d - yd * yk) / norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_unit_and_exact_on_axis() {
        for z in [vec![0.0f64, 3.0], vec![1.0, 2.0, -0.5], vec![5.0, 0.1], vec![-2.0, 0.0, 0.0]] {
            let y = ortho_unit(&z);
            assert!(dot(&y, &z).abs() < 1e-12);
            assert!((dot(&y, &y) - 1.0).abs() < 1e-12);
        }
        assert_eq!(ortho_unit(&[0.0, 3.0]), vec![1.0, 0.0]);
        assert_eq!(ortho_unit(&[0.0f64, 0.0]), vec![1.0, 0.0]);
        // z along e_0 switches to e_1.
        assert_eq!(ortho_unit(&[2.0, 0.0]), vec![0.0, 1.0]);
    }
}
