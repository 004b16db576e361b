use crate::{Error, Real, Result};

/// Bias-corrected Adam over a flat parameter vector.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<T>,
    v: Vec<T>,
    t: u64,
}

impl<T: Real> Adam<T> {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![T::zero(); n_params],
            v: vec![T::zero(); n_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [T], grads: &[T]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape {
                expected: format!("{} parameters and gradients", self.m.len()),
                got: format!("{} parameters, {} gradients", params.len(), grads.len()),
            });
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let b1 = T::from_f64_lossy(self.beta1);
        let b2 = T::from_f64_lossy(self.beta2);
        let one = T::one();
        let step = T::from_f64_lossy(self.lr / c1);
        let inv_c2 = T::from_f64_lossy(1.0 / c2);
        let eps = T::from_f64_lossy(self.eps);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = b1 * self.m[i] + (one - b1) * g;
            self.v[i] = b2 * self.v[i] + (one - b2) * g * g;
            params[i] -= step * self.m[i] / ((self.v[i] * inv_c2).sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut opt = Adam::<f64>::new(3, 1e-3);
        let mut p = vec![1.0, -2.0, 0.5];
        for _ in 0..10 {
            opt.step(&mut p, &[0.0; 3]).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_is_lr_times_sign() {
        let mut opt = Adam::<f64>::new(2, 1e-3);
        let mut p = vec![0.0, 0.0];
        opt.step(&mut p, &[0.37, -42.0]).unwrap();
        // m̂ = g, v̂ = g², so Δ = −lr·g/(|g| + ε)
        assert!((p[0] + 1e-3 * 0.37 / (0.37 + 1e-8)).abs() < 1e-15);
        assert!((p[1] - 1e-3 * 42.0 / (42.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn constant_gradient_matches_scalar_simulation() {
        let (lr, g) = (1e-2, 0.3);
        let mut opt = Adam::<f64>::new(1, lr);
        let mut p = vec![0.0];
        let (mut m, mut v, mut x) = (0.0f64, 0.0f64, 0.0f64);
        let mut last = 0.0;
        for t in 1..=2000 {
            let before = p[0];
            opt.step(&mut p, &[g]).unwrap();
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            x -= lr * mh / (vh.sqrt() + 1e-8);
            assert!((p[0] - x).abs() < 1e-12 * t as f64);
            last = p[0] - before;
        }
        assert!((last + lr).abs() < 1e-6);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let mut opt = Adam::<f32>::new(2, 1e-3);
        assert!(opt.step(&mut [0.0; 3], &[0.0; 3]).is_err());
    }
}
