use crate::encoders::{round_to_storage, Gradients, Parameters};
use crate::error::{Error, Result};

/// Adam with optional decoupled weight decay. For every parameter `p` with gradient `g`
/// at step `t`:
///
/// ```text
/// m ← β1·m + (1−β1)·g
/// v ← β2·v + (1−β2)·g²
/// p ← p − lr·( (m / (1−β1ᵗ)) / (√(v / (1−β2ᵗ)) + ε) + λ·p )
/// ```
///
/// after which `p` is rounded to the nearest f32.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn adam<P: Parameters + ?Sized>(params: &P, learning_rate: f64, weight_decay: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().iter().map(|t| vec![0.0; t.data.len()]).collect();
        OptimizerState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay,
            step: 0,
            first_moment: zeros.clone(),
            second_moment: zeros,
        }
    }

    /// Applies one update. Non-finite gradients abort the step before anything changes.
    pub fn update<P: Parameters + ?Sized>(&mut self, params: &mut P, grads: &Gradients) -> Result<()> {
        if !grads.all_finite() {
            return Err(Error::Numerical(format!(
                "non-finite gradient at step {}",
                self.step + 1
            )));
        }
        let mut tensors = params.tensors_mut();
        if tensors.len() != grads.0.len() {
            return Err(Error::Data("gradient layout does not match the parameters".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in tensors
            .iter_mut()
            .zip(&grads.0)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.learning_rate * (m_hat / (v_hat.sqrt() + self.epsilon) + self.weight_decay * p[i]);
            }
            round_to_storage(p);
        }
        Ok(())
    }

    pub fn moments_finite(&self) -> bool {
        self.first_moment.iter().chain(&self.second_moment).flatten().all(|v| v.is_finite())
    }
}
