use super::tensor::Tensor;
use crate::error::{Error, Result};

/// A named trainable tensor and its pending gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Option<Vec<f64>>,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        Param {
            name: name.into(),
            value,
            grad: None,
        }
    }
}

/// Bias-corrected Adam with per-parameter moment buffers.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    /// Fresh state with moments shaped like `params` and default hyperparameters.
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Param>) -> Self {
        let sizes: Vec<usize> = params.into_iter().map(|p| p.value.len()).collect();
        AdamState {
            step_count: 0,
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            first_moment: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn with_lr(mut self, lr: f64) -> Self {
        self.lr = lr;
        self
    }

    pub fn first_moment(&self) -> &[Vec<f64>] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[Vec<f64>] {
        &self.second_moment
    }

    /// Applies one update to `params` (same order as at construction) and clears their gradients.
    pub fn step<'a>(&mut self, params: impl IntoIterator<Item = &'a mut Param>) -> Result<()> {
        let mut params: Vec<&mut Param> = params.into_iter().collect();
        if params.len() != self.first_moment.len() {
            return Err(Error::Contract(format!(
                "optimizer tracks {} parameters, got {}",
                self.first_moment.len(),
                params.len()
            )));
        }
        for (p, m) in params.iter().zip(&self.first_moment) {
            match &p.grad {
                None => {
                    return Err(Error::Contract(format!("parameter {} has no gradient", p.name)));
                }
                Some(g) if g.len() != m.len() || p.value.len() != m.len() => {
                    return Err(Error::shape("adam", &[m.len()], &[g.len()]));
                }
                Some(_) => {}
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for ((p, m), v) in params
            .iter_mut()
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            let g = p.grad.take().expect("checked above");
            for (((w, &gi), mi), vi) in p.value.data_mut().iter_mut().zip(&g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * gi;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_param(v: f64) -> Param {
        Param::new("w", Tensor::scalar(v))
    }

    #[test]
    fn zero_gradient_leaves_params_and_counts_step() {
        let mut p = scalar_param(0.7);
        let mut opt = AdamState::new([&p]);
        p.grad = Some(vec![0.0]);
        opt.step([&mut p]).unwrap();
        assert_eq!(p.value.data()[0], 0.7);
        assert_eq!(opt.step_count, 1);
        assert!(p.grad.is_none());
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = scalar_param(1.0);
        let mut opt = AdamState::new([&p]);
        p.grad = Some(vec![1.0]);
        opt.step([&mut p]).unwrap();
        assert!((p.value.data()[0] - (1.0 - 0.001)).abs() < 1e-10);
    }

    #[test]
    fn missing_gradient_is_contract_error() {
        let mut p = scalar_param(1.0);
        let mut opt = AdamState::new([&p]);
        assert!(matches!(opt.step([&mut p]), Err(Error::Contract(_))));
        assert_eq!(opt.step_count, 0);
    }

    #[test]
    fn ten_steps_on_square_match_reference() {
        // Hand-rolled scalar Adam, written independently of the vectorised loop.
        let (lr, b1, b2, eps) = (0.001f64, 0.9f64, 0.999f64, 1e-8f64);
        let mut w_ref = 1.5f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        let mut trajectory = Vec::new();
        for t in 1..=10 {
            let g = 2.0 * w_ref;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            w_ref -= lr * mh / (vh.sqrt() + eps);
            trajectory.push(w_ref);
        }

        let mut p = scalar_param(1.5);
        let mut opt = AdamState::new([&p]);
        for want in trajectory {
            p.grad = Some(vec![2.0 * p.value.data()[0]]);
            opt.step([&mut p]).unwrap();
            assert!((p.value.data()[0] - want).abs() < 1e-12);
        }
        assert_eq!(opt.step_count, 10);
    }
}
