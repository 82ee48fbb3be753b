use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Optimizer {
    Adam {
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    Sgd {
        learning_rate: f64,
    },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            learning_rate: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl OptimizerState {
    pub fn new(net: &Mlp) -> Self {
        let n = net.n_parameters();
        OptimizerState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// One descent step on `net` along `grads`.
    pub fn step(&mut self, optimizer: &Optimizer, net: &mut Mlp, grads: &Gradients) {
        self.t += 1;
        let mut offset = 0;
        for (params, g) in net.parts_mut().into_iter().zip(grads.parts()) {
            let m = &mut self.m[offset..offset + params.len()];
            let v = &mut self.v[offset..offset + params.len()];
            offset += params.len();
            match *optimizer {
                Optimizer::Sgd { learning_rate } => {
                    params.iter_mut().zip(g).for_each(|(p, g)| *p -= learning_rate * g);
                }
                Optimizer::Adam {
                    learning_rate,
                    beta1,
                    beta2,
                    epsilon,
                } => {
                    let c1 = 1.0 - beta1.powi(self.t);
                    let c2 = 1.0 - beta2.powi(self.t);
                    for (((p, g), m), v) in params.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *m = beta1 * *m + (1.0 - beta1) * g;
                        *v = beta2 * *v + (1.0 - beta2) * g * g;
                        *p -= learning_rate * (*m / c1) / ((*v / c2).sqrt() + epsilon);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cgan::mlp::Activation;
    use nalgebra::DMatrix;

    #[test]
    fn first_adam_step_moves_each_parameter_by_the_learning_rate() {
        let mut net = Mlp::zeros(1, 2, 1, Activation::Tanh);
        let mut grads = Gradients {
            w1: DMatrix::from_element(1, 2, 0.3),
            b1: nalgebra::DVector::from_element(2, -2.0),
            w2: DMatrix::from_element(2, 1, 5.0),
            b2: nalgebra::DVector::from_element(1, 1e-3),
        };
        let opt = Optimizer::default();
        let mut state = OptimizerState::new(&net);
        state.step(&opt, &mut net, &grads);
        assert!((net.w1[0] + 2e-4).abs() < 1e-9);
        assert!((net.b1[0] - 2e-4).abs() < 1e-9);
        grads.w1.fill(0.0);
        let before = net.clone();
        let mut sgd_state = OptimizerState::new(&net);
        sgd_state.step(&Optimizer::Sgd { learning_rate: 0.1 }, &mut net, &grads);
        assert_eq!(net.w1, before.w1);
        assert!((net.w2[0] - (before.w2[0] - 0.5)).abs() < 1e-12);
    }
}
