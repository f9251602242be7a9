//! First-order optimizers: plain SGD and bias-corrected Adam.

use crate::error::{Error, Result};
use crate::numeric::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl OptimizerKind {
    /// Adam with the usual defaults (beta1 0.9, beta2 0.999, eps 1e-8).
    pub fn adam() -> Self {
        Self::Adam { beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Self::Sgd),
            "adam" => Ok(Self::adam()),
            other => Err(Error::Config(format!("unknown optimizer '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sgd => "sgd",
            Self::Adam { .. } => "adam",
        }
    }
}

/// Mutable optimizer state for a fixed list of parameter shapes.
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    step: u64,
    first_moment: Vec<Matrix>,
    second_moment: Vec<Matrix>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, shapes: &[(usize, usize)]) -> Self {
        let (m, v) = match kind {
            OptimizerKind::Sgd => (Vec::new(), Vec::new()),
            OptimizerKind::Adam { .. } => (
                shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
                shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
            ),
        };
        Self { kind, learning_rate, step: 0, first_moment: m, second_moment: v }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over matched parameter/gradient lists.
    pub fn step(&mut self, params: Vec<&mut Matrix>, grads: &[Matrix]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Dimension(format!(
                "optimizer: {} params vs {} grads",
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.into_iter().zip(grads) {
                    if p.shape() != g.shape() {
                        return Err(Error::Dimension(format!(
                            "sgd: param {:?} vs grad {:?}",
                            p.shape(),
                            g.shape()
                        )));
                    }
                    *p = p.sub(&g.scale(self.learning_rate))?;
                }
            }
            OptimizerKind::Adam { beta1, beta2, epsilon } => {
                let t = self.step as i32;
                let bc1 = 1.0 - beta1.powi(t);
                let bc2 = 1.0 - beta2.powi(t);
                for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
                    if p.shape() != g.shape() || p.shape() != self.first_moment[i].shape() {
                        return Err(Error::Dimension(format!(
                            "adam: param {:?} vs grad {:?} vs state {:?}",
                            p.shape(),
                            g.shape(),
                            self.first_moment[i].shape()
                        )));
                    }
                    let m = &mut self.first_moment[i];
                    let v = &mut self.second_moment[i];
                    *m = m.scale(beta1).add(&g.scale(1.0 - beta1))?;
                    *v = v.scale(beta2).add(&g.hadamard(g)?.scale(1.0 - beta2))?;
                    let update = Matrix::from_fn(p.rows(), p.cols(), |r, c| {
                        let mh = m.get(r, c) / bc1;
                        let vh = v.get(r, c) / bc2;
                        self.learning_rate * mh / (vh.sqrt() + epsilon)
                    });
                    *p = p.sub(&update)?;
                }
            }
        }
        Ok(())
    }
}
