//! First-order optimizers over [`ModelParams`] blocks.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(Error::Config(format!("unknown optimizer {s:?}"))),
        }
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd { lr: f64 },
    Adam { lr: f64, t: i32, m: Vec<Vec<f64>>, v: Vec<Vec<f64>> },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, params: &ModelParams) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
            OptimizerKind::Adam => {
                let zeros: Vec<Vec<f64>> = params.blocks().iter().map(|(_, b)| vec![0.0; b.len()]).collect();
                Optimizer::Adam {
                    lr,
                    t: 0,
                    m: zeros.clone(),
                    v: zeros,
                }
            }
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams) {
        let grad_blocks = grads.blocks();
        match self {
            Optimizer::Sgd { lr } => {
                for (p, (_, g)) in params.blocks_mut().into_iter().zip(&grad_blocks) {
                    for (pv, &gv) in p.iter_mut().zip(g.iter()) {
                        *pv -= *lr * gv;
                    }
                }
            }
            Optimizer::Adam { lr, t, m, v } => {
                *t += 1;
                let c1 = 1.0 - BETA1.powi(*t);
                let c2 = 1.0 - BETA2.powi(*t);
                for (((p, (_, g)), mb), vb) in params
                    .blocks_mut()
                    .into_iter()
                    .zip(&grad_blocks)
                    .zip(m.iter_mut())
                    .zip(v.iter_mut())
                {
                    for i in 0..p.len() {
                        let gi = g[i];
                        mb[i] = BETA1 * mb[i] + (1.0 - BETA1) * gi;
                        vb[i] = BETA2 * vb[i] + (1.0 - BETA2) * gi * gi;
                        let mhat = mb[i] / c1;
                        let vhat = vb[i] / c2;
                        p[i] -= *lr * mhat / (vhat.sqrt() + EPS);
                    }
                }
            }
        }
    }
}
