use std::collections::BTreeMap;

use super::mat::Mat;
use super::store::Parameters;
use crate::error::{Error, Result};

/// Adam with bias correction and optional global-norm gradient clipping.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    moments: BTreeMap<String, (Mat, Mat)>,
}

impl Default for Adam {
    fn default() -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            moments: BTreeMap::new(),
        }
    }
}

impl Adam {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn moments(&self, name: &str) -> Option<(&Mat, &Mat)> {
        self.moments.get(name).map(|(m, v)| (m, v))
    }

    /// Applies one update. `clip_norm <= 0` (or non-finite) disables clipping.
    ///
    /// Returns the global gradient norm before clipping.
    pub fn step<P: Parameters + ?Sized>(
        &mut self,
        params: &mut P,
        grads: &BTreeMap<String, Mat>,
        lr: f64,
        clip_norm: f64,
    ) -> Result<f64> {
        if lr.is_nan() || lr <= 0.0 {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        let mut missing = None;
        let mut sq = 0.0;
        params.visit_params(&mut |name, p| {
            if missing.is_some() {
                return;
            }
            match grads.get(name) {
                Some(g) if g.shape() == p.shape() => {
                    sq += g.data().iter().map(|v| v * v).sum::<f64>();
                }
                Some(g) => {
                    missing = Some(format!(
                        "gradient for `{name}` has shape {:?}, parameter is {:?}",
                        g.shape(),
                        p.shape()
                    ))
                }
                None => missing = Some(format!("no gradient for parameter `{name}`")),
            }
        });
        if let Some(msg) = missing {
            return Err(Error::Contract(msg));
        }
        let norm = sq.sqrt();
        let clip = if clip_norm.is_finite() && clip_norm > 0.0 && norm > clip_norm {
            clip_norm / norm
        } else {
            1.0
        };

        self.t += 1;
        let t = self.t as i32;
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        let moments = &mut self.moments;
        params.visit_params_mut(&mut |name, p| {
            let g = &grads[name];
            let (m, v) = moments.entry(name.to_string()).or_insert_with(|| {
                (
                    Mat::zeros(p.rows(), p.cols()),
                    Mat::zeros(p.rows(), p.cols()),
                )
            });
            let pd = p.data_mut();
            let md = m.data_mut();
            let vd = v.data_mut();
            for (k, &gk) in g.data().iter().enumerate() {
                let gk = gk * clip;
                md[k] = b1 * md[k] + (1.0 - b1) * gk;
                vd[k] = b2 * vd[k] + (1.0 - b2) * gk * gk;
                let mhat = md[k] / c1;
                let vhat = vd[k] / c2;
                pd[k] -= lr * mhat / (vhat.sqrt() + eps);
            }
        });
        Ok(norm)
    }
}
