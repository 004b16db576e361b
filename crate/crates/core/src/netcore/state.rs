use serde::{Deserialize, Serialize};

use crate::scene::{EgoState, EGO_HISTORY};
use crate::{Error, Real, Result};

pub const STATE_DIM: usize = 16;

/// Unnormalized state features: the six past positions (oldest first), then
/// speed, acceleration, the heading of the oldest sample and the heading rate.
pub fn raw_state_features(ego: &EgoState) -> [f64; STATE_DIM] {
    let mut f = [0.0; STATE_DIM];
    for (i, s) in ego.history[..EGO_HISTORY - 1].iter().enumerate() {
        f[2 * i] = s.pose.x;
        f[2 * i + 1] = s.pose.y;
    }
    f[12] = ego.current().speed;
    f[13] = ego.acceleration;
    f[14] = ego.history[0].pose.heading;
    f[15] = ego.heading_rate;
    f
}

/// Per-feature standardization constants fitted on the training corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateNorm {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Default for StateNorm {
    fn default() -> Self {
        StateNorm {
            mean: vec![0.0; STATE_DIM],
            std: vec![1.0; STATE_DIM],
        }
    }
}

const STD_FLOOR: f64 = 1e-6;

impl StateNorm {
    pub fn fit<'a>(features: impl IntoIterator<Item = &'a [f64; STATE_DIM]>) -> Result<Self> {
        let rows: Vec<&[f64; STATE_DIM]> = features.into_iter().collect();
        if rows.is_empty() {
            return Err(Error::EmptyDataset(
                "cannot fit state normalization on zero examples".into(),
            ));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; STATE_DIM];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; STATE_DIM];
        for r in &rows {
            for i in 0..STATE_DIM {
                var[i] += (r[i] - mean[i]).powi(2);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s < STD_FLOOR {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Ok(StateNorm { mean, std })
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != STATE_DIM || self.std.len() != STATE_DIM {
            return Err(Error::Shape {
                expected: format!("{STATE_DIM} normalization constants"),
                got: format!(
                    "{} means and {} deviations",
                    self.mean.len(),
                    self.std.len()
                ),
            });
        }
        if self.std.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::Validation(
                "state deviations must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn apply<T: Real>(&self, raw: &[f64; STATE_DIM]) -> [T; STATE_DIM] {
        let mut out = [T::zero(); STATE_DIM];
        for i in 0..STATE_DIM {
            out[i] = T::from_f64_lossy((raw[i] - self.mean[i]) / self.std[i]);
        }
        out
    }
}
