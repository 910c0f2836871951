use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cosine annealing with warm restarts, preceded by a constant warmup.
///
/// Each cycle lasts `t0` steps and restarts at `lr_max`; there is no cycle
/// length multiplier. The warmup rate is used as given, even when it exceeds
/// `lr_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdrSchedule {
    pub lr_max: f64,
    pub lr_min: f64,
    pub t0: usize,
    #[serde(default)]
    pub warmup_steps: usize,
    #[serde(default)]
    pub warmup_lr: f64,
    pub total_steps: usize,
}

impl SgdrSchedule {
    pub fn new(
        lr_max: f64,
        lr_min: f64,
        t0: usize,
        warmup_steps: usize,
        warmup_lr: f64,
        total_steps: usize,
    ) -> Result<Self> {
        let s = SgdrSchedule {
            lr_max,
            lr_min,
            t0,
            warmup_steps,
            warmup_lr,
            total_steps,
        };
        s.validate()?;
        Ok(s)
    }

    /// Fine-grained bird classification settings, in steps.
    pub fn nabirds(steps_per_epoch: usize) -> Self {
        SgdrSchedule {
            lr_max: 0.003,
            lr_min: 1e-6,
            t0: 80 * steps_per_epoch,
            warmup_steps: steps_per_epoch,
            warmup_lr: 0.01,
            total_steps: 81 * steps_per_epoch,
        }
    }

    /// Large-scale object recognition settings, in steps.
    pub fn ilsvrc(steps_per_epoch: usize) -> Self {
        SgdrSchedule {
            lr_max: 0.2,
            lr_min: 1e-5,
            t0: 10 * steps_per_epoch,
            warmup_steps: 5 * steps_per_epoch,
            warmup_lr: 0.05,
            total_steps: 25 * steps_per_epoch,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.lr_max, self.lr_min, self.warmup_lr]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0);
        if !finite {
            return Err(Error::InvalidParameters(
                "learning rates must be finite and non-negative".into(),
            ));
        }
        if self.lr_min > self.lr_max {
            return Err(Error::InvalidParameters(format!(
                "lr_min {} exceeds lr_max {}",
                self.lr_min, self.lr_max
            )));
        }
        if self.t0 == 0 {
            return Err(Error::InvalidParameters("t0 must be at least 1".into()));
        }
        Ok(())
    }

    pub fn lr(&self, step: usize) -> Result<f64> {
        sgdr_lr(self, step)
    }
}

pub fn sgdr_lr(s: &SgdrSchedule, step: usize) -> Result<f64> {
    if step >= s.total_steps {
        return Err(Error::StepOutOfRange {
            step,
            total: s.total_steps,
        });
    }
    if step < s.warmup_steps {
        return Ok(s.warmup_lr);
    }
    let t = ((step - s.warmup_steps) % s.t0) as f64;
    Ok(s.lr_min + 0.5 * (s.lr_max - s.lr_min) * (1.0 + (PI * t / s.t0 as f64).cos()))
}
