use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Step decay: `base_lr * gamma^k` where `k` counts milestones already reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    base_lr: f64,
    milestones: Vec<usize>,
    gamma: f64,
}

impl LrSchedule {
    pub fn new(base_lr: f64, milestones: Vec<usize>, gamma: f64) -> Result<Self> {
        if !(base_lr.is_finite() && base_lr >= 0.0) {
            return Err(Error::Config(format!("learning rate {base_lr} is invalid")));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Config(format!("gamma {gamma} must lie in (0, 1]")));
        }
        if milestones.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "milestones {milestones:?} must be strictly increasing"
            )));
        }
        Ok(LrSchedule {
            base_lr,
            milestones,
            gamma,
        })
    }

    pub fn constant(base_lr: f64) -> Result<Self> {
        LrSchedule::new(base_lr, Vec::new(), 1.0)
    }

    pub fn base_lr(&self) -> f64 {
        self.base_lr
    }

    pub fn milestones(&self) -> &[usize] {
        &self.milestones
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lr_at(&self, epoch: usize) -> f64 {
        let passed = self.milestones.iter().filter(|&&m| m <= epoch).count();
        self.base_lr * self.gamma.powi(passed as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_decay() {
        let s = LrSchedule::new(1e-3, vec![20, 40, 80, 90], 0.1).unwrap();
        assert_eq!(s.lr_at(0), 1e-3);
        assert_eq!(s.lr_at(19), 1e-3);
        assert!((s.lr_at(20) - 1e-4).abs() < 1e-18);
        assert!((s.lr_at(45) - 1e-5).abs() < 1e-19);
        assert!((s.lr_at(95) - 1e-7).abs() < 1e-21);
    }

    #[test]
    fn no_milestones_is_constant() {
        let s = LrSchedule::constant(5e-4).unwrap();
        assert!((0..200).all(|e| s.lr_at(e) == 5e-4));
    }

    #[test]
    fn invalid_schedules() {
        assert!(LrSchedule::new(1e-3, vec![10, 10], 0.5).is_err());
        assert!(LrSchedule::new(1e-3, vec![10], 0.0).is_err());
        assert!(LrSchedule::new(1e-3, vec![10], 1.5).is_err());
        assert!(LrSchedule::new(f64::NAN, vec![], 0.5).is_err());
    }
}
