use serde::{Deserialize, Serialize};

use super::SolverError;

/// Geometric step sizes `t_k = t0 * rho^k`, `k = 0..shells`, with `angles`
/// directions sampled per shell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSchedule {
    pub t0: f64,
    pub rho: f64,
    pub shells: usize,
    pub angles: usize,
}

impl Default for SequenceSchedule {
    fn default() -> Self {
        SequenceSchedule {
            t0: 0.1,
            rho: 0.5,
            shells: 20,
            angles: 8,
        }
    }
}

/// Angular half-width of the direction cap at the first shell.
pub const CAP_WIDTH: f64 = 0.5;

impl SequenceSchedule {
    pub fn validate(&self) -> Result<(), SolverError> {
        let ok = self.t0 > 0.0
            && self.t0.is_finite()
            && self.rho > 0.0
            && self.rho < 1.0
            && self.shells > 0
            && self.angles > 0;
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidSchedule(format!("{self:?}")))
        }
    }

    pub fn step(&self, k: usize) -> f64 {
        self.t0 * self.rho.powi(k as i32)
    }

    pub fn steps(&self) -> Vec<f64> {
        (0..self.shells).map(|k| self.step(k)).collect()
    }

    /// Cap width used at shell `k`; shrinks like `sqrt(t_k)` so perturbed
    /// directions converge to the nominal one.
    pub fn cap_width(&self, k: usize) -> f64 {
        CAP_WIDTH * (self.step(k) / self.t0).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strictly_decreasing() {
        let s = SequenceSchedule::default();
        let t = s.steps();
        assert_eq!(t.len(), 20);
        assert!(t.windows(2).all(|w| w[1] < w[0]));
        assert!((t[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_ratio() {
        let s = SequenceSchedule {
            rho: 1.0,
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }
}
