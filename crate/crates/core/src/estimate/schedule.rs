use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cooling {
    /// `T_t = t0 * ratio^t`.
    Geometric { t0: f64, ratio: f64 },
    /// `T_t = c / ln(t + 2)`.
    Logarithmic { c: f64 },
}

/// Temperature sequence with a stopping threshold.
///
/// Annealing stops at the first `t` with `T_t < epsilon`, or after
/// `max_steps` iterations when a cap is set. The logarithmic schedule only
/// reaches `epsilon` after about `exp(c / epsilon)` steps, so it needs a cap in
/// practice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingSchedule {
    pub cooling: Cooling,
    pub epsilon: f64,
    pub max_steps: Option<u64>,
}

impl Default for CoolingSchedule {
    fn default() -> Self {
        Self { cooling: Cooling::Geometric { t0: 10.0, ratio: 0.99 }, epsilon: 1e-6, max_steps: None }
    }
}

impl CoolingSchedule {
    pub fn geometric(t0: f64, ratio: f64, epsilon: f64) -> Result<Self> {
        let s = Self { cooling: Cooling::Geometric { t0, ratio }, epsilon, max_steps: None };
        s.validate()?;
        Ok(s)
    }

    pub fn logarithmic(c: f64, epsilon: f64, max_steps: u64) -> Result<Self> {
        let s = Self { cooling: Cooling::Logarithmic { c }, epsilon, max_steps: Some(max_steps) };
        s.validate()?;
        Ok(s)
    }

    pub fn with_max_steps(mut self, max_steps: Option<u64>) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidSchedule("epsilon must be positive"));
        }
        match self.cooling {
            Cooling::Geometric { t0, ratio } => {
                if !(t0 > 0.0 && t0.is_finite()) {
                    return Err(Error::InvalidSchedule("initial temperature must be positive"));
                }
                if !(ratio > 0.0 && ratio < 1.0) {
                    return Err(Error::InvalidSchedule("ratio must lie in (0, 1)"));
                }
            }
            Cooling::Logarithmic { c } => {
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(Error::InvalidSchedule("logarithmic constant must be non-negative"));
                }
            }
        }
        Ok(())
    }

    pub fn temperature(&self, t: u64) -> f64 {
        match self.cooling {
            Cooling::Geometric { t0, ratio } => t0 * ratio.powf(t as f64),
            Cooling::Logarithmic { c } => c / ((t + 2) as f64).ln(),
        }
    }

    /// Whether iteration `t` runs.
    pub fn running(&self, t: u64) -> bool {
        self.max_steps.is_none_or(|m| t < m) && self.temperature(t) >= self.epsilon
    }

    /// Number of iterations the schedule runs before stopping.
    pub fn length(&self) -> Option<u64> {
        match self.cooling {
            Cooling::Geometric { .. } => {
                let mut t = 0;
                while self.running(t) {
                    t += 1;
                }
                Some(t)
            }
            Cooling::Logarithmic { .. } => self.max_steps,
        }
    }
}
