use std::fmt;
use std::str::FromStr;

use crate::estimate::{CoolingSchedule, Method};
use crate::inference::ReferenceBlock;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Exact pipeline, hypothetical caps equal to the null ones.
    Realizable,
    /// Exact pipeline, caps below the null ones.
    Unrealizable,
    /// Annealing for both the estimate and the truncation.
    Approx,
    /// Annealing at shrink level 3 with a chosen cooling ratio.
    Sensitivity,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Realizable => "realizable",
            Scenario::Unrealizable => "unrealizable",
            Scenario::Approx => "approx",
            Scenario::Sensitivity => "sensitivity",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "realizable" => Ok(Scenario::Realizable),
            "unrealizable" => Ok(Scenario::Unrealizable),
            "approx" => Ok(Scenario::Approx),
            "sensitivity" => Ok(Scenario::Sensitivity),
            other => Err(Error::Parse(format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationKind {
    Exact,
    Anneal,
}

impl FromStr for TruncationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(TruncationKind::Exact),
            "sa" => Ok(TruncationKind::Anneal),
            other => Err(Error::Parse(format!("unknown truncation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceMode {
    Known,
    Unknown(ReferenceBlock),
}

/// Block mean matrices of the published experiments, keyed by null caps.
pub fn default_base_means(k_null: usize, h_null: usize) -> Option<Vec<Vec<f64>>> {
    let rows: &[&[f64]] = match (k_null, h_null) {
        (2, 2) => &[&[0.7, 0.55], &[0.5, 0.6]],
        (3, 2) => &[&[0.7, 0.55], &[0.5, 0.6], &[0.55, 0.5]],
        (3, 3) => &[&[0.6, 0.55, 0.7], &[0.4, 0.6, 0.5], &[0.65, 0.5, 0.6]],
        (4, 4) => &[&[0.6, 0.55, 0.7, 0.5], &[0.4, 0.6, 0.5, 0.7], &[0.65, 0.5, 0.6, 0.4], &[0.5, 0.4, 0.45, 0.6]],
        (5, 5) => &[
            &[0.6, 0.55, 0.7, 0.5, 0.65],
            &[0.4, 0.6, 0.5, 0.7, 0.55],
            &[0.65, 0.5, 0.6, 0.4, 0.45],
            &[0.5, 0.4, 0.45, 0.6, 0.7],
            &[0.7, 0.65, 0.55, 0.45, 0.6],
        ],
        _ => return None,
    };
    Some(rows.iter().map(|r| r.to_vec()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub p: usize,
    pub k_null: usize,
    pub h_null: usize,
    pub k: usize,
    pub h: usize,
    /// `k_null x h_null` block means before shrinking.
    pub base_means: Vec<Vec<f64>>,
    /// Separation level `l` in `1..=5`; block means shrink toward 0.5 by
    /// `1 - (l - 1) / 5`.
    pub level: u8,
    pub sigma0: f64,
    pub trials: usize,
    pub estimator: Method,
    pub truncation: TruncationKind,
    pub variance: VarianceMode,
    pub schedule: CoolingSchedule,
    pub seed: u64,
    /// Record wall-clock time per trial; off gives byte-identical CSVs.
    pub timing: bool,
}

impl ScenarioConfig {
    /// Preset for `scenario` with the published defaults: null caps (2, 2)
    /// (or (3, 2) when unrealizable), caps equal to the null ones (or (2, 2)
    /// when unrealizable), level 1 (3 for sensitivity), `sigma0 = 0.05`.
    pub fn preset(scenario: Scenario, n: usize, p: usize) -> Self {
        let (k_null, h_null) = if scenario == Scenario::Unrealizable { (3, 2) } else { (2, 2) };
        let annealed = matches!(scenario, Scenario::Approx | Scenario::Sensitivity);
        Self {
            scenario,
            n,
            p,
            k_null,
            h_null,
            k: 2,
            h: 2,
            base_means: default_base_means(k_null, h_null).expect("preset caps have defaults"),
            level: if scenario == Scenario::Sensitivity { 3 } else { 1 },
            sigma0: 0.05,
            trials: 1000,
            estimator: if annealed { Method::Anneal } else { Method::Exact },
            truncation: if annealed { TruncationKind::Anneal } else { TruncationKind::Exact },
            variance: VarianceMode::Known,
            schedule: CoolingSchedule::default(),
            seed: 0,
            timing: true,
        }
    }

    /// Replaces the null caps and, when a default exists, the base means.
    pub fn with_null_caps(mut self, k_null: usize, h_null: usize) -> Self {
        self.k_null = k_null;
        self.h_null = h_null;
        if let Some(b) = default_base_means(k_null, h_null) {
            self.base_means = b;
        }
        self
    }

    pub fn shrink(&self) -> f64 {
        1.0 - (self.level as f64 - 1.0) / 5.0
    }

    pub fn validate(&self) -> Result<()> {
        crate::enumerate::check_caps(self.n, self.p, self.k, self.h)?;
        crate::enumerate::check_caps(self.n, self.p, self.k_null, self.h_null)?;
        if !(1..=5).contains(&self.level) {
            return Err(Error::Domain(format!("level must lie in 1..=5, got {}", self.level)));
        }
        if self.trials == 0 {
            return Err(Error::Domain("at least one trial is required".into()));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::Domain(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        if self.base_means.len() != self.k_null || self.base_means.iter().any(|r| r.len() != self.h_null) {
            return Err(Error::Domain(format!(
                "base mean matrix must be {}x{}",
                self.k_null, self.h_null
            )));
        }
        if self.base_means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("base means must be finite".into()));
        }
        if matches!(self.variance, VarianceMode::Unknown(_)) && self.truncation == TruncationKind::Anneal {
            return Err(Error::Domain("the unknown-variance test only supports exact truncation".into()));
        }
        self.schedule.validate()
    }
}
