use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Conformal,
    /// Factor identically zero for fields, identically one for maps.
    Killing,
    NotConformal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative residual of `L′∘df = e^σ L`, and the Killing threshold
    /// on `|μ̂|`.
    pub residual: f64,
    /// Allowed spread of the factor estimate across directions at one `x`.
    pub anisotropy: f64,
    /// Allowed `|𝓛L| / ‖y‖²` on the null cone.
    pub null_cone: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-8,
            anisotropy: 1e-8,
            null_cone: 1e-8,
        }
    }
}

/// Factor estimate at one base point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFactor {
    pub x: Vec<f64>,
    pub value: f64,
    pub anisotropy: f64,
    /// Directions that entered the estimate.
    pub used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalVerdict {
    pub max_residual: f64,
    pub factors: Vec<PointFactor>,
    pub anisotropy: f64,
    /// Null directions probed and the largest `|𝓛L| / ‖y‖²` among them.
    pub null_checked: usize,
    pub null_max: f64,
    /// Samples dropped as inadmissible or null.
    pub skipped: usize,
    pub verdict: Verdict,
    pub tolerances: Tolerances,
}

impl ConformalVerdict {
    pub fn max_factor(&self) -> f64 {
        self.factors.iter().fold(0.0, |m, f| m.max(f.value.abs()))
    }
}
