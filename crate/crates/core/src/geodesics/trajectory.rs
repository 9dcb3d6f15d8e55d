use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::zoo::Lagrangian;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Why an integration stopped before `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Truncation {
    /// A stage or step left the admissible set.
    LeftAdmissibleSet { t: f64 },
    DegenerateMetric { t: f64, message: String },
}

/// Time-sampled geodesic `(t_k, x_k, y_k)`; every stored sample is
/// admissible.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub(crate) samples: Vec<Sample>,
    pub(crate) l0: f64,
    pub(crate) h: f64,
    pub(crate) order: u8,
    pub(crate) truncation: Option<Truncation>,
}

impl Trajectory {
    /// Build a trajectory from externally produced samples on a uniform
    /// grid of step `h`.
    pub fn from_samples(samples: Vec<Sample>, l0: f64, h: f64) -> Self {
        Self {
            samples,
            l0,
            h,
            order: 0,
            truncation: None,
        }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `L(x_0, y_0)`.
    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Order of the stepper, 4 for RK4.
    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn truncation(&self) -> Option<&Truncation> {
        self.truncation.as_ref()
    }

    pub fn is_truncated(&self) -> bool {
        self.truncation.is_some()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.x.clone()).collect()
    }

    /// CSV with columns `t,x0..,y0..,L`.
    pub fn to_csv(&self, l: &Lagrangian) -> String {
        let n = l.dim();
        let mut out = String::from("t");
        for i in 0..n {
            write!(out, ",x{i}").unwrap();
        }
        for i in 0..n {
            write!(out, ",y{i}").unwrap();
        }
        out.push_str(",L\n");
        for s in &self.samples {
            write!(out, "{:?}", s.t).unwrap();
            for v in s.x.iter().chain(&s.y) {
                write!(out, ",{v:?}").unwrap();
            }
            let lv = l.value(&s.x, &s.y).unwrap_or(f64::NAN);
            writeln!(out, ",{lv:?}").unwrap();
        }
        out
    }

    pub fn write_csv(&self, l: &Lagrangian, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv(l))?;
        Ok(())
    }
}
