//! Conformal maps and conformal vector fields: residuals, factor
//! estimates, Lie derivatives, spray defects and the associated metric.

mod associated;
mod defect;
mod field;
mod fields;
mod maps;
mod verdict;

pub use associated::{associated_lemma_probe, associated_metric, AssociatedMetric, LemmaEntry, LemmaReport};
pub use defect::{conformal_spray_formula, spray_defect, weyl_probe, Projection, SprayDefect, WeylReport, Witness, WITNESS_THRESHOLD};
pub use field::{flow, lie_derivative, FlowMap, VectorFieldSpec, FLOW_STEPS};
pub use fields::{
    conformal_field_report, conservation_along_null, essential_scan, lie_derivative_l, ConservationReport,
    EssentialScan, ScanPoint, MU_NONNULL, NULL_START_TOL,
};
pub use maps::{conformal_residual, estimate_conformal_factor, factor_samples, FactorEstimate};
pub use verdict::{ConformalVerdict, PointFactor, Tolerances, Verdict};
