//! Pseudo-Finsler structures `(M, A, L)`: built-in families and the
//! operators that combine them.

mod diffeo;
mod lagrangian;
mod sampling;

pub use diffeo::{DiffeoSpec, MapKind};
pub use lagrangian::{
    conformal_deform, make_berwald_moor, make_minkowski, make_pseudo_euclidean, make_weighted_product, pullback,
    rescale_by_field, Lagrangian, Signature, BM_COMPONENT_FLOOR, FACTOR_NULL_FLOOR,
};
pub(crate) use lagrangian::mat_vec;
pub use sampling::{sample_box, sample_points, REJECTIONS_PER_SAMPLE};
