//! Forward-mode automatic differentiation on the tangent bundle.

mod dual;
mod fd;
mod jacobian;
mod jet;
mod scalar;

pub use dual::Dual;
pub use fd::{fd_check, FdReport};
pub use jacobian::{jacobian, jacobian_generic, JacobianValue, PointMap};
pub use jet::{grad_x, grad_y, jet_eval, second_order, Jet, OrderMask, ScalarField, SecondOrder, Tensor3};
pub use scalar::Scalar;
