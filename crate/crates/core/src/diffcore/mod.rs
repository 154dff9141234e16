//! Differentiable kernels, Adam, and finite-difference gradient checking.

mod adam;
mod gemm;
mod gradcheck;
mod tape;
mod tensor;

pub use adam::{AdamState, Param};
pub use gradcheck::{analytic_gradients, compare_gradients, grad_check, GradCheckOptions, GradCheckReport};
pub use tape::{Tape, Var};
pub use tensor::Tensor;

