//! Exact spatial jets and parameter gradients.
//!
//! Two complementary pieces live here: [`Jet`], a scalar forward-mode type
//! carrying value, gradient and Hessian, used for closed-form fields and
//! pointwise network evaluation; and [`Graph`], a batched tape that pushes the
//! same jets through whole layers and back-propagates into the parameters.

mod activation;
mod dd;
mod gradcheck;
mod jet;
mod kernels;
mod real;
mod tape;

pub use activation::Activation;
pub use dd::Dd;
pub use gradcheck::{
    central_difference, check_gradient_fd, loss_gradient, relative_discrepancy, Objective,
    ParamGradient,
};
pub use jet::{eval_jet, Jet, JetOf, ValueJet, HESS_INDEX, HESS_PAIRS, MAX_DIM};
pub use real::Real;
pub use tape::{Graph, JetLayout, JetOrder, NodeId, Tensor};
