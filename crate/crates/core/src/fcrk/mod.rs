//! Explicit functional continuous Runge-Kutta methods of orders 1 to 4.

mod driver;
mod order;
mod step;
mod tableau;

pub use driver::{integrate, lambda_step, IntegrateOptions, StepRule};
pub use order::{verify_order_conditions, ConditionResidual, OrderReport};
pub use step::{take_step, StepResult};
pub use tableau::{fcrk1, fcrk2, fcrk3, fcrk4, method_by_name, FcrkTableau, Poly, METHOD_NAMES};
