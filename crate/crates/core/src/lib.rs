//! Exact interval-set measure algebra, step functions, and certified
//! Riemann, Lebesgue and L2 computations over representable functions.

pub mod error;
pub mod expr;
pub mod exact;
pub mod iv;
pub mod l2;
pub mod lebesgue;
pub mod quad;
pub mod rat;
pub mod scalar;
pub mod step;

pub use error::{Error, Result};
pub use expr::{FuncExpr, SetExpr};
pub use quad::IntegralEnclosure;
pub use rat::Rat;

pub type RatInterval = exact::Interval<Rat>;
pub type RatSet = exact::IntervalSet<Rat>;
pub type RatStep = step::StepFunction<Rat>;
pub type F64Step = step::StepFunction<f64>;
pub type ExactIv = iv::Iv<scalar::ExtRat>;
pub type FloatIv = iv::Iv<f64>;
