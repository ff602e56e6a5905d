//! Exact counts of rational points, Lehmer points, visible points and
//! visible Lehmer points on affine varieties over prime fields, together
//! with the asymptotic main terms they are compared against and empirical
//! checks of the exponential-sum bounds behind those asymptotics.

pub mod counting;
pub mod error;
pub mod expsum;
pub mod family;
mod kernel;
pub mod numtheory;
pub mod polynomial;
pub mod region;
pub mod report;
pub mod variety;

pub use error::{Error, Result};
pub use polynomial::Polynomial;
pub use region::{BoxRegion, Interval};
pub use report::{Budget, CountReport, Quantity};
pub use variety::{Enumerator, PointFilter, VarietySpec};
