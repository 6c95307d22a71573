//! Exact symbolic coefficient ring: parameters, coordinates, jet variables,
//! parameter-valued exponents, derivatives, and power grouping.

mod coord;
mod expr;
mod poly;

pub use coord::{Coordinate, CoordKind, Direction, MAX_JET_ORDER};
pub use expr::{AssumptionSet, PowerMap, ScalarExpr, Term, Trivalent};
pub use poly::{Monomial, ParamRational, Poly};

/// A declared parameter with its restricting flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parameter {
    pub name: String,
    pub nonzero: bool,
    pub integer: bool,
}

impl Parameter {
    pub fn new(name: &str) -> Self {
        Parameter { name: name.to_string(), nonzero: false, integer: false }
    }

    pub fn nonzero(name: &str) -> Self {
        Parameter { name: name.to_string(), nonzero: true, integer: false }
    }
}
