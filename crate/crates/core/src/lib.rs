//! Shooting-method construction of radial nodal bound states for
//! `(φ_m(u'))' + ((N-1)/r) φ_m(u') + f(u) = 0`.

pub mod classifier;
pub mod error;
pub mod ext;
pub mod integrator;
pub mod nonlinearity;
pub mod quadrature;
pub mod roots;
pub mod solver;

pub use classifier::{classify, extract_events, Class, ClassLabel, EventTrace};
pub use error::{Error, Result};
pub use nonlinearity::{find_landmarks, CatalogSpec, Landmarks, Nonlinearity};
pub use solver::{bisect, bracket, solve, sweep, BoundState, SolverConfig};
