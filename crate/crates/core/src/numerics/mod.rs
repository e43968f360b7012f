//! Special functions, quadrature, polynomial roots and least squares.

pub mod gamma;
pub mod hypergeometric;
pub mod least_squares;
pub mod polynomial;
pub mod quadrature;
pub mod roots;

pub use gamma::{gamma, ln_abs_gamma, log_gamma};
pub use hypergeometric::{kummer_m, tricomi_u};
pub use least_squares::{fit_least_squares, FitReport, LevenbergMarquardt};
pub use polynomial::Polynomial;
pub use quadrature::{integrate_adaptive, Bound, GaussLegendre, Integral, Quadrature};
pub use roots::{find_real_roots, find_roots, RootSet};
