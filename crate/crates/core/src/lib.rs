//! Dynamics of a semiconductor laser under external optical injection, in the
//! circularly polarized basis, together with the analysis pipeline built on
//! top of it: time-domain simulation, equilibrium location for weak and
//! strong injection, linear stability classification, extraction of the
//! injection-locking activation function, and a complex-valued network whose
//! nonlinearity is that activation.

pub mod cvnn;
pub mod equilibria;
pub mod model;
pub mod params;
pub mod sim;
pub mod stability;
pub mod strong;

pub use model::{ComplexPair, LaserState, PhaseData};
pub use params::{LaserParams, ToleranceSet};

/// Real 2-vector (field moduli skeleton, carrier pair, reduced-map values).
pub type Vec2 = nalgebra::Vector2<f64>;
/// Real 2x2 matrix.
pub type Mat2 = nalgebra::Matrix2<f64>;
/// Real 6-vector in the state ordering documented on [`model::LaserState`].
pub type Vec6 = nalgebra::Vector6<f64>;
/// Real 6x6 matrix (linearization of the real form of the system).
pub type Mat6 = nalgebra::Matrix6<f64>;
/// Complex 2-vector.
pub type CVec2 = nalgebra::Vector2<num_complex::Complex64>;
/// Complex 2x2 matrix.
pub type CMat2 = nalgebra::Matrix2<num_complex::Complex64>;
