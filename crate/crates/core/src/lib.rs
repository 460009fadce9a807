//! Numerical caloron correspondence and characteristic forms.
//!
//! The crate discretizes product manifolds ([`grid`]), represents
//! matrix-valued differential forms on them ([`forms`]) and builds the
//! Chern-Weil, string and transgression forms of connection data
//! ([`chernweil`], [`stringforms`]) together with the decision procedures of
//! [`kmodel`]. Every numerical type is generic over [`Real`]; the aliases at
//! the crate root fix the scalar to `f64`.

pub mod chernweil;
pub mod error;
pub mod forms;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod kmodel;
pub mod lie;
pub mod linalg;
pub mod quadrature;
pub mod random;
pub mod scalar;
pub mod stringforms;
pub mod suites;

pub use error::{Error, Result};
pub use forms::{ExactnessReport, Parity, Verdict};
pub use grid::{Factor, GridSpec};
pub use scalar::Real;

pub type Complex = num_complex::Complex<f64>;
pub type Grid = grid::Grid<f64>;
pub type MatrixForm = forms::MatrixForm<f64>;
pub type GradedForm = forms::GradedForm<f64>;
pub type GroupMap = lie::GroupMap<f64>;
pub type ConnectionPair = geometry::ConnectionPair<f64>;
pub type FramedConnection = geometry::FramedConnection<f64>;
pub type PairPath = geometry::PairPath<f64>;
pub type ConnectionPath = chernweil::ConnectionPath<f64>;
pub type EquivalenceReport = kmodel::EquivalenceReport<f64>;
