//! Cutting measures and colored point sets by halfspaces and convex windows.
//!
//! The crate has four layers. `scalar`, `geom`, `colored`, `dichotomy` and
//! `grid` provide exact rational primitives (points, affine functionals,
//! halfspaces, step-density grids) and the combinatorial enumeration of
//! halfspace dichotomies. `balanced` finds hyperplanes cutting off equally
//! many points of every color. `sandwich` bisects signed measures and runs
//! the continuation that produces equal-fraction halfspace cuts. `window`
//! solves the 1D interval-window problem exactly, builds and verifies its
//! counterexamples, and computes generalized Voronoi equipartitions whose
//! distinguished cell is convex.
//!
//! Exact combinatorial paths use arbitrary-precision rationals; continuous
//! solvers use f64 with tolerances declared at each entry point.

pub mod balanced;
pub mod colored;
pub mod dichotomy;
pub mod geom;
pub mod grid;
pub mod io;
pub mod sandwich;
pub mod scalar;
pub mod window;

pub use colored::ColoredPointSet;
pub use geom::{AffineFunctional, Halfspace, Point, Sense, Sign};
pub use grid::DensityGrid;
pub use scalar::Rational;
pub use window::{ConvexCell, ConvexWindow, GVPartition, IntervalWindow, QuadraticFunctional};
