//! Adaptive first-order scattering-matrix solver for periodic photonic
//! structures whose cross-section varies continuously along `z`.
//!
//! A structure is cut into `z`-sections. Each section is described in the
//! eigenmode basis of one reference cross-section, and the variation of the
//! cross-section inside the section enters through first-order integral
//! corrections. The size of those corrections doubles as an error estimate
//! that drives recursive subdivision.
//!
//! ```no_run
//! use varrcwa::{parse_structure, solve_adaptive, ReferenceRule, SolverConfig};
//!
//! let text = std::fs::read_to_string("structures/taper.json").unwrap();
//! let spec = parse_structure(&text).unwrap();
//! let report = solve_adaptive(&spec, &SolverConfig::with_rule(1e-3, ReferenceRule::Midpoint)).unwrap();
//! println!("{} sections, {} eigendecompositions", report.sections.len(), report.total_eig_count);
//! ```

pub mod cascade;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod modal;
pub mod operators;
pub mod section;
pub mod smatrix;
pub mod solver;
pub mod validate;

pub use error::{Error, Result};
pub use geometry::{parse_structure, slice_at, Polarization, Profile, StructureSpec};
pub use section::Order;
pub use smatrix::ScatteringMatrix;
pub use solver::{solve_adaptive, solve_uniform, ReferenceRule, SolveReport, SolverConfig};
