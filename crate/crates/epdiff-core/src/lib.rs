//! A pseudospectral laboratory for geodesic flow on the diffeomorphism group
//! of the flat torus T^d (d = 1, 2) under right-invariant Sobolev-type
//! metrics with pseudo-differential inertia operators.
//!
//! The crate provides
//! - truncated Fourier fields, Sobolev norms, dealiased products and
//!   composition with diffeomorphisms ([`field`], [`diffeo`]),
//! - symbols and their Kohn-Nirenberg realization, elliptic solves and
//!   commutator algebra ([`symbol`], [`operator`]),
//! - the nested-commutator calculus behind derivatives of conjugation,
//!   with recurrence/splitting cross-checks and boundedness probes
//!   ([`commutator`], [`conjugation`]),
//! - Euler-Arnold / EPDiff right-hand sides, geodesic integration in both
//!   Eulerian and Lagrangian form, metric evaluation and geodesic shooting
//!   ([`geodesic`]),
//! - textual artifact formats and the verification suite driving the CLI
//!   ([`io`], [`verify`]).

pub mod commutator;
pub mod conjugation;
pub mod diffeo;
pub mod error;
pub mod field;
pub mod geodesic;
pub mod grid;
pub mod io;
pub mod operator;
pub mod sampling;
pub mod symbol;
pub mod verify;

pub use diffeo::Diffeo;
pub use error::{Error, Result};
pub use field::SpectralField;
pub use grid::TorusGrid;
pub use operator::SpectralOperator;
pub use symbol::SymbolSpec;
