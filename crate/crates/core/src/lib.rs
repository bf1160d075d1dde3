//! Exact computer algebra for dg-categories, A∞-(co)algebras and
//! (co)modules, bar/cobar constructions, homotopy limits of cosimplicial
//! systems of dg-algebras, and the translation of homotopy descent data
//! into homotopy-counital comodules.
//!
//! Everything is finite dimensional over ℚ or a prime field, with exact
//! arithmetic throughout: validators return hard pass/fail answers, never
//! approximations.

pub mod error;
pub mod scalar;
pub mod linalg;
pub mod graded;
pub mod complex;
pub mod algebra;
pub mod dgcat;
pub mod ainfty;
pub mod cosimplicial;
pub mod simplexfun;
pub mod holim;
pub mod descent;
pub mod gen;
pub mod io;
pub mod selftest;

pub use error::CoreError;
pub use scalar::{Field, Scalar};
