//! Open Dynamics Kit: a numerical toolkit for finite-dimensional open
//! quantum systems.
//!
//! The crate covers the full pipeline from representations of states and
//! maps, through generators and propagation, to divisibility diagnostics
//! and information monotones:
//!
//! - [`repcore`] — density matrices, superoperators, Choi/Kraus/Bloch
//!   representations, positivity classification;
//! - [`generators`] — GKLS generators, canonical splitting, spectral
//!   analysis, detailed balance, Davies construction, tilted generators;
//! - [`classical`] — stochastic semigroups, semi-Markov processes and
//!   entropy production (the classical oracle layer);
//! - [`dynamics`] — time-local propagation, generator extraction and
//!   the divisibility / non-Markovianity report;
//! - [`models`] — closed-form model zoo (Pauli, Weyl, phase covariant,
//!   amplitude damping, dephasing, Magnus pairs, semigroup mixtures);
//! - [`kernels`] — memory-kernel (Volterra) solvers, legitimate pairs,
//!   quantum semi-Markov dynamics and the hybrid construction;
//! - [`measures`] — divergences, distances, Fisher information and
//!   monotone metrics used as divisibility witnesses;
//! - [`composite`] — exact system+environment evolution, quantum
//!   regression and conditional past-future correlations.

pub mod basis;
pub mod classical;
pub mod composite;
pub mod dynamics;
pub mod error;
pub mod generators;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod measures;
pub mod models;
pub mod repcore;

pub use error::OdkError;

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type CMat = ndarray::Array2<C64>;

/// Dense complex vector.
pub type CVec = ndarray::Array1<C64>;

#[cfg(doctest)]
mod booktests {
    //! Doc-test shims that keep the mdbook guide in `book/src` compiling
    //! against the current API. Each chapter is included verbatim, so
    //! `cargo test --doc` runs every fenced Rust snippet in the book.
    #[doc = include_str!("../../../book/src/ch01-states-and-maps.md")]
    pub struct Chapter01;
    #[doc = include_str!("../../../book/src/ch02-generators.md")]
    pub struct Chapter02;
    #[doc = include_str!("../../../book/src/ch03-dynamics-and-divisibility.md")]
    pub struct Chapter03;
    #[doc = include_str!("../../../book/src/ch04-model-zoo.md")]
    pub struct Chapter04;
    #[doc = include_str!("../../../book/src/ch05-memory-kernels.md")]
    pub struct Chapter05;
    #[doc = include_str!("../../../book/src/ch06-monotones.md")]
    pub struct Chapter06;
    #[doc = include_str!("../../../book/src/ch07-composite-and-regression.md")]
    pub struct Chapter07;
    #[doc = include_str!("../../../book/src/ch08-cli.md")]
    pub struct Chapter08;
}
