//! Keyed iterated polynomial systems for arithmetization-oriented ciphers,
//! Macaulay-matrix Groebner bases, solving-degree and degree-fall
//! measurements, generic-coordinate checks and complexity estimates.

pub mod gf;
pub mod mpoly;
pub mod macaulay;
pub mod groebner;
pub mod systems;
pub mod shapelex;
pub mod genpos;
pub mod degfall;
pub mod complexity;
pub mod desk;
pub mod report;

pub use gf::{BigPrimeField, Field, FieldElement, SmallPrimeField};
pub use mpoly::{Monomial, OrderKind, Polynomial, Ring};

/// Desk-scale field.
pub type Fq = SmallPrimeField;
/// Polynomial over the desk-scale field.
pub type Poly = Polynomial<SmallPrimeField>;
/// Ring over the desk-scale field.
pub type PolyRing = Ring<SmallPrimeField>;
