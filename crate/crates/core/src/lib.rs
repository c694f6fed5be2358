//! Cusp excursions of geodesics in hyperbolic 2- and 3-orbifolds: exact lattice arithmetic,
//! horoball enumeration, ray samplers, excursion functionals and numerical oracles.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod excursion;
pub mod experiment;
pub mod horoworld;
pub mod hypgeom;
pub mod lattice;
pub mod samplers;
pub mod verify;

pub use error::{Error, Result};
