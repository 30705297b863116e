//! Polynomial monads presented as signatures with amalgamation, the free monoid
//! construction on them, webs, and opetopic sets.

#![allow(clippy::type_complexity)]

pub mod error;
pub mod fixtures;
pub mod freemon;
pub mod gen;
pub mod opetope;
pub mod perm;
pub mod report;
pub mod sig;
pub mod sigmamon;
pub mod slice;
pub mod suites;
pub mod term;
pub mod web;

pub use error::{Error, Result};
pub use perm::Permutation;
pub use sig::{Arrow, Obj, SigMorphism, Signature, Typing};
pub use sigmamon::{Monoid, MonoidHom, MonoidSig};
pub use term::Term;
