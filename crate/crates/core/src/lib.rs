//! Extensible parsing with staged semantic actions.

pub mod engine;
pub mod fragments;
pub mod grammar;
pub mod packs;
pub mod parsegen;
pub mod runtime;
pub mod staged;
