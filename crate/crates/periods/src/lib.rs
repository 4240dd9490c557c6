//! Exact-arithmetic engine for period characters of abelian differentials.
//!
//! A period character of genus `g` assigns to each element of a fixed
//! symplectic basis `a_1, b_1, ..., a_g, b_g` a complex number lying in a
//! real quadratic field extended by `i`.  This crate decides whether such a
//! character is realized by a translation surface with prescribed cone
//! angles, and when it is, builds the surface explicitly together with a
//! machine-checkable certificate.

pub mod builder;
pub mod chi;
pub mod cli;
pub mod field;
pub mod sp_action;
pub mod surface;
pub mod svg;
