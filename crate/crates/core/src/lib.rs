//! Exact computation with finitely presented exponential fields.
//!
//! The crate is organised bottom-up:
//!
//! - [`exactalg`]: arithmetic in `Q(ζ_m)(t_1, …, t_k)` and exact linear algebra.
//! - [`exprlang`]: the E-ring term language, its parser and printer, and the
//!   normalization of exponential-polynomial systems into flat polynomial systems.
//! - [`variety`]: parametric varieties in `G_a^n × G_m^n`, additive freeness and
//!   the reduction of an arbitrary locus to an additively free one.
//! - [`efield`]: finitely presented exponential fields and realization of
//!   exponential points.
//! - [`amalg`]: transcendence degree, independence, and amalgamation of
//!   presentations (pairwise and over independent `P^-(n)` systems).
//! - [`treeprops`]: constructors and finite verifiers for TP2/SOP1 witnesses,
//!   kernel-stabilizer witnesses and type-counting families.
//! - [`json`]: the canonical JSON encodings used by the command-line tool.

pub mod exactalg;
pub mod exprlang;
pub mod variety;
pub mod efield;
pub mod amalg;
pub mod treeprops;
pub mod json;
pub mod gen;
