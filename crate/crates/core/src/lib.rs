//! Exact ℏ-expansion of the dressing operators of the Toda hierarchy.
//!
//! Given Riemann-Hilbert data `(f, g, fbar, gbar)` and a solution of the
//! dispersionless problem, the crate computes the ℏ-expansion of the dressing
//! triple `(X, Xbar, phi)` order by order, converts it to WKB phases,
//! assembles the free energies `F_n` of the tau function and checks the
//! hierarchy identities against an operator-level oracle.
//!
//! All coefficients live in `Q[t, tbar] (x) u^Q (x) l^N` with `u = 1 - s` and
//! `l = log(1 - s)`; no floating point is used anywhere.

pub mod adjoint;
pub mod cli;
pub mod rhsolver;
pub mod scalars;
pub mod symbols;
pub mod tau;
pub mod verify;
pub mod wkb;
