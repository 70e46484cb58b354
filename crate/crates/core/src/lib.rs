//! Exact-arithmetic toolkit for the combinatorics of p-adic analytic curves.
//!
//! The crate has two halves that share a coefficient domain:
//!
//! * a *graph half* — finite semi-metrized oriented graphs, their cohomology
//!   and compactly supported cohomology, a length-weighted monodromy operator,
//!   the patron/special-fiber bookkeeping with stable contraction, and
//!   dimension/weight/slope reports for the standard filtrations of H¹;
//! * a *series half* — truncated doubly-infinite Laurent series over the
//!   totally ramified field Q(p^{1/e}), with Newton data, the canonical unit
//!   factorization c·T^k·u₊·u₋, residues, dlog, leg coordinate changes,
//!   prime-to-p roots and rational-function expansions on circles.
//!
//! Everything is exact: coefficients are arbitrary-precision rationals and
//! no floating point appears anywhere.

pub mod cli;
pub mod filtration;
pub mod graph;
pub mod linalg;
pub mod patron;
pub mod scalar;
pub mod series;
