//! Exact calculator for 1-parameter families Seiberg–Witten invariants of
//! simply-connected 4-manifolds with `b₊ = 2`.
//!
//! The layers build on each other:
//!
//! * [`lattice`] unimodular forms, characteristic vectors, automorphisms, `sgn₊`.
//! * [`manifold`] connected sums of standard atoms and their spin^c classes.
//! * [`kahler`] chambered invariants of `E(1)` and its logarithmic transforms.
//! * [`families`] symbolic diffeomorphisms and the certified rewrite engine.
//! * [`torelli`] the `t_d` families, support matrices and rank certificates.
//! * [`cli`] argument parsing and JSON/CSV output for the binary.

pub mod cli;
pub mod families;
pub mod kahler;
pub mod lattice;
pub mod manifold;
pub mod rational;
pub mod torelli;
