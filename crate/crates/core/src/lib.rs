//! Classification of characteristic roots and empirical verification of
//! `L^p`–`L^q` time-decay rates for constant-coefficient strictly hyperbolic
//! Cauchy problems.
//!
//! The pipeline:
//!
//! 1. [`symbol`] — sparse polynomial symbols `P(tau, xi) = tau^m + sum_j p_j(xi) tau^(m-j)`
//!    with their principal parts, plus frequency grids ([`grid`]).
//! 2. [`roots`] — characteristic roots `tau_k(xi)` over a grid: simultaneous
//!    root iteration per node, branch tracking, discriminants, multiplicity
//!    clusters.
//! 3. [`classify`] — root geometry (stability, contact order with the real
//!    axis, Hessians of branches, level-set convexity) and the decay-rate
//!    decision tables mapping geometry to predicted `L^p`–`L^q` rates.
//! 4. [`multiplier`] — the exact frequency-domain propagators `E_j(xi, t)`
//!    via companion-matrix exponentials, with a partial-fraction
//!    (Vandermonde) cross-check away from multiplicities.
//! 5. [`decay`] — norm surrogates (`L^2` by Plancherel, `L^inf` by absolute
//!    frequency integrals), decay-exponent fitting, and prediction checks.
//! 6. [`models`] — built-in operator families: the damped/Klein–Gordon wave
//!    family and Grad moment systems for the Fokker–Planck equation.

pub mod classify;
pub mod decay;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod models;
pub mod multiplier;
pub mod roots;
pub mod symbol;

pub use error::{Error, Result};

/// Complex double, the scalar type for roots, coefficients and propagators.
pub type C64 = num_complex::Complex<f64>;

/// Imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);

/// Japanese bracket `<x> = sqrt(1 + |x|^2)`.
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// `1/p - 1/q` for a dual pair on the decay scale (`q = inf` allowed).
pub fn dual_gap(p: f64, q: f64) -> f64 {
    let iq = if q.is_infinite() { 0.0 } else { 1.0 / q };
    1.0 / p - iq
}
