//! Logarithmic potential theory on planar compacta and dimension counts for
//! weighted spaces of entire functions.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] — compact-set specifications, boundary sampling, membership;
//! * [`potential`] — discrete energies, equilibrium measures, capacity,
//!   Fekete diameters, and the polar/nonpolar classifier;
//! * [`cauchy`] — Cauchy transforms of signed measures, Laurent tails,
//!   vanishing boosts, and weighted tail norms;
//! * [`bergman_p1`] — radial weights on the plane, Riesz-mass integration,
//!   dimension reports, and the perturbed-potential witness construction;
//! * [`bergman_p2`] — monomial membership and norm quadrature over the
//!   four-piece model domains in two complex variables.

pub mod bergman_p1;
pub mod bergman_p2;
pub mod cauchy;
pub mod cplx;
pub mod geometry;
pub mod potential;
pub mod verdict;

pub use num_complex::Complex64;
