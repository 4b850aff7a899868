//! Exact arithmetic for the geometric stability chamber of a degenerate
//! local plane.
//!
//! The objects of study live on a surface `X` that degenerates the projective
//! plane inside a Calabi–Yau threefold; their numerical shadow is a rank-3
//! lattice with an Euler pairing, a two-parameter slice of central charges,
//! and a discrete symmetry group `Z × Γ₁(3) × Aut(X)` acting on everything.
//! This crate computes that shadow exactly:
//!
//! * [`ktheory`] — the lattice, the Euler and skew pairings, slopes and
//!   discriminants in the Chern-character convention.
//! * [`exceptional`] — exceptional classes generated by mutation in a
//!   Farey-like tree; ranks are Markov numbers.
//! * [`dlp`] — the finite-order Drezet–Le Potier envelope bounding the
//!   chamber from above.
//! * [`chamber`] — central charges `Z_{a,b}`, the projection to the
//!   slope–discriminant plane, and exact chamber membership.
//! * [`walls`] — wall bands over exceptional classes, Jordan–Hölder class
//!   data, crossing detection along piecewise-linear charge paths, and
//!   twist-transport back into the chamber.
//! * [`autgroup`] — the symmetry group: shift, line-bundle twist `β`,
//!   spherical half-twists, the `Γ₁(3)` matrix image and word problems.
//! * [`picard`] — line bundles on the degenerate surface via gluing data on
//!   its three components.
//!
//! All predicates are decided in exact rational arithmetic; floating point
//! appears only in report output (phases, masses, decimal renderings).

pub mod autgroup;
pub mod chamber;
pub mod dlp;
pub mod exceptional;
pub mod ktheory;
pub mod picard;
pub mod rat;
pub mod walls;

pub use ktheory::{euler_p2, skew_pairing, KClass, KError, KMatrix};
pub use rat::{Rat, RatComplex};
