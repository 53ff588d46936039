//! Simulator for two-photon states propagating through chains of
//! directionally-unbiased four-port couplers, beam splitters, and phase
//! shifters.
//!
//! The crate is organized in layers:
//!
//! * [`fock`] — exact algebra of bosonic creation-operator polynomials;
//! * [`elements`] — the catalog of unitary scattering matrices;
//! * [`engine`] — time-stepped propagation over a directed-rail network;
//! * [`evolution`] — composite six-line evolution matrices, their block
//!   structure, higher-order arrivals, and the two-photon lift;
//! * [`scenario`] — named scenario presets, JSON configs and reports, and
//!   the golden-vector / evolution verification suites.

pub mod elements;
pub mod engine;
pub mod evolution;
pub mod fock;
pub mod scenario;
