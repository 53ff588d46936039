//! Shared helpers for the integration and acceptance suites.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use homnet::fock::{Direction, ModeLabel, OperatorPolynomial, Polarization, Port};

/// Haar-ish random unitary from the QR decomposition of a random complex
/// matrix. Good enough for norm-preservation checks.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> DMatrix<Complex64> {
    let entries: Vec<Complex64> = (0..n * n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let m = DMatrix::from_vec(n, n, entries);
    m.qr().q()
}

/// Pool of distinct mode labels to draw polynomials from.
pub fn mode_pool() -> Vec<ModeLabel> {
    let mut pool = Vec::new();
    for port in [Port::A, Port::B, Port::C, Port::D, Port::E, Port::F] {
        pool.push(ModeLabel::new(port, 0));
    }
    pool
}

/// Random polynomial of homogeneous degree over the first `n_modes` labels
/// of the pool.
pub fn random_polynomial(
    rng: &mut impl Rng,
    n_modes: usize,
    degree: usize,
    n_terms: usize,
) -> OperatorPolynomial {
    let pool = mode_pool();
    let pool = &pool[..n_modes];
    let mut poly = OperatorPolynomial::zero();
    for _ in 0..n_terms {
        let modes: Vec<ModeLabel> =
            (0..degree).map(|_| pool[rng.random_range(0..pool.len())]).collect();
        let amp =
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        poly.add_term(homnet::fock::CreationMonomial::new(modes).unwrap(), amp);
    }
    poly
}

pub fn rail(port: Port, site: u8, direction: Direction) -> ModeLabel {
    ModeLabel::new(port, site).with_direction(direction)
}

pub fn terminal(port: Port, site: u8, t: u32) -> ModeLabel {
    ModeLabel::new(port, site).with_time_bin(t)
}

pub fn vertical(mode: ModeLabel) -> ModeLabel {
    mode.with_polarization(Polarization::V)
}
