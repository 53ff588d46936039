//! Exact algebra of bosonic creation-operator polynomials over labeled modes.
//!
//! A state is stored as a complex-weighted sum of creation-operator monomials
//! acting on the vacuum, e.g. `-1/4 (a0 - b0)^2 + 1/4 (c0 + d0)^2` expanded
//! into canonical monomials. Monomials are kept sorted, which encodes the
//! bosonic commutation relation `ab = ba`. Converting a monomial with
//! occupation numbers `{n_i}` to a Fock ket multiplies its coefficient by
//! `sqrt(prod n_i!)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Amplitudes at or below this magnitude are dropped after every operation.
pub const EPS_ZERO: f64 = 1e-12;

/// Tolerance for unit-norm checks.
pub const EPS_NORM: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum FockError {
    #[error("monomial must contain at least one mode")]
    EmptyMonomial,

    #[error("polynomial mixes monomial degrees {0} and {1}")]
    MixedDegree(usize, usize),

    #[error("mode map image for {mode} has degree {degree}, expected 1")]
    NonLinearImage { mode: ModeLabel, degree: usize },

    #[error("operation requires a degree-2 polynomial, got degree {0}")]
    NotBiphoton(usize),

    #[error("cannot normalize a zero polynomial")]
    ZeroNorm,
}

/// Spatial port of an optical element or terminal.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Port {
    #[default]
    A,
    B,
    C,
    D,
    E,
    F,
}

impl Port {
    pub fn letter(self) -> char {
        match self {
            Port::A => 'a',
            Port::B => 'b',
            Port::C => 'c',
            Port::D => 'd',
            Port::E => 'e',
            Port::F => 'f',
        }
    }
}

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub enum Polarization {
    #[default]
    H,
    V,
}

/// Propagation direction tag for rail-bound modes. Terminal and input modes
/// carry `None`.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub enum Direction {
    #[default]
    #[serde(rename = "none")]
    None,
    #[serde(rename = "R")]
    Right,
    #[serde(rename = "L")]
    Left,
}

/// One optical mode: spatial port, site index (left/right half of the
/// composite system), polarization, direction tag, and time bin.
///
/// The derived ordering is total and deterministic; canonical monomials rely
/// on it.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub struct ModeLabel {
    pub port: Port,
    pub site: u8,
    #[serde(default)]
    pub polarization: Polarization,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default)]
    pub time_bin: u32,
}

impl ModeLabel {
    pub fn new(port: Port, site: u8) -> Self {
        ModeLabel { port, site, ..Default::default() }
    }

    pub fn with_polarization(mut self, polarization: Polarization) -> Self {
        self.polarization = polarization;
        self
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_time_bin(mut self, time_bin: u32) -> Self {
        self.time_bin = time_bin;
        self
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}",
            self.port.letter(),
            self.site,
            match self.polarization {
                Polarization::H => "H",
                Polarization::V => "V",
            }
        )?;
        match self.direction {
            Direction::None => {}
            Direction::Right => write!(f, ".R")?,
            Direction::Left => write!(f, ".L")?,
        }
        if self.time_bin > 0 {
            write!(f, "@{}", self.time_bin)?;
        }
        Ok(())
    }
}

/// Product of creation operators, stored as a sorted multiset of modes.
///
/// Construction from any ordering yields the identical monomial; the degree
/// equals the photon number.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CreationMonomial {
    modes: Vec<ModeLabel>,
}

/// Canonicalize a sequence of modes into a monomial. Empty input is rejected.
pub fn canonicalize(
    modes: impl IntoIterator<Item = ModeLabel>,
) -> Result<CreationMonomial, FockError> {
    CreationMonomial::new(modes)
}

impl CreationMonomial {
    pub fn new(modes: impl IntoIterator<Item = ModeLabel>) -> Result<Self, FockError> {
        let mut modes: Vec<ModeLabel> = modes.into_iter().collect();
        if modes.is_empty() {
            return Err(FockError::EmptyMonomial);
        }
        modes.sort();
        Ok(CreationMonomial { modes })
    }

    pub fn single(mode: ModeLabel) -> Self {
        CreationMonomial { modes: vec![mode] }
    }

    pub fn degree(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[ModeLabel] {
        &self.modes
    }

    /// Occupation numbers per distinct mode.
    pub fn occupations(&self) -> BTreeMap<ModeLabel, u32> {
        let mut occ = BTreeMap::new();
        for &m in &self.modes {
            *occ.entry(m).or_insert(0) += 1;
        }
        occ
    }

    fn product(&self, other: &Self) -> Self {
        let mut modes = Vec::with_capacity(self.modes.len() + other.modes.len());
        modes.extend_from_slice(&self.modes);
        modes.extend_from_slice(&other.modes);
        modes.sort();
        CreationMonomial { modes }
    }
}

impl fmt::Display for CreationMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let occ = self.occupations();
        let mut first = true;
        for (mode, n) in occ {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if n == 1 {
                write!(f, "{mode}")?;
            } else {
                write!(f, "{mode}^{n}")?;
            }
        }
        Ok(())
    }
}

/// A photon-number ket obtained from one monomial: occupation numbers and the
/// Fock-normalized amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct FockKet {
    pub occupation: BTreeMap<ModeLabel, u32>,
    pub amplitude: Complex64,
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn occupation_weight(occ: &BTreeMap<ModeLabel, u32>) -> f64 {
    occ.values().map(|&n| factorial(n)).product()
}

/// Complex-weighted sum of creation-operator monomials.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OperatorPolynomial {
    terms: BTreeMap<CreationMonomial, Complex64>,
}

impl OperatorPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_monomial(monomial: CreationMonomial, amplitude: Complex64) -> Self {
        let mut poly = Self::zero();
        poly.add_term(monomial, amplitude);
        poly
    }

    /// Degree-1 polynomial consisting of a single mode.
    pub fn mode(label: ModeLabel) -> Self {
        Self::from_monomial(CreationMonomial::single(label), Complex64::ONE)
    }

    /// Degree-1 linear combination of modes.
    pub fn linear(terms: &[(Complex64, ModeLabel)]) -> Self {
        let mut poly = Self::zero();
        for &(amp, mode) in terms {
            poly.add_term(CreationMonomial::single(mode), amp);
        }
        poly
    }

    pub fn add_term(&mut self, monomial: CreationMonomial, amplitude: Complex64) {
        use std::collections::btree_map::Entry;
        match self.terms.entry(monomial) {
            Entry::Vacant(slot) => {
                if amplitude.norm() > EPS_ZERO {
                    slot.insert(amplitude);
                }
            }
            Entry::Occupied(mut slot) => {
                let sum = *slot.get() + amplitude;
                if sum.norm() > EPS_ZERO {
                    *slot.get_mut() = sum;
                } else {
                    slot.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&CreationMonomial, Complex64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn amplitude(&self, monomial: &CreationMonomial) -> Complex64 {
        self.terms.get(monomial).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// All distinct modes appearing in the polynomial.
    pub fn modes(&self) -> BTreeSet<ModeLabel> {
        self.terms.keys().flat_map(|m| m.modes().iter().copied()).collect()
    }

    pub fn scale(mut self, factor: Complex64) -> Self {
        for amp in self.terms.values_mut() {
            *amp *= factor;
        }
        self.prune();
        self
    }

    fn prune(&mut self) {
        self.terms.retain(|_, amp| amp.norm() > EPS_ZERO);
    }

    /// Common degree of all monomials. `None` for the zero polynomial;
    /// an error if degrees are mixed.
    pub fn degree(&self) -> Result<Option<usize>, FockError> {
        let mut degree = None;
        for monomial in self.terms.keys() {
            match degree {
                None => degree = Some(monomial.degree()),
                Some(d) if d != monomial.degree() => {
                    return Err(FockError::MixedDegree(d, monomial.degree()));
                }
                _ => {}
            }
        }
        Ok(degree)
    }

    /// Substitute every mode by its (degree-1) image under `map`, expanding
    /// products and collecting like terms. Modes without an image pass
    /// through unchanged. This is a ring homomorphism, so the degree of every
    /// monomial is preserved.
    pub fn substitute(&self, map: &ModeMap) -> Result<Self, FockError> {
        let mut out = Self::zero();
        for (monomial, amp) in &self.terms {
            let mut factors = monomial.modes().iter();
            let first = *factors.next().expect("monomials are non-empty");
            let mut acc = map.image_of(first);
            for &mode in factors {
                acc = poly_product(&acc, &map.image_of(mode));
            }
            for (m, c) in acc.terms {
                out.add_term(m, c * amp);
            }
        }
        out.prune();
        Ok(out)
    }

    /// Expand into Fock kets: amplitude = coefficient * sqrt(prod n_i!).
    /// Requires a degree-homogeneous polynomial.
    pub fn to_fock(&self) -> Result<Vec<FockKet>, FockError> {
        self.degree()?;
        Ok(self
            .terms
            .iter()
            .map(|(monomial, &amp)| {
                let occupation = monomial.occupations();
                let weight = occupation_weight(&occupation).sqrt();
                FockKet { occupation, amplitude: amp * weight }
            })
            .collect())
    }

    /// Squared Fock norm: sum over kets of |amplitude|^2.
    pub fn norm_sqr(&self) -> Result<f64, FockError> {
        self.degree()?;
        Ok(self
            .terms
            .iter()
            .map(|(monomial, amp)| amp.norm_sqr() * occupation_weight(&monomial.occupations()))
            .sum())
    }

    pub fn norm(&self) -> Result<f64, FockError> {
        Ok(self.norm_sqr()?.sqrt())
    }

    /// Probability of observing the given occupation pattern, relative to the
    /// polynomial's own norm.
    pub fn probability(&self, occupation: &BTreeMap<ModeLabel, u32>) -> Result<f64, FockError> {
        let norm_sqr = self.norm_sqr()?;
        if norm_sqr == 0.0 {
            return Ok(0.0);
        }
        let p = self
            .to_fock()?
            .into_iter()
            .find(|ket| &ket.occupation == occupation)
            .map(|ket| ket.amplitude.norm_sqr())
            .unwrap_or(0.0);
        Ok(p / norm_sqr)
    }

    /// Probability that one photon occupies `mode_a` and one `mode_b`.
    /// Requires a degree-2 polynomial.
    pub fn coincidence_probability(
        &self,
        mode_a: ModeLabel,
        mode_b: ModeLabel,
    ) -> Result<f64, FockError> {
        if let Some(degree) = self.degree()? {
            if degree != 2 {
                return Err(FockError::NotBiphoton(degree));
            }
        }
        let mut occupation = BTreeMap::new();
        *occupation.entry(mode_a).or_insert(0) += 1;
        *occupation.entry(mode_b).or_insert(0) += 1;
        self.probability(&occupation)
    }

    /// Rescale to unit Fock norm.
    pub fn normalized(self) -> Result<Self, FockError> {
        let norm = self.norm()?;
        if norm == 0.0 {
            return Err(FockError::ZeroNorm);
        }
        Ok(self.scale(Complex64::new(1.0 / norm, 0.0)))
    }
}

fn poly_product(a: &OperatorPolynomial, b: &OperatorPolynomial) -> OperatorPolynomial {
    let mut out = OperatorPolynomial::zero();
    for (ma, ca) in &a.terms {
        for (mb, cb) in &b.terms {
            out.add_term(ma.product(mb), ca * cb);
        }
    }
    out.prune();
    out
}

impl Add for OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn add(mut self, rhs: Self) -> Self {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self.prune();
        self
    }
}

impl Sub for OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn sub(mut self, rhs: Self) -> Self {
        for (m, c) in rhs.terms {
            self.add_term(m, -c);
        }
        self.prune();
        self
    }
}

impl Neg for OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn neg(self) -> Self {
        self.scale(-Complex64::ONE)
    }
}

impl Mul for &OperatorPolynomial {
    type Output = OperatorPolynomial;
    fn mul(self, rhs: Self) -> OperatorPolynomial {
        poly_product(self, rhs)
    }
}

impl fmt::Display for OperatorPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (monomial, amp) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if amp.im.abs() <= EPS_ZERO {
                write!(f, "({:.6})", amp.re)?;
            } else {
                write!(f, "({:.6}{:+.6}i)", amp.re, amp.im)?;
            }
            write!(f, "·{monomial}")?;
        }
        Ok(())
    }
}

/// Per-mode linear substitution: each source mode maps to a degree-1
/// polynomial over target modes.
#[derive(Clone, Debug, Default)]
pub struct ModeMap {
    images: BTreeMap<ModeLabel, OperatorPolynomial>,
}

impl ModeMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        from: ModeLabel,
        image: OperatorPolynomial,
    ) -> Result<(), FockError> {
        match image.degree()? {
            Some(1) | None => {}
            Some(degree) => return Err(FockError::NonLinearImage { mode: from, degree }),
        }
        self.images.insert(from, image);
        Ok(())
    }

    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (ModeLabel, OperatorPolynomial)>,
    ) -> Result<Self, FockError> {
        let mut map = Self::new();
        for (from, image) in pairs {
            map.insert(from, image)?;
        }
        Ok(map)
    }

    pub fn image(&self, mode: ModeLabel) -> Option<&OperatorPolynomial> {
        self.images.get(&mode)
    }

    fn image_of(&self, mode: ModeLabel) -> OperatorPolynomial {
        self.images
            .get(&mode)
            .cloned()
            .unwrap_or_else(|| OperatorPolynomial::mode(mode))
    }
}
