//! Time-stepped propagation of operator polynomials over a directed-rail
//! chain of beam splitters and four-port Grover couplers.
//!
//! Geometry: `BS1 - M1 [- M2] - BS2`, with one rail pair (upper/lower lane)
//! per gap. Each rail segment costs one time bin to traverse; device
//! scattering costs zero bins. Phase shifters are rail-mounted and apply on
//! every traversal in either direction. Amplitudes reaching a beam splitter's
//! external side become terminal modes stamped with the current time bin.
//!
//! Injection either bypasses the left beam splitter (with circulators,
//! pattern I) or passes through it (pattern II).

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elements::PhaseConfig;
use crate::fock::{
    CreationMonomial, Direction, FockError, ModeLabel, ModeMap, OperatorPolynomial, Polarization,
    Port, EPS_NORM,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unsupported multiport count {0} (expected 1 or 2)")]
    UnsupportedMultiportCount(usize),

    #[error("an inter-multiport phase requires two multiports")]
    InterPhaseWithoutInnerSpan,

    #[error("mode {0} is not an injection port of this network")]
    UnknownInjectionPort(ModeLabel),

    #[error("probability leak at step {step}: norm^2 went from {before} to {after}")]
    NormLeak { step: u32, before: f64, after: f64 },

    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Injection style: with circulators the input lands directly on the rails
/// in front of the first multiport; without, it passes through the left beam
/// splitter on the way in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pattern {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "II")]
    II,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lane {
    Upper,
    Lower,
}

/// Mounting orientation of the left beam splitter. `Standard` mounts both
/// splitters facing the multiports, so the antisymmetric rail combination
/// `(a - b)` exits on the lower terminal `f0`. `Flipped` rotates the left
/// splitter, moving that exit to `e0`. The two mountings are transposes of
/// each other; the right splitter is always `Standard`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeftBsOrientation {
    #[default]
    Standard,
    Flipped,
}

#[derive(Clone, Copy, Debug)]
struct Span {
    upper_phase: f64,
    lower_phase: f64,
}

impl Span {
    fn phase(&self, lane: Lane) -> f64 {
        match lane {
            Lane::Upper => self.upper_phase,
            Lane::Lower => self.lower_phase,
        }
    }
}

/// Directed-rail network of one or two multiports between two beam splitters.
#[derive(Clone, Debug)]
pub struct Network {
    pattern: Pattern,
    n_multiports: usize,
    spans: Vec<Span>,
    left_orientation: LeftBsOrientation,
    // (port, site, direction) -> (span index, lane), for rail-bound labels
    rail_slots: BTreeMap<(Port, u8, Direction), (usize, Lane)>,
}

impl Network {
    /// Network with circulator injection onto the rails ahead of the first
    /// multiport.
    pub fn pattern_i(
        phases: PhaseConfig,
        n_multiports: usize,
        inter_multiport_phase: f64,
    ) -> Result<Self, EngineError> {
        Self::build(Pattern::I, phases, n_multiports, inter_multiport_phase, Lane::Lower)
    }

    /// Network with injection through the left beam splitter.
    pub fn pattern_ii(
        phases: PhaseConfig,
        n_multiports: usize,
        inter_multiport_phase: f64,
    ) -> Result<Self, EngineError> {
        Self::build(Pattern::II, phases, n_multiports, inter_multiport_phase, Lane::Lower)
    }

    pub fn build(
        pattern: Pattern,
        phases: PhaseConfig,
        n_multiports: usize,
        inter_multiport_phase: f64,
        inter_lane: Lane,
    ) -> Result<Self, EngineError> {
        if !(1..=2).contains(&n_multiports) {
            return Err(EngineError::UnsupportedMultiportCount(n_multiports));
        }
        if n_multiports == 1 && inter_multiport_phase != 0.0 {
            return Err(EngineError::InterPhaseWithoutInnerSpan);
        }
        let n_spans = n_multiports + 1;
        let mut spans = vec![Span { upper_phase: 0.0, lower_phase: 0.0 }; n_spans];
        spans[0].upper_phase = phases.left_upper;
        spans[0].lower_phase = phases.left_lower;
        spans[n_spans - 1].upper_phase = phases.right_upper;
        spans[n_spans - 1].lower_phase = phases.right_lower;
        if n_multiports == 2 {
            match inter_lane {
                Lane::Upper => spans[1].upper_phase += inter_multiport_phase,
                Lane::Lower => spans[1].lower_phase += inter_multiport_phase,
            }
        }

        let mut net = Network {
            pattern,
            n_multiports,
            spans,
            left_orientation: LeftBsOrientation::Standard,
            rail_slots: BTreeMap::new(),
        };
        net.index_rails();
        Ok(net)
    }

    pub fn with_left_orientation(mut self, orientation: LeftBsOrientation) -> Self {
        self.left_orientation = orientation;
        self
    }

    pub fn pattern(&self) -> Pattern {
        self.pattern
    }

    pub fn n_multiports(&self) -> usize {
        self.n_multiports
    }

    pub fn left_orientation(&self) -> LeftBsOrientation {
        self.left_orientation
    }

    fn n_spans(&self) -> usize {
        self.spans.len()
    }

    /// Right-moving labels on a span carry the emitting device's right-face
    /// port names; left-moving labels the emitting device's left-face names.
    fn rail_label(&self, span: usize, lane: Lane, direction: Direction) -> (Port, u8) {
        match direction {
            Direction::Right => {
                if span == 0 {
                    (lane_port(lane, Port::A, Port::B), 0)
                } else {
                    (lane_port(lane, Port::C, Port::D), (span - 1) as u8)
                }
            }
            Direction::Left => {
                if span < self.n_multiports {
                    (lane_port(lane, Port::A, Port::B), span as u8)
                } else {
                    (lane_port(lane, Port::C, Port::D), (self.n_multiports - 1) as u8)
                }
            }
            Direction::None => unreachable!("rails carry directed modes only"),
        }
    }

    fn index_rails(&mut self) {
        self.rail_slots.clear();
        for span in 0..self.n_spans() {
            for lane in [Lane::Upper, Lane::Lower] {
                for direction in [Direction::Right, Direction::Left] {
                    let (port, site) = self.rail_label(span, lane, direction);
                    self.rail_slots.insert((port, site, direction), (span, lane));
                }
            }
        }
    }

    fn rail_mode(
        &self,
        span: usize,
        lane: Lane,
        direction: Direction,
        polarization: Polarization,
    ) -> ModeLabel {
        let (port, site) = self.rail_label(span, lane, direction);
        ModeLabel::new(port, site).with_polarization(polarization).with_direction(direction)
    }

    fn terminal(&self, side: Side, lane: Lane, polarization: Polarization, t: u32) -> ModeLabel {
        let port = lane_port(lane, Port::E, Port::F);
        let site = match side {
            Side::Left => 0,
            Side::Right => 1,
        };
        ModeLabel::new(port, site).with_polarization(polarization).with_time_bin(t)
    }

    /// Substitution rows of the left beam splitter for amplitudes leaving the
    /// system, as (upper-arrival image, lower-arrival image) over `(e0, f0)`.
    fn left_exit_rows(&self) -> [[f64; 2]; 2] {
        match self.left_orientation {
            // a -> (e - f)/r2, b -> (e + f)/r2
            LeftBsOrientation::Standard => [[1.0, -1.0], [1.0, 1.0]],
            // a -> (e + f)/r2, b -> (-e + f)/r2
            LeftBsOrientation::Flipped => [[1.0, 1.0], [-1.0, 1.0]],
        }
    }

    /// Entry rows over `(a0, b0)` for pattern-II injection; transpose of the
    /// exit rows, so entering and leaving through the same splitter cancel.
    fn left_entry_rows(&self) -> [[f64; 2]; 2] {
        let exit = self.left_exit_rows();
        [[exit[0][0], exit[1][0]], [exit[0][1], exit[1][1]]]
    }

    /// Image of one directed rail mode after traversing its span and
    /// scattering at the device it reaches at time bin `t`.
    fn traverse_and_scatter(&self, label: ModeLabel, t: u32) -> OperatorPolynomial {
        let slot = self.rail_slots.get(&(label.port, label.site, label.direction));
        let Some(&(span, lane)) = slot else {
            // not a rail of this network; inert
            return OperatorPolynomial::mode(label);
        };
        let pol = label.polarization;
        let phase = Complex64::from_polar(1.0, self.spans[span].phase(lane));
        let scattered = match label.direction {
            Direction::Right => {
                if span < self.n_multiports {
                    self.multiport_from_left(span, lane, pol)
                } else {
                    self.right_bs_exit(lane, pol, t)
                }
            }
            Direction::Left => {
                if span == 0 {
                    self.left_bs_exit(lane, pol, t)
                } else {
                    self.multiport_from_right(span, lane, pol)
                }
            }
            Direction::None => unreachable!(),
        };
        scattered.scale(phase)
    }

    /// Grover scatter for an amplitude arriving from the left on `span`,
    /// i.e. at the multiport between `span` and `span + 1`.
    fn multiport_from_left(
        &self,
        span: usize,
        lane: Lane,
        pol: Polarization,
    ) -> OperatorPolynomial {
        let half = Complex64::new(0.5, 0.0);
        let a = self.rail_mode(span, Lane::Upper, Direction::Left, pol);
        let b = self.rail_mode(span, Lane::Lower, Direction::Left, pol);
        let c = self.rail_mode(span + 1, Lane::Upper, Direction::Right, pol);
        let d = self.rail_mode(span + 1, Lane::Lower, Direction::Right, pol);
        match lane {
            Lane::Upper => OperatorPolynomial::linear(&[(-half, a), (half, b), (half, c), (half, d)]),
            Lane::Lower => OperatorPolynomial::linear(&[(half, a), (-half, b), (half, c), (half, d)]),
        }
    }

    /// Grover scatter for an amplitude arriving from the right on `span`,
    /// i.e. at the multiport between `span - 1` and `span`.
    fn multiport_from_right(
        &self,
        span: usize,
        lane: Lane,
        pol: Polarization,
    ) -> OperatorPolynomial {
        let half = Complex64::new(0.5, 0.0);
        let a = self.rail_mode(span - 1, Lane::Upper, Direction::Left, pol);
        let b = self.rail_mode(span - 1, Lane::Lower, Direction::Left, pol);
        let c = self.rail_mode(span, Lane::Upper, Direction::Right, pol);
        let d = self.rail_mode(span, Lane::Lower, Direction::Right, pol);
        match lane {
            Lane::Upper => OperatorPolynomial::linear(&[(half, a), (half, b), (-half, c), (half, d)]),
            Lane::Lower => OperatorPolynomial::linear(&[(half, a), (half, b), (half, c), (-half, d)]),
        }
    }

    fn left_bs_exit(&self, lane: Lane, pol: Polarization, t: u32) -> OperatorPolynomial {
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let e = self.terminal(Side::Left, Lane::Upper, pol, t);
        let f = self.terminal(Side::Left, Lane::Lower, pol, t);
        let rows = self.left_exit_rows();
        let row = match lane {
            Lane::Upper => rows[0],
            Lane::Lower => rows[1],
        };
        OperatorPolynomial::linear(&[(r * row[0], e), (r * row[1], f)])
    }

    fn right_bs_exit(&self, lane: Lane, pol: Polarization, t: u32) -> OperatorPolynomial {
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let e = self.terminal(Side::Right, Lane::Upper, pol, t);
        let f = self.terminal(Side::Right, Lane::Lower, pol, t);
        // c -> (e - f)/r2, d -> (e + f)/r2
        match lane {
            Lane::Upper => OperatorPolynomial::linear(&[(r, e), (-r, f)]),
            Lane::Lower => OperatorPolynomial::linear(&[(r, e), (r, f)]),
        }
    }

    /// Place a state in the network at step 0. The polynomial is rescaled to
    /// unit norm; the zero polynomial short-circuits to an empty state.
    pub fn inject(&self, poly: &OperatorPolynomial) -> Result<PropagationState, EngineError> {
        if poly.is_zero() {
            return Ok(PropagationState { poly: OperatorPolynomial::zero(), step: 0 });
        }
        let mut map = ModeMap::new();
        for mode in poly.modes() {
            if mode.time_bin != 0 {
                return Err(EngineError::UnknownInjectionPort(mode));
            }
            match self.pattern {
                Pattern::I => {
                    // rails a0 / b0, moving right
                    let ok = matches!(mode.port, Port::A | Port::B)
                        && mode.site == 0
                        && matches!(mode.direction, Direction::None | Direction::Right);
                    if !ok {
                        return Err(EngineError::UnknownInjectionPort(mode));
                    }
                    // circulators feed the rails downstream of the left
                    // phase plates; cancel the phase the first traversal
                    // will apply
                    let lane = match mode.port {
                        Port::A => Lane::Upper,
                        _ => Lane::Lower,
                    };
                    let compensation =
                        Complex64::from_polar(1.0, -self.spans[0].phase(lane));
                    map.insert(
                        mode,
                        OperatorPolynomial::linear(&[(
                            compensation,
                            mode.with_direction(Direction::Right),
                        )]),
                    )?;
                }
                Pattern::II => {
                    let ok = matches!(mode.port, Port::E | Port::F)
                        && mode.site == 0
                        && mode.direction == Direction::None;
                    if !ok {
                        return Err(EngineError::UnknownInjectionPort(mode));
                    }
                    let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
                    let rows = self.left_entry_rows();
                    let row = match mode.port {
                        Port::E => rows[0],
                        _ => rows[1],
                    };
                    let a = self.rail_mode(0, Lane::Upper, Direction::Right, mode.polarization);
                    let b = self.rail_mode(0, Lane::Lower, Direction::Right, mode.polarization);
                    map.insert(
                        mode,
                        OperatorPolynomial::linear(&[(r * row[0], a), (r * row[1], b)]),
                    )?;
                }
            }
        }
        let placed = poly.substitute(&map)?.normalized()?;
        Ok(PropagationState { poly: placed, step: 0 })
    }

    /// Advance one time bin: translate every rail amplitude one segment,
    /// apply rail phases, scatter at the device reached. Amplitudes reaching
    /// a terminal become exit modes stamped with the new time bin.
    pub fn step(&self, state: &PropagationState) -> Result<PropagationState, EngineError> {
        self.step_with(state, EPS_NORM)
    }

    fn step_with(&self, state: &PropagationState, eps_norm: f64) -> Result<PropagationState, EngineError> {
        let t = state.step + 1;
        let mut map = ModeMap::new();
        for mode in state.poly.modes() {
            if mode.direction == Direction::None {
                continue;
            }
            map.insert(mode, self.traverse_and_scatter(mode, t))?;
        }
        let next = state.poly.substitute(&map)?;
        let before = state.poly.norm_sqr()?;
        let after = next.norm_sqr()?;
        if (after - before).abs() > eps_norm * before.max(1.0) {
            return Err(EngineError::NormLeak { step: t, before, after });
        }
        Ok(PropagationState { poly: next, step: t })
    }

    /// Step until the interior is empty or `opts.max_steps` is reached.
    pub fn run(
        &self,
        state: PropagationState,
        opts: &RunOptions,
    ) -> Result<RunSummary, EngineError> {
        let mut state = state;
        let mut truncated = false;
        while state.interior_norm_sqr()? > opts.eps_residual {
            if state.step >= opts.max_steps {
                truncated = true;
                break;
            }
            state = self.step_with(&state, opts.eps_norm)?;
        }
        RunSummary::from_state(state, truncated)
    }
}

fn lane_port(lane: Lane, upper: Port, lower: Port) -> Port {
    match lane {
        Lane::Upper => upper,
        Lane::Lower => lower,
    }
}

#[derive(Clone, Copy, Debug)]
enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub max_steps: u32,
    pub eps_norm: f64,
    pub eps_residual: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        // all known configurations settle in < 10 steps; the cap guards
        // networks with geometric interior tails
        RunOptions { max_steps: 64, eps_norm: EPS_NORM, eps_residual: 1e-12 }
    }
}

/// The full amplitude state of one run: interior rail modes and already
/// exited terminal modes live in the same polynomial, so the total Fock norm
/// is conserved step by step.
#[derive(Clone, Debug)]
pub struct PropagationState {
    poly: OperatorPolynomial,
    step: u32,
}

impl PropagationState {
    pub fn polynomial(&self) -> &OperatorPolynomial {
        &self.poly
    }

    pub fn step_count(&self) -> u32 {
        self.step
    }

    /// Squared norm of all terms still involving at least one rail mode.
    pub fn interior_norm_sqr(&self) -> Result<f64, FockError> {
        self.split().1.norm_sqr()
    }

    /// (fully exited part, in-flight part)
    pub fn split(&self) -> (OperatorPolynomial, OperatorPolynomial) {
        let mut exited = OperatorPolynomial::zero();
        let mut interior = OperatorPolynomial::zero();
        for (monomial, amp) in self.poly.terms() {
            let all_out = monomial.modes().iter().all(|m| m.direction == Direction::None);
            if all_out {
                exited.add_term(monomial.clone(), amp);
            } else {
                interior.add_term(monomial.clone(), amp);
            }
        }
        (exited, interior)
    }
}

/// One detection event: a terminal mode, its exit time bin, how many photons
/// of the parent term occupy it, and the parent term's amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct ExitRecord {
    pub terminal: ModeLabel,
    pub time_bin: u32,
    pub occupation: u32,
    pub amplitude: Complex64,
}

/// Result of a run: the exited polynomial, any interior remainder, and
/// whether the step cap was hit with probability still inside.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub exits: OperatorPolynomial,
    pub residual: OperatorPolynomial,
    pub residual_norm_sqr: f64,
    pub steps: u32,
    pub truncated: bool,
}

impl RunSummary {
    fn from_state(state: PropagationState, truncated: bool) -> Result<Self, EngineError> {
        let (exits, residual) = state.split();
        let residual_norm_sqr = residual.norm_sqr()?;
        Ok(RunSummary { exits, residual, residual_norm_sqr, steps: state.step, truncated })
    }

    /// Flatten the exit polynomial into per-terminal records, ordered by the
    /// polynomial's canonical term order.
    pub fn exit_records(&self) -> Vec<ExitRecord> {
        let mut records = Vec::new();
        for (monomial, amp) in self.exits.terms() {
            for (mode, n) in monomial.occupations() {
                records.push(ExitRecord {
                    terminal: mode,
                    time_bin: mode.time_bin,
                    occupation: n,
                    amplitude: amp,
                });
            }
        }
        records
    }
}

/// One exit ket: occupation pattern over terminal modes, Fock amplitude, and
/// probability.
#[derive(Clone, Debug)]
pub struct ExitKet {
    pub label: String,
    pub occupation: BTreeMap<ModeLabel, u32>,
    pub amplitude: Complex64,
    pub probability: f64,
}

/// Group the exited polynomial into normalized kets. Probabilities sum to
/// `1 - residual` for a unit-norm injection.
pub fn exit_fock_summary(summary: &RunSummary) -> Result<Vec<ExitKet>, FockError> {
    let kets = summary.exits.to_fock()?;
    Ok(kets
        .into_iter()
        .map(|ket| {
            let label = ket
                .occupation
                .iter()
                .map(|(mode, &n)| {
                    if n == 1 {
                        format!("{mode}")
                    } else {
                        format!("{mode}^{n}")
                    }
                })
                .collect::<Vec<_>>()
                .join(" ");
            let probability = ket.amplitude.norm_sqr();
            ExitKet { label, occupation: ket.occupation, amplitude: ket.amplitude, probability }
        })
        .collect())
}

/// Helper to assemble degree-2 inputs for the standard scenarios.
pub fn pair_input(first: ModeLabel, second: ModeLabel) -> OperatorPolynomial {
    OperatorPolynomial::from_monomial(
        CreationMonomial::new([first, second]).expect("two modes"),
        Complex64::ONE,
    )
}

/// `(first^2 + sign * second^2) / 2`
pub fn bunched_pair_input(
    first: ModeLabel,
    second: ModeLabel,
    sign: f64,
) -> OperatorPolynomial {
    let half = Complex64::new(0.5, 0.0);
    OperatorPolynomial::from_monomial(CreationMonomial::new([first, first]).unwrap(), half)
        + OperatorPolynomial::from_monomial(
            CreationMonomial::new([second, second]).unwrap(),
            half * sign,
        )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::{PhaseConfig, PhasePreset};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn rail(port: Port, site: u8, dir: Direction) -> ModeLabel {
        ModeLabel::new(port, site).with_direction(dir)
    }

    fn exit_mode(port: Port, site: u8, t: u32) -> ModeLabel {
        ModeLabel::new(port, site).with_time_bin(t)
    }

    fn mono(modes: &[ModeLabel]) -> CreationMonomial {
        CreationMonomial::new(modes.iter().copied()).unwrap()
    }

    fn photon_pair_i() -> OperatorPolynomial {
        pair_input(ModeLabel::new(Port::A, 0), ModeLabel::new(Port::B, 0))
    }

    /// Exit bins by path length in rail segments, counted independently of
    /// the stepping loop. Injection sits one segment from the first
    /// multiport and every device gap is one segment.
    fn expected_bins(n_multiports: u32, reflected: bool) -> (u32, u32) {
        // first exit: one segment in to the first multiport, one back out
        let first_left = 1 + 1;
        let second = if reflected {
            // in, across to the second multiport, back, and out again
            1 + 1 + 1 + 1
        } else {
            // in, then one segment per gap through to the right splitter
            1 + n_multiports
        };
        (first_left, second)
    }

    #[test]
    fn clustering_split_after_first_multiport() {
        let net = Network::pattern_i(PhaseConfig::none(), 1, 0.0).unwrap();
        let state = net.inject(&photon_pair_i()).unwrap();
        let state = net.step(&state).unwrap();

        let a = rail(Port::A, 0, Direction::Left);
        let b = rail(Port::B, 0, Direction::Left);
        let cc = rail(Port::C, 0, Direction::Right);
        let d = rail(Port::D, 0, Direction::Right);
        let poly = state.polynomial();
        assert!((poly.amplitude(&mono(&[a, a])) - c(-0.25)).norm() < 1e-14);
        assert!((poly.amplitude(&mono(&[b, b])) - c(-0.25)).norm() < 1e-14);
        assert!((poly.amplitude(&mono(&[a, b])) - c(0.5)).norm() < 1e-14);
        assert!((poly.amplitude(&mono(&[cc, cc])) - c(0.25)).norm() < 1e-14);
        assert!((poly.amplitude(&mono(&[d, d])) - c(0.25)).norm() < 1e-14);
        assert!((poly.amplitude(&mono(&[cc, d])) - c(0.5)).norm() < 1e-14);

        // no term pairs a left-moving with a right-moving mode
        for (monomial, _) in poly.terms() {
            let dirs: Vec<Direction> = monomial.modes().iter().map(|m| m.direction).collect();
            assert!(
                dirs.iter().all(|&d| d == Direction::Left)
                    || dirs.iter().all(|&d| d == Direction::Right),
                "mixed-direction term {monomial}"
            );
        }
    }

    #[test]
    fn directional_control_steers_the_pair() {
        // preset -> (left port, right port, left amp, right amp)
        let cases = [
            (PhasePreset::J0, Port::F, Port::E, -0.5, 0.5),
            (PhasePreset::J2, Port::E, Port::E, -0.5, 0.5),
            (PhasePreset::J26, Port::E, Port::F, -0.5, 0.5),
            (PhasePreset::J6, Port::F, Port::F, -0.5, 0.5),
        ];
        for (preset, left, right, left_amp, right_amp) in cases {
            let net = Network::pattern_i(PhaseConfig::preset(preset), 1, 0.0).unwrap();
            let state = net.inject(&photon_pair_i()).unwrap();
            let summary = net.run(state, &RunOptions::default()).unwrap();
            assert_eq!(summary.residual_norm_sqr, 0.0, "{preset:?} residual");
            assert!(!summary.truncated);

            let l = exit_mode(left, 0, 2);
            let r = exit_mode(right, 1, 2);
            let poly = &summary.exits;
            assert_eq!(poly.num_terms(), 2, "{preset:?}: {poly}");
            assert!(
                (poly.amplitude(&mono(&[l, l])) - c(left_amp)).norm() < 1e-12,
                "{preset:?} left: {poly}"
            );
            assert!(
                (poly.amplitude(&mono(&[r, r])) - c(right_amp)).norm() < 1e-12,
                "{preset:?} right: {poly}"
            );

            // each bunched ket carries half the probability
            for ket in exit_fock_summary(&summary).unwrap() {
                assert!((ket.probability - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn delayed_pair_without_inner_phase_splits_left_then_right() {
        let net = Network::pattern_i(PhaseConfig::none(), 2, 0.0).unwrap();
        let state = net.inject(&photon_pair_i()).unwrap();
        let summary = net.run(state, &RunOptions::default()).unwrap();

        let (t_left, t_right) = expected_bins(2, false);
        assert_eq!((t_left, t_right), (2, 3));
        let f0 = exit_mode(Port::F, 0, t_left);
        let e1 = exit_mode(Port::E, 1, t_right);
        assert_eq!(summary.exits.num_terms(), 2);
        assert!((summary.exits.amplitude(&mono(&[f0, f0])) - c(-0.5)).norm() < 1e-12);
        assert!((summary.exits.amplitude(&mono(&[e1, e1])) - c(0.5)).norm() < 1e-12);
    }

    #[test]
    fn inner_pi_phase_reflects_the_right_mover_back_left() {
        let net = Network::pattern_i(PhaseConfig::none(), 2, PI).unwrap();
        let state = net.inject(&photon_pair_i()).unwrap();
        let summary = net.run(state, &RunOptions::default()).unwrap();

        let (t_first, t_second) = expected_bins(2, true);
        assert_eq!((t_first, t_second), (2, 4));
        let f0 = exit_mode(Port::F, 0, t_first);
        let e0 = exit_mode(Port::E, 0, t_second);
        assert_eq!(summary.exits.num_terms(), 2, "{}", summary.exits);
        assert!((summary.exits.amplitude(&mono(&[f0, f0])) - c(-0.5)).norm() < 1e-12);
        assert!((summary.exits.amplitude(&mono(&[e0, e0])) - c(0.5)).norm() < 1e-12);
        assert_eq!(summary.residual_norm_sqr, 0.0);
    }

    #[test]
    fn probability_is_conserved_at_every_step() {
        let net = Network::pattern_i(PhaseConfig::preset(PhasePreset::J26), 2, PI).unwrap();
        let mut state = net.inject(&photon_pair_i()).unwrap();
        for _ in 0..8 {
            state = net.step(&state).unwrap();
            let total = state.polynomial().norm_sqr().unwrap();
            assert!((total - 1.0).abs() < 1e-12, "step {}: {total}", state.step_count());
        }
    }

    #[test]
    fn left_phase_choice_never_touches_right_exits() {
        for right_preset in [PhasePreset::J0, PhasePreset::J6] {
            let mut right_amplitudes = Vec::new();
            for left_preset in [PhasePreset::J0, PhasePreset::J2] {
                let mut phases = PhaseConfig::preset(right_preset);
                phases.left_lower = PhaseConfig::preset(left_preset).left_lower;
                let net = Network::pattern_i(phases, 1, 0.0).unwrap();
                let summary = net
                    .run(net.inject(&photon_pair_i()).unwrap(), &RunOptions::default())
                    .unwrap();
                let right: Vec<(CreationMonomial, Complex64)> = summary
                    .exits
                    .terms()
                    .filter(|(m, _)| m.modes().iter().all(|mode| mode.site == 1))
                    .map(|(m, a)| (m.clone(), a))
                    .collect();
                right_amplitudes.push(right);
            }
            assert_eq!(right_amplitudes[0], right_amplitudes[1], "{right_preset:?}");
        }
    }

    #[test]
    fn multiport_count_shifts_bins_but_not_kets() {
        let mut ket_sets = Vec::new();
        for n in [1usize, 2] {
            let net = Network::pattern_i(PhaseConfig::none(), n, 0.0).unwrap();
            let summary =
                net.run(net.inject(&photon_pair_i()).unwrap(), &RunOptions::default()).unwrap();
            let mut kets: Vec<(String, Complex64)> = exit_fock_summary(&summary)
                .unwrap()
                .into_iter()
                .map(|ket| {
                    // identify the ket by ports only; bins differ by device count
                    let ports: Vec<String> = ket
                        .occupation
                        .iter()
                        .map(|(m, n)| format!("{}{}x{n}", m.port.letter(), m.site))
                        .collect();
                    (ports.join("+"), ket.amplitude)
                })
                .collect();
            kets.sort_by(|x, y| x.0.cmp(&y.0));
            ket_sets.push(kets);
        }
        assert_eq!(ket_sets[0].len(), ket_sets[1].len());
        for (one, two) in ket_sets[0].iter().zip(&ket_sets[1]) {
            assert_eq!(one.0, two.0);
            assert!((one.1 - two.1).norm() < 1e-12);
        }
    }

    #[test]
    fn redistribution_pair_exits_on_upper_terminals() {
        let net = Network::pattern_ii(PhaseConfig::none(), 1, 0.0)
            .unwrap()
            .with_left_orientation(LeftBsOrientation::Flipped);
        let input = pair_input(ModeLabel::new(Port::E, 0), ModeLabel::new(Port::F, 0));
        let summary = net.run(net.inject(&input).unwrap(), &RunOptions::default()).unwrap();

        let e0 = exit_mode(Port::E, 0, 2);
        let e1 = exit_mode(Port::E, 1, 2);
        assert_eq!(summary.exits.num_terms(), 1, "{}", summary.exits);
        assert!((summary.exits.amplitude(&mono(&[e0, e1])) - c(-1.0)).norm() < 1e-12);
    }

    #[test]
    fn redistribution_keeps_standard_mount_letters_in_delay_runs() {
        let net = Network::pattern_ii(PhaseConfig::none(), 2, 0.0).unwrap();
        let input = pair_input(ModeLabel::new(Port::E, 0), ModeLabel::new(Port::F, 0));
        let summary = net.run(net.inject(&input).unwrap(), &RunOptions::default()).unwrap();

        let f0 = exit_mode(Port::F, 0, 2);
        let e1 = exit_mode(Port::E, 1, 3);
        assert_eq!(summary.exits.num_terms(), 1, "{}", summary.exits);
        assert!((summary.exits.amplitude(&mono(&[f0, e1])) - c(-1.0)).norm() < 1e-12);
    }

    #[test]
    fn vacuum_input_short_circuits() {
        let net = Network::pattern_i(PhaseConfig::none(), 1, 0.0).unwrap();
        let summary = net
            .run(net.inject(&OperatorPolynomial::zero()).unwrap(), &RunOptions::default())
            .unwrap();
        assert!(summary.exits.is_zero());
        assert_eq!(summary.residual_norm_sqr, 0.0);
        assert_eq!(summary.steps, 0);
    }

    #[test]
    fn injection_rejects_unknown_ports() {
        let net = Network::pattern_i(PhaseConfig::none(), 1, 0.0).unwrap();
        let bad = pair_input(ModeLabel::new(Port::E, 0), ModeLabel::new(Port::F, 0));
        assert!(matches!(net.inject(&bad), Err(EngineError::UnknownInjectionPort(_))));

        let net2 = Network::pattern_ii(PhaseConfig::none(), 1, 0.0).unwrap();
        let bad2 = photon_pair_i();
        assert!(matches!(net2.inject(&bad2), Err(EngineError::UnknownInjectionPort(_))));
    }

    #[test]
    fn builder_rejects_bad_configurations() {
        assert!(matches!(
            Network::pattern_i(PhaseConfig::none(), 3, 0.0),
            Err(EngineError::UnsupportedMultiportCount(3))
        ));
        assert!(matches!(
            Network::pattern_i(PhaseConfig::none(), 1, PI),
            Err(EngineError::InterPhaseWithoutInnerSpan)
        ));
    }

    #[test]
    fn quarter_wave_inner_phase_leaves_a_geometric_tail() {
        // a pi/2 phase between the multiports partially reflects on every
        // round trip, so the interior drains too slowly for the step cap
        let net = Network::pattern_i(PhaseConfig::none(), 2, FRAC_PI_2).unwrap();
        let state = net.inject(&photon_pair_i()).unwrap();
        let summary = net.run(state, &RunOptions { max_steps: 6, ..Default::default() }).unwrap();
        assert!(summary.truncated);
        assert!(summary.residual_norm_sqr > 1e-12);

        // with a longer budget the same network settles
        let state = net.inject(&photon_pair_i()).unwrap();
        let summary = net.run(state, &RunOptions::default()).unwrap();
        assert!(!summary.truncated);
    }

    #[test]
    fn capped_run_reports_everything_still_inside() {
        // one step into a two-coupler chain nothing has exited yet
        let net = Network::pattern_i(PhaseConfig::none(), 2, 0.0).unwrap();
        let state = net.inject(&photon_pair_i()).unwrap();
        let summary =
            net.run(state, &RunOptions { max_steps: 1, ..Default::default() }).unwrap();
        assert!(summary.truncated);
        assert!(summary.exits.is_zero());
        assert!(exit_fock_summary(&summary).unwrap().is_empty());
        assert!((summary.residual_norm_sqr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exit_records_flatten_terms_per_terminal() {
        let net = Network::pattern_i(PhaseConfig::none(), 2, PI).unwrap();
        let summary =
            net.run(net.inject(&photon_pair_i()).unwrap(), &RunOptions::default()).unwrap();
        let records = summary.exit_records();
        assert_eq!(records.len(), 2);
        assert!(records.iter().all(|r| r.occupation == 2));
        let mut bins: Vec<u32> = records.iter().map(|r| r.time_bin).collect();
        bins.sort_unstable();
        assert_eq!(bins, vec![2, 4]);
    }
}
