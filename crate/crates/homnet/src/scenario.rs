//! Named scenario presets, JSON configs and reports, and the verification
//! suites behind `verify-golden` and `verify-evolution`.
//!
//! Reports are byte-deterministic for a fixed config: term maps are ordered,
//! amplitudes are rounded to 12 significant digits, and every exit amplitude
//! is normalized by one global phase that rotates the first nonzero exit
//! amplitude onto the positive real axis.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::elements::{PhaseConfig, PhasePreset};
use crate::engine::{
    exit_fock_summary, EngineError, Lane, LeftBsOrientation, Network, Pattern, RunOptions,
    RunSummary,
};
use crate::evolution::{
    arrival_series, block_check, build, injection_modes, timed_exit_map, unitarity_deviation,
    EvolutionConfig, EvolutionKind,
};
use crate::fock::{
    CreationMonomial, FockError, ModeLabel, OperatorPolynomial, Polarization, Port,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario config: {0}")]
    Invalid(String),

    #[error(transparent)]
    Engine(#[from] EngineError),

    #[error(transparent)]
    Fock(#[from] FockError),
}

/// One input term: complex amplitude and the modes of the monomial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermSpec {
    pub amplitude: [f64; 2],
    pub modes: Vec<ModeLabel>,
}

/// Serializable description of one simulation run.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub pattern: Pattern,
    #[serde(default = "default_multiports")]
    pub n_multiports: usize,
    #[serde(default)]
    pub phase_preset: Option<PhasePreset>,
    #[serde(default)]
    pub phases: Option<PhaseConfig>,
    #[serde(default)]
    pub inter_multiport_phase: f64,
    #[serde(default = "default_lane")]
    pub inter_multiport_lane: Lane,
    #[serde(default)]
    pub left_bs_orientation: LeftBsOrientation,
    pub input: Vec<TermSpec>,
    #[serde(default = "default_max_steps")]
    pub max_steps: u32,
}

fn default_multiports() -> usize {
    1
}

fn default_lane() -> Lane {
    Lane::Lower
}

fn default_max_steps() -> u32 {
    64
}

impl ScenarioConfig {
    pub fn resolved_phases(&self) -> Result<PhaseConfig, ScenarioError> {
        match (&self.phase_preset, &self.phases) {
            (Some(_), Some(_)) => Err(ScenarioError::Invalid(
                "set either phase_preset or phases, not both".into(),
            )),
            (Some(preset), None) => Ok(PhaseConfig::preset(*preset)),
            (None, Some(phases)) => Ok(*phases),
            (None, None) => Ok(PhaseConfig::none()),
        }
    }

    pub fn input_polynomial(&self) -> Result<OperatorPolynomial, ScenarioError> {
        if self.input.is_empty() {
            return Err(ScenarioError::Invalid("input polynomial is empty".into()));
        }
        let mut poly = OperatorPolynomial::zero();
        for term in &self.input {
            let monomial = CreationMonomial::new(term.modes.iter().copied())
                .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
            poly.add_term(monomial, Complex64::new(term.amplitude[0], term.amplitude[1]));
        }
        if poly.is_zero() {
            return Err(ScenarioError::Invalid("input amplitudes sum to zero".into()));
        }
        poly.degree().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        Ok(poly)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let phases = self.resolved_phases()?;
        for (name, value) in [
            ("left_upper", phases.left_upper),
            ("left_lower", phases.left_lower),
            ("right_upper", phases.right_upper),
            ("right_lower", phases.right_lower),
            ("inter_multiport_phase", self.inter_multiport_phase),
        ] {
            if !value.is_finite() {
                return Err(ScenarioError::Invalid(format!("phase {name} is not finite")));
            }
        }
        if self.max_steps == 0 {
            return Err(ScenarioError::Invalid("max_steps must be at least 1".into()));
        }
        self.input_polynomial()?;
        Ok(())
    }

    pub fn build_network(&self) -> Result<Network, ScenarioError> {
        let phases = self.resolved_phases()?;
        let net = Network::build(
            self.pattern,
            phases,
            self.n_multiports,
            self.inter_multiport_phase,
            self.inter_multiport_lane,
        )?
        .with_left_orientation(self.left_bs_orientation);
        Ok(net)
    }
}

/// Run a config end to end and return the run summary.
pub fn execute(config: &ScenarioConfig, opts: &RunOptions) -> Result<RunSummary, ScenarioError> {
    config.validate()?;
    let net = config.build_network()?;
    let state = net.inject(&config.input_polynomial()?)?;
    Ok(net.run(state, opts)?)
}

/// Round to 12 significant digits for stable report bytes. Components below
/// every tolerance in the project (1e-13) are flushed to zero so exact-pi
/// phases do not leave `sin(pi)` dust in the reports.
fn round_sig(x: f64) -> f64 {
    if x.abs() <= 1e-13 {
        return 0.0;
    }
    format!("{x:.11e}").parse().expect("formatted float")
}

fn port_string(mode: &ModeLabel) -> String {
    format!(
        "{}{}{}",
        mode.port.letter(),
        mode.site,
        match mode.polarization {
            Polarization::H => "H",
            Polarization::V => "V",
        }
    )
}

/// Phase factor that rotates the first nonzero amplitude (in canonical term
/// order) onto the positive real axis.
fn global_phase_fix(poly: &OperatorPolynomial) -> Complex64 {
    for (_, amp) in poly.terms() {
        if amp.norm() > 0.0 {
            return amp.conj() / amp.norm();
        }
    }
    Complex64::ONE
}

/// Machine-readable report for one run.
pub fn report(scenario: &str, summary: &RunSummary) -> Result<Value, ScenarioError> {
    let phase = global_phase_fix(&summary.exits);
    let exits = summary.exits.clone().scale(phase);

    let mut exit_entries = Vec::new();
    for (monomial, amp) in exits.terms() {
        for (mode, n) in monomial.occupations() {
            exit_entries.push(json!({
                "port": port_string(&mode),
                "time_bin": mode.time_bin,
                "occupation": n,
                "amplitude": [round_sig(amp.re), round_sig(amp.im)],
            }));
        }
    }

    let summary_for_kets =
        RunSummary { exits, ..summary.clone() };
    let kets: Vec<Value> = exit_fock_summary(&summary_for_kets)?
        .into_iter()
        .map(|ket| {
            json!({
                "label": ket.label,
                "probability": round_sig(ket.probability),
            })
        })
        .collect();

    Ok(json!({
        "scenario": scenario,
        "exits": exit_entries,
        "kets": kets,
        "residual_norm": round_sig(summary.residual_norm_sqr),
    }))
}

// ---------------------------------------------------------------------------
// preset catalog
// ---------------------------------------------------------------------------

fn a0() -> ModeLabel {
    ModeLabel::new(Port::A, 0)
}

fn b0() -> ModeLabel {
    ModeLabel::new(Port::B, 0)
}

fn e0() -> ModeLabel {
    ModeLabel::new(Port::E, 0)
}

fn f0() -> ModeLabel {
    ModeLabel::new(Port::F, 0)
}

fn vert(mode: ModeLabel) -> ModeLabel {
    mode.with_polarization(Polarization::V)
}

fn term(amp: f64, modes: &[ModeLabel]) -> TermSpec {
    TermSpec { amplitude: [amp, 0.0], modes: modes.to_vec() }
}

fn pair_terms(x: ModeLabel, y: ModeLabel) -> Vec<TermSpec> {
    vec![term(1.0, &[x, y])]
}

fn bunched_terms(x: ModeLabel, y: ModeLabel, sign: f64) -> Vec<TermSpec> {
    vec![term(0.5, &[x, x]), term(0.5 * sign, &[y, y])]
}

fn base_config(pattern: Pattern, n_multiports: usize, input: Vec<TermSpec>) -> ScenarioConfig {
    ScenarioConfig {
        pattern,
        n_multiports,
        phase_preset: None,
        phases: None,
        inter_multiport_phase: 0.0,
        inter_multiport_lane: Lane::Lower,
        left_bs_orientation: LeftBsOrientation::Standard,
        input,
        max_steps: 64,
    }
}

fn control_config(preset: PhasePreset) -> ScenarioConfig {
    let mut cfg = base_config(Pattern::I, 1, pair_terms(a0(), b0()));
    cfg.phase_preset = Some(preset);
    cfg
}

fn circulators_config(input: Vec<TermSpec>) -> ScenarioConfig {
    let mut cfg = base_config(Pattern::I, 1, input);
    cfg.left_bs_orientation = LeftBsOrientation::Flipped;
    cfg
}

fn redistribute_config(input: Vec<TermSpec>) -> ScenarioConfig {
    let mut cfg = base_config(Pattern::II, 1, input);
    cfg.left_bs_orientation = LeftBsOrientation::Flipped;
    cfg
}

fn redistribute_control_config(preset: PhasePreset) -> ScenarioConfig {
    let mut cfg = redistribute_config(pair_terms(e0(), f0()));
    cfg.phase_preset = Some(preset);
    cfg
}

fn delayed_config(pattern: Pattern, reflect: bool) -> ScenarioConfig {
    let input = match pattern {
        Pattern::I => pair_terms(a0(), b0()),
        Pattern::II => pair_terms(e0(), f0()),
    };
    let mut cfg = base_config(pattern, 2, input);
    if reflect {
        cfg.inter_multiport_phase = std::f64::consts::PI;
    }
    cfg
}

/// All built-in presets with one-line descriptions.
pub fn preset_catalog() -> Vec<(&'static str, &'static str, ScenarioConfig)> {
    vec![
        (
            "hom-control-none",
            "pair on the rails, no phase plates: bunched exits on f0 and e1",
            control_config(PhasePreset::J0),
        ),
        (
            "hom-control-left",
            "pi on the lower-left rail steers the left exit to e0",
            control_config(PhasePreset::J2),
        ),
        (
            "hom-control-right",
            "pi on the lower-right rail steers the right exit to f1",
            control_config(PhasePreset::J6),
        ),
        (
            "hom-control-both",
            "pi on both lower rails steers both exits",
            control_config(PhasePreset::J26),
        ),
        (
            "delayed-hom-transmit",
            "two couplers, no inter-coupler phase: left exit one bin before the right",
            delayed_config(Pattern::I, false),
        ),
        (
            "delayed-hom-reflect",
            "pi between the couplers reflects the right mover; both exits leave left",
            delayed_config(Pattern::I, true),
        ),
        (
            "circulators-pair",
            "rail-injected photon pair, flipped left splitter mount",
            circulators_config(pair_terms(a0(), b0())),
        ),
        (
            "circulators-hom-plus",
            "rail-injected bunched pair with +1 relative phase",
            circulators_config(bunched_terms(a0(), b0(), 1.0)),
        ),
        (
            "circulators-hom-minus",
            "rail-injected bunched pair with -1 relative phase",
            circulators_config(bunched_terms(a0(), b0(), -1.0)),
        ),
        (
            "circulators-distinguishable",
            "rail-injected orthogonally polarized pair",
            circulators_config(pair_terms(a0(), vert(b0()))),
        ),
        (
            "circulators-distinguishable-hom-plus",
            "rail-injected polarized bunched pair, +1 relative phase",
            circulators_config(bunched_terms(a0(), vert(b0()), 1.0)),
        ),
        (
            "circulators-distinguishable-hom-minus",
            "rail-injected polarized bunched pair, -1 relative phase",
            circulators_config(bunched_terms(a0(), vert(b0()), -1.0)),
        ),
        (
            "redistribute-pair",
            "pair through the left splitter is redistributed across the chain",
            redistribute_config(pair_terms(e0(), f0())),
        ),
        (
            "redistribute-hom-plus",
            "bunched pair with +1 relative phase through the left splitter",
            redistribute_config(bunched_terms(e0(), f0(), 1.0)),
        ),
        (
            "redistribute-hom-minus",
            "bunched pair with -1 relative phase through the left splitter",
            redistribute_config(bunched_terms(e0(), f0(), -1.0)),
        ),
        (
            "redistribute-distinguishable",
            "orthogonally polarized pair through the left splitter",
            redistribute_config(pair_terms(e0(), vert(f0()))),
        ),
        (
            "redistribute-distinguishable-hom-plus",
            "polarized bunched pair, +1 relative phase, through the left splitter",
            redistribute_config(bunched_terms(e0(), vert(f0()), 1.0)),
        ),
        (
            "redistribute-distinguishable-hom-minus",
            "polarized bunched pair, -1 relative phase, through the left splitter",
            redistribute_config(bunched_terms(e0(), vert(f0()), -1.0)),
        ),
        (
            "redistribute-control-none",
            "splitter-fed pair, no phase plates: exits on e0 and e1",
            redistribute_control_config(PhasePreset::J0),
        ),
        (
            "redistribute-control-left",
            "splitter-fed pair with pi on the lower-left rail",
            redistribute_control_config(PhasePreset::J2),
        ),
        (
            "redistribute-control-right",
            "splitter-fed pair with pi on the lower-right rail",
            redistribute_control_config(PhasePreset::J6),
        ),
        (
            "redistribute-control-both",
            "splitter-fed pair with pi on both lower rails",
            redistribute_control_config(PhasePreset::J26),
        ),
        (
            "delayed-redistribute-transmit",
            "splitter-fed pair over two couplers without an inter-coupler phase",
            delayed_config(Pattern::II, false),
        ),
        (
            "delayed-redistribute-reflect",
            "splitter-fed pair reflected by a pi phase between the couplers",
            delayed_config(Pattern::II, true),
        ),
    ]
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    preset_catalog().into_iter().find(|(n, _, _)| *n == name).map(|(_, _, cfg)| cfg)
}

pub fn preset_names() -> Vec<&'static str> {
    preset_catalog().into_iter().map(|(n, _, _)| n).collect()
}

// ---------------------------------------------------------------------------
// golden vectors
// ---------------------------------------------------------------------------

/// Expected exit state of one golden scenario, with exit time bins ignored,
/// compared amplitude-exactly up to one global phase.
pub struct GoldenRow {
    pub id: &'static str,
    pub expected: Vec<(Vec<ModeLabel>, f64)>,
}

#[derive(Clone, Debug)]
pub struct GoldenOutcome {
    pub id: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn exit(port: Port, site: u8) -> ModeLabel {
    ModeLabel::new(port, site)
}

/// Golden exit states for the circulator-fed and splitter-fed scenario
/// families, expressed over terminal modes with time bins stripped.
pub fn golden_rows() -> Vec<GoldenRow> {
    let e0 = exit(Port::E, 0);
    let e1 = exit(Port::E, 1);
    let ev0 = vert(e0);
    let ev1 = vert(e1);
    vec![
        GoldenRow {
            id: "circulators-pair",
            expected: vec![(vec![e0, e0], -0.5), (vec![e1, e1], 0.5)],
        },
        GoldenRow {
            id: "circulators-hom-plus",
            expected: vec![(vec![e0, e0], 0.5), (vec![e1, e1], 0.5)],
        },
        GoldenRow {
            id: "circulators-hom-minus",
            expected: vec![(vec![e0, e1], -1.0)],
        },
        GoldenRow {
            id: "circulators-distinguishable",
            expected: vec![
                (vec![e0, ev0], -0.5),
                (vec![e0, ev1], -0.5),
                (vec![e1, ev0], 0.5),
                (vec![e1, ev1], 0.5),
            ],
        },
        GoldenRow {
            id: "circulators-distinguishable-hom-plus",
            expected: vec![
                (vec![e0, e0], 0.25),
                (vec![e0, e1], -0.5),
                (vec![e1, e1], 0.25),
                (vec![ev0, ev0], 0.25),
                (vec![ev0, ev1], 0.5),
                (vec![ev1, ev1], 0.25),
            ],
        },
        GoldenRow {
            id: "circulators-distinguishable-hom-minus",
            expected: vec![
                (vec![e0, e0], 0.25),
                (vec![e0, e1], -0.5),
                (vec![e1, e1], 0.25),
                (vec![ev0, ev0], -0.25),
                (vec![ev0, ev1], -0.5),
                (vec![ev1, ev1], -0.25),
            ],
        },
        GoldenRow {
            id: "redistribute-pair",
            expected: vec![(vec![e0, e1], -1.0)],
        },
        GoldenRow {
            id: "redistribute-hom-plus",
            expected: vec![(vec![e0, e0], 0.5), (vec![e1, e1], 0.5)],
        },
        GoldenRow {
            id: "redistribute-hom-minus",
            expected: vec![(vec![e0, e0], 0.5), (vec![e1, e1], -0.5)],
        },
        GoldenRow {
            id: "redistribute-distinguishable",
            expected: vec![(vec![e0, ev1], -1.0)],
        },
        GoldenRow {
            id: "redistribute-distinguishable-hom-plus",
            expected: vec![(vec![e0, e0], 0.5), (vec![ev1, ev1], 0.5)],
        },
        GoldenRow {
            id: "redistribute-distinguishable-hom-minus",
            expected: vec![(vec![e0, e0], 0.5), (vec![ev1, ev1], -0.5)],
        },
    ]
}

/// Strip time bins so exits can be compared against the timeless golden
/// states.
fn strip_bins(poly: &OperatorPolynomial) -> OperatorPolynomial {
    let mut out = OperatorPolynomial::zero();
    for (monomial, amp) in poly.terms() {
        let modes = monomial.modes().iter().map(|m| m.with_time_bin(0));
        out.add_term(CreationMonomial::new(modes).expect("non-empty"), amp);
    }
    out
}

/// Compare two polynomials up to one overall phase at tolerance `eps`.
pub fn matches_up_to_phase(
    actual: &OperatorPolynomial,
    expected: &OperatorPolynomial,
    eps: f64,
) -> (bool, f64) {
    let phase_a = global_phase_fix(actual);
    let phase_e = global_phase_fix(expected);
    let a = actual.clone().scale(phase_a);
    let e = expected.clone().scale(phase_e);
    let mut max_dev = 0.0_f64;
    for (monomial, amp) in e.terms() {
        max_dev = max_dev.max((a.amplitude(monomial) - amp).norm());
    }
    for (monomial, amp) in a.terms() {
        max_dev = max_dev.max((e.amplitude(monomial) - amp).norm());
    }
    (max_dev <= eps, max_dev)
}

/// Run every golden scenario and compare its exit state amplitude-exactly
/// (up to one global phase per row) against the stored vector.
pub fn verify_golden() -> Result<Vec<GoldenOutcome>, ScenarioError> {
    let mut outcomes = Vec::new();
    for row in golden_rows() {
        let config = preset(row.id)
            .ok_or_else(|| ScenarioError::Invalid(format!("unknown preset {}", row.id)))?;
        let summary = execute(&config, &RunOptions::default())?;
        let actual = strip_bins(&summary.exits);
        let mut expected = OperatorPolynomial::zero();
        for (modes, amp) in &row.expected {
            expected.add_term(
                CreationMonomial::new(modes.iter().copied())
                    .map_err(|e| ScenarioError::Invalid(e.to_string()))?,
                Complex64::new(*amp, 0.0),
            );
        }
        let (pass, max_dev) = matches_up_to_phase(&actual, &expected, 1e-12);
        let detail = if pass {
            format!("max deviation {max_dev:.2e}")
        } else {
            format!("max deviation {max_dev:.2e}; got {actual}")
        };
        outcomes.push(GoldenOutcome { id: row.id, pass, detail });
    }
    Ok(outcomes)
}

// ---------------------------------------------------------------------------
// evolution-matrix verification
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct EvolutionOutcome {
    pub preset: PhasePreset,
    pub unitary: bool,
    pub product_identity: bool,
    pub blocks: bool,
    pub decay: bool,
    pub detail: String,
}

impl EvolutionOutcome {
    pub fn pass(&self) -> bool {
        self.unitary && self.product_identity && self.blocks && self.decay
    }
}

/// Structural checks on the six-line evolution matrices for the given phase
/// presets: unitarity, the splitter-fed/circulator-fed product identity, the
/// block templates, and decay of higher-order exterior arrivals.
pub fn verify_evolution(presets: &[PhasePreset]) -> Vec<EvolutionOutcome> {
    presets
        .iter()
        .map(|&preset| {
            let u_cfg = EvolutionConfig::new(EvolutionKind::CirculatorFed, PhaseConfig::preset(preset));
            let v_cfg =
                EvolutionConfig::new(EvolutionKind::BeamSplitterFed, PhaseConfig::preset(preset));
            let u = build(&u_cfg);
            let v = build(&v_cfg);

            let du = unitarity_deviation(&u);
            let dv = unitarity_deviation(&v);
            let unitary = du < 1e-12 && dv < 1e-12;

            let product = u * crate::evolution::left_splitter_entry(u_cfg.left_orientation);
            let dp: f64 = (v - product).iter().map(|x| x.norm()).fold(0.0, f64::max);
            let product_identity = dp < 1e-12;

            let blocks = block_check(&u, EvolutionKind::CirculatorFed).pass()
                && block_check(&v, EvolutionKind::BeamSplitterFed).pass();

            // fixed probe vector on the injection lines
            let probe = [Complex64::new(0.62, -0.17), Complex64::new(-0.48, 0.59)];
            let series = arrival_series(&u_cfg, 8);
            let mut decay = true;
            let mut previous = f64::INFINITY;
            let mut last = 0.0;
            for order in &series.orders {
                let mut out = 0.0;
                for j in 0..6 {
                    let amp: Complex64 = (0..2)
                        .map(|i| (order.left[(j, i)] + order.right[(j, i)]) * probe[i])
                        .sum();
                    out += amp.norm_sqr();
                }
                last = out.sqrt();
                if last > previous + 1e-14 {
                    decay = false;
                }
                previous = last;
            }
            if last >= 1e-3 {
                decay = false;
            }

            EvolutionOutcome {
                preset,
                unitary,
                product_identity,
                blocks,
                decay,
                detail: format!(
                    "unitarity {du:.1e}/{dv:.1e}, product {dp:.1e}, order-8 arrival {last:.1e}"
                ),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// engine vs evolution-matrix equivalence
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct EquivalenceOutcome {
    pub name: String,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Compare the timed two-photon lift of the evolution matrices against the
/// stepped engine, per exit term and time bin, over the two-multiport
/// variants of every scenario family.
pub fn verify_representation_equivalence() -> Result<Vec<EquivalenceOutcome>, ScenarioError> {
    let mut cases: Vec<(String, EvolutionConfig, ScenarioConfig)> = Vec::new();

    for preset in PhasePreset::ALL {
        for orientation in [LeftBsOrientation::Standard, LeftBsOrientation::Flipped] {
            for kind in [EvolutionKind::CirculatorFed, EvolutionKind::BeamSplitterFed] {
                let (pattern, input) = match kind {
                    EvolutionKind::CirculatorFed => (Pattern::I, pair_terms(a0(), b0())),
                    EvolutionKind::BeamSplitterFed => (Pattern::II, pair_terms(e0(), f0())),
                };
                let mut scenario = base_config(pattern, 2, input);
                scenario.phase_preset = Some(preset);
                scenario.left_bs_orientation = orientation;
                let evo = EvolutionConfig::new(kind, PhaseConfig::preset(preset))
                    .with_left_orientation(orientation);
                cases.push((
                    format!("{:?}/{}/{:?}", kind, preset.label(), orientation),
                    evo,
                    scenario,
                ));
            }
        }
    }
    // reflected delay runs: interior pi phase, second-order arrivals
    for kind in [EvolutionKind::CirculatorFed, EvolutionKind::BeamSplitterFed] {
        let pattern = match kind {
            EvolutionKind::CirculatorFed => Pattern::I,
            EvolutionKind::BeamSplitterFed => Pattern::II,
        };
        let scenario = delayed_config(pattern, true);
        let evo = EvolutionConfig::new(kind, PhaseConfig::none())
            .with_interior_phase(std::f64::consts::PI, Lane::Lower);
        cases.push((format!("{kind:?}/delayed-reflect"), evo, scenario));
    }

    let mut outcomes = Vec::new();
    for (name, evo, scenario) in cases {
        let summary = execute(&scenario, &RunOptions::default())?;
        let input = scenario.input_polynomial()?.normalized()?;

        // rewrite injection modes to the labels the lift map expects
        let (map, leak) = timed_exit_map(&evo, &[Polarization::H], 4)?;
        if leak > 1e-12 {
            outcomes.push(EquivalenceOutcome { name, max_deviation: leak, pass: false });
            continue;
        }
        let engine_injection = injection_modes(evo.kind, Polarization::H);
        let mut relabel = crate::fock::ModeMap::new();
        for (spec_mode, engine_mode) in
            [(a0(), engine_injection[0]), (b0(), engine_injection[1]), (e0(), engine_injection[0]), (f0(), engine_injection[1])]
        {
            relabel.insert(spec_mode, OperatorPolynomial::mode(engine_mode))?;
        }
        let lifted = input.substitute(&relabel)?.substitute(&map)?;

        let mut max_dev = 0.0_f64;
        for (monomial, amp) in summary.exits.terms() {
            max_dev = max_dev.max((lifted.amplitude(monomial) - amp).norm());
        }
        for (monomial, amp) in lifted.terms() {
            max_dev = max_dev.max((summary.exits.amplitude(monomial) - amp).norm());
        }
        outcomes.push(EquivalenceOutcome { name, max_deviation: max_dev, pass: max_dev <= 1e-12 });
    }
    Ok(outcomes)
}

// ---------------------------------------------------------------------------
// phase sweeps
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepRail {
    LeftUpper,
    LeftLower,
    RightUpper,
    RightLower,
    InterUpper,
    InterLower,
}

impl SweepRail {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "left-upper" => Some(SweepRail::LeftUpper),
            "left-lower" => Some(SweepRail::LeftLower),
            "right-upper" => Some(SweepRail::RightUpper),
            "right-lower" => Some(SweepRail::RightLower),
            "inter-upper" => Some(SweepRail::InterUpper),
            "inter-lower" => Some(SweepRail::InterLower),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SweepRail::LeftUpper => "left-upper",
            SweepRail::LeftLower => "left-lower",
            SweepRail::RightUpper => "right-upper",
            SweepRail::RightLower => "right-lower",
            SweepRail::InterUpper => "inter-upper",
            SweepRail::InterLower => "inter-lower",
        }
    }
}

/// Copy of `base` with the chosen rail's phase overridden to `phi`.
pub fn with_rail_phase(
    base: &ScenarioConfig,
    rail: SweepRail,
    phi: f64,
) -> Result<ScenarioConfig, ScenarioError> {
    let mut phases = base.resolved_phases()?;
    let mut cfg = base.clone();
    match rail {
        SweepRail::LeftUpper => phases.left_upper = phi,
        SweepRail::LeftLower => phases.left_lower = phi,
        SweepRail::RightUpper => phases.right_upper = phi,
        SweepRail::RightLower => phases.right_lower = phi,
        SweepRail::InterUpper => {
            cfg.inter_multiport_lane = Lane::Upper;
            cfg.inter_multiport_phase = phi;
        }
        SweepRail::InterLower => {
            cfg.inter_multiport_lane = Lane::Lower;
            cfg.inter_multiport_phase = phi;
        }
    }
    cfg.phase_preset = None;
    cfg.phases = Some(phases);
    Ok(cfg)
}

/// Exit-probability summary of one sweep point: per-ket probabilities and
/// per-terminal photon fractions.
pub fn sweep_point(
    config: &ScenarioConfig,
    phi: f64,
) -> Result<Value, ScenarioError> {
    let summary = execute(config, &RunOptions::default())?;
    let kets = exit_fock_summary(&summary)?;
    let mut ket_map = BTreeMap::new();
    let mut port_fractions: BTreeMap<String, f64> = BTreeMap::new();
    let mut degree = 0u32;
    for ket in &kets {
        let timeless: Vec<String> = ket
            .occupation
            .iter()
            .map(|(m, n)| format!("{}x{n}", port_string(m)))
            .collect();
        *ket_map.entry(timeless.join("+")).or_insert(0.0) += ket.probability;
        for (mode, n) in &ket.occupation {
            *port_fractions.entry(port_string(mode)).or_default() += ket.probability * *n as f64;
            degree = degree.max(ket.occupation.values().sum());
        }
    }
    if degree > 0 {
        for value in port_fractions.values_mut() {
            *value /= degree as f64;
        }
    }
    Ok(json!({
        "phi": round_sig(phi),
        "kets": Value::Object(
            ket_map.into_iter().map(|(k, v)| (k, json!(round_sig(v)))).collect(),
        ),
        "ports": Value::Object(
            port_fractions.into_iter().map(|(k, v)| (k, json!(round_sig(v)))).collect(),
        ),
        "residual_norm": round_sig(summary.residual_norm_sqr),
    }))
}
