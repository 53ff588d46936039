//! Catalog of unitary scattering matrices for the simulated devices and their
//! embedding as mode maps for [`crate::fock::OperatorPolynomial::substitute`].
//!
//! Convention: an element maps its ordered input modes to its ordered output
//! modes; input mode `i` substitutes to `sum_j M[i][j] * output_j`. Traversing
//! an element against its forward orientation applies the transpose, which is
//! the inverse for every matrix in this catalog.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{FockError, ModeLabel, ModeMap, OperatorPolynomial};

/// Tolerance for the unitarity check on catalog matrices.
pub const EPS_UNITARY: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ElementError {
    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("mode list length {modes} does not match matrix dimension {dim}")]
    DimensionMismatch { modes: usize, dim: usize },

    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Unitary scattering matrix of a device over ordered input and output modes.
#[derive(Clone, Debug)]
pub struct ElementMatrix {
    inputs: Vec<ModeLabel>,
    outputs: Vec<ModeLabel>,
    matrix: DMatrix<Complex64>,
}

impl ElementMatrix {
    pub fn new(
        inputs: Vec<ModeLabel>,
        outputs: Vec<ModeLabel>,
        matrix: DMatrix<Complex64>,
    ) -> Result<Self, ElementError> {
        if inputs.len() != matrix.nrows() || outputs.len() != matrix.ncols() {
            return Err(ElementError::DimensionMismatch {
                modes: inputs.len().min(outputs.len()),
                dim: matrix.nrows(),
            });
        }
        let deviation = unitarity_deviation(&matrix);
        if deviation > EPS_UNITARY {
            return Err(ElementError::NotUnitary(deviation));
        }
        Ok(ElementMatrix { inputs, outputs, matrix })
    }

    /// 50:50 beam splitter, `1/sqrt(2) * [[1, 1], [-1, 1]]`:
    /// first input maps to the sum of the outputs, second to the difference.
    pub fn beam_splitter(
        inputs: [ModeLabel; 2],
        outputs: [ModeLabel; 2],
    ) -> Self {
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let matrix = DMatrix::from_row_slice(2, 2, &[r, r, -r, r]);
        ElementMatrix { inputs: inputs.to_vec(), outputs: outputs.to_vec(), matrix }
    }

    /// Four-port Grover coupler: diagonal -1/2, off-diagonal +1/2. Equal
    /// splitting to all four ports, its own inverse, symmetric.
    pub fn grover4(inputs: [ModeLabel; 4], outputs: [ModeLabel; 4]) -> Self {
        let h = Complex64::new(0.5, 0.0);
        let mut matrix = DMatrix::from_element(4, 4, h);
        for i in 0..4 {
            matrix[(i, i)] = -h;
        }
        ElementMatrix { inputs: inputs.to_vec(), outputs: outputs.to_vec(), matrix }
    }

    /// Single-rail phase shifter: multiplies the amplitude by `e^{i phi}`.
    pub fn phase_shifter(input: ModeLabel, output: ModeLabel, phi: f64) -> Self {
        let matrix = DMatrix::from_element(1, 1, Complex64::from_polar(1.0, phi));
        ElementMatrix { inputs: vec![input], outputs: vec![output], matrix }
    }

    /// The element traversed in the reverse direction: transpose of the
    /// matrix with input and output mode lists exchanged.
    pub fn reverse(&self) -> Self {
        ElementMatrix {
            inputs: self.outputs.clone(),
            outputs: self.inputs.clone(),
            matrix: self.matrix.transpose(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn inputs(&self) -> &[ModeLabel] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[ModeLabel] {
        &self.outputs
    }

    pub fn is_unitary(&self) -> bool {
        unitarity_deviation(&self.matrix) <= EPS_UNITARY
    }

    /// Substitution map sending each input mode to its image over the output
    /// modes.
    pub fn as_mode_map(&self) -> Result<ModeMap, ElementError> {
        let mut map = ModeMap::new();
        for (i, &input) in self.inputs.iter().enumerate() {
            let image: Vec<(Complex64, ModeLabel)> = self
                .outputs
                .iter()
                .enumerate()
                .map(|(j, &output)| (self.matrix[(i, j)], output))
                .collect();
            map.insert(input, OperatorPolynomial::linear(&image))?;
        }
        Ok(map)
    }
}

/// Max absolute entry of `M^dagger M - I`.
pub fn unitarity_deviation(matrix: &DMatrix<Complex64>) -> f64 {
    let n = matrix.nrows();
    let product = matrix.adjoint() * matrix;
    let mut max = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { Complex64::ONE } else { Complex64::ZERO };
            max = max.max((product[(i, j)] - expected).norm());
        }
    }
    max
}

/// Where a `pi` phase plate sits relative to the two beam splitters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhasePreset {
    /// No phase plates.
    J0,
    /// `pi` on the lower-left rail.
    J2,
    /// `pi` on the lower-right rail.
    J6,
    /// `pi` on both lower rails.
    J26,
}

impl PhasePreset {
    pub const ALL: [PhasePreset; 4] = [PhasePreset::J0, PhasePreset::J2, PhasePreset::J6, PhasePreset::J26];

    pub fn label(self) -> &'static str {
        match self {
            PhasePreset::J0 => "j0",
            PhasePreset::J2 => "j2",
            PhasePreset::J6 => "j6",
            PhasePreset::J26 => "j26",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "j0" | "0" => Some(PhasePreset::J0),
            "j2" | "2" => Some(PhasePreset::J2),
            "j6" | "6" => Some(PhasePreset::J6),
            "j26" | "26" => Some(PhasePreset::J26),
            _ => None,
        }
    }
}

/// Per-rail phases (radians) on the four exterior rail segments, applied on
/// every traversal in either direction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    #[serde(default)]
    pub left_upper: f64,
    #[serde(default)]
    pub left_lower: f64,
    #[serde(default)]
    pub right_upper: f64,
    #[serde(default)]
    pub right_lower: f64,
}

impl PhaseConfig {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn preset(preset: PhasePreset) -> Self {
        use std::f64::consts::PI;
        match preset {
            PhasePreset::J0 => Self::default(),
            PhasePreset::J2 => PhaseConfig { left_lower: PI, ..Default::default() },
            PhasePreset::J6 => PhaseConfig { right_lower: PI, ..Default::default() },
            PhasePreset::J26 => {
                PhaseConfig { left_lower: PI, right_lower: PI, ..Default::default() }
            }
        }
    }
}
