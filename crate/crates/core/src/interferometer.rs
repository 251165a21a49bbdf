//! Parameterized linear-optical circuits.
//!
//! A [`CircuitSpec`] is an ordered list of phase shifters and beam splitters,
//! each with a parameter [`Binding`]. Composition follows optical
//! propagation: later elements multiply on the left, so a spec laid out as
//! `W1 elements, data elements, W2 elements` yields `U = W2 · S(x) · W1`.
//!
//! Beam splitter convention on modes `(j, j+1)`:
//!
//! ```text
//! [[cos θ, i sin θ],
//!  [i sin θ, cos θ]]
//! ```

use std::f64::consts::FRAC_PI_4;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("binding error: {0}")]
    Binding(String),
    #[error("configuration error: {0}")]
    Configuration(String),
}

/// Trainable block of the ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    /// Input mesh, parameters θ₁.
    First,
    /// Output mesh, parameters θ₂.
    Second,
}

impl Block {
    fn index(self) -> usize {
        match self {
            Block::First => 0,
            Block::Second => 1,
        }
    }
}

/// Source of an element's angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Trainable { block: Block, slot: usize },
    Data { feature: usize },
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CircuitElement {
    PhaseShifter { mode: usize, phase: Binding },
    /// Acts on `(mode, mode + 1)`.
    BeamSplitter { mode: usize, angle: Binding },
}

impl CircuitElement {
    pub fn binding(&self) -> Binding {
        match *self {
            CircuitElement::PhaseShifter { phase, .. } => phase,
            CircuitElement::BeamSplitter { angle, .. } => angle,
        }
    }

    fn highest_mode(&self) -> usize {
        match *self {
            CircuitElement::PhaseShifter { mode, .. } => mode,
            CircuitElement::BeamSplitter { mode, .. } => mode + 1,
        }
    }
}

/// Values that bindings resolve against.
#[derive(Debug, Clone, Copy)]
pub struct Parameters<'a> {
    pub theta1: &'a [f64],
    pub theta2: &'a [f64],
    pub features: &'a [f64],
}

impl<'a> Parameters<'a> {
    pub fn new(theta1: &'a [f64], theta2: &'a [f64], features: &'a [f64]) -> Self {
        Self {
            theta1,
            theta2,
            features,
        }
    }

    pub fn resolve(&self, binding: Binding) -> Result<f64, CircuitError> {
        let lookup = |values: &[f64], i: usize, what: &str| {
            values.get(i).copied().ok_or_else(|| {
                CircuitError::Binding(format!("{what} index {i} out of range (len {})", values.len()))
            })
        };
        match binding {
            Binding::Fixed(v) => Ok(v),
            Binding::Data { feature } => lookup(self.features, feature, "feature"),
            Binding::Trainable { block: Block::First, slot } => lookup(self.theta1, slot, "theta1"),
            Binding::Trainable { block: Block::Second, slot } => lookup(self.theta2, slot, "theta2"),
        }
    }
}

/// Validated circuit description. Deserialization re-runs validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCircuitSpec")]
pub struct CircuitSpec {
    modes: usize,
    feature_dim: usize,
    trainable_counts: [usize; 2],
    elements: Vec<CircuitElement>,
}

#[derive(Deserialize)]
struct RawCircuitSpec {
    modes: usize,
    feature_dim: usize,
    trainable_counts: [usize; 2],
    elements: Vec<CircuitElement>,
}

impl TryFrom<RawCircuitSpec> for CircuitSpec {
    type Error = CircuitError;

    fn try_from(raw: RawCircuitSpec) -> Result<Self, Self::Error> {
        CircuitSpec::new(raw.modes, raw.feature_dim, raw.trainable_counts, raw.elements)
    }
}

impl CircuitSpec {
    pub fn new(
        modes: usize,
        feature_dim: usize,
        trainable_counts: [usize; 2],
        elements: Vec<CircuitElement>,
    ) -> Result<Self, CircuitError> {
        if modes == 0 {
            return Err(CircuitError::Configuration("circuit needs at least one mode".into()));
        }
        let mut seen = [vec![false; trainable_counts[0]], vec![false; trainable_counts[1]]];
        // 0 = first block, 1 = data, 2 = second block
        let mut stage = 0;
        for (i, el) in elements.iter().enumerate() {
            if el.highest_mode() >= modes {
                return Err(CircuitError::Configuration(format!(
                    "element {i} addresses mode {} of a {modes}-mode circuit",
                    el.highest_mode()
                )));
            }
            let el_stage = match el.binding() {
                Binding::Fixed(v) => {
                    if !v.is_finite() {
                        return Err(CircuitError::Configuration(format!("element {i} has non-finite angle")));
                    }
                    continue;
                }
                Binding::Trainable { block, slot } => {
                    let b = block.index();
                    let Some(flag) = seen[b].get_mut(slot) else {
                        return Err(CircuitError::Configuration(format!(
                            "element {i}: slot {slot} outside block of size {}",
                            trainable_counts[b]
                        )));
                    };
                    if *flag {
                        return Err(CircuitError::Configuration(format!(
                            "element {i}: slot {slot} of block {:?} bound twice",
                            block
                        )));
                    }
                    *flag = true;
                    2 * b
                }
                Binding::Data { feature } => {
                    if feature >= feature_dim {
                        return Err(CircuitError::Configuration(format!(
                            "element {i}: feature {feature} >= feature dimension {feature_dim}"
                        )));
                    }
                    1
                }
            };
            if el_stage < stage {
                return Err(CircuitError::Configuration(format!(
                    "element {i} breaks the first-block / data / second-block ordering"
                )));
            }
            stage = el_stage;
        }
        for (b, flags) in seen.iter().enumerate() {
            if let Some(slot) = flags.iter().position(|f| !f) {
                return Err(CircuitError::Configuration(format!(
                    "slot {slot} of block {} is never bound",
                    b + 1
                )));
            }
        }
        Ok(Self {
            modes,
            feature_dim,
            trainable_counts,
            elements,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn trainable_counts(&self) -> [usize; 2] {
        self.trainable_counts
    }

    pub fn elements(&self) -> &[CircuitElement] {
        &self.elements
    }

    /// Modes carrying the data phase shifter for each feature.
    pub fn data_modes(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.feature_dim];
        for el in &self.elements {
            if let CircuitElement::PhaseShifter { mode, phase: Binding::Data { feature } } = *el {
                out[feature] = Some(mode);
            }
        }
        out
    }

    pub fn build_unitary(
        &self,
        theta1: &[f64],
        theta2: &[f64],
        features: &[f64],
    ) -> Result<UnitaryMatrix, CircuitError> {
        if theta1.len() != self.trainable_counts[0] || theta2.len() != self.trainable_counts[1] {
            return Err(CircuitError::Configuration(format!(
                "expected {:?} trainable phases, got [{}, {}]",
                self.trainable_counts,
                theta1.len(),
                theta2.len()
            )));
        }
        if features.len() != self.feature_dim {
            return Err(CircuitError::Configuration(format!(
                "expected {} features, got {}",
                self.feature_dim,
                features.len()
            )));
        }
        let params = Parameters::new(theta1, theta2, features);
        let mut u = DMatrix::<Complex64>::identity(self.modes, self.modes);
        for el in &self.elements {
            apply_left(&mut u, el, params.resolve(el.binding())?);
        }
        Ok(UnitaryMatrix(u))
    }

    /// Circuit JSON as documented in the README.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit spec serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Left-multiplies `u` by the element matrix without forming it.
fn apply_left(u: &mut DMatrix<Complex64>, el: &CircuitElement, angle: f64) {
    match *el {
        CircuitElement::PhaseShifter { mode, .. } => {
            let phase = Complex64::from_polar(1.0, angle);
            u.row_mut(mode).iter_mut().for_each(|z| *z *= phase);
        }
        CircuitElement::BeamSplitter { mode, .. } => {
            let c = Complex64::new(angle.cos(), 0.0);
            let s = Complex64::new(0.0, angle.sin());
            for col in 0..u.ncols() {
                let a = u[(mode, col)];
                let b = u[(mode + 1, col)];
                u[(mode, col)] = c * a + s * b;
                u[(mode + 1, col)] = s * a + c * b;
            }
        }
    }
}

/// Full `modes × modes` matrix of a single element.
pub fn element_matrix(
    element: &CircuitElement,
    modes: usize,
    params: &Parameters<'_>,
) -> Result<UnitaryMatrix, CircuitError> {
    if element.highest_mode() >= modes {
        return Err(CircuitError::Binding(format!(
            "element addresses mode {} of a {modes}-mode circuit",
            element.highest_mode()
        )));
    }
    let angle = params.resolve(element.binding())?;
    let mut u = DMatrix::<Complex64>::identity(modes, modes);
    apply_left(&mut u, element, angle);
    Ok(UnitaryMatrix(u))
}

/// Mesh layout of the trainable blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshVariant {
    /// Rectangular mesh with every phase and splitting angle trainable.
    #[default]
    Universal,
    /// First 16 parameters of each block trainable; the rest fixed
    /// (phases at 0, beam splitters balanced).
    Hardware16,
}

const HARDWARE_TRAINABLE: usize = 16;

/// Default three-block ansatz on `modes` modes with `feature_dim` data phases
/// on the last `feature_dim` modes.
pub fn default_ansatz(modes: usize, feature_dim: usize) -> Result<CircuitSpec, CircuitError> {
    default_ansatz_with(modes, feature_dim, MeshVariant::Universal)
}

pub fn default_ansatz_with(
    modes: usize,
    feature_dim: usize,
    variant: MeshVariant,
) -> Result<CircuitSpec, CircuitError> {
    if modes < 2 {
        return Err(CircuitError::Configuration("ansatz needs at least two modes".into()));
    }
    if feature_dim > modes {
        return Err(CircuitError::Configuration(format!(
            "{feature_dim} features do not fit on {modes} modes"
        )));
    }
    let pairs = rectangular_pairs(modes);
    let cap = match variant {
        MeshVariant::Universal => usize::MAX,
        MeshVariant::Hardware16 => HARDWARE_TRAINABLE,
    };

    let mut elements = Vec::new();
    let first_count = push_mesh(&mut elements, pairs.iter().copied(), Block::First, cap);
    for feature in 0..feature_dim {
        elements.push(CircuitElement::PhaseShifter {
            mode: modes - feature_dim + feature,
            phase: Binding::Data { feature },
        });
    }
    let second_count = push_mesh(&mut elements, pairs.iter().rev().copied(), Block::Second, cap);
    CircuitSpec::new(modes, feature_dim, [first_count, second_count], elements)
}

/// Beam-splitter positions of a rectangular mesh: `modes` columns alternating
/// between even and odd pairs, `modes (modes - 1) / 2` splitters in total.
fn rectangular_pairs(modes: usize) -> Vec<usize> {
    (0..modes)
        .flat_map(|layer| (layer % 2..modes - 1).step_by(2))
        .collect()
}

fn push_mesh(
    out: &mut Vec<CircuitElement>,
    pairs: impl Iterator<Item = usize>,
    block: Block,
    cap: usize,
) -> usize {
    let mut slot = 0;
    let mut bind = |fallback: f64| {
        if slot < cap {
            slot += 1;
            Binding::Trainable { block, slot: slot - 1 }
        } else {
            Binding::Fixed(fallback)
        }
    };
    for mode in pairs {
        let phase = bind(0.0);
        out.push(CircuitElement::PhaseShifter { mode, phase });
        let angle = bind(FRAC_PI_4);
        out.push(CircuitElement::BeamSplitter { mode, angle });
    }
    slot
}

/// Square complex matrix produced by a circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(DMatrix<Complex64>);

impl UnitaryMatrix {
    pub fn identity(modes: usize) -> Self {
        Self(DMatrix::identity(modes, modes))
    }

    /// Wraps a matrix after checking `‖U†U − I‖_F < tol`.
    pub fn new(m: DMatrix<Complex64>, tol: f64) -> Result<Self, CircuitError> {
        if !m.is_square() {
            return Err(CircuitError::Configuration("unitary must be square".into()));
        }
        let u = Self(m);
        let err = u.unitarity_error();
        if err >= tol {
            return Err(CircuitError::Configuration(format!(
                "matrix is not unitary: ‖U†U − I‖_F = {err:e}"
            )));
        }
        Ok(u)
    }

    /// Haar-random unitary: QR of a complex Gaussian matrix with the phases
    /// of R's diagonal pushed into Q.
    pub fn haar_random<R: Rng + ?Sized>(modes: usize, rng: &mut R) -> Self {
        let z = DMatrix::<Complex64>::from_fn(modes, modes, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) / std::f64::consts::SQRT_2
        });
        let qr = z.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for j in 0..modes {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
            q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
        Self(q)
    }

    pub fn modes(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn unitarity_error(&self) -> f64 {
        let n = self.0.nrows();
        (self.0.adjoint() * &self.0 - DMatrix::<Complex64>::identity(n, n)).norm()
    }

    pub fn compose(&self, later: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix(&later.0 * &self.0)
    }
}
