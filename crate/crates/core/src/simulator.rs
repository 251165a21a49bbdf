//! Strong simulation of few-photon linear-optical circuits.
//!
//! Amplitudes come from matrix permanents (Ryser's formula, Gray-code
//! order). Partial distinguishability is modelled per photon: with
//! probability `p` a photon is in the common internal mode and interferes,
//! otherwise it travels through the interferometer as a classical particle.
//! The output of a mixture component is the convolution of the interfering
//! and classical sub-distributions.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{ClickPattern, FockBasis, FockError, FockState};
use crate::interferometer::UnitaryMatrix;

/// Probabilities below this are treated as exact zeros.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("invalid transition: {0}")]
    InvalidTransition(String),
    #[error("unsupported input: {0}")]
    UnsupportedInput(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Source imperfections. `source_loss` is the per-photon loss probability,
/// `indistinguishability` the per-photon probability of interfering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNoise")]
pub struct NoiseModel {
    source_loss: f64,
    indistinguishability: f64,
}

#[derive(Deserialize)]
struct RawNoise {
    #[serde(default)]
    source_loss: f64,
    #[serde(default = "one")]
    indistinguishability: f64,
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RawNoise> for NoiseModel {
    type Error = SimulationError;
    fn try_from(r: RawNoise) -> Result<Self, Self::Error> {
        NoiseModel::new(r.source_loss, r.indistinguishability)
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl NoiseModel {
    pub fn new(source_loss: f64, indistinguishability: f64) -> Result<Self, SimulationError> {
        for (name, v) in [("source_loss", source_loss), ("indistinguishability", indistinguishability)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimulationError::InvalidArgument(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(Self {
            source_loss,
            indistinguishability,
        })
    }

    pub fn ideal() -> Self {
        Self {
            source_loss: 0.0,
            indistinguishability: 1.0,
        }
    }

    pub fn source_loss(&self) -> f64 {
        self.source_loss
    }

    pub fn indistinguishability(&self) -> f64 {
        self.indistinguishability
    }
}

/// How a requested shot count relates to detected n-photon events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotConvention {
    /// Shots are already post-selected n-photon coincidences.
    #[default]
    PostSelected,
    /// Shots are source pulses; only `(1 - loss)^n` of them survive.
    PreLoss,
}

/// Number of n-photon events actually observed out of `shots`. Never below 1.
pub fn effective_shots(shots: u64, noise: &NoiseModel, photons: usize, convention: ShotConvention) -> u64 {
    match convention {
        ShotConvention::PostSelected => shots,
        ShotConvention::PreLoss => {
            let survive = (1.0 - noise.source_loss).powi(photons as i32);
            ((shots as f64 * survive).round() as u64).max(1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    /// Photon-number resolving.
    #[default]
    Pnr,
    /// Click / no-click per mode.
    Threshold,
}

/// Probability vector over a Fock basis.
#[derive(Debug, Clone)]
pub struct OutputDistribution {
    basis: Arc<FockBasis>,
    probabilities: Vec<f64>,
    raw_total: f64,
}

impl OutputDistribution {
    /// Clamps values below the floor to zero and renormalizes.
    pub fn from_raw(basis: Arc<FockBasis>, mut probabilities: Vec<f64>) -> Result<Self, SimulationError> {
        if probabilities.len() != basis.len() {
            return Err(SimulationError::Dimension(format!(
                "{} probabilities for a basis of {}",
                probabilities.len(),
                basis.len()
            )));
        }
        for p in probabilities.iter_mut() {
            if *p < PROBABILITY_FLOOR {
                *p = 0.0;
            }
        }
        let total: f64 = probabilities.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(SimulationError::InvalidArgument(format!("distribution total {total}")));
        }
        probabilities.iter_mut().for_each(|p| *p /= total);
        Ok(Self {
            basis,
            probabilities,
            raw_total: total,
        })
    }

    /// Sum of the clamped probabilities before renormalization. Deviations
    /// from 1 measure the numerical error of the simulation.
    pub fn raw_total(&self) -> f64 {
        self.raw_total
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, state: &FockState) -> Result<f64, SimulationError> {
        Ok(self.probabilities[self.basis.index_of(state)?])
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<_> = self
            .basis
            .states()
            .iter()
            .zip(&self.probabilities)
            .map(|(s, p)| serde_json::json!({ "state": s, "probability": p }))
            .collect();
        serde_json::json!({
            "photons": self.basis.photons(),
            "modes": self.basis.modes(),
            "outcomes": entries,
        })
    }
}

/// Measurement outcomes: Fock states (PNR) or click patterns (threshold).
/// Click patterns are listed in descending order.
#[derive(Debug, Clone)]
pub struct OutcomeSpace {
    basis: Arc<FockBasis>,
    detector: Detector,
    patterns: Vec<ClickPattern>,
    basis_to_outcome: Vec<usize>,
}

impl OutcomeSpace {
    pub fn new(basis: Arc<FockBasis>, detector: Detector) -> Self {
        match detector {
            Detector::Pnr => {
                let basis_to_outcome = (0..basis.len()).collect();
                Self {
                    basis,
                    detector,
                    patterns: Vec::new(),
                    basis_to_outcome,
                }
            }
            Detector::Threshold => {
                let mut patterns: Vec<ClickPattern> =
                    basis.states().iter().map(FockState::to_click_pattern).collect();
                patterns.sort_by(|a, b| b.cmp(a));
                patterns.dedup();
                let lookup: HashMap<&ClickPattern, usize> =
                    patterns.iter().enumerate().map(|(i, p)| (p, i)).collect();
                let basis_to_outcome = basis
                    .states()
                    .iter()
                    .map(|s| lookup[&s.to_click_pattern()])
                    .collect();
                Self {
                    basis,
                    detector,
                    patterns,
                    basis_to_outcome,
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        match self.detector {
            Detector::Pnr => self.basis.len(),
            Detector::Threshold => self.patterns.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn detector(&self) -> Detector {
        self.detector
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn patterns(&self) -> &[ClickPattern] {
        &self.patterns
    }

    /// Outcome probabilities from a Fock-basis distribution.
    pub fn collapse(&self, dist: &OutputDistribution) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, p) in dist.probabilities().iter().enumerate() {
            out[self.basis_to_outcome[i]] += p;
        }
        out
    }

    /// Outcome frequencies from Fock-basis counts.
    pub fn frequencies(&self, counts: &[u64]) -> Vec<f64> {
        let total: u64 = counts.iter().sum();
        let mut out = vec![0.0; self.len()];
        for (i, &c) in counts.iter().enumerate() {
            out[self.basis_to_outcome[i]] += c as f64;
        }
        if total > 0 {
            out.iter_mut().for_each(|f| *f /= total as f64);
        }
        out
    }
}

/// Matrix permanent by Ryser's formula with Gray-code subset order,
/// O(2^d · d).
pub fn permanent(a: &DMatrix<Complex64>) -> Result<Complex64, SimulationError> {
    if !a.is_square() {
        return Err(SimulationError::Dimension(format!(
            "permanent of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut in_subset = vec![false; n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut subset_size = 0usize;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        if in_subset[j] {
            in_subset[j] = false;
            subset_size -= 1;
            row_sums.iter_mut().enumerate().for_each(|(i, s)| *s -= a[(i, j)]);
        } else {
            in_subset[j] = true;
            subset_size += 1;
            row_sums.iter_mut().enumerate().for_each(|(i, s)| *s += a[(i, j)]);
        }
        let prod: Complex64 = row_sums.iter().product();
        if subset_size % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(if n % 2 == 0 { total } else { -total })
}

/// `<output| U |input>` for Fock states.
pub fn transition_amplitude(
    u: &UnitaryMatrix,
    input: &FockState,
    output: &FockState,
) -> Result<Complex64, SimulationError> {
    let m = u.modes();
    if input.modes() != m || output.modes() != m {
        return Err(SimulationError::InvalidTransition(format!(
            "states over {} and {} modes for a {m}-mode unitary",
            input.modes(),
            output.modes()
        )));
    }
    if input.photons() != output.photons() {
        return Err(SimulationError::InvalidTransition(format!(
            "photon number changes from {} to {}",
            input.photons(),
            output.photons()
        )));
    }
    let cols = input.photon_modes();
    let rows = output.photon_modes();
    let sub = DMatrix::from_fn(rows.len(), cols.len(), |i, j| u.get(rows[i], cols[j]));
    let norm = ((input.occupancy_factor() * output.occupancy_factor()) as f64).sqrt();
    Ok(permanent(&sub)? / norm)
}

fn check_basis(u: &UnitaryMatrix, input: &FockState, basis: &FockBasis) -> Result<(), SimulationError> {
    if input.modes() != u.modes() || basis.modes() != u.modes() {
        return Err(SimulationError::Dimension(format!(
            "input over {} modes, basis over {}, unitary over {}",
            input.modes(),
            basis.modes(),
            u.modes()
        )));
    }
    if basis.photons() != input.photons() {
        return Err(SimulationError::InvalidTransition(format!(
            "basis holds {} photons, input {}",
            basis.photons(),
            input.photons()
        )));
    }
    Ok(())
}

fn ideal_raw(u: &UnitaryMatrix, input: &FockState, basis: &FockBasis) -> Result<Vec<f64>, SimulationError> {
    basis
        .states()
        .iter()
        .map(|out| transition_amplitude(u, input, out).map(|a| a.norm_sqr()))
        .collect()
}

fn classical_raw(u: &UnitaryMatrix, input: &FockState, basis: &FockBasis) -> Result<Vec<f64>, SimulationError> {
    let m = u.modes();
    let sources = input.photon_modes();
    let mut probs = vec![0.0; basis.len()];
    let mut landing = vec![0usize; sources.len()];
    // Odometer over every assignment of photons to output modes.
    loop {
        let weight: f64 = sources
            .iter()
            .zip(&landing)
            .map(|(&src, &dst)| u.get(dst, src).norm_sqr())
            .product();
        let mut occ = vec![0; m];
        landing.iter().for_each(|&d| occ[d] += 1);
        probs[basis.index_of(&FockState::new(occ))?] += weight;

        let mut pos = 0;
        while pos < landing.len() {
            landing[pos] += 1;
            if landing[pos] < m {
                break;
            }
            landing[pos] = 0;
            pos += 1;
        }
        if pos == landing.len() {
            break;
        }
    }
    Ok(probs)
}

pub fn ideal_distribution(
    u: &UnitaryMatrix,
    input: &FockState,
    basis: &Arc<FockBasis>,
) -> Result<OutputDistribution, SimulationError> {
    check_basis(u, input, basis)?;
    OutputDistribution::from_raw(basis.clone(), ideal_raw(u, input, basis)?)
}

/// Fully distinguishable photons: each one lands in mode `i` from mode `j`
/// with probability `|U_ij|^2`, independently of the others.
pub fn classical_distribution(
    u: &UnitaryMatrix,
    input: &FockState,
    basis: &Arc<FockBasis>,
) -> Result<OutputDistribution, SimulationError> {
    check_basis(u, input, basis)?;
    OutputDistribution::from_raw(basis.clone(), classical_raw(u, input, basis)?)
}

/// Output distribution with partially distinguishable photons. Source loss
/// does not enter: post-selecting on all photons detected undoes uniform loss.
pub fn noisy_distribution(
    u: &UnitaryMatrix,
    input: &FockState,
    basis: &Arc<FockBasis>,
    noise: &NoiseModel,
) -> Result<OutputDistribution, SimulationError> {
    check_basis(u, input, basis)?;
    if !input.is_single_occupancy() {
        return Err(SimulationError::UnsupportedInput(format!(
            "partial distinguishability needs at most one photon per input mode, got {input}"
        )));
    }
    let p = noise.indistinguishability();
    if p == 1.0 {
        return ideal_distribution(u, input, basis);
    }
    if p == 0.0 {
        return classical_distribution(u, input, basis);
    }

    let m = u.modes();
    let photons = input.photon_modes();
    let n = photons.len();
    let sub_bases: Vec<FockBasis> = (0..=n)
        .map(|k| FockBasis::enumerate(k, m))
        .collect::<Result<_, _>>()?;

    let mut probs = vec![0.0; basis.len()];
    for mask in 0u32..(1 << n) {
        let quantum: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| photons[i]).collect();
        let classical: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| photons[i]).collect();
        let k = quantum.len();
        let weight = p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
        if weight == 0.0 {
            continue;
        }
        let q_in = FockState::from_occupied_modes(m, &quantum);
        let c_in = FockState::from_occupied_modes(m, &classical);
        let q_basis = &sub_bases[k];
        let c_basis = &sub_bases[n - k];
        let q_probs = ideal_raw(u, &q_in, q_basis)?;
        let c_probs = classical_raw(u, &c_in, c_basis)?;
        for (qs, qp) in q_basis.states().iter().zip(&q_probs) {
            if *qp == 0.0 {
                continue;
            }
            for (cs, cp) in c_basis.states().iter().zip(&c_probs) {
                let occ: Vec<usize> = qs
                    .occupations()
                    .iter()
                    .zip(cs.occupations())
                    .map(|(a, b)| a + b)
                    .collect();
                probs[basis.index_of(&FockState::new(occ))?] += weight * qp * cp;
            }
        }
    }
    OutputDistribution::from_raw(basis.clone(), probs)
}

/// Seeded multinomial draw, one count per basis state.
pub fn sample_counts(dist: &OutputDistribution, shots: u64, seed: u64) -> Result<Vec<u64>, SimulationError> {
    if shots == 0 {
        return Err(SimulationError::InvalidArgument("shots must be positive".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let probs = dist.probabilities();
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass_left = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() || mass_left <= p {
            counts[i] = remaining;
            break;
        }
        let q = (p / mass_left).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, q)
            .map_err(|e| SimulationError::InvalidArgument(e.to_string()))?
            .sample(&mut rng);
        counts[i] = draw;
        remaining -= draw;
        mass_left -= p;
    }
    Ok(counts)
}
