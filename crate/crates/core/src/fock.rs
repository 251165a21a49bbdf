//! Bosonic Fock states over a fixed number of optical modes.
//!
//! A [`FockBasis`] holds every occupation vector with a given photon number,
//! in lexicographically descending order, so that `(n, 0, ..., 0)` is always
//! state 0. Observable weights are addressed through this order.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FockError {
    #[error("invalid dimension: a Fock basis needs at least one mode")]
    InvalidDimension,
    #[error("state {state} is not in the basis of {photons} photons over {modes} modes")]
    NotInBasis {
        state: FockState,
        photons: usize,
        modes: usize,
    },
}

/// Photon counts per mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FockState(Vec<usize>);

impl FockState {
    pub fn new(occupations: Vec<usize>) -> Self {
        Self(occupations)
    }

    /// Vacuum over `modes` modes.
    pub fn vacuum(modes: usize) -> Self {
        Self(vec![0; modes])
    }

    /// One photon in each listed mode.
    pub fn from_occupied_modes(modes: usize, occupied: &[usize]) -> Self {
        let mut occ = vec![0; modes];
        for &j in occupied {
            occ[j] += 1;
        }
        Self(occ)
    }

    pub fn occupations(&self) -> &[usize] {
        &self.0
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn photons(&self) -> usize {
        self.0.iter().sum()
    }

    /// Product of the factorials of the occupations.
    pub fn occupancy_factor(&self) -> u64 {
        self.0
            .iter()
            .map(|&n| (1..=n as u64).product::<u64>())
            .product()
    }

    /// Detector pattern seen by threshold (click / no-click) detectors.
    pub fn to_click_pattern(&self) -> ClickPattern {
        ClickPattern(self.0.iter().map(|&n| n > 0).collect())
    }

    /// Mode index of every photon, in mode order; `(2,0,1)` gives `[0,0,2]`.
    pub fn photon_modes(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(j, &n)| std::iter::repeat_n(j, n))
            .collect()
    }

    /// True when no mode holds more than one photon.
    pub fn is_single_occupancy(&self) -> bool {
        self.0.iter().all(|&n| n <= 1)
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ">")
    }
}

impl From<Vec<usize>> for FockState {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

/// Which modes registered at least one photon.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClickPattern(Vec<bool>);

impl ClickPattern {
    pub fn clicks(&self) -> &[bool] {
        &self.0
    }

    pub fn as_bits(&self) -> Vec<u8> {
        self.0.iter().map(|&c| c as u8).collect()
    }
}

/// All Fock states of `photons` photons in `modes` modes, canonically ordered.
#[derive(Debug, Clone)]
pub struct FockBasis {
    photons: usize,
    modes: usize,
    states: Vec<FockState>,
    index: HashMap<FockState, usize>,
}

impl FockBasis {
    pub fn enumerate(photons: usize, modes: usize) -> Result<Self, FockError> {
        if modes == 0 {
            return Err(FockError::InvalidDimension);
        }
        let mut states = Vec::with_capacity(basis_size(photons, modes));
        let mut current = vec![0; modes];
        fill_descending(&mut current, 0, photons, &mut states);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Self {
            photons,
            modes,
            states,
            index,
        })
    }

    pub fn photons(&self) -> usize {
        self.photons
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: &FockState) -> Result<usize, FockError> {
        self.index
            .get(state)
            .copied()
            .ok_or_else(|| FockError::NotInBasis {
                state: state.clone(),
                photons: self.photons,
                modes: self.modes,
            })
    }
}

// Highest occupation of the current mode first, which yields descending
// lexicographic order.
fn fill_descending(current: &mut [usize], mode: usize, remaining: usize, out: &mut Vec<FockState>) {
    let last = current.len() - 1;
    if mode == last {
        current[mode] = remaining;
        out.push(FockState(current.to_vec()));
        return;
    }
    for n in (0..=remaining).rev() {
        current[mode] = n;
        fill_descending(current, mode + 1, remaining - n, out);
    }
    current[mode] = 0;
}

/// C(n + m - 1, n).
pub fn basis_size(photons: usize, modes: usize) -> usize {
    if modes == 0 {
        return 0;
    }
    let (n, k) = (photons + modes - 1, photons.min(modes - 1));
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
