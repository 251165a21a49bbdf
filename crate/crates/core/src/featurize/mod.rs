//! From polymer records to labelled feature vectors.
//!
//! SMILES strings are encoded character by character against a sorted
//! dictionary and zero-padded to [`SMILES_LENGTH`]. Gap values are binned into
//! NIR / VIS / MIR classes; only NIR (-1) and VIS (+1) carry a label.

mod dataset;
pub mod io;
mod preprocess;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dataset::{
    augment, balanced_subsample, standardize, stratified_split, DatasetSplit, FeatureVector, Label,
    Standardizer,
};
pub use preprocess::{preprocess_dataset, PolymerRecord, PreprocessReport};

/// Fixed length of encoded SMILES vectors.
pub const SMILES_LENGTH: usize = 139;

/// Gap range covered by the class table, in eV.
pub const GAP_RANGE: (f64, f64) = (0.025, 4.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeaturizeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown token {token:?} at position {position}")]
    UnknownToken { token: char, position: usize },
    #[error("SMILES of {len} characters exceeds the {max}-character limit")]
    Overlong { len: usize, max: usize },
    #[error("gap {0} eV outside the labelled range [0.025, 4.0]")]
    OutOfRange(f64),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("stratification error: {0}")]
    Stratification(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("dictionary error: {0}")]
    Dictionary(String),
}

/// Character → index map with indices in sorted character order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenDictionary {
    index: BTreeMap<char, usize>,
    inferred: Vec<char>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DictionaryJson {
    Annotated {
        tokens: BTreeMap<char, usize>,
        #[serde(default)]
        inferred: Vec<char>,
    },
    Flat(BTreeMap<char, usize>),
}

const REFERENCE_DICTIONARY: &str = include_str!("../../fixtures/reference_dictionary.json");

impl TokenDictionary {
    /// Sorted unique characters of the corpus.
    pub fn build<S: AsRef<str>>(corpus: &[S]) -> Result<Self, FeaturizeError> {
        if corpus.is_empty() {
            return Err(FeaturizeError::InvalidArgument("empty corpus".into()));
        }
        let mut chars: Vec<char> = corpus.iter().flat_map(|s| s.as_ref().chars()).collect();
        chars.sort_unstable();
        chars.dedup();
        Ok(Self {
            index: chars.into_iter().enumerate().map(|(i, c)| (c, i)).collect(),
            inferred: Vec::new(),
        })
    }

    /// The 34-character dictionary of the published polymer corpus. Entries
    /// 1-4 are unreadable in the published listing and were filled in from
    /// the sorted order; [`TokenDictionary::inferred`] lists them.
    pub fn reference() -> Self {
        Self::from_json(REFERENCE_DICTIONARY).expect("bundled dictionary is valid")
    }

    /// Accepts a flat `{char: index}` map or `{"tokens": {...}, "inferred": [...]}`.
    pub fn from_json(s: &str) -> Result<Self, FeaturizeError> {
        let parsed: DictionaryJson =
            serde_json::from_str(s).map_err(|e| FeaturizeError::Dictionary(e.to_string()))?;
        let (index, inferred) = match parsed {
            DictionaryJson::Annotated { tokens, inferred } => (tokens, inferred),
            DictionaryJson::Flat(tokens) => (tokens, Vec::new()),
        };
        let dict = Self { index, inferred };
        dict.validate()?;
        Ok(dict)
    }

    pub fn to_json(&self) -> String {
        let doc = DictionaryJson::Annotated {
            tokens: self.index.clone(),
            inferred: self.inferred.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("dictionary serializes")
    }

    fn validate(&self) -> Result<(), FeaturizeError> {
        // BTreeMap iterates in character order; indices must follow it.
        for (expected, (c, &i)) in self.index.iter().enumerate() {
            if i != expected {
                return Err(FeaturizeError::Dictionary(format!(
                    "{c:?} has index {i}, expected {expected} for sorted contiguous indices"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn get(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn inferred(&self) -> &[char] {
        &self.inferred
    }

    pub fn iter(&self) -> impl Iterator<Item = (char, usize)> + '_ {
        self.index.iter().map(|(&c, &i)| (c, i))
    }
}

/// Integer token vector, zero-padded. Index 0 doubles as padding.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodedSmiles(Vec<u16>);

impl EncodedSmiles {
    pub fn tokens(&self) -> &[u16] {
        &self.0
    }
}

pub fn encode_smiles(smiles: &str, dict: &TokenDictionary, length: usize) -> Result<EncodedSmiles, FeaturizeError> {
    let len = smiles.chars().count();
    if len > length {
        return Err(FeaturizeError::Overlong { len, max: length });
    }
    let mut tokens = vec![0u16; length];
    for (position, (slot, token)) in tokens.iter_mut().zip(smiles.chars()).enumerate() {
        *slot = dict
            .get(token)
            .ok_or(FeaturizeError::UnknownToken { token, position })? as u16;
    }
    Ok(EncodedSmiles(tokens))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GapClass {
    Nir,
    Vis,
    Mir,
}

impl GapClass {
    /// NIR → -1, VIS → +1, MIR → none.
    pub fn label(self) -> Option<Label> {
        match self {
            GapClass::Nir => Some(Label::Minus),
            GapClass::Vis => Some(Label::Plus),
            GapClass::Mir => None,
        }
    }
}

impl fmt::Display for GapClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GapClass::Nir => "NIR",
            GapClass::Vis => "VIS",
            GapClass::Mir => "MIR",
        })
    }
}

/// MIR `[0.025, 0.4]`, NIR `(0.4, 1.6]`, VIS `(1.6, 4.0]`.
pub fn label_gap(gap_ev: f64) -> Result<GapClass, FeaturizeError> {
    if !(GAP_RANGE.0..=GAP_RANGE.1).contains(&gap_ev) {
        return Err(FeaturizeError::OutOfRange(gap_ev));
    }
    Ok(if gap_ev <= 0.4 {
        GapClass::Mir
    } else if gap_ev <= 1.6 {
        GapClass::Nir
    } else {
        GapClass::Vis
    })
}
