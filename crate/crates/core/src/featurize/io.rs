//! CSV formats.
//!
//! * polymer input: header `id,smiles,gap_ev`
//! * encoded output: header `id,gap_ev,label,t1,...,t139`

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{encode_smiles, label_gap, FeaturizeError, PolymerRecord, TokenDictionary, SMILES_LENGTH};

#[derive(Debug, Error)]
pub enum DataIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
}

impl DataIoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DataIoError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub(crate) fn csv_error(e: csv::Error) -> DataIoError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    DataIoError::Parse {
        line,
        message: e.to_string(),
    }
}

const POLYMER_HEADER: [&str; 3] = ["id", "smiles", "gap_ev"];

pub fn read_polymer_csv<R: Read>(reader: R) -> Result<Vec<PolymerRecord>, DataIoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.iter().collect::<Vec<_>>() != POLYMER_HEADER {
        return Err(DataIoError::Header {
            expected: POLYMER_HEADER.join(","),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<PolymerRecord>() {
        let rec = row.map_err(csv_error)?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_polymer_csv_path(path: &Path) -> Result<Vec<PolymerRecord>, DataIoError> {
    let f = std::fs::File::open(path).map_err(|e| DataIoError::io(path, e))?;
    read_polymer_csv(f)
}

/// Writes labelled, encoded records. Every record must carry a NIR or VIS gap.
pub fn write_encoded_csv<W: Write>(
    writer: W,
    records: &[PolymerRecord],
    dict: &TokenDictionary,
) -> Result<(), DataIoError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string(), "gap_ev".into(), "label".into()];
    header.extend((1..=SMILES_LENGTH).map(|i| format!("t{i}")));
    wtr.write_record(&header).map_err(csv_error)?;
    for r in records {
        let label = label_gap(r.gap_ev)?.label().ok_or_else(|| {
            FeaturizeError::InvalidArgument(format!("record {} is MIR and has no label", r.id))
        })?;
        let encoded = encode_smiles(&r.smiles, dict, SMILES_LENGTH)?;
        let mut row = vec![r.id.clone(), r.gap_ev.to_string(), i8::from(label).to_string()];
        row.extend(encoded.tokens().iter().map(|t| t.to_string()));
        wtr.write_record(&row).map_err(csv_error)?;
    }
    wtr.flush().map_err(|e| DataIoError::Io {
        path: "<output>".into(),
        source: e,
    })?;
    Ok(())
}
