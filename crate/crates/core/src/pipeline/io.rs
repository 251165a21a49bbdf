//! Features CSV: header `id,x1,...,xk,label`, labels `1` / `-1`.

use std::io::{Read, Write};
use std::path::Path;

use crate::featurize::io::DataIoError;
use crate::featurize::{FeatureVector, Label};

fn parse_error(line: u64, message: impl Into<String>) -> DataIoError {
    DataIoError::Parse {
        line,
        message: message.into(),
    }
}

fn expected_header(k: usize) -> String {
    let mut cols = vec!["id".to_string()];
    cols.extend((1..=k).map(|i| format!("x{i}")));
    cols.push("label".into());
    cols.join(",")
}

fn parse_label(field: &str, line: u64) -> Result<Label, DataIoError> {
    match field {
        "1" | "+1" | "1.0" | "+1.0" => Ok(Label::Plus),
        "-1" | "-1.0" => Ok(Label::Minus),
        other => Err(parse_error(line, format!("label `{other}` is not +1 or -1"))),
    }
}

/// Parses a features CSV. The feature count is taken from the header.
pub fn read_features_csv<R: Read>(reader: R) -> Result<Vec<FeatureVector>, DataIoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(crate::featurize::io::csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    let k = headers.len().saturating_sub(2);
    if headers.len() < 3 || headers.join(",") != expected_header(k) {
        return Err(DataIoError::Header {
            expected: "id,x1,...,xk,label".into(),
            found: headers.join(","),
        });
    }

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(crate::featurize::io::csv_error)?;
        let line = row.position().map_or(0, |p| p.line());
        let values = (1..=k)
            .map(|i| {
                let f = &row[i];
                let v: f64 = f
                    .parse()
                    .map_err(|_| parse_error(line, format!("x{i} = `{f}` is not a number")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(parse_error(line, format!("x{i} = `{f}` is not finite")))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let label = parse_label(&row[k + 1], line)?;
        out.push(FeatureVector::new(&row[0], values, label));
    }
    if out.is_empty() {
        log::warn!("features file has a header but no rows");
    }
    Ok(out)
}

pub fn ingest_features_csv(path: &Path) -> Result<Vec<FeatureVector>, DataIoError> {
    let f = std::fs::File::open(path).map_err(|e| DataIoError::io(path, e))?;
    let v = read_features_csv(f)?;
    log::info!("read {} feature vectors from {}", v.len(), path.display());
    Ok(v)
}

/// Writes vectors of a common dimension in the features CSV schema.
pub fn write_features_csv<W: Write>(writer: W, vectors: &[FeatureVector]) -> Result<(), DataIoError> {
    let k = vectors.first().map_or(0, |v| v.dim());
    if let Some(v) = vectors.iter().find(|v| v.dim() != k) {
        return Err(parse_error(0, format!("vector {} has {} features, expected {k}", v.id, v.dim())));
    }
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(expected_header(k).split(','))
        .map_err(crate::featurize::io::csv_error)?;
    for v in vectors {
        let mut row = vec![v.id.clone()];
        row.extend(v.values.iter().map(|x| x.to_string()));
        row.push(format!("{}", v.label.value()));
        wtr.write_record(&row).map_err(crate::featurize::io::csv_error)?;
    }
    wtr.flush().map_err(|e| DataIoError::Io {
        path: "<output>".into(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rows() {
        let v = read_features_csv("id,x1,x2,label\na,0.5,-0.2,1\nb,1e-3,2,-1\n".as_bytes()).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].values, vec![0.5, -0.2]);
        assert_eq!(v[1].label, Label::Minus);
    }

    #[test]
    fn bad_rows_name_the_line() {
        let err = read_features_csv("id,x1,label\na,0.1,1\nb,0.2,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, DataIoError::Parse { line: 3, .. }), "{err}");
        let err = read_features_csv("id,x1,label\na,NaN,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, DataIoError::Parse { line: 2, .. }), "{err}");
        let err = read_features_csv("id,x1,label\na,0.1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, DataIoError::Parse { line: 2, .. }), "{err}");
        assert!(matches!(
            read_features_csv("id,x2,x1,label\n".as_bytes()),
            Err(DataIoError::Header { .. })
        ));
        assert!(matches!(read_features_csv("id,label\n".as_bytes()), Err(DataIoError::Header { .. })));
    }

    #[test]
    fn header_only() {
        assert!(read_features_csv("id,x1,x2,x3,x4,label\n".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn round_trip() {
        let v = vec![
            FeatureVector::new("p", vec![0.1, -1.0 / 3.0], Label::Plus),
            FeatureVector::new("q", vec![1e-17, 4.0], Label::Minus),
        ];
        let mut buf = Vec::new();
        write_features_csv(&mut buf, &v).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("id,x1,x2,label\n"));
        assert_eq!(read_features_csv(buf.as_slice()).unwrap(), v);
    }
}
