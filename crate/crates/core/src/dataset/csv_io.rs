use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{CustomerRecord, Dataset, FeatureSchema, RecordId};
use crate::error::{Error, Result};

const ID_COLUMN: &str = "id";

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na")
}

/// Reads a CSV with a header row into a [`Dataset`].
///
/// Feature columns are located by name, so column order in the file is free.
/// The `id` column is optional (row index is used when absent); the label
/// column is parsed when the schema names one and the header contains it.
/// Empty cells and `NA` mark missing values.
pub fn load_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    read_csv(file, schema, path)
}

pub(crate) fn read_csv<R: Read>(reader: R, schema: &FeatureSchema, path: &Path) -> Result<Dataset> {
    let csv_err = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let position = |name: &str| header.iter().position(|h| h == name);

    let mut feature_cols = Vec::with_capacity(schema.len());
    for name in schema.names() {
        let col = position(name).ok_or_else(|| Error::HeaderMismatch {
            path: path.to_owned(),
            column: name.clone(),
        })?;
        feature_cols.push(col);
    }
    let id_col = position(ID_COLUMN);
    let label_col = schema.label_name().and_then(position);

    let mut records = Vec::new();
    for (row, result) in rdr.records().enumerate() {
        let rec = result.map_err(csv_err)?;
        let line = rec.position().map_or(row as u64 + 2, |p| p.line());
        let mut features = Vec::with_capacity(feature_cols.len());
        for (name, &c) in schema.names().iter().zip(&feature_cols) {
            let cell = rec.get(c).unwrap_or("");
            if is_missing(cell) {
                features.push(f64::NAN);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                path: path.to_owned(),
                line,
                column: name.clone(),
                value: cell.to_owned(),
            })?;
            features.push(v);
        }
        let label = match label_col.map(|c| rec.get(c).unwrap_or("")) {
            None => None,
            Some(cell) if is_missing(cell) => None,
            Some(cell) => match cell.parse::<f64>() {
                Ok(v) if v == 0.0 => Some(0),
                Ok(v) if v == 1.0 => Some(1),
                _ => {
                    return Err(Error::InvalidLabel {
                        line,
                        value: cell.to_owned(),
                    })
                }
            },
        };
        let id = match id_col {
            Some(c) => RecordId(rec.get(c).unwrap_or("").to_owned()),
            None => RecordId::from(row),
        };
        records.push(CustomerRecord { id, features, label });
    }
    Dataset::new(schema.clone(), records)
}

/// Writes `id,<features...>[,label]`. Floats use the shortest representation
/// that parses back to the same bits, so a write/read cycle is lossless.
pub fn write_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = std::io::BufWriter::new(file);
    write_to(&mut out, data).map_err(io_err)?;
    out.flush().map_err(io_err)
}

fn write_to<W: Write>(out: &mut W, data: &Dataset) -> std::io::Result<()> {
    let label = data.schema().label_name();
    let mut header = vec![ID_COLUMN.to_owned()];
    header.extend(data.schema().names().iter().cloned());
    if let Some(l) = label {
        header.push(l.to_owned());
    }
    writeln!(out, "{}", header.join(","))?;
    let mut line = String::new();
    for r in data.records() {
        line.clear();
        line.push_str(r.id.as_str());
        for v in &r.features {
            line.push(',');
            if !v.is_nan() {
                line.push_str(&v.to_string());
            }
        }
        if label.is_some() {
            line.push(',');
            if let Some(l) = r.label {
                line.push_str(&l.to_string());
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn schema() -> FeatureSchema {
        FeatureSchema::new(
            vec!["age".into(), "income".into()],
            Some("loan_default".into()),
        )
        .unwrap()
    }

    fn parse(text: &str) -> Result<Dataset> {
        read_csv(text.as_bytes(), &schema(), &PathBuf::from("mem.csv"))
    }

    #[test]
    fn parses_three_rows() {
        let d = parse("id,age,income,loan_default\n1,30,100,0\n2,40,200,1\n3,50,300,0\n").unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.records()[1].label, Some(1));
        assert_eq!(d.records()[2].features, vec![50.0, 300.0]);
        assert_eq!(d.records()[0].id.as_str(), "1");
    }

    #[test]
    fn empty_and_na_cells_are_missing() {
        let d = parse("id,age,income,loan_default\n1,30,\"\",0\n2,NA,5,1\n3,1,na,0\n").unwrap();
        assert!(d.records()[0].features[1].is_nan());
        assert!(d.records()[1].features[0].is_nan());
        assert!(d.records()[2].features[1].is_nan());
    }

    #[test]
    fn header_mismatch() {
        let err = parse("id,age,loan_default\n1,30,0\n").unwrap_err();
        assert!(matches!(err, Error::HeaderMismatch { ref column, .. } if column == "income"));
    }

    #[test]
    fn non_numeric_and_bad_label() {
        let err = parse("age,income,loan_default\n30,abc,0\n").unwrap_err();
        assert!(matches!(err, Error::NonNumeric { line: 2, .. }));
        let err = parse("age,income,loan_default\n30,1,2\n").unwrap_err();
        assert!(matches!(err, Error::InvalidLabel { .. }));
    }

    #[test]
    fn row_index_ids_when_id_absent() {
        let d = parse("income,age,loan_default\n1,2,0\n3,4,1\n").unwrap();
        assert_eq!(d.records()[1].id.as_str(), "1");
        // columns are matched by name
        assert_eq!(d.records()[0].features, vec![2.0, 1.0]);
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_csv("/definitely/not/here.csv", &schema()),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn write_then_load_is_bit_exact() {
        let d = parse("id,age,income,loan_default\na,0.1,1e-300,0\nb,-3.3333333333333335,,1\n").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_csv(&p, &d).unwrap();
        let back = load_csv(&p, &schema()).unwrap();
        for (a, b) in d.records().iter().zip(back.records()) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.label, b.label);
            for (x, y) in a.features.iter().zip(&b.features) {
                assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
            }
        }
    }
}
