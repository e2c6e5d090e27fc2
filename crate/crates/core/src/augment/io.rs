//! Dataset ingestion.
//!
//! Both formats store one example per row with the label in the last column:
//!
//! - CSV with a header row; feature columns are floats, the label an integer.
//! - The binary tensor layout from [`crate::diffcore`] (`AMXT` magic) whose
//!   last column holds the label as an integral `f64`.

use std::path::Path;

use super::dataset::{LabeledDataset, MulticlassDataset};
use crate::diffcore::{load_tensor, save_tensor, Tensor};
use crate::error::{Error, Result};

/// Raw table: features plus the integer label column.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTable {
    pub features: Tensor,
    pub labels: Vec<u32>,
    pub header: Vec<String>,
}

impl LabeledTable {
    pub fn into_binary(self, name: impl Into<String>) -> Result<LabeledDataset> {
        let labels = self
            .labels
            .iter()
            .map(|&y| {
                u8::try_from(y).ok().filter(|&v| v <= 1).ok_or_else(|| {
                    Error::Config(format!(
                        "label {y} is not 0/1; set a binarization threshold"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LabeledDataset::new(self.features, labels, name)
    }

    pub fn into_multiclass(self, name: impl Into<String>) -> MulticlassDataset {
        MulticlassDataset {
            features: self.features,
            classes: self.labels,
            name: name.into(),
        }
    }
}

fn parse_label(v: f64) -> Option<u32> {
    (v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64).then_some(v as u32)
}

pub fn read_csv(path: &Path) -> Result<LabeledTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.len() < 2 {
        return Err(Error::Format(format!(
            "{}: need at least one feature column and a label column",
            path.display()
        )));
    }
    let d = header.len() - 1;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            path: path.into(),
            line,
            message: e.to_string(),
        })?;
        if rec.len() != header.len() {
            return Err(Error::Parse {
                path: path.into(),
                line,
                message: format!("{} fields, header has {}", rec.len(), header.len()),
            });
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.into(),
                line,
                message: format!("column `{}`: `{field}` is not a number", header[c]),
            })?;
            if c < d {
                data.push(v);
            } else {
                labels.push(parse_label(v).ok_or_else(|| Error::Parse {
                    path: path.into(),
                    line,
                    message: format!("label `{field}` is not a non-negative integer"),
                })?);
            }
        }
    }
    Ok(LabeledTable {
        features: Tensor::from_vec(labels.len(), d, data)?,
        labels,
        header,
    })
}

pub fn write_csv(path: &Path, ds: &LabeledDataset) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp)
            .map_err(|e| Error::Format(format!("{}: {e}", tmp.display())))?;
        let mut header: Vec<String> = (0..ds.dim()).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        w.write_record(&header)
            .map_err(|e| Error::Format(e.to_string()))?;
        for r in 0..ds.len() {
            let mut row: Vec<String> = ds
                .features()
                .row(r)
                .iter()
                .map(|v| format!("{v:?}"))
                .collect();
            row.push(ds.labels()[r].to_string());
            w.write_record(&row)
                .map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_binary(path: &Path) -> Result<LabeledTable> {
    let t = load_tensor(path)?;
    if t.cols() < 2 {
        return Err(Error::Format(format!(
            "{}: need at least one feature column and a label column",
            path.display()
        )));
    }
    let d = t.cols() - 1;
    let mut data = Vec::with_capacity(t.rows() * d);
    let mut labels = Vec::with_capacity(t.rows());
    for r in 0..t.rows() {
        let row = t.row(r);
        data.extend_from_slice(&row[..d]);
        labels.push(parse_label(row[d]).ok_or_else(|| {
            Error::Format(format!(
                "{}: row {r} label {} is not integral",
                path.display(),
                row[d]
            ))
        })?);
    }
    Ok(LabeledTable {
        features: Tensor::from_vec(t.rows(), d, data)?,
        labels,
        header: (0..d)
            .map(|j| format!("x{j}"))
            .chain(["label".to_string()])
            .collect(),
    })
}

pub fn write_binary(path: &Path, ds: &LabeledDataset) -> Result<()> {
    let d = ds.dim();
    let mut t = Tensor::zeros(ds.len(), d + 1);
    for r in 0..ds.len() {
        let row = t.row_mut(r);
        row[..d].copy_from_slice(ds.features().row(r));
        row[d] = f64::from(ds.labels()[r]);
    }
    save_tensor(path, &t)
}

/// Reads CSV when the extension is `.csv`, the binary layout otherwise.
pub fn read_table(path: &Path) -> Result<LabeledTable> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        read_csv(path)
    } else {
        read_binary(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::{generate_synthetic, SyntheticSpec};

    #[test]
    fn csv_and_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate_synthetic(&SyntheticSpec {
            n: 40,
            d: 3,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let csv = dir.path().join("d.csv");
        write_csv(&csv, &ds).unwrap();
        let back = read_table(&csv)
            .unwrap()
            .into_binary(ds.name.clone())
            .unwrap();
        assert_eq!(back, ds);
        let bin = dir.path().join("d.amxt");
        write_binary(&bin, &ds).unwrap();
        let back = read_table(&bin)
            .unwrap()
            .into_binary(ds.name.clone())
            .unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "a,b,label\n1,2,0\n1,x,1\n").unwrap();
        match read_csv(&p) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("`b`"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::write(&p, "a,label\n1,0.5\n").unwrap();
        assert!(read_csv(&p).is_err());
        std::fs::write(&p, "a,label\n1,3\n2,0\n").unwrap();
        let t = read_csv(&p).unwrap();
        assert_eq!(t.labels, vec![3, 0]);
        assert!(t.into_binary("x").is_err());
    }
}
