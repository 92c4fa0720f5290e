//! CSV formats.
//!
//! Dataset: header `x1..xp,label[,time,event]`, 1-based labels, `event` in {0,1}.
//! Covariates read back from CSV are typed as continuous.
//!
//! Probabilities: header `p1..pK`, one row per observation.
//!
//! Label sets: header `row,set,size`; `set` lists 1-based labels joined by `;`
//! and is empty for the null set.

use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{ClassProbabilities, FeatureMatrix, LabelSet, LabelSpace, LabeledDataset, SurvivalData};

pub fn write_dataset(path: &Path, ds: &LabeledDataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ds.features.names().to_vec();
    header.push("label".into());
    if ds.survival.is_some() {
        header.push("time".into());
        header.push("event".into());
    }
    w.write_record(&header)?;
    for i in 0..ds.len() {
        let mut rec: Vec<String> = ds.features.row(i).iter().map(|v| v.to_string()).collect();
        rec.push((ds.labels[i] + 1).to_string());
        if let Some(s) = &ds.survival {
            rec.push(s.time()[i].to_string());
            rec.push(u8::from(s.event()[i]).to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_dataset(path: &Path, space: &LabelSpace) -> Result<LabeledDataset> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let label_col = header
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| parse_err("missing `label` column".into()))?;
    let time_col = header.iter().position(|h| h == "time");
    let event_col = header.iter().position(|h| h == "event");
    if time_col.is_some() != event_col.is_some() {
        return Err(parse_err("`time` and `event` must appear together".into()));
    }
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&j| Some(j) != time_col && Some(j) != event_col && j != label_col)
        .collect();
    for (expect, &j) in feature_cols.iter().enumerate() {
        if header[j] != format!("x{}", expect + 1) {
            return Err(parse_err(format!(
                "expected column x{}, found `{}`",
                expect + 1,
                header[j]
            )));
        }
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut time = Vec::new();
    let mut event = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |j: usize| -> Result<f64> {
            rec.get(j)
                .ok_or_else(|| parse_err(format!("row {}: missing column {}", i + 1, j + 1)))?
                .parse::<f64>()
                .map_err(|e| parse_err(format!("row {}, column `{}`: {e}", i + 1, header[j])))
        };
        for &j in &feature_cols {
            values.push(num(j)?);
        }
        let label = num(label_col)?;
        if label.fract() != 0.0 || label < 1.0 || label > space.k() as f64 {
            return Err(Error::LabelOutOfRange {
                label: label as usize,
                k: space.k(),
            });
        }
        labels.push(label as usize - 1);
        if let (Some(tc), Some(ec)) = (time_col, event_col) {
            time.push(num(tc)?);
            let e = num(ec)?;
            if e != 0.0 && e != 1.0 {
                return Err(parse_err(format!("row {}: event must be 0 or 1, got {e}", i + 1)));
            }
            event.push(e == 1.0);
        }
    }
    let features = FeatureMatrix::continuous(labels.len(), feature_cols.len(), values)?;
    let survival = match time_col {
        Some(_) => Some(SurvivalData::new(time, event)?),
        None => None,
    };
    LabeledDataset::new(features, labels, survival)
}

pub fn write_probabilities(path: &Path, probs: &ClassProbabilities) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((1..=probs.k()).map(|c| format!("p{c}")))?;
    for row in probs.rows() {
        w.write_record(row.iter().map(|p| p.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_label_sets(path: &Path, sets: &[LabelSet]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["row", "set", "size"])?;
    for (i, s) in sets.iter().enumerate() {
        w.write_record([(i + 1).to_string(), s.to_external(), s.len().to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_label_sets(path: &Path, space: &LabelSpace) -> Result<Vec<LabelSet>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = rec.get(1).unwrap_or("");
        let mut set = LabelSet::empty();
        for tok in field.split(';').filter(|t| !t.is_empty()) {
            let label: usize = tok.parse().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: format!("row {}: {e}", i + 1),
            })?;
            if label == 0 || label > space.k() {
                return Err(Error::LabelOutOfRange { label, k: space.k() });
            }
            set.insert(label - 1);
        }
        out.push(set);
    }
    Ok(out)
}

/// Reads a single-column CSV of 1-based labels (header `label`).
pub fn read_labels(path: &Path, space: &LabelSpace) -> Result<Vec<usize>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let col = r
        .headers()?
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            message: "missing `label` column".into(),
        })?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let label: usize = rec.get(col).unwrap_or("").parse().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: format!("row {}: {e}", i + 1),
        })?;
        if label == 0 || label > space.k() {
            return Err(Error::LabelOutOfRange { label, k: space.k() });
        }
        out.push(label - 1);
    }
    Ok(out)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["label"])?;
    for l in labels {
        w.write_record([(l + 1).to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let x = FeatureMatrix::continuous(3, 2, vec![1.5, 0.0, -2.0, 1.0, 3.25, 0.0]).unwrap();
        let s = SurvivalData::new(vec![10.0, 365.0, 2.5], vec![true, false, true]).unwrap();
        let ds = LabeledDataset::new(x, vec![0, 2, 1], Some(s)).unwrap();
        write_dataset(&path, &ds).unwrap();
        let space = LabelSpace::numbered(3).unwrap();
        assert_eq!(read_dataset(&path, &space).unwrap(), ds);
    }

    #[test]
    fn label_sets_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let sets = vec![LabelSet::empty(), LabelSet::from_classes([0, 2]), LabelSet::full(3)];
        write_label_sets(&path, &sets).unwrap();
        let space = LabelSpace::numbered(3).unwrap();
        assert_eq!(read_label_sets(&path, &space).unwrap(), sets);
    }

    #[test]
    fn rejects_bad_label() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "x1,label\n0.5,4\n").unwrap();
        let space = LabelSpace::numbered(3).unwrap();
        assert!(matches!(
            read_dataset(&path, &space),
            Err(Error::LabelOutOfRange { label: 4, k: 3 })
        ));
    }
}
