//! Domain types shared by every stage of the pipeline.
//!
//! Class indices are 0-based inside the library. Everything that crosses an
//! I/O boundary (CSV, JSON reports, CLI) uses 1-based labels.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the number of classes; label sets are stored as `u32` masks.
pub const MAX_CLASSES: usize = 32;

/// Tolerance on the row sums of a [`ClassProbabilities`] matrix.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LabelSpaceRaw")]
pub struct LabelSpace {
    names: Vec<String>,
}

#[derive(Deserialize)]
struct LabelSpaceRaw {
    names: Vec<String>,
}

impl TryFrom<LabelSpaceRaw> for LabelSpace {
    type Error = Error;

    fn try_from(raw: LabelSpaceRaw) -> Result<Self> {
        LabelSpace::new(raw.names)
    }
}

impl LabelSpace {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.len() < 2 || names.len() > MAX_CLASSES {
            return Err(Error::Invalid(format!(
                "label space needs 2..={MAX_CLASSES} classes, got {}",
                names.len()
            )));
        }
        Ok(Self { names })
    }

    /// Classes named `"1"`, `"2"`, ... `"k"`.
    pub fn numbered(k: usize) -> Result<Self> {
        Self::new((1..=k).map(|c| c.to_string()).collect())
    }

    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Continuous,
    Binary,
    Count,
}

/// Dense row-major covariate matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureMatrixRaw")]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    kinds: Vec<ColumnKind>,
    names: Vec<String>,
}

#[derive(Deserialize)]
struct FeatureMatrixRaw {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    kinds: Vec<ColumnKind>,
    names: Vec<String>,
}

impl TryFrom<FeatureMatrixRaw> for FeatureMatrix {
    type Error = Error;

    fn try_from(raw: FeatureMatrixRaw) -> Result<Self> {
        let m = FeatureMatrix::new(raw.rows, raw.cols, raw.values, raw.kinds, raw.names)?;
        Ok(m)
    }
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, kinds: Vec<ColumnKind>, names: Vec<String>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: values.len(),
            });
        }
        if kinds.len() != cols || names.len() != cols {
            return Err(Error::DimensionMismatch {
                expected: cols,
                got: kinds.len().min(names.len()),
            });
        }
        let m = Self {
            rows,
            cols,
            values,
            kinds,
            names,
        };
        if let Some(v) = m.violations().into_iter().next() {
            return Err(Error::Invalid(v.to_string()));
        }
        Ok(m)
    }

    /// All-continuous matrix with columns named `x1..xp`.
    pub fn continuous(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        let names = (1..=cols).map(|j| format!("x{j}")).collect();
        Self::new(rows, cols, values, vec![ColumnKind::Continuous; cols], names)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kinds(&self) -> &[ColumnKind] {
        &self.kinds
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.get(i, col))
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            values,
            kinds: self.kinds.clone(),
            names: self.names.clone(),
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            let row = self.row(i);
            values.extend(cols.iter().map(|&j| row[j]));
        }
        Self {
            rows: self.rows,
            cols: cols.len(),
            values,
            kinds: cols.iter().map(|&j| self.kinds[j]).collect(),
            names: cols.iter().map(|&j| self.names[j].clone()).collect(),
        }
    }

    fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for i in 0..self.rows {
            for (j, kind) in self.kinds.iter().enumerate() {
                let v = self.get(i, j);
                let bad = if !v.is_finite() {
                    Some("non-finite value")
                } else {
                    match kind {
                        ColumnKind::Continuous => None,
                        ColumnKind::Binary if v != 0.0 && v != 1.0 => Some("binary column not in {0,1}"),
                        ColumnKind::Count if v < 0.0 || v.fract() != 0.0 => {
                            Some("count column not a non-negative integer")
                        }
                        _ => None,
                    }
                };
                if let Some(msg) = bad {
                    out.push(Violation::cell(i, j, format!("{msg}: {v}")));
                }
            }
        }
        out
    }
}

/// Right-censored follow-up: observed time in days and whether the event was seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SurvivalDataRaw")]
pub struct SurvivalData {
    time: Vec<f64>,
    event: Vec<bool>,
}

#[derive(Deserialize)]
struct SurvivalDataRaw {
    time: Vec<f64>,
    event: Vec<bool>,
}

impl TryFrom<SurvivalDataRaw> for SurvivalData {
    type Error = Error;

    fn try_from(raw: SurvivalDataRaw) -> Result<Self> {
        SurvivalData::new(raw.time, raw.event)
    }
}

impl SurvivalData {
    pub fn new(time: Vec<f64>, event: Vec<bool>) -> Result<Self> {
        if time.len() != event.len() {
            return Err(Error::DimensionMismatch {
                expected: time.len(),
                got: event.len(),
            });
        }
        if let Some((i, t)) = time.iter().enumerate().find(|(_, t)| !t.is_finite() || **t < 0.0) {
            return Err(Error::Invalid(format!("row {}: invalid survival time {t}", i + 1)));
        }
        Ok(Self { time, event })
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn event(&self) -> &[bool] {
        &self.event
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            time: idx.iter().map(|&i| self.time[i]).collect(),
            event: idx.iter().map(|&i| self.event[i]).collect(),
        }
    }
}

/// Covariates, 0-based class labels and optional survival outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub survival: Option<SurvivalData>,
}

impl LabeledDataset {
    pub fn new(features: FeatureMatrix, labels: Vec<usize>, survival: Option<SurvivalData>) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::DimensionMismatch {
                expected: features.rows(),
                got: labels.len(),
            });
        }
        if let Some(s) = &survival {
            if s.len() != labels.len() {
                return Err(Error::DimensionMismatch {
                    expected: labels.len(),
                    got: s.len(),
                });
            }
        }
        Ok(Self {
            features,
            labels,
            survival,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            survival: self.survival.as_ref().map(|s| s.select(idx)),
        }
    }

    pub fn class_counts(&self, k: usize) -> Vec<usize> {
        class_counts(&self.labels, k)
    }
}

pub(crate) fn class_counts(labels: &[usize], k: usize) -> Vec<usize> {
    let mut counts = vec![0; k];
    for &y in labels {
        if y < k {
            counts[y] += 1;
        }
    }
    counts
}

/// One broken invariant, located by 1-based row/column where applicable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub row: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl Violation {
    fn cell(row: usize, col: usize, message: String) -> Self {
        Self {
            row: Some(row + 1),
            column: Some(col + 1),
            message,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.row, self.column) {
            (Some(r), Some(c)) => write!(f, "row {r}, column {c}: {}", self.message),
            (Some(r), None) => write!(f, "row {r}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

/// Lists every invariant the dataset breaks with respect to `space`.
pub fn validate_dataset(ds: &LabeledDataset, space: &LabelSpace) -> Vec<Violation> {
    let mut out = ds.features.violations();
    if ds.labels.len() != ds.features.rows() {
        out.push(Violation {
            row: None,
            column: None,
            message: format!("{} labels for {} feature rows", ds.labels.len(), ds.features.rows()),
        });
    }
    for (i, &y) in ds.labels.iter().enumerate() {
        if y >= space.k() {
            out.push(Violation {
                row: Some(i + 1),
                column: None,
                message: format!("label {} outside 1..={}", y + 1, space.k()),
            });
        }
    }
    if let Some(s) = &ds.survival {
        if s.len() != ds.labels.len() {
            out.push(Violation {
                row: None,
                column: None,
                message: format!("{} survival rows for {} labels", s.len(), ds.labels.len()),
            });
        }
        for (i, t) in s.time.iter().enumerate() {
            if !t.is_finite() || *t < 0.0 {
                out.push(Violation {
                    row: Some(i + 1),
                    column: None,
                    message: format!("invalid survival time {t}"),
                });
            }
        }
    }
    out
}

/// Row-stochastic `n x k` matrix of estimated class probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ClassProbabilitiesRaw")]
pub struct ClassProbabilities {
    n: usize,
    k: usize,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct ClassProbabilitiesRaw {
    n: usize,
    k: usize,
    values: Vec<f64>,
}

impl TryFrom<ClassProbabilitiesRaw> for ClassProbabilities {
    type Error = Error;

    fn try_from(raw: ClassProbabilitiesRaw) -> Result<Self> {
        ClassProbabilities::new(raw.n, raw.k, raw.values)
    }
}

impl ClassProbabilities {
    pub fn new(n: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * k {
            return Err(Error::DimensionMismatch {
                expected: n * k,
                got: values.len(),
            });
        }
        for (i, row) in values.chunks(k.max(1)).enumerate() {
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::Invalid(format!("row {}: probability {p} outside [0,1]", i + 1)));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowSum { row: i + 1, sum });
            }
        }
        Ok(Self { n, k, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: r.len(),
            });
        }
        Self::new(rows.len(), k, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, y: usize) -> f64 {
        self.values[i * self.k + y]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.k)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.k);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Self {
            n: idx.len(),
            k: self.k,
            values,
        }
    }
}

/// Subset of the label space assigned to one observation. Empty is the null set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSet(u32);

impl LabelSet {
    pub const fn empty() -> Self {
        Self(0)
    }

    pub fn full(k: usize) -> Self {
        debug_assert!(k <= MAX_CLASSES);
        if k == MAX_CLASSES {
            Self(u32::MAX)
        } else {
            Self((1u32 << k) - 1)
        }
    }

    pub fn singleton(class: usize) -> Self {
        Self(1 << class)
    }

    pub fn from_classes(classes: impl IntoIterator<Item = usize>) -> Self {
        classes.into_iter().fold(Self::empty(), |s, c| s.with(c))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    #[must_use]
    pub fn with(self, class: usize) -> Self {
        Self(self.0 | (1 << class))
    }

    pub fn insert(&mut self, class: usize) {
        self.0 |= 1 << class;
    }

    pub fn contains(self, class: usize) -> bool {
        class < MAX_CLASSES && self.0 & (1 << class) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Member classes in ascending order (0-based).
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..MAX_CLASSES).filter(move |&c| self.contains(c))
    }

    /// Member classes as 1-based labels joined by `;` (empty string for the null set).
    pub fn to_external(self) -> String {
        self.iter().map(|c| (c + 1).to_string()).collect::<Vec<_>>().join(";")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> LabeledDataset {
        let x = FeatureMatrix::new(
            3,
            2,
            vec![1.0, 0.0, 2.5, 1.0, -1.0, 0.0],
            vec![ColumnKind::Continuous, ColumnKind::Binary],
            vec!["x1".into(), "x2".into()],
        )
        .unwrap();
        LabeledDataset::new(x, vec![0, 1, 2], None).unwrap()
    }

    #[test]
    fn well_formed_dataset_has_no_violations() {
        let space = LabelSpace::numbered(3).unwrap();
        assert!(validate_dataset(&tiny(), &space).is_empty());
    }

    #[test]
    fn out_of_range_label_is_reported_with_row() {
        let space = LabelSpace::numbered(3).unwrap();
        let mut ds = tiny();
        ds.labels[1] = 3; // external label 4
        let v = validate_dataset(&ds, &space);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].row, Some(2));
        assert!(v[0].message.contains("label 4"));
    }

    #[test]
    fn probability_row_sum_is_checked() {
        let err = ClassProbabilities::from_rows(&[vec![0.5, 0.2, 0.1]]).unwrap_err();
        assert!(matches!(err, Error::RowSum { row: 1, .. }));
    }

    #[test]
    fn feature_kinds_are_enforced() {
        let bad_binary = FeatureMatrix::new(1, 1, vec![0.5], vec![ColumnKind::Binary], vec!["b".into()]);
        assert!(bad_binary.is_err());
        let bad_count = FeatureMatrix::new(1, 1, vec![-1.0], vec![ColumnKind::Count], vec!["c".into()]);
        assert!(bad_count.is_err());
        let nan = FeatureMatrix::continuous(1, 1, vec![f64::NAN]);
        assert!(nan.is_err());
    }

    #[test]
    fn label_set_basics() {
        let s = LabelSet::from_classes([0, 2]);
        assert_eq!(s.len(), 2);
        assert!(s.contains(2) && !s.contains(1));
        assert_eq!(s.to_external(), "1;3");
        assert_eq!(LabelSet::full(3).len(), 3);
        assert!(LabelSet::empty().is_empty());
        assert_eq!(LabelSet::empty().to_external(), "");
    }

    #[test]
    fn label_space_bounds() {
        assert!(LabelSpace::numbered(1).is_err());
        assert!(LabelSpace::numbered(33).is_err());
        assert_eq!(LabelSpace::numbered(3).unwrap().k(), 3);
    }

    #[test]
    fn deserialization_revalidates() {
        let json = r#"{"n":1,"k":2,"values":[0.3,0.3]}"#;
        assert!(serde_json::from_str::<ClassProbabilities>(json).is_err());
    }
}
