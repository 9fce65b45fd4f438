//! Dataset ingestion, feature scaling, stratified folds and two-class views.
//!
//! A [`Dataset`] stores a dense row-major feature matrix and densely encoded
//! class labels. Labels are encoded `0..N` in order of first appearance in the
//! source file, so the encoding is stable across locales and platforms.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum LabelColumn {
    #[default]
    Last,
    First,
    Index(usize),
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim() {
            "last" => LabelColumn::Last,
            "first" => LabelColumn::First,
            other => match other.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(other.to_string()),
            },
        })
    }
}

impl From<String> for LabelColumn {
    fn from(s: String) -> Self {
        match s.parse() {
            Ok(c) => c,
            Err(never) => match never {},
        }
    }
}

impl From<LabelColumn> for String {
    fn from(c: LabelColumn) -> String {
        c.to_string()
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Last => f.write_str("last"),
            LabelColumn::First => f.write_str("first"),
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(n) => f.write_str(n),
        }
    }
}

/// Feature matrix plus densely encoded class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<usize>,
    class_names: Vec<String>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from rows, validating shape and label invariants.
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch(rows.len(), labels.len()));
        }
        if rows.is_empty() {
            return Err(Error::InvalidDataset("no rows".into()));
        }
        let n_features = rows[0].len();
        let mut features = Vec::with_capacity(rows.len() * n_features);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::RaggedRow {
                    row: i,
                    found: row.len(),
                    expected: n_features,
                });
            }
            if let Some(col) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonNumeric {
                    row: i,
                    col,
                    value: row[col].to_string(),
                });
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(features, n_features, labels, class_names)
    }

    fn from_flat(features: Vec<f64>, n_features: usize, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let n_classes = class_names.len();
        if n_classes < 2 {
            return Err(Error::TooFewClasses(n_classes));
        }
        let mut seen = vec![false; n_classes];
        for &l in &labels {
            if l >= n_classes {
                return Err(Error::InvalidDataset(format!(
                    "label {l} out of range for {n_classes} classes"
                )));
            }
            seen[l] = true;
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidDataset(format!("class {c} has no examples")));
        }
        Ok(Dataset {
            features,
            n_features,
            labels,
            class_names,
            feature_names: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.n_features.max(1))
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Number of examples per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Writes the dataset as CSV with the label in the last column.
    ///
    /// Floats are written in shortest round-trip form, so [`load_csv`] reads
    /// back identical values.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = match &self.feature_names {
            Some(names) => names.clone(),
            None => (0..self.n_features).map(|j| format!("x{j}")).collect(),
        };
        header.push("label".into());
        w.write_record(&header)?;
        for (i, row) in self.rows().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            rec.push(self.class_names[self.labels[i]].clone());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<writer>".into(),
            source: e,
        })?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e,
        })?;
        self.write_csv(f)
    }
}

/// Loads a comma-separated dataset.
///
/// The first row is treated as a header when any of its feature cells fails to
/// parse as a number. Label strings are encoded in first-appearance order.
pub fn load_csv(path: &Path, label_column: &LabelColumn) -> Result<Dataset> {
    let f = File::open(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    read_csv(f, label_column)
}

/// Same as [`load_csv`] for any reader.
pub fn read_csv<R: Read>(input: R, label_column: &LabelColumn) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::InvalidDataset("empty file".into()));
    }
    let width = records[0].len();
    if width < 2 {
        return Err(Error::InvalidDataset(
            "need at least one feature and one label column".into(),
        ));
    }

    let numeric_index = |c: &LabelColumn| match c {
        LabelColumn::Last => Some(width - 1),
        LabelColumn::First => Some(0),
        LabelColumn::Index(i) => Some(*i),
        LabelColumn::Name(_) => None,
    };
    let first = &records[0];
    let label_col = match numeric_index(label_column) {
        Some(i) if i < width => i,
        Some(_) => return Err(Error::UnknownLabelColumn(label_column.to_string())),
        None => {
            let LabelColumn::Name(name) = label_column else {
                unreachable!()
            };
            first
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::UnknownLabelColumn(name.clone()))?
        }
    };
    let has_header = matches!(label_column, LabelColumn::Name(_))
        || first
            .iter()
            .enumerate()
            .any(|(j, c)| j != label_col && c.parse::<f64>().is_err());

    let feature_names = has_header.then(|| {
        first
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != label_col)
            .map(|(_, c)| c.to_string())
            .collect::<Vec<_>>()
    });
    let body = if has_header { &records[1..] } else { &records[..] };
    if body.is_empty() {
        return Err(Error::InvalidDataset("no data rows".into()));
    }

    let n_features = width - 1;
    let mut features = Vec::with_capacity(body.len() * n_features);
    let mut labels = Vec::with_capacity(body.len());
    let mut class_names: Vec<String> = Vec::new();
    let header_offset = usize::from(has_header);
    for (i, rec) in body.iter().enumerate() {
        let row = i + header_offset;
        if rec.len() != width {
            return Err(Error::RaggedRow {
                row,
                found: rec.len(),
                expected: width,
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            if j == label_col {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row,
                col: j,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonNumeric {
                    row,
                    col: j,
                    value: cell.to_string(),
                });
            }
            features.push(v);
        }
        let name = &rec[label_col];
        let idx = match class_names.iter().position(|c| c == name) {
            Some(idx) => idx,
            None => {
                class_names.push(name.to_string());
                class_names.len() - 1
            }
        };
        labels.push(idx);
    }
    if class_names.len() < 2 {
        return Err(Error::TooFewClasses(class_names.len()));
    }
    let mut ds = Dataset::from_flat(features, n_features, labels, class_names)?;
    ds.feature_names = feature_names;
    Ok(ds)
}

/// Per-column min/max observed on a fitting subset of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Fits the affine map `x -> 2(x - min)/(max - min) - 1` per column on `rows`.
pub fn fit_scaling(data: &Dataset, rows: &[usize]) -> Result<ScalingParams> {
    if rows.is_empty() {
        return Err(Error::EmptySubset);
    }
    let d = data.n_features();
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for &r in rows {
        for (j, &v) in data.row(r).iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(ScalingParams { min, max })
}

impl ScalingParams {
    pub fn scale_value(&self, col: usize, v: f64) -> f64 {
        let (lo, hi) = (self.min[col], self.max[col]);
        if hi > lo {
            2.0 * (v - lo) / (hi - lo) - 1.0
        } else {
            0.0
        }
    }

    /// Applies the map to every row of `data`. Rows outside the fitting subset
    /// may land outside `[-1, 1]`; no clamping is applied.
    pub fn apply(&self, data: &Dataset) -> Dataset {
        let d = data.n_features();
        let features = data
            .features
            .iter()
            .enumerate()
            .map(|(i, &v)| self.scale_value(i % d, v))
            .collect();
        Dataset {
            features,
            n_features: d,
            labels: data.labels.clone(),
            class_names: data.class_names.clone(),
            feature_names: data.feature_names.clone(),
        }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().enumerate().map(|(j, &v)| self.scale_value(j, v)).collect()
    }
}

/// Assignment of every example to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified k-fold partition of `labels` (class indices below `n_classes`).
///
/// Each class is shuffled under `seed` and dealt round-robin, continuing the
/// deal from where the previous class stopped. That keeps every class's fold
/// counts within one of each other and the overall fold sizes within one.
pub fn stratified_kfold_labels(labels: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(Error::InvalidFoldCount { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut assignment = vec![0; n];
    let mut next = 0usize;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan { k, assignment, seed })
}

pub fn stratified_kfold(data: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    stratified_kfold_labels(data.labels(), data.n_classes(), k, seed)
}

/// Rows of two classes relabelled `+1` (first class) and `-1` (second class).
#[derive(Debug, Clone)]
pub struct TwoClassView<'a> {
    data: &'a Dataset,
    rows: Vec<usize>,
    targets: Vec<f64>,
    classes: (usize, usize),
}

impl<'a> TwoClassView<'a> {
    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    /// Row indices into the underlying dataset.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn classes(&self) -> (usize, usize) {
        self.classes
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn x(&self, i: usize) -> &'a [f64] {
        self.data.row(self.rows[i])
    }

    /// Number of positive and negative examples.
    pub fn class_sizes(&self) -> (usize, usize) {
        let pos = self.targets.iter().filter(|&&t| t > 0.0).count();
        (pos, self.targets.len() - pos)
    }

    /// Sub-view over positions `idx` (positions within this view).
    pub fn select(&self, idx: &[usize]) -> TwoClassView<'a> {
        TwoClassView {
            data: self.data,
            rows: idx.iter().map(|&i| self.rows[i]).collect(),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            classes: self.classes,
        }
    }

    /// The same rows with the roles of the two classes swapped.
    pub fn swapped(&self) -> TwoClassView<'a> {
        TwoClassView {
            data: self.data,
            rows: self.rows.clone(),
            targets: self.targets.iter().map(|t| -t).collect(),
            classes: (self.classes.1, self.classes.0),
        }
    }
}

/// Two-class view over every row of classes `a` and `b`.
pub fn pair_subset(data: &Dataset, a: usize, b: usize) -> Result<TwoClassView<'_>> {
    pair_subset_rows(data, a, b, 0..data.len())
}

/// Two-class view restricted to the given candidate rows, in their order.
pub fn pair_subset_rows<I>(data: &Dataset, a: usize, b: usize, rows: I) -> Result<TwoClassView<'_>>
where
    I: IntoIterator<Item = usize>,
{
    let n = data.n_classes();
    if a == b || a >= n || b >= n {
        return Err(Error::InvalidPair(a, b));
    }
    let mut picked = Vec::new();
    let mut targets = Vec::new();
    for r in rows {
        let l = data.label(r);
        if l == a {
            picked.push(r);
            targets.push(1.0);
        } else if l == b {
            picked.push(r);
            targets.push(-1.0);
        }
    }
    Ok(TwoClassView {
        data,
        rows: picked,
        targets,
        classes: (a, b),
    })
}
