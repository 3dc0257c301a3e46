//! Numeric datasets and the ingestion step that produces them.

use std::collections::BTreeSet;

use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("label column `{0}` not found")]
    MissingLabelColumn(String),
    #[error("label column has {0} distinct value(s), at least 2 required")]
    TooFewClasses(usize),
    #[error("missing label in row {0}")]
    MissingLabel(usize),
    #[error("column `{name}` has {got} cells, expected {expected}")]
    RaggedColumn {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("feature rows ({rows}) and labels ({labels}) differ in length")]
    ShapeMismatch { rows: usize, labels: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("non-finite feature value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("class count must be at least 2")]
    DegenerateClassCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Binary,
    Multiclass,
}

/// A fully numeric, imputed classification dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    class_count: usize,
    attribute_names: Vec<String>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        class_count: usize,
        attribute_names: Vec<String>,
    ) -> Result<Self, DatasetError> {
        let class_names = (0..class_count).map(|c| c.to_string()).collect();
        Self::with_class_names(features, labels, class_count, attribute_names, class_names)
    }

    fn with_class_names(
        features: Array2<f64>,
        labels: Vec<usize>,
        class_count: usize,
        attribute_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self, DatasetError> {
        if class_count < 2 {
            return Err(DatasetError::DegenerateClassCount);
        }
        if features.nrows() != labels.len() {
            return Err(DatasetError::ShapeMismatch {
                rows: features.nrows(),
                labels: labels.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= class_count) {
            return Err(DatasetError::LabelOutOfRange {
                label,
                classes: class_count,
            });
        }
        if let Some(((row, col), _)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(DatasetError::NonFinite { row, col });
        }
        let mut attribute_names = attribute_names;
        attribute_names.resize_with(features.ncols(), String::new);
        Ok(Dataset {
            features,
            labels,
            class_count,
            attribute_names,
            class_names,
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn task_kind(&self) -> TaskKind {
        if self.class_count == 2 {
            TaskKind::Binary
        } else {
            TaskKind::Multiclass
        }
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    /// Original label values, indexed by class index.
    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.features.ncols()
    }

    /// Rows selected by `indices`, keeping the label indexing of `self`.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let features = self.features.select(ndarray::Axis(0), indices);
        Dataset {
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            attribute_names: self.attribute_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Converts back to a raw table (numeric attributes plus a label column).
    pub fn to_raw_table(&self, label_column: &str) -> RawTable {
        let mut table = RawTable::default();
        for (c, name) in self.attribute_names.iter().enumerate() {
            table.push(
                name.clone(),
                RawColumn::Numeric(self.features.column(c).iter().map(|&v| Some(v)).collect()),
            );
        }
        table.push(
            label_column,
            RawColumn::Categorical(
                self.labels
                    .iter()
                    .map(|&l| Some(self.class_names[l].clone()))
                    .collect(),
            ),
        );
        table
    }

    /// Per-class instance counts.
    pub fn class_frequencies(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}

/// One column of a raw, mixed-type table. `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub enum RawColumn {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl RawColumn {
    fn len(&self) -> usize {
        match self {
            RawColumn::Numeric(v) => v.len(),
            RawColumn::Categorical(v) => v.len(),
        }
    }

    fn label_text(&self, row: usize) -> Option<String> {
        match self {
            RawColumn::Numeric(v) => v[row].map(|x| x.to_string()),
            RawColumn::Categorical(v) => v[row].clone(),
        }
    }
}

/// A table as read from disk, before encoding.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawTable {
    pub columns: Vec<(String, RawColumn)>,
}

impl RawTable {
    pub fn push(&mut self, name: impl Into<String>, column: RawColumn) {
        self.columns.push((name.into(), column));
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }
}

/// One-hot encodes categorical attributes, imputes missing cells with zero and
/// maps labels to contiguous indices in order of first appearance.
///
/// Indicator columns for a categorical attribute appear in lexicographic
/// category order and are named `<attribute>=<category>`. A missing
/// categorical cell encodes as all-zero indicators.
pub fn encode_and_impute(table: &RawTable, label_column: &str) -> Result<Dataset, DatasetError> {
    let rows = table.rows();
    for (name, column) in &table.columns {
        if column.len() != rows {
            return Err(DatasetError::RaggedColumn {
                name: name.clone(),
                got: column.len(),
                expected: rows,
            });
        }
    }
    let (_, label_col) = table
        .columns
        .iter()
        .find(|(name, _)| name == label_column)
        .ok_or_else(|| DatasetError::MissingLabelColumn(label_column.to_string()))?;

    let mut class_names: Vec<String> = Vec::new();
    let mut labels = Vec::with_capacity(rows);
    for row in 0..rows {
        let text = label_col
            .label_text(row)
            .ok_or(DatasetError::MissingLabel(row))?;
        let idx = match class_names.iter().position(|c| *c == text) {
            Some(i) => i,
            None => {
                class_names.push(text);
                class_names.len() - 1
            }
        };
        labels.push(idx);
    }
    if class_names.len() < 2 {
        return Err(DatasetError::TooFewClasses(class_names.len()));
    }

    let mut out_columns: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    for (name, column) in table.columns.iter().filter(|(n, _)| n != label_column) {
        match column {
            RawColumn::Numeric(cells) => {
                out_columns.push(cells.iter().map(|c| c.unwrap_or(0.0)).collect());
                names.push(name.clone());
            }
            RawColumn::Categorical(cells) => {
                let categories: BTreeSet<&str> = cells.iter().flatten().map(String::as_str).collect();
                for category in categories {
                    out_columns.push(
                        cells
                            .iter()
                            .map(|c| f64::from(u8::from(c.as_deref() == Some(category))))
                            .collect(),
                    );
                    names.push(format!("{name}={category}"));
                }
            }
        }
    }

    let width = out_columns.len();
    let features = Array2::from_shape_fn((rows, width), |(r, c)| out_columns[c][r]);
    let class_count = class_names.len();
    Dataset::with_class_names(features, labels, class_count, names, class_names)
}
