//! CSV ingestion and one-hot encoding.

use std::io::Read;
use std::path::Path;

use xshap_core::DataTable;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }
}

/// Rectangular table of mixed numeric and categorical columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularFile {
    names: Vec<String>,
    columns: Vec<Column>,
    raw: Vec<Vec<String>>,
}

/// Indicator columns generated for one categorical source column.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHot {
    pub source: String,
    /// Levels in order of first appearance.
    pub levels: Vec<String>,
    /// Index of the first indicator column in the feature table.
    pub offset: usize,
}

/// Numeric feature table, target vector and the encoding that produced them.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub features: DataTable,
    pub target: Vec<f64>,
    pub one_hot: Vec<OneHot>,
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<TabularFile> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    parse_csv(file)
}

pub fn parse_csv<R: Read>(input: R) -> Result<TabularFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(CliError::Data("empty file".into()));
    }
    let mut raw: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("row {i}: {e}")))?;
        if record.len() != names.len() {
            return Err(CliError::Data(format!(
                "row {i} has {} fields, expected {}",
                record.len(),
                names.len()
            )));
        }
        raw.push(record.iter().map(str::to_owned).collect());
    }
    if raw.is_empty() {
        return Err(CliError::Data("empty file: no data rows".into()));
    }
    let columns = (0..names.len())
        .map(|j| {
            let cells: Vec<&str> = raw.iter().map(|r| r[j].as_str()).collect();
            match cells.iter().map(|c| c.parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>() {
                Ok(v) => Column::Numeric(v),
                Err(_) => Column::Categorical(cells.iter().map(|c| c.to_string()).collect()),
            }
        })
        .collect();
    Ok(TabularFile { names, columns, raw })
}

impl TabularFile {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Column::len)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.names.iter().position(|n| n == name).map(|j| &self.columns[j])
    }

    /// Splits off `target` and one-hot encodes every categorical column
    /// in place.
    pub fn encode(&self, target: &str) -> Result<Encoded> {
        let t = self
            .names
            .iter()
            .position(|n| n == target)
            .ok_or_else(|| CliError::Config(format!("target column {target:?} not in header")))?;
        let y = match &self.columns[t] {
            Column::Numeric(v) => v.clone(),
            Column::Categorical(_) => {
                let i = self.raw.iter().position(|r| r[t].parse::<f64>().is_err()).unwrap_or(0);
                return Err(CliError::Data(format!(
                    "row {i}, column {target:?}: target value {:?} is not numeric",
                    self.raw[i][t]
                )));
            }
        };

        let n = self.n_rows();
        let mut names = Vec::new();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        let mut one_hot = Vec::new();
        for (j, (name, column)) in self.names.iter().zip(&self.columns).enumerate() {
            if j == t {
                continue;
            }
            match column {
                Column::Numeric(v) => {
                    names.push(name.clone());
                    cols.push(v.clone());
                }
                Column::Categorical(cells) => {
                    let mut levels: Vec<String> = Vec::new();
                    for c in cells {
                        if !levels.contains(c) {
                            levels.push(c.clone());
                        }
                    }
                    one_hot.push(OneHot {
                        source: name.clone(),
                        levels: levels.clone(),
                        offset: names.len(),
                    });
                    for level in levels {
                        cols.push(cells.iter().map(|c| if *c == level { 1.0 } else { 0.0 }).collect());
                        names.push(format!("{name}={level}"));
                    }
                }
            }
        }
        for (i, v) in y.iter().enumerate() {
            if !v.is_finite() {
                return Err(CliError::Data(format!("row {i}, column {target:?}: non-finite target {v}")));
            }
        }
        for (c, name) in cols.iter().zip(&names) {
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(CliError::Data(format!("row {i}, column {name:?}: non-finite value {}", c[i])));
            }
        }
        let m = cols.len();
        let values = (0..n).flat_map(|i| cols.iter().map(move |c| c[i])).collect();
        let features = DataTable::new(names, n, values)?;
        debug_assert_eq!(features.n_cols(), m);
        Ok(Encoded {
            features,
            target: y,
            one_hot,
        })
    }
}

impl OneHot {
    /// Recovers the categorical cells from the indicator columns.
    pub fn decode(&self, features: &DataTable) -> Result<Vec<String>> {
        features
            .rows()
            .enumerate()
            .map(|(i, row)| {
                let hot: Vec<usize> = (0..self.levels.len()).filter(|&k| row[self.offset + k] == 1.0).collect();
                match hot.as_slice() {
                    [k] => Ok(self.levels[*k].clone()),
                    _ => Err(CliError::Data(format!(
                        "row {i}: indicators of {:?} are not one-hot",
                        self.source
                    ))),
                }
            })
            .collect()
    }
}
