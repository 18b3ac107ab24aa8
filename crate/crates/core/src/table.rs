use crate::error::{Error, Result};

/// Dense row-major matrix of feature values with column names.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    names: Vec<String>,
    n_rows: usize,
    values: Vec<f64>,
}

impl DataTable {
    /// Builds a table from row-major values. `values.len()` must equal
    /// `n_rows * names.len()`.
    pub fn new(names: Vec<String>, n_rows: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * names.len() {
            return Err(Error::shape(
                format!("{} values ({}x{})", n_rows * names.len(), n_rows, names.len()),
                values.len(),
            ));
        }
        Ok(Self {
            names,
            n_rows,
            values,
        })
    }

    /// Builds a table from rows, naming columns `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        Self::from_rows_named(default_names(m), rows)
    }

    pub fn from_rows_named(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let m = names.len();
        let mut values = Vec::with_capacity(rows.len() * m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::shape(
                    format!("{m} columns"),
                    format!("{} columns in row {i}", row.len()),
                ));
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            names,
            n_rows: rows.len(),
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.n_cols();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        let m = self.n_cols().max(1);
        self.values.chunks_exact(m).take(self.n_rows)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Position of the column called `name`.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// New table holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            names: self.names.clone(),
            n_rows: indices.len(),
            values,
        }
    }

    pub(crate) fn ensure_cols(&self, m: usize) -> Result<()> {
        if self.n_cols() != m {
            return Err(Error::shape(
                format!("{m} columns"),
                format!("{} columns", self.n_cols()),
            ));
        }
        Ok(())
    }
}

pub fn default_names(m: usize) -> Vec<String> {
    (0..m).map(|j| format!("x{j}")).collect()
}
