//! Sparse observed matrices.
//!
//! [`SparseMatrix`] is a validated list of `(row, col, value, support)`
//! triplets with no range restriction on the values; it is what the solvers
//! consume. [`ObservedMatrix`] wraps it and additionally guarantees every
//! value lies in `[0, 1]`.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
    /// Number of raw events (claims, views, displays) behind the value.
    pub support: u64,
}

impl Entry {
    pub fn new(row: usize, col: usize, value: f64) -> Self {
        Entry {
            row,
            col,
            value,
            support: 1,
        }
    }

    pub fn with_support(row: usize, col: usize, value: f64, support: u64) -> Self {
        Entry {
            row,
            col,
            value,
            support,
        }
    }
}

/// Sparse `n_rows x n_cols` matrix of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<Entry>,
}

impl SparseMatrix {
    pub fn new(n_rows: usize, n_cols: usize, entries: Vec<Entry>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::EmptyDimensions { n_rows, n_cols });
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if e.row >= n_rows || e.col >= n_cols {
                return Err(Error::IndexOutOfBounds {
                    row: e.row,
                    col: e.col,
                    n_rows,
                    n_cols,
                });
            }
            if !e.value.is_finite() {
                return Err(Error::non_finite(format!("entry ({}, {})", e.row, e.col)));
            }
            if e.support == 0 {
                return Err(Error::ZeroSupport {
                    row: e.row,
                    col: e.col,
                });
            }
            if !seen.insert((e.row, e.col)) {
                return Err(Error::DuplicateEntry {
                    row: e.row,
                    col: e.col,
                });
            }
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            entries,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Fraction of missing cells, `1 - |entries| / (D * N)`.
    pub fn sparsity(&self) -> f64 {
        1.0 - self.entries.len() as f64 / (self.n_rows as f64 * self.n_cols as f64)
    }

    /// Entry ids grouped by row.
    pub fn row_index(&self) -> Vec<Vec<usize>> {
        let mut index = vec![Vec::new(); self.n_rows];
        for (i, e) in self.entries.iter().enumerate() {
            index[e.row].push(i);
        }
        index
    }

    /// Entry ids grouped by column.
    pub fn col_index(&self) -> Vec<Vec<usize>> {
        let mut index = vec![Vec::new(); self.n_cols];
        for (i, e) in self.entries.iter().enumerate() {
            index[e.col].push(i);
        }
        index
    }

    pub fn mean_value(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.iter().map(|e| e.value).sum::<f64>() / self.entries.len() as f64
    }

    /// Keeps the entries at `ids` (in that order) on the same grid.
    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        let entries = ids
            .iter()
            .map(|&i| {
                self.entries.get(i).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "entry id {i} out of range for {} entries",
                        self.entries.len()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SparseMatrix::new(self.n_rows, self.n_cols, entries)
    }

    /// Applies `f` to every value.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| Entry {
                value: f(e.value),
                ..*e
            })
            .collect();
        SparseMatrix::new(self.n_rows, self.n_cols, entries)
    }
}

/// Sparse matrix with every value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedMatrix(SparseMatrix);

impl ObservedMatrix {
    pub fn new(n_rows: usize, n_cols: usize, entries: Vec<Entry>) -> Result<Self> {
        Self::from_sparse(SparseMatrix::new(n_rows, n_cols, entries)?)
    }

    pub fn from_sparse(inner: SparseMatrix) -> Result<Self> {
        for e in inner.entries() {
            if !(0.0..=1.0).contains(&e.value) {
                return Err(Error::ValueOutOfRange {
                    row: e.row,
                    col: e.col,
                    value: e.value,
                });
            }
        }
        Ok(ObservedMatrix(inner))
    }

    /// Builds a fully observed matrix from a dense row-major table.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut entries = Vec::with_capacity(n_rows * n_cols);
        for (d, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::InvalidArgument(format!(
                    "row {d} has {} columns, expected {n_cols}",
                    row.len()
                )));
            }
            entries.extend(row.iter().enumerate().map(|(n, &v)| Entry::new(d, n, v)));
        }
        Self::new(n_rows, n_cols, entries)
    }

    pub fn as_sparse(&self) -> &SparseMatrix {
        &self.0
    }

    pub fn into_sparse(self) -> SparseMatrix {
        self.0
    }

    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        Ok(ObservedMatrix(self.0.subset(ids)?))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(csv_error)?.clone();
        let expected = ["row", "col", "value", "support"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `row,col,value,support`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut entries = Vec::new();
        for record in rdr.deserialize::<Entry>() {
            entries.push(record.map_err(csv_error)?);
        }
        let n_rows = entries.iter().map(|e| e.row + 1).max().unwrap_or(0);
        let n_cols = entries.iter().map(|e| e.col + 1).max().unwrap_or(0);
        Self::new(n_rows, n_cols, entries)
    }

    /// Reads a matrix and checks it against known dimensions, which may
    /// exceed the largest index present.
    pub fn read_csv_with_dims<R: Read>(reader: R, n_rows: usize, n_cols: usize) -> Result<Self> {
        let m = Self::read_csv(reader)?;
        Self::new(n_rows, n_cols, m.0.entries)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for e in self.entries() {
            wtr.serialize(e).map_err(csv_error)?;
        }
        if self.entries().is_empty() {
            wtr.write_record(["row", "col", "value", "support"])
                .map_err(csv_error)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

impl Deref for ObservedMatrix {
    type Target = SparseMatrix;

    fn deref(&self) -> &SparseMatrix {
        &self.0
    }
}

pub(crate) fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::Deserialize { err, .. } => Error::Parse {
            line,
            message: err.to_string(),
        },
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}
