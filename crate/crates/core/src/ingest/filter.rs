use crate::error::{Error, Result};
use crate::observed::{Entry, ObservedMatrix};

/// Cold-start thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterConfig {
    /// Entries backed by fewer raw events are dropped.
    pub min_support: u64,
    /// Columns with fewer remaining entries are dropped.
    pub min_users_per_item: usize,
    /// Rows with fewer remaining entries are dropped.
    pub min_entries_per_user: usize,
    /// Repeat the column and row passes until nothing changes, so that the
    /// output satisfies every threshold. When false a single pass is made.
    pub fixpoint: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { min_support: 10, min_users_per_item: 10, min_entries_per_user: 3, fixpoint: true }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_support == 0 || self.min_users_per_item == 0 || self.min_entries_per_user == 0 {
            return Err(Error::InvalidArgument(format!("filter thresholds must all be at least 1: {self:?}")));
        }
        Ok(())
    }
}

/// Filter output with the old dense index of every kept row and column.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub matrix: ObservedMatrix,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

/// Drops low-support entries, then sparse columns, then sparse rows, and
/// reindexes densely.
pub fn apply_filters(m: &ObservedMatrix, cfg: &FilterConfig) -> Result<Filtered> {
    cfg.validate()?;
    let entries_before = m.len();
    let mut kept: Vec<Entry> = m.entries().iter().filter(|e| e.support >= cfg.min_support).copied().collect();
    let after_support = kept.len();
    let mut after_items = None;
    loop {
        let before = kept.len();
        let mut per_col = vec![0usize; m.n_cols()];
        kept.iter().for_each(|e| per_col[e.col] += 1);
        kept.retain(|e| per_col[e.col] >= cfg.min_users_per_item);
        after_items.get_or_insert(kept.len());

        let mut per_row = vec![0usize; m.n_rows()];
        kept.iter().for_each(|e| per_row[e.row] += 1);
        kept.retain(|e| per_row[e.row] >= cfg.min_entries_per_user);
        if !cfg.fixpoint || kept.len() == before {
            break;
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyAfterFilter { entries_before, after_support, after_items: after_items.unwrap_or(0) });
    }

    let remap = |present: Vec<bool>| -> (Vec<usize>, Vec<usize>) {
        let old: Vec<usize> = present.iter().enumerate().filter(|(_, &p)| p).map(|(i, _)| i).collect();
        let mut new = vec![usize::MAX; present.len()];
        old.iter().enumerate().for_each(|(n, &o)| new[o] = n);
        (old, new)
    };
    let mut row_present = vec![false; m.n_rows()];
    let mut col_present = vec![false; m.n_cols()];
    for e in &kept {
        row_present[e.row] = true;
        col_present[e.col] = true;
    }
    let (rows, new_row) = remap(row_present);
    let (cols, new_col) = remap(col_present);
    let entries = kept.into_iter().map(|e| Entry { row: new_row[e.row], col: new_col[e.col], ..e }).collect();
    let matrix = ObservedMatrix::new(rows.len(), cols.len(), entries)?;
    Ok(Filtered { matrix, rows, cols })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: u64, i: usize, u: usize) -> FilterConfig {
        FilterConfig { min_support: s, min_users_per_item: i, min_entries_per_user: u, fixpoint: true }
    }

    #[test]
    fn satisfied_matrix_is_unchanged() {
        let m = ObservedMatrix::from_dense(&[vec![0.2, 0.4], vec![0.6, 0.8]]).unwrap();
        let f = apply_filters(&m, &cfg(1, 2, 2)).unwrap();
        assert_eq!(f.matrix, m);
        assert_eq!((f.rows, f.cols), (vec![0, 1], vec![0, 1]));
    }

    #[test]
    fn low_support_entry_removed() {
        let m = ObservedMatrix::new(1, 2, vec![Entry::with_support(0, 0, 0.5, 9), Entry::with_support(0, 1, 0.5, 10)]).unwrap();
        let f = apply_filters(&m, &cfg(10, 1, 1)).unwrap();
        assert_eq!(f.matrix.len(), 1);
        assert_eq!(f.cols, vec![1]);
    }

    #[test]
    fn thin_column_removed_and_reindexed() {
        // column 0 has 9 entries, column 1 has 10
        let mut entries: Vec<Entry> = (0..10).map(|d| Entry::new(d, 1, 0.5)).collect();
        entries.extend((0..9).map(|d| Entry::new(d, 0, 0.5)));
        let m = ObservedMatrix::new(10, 2, entries).unwrap();
        let f = apply_filters(&m, &cfg(1, 10, 1)).unwrap();
        assert_eq!(f.cols, vec![1]);
        assert_eq!(f.matrix.n_cols(), 1);
        assert!(f.matrix.entries().iter().all(|e| e.col == 0));
    }

    #[test]
    fn fixpoint_vs_single_pass() {
        // Dropping rows 1 and 2 leaves both columns with a single user.
        let m = ObservedMatrix::new(3, 2, vec![Entry::new(0, 0, 0.5), Entry::new(0, 1, 0.5), Entry::new(1, 0, 0.5), Entry::new(2, 1, 0.5)])
            .unwrap();
        let single = apply_filters(&m, &FilterConfig { fixpoint: false, ..cfg(1, 2, 2) }).unwrap();
        assert_eq!(single.matrix.len(), 2);
        assert_eq!(single.rows, vec![0]);
        assert!(matches!(apply_filters(&m, &cfg(1, 2, 2)), Err(Error::EmptyAfterFilter { .. })));
    }

    #[test]
    fn rejects_zero_thresholds() {
        let m = ObservedMatrix::from_dense(&[vec![0.5]]).unwrap();
        assert!(apply_filters(&m, &cfg(0, 1, 1)).is_err());
    }
}
