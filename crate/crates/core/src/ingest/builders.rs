use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;

use super::records::{ClaimRecord, CtrRecord, ViewRecord};
use crate::error::{Error, Result};
use crate::observed::{csv_error, Entry, ObservedMatrix};

/// Raw ids behind the dense row and column indices of a built matrix:
/// row `d` came from raw id `rows[d]`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdMapping {
    pub rows: Vec<i64>,
    pub cols: Vec<i64>,
}

impl IdMapping {
    /// Keeps the rows and columns listed (as old dense indices) in `rows` and `cols`.
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> IdMapping {
        IdMapping { rows: rows.iter().map(|&r| self.rows[r]).collect(), cols: cols.iter().map(|&c| self.cols[c]).collect() }
    }

    /// Writes `axis,index,id` rows with axis `row` or `col`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["axis", "index", "id"]).map_err(csv_error)?;
        for (axis, ids) in [("row", &self.rows), ("col", &self.cols)] {
            for (i, id) in ids.iter().enumerate() {
                w.write_record([axis, &i.to_string(), &id.to_string()]).map_err(csv_error)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Dimensions and fill of a matrix, printed as
/// `D=.. N=.. entries=.. sparsity=..%`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixSummary {
    pub n_rows: usize,
    pub n_cols: usize,
    pub entries: usize,
    pub sparsity: f64,
}

impl MatrixSummary {
    pub fn of(m: &ObservedMatrix) -> Self {
        MatrixSummary { n_rows: m.n_rows(), n_cols: m.n_cols(), entries: m.len(), sparsity: m.sparsity() }
    }
}

impl fmt::Display for MatrixSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "D={} N={} entries={} sparsity={:.2}%",
            self.n_rows,
            self.n_cols,
            self.entries,
            100.0 * self.sparsity
        )
    }
}

/// Aggregated `(numerator, support)` per raw `(row id, col id)` pair, in
/// ascending id order.
type Cells = BTreeMap<(i64, i64), (u64, u64)>;

fn assemble(cells: &Cells) -> Result<(ObservedMatrix, IdMapping)> {
    if cells.is_empty() {
        return Err(Error::EmptyInput("no entries to build a matrix from".into()));
    }
    let dense = |ids: Vec<i64>| -> (Vec<i64>, BTreeMap<i64, usize>) {
        let mut ids = ids;
        ids.sort_unstable();
        ids.dedup();
        let index = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        (ids, index)
    };
    let (rows, row_of) = dense(cells.keys().map(|k| k.0).collect());
    let (cols, col_of) = dense(cells.keys().map(|k| k.1).collect());
    let entries = cells
        .iter()
        .map(|(&(r, c), &(num, support))| Entry::with_support(row_of[&r], col_of[&c], num as f64 / support as f64, support))
        .collect();
    let m = ObservedMatrix::new(rows.len(), cols.len(), entries)?;
    Ok((m, IdMapping { rows, cols }))
}

/// Efficiency matrix: rows are users, columns disciplines, and each value is
/// the fraction of the user's claims in that discipline that were accepted.
/// Support is the number of claims.
pub fn build_efficiency_matrix(records: &[ClaimRecord]) -> Result<(ObservedMatrix, IdMapping)> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no claim records".into()));
    }
    let mut seen = HashSet::new();
    let mut cells = Cells::new();
    for r in records {
        if !seen.insert((r.user_id, r.discipline_id, r.claim_id)) {
            return Err(Error::InvalidArgument(format!(
                "claim {} appears twice for user {} in discipline {}",
                r.claim_id, r.user_id, r.discipline_id
            )));
        }
        let cell = cells.entry((r.user_id, r.discipline_id)).or_default();
        cell.0 += u64::from(r.approved);
        cell.1 += 1;
    }
    assemble(&cells)
}

/// Rating matrix from view counts: each user's counts divided by that
/// user's largest count. Repeated `(user, item)` rows are summed; zero
/// counts and users who never viewed anything are dropped. Support is the
/// view count.
pub fn build_rate_matrix(views: &[ViewRecord]) -> Result<(ObservedMatrix, IdMapping)> {
    if views.is_empty() {
        return Err(Error::EmptyInput("no view records".into()));
    }
    let mut counts: BTreeMap<(i64, i64), u64> = BTreeMap::new();
    for v in views {
        *counts.entry((v.user_id, v.item_id)).or_default() += v.views;
    }
    let mut user_max: BTreeMap<i64, u64> = BTreeMap::new();
    for (&(u, _), &c) in &counts {
        let m = user_max.entry(u).or_default();
        *m = (*m).max(c);
    }
    // value = count / max, support = count
    let mut values = BTreeMap::new();
    for (&(u, i), &c) in &counts {
        if c > 0 {
            values.insert((u, i), (c, user_max[&u]));
        }
    }
    if values.is_empty() {
        return Err(Error::EmptyInput("every view count is zero".into()));
    }
    let (m, ids) = assemble(&values)?;
    // assemble stores the max as support; replace it with the view count
    let entries = m
        .entries()
        .iter()
        .map(|e| Entry::with_support(e.row, e.col, e.value, counts[&(ids.rows[e.row], ids.cols[e.col])]))
        .collect();
    Ok((ObservedMatrix::new(m.n_rows(), m.n_cols(), entries)?, ids))
}

/// Click-through-rate matrix: rows are ads, columns categories, values
/// clicks over displays with displays as support. Repeated pairs are
/// summed.
pub fn build_ctr_matrix(events: &[CtrRecord]) -> Result<(ObservedMatrix, IdMapping)> {
    if events.is_empty() {
        return Err(Error::EmptyInput("no CTR records".into()));
    }
    let mut cells = Cells::new();
    for e in events {
        if e.displays == 0 {
            return Err(Error::InvalidArgument(format!("ad {} in category {} has no displays", e.ad_id, e.category_id)));
        }
        if e.clicks > e.displays {
            return Err(Error::InvalidArgument(format!(
                "ad {} in category {} has {} clicks but only {} displays",
                e.ad_id, e.category_id, e.clicks, e.displays
            )));
        }
        let cell = cells.entry((e.ad_id, e.category_id)).or_default();
        cell.0 += e.clicks;
        cell.1 += e.displays;
    }
    assemble(&cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn claim(user: i64, disc: i64, id: i64, ok: bool) -> ClaimRecord {
        ClaimRecord { job_id: 1, discipline_id: disc, task_id: 1, user_id: user, claim_id: id, approved: ok }
    }

    #[test]
    fn efficiency_examples() {
        let recs = [claim(7, 3, 1, true), claim(7, 3, 2, true), claim(7, 3, 3, false), claim(7, 3, 4, true), claim(7, 9, 5, true)];
        let (m, ids) = build_efficiency_matrix(&recs).unwrap();
        assert_eq!((m.n_rows(), m.n_cols(), m.len()), (1, 2, 2));
        assert_eq!(ids, IdMapping { rows: vec![7], cols: vec![3, 9] });
        assert_eq!(m.entries()[0], Entry::with_support(0, 0, 0.75, 4));
        assert_eq!(m.entries()[1], Entry::with_support(0, 1, 1.0, 1));
        assert!(build_efficiency_matrix(&[]).is_err());
        assert!(build_efficiency_matrix(&[claim(1, 1, 1, true), claim(1, 1, 1, false)]).is_err());
    }

    #[test]
    fn rate_examples() {
        let v = |u, i, n| ViewRecord { user_id: u, item_id: i, views: n };
        let (m, ids) = build_rate_matrix(&[v(1, 10, 20), v(1, 11, 5), v(2, 10, 3), v(3, 11, 0)]).unwrap();
        assert_eq!(ids.rows, vec![1, 2]);
        let val = |r, c| m.entries().iter().find(|e| e.row == r && e.col == c).map(|e| (e.value, e.support));
        assert_eq!(val(0, 0), Some((1.0, 20)));
        assert_eq!(val(0, 1), Some((0.25, 5)));
        assert_eq!(val(1, 0), Some((1.0, 3)));
    }

    #[test]
    fn ctr_examples() {
        let c = |a, k, d, cl| CtrRecord { ad_id: a, category_id: k, displays: d, clicks: cl };
        let (m, _) = build_ctr_matrix(&[c(1, 1, 10, 3), c(1, 2, 4, 0), c(2, 1, 5, 5)]).unwrap();
        let values: Vec<f64> = m.entries().iter().map(|e| e.value).collect();
        assert_eq!(values, vec![0.3, 0.0, 1.0]);
        assert_eq!(m.entries()[0].support, 10);
        assert!(build_ctr_matrix(&[c(1, 1, 2, 3)]).is_err());
        assert!(build_ctr_matrix(&[c(1, 1, 0, 0)]).is_err());
    }

    #[test]
    fn summary_line() {
        let m = ObservedMatrix::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let sub = ObservedMatrix::new(3, 2, m.entries()[..5].to_vec()).unwrap();
        assert_eq!(MatrixSummary::of(&sub).to_string(), "D=3 N=2 entries=5 sparsity=16.67%");
    }
}
