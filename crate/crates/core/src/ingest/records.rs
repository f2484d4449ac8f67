use std::io::Read;

use csv::StringRecord;

use crate::error::{Error, Result};
use crate::observed::csv_error;

/// One submitted claim: `approved` is the manager's decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClaimRecord {
    pub job_id: i64,
    pub discipline_id: i64,
    pub task_id: i64,
    pub user_id: i64,
    pub claim_id: i64,
    pub approved: bool,
}

/// View count of one item by one user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViewRecord {
    pub user_id: i64,
    pub item_id: i64,
    pub views: u64,
}

/// Displays and clicks of one ad within one category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CtrRecord {
    pub ad_id: i64,
    pub category_id: i64,
    pub displays: u64,
    pub clicks: u64,
}

const CLAIM_HEADER: [&str; 6] = ["jobId", "disciplineId", "taskId", "userId", "claimId", "approved"];
const VIEW_HEADER: [&str; 3] = ["userId", "itemId", "views"];
const CTR_HEADER: [&str; 4] = ["adId", "categoryId", "displays", "clicks"];

/// Reads claims from CSV with header `jobId,disciplineId,taskId,userId,claimId,approved`.
/// `approved` accepts `true`/`false`/`1`/`0`, case-insensitively.
pub fn read_claims<R: Read>(reader: R) -> Result<Vec<ClaimRecord>> {
    read_rows(reader, &CLAIM_HEADER, |row| {
        Ok(ClaimRecord {
            job_id: row.int(0)?,
            discipline_id: row.int(1)?,
            task_id: row.int(2)?,
            user_id: row.int(3)?,
            claim_id: row.int(4)?,
            approved: row.boolean(5)?,
        })
    })
}

/// Reads view counts from CSV with header `userId,itemId,views`.
pub fn read_views<R: Read>(reader: R) -> Result<Vec<ViewRecord>> {
    read_rows(reader, &VIEW_HEADER, |row| {
        Ok(ViewRecord { user_id: row.int(0)?, item_id: row.int(1)?, views: row.count(2)? })
    })
}

/// Reads ad events from CSV with header `adId,categoryId,displays,clicks`.
pub fn read_ctr_events<R: Read>(reader: R) -> Result<Vec<CtrRecord>> {
    read_rows(reader, &CTR_HEADER, |row| {
        Ok(CtrRecord { ad_id: row.int(0)?, category_id: row.int(1)?, displays: row.count(2)?, clicks: row.count(3)? })
    })
}

struct Row<'a> {
    record: &'a StringRecord,
    header: &'a [&'a str],
    line: u64,
}

impl Row<'_> {
    fn field(&self, i: usize) -> Result<&str> {
        self.record
            .get(i)
            .map(str::trim)
            .ok_or_else(|| self.error(format!("missing field `{}`", self.header[i])))
    }

    fn error(&self, message: String) -> Error {
        Error::Parse { line: self.line, message }
    }

    fn int(&self, i: usize) -> Result<i64> {
        let s = self.field(i)?;
        s.parse().map_err(|_| self.error(format!("`{}` is not an integer: {s:?}", self.header[i])))
    }

    fn count(&self, i: usize) -> Result<u64> {
        let s = self.field(i)?;
        s.parse()
            .map_err(|_| self.error(format!("`{}` is not a nonnegative integer: {s:?}", self.header[i])))
    }

    fn boolean(&self, i: usize) -> Result<bool> {
        let s = self.field(i)?;
        match s.to_ascii_lowercase().as_str() {
            "true" | "1" => Ok(true),
            "false" | "0" => Ok(false),
            _ => Err(self.error(format!("`{}` is not a boolean: {s:?}", self.header[i]))),
        }
    }
}

fn read_rows<R, T, F>(reader: R, header: &[&str], parse: F) -> Result<Vec<T>>
where
    R: Read,
    F: Fn(&Row<'_>) -> Result<T>,
{
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let found = rdr.headers().map_err(csv_error)?.clone();
    let names: Vec<&str> = found.iter().map(str::trim).collect();
    if names != header {
        return Err(Error::Parse { line: 1, message: format!("expected header `{}`, found `{}`", header.join(","), names.join(",")) });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let record = rec.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let row = Row { record: &record, header, line };
        if record.len() != header.len() {
            return Err(row.error(format!("expected {} fields, found {}", header.len(), record.len())));
        }
        out.push(parse(&row)?);
    }
    Ok(out)
}
