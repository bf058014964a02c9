//! CSV ingestion with a compact schema language.
//!
//! A schema is a comma-separated list of `name:kind` declarations:
//!
//! ```text
//! age:continuous, stage:ordinal(normal<ASCUS<low<high<cancer), sex:binary,
//! visits:count, os:surv(time,event), patient:id
//! ```
//!
//! `surv(time_field,event_field)` builds one right-censored column from two CSV
//! fields. `id` marks the row-identifier field. Header fields that the schema does
//! not mention are loaded as continuous when every cell is numeric or missing and
//! skipped otherwise. Missing cells are empty fields or the literal `NA`.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::column::{format_real, Column, Kind, Surv, Values};
use crate::data::dataset::Dataset;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Column(Kind),
    Survival { time: String, event: String },
    Id,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: FieldKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn parse(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        for item in split_top_level(text, ',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            let (name, kind) = item
                .split_once(':')
                .ok_or_else(|| invalid(format!("schema entry `{item}` is not `name:kind`")))?;
            let name = name.trim().to_string();
            let kind = kind.trim();
            let kind = if let Some(body) = strip_call(kind, "ordinal") {
                let levels: Vec<String> = body.split('<').map(|l| l.trim().to_string()).collect();
                FieldKind::Column(Kind::Ordinal(levels))
            } else if let Some(body) = strip_call(kind, "surv") {
                let (time, event) = body
                    .split_once(',')
                    .ok_or_else(|| invalid(format!("`{kind}`: expected surv(time_field,event_field)")))?;
                FieldKind::Survival {
                    time: time.trim().to_string(),
                    event: event.trim().to_string(),
                }
            } else {
                match kind {
                    "continuous" | "real" => FieldKind::Column(Kind::Continuous),
                    "binary" => FieldKind::Column(Kind::Binary),
                    "count" => FieldKind::Column(Kind::Count),
                    "id" => FieldKind::Id,
                    other => return Err(invalid(format!("unknown column kind `{other}`"))),
                }
            };
            columns.push(ColumnSpec { name, kind });
        }
        Ok(Self { columns })
    }

    /// Schema that reloads `d` as written by [`write_csv`].
    pub fn of(d: &Dataset) -> Self {
        let mut columns = Vec::new();
        if d.row_ids().is_some() {
            columns.push(ColumnSpec {
                name: "row_id".into(),
                kind: FieldKind::Id,
            });
        }
        for c in d.columns() {
            let kind = match c.kind() {
                Kind::RightCensored => FieldKind::Survival {
                    time: format!("{}_time", c.name()),
                    event: format!("{}_event", c.name()),
                },
                k => FieldKind::Column(k.clone()),
            };
            columns.push(ColumnSpec {
                name: c.name().to_string(),
                kind,
            });
        }
        Self { columns }
    }
}

fn strip_call<'a>(s: &'a str, head: &str) -> Option<&'a str> {
    s.strip_prefix(head)?.trim_start().strip_prefix('(')?.strip_suffix(')')
}

pub(crate) fn split_top_level(text: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&text[start..i]);
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "NA"
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut records: Vec<Vec<String>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: i + 2,
            msg: e.to_string(),
        })?;
        records.push(rec.iter().map(str::to_string).collect());
    }
    if records.is_empty() {
        return Err(Error::EmptyResult);
    }
    let field = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };

    let mut used = HashSet::new();
    let mut columns = Vec::new();
    let mut row_ids = None;
    for spec in &schema.columns {
        match &spec.kind {
            FieldKind::Id => {
                let j = field(&spec.name)?;
                used.insert(j);
                row_ids = Some(records.iter().map(|r| r[j].clone()).collect());
            }
            FieldKind::Survival { time, event } => {
                let (jt, je) = (field(time)?, field(event)?);
                used.insert(jt);
                used.insert(je);
                let mut vals = Vec::with_capacity(records.len());
                for (row, r) in records.iter().enumerate() {
                    if is_missing(&r[jt]) || is_missing(&r[je]) {
                        vals.push(None);
                        continue;
                    }
                    let t = parse_real(&spec.name, row, &r[jt])?;
                    let event = match r[je].trim() {
                        "1" => true,
                        "0" => false,
                        other => {
                            return Err(Error::TypeViolation {
                                column: spec.name.clone(),
                                row,
                                expected: "event indicator 0 or 1",
                                value: other.to_string(),
                            })
                        }
                    };
                    vals.push(Some(Surv { time: t, event }));
                }
                columns.push(Column::new(&spec.name, Kind::RightCensored, Values::Censored(vals))?);
            }
            FieldKind::Column(kind) => {
                let j = field(&spec.name)?;
                used.insert(j);
                let mut vals = Vec::with_capacity(records.len());
                for (row, r) in records.iter().enumerate() {
                    let cell = r[j].trim();
                    if is_missing(cell) {
                        vals.push(None);
                        continue;
                    }
                    let v = match kind {
                        Kind::Ordinal(levels) => levels
                            .iter()
                            .position(|l| l == cell)
                            .ok_or_else(|| Error::UnknownLevel {
                                column: spec.name.clone(),
                                value: cell.to_string(),
                            })? as f64,
                        _ => parse_real(&spec.name, row, cell)?,
                    };
                    vals.push(Some(v));
                }
                columns.push(Column::new(&spec.name, kind.clone(), Values::Numeric(vals))?);
            }
        }
    }

    // Undeclared fields: numeric ones become continuous columns.
    for (j, name) in header.iter().enumerate() {
        if used.contains(&j) || schema.columns.iter().any(|s| &s.name == name) {
            continue;
        }
        let parsed: Option<Vec<Option<f64>>> = records
            .iter()
            .map(|r| {
                if is_missing(&r[j]) {
                    Some(None)
                } else {
                    r[j].trim().parse::<f64>().ok().filter(|x| x.is_finite()).map(Some)
                }
            })
            .collect();
        match parsed {
            Some(vals) => columns.push(Column::new(name, Kind::Continuous, Values::Numeric(vals))?),
            None => log::debug!("skipping non-numeric undeclared field `{name}`"),
        }
    }
    Dataset::with_row_ids(columns, row_ids)
}

fn parse_real(column: &str, row: usize, cell: &str) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::TypeViolation {
            column: column.to_string(),
            row,
            expected: "number",
            value: cell.to_string(),
        })
}

/// Writes `d` in the layout that [`Schema::of`] describes.
pub fn write_csv<W: Write>(d: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = Vec::new();
    if d.row_ids().is_some() {
        header.push("row_id".to_string());
    }
    for c in d.columns() {
        if matches!(c.kind(), Kind::RightCensored) {
            header.push(format!("{}_time", c.name()));
            header.push(format!("{}_event", c.name()));
        } else {
            header.push(c.name().to_string());
        }
    }
    w.write_record(&header)?;
    for i in 0..d.n_rows() {
        let mut rec = Vec::with_capacity(header.len());
        if let Some(ids) = d.row_ids() {
            rec.push(ids[i].clone());
        }
        for c in d.columns() {
            match c.values() {
                Values::Censored(v) => match v[i] {
                    Some(s) => {
                        rec.push(format_real(s.time));
                        rec.push((s.event as u8).to_string());
                    }
                    None => {
                        rec.push("NA".into());
                        rec.push("NA".into());
                    }
                },
                Values::Numeric(_) => rec.push(c.format_cell(i)),
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const STAGES: &str = "age:continuous,stage:ordinal(normal<ASCUS<low<high<cancer)";

    #[test]
    fn parses_typed_columns() {
        let csv = "age,stage\n23,ASCUS\n41,high\n35.5,normal\n";
        let d = read_csv(csv.as_bytes(), &Schema::parse(STAGES).unwrap()).unwrap();
        assert_eq!(d.n_rows(), 3);
        assert_eq!(d.columns().len(), 2);
        assert_eq!(d.column("stage").unwrap().numeric().unwrap(), vec![1.0, 3.0, 0.0]);
        assert_eq!(d.column("age").unwrap().numeric().unwrap(), vec![23.0, 41.0, 35.5]);
    }

    #[test]
    fn unknown_level_is_reported() {
        let csv = "age,stage\n23,mild\n";
        let err = read_csv(csv.as_bytes(), &Schema::parse(STAGES).unwrap()).unwrap_err();
        assert!(matches!(err, Error::UnknownLevel { ref value, .. } if value == "mild"));
    }

    #[test]
    fn censored_pair_from_two_fields() {
        let schema = Schema::parse("os:surv(time,event)").unwrap();
        let d = read_csv("time,event\n30.2,0\n12,1\n".as_bytes(), &schema).unwrap();
        let s = d.column("os").unwrap().survival().unwrap();
        assert_eq!(s[0], Surv { time: 30.2, event: false });
        assert_eq!(s[1], Surv { time: 12.0, event: true });
    }

    #[test]
    fn malformed_input() {
        let schema = Schema::parse("age:continuous").unwrap();
        assert!(matches!(
            read_csv("age\nabc\n".as_bytes(), &schema),
            Err(Error::TypeViolation { .. })
        ));
        assert!(matches!(
            read_csv("age,b\n1,2\n3\n".as_bytes(), &schema),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            read_csv("weight\n1\n".as_bytes(), &schema),
            Err(Error::UnknownColumn(_))
        ));
    }

    #[test]
    fn missing_cells_and_undeclared_fields() {
        let schema = Schema::parse("id:id,age:continuous").unwrap();
        let d = read_csv("id,age,cd4,note\np1,NA,300,x\np2,40,,y\n".as_bytes(), &schema).unwrap();
        assert_eq!(d.row_ids().unwrap(), ["p1", "p2"]);
        assert!(d.column("age").unwrap().is_missing(0));
        assert!(d.column("cd4").unwrap().is_missing(1));
        assert!(d.column("note").is_err());
    }

    #[test]
    fn rfc4180_quoting() {
        let schema = Schema::parse("x:continuous").unwrap();
        let d = read_csv("\"x\",\"y, z\"\n\"1.5\",\"a, b\"\n".as_bytes(), &schema).unwrap();
        assert_eq!(d.column("x").unwrap().numeric().unwrap(), vec![1.5]);
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            xs in proptest::collection::vec(proptest::option::of(-1e6f64..1e6), 1..30),
            seed in 0u64..1000,
        ) {
            let n = xs.len();
            let stage: Vec<Option<f64>> = (0..n).map(|i| ((i as u64 + seed) % 6 != 5).then_some(((i as u64 * 7 + seed) % 5) as f64)).collect();
            let surv: Vec<Option<Surv>> = xs.iter().map(|x| x.map(|v| Surv { time: v.abs(), event: v > 0.0 })).collect();
            let d = Dataset::with_row_ids(vec![
                Column::new("x", Kind::Continuous, Values::Numeric(xs.clone())).unwrap(),
                Column::new("stage", Kind::Ordinal(vec!["normal".into(), "ASCUS".into(), "low".into(), "high".into(), "cancer".into()]), Values::Numeric(stage)).unwrap(),
                Column::new("os", Kind::RightCensored, Values::Censored(surv)).unwrap(),
            ], Some((0..n).map(|i| format!("r{i}")).collect())).unwrap();
            let mut buf = Vec::new();
            write_csv(&d, &mut buf).unwrap();
            let back = read_csv(buf.as_slice(), &Schema::of(&d)).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
