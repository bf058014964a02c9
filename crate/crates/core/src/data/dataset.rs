use std::collections::HashSet;

use crate::data::column::Column;
use crate::error::{invalid, Error, Result};

/// Equal-length typed columns with optional row identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    row_ids: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        Self::with_row_ids(columns, None)
    }

    pub fn with_row_ids(columns: Vec<Column>, row_ids: Option<Vec<String>>) -> Result<Self> {
        let n = match (columns.first(), &row_ids) {
            (Some(c), _) => c.len(),
            (None, Some(ids)) => ids.len(),
            (None, None) => return Err(invalid("dataset needs at least one column")),
        };
        if n == 0 {
            return Err(Error::EmptyResult);
        }
        let mut names = HashSet::new();
        for c in &columns {
            if c.len() != n {
                return Err(invalid(format!(
                    "column `{}` has {} rows, expected {n}",
                    c.name(),
                    c.len()
                )));
            }
            if !names.insert(c.name().to_string()) {
                return Err(invalid(format!("duplicate column name `{}`", c.name())));
            }
        }
        if let Some(ids) = &row_ids {
            if ids.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: ids.len(),
                });
            }
        }
        Ok(Self { columns, row_ids })
    }

    pub fn n_rows(&self) -> usize {
        self.columns
            .first()
            .map(Column::len)
            .or_else(|| self.row_ids.as_ref().map(Vec::len))
            .unwrap_or(0)
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn row_ids(&self) -> Option<&[String]> {
        self.row_ids.as_deref()
    }

    /// Identifier for a row: the declared id, or the 1-based row number.
    pub fn row_label(&self, row: usize) -> String {
        match &self.row_ids {
            Some(ids) => ids[row].clone(),
            None => (row + 1).to_string(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            row_ids: self
                .row_ids
                .as_ref()
                .map(|ids| rows.iter().map(|&i| ids[i].clone()).collect()),
        }
    }

    /// Indices of rows with no missing cell in `cols`; an error if there are none.
    pub fn complete_rows(&self, cols: &[&str]) -> Result<Vec<usize>> {
        let selected = cols
            .iter()
            .map(|name| self.column(name))
            .collect::<Result<Vec<_>>>()?;
        let keep: Vec<usize> = (0..self.n_rows())
            .filter(|&i| selected.iter().all(|c| !c.is_missing(i)))
            .collect();
        if keep.is_empty() {
            return Err(Error::EmptyResult);
        }
        Ok(keep)
    }

    /// Listwise deletion over `cols`. Returns the reduced dataset and the number
    /// of rows removed.
    pub fn complete_cases(&self, cols: &[&str]) -> Result<(Dataset, usize)> {
        let keep = self.complete_rows(cols)?;
        let removed = self.n_rows() - keep.len();
        if removed == 0 {
            return Ok((self.clone(), 0));
        }
        Ok((self.select_rows(&keep), removed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::column::{Kind, Values};

    fn with_missing(n: usize, missing: &[usize]) -> Dataset {
        let a = Column::new(
            "a",
            Kind::Continuous,
            Values::Numeric((0..n).map(|i| (!missing.contains(&i)).then_some(i as f64)).collect()),
        )
        .unwrap();
        let b = Column::continuous("b", (0..n).map(|i| i as f64 * 2.0).collect()).unwrap();
        Dataset::new(vec![a, b]).unwrap()
    }

    #[test]
    fn complete_cases_drops_single_missing_row() {
        let d = with_missing(70, &[12]);
        let (cc, removed) = d.complete_cases(&["a", "b"]).unwrap();
        assert_eq!(cc.n_rows(), 69);
        assert_eq!(removed, 1);
        assert_eq!(cc.column("b").unwrap().numeric().unwrap()[12], 26.0);
    }

    #[test]
    fn complete_cases_identity_without_missing() {
        let d = with_missing(5, &[]);
        let (cc, removed) = d.complete_cases(&["a"]).unwrap();
        assert_eq!(cc, d);
        assert_eq!(removed, 0);
    }

    #[test]
    fn complete_cases_all_missing_is_error() {
        let d = with_missing(3, &[0, 1, 2]);
        assert!(matches!(d.complete_cases(&["a"]), Err(Error::EmptyResult)));
        assert!(matches!(d.complete_cases(&["zz"]), Err(Error::UnknownColumn(_))));
    }

    #[test]
    fn rejects_ragged_and_duplicate_columns() {
        let a = Column::continuous("a", vec![1.0, 2.0]).unwrap();
        let b = Column::continuous("b", vec![1.0]).unwrap();
        assert!(Dataset::new(vec![a.clone(), b]).is_err());
        assert!(Dataset::new(vec![a.clone(), a]).is_err());
    }
}
