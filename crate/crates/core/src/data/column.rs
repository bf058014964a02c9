use std::collections::HashSet;

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Measurement kind of a column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Kind {
    Continuous,
    /// Ordered categories, lowest first. Values are stored as integer codes
    /// `0..levels.len()`.
    Ordinal(Vec<String>),
    Binary,
    Count,
    RightCensored,
}

impl Kind {
    pub fn is_orderable(&self) -> bool {
        !matches!(self, Kind::RightCensored)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kind::Continuous => "continuous",
            Kind::Ordinal(_) => "ordinal",
            Kind::Binary => "binary",
            Kind::Count => "count",
            Kind::RightCensored => "right-censored",
        }
    }
}

/// A right-censored observation: follow-up `time` and whether the event occurred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Surv {
    pub time: f64,
    pub event: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Numeric(Vec<Option<f64>>),
    Censored(Vec<Option<Surv>>),
}

/// A named data vector with a declared measurement kind. Missing cells are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    kind: Kind,
    values: Values,
}

impl Column {
    /// Builds a column, checking every present value against `kind`.
    pub fn new(name: impl Into<String>, kind: Kind, values: Values) -> Result<Self> {
        let name = name.into();
        match (&kind, &values) {
            (Kind::RightCensored, Values::Censored(v)) => {
                for (row, s) in v.iter().enumerate() {
                    if let Some(s) = s {
                        if !(s.time.is_finite() && s.time >= 0.0) {
                            return Err(Error::TypeViolation {
                                column: name,
                                row,
                                expected: "nonnegative finite time",
                                value: s.time.to_string(),
                            });
                        }
                    }
                }
            }
            (Kind::RightCensored, Values::Numeric(_)) | (_, Values::Censored(_)) => {
                return Err(invalid(format!(
                    "column `{name}`: values do not match kind {}",
                    kind.name()
                )));
            }
            (kind, Values::Numeric(v)) => {
                if let Kind::Ordinal(levels) = kind {
                    check_levels(&name, levels)?;
                }
                for (row, x) in v.iter().enumerate() {
                    let Some(x) = *x else { continue };
                    let ok = match kind {
                        Kind::Continuous => x.is_finite(),
                        Kind::Binary => x == 0.0 || x == 1.0,
                        Kind::Count => x.is_finite() && x >= 0.0 && x.fract() == 0.0,
                        Kind::Ordinal(levels) => {
                            x >= 0.0 && x.fract() == 0.0 && (x as usize) < levels.len()
                        }
                        Kind::RightCensored => unreachable!(),
                    };
                    if !ok {
                        return Err(Error::TypeViolation {
                            column: name,
                            row,
                            expected: kind.name(),
                            value: x.to_string(),
                        });
                    }
                }
            }
        }
        Ok(Self { name, kind, values })
    }

    pub fn continuous(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        Self::new(name, Kind::Continuous, Values::Numeric(values.into_iter().map(Some).collect()))
    }

    pub fn binary(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        Self::new(name, Kind::Binary, Values::Numeric(values.into_iter().map(Some).collect()))
    }

    pub fn count(name: impl Into<String>, values: Vec<u64>) -> Result<Self> {
        Self::new(
            name,
            Kind::Count,
            Values::Numeric(values.into_iter().map(|v| Some(v as f64)).collect()),
        )
    }

    /// Ordinal column from level codes (`0` is the lowest level).
    pub fn ordinal(name: impl Into<String>, levels: Vec<String>, codes: Vec<usize>) -> Result<Self> {
        Self::new(
            name,
            Kind::Ordinal(levels),
            Values::Numeric(codes.into_iter().map(|c| Some(c as f64)).collect()),
        )
    }

    pub fn censored(name: impl Into<String>, values: Vec<Surv>) -> Result<Self> {
        Self::new(
            name,
            Kind::RightCensored,
            Values::Censored(values.into_iter().map(Some).collect()),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    pub fn len(&self) -> usize {
        match &self.values {
            Values::Numeric(v) => v.len(),
            Values::Censored(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match &self.values {
            Values::Numeric(v) => v[row].is_none(),
            Values::Censored(v) => v[row].is_none(),
        }
    }

    pub fn n_missing(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_missing(i)).count()
    }

    /// Numeric values with no missing cells; ordinal columns yield their codes.
    pub fn numeric(&self) -> Result<Vec<f64>> {
        match &self.values {
            Values::Numeric(v) => v
                .iter()
                .enumerate()
                .map(|(row, x)| {
                    x.ok_or_else(|| {
                        invalid(format!(
                            "column `{}` has a missing value at row {row}; call complete_cases first",
                            self.name
                        ))
                    })
                })
                .collect(),
            Values::Censored(_) => Err(invalid(format!(
                "column `{}` is right-censored, not numeric",
                self.name
            ))),
        }
    }

    pub fn survival(&self) -> Result<Vec<Surv>> {
        match &self.values {
            Values::Censored(v) => v
                .iter()
                .enumerate()
                .map(|(row, s)| {
                    s.ok_or_else(|| {
                        invalid(format!(
                            "column `{}` has a missing value at row {row}; call complete_cases first",
                            self.name
                        ))
                    })
                })
                .collect(),
            Values::Numeric(_) => Err(invalid(format!(
                "column `{}` is not right-censored",
                self.name
            ))),
        }
    }

    /// Rows in the given order (indices may repeat, as in a bootstrap resample).
    pub fn select(&self, rows: &[usize]) -> Self {
        let values = match &self.values {
            Values::Numeric(v) => Values::Numeric(rows.iter().map(|&i| v[i]).collect()),
            Values::Censored(v) => Values::Censored(rows.iter().map(|&i| v[i]).collect()),
        };
        Self {
            name: self.name.clone(),
            kind: self.kind.clone(),
            values,
        }
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Text form of a cell as written back to CSV. Ordinal codes map to labels.
    pub fn format_cell(&self, row: usize) -> String {
        match &self.values {
            Values::Numeric(v) => match (v[row], &self.kind) {
                (None, _) => "NA".to_string(),
                (Some(x), Kind::Ordinal(levels)) => levels[x as usize].clone(),
                (Some(x), _) => format_real(x),
            },
            Values::Censored(v) => match v[row] {
                None => "NA".to_string(),
                Some(s) => format!("{}:{}", format_real(s.time), s.event as u8),
            },
        }
    }
}

/// Shortest decimal representation that parses back to the same `f64`.
pub fn format_real(x: f64) -> String {
    format!("{x}")
}

fn check_levels(name: &str, levels: &[String]) -> Result<()> {
    if levels.len() < 2 {
        return Err(invalid(format!("ordinal column `{name}` needs at least 2 levels")));
    }
    let mut seen = HashSet::new();
    for l in levels {
        if !seen.insert(l.as_str()) {
            return Err(invalid(format!("ordinal column `{name}`: duplicate level `{l}`")));
        }
    }
    Ok(())
}
