use std::fmt;

use nalgebra::DMatrix;

use crate::data::column::Kind;
use crate::data::csv_io::split_top_level;
use crate::data::dataset::Dataset;
use crate::data::spline::rcs_basis;
use crate::error::{invalid, Error, Result};

/// One right-hand-side term of a model.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Linear(String),
    Log(String),
    /// Reference-cell dummies; the lowest observed level is the reference.
    Categorical(String),
    Rcs { column: String, knots: usize },
    /// Raw powers `x, x^2, …, x^degree`.
    Poly { column: String, degree: usize },
}

impl Term {
    pub fn column(&self) -> &str {
        match self {
            Term::Linear(c) | Term::Log(c) | Term::Categorical(c) => c,
            Term::Rcs { column, .. } | Term::Poly { column, .. } => column,
        }
    }

    /// Parses `age`, `log(x)`, `cat(race)`, `rcs(bmi,3)` or `poly(age,2)`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let Some(open) = t.find('(') else {
            if t.is_empty() || !t.chars().all(|c| c.is_alphanumeric() || "_.".contains(c)) {
                return Err(invalid(format!("bad term `{t}`")));
            }
            return Ok(Term::Linear(t.to_string()));
        };
        let body = t[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| invalid(format!("unbalanced parentheses in term `{t}`")))?;
        let args: Vec<&str> = body.split(',').map(str::trim).collect();
        let int_arg = |i: usize| -> Result<usize> {
            args.get(i)
                .and_then(|a| a.parse().ok())
                .ok_or_else(|| invalid(format!("term `{t}` needs an integer argument")))
        };
        let column = args[0].to_string();
        match (&t[..open], args.len()) {
            ("log", 1) => Ok(Term::Log(column)),
            ("cat", 1) => Ok(Term::Categorical(column)),
            ("rcs", 1) => Ok(Term::Rcs { column, knots: 3 }),
            ("rcs", 2) => Ok(Term::Rcs { column, knots: int_arg(1)? }),
            ("poly", 2) => Ok(Term::Poly { column, degree: int_arg(1)? }),
            _ => Err(invalid(format!("unknown term `{t}`"))),
        }
    }

    /// Parses a `+`- or comma-separated list of terms.
    pub fn parse_list(text: &str) -> Result<Vec<Self>> {
        split_top_level(text, ',')
            .into_iter()
            .flat_map(|s| split_top_level(s, '+'))
            .filter(|s| !s.trim().is_empty())
            .map(Term::parse)
            .collect()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Linear(c) => write!(f, "{c}"),
            Term::Log(c) => write!(f, "log({c})"),
            Term::Categorical(c) => write!(f, "cat({c})"),
            Term::Rcs { column, knots } => write!(f, "rcs({column},{knots})"),
            Term::Poly { column, degree } => write!(f, "poly({column},{degree})"),
        }
    }
}

/// Covariate matrix without an intercept column; fitters add their own intercept(s).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub matrix: DMatrix<f64>,
    pub term_names: Vec<String>,
    /// Source column of each design column.
    pub sources: Vec<String>,
}

impl DesignMatrix {
    /// Intercept-only design with `n` rows and no columns.
    pub fn empty(n: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(n, 0),
            term_names: Vec::new(),
            sources: Vec::new(),
        }
    }

    pub fn from_columns(names: &[&str], columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.first().map(Vec::len).unwrap_or(0);
        if columns.len() != names.len() || columns.iter().any(|c| c.len() != n) {
            return Err(invalid("design columns must be named and of equal length"));
        }
        Ok(Self {
            matrix: DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i]),
            term_names: names.iter().map(|s| s.to_string()).collect(),
            sources: names.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.matrix.row(i).iter().copied().collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            matrix: self.matrix.select_rows(rows),
            term_names: self.term_names.clone(),
            sources: self.sources.clone(),
        }
    }

    /// Appends the columns of `other` (same row count).
    pub fn hstack(&self, other: &DesignMatrix) -> Result<Self> {
        if self.nrows() != other.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.nrows(),
                got: other.nrows(),
            });
        }
        let p = self.ncols();
        let matrix = DMatrix::from_fn(self.nrows(), p + other.ncols(), |i, j| {
            if j < p {
                self.matrix[(i, j)]
            } else {
                other.matrix[(i, j - p)]
            }
        });
        let mut term_names = self.term_names.clone();
        term_names.extend(other.term_names.iter().cloned());
        let mut sources = self.sources.clone();
        sources.extend(other.sources.iter().cloned());
        Ok(Self {
            matrix,
            term_names,
            sources,
        })
    }

    /// Fails if the columns together with an intercept are linearly dependent.
    pub fn check_rank(&self) -> Result<()> {
        let n = self.nrows();
        let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / (n as f64).sqrt(); n]];
        for j in 0..self.ncols() {
            let mut v: Vec<f64> = self.matrix.column(j).iter().copied().collect();
            let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for q in &basis {
                let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, qi)| *x -= d * qi);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm0 == 0.0 || norm <= 1e-9 * norm0 {
                return Err(Error::RankDeficient(self.term_names[j].clone()));
            }
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
        Ok(())
    }
}

/// Builds the covariate matrix for `terms`. Column order follows the term list.
pub fn build_design(d: &Dataset, terms: &[Term]) -> Result<DesignMatrix> {
    let n = d.n_rows();
    let mut names = Vec::new();
    let mut sources = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for term in terms {
        let col = d.column(term.column())?;
        let x = col.numeric()?;
        let src = term.column().to_string();
        match term {
            Term::Linear(c) => {
                names.push(c.clone());
                cols.push(x);
            }
            Term::Log(c) => {
                if let Some(bad) = x.iter().find(|&&v| v <= 0.0) {
                    return Err(invalid(format!("log({c}) of nonpositive value {bad}")));
                }
                names.push(term.to_string());
                cols.push(x.iter().map(|v| v.ln()).collect());
            }
            Term::Categorical(c) => {
                let mut levels = x.clone();
                levels.sort_by(f64::total_cmp);
                levels.dedup();
                if levels.len() < 2 {
                    return Err(invalid(format!("categorical term `{c}` has fewer than 2 observed levels")));
                }
                for &lvl in &levels[1..] {
                    let label = match col.kind() {
                        Kind::Ordinal(labels) => labels[lvl as usize].clone(),
                        _ => format!("{lvl}"),
                    };
                    names.push(format!("{c}={label}"));
                    cols.push(x.iter().map(|&v| (v == lvl) as u8 as f64).collect());
                }
                sources.extend(std::iter::repeat_n(src.clone(), levels.len() - 2));
            }
            Term::Rcs { column, knots } => {
                let basis = rcs_basis(&x, *knots, None)?;
                for j in 0..basis.matrix.ncols() {
                    names.push(if j == 0 {
                        column.clone()
                    } else {
                        format!("{column}'{}", "'".repeat(j - 1))
                    });
                    cols.push(basis.matrix.column(j).iter().copied().collect());
                }
                sources.extend(std::iter::repeat_n(src.clone(), basis.matrix.ncols() - 1));
            }
            Term::Poly { column, degree } => {
                if *degree == 0 {
                    return Err(invalid("polynomial degree must be at least 1"));
                }
                for k in 1..=*degree {
                    names.push(if k == 1 { column.clone() } else { format!("{column}^{k}") });
                    cols.push(x.iter().map(|v| v.powi(k as i32)).collect());
                }
                sources.extend(std::iter::repeat_n(src.clone(), degree - 1));
            }
        }
        sources.push(src);
    }
    let dm = DesignMatrix {
        matrix: DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]),
        term_names: names,
        sources,
    };
    if dm.matrix.iter().any(|v| !v.is_finite()) {
        return Err(invalid("design matrix has non-finite entries"));
    }
    dm.check_rank()?;
    Ok(dm)
}
