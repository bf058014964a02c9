//! Dataset ingestion, column typing, design matrices and spline bases.

mod column;
mod csv_io;
mod dataset;
mod design;
mod spline;

pub use column::{format_real, Column, Kind, Surv, Values};
pub use csv_io::{load_csv, read_csv, write_csv, ColumnSpec, FieldKind, Schema};
pub use dataset::Dataset;
pub use design::{build_design, DesignMatrix, Term};
pub use spline::{default_knot_quantiles, default_knots, quantile, rcs_basis, rcs_eval, SplineBasis};
