use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),

    #[error("row {row}, column `{column}`: expected a number, found `{value}`")]
    NotNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column `{column}`: missing value")]
    MissingValue { row: usize, column: String },

    #[error("target column `{column}` must hold exactly two categories, found {found:?}")]
    TargetCategories { column: String, found: Vec<String> },

    #[error("no rows match department `{0}`")]
    EmptySelection(String),

    #[error("only one class present ({0}); both attrition and retention rows are required")]
    SingleClass(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("nothing to explain: the classifier predicts retention for every instance")]
    NothingToExplain,

    #[error("LP solver failed on a problem with {variables} variables and {constraints} constraints: {reason}")]
    Solver {
        variables: usize,
        constraints: usize,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
