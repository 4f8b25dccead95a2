//! Test-manifold generators, CSV point-cloud I/O and the subsample → fit
//! pipeline behind the `heatfit` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod io;
pub mod pipeline;
pub mod shapes;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] heatfit::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}: expected {expected} columns, found {found}")]
    Ragged {
        path: String,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: row {row}, column {column}: cannot parse `{cell}` as a number")]
    BadCell {
        path: String,
        row: usize,
        column: usize,
        cell: String,
    },

    #[error("{path}: {message}")]
    Csv { path: String, message: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<HarnessError>,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        HarnessError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
