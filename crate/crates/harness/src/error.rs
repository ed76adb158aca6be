use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Network(#[from] colanet_core::Error),

    #[error(transparent)]
    Data(#[from] colanet_pong::Error),

    #[error("window {window}, column {column}: {message}")]
    Choreography {
        window: usize,
        column: usize,
        message: String,
    },

    #[error("{predictions} predictions for {truth} labelled windows")]
    LengthMismatch { predictions: usize, truth: usize },

    #[error("hyperparameter {name}: {message}")]
    Hyperparameter { name: String, message: String },

    #[error("network has no {0}")]
    MissingPart(String),

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}
