use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("IoError: {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("DecodeError: {}: {message}", path.display())]
    Decode { path: PathBuf, message: String },
    #[error("DegenerateRect: corner latitudes or longitudes coincide")]
    DegenerateRect,
    #[error("InvalidGeoRect: {0}")]
    InvalidGeoRect(String),
    #[error("TooSmall: {0}")]
    TooSmall(String),
    #[error("OutOfBounds: {0}")]
    OutOfBounds(String),
    #[error("InsufficientPairs: need at least 4 correspondences, got {0}")]
    InsufficientPairs(usize),
    #[error("DegenerateConfiguration: {0}")]
    DegenerateConfiguration(String),
    #[error("NoModelFound: no sample reached 4 inliers")]
    NoModelFound,
    #[error("PointAtInfinity: projective scale {0:e} is below 1e-12")]
    PointAtInfinity(f64),
    #[error("FormatError: {0}")]
    Format(String),
    #[error("MissingImage: {}", .0.display())]
    MissingImage(PathBuf),
    #[error("InvalidTileSpec: {0}")]
    InvalidTileSpec(String),
    #[error("WorldTooSmall: {0}")]
    WorldTooSmall(String),
    #[error("FootprintOutOfBounds: {0}")]
    FootprintOutOfBounds(String),
    #[error("MissingGroundTruth: {0}")]
    MissingGroundTruth(String),
    #[error("ExternalMatcherUnavailable: {0}")]
    ExternalMatcherUnavailable(String),
    #[error("ExternalMatcherError: {0}")]
    ExternalMatcher(String),
    #[error("ConfigError: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "IoError",
            Error::Decode { .. } => "DecodeError",
            Error::DegenerateRect => "DegenerateRect",
            Error::InvalidGeoRect(_) => "InvalidGeoRect",
            Error::TooSmall(_) => "TooSmall",
            Error::OutOfBounds(_) => "OutOfBounds",
            Error::InsufficientPairs(_) => "InsufficientPairs",
            Error::DegenerateConfiguration(_) => "DegenerateConfiguration",
            Error::NoModelFound => "NoModelFound",
            Error::PointAtInfinity(_) => "PointAtInfinity",
            Error::Format(_) => "FormatError",
            Error::MissingImage(_) => "MissingImage",
            Error::InvalidTileSpec(_) => "InvalidTileSpec",
            Error::WorldTooSmall(_) => "WorldTooSmall",
            Error::FootprintOutOfBounds(_) => "FootprintOutOfBounds",
            Error::MissingGroundTruth(_) => "MissingGroundTruth",
            Error::ExternalMatcherUnavailable(_) => "ExternalMatcherUnavailable",
            Error::ExternalMatcher(_) => "ExternalMatcherError",
            Error::Config(_) => "ConfigError",
        }
    }

    /// The part of the message after the kind, on a single line.
    ///
    /// For I/O and missing-file errors this is just the offending path.
    pub fn detail(&self) -> String {
        let text = match self {
            Error::Io { path, .. } | Error::MissingImage(path) => path.display().to_string(),
            other => {
                let full = other.to_string();
                let prefix = format!("{}: ", other.kind());
                full.strip_prefix(&prefix).map(str::to_owned).unwrap_or(full)
            }
        };
        text.replace(['\n', '\r'], " ")
    }
}
