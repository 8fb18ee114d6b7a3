use thiserror::Error;

use crate::spectra::GeometryKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("mode {key} is not admissible on {geometry:?}")]
    InadmissibleMode { key: String, geometry: GeometryKind },

    #[error("{op} does not support geometry {kind:?}")]
    UnsupportedGeometry { op: &'static str, kind: GeometryKind },

    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Vec<f64>),

    #[error("Gevrey weight overflow: sigma * lambda^alpha = {exponent} for lambda = {eigenvalue}")]
    WeightOverflow { eigenvalue: f64, exponent: f64 },

    #[error("mismatched geometries: {0:?} vs {1:?}")]
    GeometryMismatch(GeometryKind, GeometryKind),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("blow-up at t = {t}: energy {energy}")]
    BlowUp { t: f64, energy: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
