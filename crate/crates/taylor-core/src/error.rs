use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("accuracy error: {what} (achieved {achieved:.3e})")]
    Accuracy { what: String, achieved: f64 },
    #[error("near-diagonal kernel evaluation (chi - 1 = {0:.3e}); use the singular-correction path")]
    NearDiagonal(f64),
    #[error("system is singular at lambda = {lambda} (resonance)")]
    Resonance { lambda: f64 },
    #[error("null space has dimension > 1 at lambda = {lambda} (s1 = {s1:.3e}, s2 = {s2:.3e})")]
    Multiplicity { lambda: f64, s1: f64, s2: f64 },
    #[error("target ({r}, {z}) is {distance:.3e} from the boundary; minimum is {min:.3e}")]
    Proximity { r: f64, z: f64, distance: f64, min: f64 },
    #[error("target ({r}, {z}) lies outside the domain")]
    Outside { r: f64, z: f64 },
    #[error("topology error: {0}")]
    Topology(String),
}

pub type Result<T> = std::result::Result<T, Error>;
