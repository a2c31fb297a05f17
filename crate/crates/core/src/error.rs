//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by constructors and operations with restricted domains.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// The cone angle must lie in the open interval (0, pi/4 - guard).
    #[error("alpha = {value} outside the admissible range (0, {max})")]
    AlphaOutOfRange { value: f64, max: f64 },

    /// `exp_unit` requires a unit-norm generator.
    #[error("generator norm {norm} is not 1 within 1e-10; use exp_general")]
    NonUnitNorm { norm: f64 },

    /// A 3x3 matrix failed the rotation checks.
    #[error("matrix is not a rotation: orthogonality defect {defect}, det {det}")]
    NotARotation { defect: f64, det: f64 },

    /// A covector must not vanish identically.
    #[error("covector components are all zero")]
    ZeroCovector,

    /// `interior_bang_duration` needs sign(phi3) = -sign(u).
    #[error("not a switching configuration: phi3 = {phi3}, u = {u}")]
    NotASwitchingConfiguration { phi3: f64, u: f64 },

    /// The ratio f_S = -Delta_B/Delta_A is undefined on the meridian.
    #[error("Delta_A singular at y2 = {y2}")]
    DeltaASingular { y2: f64 },

    /// Stereographic projection is undefined at the south pole.
    #[error("stereographic projection undefined at the south pole")]
    SouthPole,

    /// Root finding failed where the construction guarantees a root.
    #[error("no root of the switching-time equation in [pi, 2*pi) for s = {s}")]
    NoSwitchingTimeRoot { s: f64 },

    /// The queried point is outside the charted region.
    #[error("point outside the charted region: {reason}")]
    OutsideChart { reason: String },

    /// A target was not reached within the search horizon.
    #[error("target unreachable within horizon {horizon}")]
    Unreachable { horizon: f64 },

    /// Invalid run configuration.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
