use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    /// `t` sits within `epsilon` of a focal time of some mode.
    #[error("caustic at t = {t}: |sin(omega_k t)| = {sin_value:e} for mode {mode}")]
    Caustic { t: f64, mode: usize, sin_value: f64 },

    #[error("massless lattice has no normalizable vacuum (zero mode)")]
    MasslessVacuum,

    #[error("light cone wraps the periodic lattice: {0}")]
    PeriodicWrap(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("region is empty")]
    EmptyRegion,

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("descriptors refer to different regions")]
    RegionMismatch,

    #[error("local operation has support outside its region (site {site}, value {value:e})")]
    SupportViolation { site: usize, value: f64 },

    #[error("matrix is not symplectic (residual {residual:e})")]
    NotSymplectic { residual: f64 },

    #[error("complement descriptors differ by {distance:e} (tolerance {tolerance:e})")]
    ComplementMismatch { distance: f64, tolerance: f64 },

    #[error("cannot match region frames: residual {residual:e} after degenerate-block alignment")]
    DegenerateSpectrum { residual: f64 },

    #[error("branch {branch} is not vacuum-equivalent on the region (deviation {deviation:e})")]
    BranchNotVacuumEquivalent { branch: usize, deviation: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("reduced states differ: Gram residual {residual:e} exceeds {tolerance:e}")]
    RdmMismatch { residual: f64, tolerance: f64 },

    #[error("rank is numerically ambiguous: singular value {singular_value:e} inside [{low:e}, {high:e}]")]
    RankInstability { singular_value: f64, low: f64, high: f64 },

    #[error("Hilbert space dimension {dim} exceeds limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// True for errors caused by bad input rather than a failed physical assertion.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::DegenerateSpectrum { .. } | Error::RdmMismatch { .. })
    }
}
