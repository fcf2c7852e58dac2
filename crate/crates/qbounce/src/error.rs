use thiserror::Error;

/// Errors from construction, evaluation, solving, and fitting.
#[derive(Debug, Error)]
pub enum Error {
    /// A type invariant was violated at construction or call time.
    #[error("invalid {what}: {why}")]
    Invalid { what: &'static str, why: String },

    /// Evaluation requested outside the supported coordinate range.
    #[error("z = {z:e} m outside domain [{z_min:e}, {z_max:e}] m")]
    OutOfDomain { z: f64, z_min: f64, z_max: f64 },

    /// Input was NaN or infinite where a finite value is required.
    #[error("non-finite input: {what}")]
    NonFinite { what: &'static str },

    /// The grid does not extend far enough past the classically allowed
    /// region of the highest requested state.
    #[error(
        "domain truncation: turning point {turning_point:e} m within 20% of z_max {z_max:e} m"
    )]
    DomainTruncation { turning_point: f64, z_max: f64 },

    /// A computed eigenvector has the wrong number of interior nodes.
    /// This is the solver's self-diagnostic; it is never downgraded to a
    /// warning.
    #[error("state {index}: expected {expected} interior nodes, counted {found}")]
    NodeCount {
        index: usize,
        expected: usize,
        found: usize,
    },

    /// Hard-wall samples split the grid interior into disconnected
    /// finite-potential regions.
    #[error("potential splits the grid into disconnected finite regions")]
    DisconnectedDomain,

    /// Analytic eigenvalue index beyond the tabulated range.
    #[error("eigenvalue index {n} unsupported (table holds {max} entries)")]
    UnsupportedIndex { n: usize, max: usize },

    /// Zero transmitted count: the attenuation coefficient diverges.
    #[error("transmitted count is zero; attenuation coefficient diverges")]
    InfiniteAttenuation,

    /// Transmitted count exceeds the entrance density.
    #[error("n_out = {n_out:e} exceeds n_max = {n_max:e}")]
    InconsistentCounts { n_out: f64, n_max: f64 },

    /// Overlap area at or above one admits no finite attenuation.
    #[error("overlap area {area} >= 1: total absorption")]
    TotalAbsorption { area: f64 },

    /// Fewer solved states available than population weights.
    #[error("need {needed} states, spectrum holds {available}")]
    MissingStates { needed: usize, available: usize },

    /// The data cannot constrain a fit.
    #[error("unfittable data: {0}")]
    UnfittableData(String),

    /// A scan row failed; carries the offending slit width.
    #[error("slit {slit_m:e} m: {source}")]
    AtSlit {
        slit_m: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            why: why.into(),
        }
    }
}
