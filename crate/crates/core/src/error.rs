use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("symbol index {index} is outside an alphabet of {size} letters")]
    AlphabetMismatch { index: usize, size: usize },

    #[error("unknown character {ch:?} at position {position}")]
    UnknownSymbol { position: usize, ch: char },

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("input contains no strings")]
    EmptyInput,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Condition U^(eps) is only defined when at least one site is nonempty.
    #[error("no nonempty consensus site (j* = 0); the uniformity condition is undefined")]
    NoConsensusSite,

    #[error("resource cap exceeded: {0}")]
    CapExceeded(String),

    #[error("component {component} is degenerate (responsibility mass {mass:e})")]
    DegenerateComponent { component: usize, mass: f64 },

    #[error("non-finite log-density for string {index} under component {component}")]
    NonFiniteDensity { index: usize, component: usize },

    #[error("all {chains} restart chains were degenerate")]
    AllChainsDegenerate { chains: usize },
}

impl Error {
    /// Whether the failure came from a configured resource limit rather than bad input.
    pub fn is_resource_cap(&self) -> bool {
        matches!(self, Error::CapExceeded(_))
    }
}
