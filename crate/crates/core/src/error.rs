use std::fmt;

use thiserror::Error;

/// Owning module of an error, used to build module-qualified error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Module {
    Legendre,
    Lmi,
    Sdp,
    Analysis,
    WaveSim,
    Lyapunov,
    Cli,
}

impl Module {
    pub fn as_str(self) -> &'static str {
        match self {
            Module::Legendre => "legendre",
            Module::Lmi => "lmi_assembly",
            Module::Sdp => "sdp",
            Module::Analysis => "analysis",
            Module::WaveSim => "wave_sim",
            Module::Lyapunov => "lyapunov",
            Module::Cli => "cli",
        }
    }
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("[{module}] domain error: {msg}")]
    Domain { module: Module, msg: String },

    #[error("[{module}] configuration error: {msg}")]
    Config { module: Module, msg: String },

    #[error("[{module}] dimension mismatch: {msg}")]
    Dimension { module: Module, msg: String },

    #[error("[{module}] precondition failed: {msg}")]
    Precondition { module: Module, msg: String },

    #[error("[wave_sim] initial condition not compatible with boundary conditions: {0}")]
    Compatibility(String),

    #[error("[wave_sim] simulation diverged at t = {time}")]
    Divergence { time: f64 },

    #[error("[{module}] numeric failure: {msg}")]
    Numeric { module: Module, msg: String },

    #[error("[cli] i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("[cli] json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn domain(module: Module, msg: impl Into<String>) -> Self {
        Error::Domain { module, msg: msg.into() }
    }

    pub fn config(module: Module, msg: impl Into<String>) -> Self {
        Error::Config { module, msg: msg.into() }
    }

    pub fn dimension(module: Module, msg: impl Into<String>) -> Self {
        Error::Dimension { module, msg: msg.into() }
    }

    pub fn precondition(module: Module, msg: impl Into<String>) -> Self {
        Error::Precondition { module, msg: msg.into() }
    }

    pub fn numeric(module: Module, msg: impl Into<String>) -> Self {
        Error::Numeric { module, msg: msg.into() }
    }

    /// Module-qualified code such as `wave_sim.divergence`.
    pub fn code(&self) -> String {
        let (module, kind) = match self {
            Error::Domain { module, .. } => (module.as_str(), "domain"),
            Error::Config { module, .. } => (module.as_str(), "config"),
            Error::Dimension { module, .. } => (module.as_str(), "dimension"),
            Error::Precondition { module, .. } => (module.as_str(), "precondition"),
            Error::Compatibility(_) => ("wave_sim", "compatibility"),
            Error::Divergence { .. } => ("wave_sim", "divergence"),
            Error::Numeric { module, .. } => (module.as_str(), "numeric"),
            Error::Io(_) => ("cli", "io"),
            Error::Json(_) => ("cli", "json"),
        };
        format!("{module}.{kind}")
    }

    /// Process exit code: 3 for configuration-type errors, 4 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence { .. } | Error::Numeric { .. } => 4,
            _ => 3,
        }
    }
}
