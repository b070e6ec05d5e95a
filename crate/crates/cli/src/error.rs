use thiserror::Error;

/// Where a configuration value came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    File { path: String, line: usize },
    Flag,
    Preset(&'static str),
    Default,
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{path}:{line}"),
            Origin::Flag => f.write_str("command line"),
            Origin::Preset(name) => write!(f, "preset {name}"),
            Origin::Default => f.write_str("default"),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: key `{key}`: {message}")]
    Config { key: String, origin: Origin, message: String },

    #[error("{path}:{line}: {message}")]
    Syntax { path: String, line: usize, message: String },

    #[error("configuration: {0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Compute {
        context: String,
        #[source]
        source: cpsphere::Error,
    },
}

impl CliError {
    /// Process exit status: 2 for regime errors, 3 for convergence
    /// failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute { source, .. } if source.is_regime() => 2,
            CliError::Compute { source, .. } if source.is_convergence() => 3,
            CliError::Compute { source, .. } if matches!(source.root(), cpsphere::Error::Consistency(_)) => 3,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
