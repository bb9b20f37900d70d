use thiserror::Error;

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad configuration or arguments, detected before any chain runs.
    #[error("{0}")]
    Validation(String),

    #[error("{context}: {source}")]
    Runtime {
        context: String,
        #[source]
        source: sahmc::Error,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Process exit code: 1 for validation errors, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) => 1,
            _ => 2,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<sahmc::Error> for HarnessError {
    fn from(e: sahmc::Error) -> Self {
        use sahmc::Error as E;
        match e {
            E::InvalidConfig(_)
            | E::InvalidInput(_)
            | E::InvalidPartition(_)
            | E::InvalidMass(_)
            | E::Parse { .. }
            | E::DimensionMismatch { .. } => HarnessError::Validation(e.to_string()),
            other => HarnessError::Runtime {
                context: "sampler".into(),
                source: other,
            },
        }
    }
}

/// Attaches experiment context to lower-level errors.
pub(crate) trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> HarnessResult<T>;
}

impl<T> Context<T> for sahmc::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> HarnessResult<T> {
        self.map_err(|e| match HarnessError::from(e) {
            HarnessError::Validation(m) => HarnessError::Validation(format!("{}: {m}", what())),
            HarnessError::Runtime { source, .. } => HarnessError::Runtime {
                context: what(),
                source,
            },
            other => other,
        })
    }
}
