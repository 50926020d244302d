use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must be nonnegative, got {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid class parameters: need 0 < alpha <= beta, got alpha={alpha}, beta={beta}")]
    InvalidClass { alpha: f64, beta: f64 },

    #[error("invalid function parameter `{name}` = {value}")]
    InvalidFunction { name: &'static str, value: f64 },

    #[error("infeasible state: {0}")]
    Infeasible(String),

    #[error("agent index {index} out of range for a population of {n}")]
    Index { index: usize, n: usize },

    #[error("an update needs two distinct agents, got ({0}, {0})")]
    SameAgent(usize),

    #[error(
        "dual bisection bracket failed: sum at lower multiplier {low_sum}, \
         at upper multiplier {high_sum}, target {target}"
    )]
    Bracket {
        low_sum: f64,
        high_sum: f64,
        target: f64,
    },

    #[error("optimum does not belong to this state: {0}")]
    MismatchedOptimum(String),

    #[error("optimum oracle violated: f_opt = {f_opt} exceeds f_est = {f_est}")]
    OracleViolation { f_opt: f64, f_est: f64 },

    #[error("no steps accumulated")]
    EmptyLedger,

    #[error("invalid value for `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    TomlDe(#[from] toml::de::Error),

    #[error("config write error: {0}")]
    TomlSer(#[from] toml::ser::Error),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }
}
