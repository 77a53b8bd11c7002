use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZkError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("singular weight: Riesz order {order} applied to a field with nonzero zero-frequency content")]
    SingularWeight { order: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("blow-up detected after t = {last_finite_time}")]
    BlowUp { last_finite_time: f64 },
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl ZkError {
    pub fn contract(msg: impl Into<String>) -> Self {
        ZkError::Contract(msg.into())
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        ZkError::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for ZkError {
    fn from(e: std::io::Error) -> Self {
        ZkError::Io(e.to_string())
    }
}

impl From<csv::Error> for ZkError {
    fn from(e: csv::Error) -> Self {
        ZkError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for ZkError {
    fn from(e: serde_json::Error) -> Self {
        ZkError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ZkError>;
