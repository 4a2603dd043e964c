use alloc::string::String;

/// Errors raised while building models, assembling conditions or simulating.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: String,
        found: String,
    },
    #[error("only single-input single-output plants are supported (got {inputs} inputs, {outputs} outputs)")]
    NotSiso { inputs: usize, outputs: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("argument {value} outside the domain [{lower}, {upper}]")]
    Domain { value: f64, lower: f64, upper: f64 },
    #[error("decay-rate estimation failed: {0}")]
    Estimation(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn dim_mismatch(
    context: &'static str,
    expected: impl core::fmt::Display,
    found: impl core::fmt::Display,
) -> Error {
    use alloc::string::ToString;
    Error::Dimension {
        context,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
