use thiserror::Error;

/// Errors raised by the relational machine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("duplicate attribute `{0}`")]
    DuplicateAttribute(String),
    #[error("kind mismatch: {0}")]
    KindMismatch(String),
    #[error("headers do not match: {0}")]
    HeaderMismatch(String),
    #[error("duplicate output name `{0}`")]
    DuplicateOutName(String),
    #[error("empty header")]
    EmptyHeader,
    #[error("tuple does not conform to header: {0}")]
    TupleMismatch(String),
    #[error("key violation in `{relation}`: {detail}")]
    KeyViolation { relation: String, detail: String },
    #[error("foreign key violation in `{relation}`: {detail}")]
    ForeignKeyViolation { relation: String, detail: String },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{0}` already exists")]
    DuplicateRelation(String),
    #[error("NaN is not a valid FLOAT value")]
    NanRejected,
    #[error("arithmetic error: {0}")]
    Arithmetic(String),
}
