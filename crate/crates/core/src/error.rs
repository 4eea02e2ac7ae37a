use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Repository-wide error taxonomy. `code()` is the stable machine-readable
/// name surfaced by the HTTP layer and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed pid: {0}")]
    MalformedPid(String),
    #[error("malformed representation path: {0}")]
    MalformedPath(String),
    #[error("malformed timestamp: {0}")]
    MalformedTimestamp(String),
    #[error("no version of {0} exists at the requested time")]
    NoVersionAtTime(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("xml syntax error: {0}")]
    XmlSyntax(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("invariant violation: {}", .0.join("; "))]
    InvariantViolation(Vec<String>),
    #[error("datastream {0} has the wrong control group for this operation")]
    WrongControlGroup(String),
    #[error("object already exists: {0}")]
    DuplicatePid(String),
    #[error("component already exists: {0}")]
    DuplicateComponent(String),
    #[error("reserved component id: {0}")]
    ReservedId(String),
    #[error("datastream {0} is bound by a disseminator")]
    BoundDatastream(String),
    #[error("missing dependency: {0}")]
    MissingDependency(String),
    #[error("property is system-managed: {0}")]
    ImmutableProperty(String),
    #[error("unknown property: {0}")]
    UnknownProperty(String),
    #[error("managed content not staged: {0}")]
    MissingContent(String),
    #[error("upstream fetch failed: {0}")]
    UpstreamFetchFailed(String),
    #[error("upstream returned status {status} for {url}")]
    UpstreamBadStatus { url: String, status: u16 },
    #[error("rdf syntax error: {0}")]
    RdfSyntax(String),
    #[error("relation subject must be {expected}, found {found}")]
    SubjectRestriction { expected: String, found: String },
    #[error("reserved predicate in relations: {0}")]
    ReservedPredicate(String),
    #[error("query syntax error: {0}")]
    QuerySyntax(String),
    #[error("unknown method: {0}")]
    UnknownMethod(String),
    #[error("missing parameter: {0}")]
    MissingParameter(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("injected fault at step {0}")]
    FaultInjected(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedPid(_) => "MalformedPid",
            Error::MalformedPath(_) => "MalformedPath",
            Error::MalformedTimestamp(_) => "MalformedTimestamp",
            Error::NoVersionAtTime(_) => "NoVersionAtTime",
            Error::NotFound(_) => "NotFound",
            Error::XmlSyntax(_) => "XmlSyntax",
            Error::SchemaViolation(_) => "SchemaViolation",
            Error::InvariantViolation(_) => "InvariantViolation",
            Error::WrongControlGroup(_) => "WrongControlGroup",
            Error::DuplicatePid(_) => "DuplicatePid",
            Error::DuplicateComponent(_) => "DuplicateComponent",
            Error::ReservedId(_) => "ReservedId",
            Error::BoundDatastream(_) => "BoundDatastream",
            Error::MissingDependency(_) => "MissingDependency",
            Error::ImmutableProperty(_) => "ImmutableProperty",
            Error::UnknownProperty(_) => "UnknownProperty",
            Error::MissingContent(_) => "MissingContent",
            Error::UpstreamFetchFailed(_) => "UpstreamFetchFailed",
            Error::UpstreamBadStatus { .. } => "UpstreamBadStatus",
            Error::RdfSyntax(_) => "RdfSyntax",
            Error::SubjectRestriction { .. } => "SubjectRestriction",
            Error::ReservedPredicate(_) => "ReservedPredicate",
            Error::QuerySyntax(_) => "QuerySyntax",
            Error::UnknownMethod(_) => "UnknownMethod",
            Error::MissingParameter(_) => "MissingParameter",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::FaultInjected(_) => "FaultInjected",
            Error::Io(_) => "Io",
        }
    }

    pub(crate) fn xml(err: impl std::fmt::Display) -> Self {
        Error::XmlSyntax(err.to_string())
    }
}
