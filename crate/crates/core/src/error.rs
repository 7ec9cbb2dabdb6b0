use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("domain of `{0}` must be sorted and free of duplicates")]
    UnsortedDomain(String),
    #[error("variable `{0}` declared twice")]
    DuplicateVar(String),
    #[error("`{0}` is a reserved name")]
    ReservedName(String),
    #[error("unknown agent {0}")]
    UnknownAgent(usize),
    #[error("bad topology edge {0}-{1}")]
    BadEdge(usize, usize),
    #[error("a scenario needs at least one agent")]
    NoAgents,
    #[error("value {value} outside the domain of `{var}`")]
    OutOfDomain { var: String, value: i64 },
    #[error("unknown variable `{0}`")]
    UnknownVar(String),
    #[error("local-state universe of agent {agent} exceeds {cap} states")]
    UniverseTooLarge { agent: usize, cap: usize },
}

/// Formula or action syntax error, positioned within the source string.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message} at column {column} in `{source_text}`")]
pub struct ParseError {
    pub message: String,
    pub column: usize,
    pub source_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("state-space budget exceeded: more than {cap} reachable states")]
    StateBudgetExceeded { cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("system required: `{0}` is knowledge-based")]
    SystemRequired(String),
    #[error("program is invalid: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("representation undecided within budget")]
    Undecided,
    #[error("epistemic operator in run-based spec")]
    EpistemicInRunSpec,
    #[error("initial condition has {size} states; at most {cap} can be enumerated")]
    InitCapExceeded { size: usize, cap: usize },
    #[error("`{0}` is not a predicate on global states")]
    NotStatePredicate(String),
    #[error("`{stronger}` is not a strengthening of `{weaker}`")]
    NotStrengthening { stronger: String, weaker: String },
    #[error(transparent)]
    Build(#[from] BuildError),
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("{context}: {source}")]
    Syntax { context: String, source: ParseError },
    #[error("unresolved reference: {0}")]
    Unresolved(String),
    #[error("variable `{0}` has an infinite domain")]
    InfiniteDomain(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error("cannot read `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
}
