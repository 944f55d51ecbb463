use thiserror::Error;

/// Errors raised by graph construction, structural queries and estimation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("node index {0} is out of range")]
    NodeOutOfRange(usize),

    #[error("invalid node name `{0}`")]
    InvalidName(String),

    #[error("duplicate node `{0}`")]
    DuplicateNode(String),

    #[error("self-loop at `{0}`")]
    SelfLoop(String),

    #[error("conflicting edges between `{0}` and `{1}`")]
    ConflictingEdges(String, String),

    #[error("edge `{edge}` is not allowed in a {class} graph")]
    EdgeNotAllowed { edge: String, class: &'static str },

    #[error("directed cycle through `{0}`")]
    Cycle(String),

    #[error("operation requires a {expected} graph, got {found}")]
    WrongClass { expected: &'static str, found: &'static str },

    #[error("graph is not closed under Meek's rules: rule {rule} orients {edge}")]
    NotClosed { rule: u8, edge: String },

    #[error("graph is not a CPDAG: {0}")]
    NotCpdag(String),

    #[error("orientation is inconsistent with the graph: {0}")]
    Inconsistent(String),

    #[error("invalid background knowledge: {0}")]
    BadBackground(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("path is not of definite status")]
    NotDefiniteStatus,

    #[error("node sets overlap: {0}")]
    Overlap(String),

    #[error("empty node set: {0}")]
    EmptySet(&'static str),

    #[error("not amenable relative to the given treatments and outcomes")]
    NotAmenable,

    #[error("outcomes {0} are not possible descendants of the treatments")]
    OutcomesNotReachable(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("equivalence class too large: {0} undirected edges (limit {1})")]
    TooLarge(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rank-deficient design matrix")]
    RankDeficient,

    #[error("singular matrix")]
    Singular,

    #[error("too few observations: {n} rows for {k} parameters")]
    TooFewRows { n: usize, k: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("csv: {0}")]
    Csv(String),

    #[error("rejection budget of {0} draws exhausted")]
    RejectionBudget(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
