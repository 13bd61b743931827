use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("respondent {respondent_id}: negative predicted-support entry")]
    NegativeEntry { respondent_id: String },
    #[error("respondent {respondent_id}: predicted support is all zero")]
    AllZeroPrediction { respondent_id: String },
    #[error("respondent {respondent_id}: vote {vote} out of range for {m} answers")]
    VoteOutOfRange {
        respondent_id: String,
        vote: usize,
        m: usize,
    },
    #[error("respondent {respondent_id}: confidence {value} outside its declared scale")]
    ConfidenceOutOfRange { respondent_id: String, value: f64 },
    #[error("respondent {respondent_id}: expected {expected} predicted-support entries, got {got}")]
    PredictionLength {
        respondent_id: String,
        expected: usize,
        got: usize,
    },
    #[error("respondent {respondent_id}: non-finite value")]
    NonFinite { respondent_id: String },
    #[error("invalid answer set: {0}")]
    InvalidAnswerSet(String),
    #[error("response set is empty")]
    EmptyResponseSet,
    #[error("answer index {index} out of range for {m} answers")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("response is not a member of the response set")]
    ResponseNotInSet,
    #[error("problem {problem_id} has no ground-truth answer")]
    MissingGroundTruth { problem_id: String },

    #[error("training matrix is empty")]
    EmptyMatrix,
    #[error("training labels contain a single class")]
    SingleClassInput,
    #[error("k = {k} exceeds the {n} available training rows")]
    KTooLarge { k: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite entry in training matrix at row {row}, column {col}")]
    NonFiniteMatrix { row: usize, col: usize },
    #[error("unknown learner `{0}`")]
    UnknownLearner(String),
    #[error("unsupported model file: {0}")]
    ModelFormat(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("method `{method}` requires a trained model")]
    ModelRequired { method: String },
    #[error("unknown aggregation method `{0}`")]
    UnknownMethod(String),

    #[error("problem {problem_id}: pool of {pool} responses is smaller than group size {size}")]
    PoolTooSmall {
        problem_id: String,
        pool: usize,
        size: usize,
    },
    #[error("insufficient groups: {0}")]
    InsufficientGroups(String),
    #[error("training rows from held-out group {group_id} leaked into its fold")]
    Leakage { group_id: String },
    #[error("outcomes are not paired: {0}")]
    UnpairedOutcomes(String),
    #[error("repeat count must be positive")]
    InvalidRepeatCount,
    #[error("background sample is empty")]
    EmptyBackground,

    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}
