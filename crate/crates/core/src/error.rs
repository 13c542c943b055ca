use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit {qubit} out of range for {n} qubits")]
    QubitOutOfRange { qubit: usize, n: usize },
    #[error("a stabilizer state needs at least one qubit")]
    EmptyState,
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate measurement label {0:?}")]
    DuplicateLabel(String),
    #[error("unknown measurement label {0:?}")]
    UnknownLabel(String),
    #[error("location {0} does not exist in the circuit")]
    UnknownLocation(usize),
    #[error("fault {fault} does not belong to the alphabet of location {location}")]
    FaultMismatch { location: usize, fault: String },
    #[error("subset weight {weight} exceeds the {available} locations of class {class}")]
    SubsetTooLarge {
        class: usize,
        weight: usize,
        available: usize,
    },
    #[error("distance must be odd and at least 3, got {0}")]
    InvalidDistance(usize),
    #[error("unsupported combination d={d}, v={v}")]
    Unsupported { d: usize, v: usize },
    #[error("invalid verification pair ({0}, {1})")]
    InvalidPair(usize, usize),
    #[error("expected {expected} outcomes, got {got}")]
    OutcomeCount { expected: usize, got: usize },
    #[error("logical operator is indeterminate after ideal correction (gauge entanglement)")]
    GaugeEntanglement,
    #[error("stabilizer {0} is not deterministic on the data block")]
    IndeterminateSyndrome(usize),
    #[error("no estimates supplied")]
    EmptyEstimates,
    #[error("estimates do not cover subset {0}")]
    CoverageGap(String),
    #[error("no run without faults was accepted")]
    NoAcceptedRuns,
    #[error("curves do not cross on the search interval")]
    NoCrossing,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
