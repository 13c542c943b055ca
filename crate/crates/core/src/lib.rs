//! Stabilizer simulation of Bacon-Shor error-correction cycles.

pub mod bacon_shor;
pub mod circuit;
pub mod error;
pub mod ft_search;
pub mod pauli;
pub mod protocols;
pub mod sampler;
pub mod sim;
pub mod tableau;

pub use bacon_shor::{
    build_lookup_table, default_verification_pairs, ghz_prep_circuit, ideal_correct_and_readout,
    logical_prep_circuit, shor_round_circuit, steane_cycle_circuit, syndrome_from_transversal,
    CodeLayout, GhzSpec, LogicalState, LookupTable, SteaneRegisters,
};
pub use circuit::{
    location_census, sample_fault_config, subset_cardinality, Census, Circuit, Fault, FaultConfig,
    Gate, Location, NoiseClass, SubsetIndex,
};
pub use error::Error;
pub use ft_search::{
    candidates, check_ft, counterexample_of_order, propagate, reduce_x_weight, search, search_all,
    Candidate, CandidateReport, Counterexample, Verdict,
};
pub use pauli::{conjugate_pauli, Clifford, Pauli1, PauliString};
pub use protocols::{
    adaptive_stop, evaluate_curve, ghz_rejection_probability, improvement_rate, log_grid,
    pseudo_threshold, rejection_curve, round_bounds, run_shor, run_steane, AdaptiveState,
    CurvePoint, Flavor, GhzRunner, Method, Protocol, ProtocolSpec, RatePoint, RejectionPoint,
    TimeDecoder,
};
pub use sampler::{
    enumerate_subsets, estimate_all, estimate_subset, extract_coefficients, logical_rate_bounds,
    subset_probability, BoundMode, Coefficient, NoiseParams, RunOutcome, Runner, SamplerSettings,
    SubsetEstimate,
};
pub use sim::{execute, execute_frame, run_gates, Backend, Outcomes, PauliFrame, TableauBackend};
pub use tableau::{Basis, Expectation, StabilizerState};
