use crate::converter::{SatState, VscMode};
use crate::network::BusId;
use thiserror::Error;

/// Structural problems in a network description.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("network has no buses")]
    NoBuses,
    #[error("duplicate bus id `{0}`")]
    DuplicateBus(BusId),
    #[error("{context}: unknown bus `{bus}`")]
    UnknownBus { context: String, bus: BusId },
    #[error("{0}: impedance must be finite and nonzero")]
    ZeroImpedance(String),
    #[error("element {index}: {reason}")]
    InvalidElement { index: usize, reason: String },
    #[error("island containing bus `{bus}`: {reason}")]
    AngleReference { bus: BusId, reason: String },
    #[error("at most one Thevenin source may carry frequency droop")]
    MultipleGridDroops,
    #[error("state {state:?} is not admissible for a {mode:?} converter")]
    InadmissibleState { mode: VscMode, state: SatState },
    #[error("state vector has {got} entries, model has {want} converters")]
    StateCount { got: usize, want: usize },
    #[error("combination {f} outside [1, {total}]")]
    CombinationOutOfRange { f: usize, total: usize },
    #[error("{count} combinations exceed the enumeration cap of {cap}")]
    EnumerationCap { count: usize, cap: usize },
}
