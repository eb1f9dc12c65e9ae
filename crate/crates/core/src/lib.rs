//! A blackboard-style property store with a lattice-agnostic fixed-point
//! solver.
//!
//! Independently written analyses declare which property kinds they derive
//! and which ones they use. The [`Blackboard`] schedules their activations,
//! propagates interim results to dependent analyses, suppresses interim
//! values on incompatible edges, and drives the whole computation to a fixed
//! point in three phases once the store becomes quiescent: default values,
//! closed strongly connected components, and commit-order finalization of
//! collaboratively computed properties.

pub mod entity;
pub mod lattice;
pub mod laws;
pub mod registry;
pub mod report;
pub mod result;
pub mod scheduler;
pub mod solver;
pub mod trace;

pub use entity::{EntityId, MemberRef, Name};
pub use lattice::{
    check_monotone, Chain, Counter, Direction, KindDefinition, KindTable, Lattice,
    LatticeDescriptor, LatticeError, ObservedDependee, PointwiseSets, Powerset, PropertyKey,
    PropertyKindId, PropertyState, Value,
};
pub use registry::{
    validate, Acceptance, ActivationMode, AnalysisSpecification, Derivation, RegistryError,
    Schedule, UseDeclaration,
};
pub use result::{AnalysisResult, Continuation, Property};
pub use scheduler::{Scheduler, SchedulerPolicy};
pub use trace::{ActivationInfo, SolverObserver, TaskKind, TraceRecord};
pub use solver::{
    Activation, Blackboard, Registrar, SolvedStore, SolverConfig, SolverError, SolverStats,
};
