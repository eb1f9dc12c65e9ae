//! The blackboard: property store, activation dispatch and the phased
//! fixed-point loop.

mod core;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::{Condvar, Mutex};
use thiserror::Error;

use crate::entity::EntityId;
use crate::lattice::{
    KindTable, LatticeError, MonotonicityViolation, PropertyKey, PropertyKindId, PropertyState,
    Value,
};
use crate::registry::{ActivationMode, InitialAnalysisFunction, RegistryError, Schedule};
use crate::report::ResultsDocument;
use crate::result::Property;
use crate::scheduler::SchedulerPolicy;
use crate::trace::{ActivationInfo, SolverObserver, TraceRecord};

use self::core::{Core, Env, Origin, Task, TaskBody, TaskHeader};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("the store cannot be read while analyses are being registered ({0})")]
    RegistrationPhaseViolation(String),
    #[error("{0} already has a value")]
    AlreadySet(String),
    #[error("{0}")]
    PhaseViolation(String),
    #[error("analysis {analysis} queried {kind}, which it does not declare")]
    UndeclaredUse { analysis: String, kind: String },
    #[error("analysis {analysis} produced a result for {kind}, which it does not derive")]
    ForeignKind { analysis: String, kind: String },
    #[error("{key} is final ({old}) and cannot become {new}")]
    FinalOverwrite { key: String, old: String, new: String },
    #[error("{key}: {violation}")]
    Monotonicity {
        key: String,
        violation: MonotonicityViolation,
    },
    #[error("analysis {analysis}: {reason}")]
    InvalidResult { analysis: String, reason: String },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("unknown analysis {0}")]
    UnknownAnalysis(String),
    #[error("analysis {0} did not install an analysis function")]
    MissingAnalysisFunction(String),
    #[error("analysis {analysis} panicked on {entity}: {message}")]
    AnalysisPanicked {
        analysis: String,
        entity: String,
        message: String,
    },
    #[error("activation budget of {budget} exhausted after {activations} activations")]
    NonTermination { activations: u64, budget: u64 },
    #[error("{count} properties are not final after solving, e.g. {}", sample.join(", "))]
    Unresolved { count: usize, sample: Vec<String> },
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub policy: SchedulerPolicy,
    pub workers: usize,
    /// Shuffles the initial task order and seeds the random scheduler.
    pub seed: Option<u64>,
    /// Makes monotonicity violations fatal instead of logging them.
    pub check_monotonicity: bool,
    pub activation_budget: u64,
    pub trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            policy: SchedulerPolicy::Fifo,
            workers: 1,
            seed: None,
            check_monotonicity: false,
            activation_budget: 10_000_000,
            trace: false,
        }
    }
}

impl SolverConfig {
    pub fn with_policy(mut self, policy: SchedulerPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn checked(mut self) -> Self {
        self.check_monotonicity = true;
        self
    }

    pub fn traced(mut self) -> Self {
        self.trace = true;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub activations: u64,
    pub initial_activations: u64,
    pub continuation_activations: u64,
    pub defaults_inserted: u64,
    pub cycle_finalizations: u64,
    pub commit_finalizations: u64,
    pub fallbacks_inserted: u64,
    pub monotonicity_violations: u64,
    pub quiescence_rounds: u64,
    pub total_time: Duration,
    pub defaults_time: Duration,
    pub cycles_time: Duration,
    pub commit_time: Duration,
}

impl SolverStats {
    /// Time spent running activations rather than phase transitions.
    pub fn propagation_time(&self) -> Duration {
        self.total_time
            .saturating_sub(self.defaults_time + self.cycles_time + self.commit_time)
    }
}

impl fmt::Display for SolverStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "wall time      {:>10.3} ms", ms(self.total_time))?;
        writeln!(f, "  propagation  {:>10.3} ms", ms(self.propagation_time()))?;
        writeln!(f, "  defaults     {:>10.3} ms", ms(self.defaults_time))?;
        writeln!(f, "  cycles       {:>10.3} ms", ms(self.cycles_time))?;
        writeln!(f, "  commit       {:>10.3} ms", ms(self.commit_time))?;
        writeln!(
            f,
            "activations    {} ({} initial, {} continuation)",
            self.activations, self.initial_activations, self.continuation_activations
        )?;
        writeln!(f, "quiescent      {} times", self.quiescence_rounds)?;
        write!(
            f,
            "finalized      {} defaults, {} fallbacks, {} in cycles, {} by commit",
            self.defaults_inserted,
            self.fallbacks_inserted,
            self.cycle_finalizations,
            self.commit_finalizations
        )
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Final values of one solver run.
#[derive(Debug, Clone)]
pub struct SolvedStore {
    kinds: Arc<KindTable>,
    values: BTreeMap<PropertyKey, Value>,
    stats: SolverStats,
    trace: Vec<TraceRecord>,
}

impl SolvedStore {
    pub fn get(&self, entity: &EntityId, kind: PropertyKindId) -> Option<&Value> {
        self.values.get(&PropertyKey::new(entity.clone(), kind))
    }

    pub fn values(&self) -> &BTreeMap<PropertyKey, Value> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn kinds(&self) -> &KindTable {
        &self.kinds
    }

    pub fn stats(&self) -> &SolverStats {
        &self.stats
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn report(&self) -> ResultsDocument {
        ResultsDocument::from_values(&self.kinds, &self.values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Registration,
    Ready,
    Solving,
    Solved,
}

/// The property store. Create it with a validated [`Schedule`], run
/// [`Blackboard::register_all`], optionally [`request`](Blackboard::request)
/// properties on behalf of an end user, then [`solve`](Blackboard::solve).
pub struct Blackboard {
    kinds: Arc<KindTable>,
    schedule: Arc<Schedule>,
    core: Core,
    iafs: Vec<Option<InitialAnalysisFunction>>,
    eager: Vec<(usize, EntityId)>,
    requests: Vec<PropertyKey>,
    phase: Phase,
}

impl Blackboard {
    pub fn new(kinds: Arc<KindTable>, schedule: Schedule) -> Self {
        let n = schedule.plans().len();
        Self {
            kinds,
            schedule: Arc::new(schedule),
            core: Core::default(),
            iafs: vec![None; n],
            eager: Vec::new(),
            requests: Vec::new(),
            phase: Phase::Registration,
        }
    }

    pub fn kinds(&self) -> &KindTable {
        &self.kinds
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// Runs every registration hook in analysis-name order and evaluates
    /// eager entity selectors.
    pub fn register_all(&mut self) -> Result<(), SolverError> {
        if self.phase != Phase::Registration {
            return Err(SolverError::PhaseViolation(
                "analyses are already registered".into(),
            ));
        }
        let schedule = self.schedule.clone();
        for (i, plan) in schedule.plans().iter().enumerate() {
            let mut registrar = Registrar {
                board: self,
                analysis: i,
            };
            (plan.spec.register)(&mut registrar)?;
            if self.iafs[i].is_none() {
                return Err(SolverError::MissingAnalysisFunction(plan.spec.name.clone()));
            }
            if let ActivationMode::Eager(select) = &plan.spec.mode {
                self.eager.extend(select().into_iter().map(|e| (i, e)));
            }
        }
        self.phase = Phase::Ready;
        Ok(())
    }

    fn check_writable(&self) -> Result<(), SolverError> {
        match self.phase {
            Phase::Registration | Phase::Ready => Ok(()),
            _ => Err(SolverError::PhaseViolation(
                "values can only be preset before solving starts".into(),
            )),
        }
    }

    /// Records a precomputed final value.
    pub fn preset_final(
        &mut self,
        entity: EntityId,
        kind: PropertyKindId,
        value: Value,
    ) -> Result<(), SolverError> {
        self.check_writable()?;
        let desc = self.kinds.descriptor(kind)?;
        if !desc.contains(&value) {
            return Err(LatticeError::KindMismatch {
                kind: desc.name().into(),
                value,
            }
            .into());
        }
        let key = PropertyKey::new(entity, kind);
        if !self.core.state(&key).is_none() {
            return Err(SolverError::AlreadySet(self.key_name(&key)));
        }
        self.core
            .preset(key, PropertyState::Final(value), Origin::Preset);
        Ok(())
    }

    /// Records an initial contribution to a collaboratively computed
    /// property. Unlike a preset it stays open for further contributions.
    pub fn seed(
        &mut self,
        entity: EntityId,
        kind: PropertyKindId,
        value: Value,
    ) -> Result<(), SolverError> {
        self.check_writable()?;
        let desc = self.kinds.descriptor(kind)?;
        let Some(producer) = self.schedule.producer(kind).filter(|p| p.collaborative) else {
            return Err(SolverError::PhaseViolation(format!(
                "only collaboratively derived kinds can be seeded, {} is not",
                desc.name()
            )));
        };
        let key = PropertyKey::new(entity, kind);
        let value = match self.core.state(&key) {
            PropertyState::NoValue => value,
            PropertyState::Interim { value: old, .. } => desc.join(&old, &value)?,
            PropertyState::Final(_) => {
                return Err(SolverError::AlreadySet(self.key_name(&key)))
            }
        };
        if !desc.contains(&value) {
            return Err(LatticeError::KindMismatch {
                kind: desc.name().into(),
                value,
            }
            .into());
        }
        self.core.preset(
            key,
            PropertyState::Interim {
                value,
                direction: producer.direction,
            },
            Origin::Seed,
        );
        Ok(())
    }

    /// Asks for a property on behalf of an end user. Requested properties of
    /// derived kinds are guaranteed a final value after solving.
    pub fn request(&mut self, entity: EntityId, kind: PropertyKindId) {
        self.requests.push(PropertyKey::new(entity, kind));
    }

    /// Reads the current state of a property.
    pub fn get(&self, entity: &EntityId, kind: PropertyKindId) -> Result<PropertyState, SolverError> {
        if self.phase == Phase::Registration {
            return Err(SolverError::RegistrationPhaseViolation(format!(
                "read of {}",
                self.key_name(&PropertyKey::new(entity.clone(), kind))
            )));
        }
        Ok(self.core.state(&PropertyKey::new(entity.clone(), kind)))
    }

    fn key_name(&self, key: &PropertyKey) -> String {
        format!("{} {}", key.entity, self.kinds.name(key.kind))
    }

    pub fn solve(&mut self, config: &SolverConfig) -> Result<SolvedStore, SolverError> {
        self.run(config, None)
    }

    pub fn solve_observed(
        &mut self,
        config: &SolverConfig,
        observer: &dyn SolverObserver,
    ) -> Result<SolvedStore, SolverError> {
        self.run(config, Some(observer))
    }

    fn run(
        &mut self,
        config: &SolverConfig,
        observer: Option<&dyn SolverObserver>,
    ) -> Result<SolvedStore, SolverError> {
        match self.phase {
            Phase::Registration => {
                return Err(SolverError::PhaseViolation(
                    "register_all must complete before solving".into(),
                ))
            }
            Phase::Solving | Phase::Solved => {
                return Err(SolverError::PhaseViolation("the store was already solved".into()))
            }
            Phase::Ready => {}
        }
        self.phase = Phase::Solving;
        let started = Instant::now();
        let kinds = self.kinds.clone();
        let schedule = self.schedule.clone();
        let env = Env {
            kinds: &kinds,
            schedule: &schedule,
            config,
            observer,
        };
        let mut core = std::mem::take(&mut self.core);
        core.prepare(config);
        let shared = Shared {
            env,
            iafs: &self.iafs,
            core: Mutex::new(core),
            wake: Condvar::new(),
        };
        {
            let mut core = shared.core.lock();
            let eager = std::mem::take(&mut self.eager);
            let requests = std::mem::take(&mut self.requests);
            if let Err(e) = core.begin(&shared.env, eager, requests) {
                core.fail(e);
            }
        }
        let workers = config.workers.max(1);
        if workers == 1 {
            worker(&shared);
        } else {
            std::thread::scope(|s| {
                for _ in 0..workers {
                    s.spawn(|| worker(&shared));
                }
            });
        }
        let mut core = shared.core.into_inner();
        self.phase = Phase::Solved;
        core.stats.total_time = started.elapsed();
        let outcome = match core.error.take() {
            Some(e) => Err(e),
            None => core.finish(&kinds).map(|values| SolvedStore {
                kinds: kinds.clone(),
                values,
                stats: core.stats.clone(),
                trace: std::mem::take(&mut core.trace),
            }),
        };
        self.core = core;
        outcome
    }
}

/// Registration-time access to the store for one analysis.
pub struct Registrar<'b> {
    board: &'b mut Blackboard,
    analysis: usize,
}

impl Registrar<'_> {
    pub fn analysis_name(&self) -> &str {
        &self.board.schedule.plan(self.analysis).spec.name
    }

    pub fn kinds(&self) -> &KindTable {
        &self.board.kinds
    }

    /// Hands the initial analysis function to the store.
    pub fn install(&mut self, iaf: InitialAnalysisFunction) {
        self.board.iafs[self.analysis] = Some(iaf);
    }

    pub fn preset_final(
        &mut self,
        entity: EntityId,
        kind: PropertyKindId,
        value: Value,
    ) -> Result<(), SolverError> {
        self.board.preset_final(entity, kind, value)
    }

    pub fn seed(
        &mut self,
        entity: EntityId,
        kind: PropertyKindId,
        value: Value,
    ) -> Result<(), SolverError> {
        self.board.seed(entity, kind, value)
    }

    /// Always fails: values cannot be read while registering.
    pub fn get(&self, entity: &EntityId, kind: PropertyKindId) -> Result<PropertyState, SolverError> {
        Err(SolverError::RegistrationPhaseViolation(format!(
            "analysis {} read {} {}",
            self.analysis_name(),
            entity,
            self.board.kinds.name(kind)
        )))
    }
}

struct Shared<'a> {
    env: Env<'a>,
    iafs: &'a [Option<InitialAnalysisFunction>],
    core: Mutex<Core>,
    wake: Condvar,
}

/// The context of one running activation.
pub struct Activation<'a> {
    shared: &'a Shared<'a>,
    analysis: usize,
    entity: EntityId,
    error: Option<SolverError>,
}

impl Activation<'_> {
    /// The entity this activation was started for.
    pub fn entity(&self) -> &EntityId {
        &self.entity
    }

    pub fn analysis_name(&self) -> &str {
        &self.shared.env.schedule.plan(self.analysis).spec.name
    }

    pub fn kinds(&self) -> &KindTable {
        self.shared.env.kinds
    }

    /// Current state of a property as visible to this analysis. Interim
    /// values on suppressed edges read as `NoValue`.
    pub fn query(&mut self, entity: &EntityId, kind: PropertyKindId) -> PropertyState {
        let env = &self.shared.env;
        let spec = &env.schedule.plan(self.analysis).spec;
        if !spec.declares_use(kind) && !spec.derives_kind(kind) {
            if self.error.is_none() {
                self.error = Some(SolverError::UndeclaredUse {
                    analysis: spec.name.clone(),
                    kind: env.kinds.name(kind).to_owned(),
                });
            }
            return PropertyState::NoValue;
        }
        let key = PropertyKey::new(entity.clone(), kind);
        let state = {
            let mut core = self.shared.core.lock();
            let before = core.pool_len();
            match core.query(env, self.analysis, &key) {
                Ok(s) => {
                    core.wake_for(&self.shared.wake, before);
                    s
                }
                Err(e) => {
                    self.error.get_or_insert(e);
                    PropertyState::NoValue
                }
            }
        };
        if let Some(obs) = env.observer {
            obs.state_delivered(
                &spec.name,
                &Property {
                    entity: entity.clone(),
                    kind,
                    state: state.clone(),
                },
            );
        }
        state
    }
}

fn worker(shared: &Shared<'_>) {
    let env = &shared.env;
    let mut core = shared.core.lock();
    while core.error.is_none() && !core.done {
        if core.pool_len() > 0 {
            // pick fails only when the activation budget is exhausted
            if let Some(task) = core.pick(env) {
                drop(core);
                let outcome = execute(shared, task);
                core = shared.core.lock();
                let before = core.pool_len();
                core.complete(env, outcome);
                core.wake_for(&shared.wake, before);
            }
        } else if core.quiescent() {
            match core.phase_step(env) {
                Ok(true) => {
                    shared.wake.notify_all();
                }
                Ok(false) => core.done = true,
                Err(e) => core.fail(e),
            }
        } else {
            shared.wake.wait(&mut core);
        }
    }
    shared.wake.notify_all();
}

pub(crate) struct Outcome {
    header: TaskHeader,
    result: Result<crate::result::AnalysisResult, SolverError>,
}

fn execute(shared: &Shared<'_>, task: Task) -> Outcome {
    let env = &shared.env;
    let Task { header, body } = task;
    let spec = &env.schedule.plan(header.analysis).spec;
    let info = ActivationInfo {
        seq: header.seq,
        task: header.kind,
        analysis: spec.name.clone(),
        key: header.key.clone(),
    };
    if let Some(obs) = env.observer {
        obs.activation_started(&info);
    }
    let mut act = Activation {
        shared,
        analysis: header.analysis,
        entity: header.entity.clone(),
        error: None,
    };
    let run = catch_unwind(AssertUnwindSafe(|| match body {
        TaskBody::Initial => {
            let iaf = shared.iafs[header.analysis]
                .as_ref()
                .expect("installed at registration");
            iaf(&mut act, &header.entity)
        }
        TaskBody::Continuation {
            continuation,
            property,
        } => {
            if let Some(obs) = env.observer {
                obs.state_delivered(&spec.name, &property);
            }
            continuation(&mut act, property)
        }
    }));
    if let Some(obs) = env.observer {
        obs.activation_finished(&info);
    }
    let result = match (run, act.error.take()) {
        (_, Some(e)) => Err(e),
        (Ok(r), None) => Ok(r),
        (Err(payload), None) => Err(SolverError::AnalysisPanicked {
            analysis: spec.name.clone(),
            entity: header.entity.to_string(),
            message: panic_message(payload),
        }),
    };
    Outcome { header, result }
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_owned()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".into()
    }
}

/// A few keys rendered for error messages.
fn sample_keys(kinds: &KindTable, keys: &BTreeSet<PropertyKey>) -> Vec<String> {
    keys.iter()
        .take(5)
        .map(|k| format!("{} {}", k.entity, kinds.name(k.kind)))
        .collect()
}

#[cfg(test)]
mod tests;
