//! Store state guarded by the blackboard lock.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::time::Instant;

use parking_lot::Condvar;
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sample_keys, Outcome, SolverConfig, SolverError, SolverStats};
use crate::entity::EntityId;
use crate::lattice::{
    check_monotone, Direction, KindTable, LatticeError, ObservedDependee, PropertyKey,
    PropertyKindId, PropertyState, Value,
};
use crate::registry::{ActivationMode, Schedule};
use crate::result::{AnalysisResult, Continuation, Property};
use crate::scheduler::{Pool, PoolEntry, Scheduler};
use crate::trace::{SolverObserver, TaskKind, TraceRecord};

pub(crate) struct Env<'a> {
    pub kinds: &'a KindTable,
    pub schedule: &'a Schedule,
    pub config: &'a SolverConfig,
    pub observer: Option<&'a dyn SolverObserver>,
}

/// An analysis working on one entity. Activations of the same owner never
/// overlap.
pub(crate) type Owner = (usize, EntityId);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Origin {
    Computed,
    Preset,
    Seed,
    Fallback,
    Default,
    Finalized,
}

pub(crate) struct TaskHeader {
    pub seq: u64,
    pub analysis: usize,
    pub entity: EntityId,
    /// The owner's primary property.
    pub key: PropertyKey,
    pub kind: TaskKind,
}

pub(crate) enum TaskBody {
    Initial,
    Continuation {
        continuation: Continuation,
        property: Property,
    },
}

pub(crate) struct Task {
    pub header: TaskHeader,
    pub body: TaskBody,
}

struct Slot {
    state: PropertyState,
    dependers: BTreeSet<Owner>,
    requested: bool,
    origin: Origin,
}

impl Slot {
    fn empty() -> Self {
        Self {
            state: PropertyState::NoValue,
            dependers: BTreeSet::new(),
            requested: false,
            origin: Origin::Computed,
        }
    }
}

struct Registration {
    /// Dependee keys with a flag telling whether interim updates are
    /// withheld from this owner.
    dependees: Vec<(PropertyKey, bool)>,
    continuation: Continuation,
}

#[derive(Default)]
pub(crate) struct Core {
    slots: HashMap<PropertyKey, Slot>,
    registrations: HashMap<Owner, Registration>,
    started: HashSet<Owner>,
    pool: BTreeMap<u64, Task>,
    busy: HashSet<Owner>,
    deferred: HashMap<Owner, VecDeque<Task>>,
    next_seq: u64,
    in_flight: usize,
    scheduler: Option<Box<dyn Scheduler>>,
    tracing: bool,
    pub error: Option<SolverError>,
    pub done: bool,
    pub stats: SolverStats,
    pub trace: Vec<TraceRecord>,
}

struct PoolView<'c> {
    pool: &'c BTreeMap<u64, Task>,
    slots: &'c HashMap<PropertyKey, Slot>,
}

impl Pool for PoolView<'_> {
    fn len(&self) -> usize {
        self.pool.len()
    }

    fn first_seq(&self) -> u64 {
        *self.pool.keys().next().expect("non-empty pool")
    }

    fn last_seq(&self) -> u64 {
        *self.pool.keys().next_back().expect("non-empty pool")
    }

    fn nth_seq(&self, index: usize) -> u64 {
        *self.pool.keys().nth(index).expect("index within pool")
    }

    fn entries(&self) -> Box<dyn Iterator<Item = PoolEntry> + '_> {
        Box::new(self.pool.iter().map(|(&seq, t)| PoolEntry {
            seq,
            dependers: self
                .slots
                .get(&t.header.key)
                .map_or(0, |s| s.dependers.len()),
        }))
    }
}

impl Core {
    pub fn state(&self, key: &PropertyKey) -> PropertyState {
        self.slots
            .get(key)
            .map_or(PropertyState::NoValue, |s| s.state.clone())
    }

    pub fn preset(&mut self, key: PropertyKey, state: PropertyState, origin: Origin) {
        let slot = self.slots.entry(key).or_insert_with(Slot::empty);
        slot.state = state;
        slot.origin = origin;
    }

    pub fn prepare(&mut self, config: &SolverConfig) {
        self.scheduler = Some(config.policy.build(config.seed.unwrap_or(0)));
        self.tracing = config.trace;
    }

    pub fn fail(&mut self, e: SolverError) {
        if self.error.is_none() {
            self.error = Some(e);
        }
        self.done = true;
    }

    pub fn pool_len(&self) -> usize {
        self.pool.len()
    }

    pub fn quiescent(&self) -> bool {
        self.pool.is_empty() && self.in_flight == 0
    }

    /// Wakes one waiting worker per task added since the pool had `before`
    /// entries.
    pub fn wake_for(&self, wake: &Condvar, before: usize) {
        for _ in before..self.pool.len() {
            wake.notify_one();
        }
    }

    /// Enqueues eager activations, activations triggered by presets and
    /// seeds, and end-user requests.
    pub fn begin(
        &mut self,
        env: &Env<'_>,
        mut starts: Vec<(usize, EntityId)>,
        mut requests: Vec<PropertyKey>,
    ) -> Result<(), SolverError> {
        let mut given: Vec<PropertyKey> = self
            .slots
            .iter()
            .filter(|(_, s)| matches!(s.origin, Origin::Preset | Origin::Seed))
            .map(|(k, _)| k.clone())
            .collect();
        given.sort();
        for key in given {
            starts.extend(env.schedule.triggered_by(key.kind).map(|a| (a, key.entity.clone())));
        }
        if let Some(seed) = env.config.seed {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            starts.shuffle(&mut rng);
            requests.shuffle(&mut rng);
        }
        for (a, e) in starts {
            self.start(env, a, e);
        }
        for key in requests {
            self.touch(env, &key)?;
        }
        Ok(())
    }

    pub fn pick(&mut self, env: &Env<'_>) -> Option<Task> {
        if self.pool.is_empty() {
            return None;
        }
        self.stats.activations += 1;
        if self.stats.activations > env.config.activation_budget {
            self.fail(SolverError::NonTermination {
                activations: self.stats.activations - 1,
                budget: env.config.activation_budget,
            });
            return None;
        }
        let view = PoolView {
            pool: &self.pool,
            slots: &self.slots,
        };
        let seq = self
            .scheduler
            .as_mut()
            .expect("scheduler prepared")
            .pick(&view);
        let task = self.pool.remove(&seq).expect("scheduler picked a pool member");
        match task.header.kind {
            TaskKind::Initial => self.stats.initial_activations += 1,
            _ => self.stats.continuation_activations += 1,
        }
        self.in_flight += 1;
        Some(task)
    }

    pub fn complete(&mut self, env: &Env<'_>, outcome: Outcome) {
        self.in_flight -= 1;
        let Outcome { header, result } = outcome;
        let label = match result {
            Ok(result) => {
                let label = result.label();
                if let Err(e) = self.apply(env, header.analysis, &header.entity, result) {
                    self.fail(e);
                }
                label
            }
            Err(e) => {
                self.fail(e);
                "error".to_owned()
            }
        };
        if self.tracing {
            self.trace.push(TraceRecord {
                seq: header.seq,
                task: header.kind,
                entity: header.entity.to_string(),
                kind: env.kinds.name(header.key.kind).to_owned(),
                result: label,
            });
        }
        self.release((header.analysis, header.entity));
    }

    fn release(&mut self, owner: Owner) {
        match self.deferred.get_mut(&owner).and_then(VecDeque::pop_front) {
            Some(next) => {
                self.pool.insert(next.header.seq, next);
            }
            None => {
                self.deferred.remove(&owner);
                self.busy.remove(&owner);
            }
        }
    }

    fn new_task(&mut self, env: &Env<'_>, analysis: usize, entity: EntityId, body: TaskBody) -> Task {
        let seq = self.next_seq;
        self.next_seq += 1;
        let primary = env.schedule.plan(analysis).spec.primary_kind();
        let kind = match body {
            TaskBody::Initial => TaskKind::Initial,
            TaskBody::Continuation { .. } => TaskKind::Continuation,
        };
        Task {
            header: TaskHeader {
                seq,
                analysis,
                key: PropertyKey::new(entity.clone(), primary),
                entity,
                kind,
            },
            body,
        }
    }

    fn enqueue(&mut self, task: Task) {
        let owner = (task.header.analysis, task.header.entity.clone());
        if self.busy.contains(&owner) {
            self.deferred.entry(owner).or_default().push_back(task);
        } else {
            self.busy.insert(owner);
            self.pool.insert(task.header.seq, task);
        }
    }

    fn start(&mut self, env: &Env<'_>, analysis: usize, entity: EntityId) {
        let spec = &env.schedule.plan(analysis).spec;
        if matches!(spec.mode, ActivationMode::TransformerOnly) {
            return;
        }
        if !self.started.insert((analysis, entity.clone())) {
            return;
        }
        self.mark_requested(&PropertyKey::new(entity.clone(), spec.primary_kind()));
        let task = self.new_task(env, analysis, entity, TaskBody::Initial);
        self.enqueue(task);
    }

    fn mark_requested(&mut self, key: &PropertyKey) {
        self.slots
            .entry(key.clone())
            .or_insert_with(Slot::empty)
            .requested = true;
    }

    /// Marks a key as requested and makes sure something will eventually
    /// give it a value.
    fn touch(&mut self, env: &Env<'_>, key: &PropertyKey) -> Result<(), SolverError> {
        self.mark_requested(key);
        if !self.slots[key].state.is_none() {
            return Ok(());
        }
        if !env.schedule.is_derived(key.kind) {
            let v = env.kinds.descriptor(key.kind)?.fallback_for(&key.entity);
            self.stats.fallbacks_inserted += 1;
            self.set_state(env, key, PropertyState::Final(v), Origin::Fallback)?;
        } else if let Some(a) = env.schedule.lazy_deriver(key.kind) {
            self.start(env, a, key.entity.clone());
        }
        Ok(())
    }

    fn visible(&self, env: &Env<'_>, analysis: usize, key: &PropertyKey) -> PropertyState {
        let state = self.state(key);
        if !state.is_final() && env.schedule.plan(analysis).suppressed.contains(&key.kind) {
            PropertyState::NoValue
        } else {
            state
        }
    }

    pub fn query(
        &mut self,
        env: &Env<'_>,
        analysis: usize,
        key: &PropertyKey,
    ) -> Result<PropertyState, SolverError> {
        self.touch(env, key)?;
        Ok(self.visible(env, analysis, key))
    }

    fn direction(env: &Env<'_>, kind: PropertyKindId) -> Direction {
        env.schedule.direction(kind).unwrap_or(Direction::Optimistic)
    }

    fn set_state(
        &mut self,
        env: &Env<'_>,
        key: &PropertyKey,
        new: PropertyState,
        origin: Origin,
    ) -> Result<bool, SolverError> {
        let slot = self.slots.entry(key.clone()).or_insert_with(Slot::empty);
        if slot.state == new {
            return Ok(false);
        }
        let old = slot.state.clone();
        let key_name = || format!("{} {}", key.entity, env.kinds.name(key.kind));
        if old.is_final() {
            return Err(SolverError::FinalOverwrite {
                key: key_name(),
                old: old.to_string(),
                new: new.to_string(),
            });
        }
        let desc = env.kinds.descriptor(key.kind)?;
        if let Err(violation) = check_monotone(desc, Self::direction(env, key.kind), &old, &new) {
            if env.config.check_monotonicity {
                return Err(SolverError::Monotonicity {
                    key: key_name(),
                    violation,
                });
            }
            log::warn!("{}: {}", key_name(), violation);
            self.stats.monotonicity_violations += 1;
        }
        slot.state = new.clone();
        slot.origin = origin;
        if let Some(obs) = env.observer {
            obs.state_changed(key, &old, &new);
        }
        if old.is_none() && origin == Origin::Computed {
            let triggered: Vec<usize> = env.schedule.triggered_by(key.kind).collect();
            for a in triggered {
                self.start(env, a, key.entity.clone());
            }
        }
        self.notify(env, key, &new);
        Ok(true)
    }

    fn notify(&mut self, env: &Env<'_>, key: &PropertyKey, new: &PropertyState) {
        let dependers: Vec<Owner> = self.slots[key].dependers.iter().cloned().collect();
        for owner in dependers {
            let suppressed = self
                .registrations
                .get(&owner)
                .and_then(|r| r.dependees.iter().find(|(k, _)| k == key))
                .map(|(_, s)| *s);
            let Some(suppressed) = suppressed else {
                self.slots.get_mut(key).unwrap().dependers.remove(&owner);
                continue;
            };
            if suppressed && !new.is_final() {
                continue;
            }
            let reg = self.unregister(&owner).expect("registration present");
            let task = self.new_task(
                env,
                owner.0,
                owner.1,
                TaskBody::Continuation {
                    continuation: reg.continuation,
                    property: Property {
                        entity: key.entity.clone(),
                        kind: key.kind,
                        state: new.clone(),
                    },
                },
            );
            self.enqueue(task);
        }
    }

    fn unregister(&mut self, owner: &Owner) -> Option<Registration> {
        let reg = self.registrations.remove(owner)?;
        for (k, _) in &reg.dependees {
            if let Some(slot) = self.slots.get_mut(k) {
                slot.dependers.remove(owner);
            }
        }
        Some(reg)
    }

    fn register(
        &mut self,
        env: &Env<'_>,
        analysis: usize,
        entity: &EntityId,
        dependees: Vec<ObservedDependee>,
        continuation: Continuation,
    ) -> Result<(), SolverError> {
        let plan = env.schedule.plan(analysis);
        let invalid = |reason: String| SolverError::InvalidResult {
            analysis: plan.spec.name.clone(),
            reason,
        };
        if dependees.is_empty() {
            return Err(invalid(format!(
                "interim result for {entity} has no dependees; it must be final"
            )));
        }
        let owner = (analysis, entity.clone());
        if self.registrations.contains_key(&owner) {
            return Err(invalid(format!("{entity} already has a pending continuation")));
        }
        let mut entries = Vec::with_capacity(dependees.len());
        for d in dependees {
            let key = d.key();
            if d.observed.is_final() {
                return Err(invalid(format!(
                    "final value of {} {} registered as a dependee",
                    key.entity,
                    env.kinds.name(key.kind)
                )));
            }
            if !plan.spec.declares_use(key.kind) && !plan.spec.derives_kind(key.kind) {
                return Err(SolverError::UndeclaredUse {
                    analysis: plan.spec.name.clone(),
                    kind: env.kinds.name(key.kind).to_owned(),
                });
            }
            self.touch(env, &key)?;
            let visible = self.visible(env, analysis, &key);
            if visible != d.observed {
                // The dependee moved on after it was read.
                let task = self.new_task(
                    env,
                    analysis,
                    entity.clone(),
                    TaskBody::Continuation {
                        continuation,
                        property: Property {
                            entity: key.entity,
                            kind: key.kind,
                            state: visible,
                        },
                    },
                );
                self.enqueue(task);
                return Ok(());
            }
            let suppressed = plan.suppressed.contains(&key.kind);
            if !entries.iter().any(|(k, _)| *k == key) {
                entries.push((key, suppressed));
            }
        }
        for (k, _) in &entries {
            self.slots
                .get_mut(k)
                .expect("touched")
                .dependers
                .insert(owner.clone());
        }
        self.registrations.insert(
            owner,
            Registration {
                dependees: entries,
                continuation,
            },
        );
        Ok(())
    }

    fn check_result(
        env: &Env<'_>,
        analysis: usize,
        kind: PropertyKindId,
        value: Option<&Value>,
    ) -> Result<(), SolverError> {
        let spec = &env.schedule.plan(analysis).spec;
        if !spec.derives_kind(kind) {
            return Err(SolverError::ForeignKind {
                analysis: spec.name.clone(),
                kind: env.kinds.name(kind).to_owned(),
            });
        }
        if let Some(v) = value {
            let desc = env.kinds.descriptor(kind)?;
            if !desc.contains(v) {
                return Err(LatticeError::KindMismatch {
                    kind: desc.name().into(),
                    value: v.clone(),
                }
                .into());
            }
        }
        Ok(())
    }

    fn apply(
        &mut self,
        env: &Env<'_>,
        analysis: usize,
        entity: &EntityId,
        result: AnalysisResult,
    ) -> Result<(), SolverError> {
        match result {
            AnalysisResult::Final {
                entity,
                kind,
                value,
            } => {
                Self::check_result(env, analysis, kind, Some(&value))?;
                let key = PropertyKey::new(entity, kind);
                self.set_state(env, &key, PropertyState::Final(value), Origin::Computed)?;
            }
            AnalysisResult::Interim {
                entity,
                kind,
                value,
                dependees,
                continuation,
            } => {
                Self::check_result(env, analysis, kind, Some(&value))?;
                let key = PropertyKey::new(entity.clone(), kind);
                let state = PropertyState::Interim {
                    value,
                    direction: Self::direction(env, kind),
                };
                self.set_state(env, &key, state, Origin::Computed)?;
                self.register(env, analysis, &entity, dependees, continuation)?;
            }
            AnalysisResult::Partial {
                entity,
                kind,
                update,
            } => {
                Self::check_result(env, analysis, kind, None)?;
                if !env.schedule.is_collaborative(kind) {
                    return Err(SolverError::InvalidResult {
                        analysis: env.schedule.plan(analysis).spec.name.clone(),
                        reason: format!(
                            "partial result for {}, which is not derived collaboratively",
                            env.kinds.name(kind)
                        ),
                    });
                }
                let key = PropertyKey::new(entity, kind);
                let old = self.state(&key);
                if let Some(v) = update(&old) {
                    Self::check_result(env, analysis, kind, Some(&v))?;
                    if old.value() != Some(&v) {
                        let state = PropertyState::Interim {
                            value: v,
                            direction: Self::direction(env, kind),
                        };
                        self.set_state(env, &key, state, Origin::Computed)?;
                    }
                }
            }
            AnalysisResult::Multi(items) => {
                for (e, k, v) in items {
                    self.apply(env, analysis, entity, AnalysisResult::final_value(e, k, v))?;
                }
            }
            AnalysisResult::Results(items) => {
                for r in items {
                    self.apply(env, analysis, entity, r)?;
                }
            }
            AnalysisResult::InterimPartial {
                results,
                dependees,
                continuation,
            } => {
                for r in results {
                    self.apply(env, analysis, entity, r)?;
                }
                self.register(env, analysis, entity, dependees, continuation)?;
            }
            AnalysisResult::WithFollowups { result, followups } => {
                self.apply(env, analysis, entity, *result)?;
                for (name, e) in followups {
                    let a = env
                        .schedule
                        .analysis_index(&name)
                        .ok_or_else(|| SolverError::UnknownAnalysis(name.clone()))?;
                    self.start(env, a, e);
                }
            }
        }
        Ok(())
    }

    fn record_finalize(&mut self, env: &Env<'_>, key: &PropertyKey, what: &str) {
        if self.tracing {
            let seq = self.next_seq;
            self.next_seq += 1;
            self.trace.push(TraceRecord {
                seq,
                task: TaskKind::Finalize,
                entity: key.entity.to_string(),
                kind: env.kinds.name(key.kind).to_owned(),
                result: what.to_owned(),
            });
        }
    }

    /// Runs the first phase transition that changes anything. Returns
    /// `false` once none applies.
    pub fn phase_step(&mut self, env: &Env<'_>) -> Result<bool, SolverError> {
        self.stats.quiescence_rounds += 1;
        let t = Instant::now();
        let changed = self.insert_defaults(env)?;
        self.stats.defaults_time += t.elapsed();
        if changed {
            return Ok(true);
        }
        let t = Instant::now();
        let changed = self.resolve_closed_sccs(env)?;
        self.stats.cycles_time += t.elapsed();
        if changed {
            return Ok(true);
        }
        let t = Instant::now();
        let changed = self.finalize_next_commit_level(env)?;
        self.stats.commit_time += t.elapsed();
        Ok(changed)
    }

    fn settle_value(env: &Env<'_>, key: &PropertyKey) -> Result<Value, SolverError> {
        let desc = env.kinds.descriptor(key.kind)?;
        Ok(desc
            .default_for(&key.entity)
            .unwrap_or_else(|| desc.fallback_for(&key.entity)))
    }

    /// Gives requested but unset properties of derived kinds their default
    /// value. Collaborative kinds are left to their commit level, since
    /// contributions may still arrive until then.
    fn insert_defaults(&mut self, env: &Env<'_>) -> Result<bool, SolverError> {
        let mut keys: Vec<PropertyKey> = self
            .slots
            .iter()
            .filter(|(k, s)| {
                s.requested
                    && s.state.is_none()
                    && env.schedule.is_derived(k.kind)
                    && !env.schedule.is_collaborative(k.kind)
            })
            .map(|(k, _)| k.clone())
            .collect();
        keys.sort();
        for key in &keys {
            let v = Self::settle_value(env, key)?;
            self.record_finalize(env, key, "default");
            self.stats.defaults_inserted += 1;
            self.set_state(env, key, PropertyState::Final(v), Origin::Default)?;
        }
        Ok(!keys.is_empty())
    }

    /// Finalizes every strongly connected component of waiting
    /// non-collaborative properties that depends on nothing outside itself.
    fn resolve_closed_sccs(&mut self, env: &Env<'_>) -> Result<bool, SolverError> {
        let mut owners: Vec<&Owner> = self.registrations.keys().collect();
        owners.sort();
        let mut nodes: Vec<(Owner, Vec<PropertyKey>)> = Vec::new();
        let mut key_node: HashMap<PropertyKey, usize> = HashMap::new();
        for owner in owners {
            let spec = &env.schedule.plan(owner.0).spec;
            let keys: Vec<PropertyKey> = spec
                .derives
                .iter()
                .filter(|d| !d.collaborative)
                .map(|d| PropertyKey::new(owner.1.clone(), d.kind))
                .filter(|k| self.slots.get(k).is_some_and(|s| s.state.is_interim()))
                .collect();
            if keys.is_empty() {
                continue;
            }
            for k in &keys {
                key_node.insert(k.clone(), nodes.len());
            }
            nodes.push((owner.clone(), keys));
        }
        if nodes.is_empty() {
            return Ok(false);
        }
        let mut graph: DiGraph<(), ()> = DiGraph::with_capacity(nodes.len(), nodes.len());
        let idx: Vec<NodeIndex> = (0..nodes.len()).map(|_| graph.add_node(())).collect();
        let mut leaks = vec![false; nodes.len()];
        for (i, (owner, _)) in nodes.iter().enumerate() {
            for (dep, _) in &self.registrations[owner].dependees {
                match key_node.get(dep) {
                    Some(&j) => {
                        graph.add_edge(idx[i], idx[j], ());
                    }
                    None => leaks[i] = true,
                }
            }
        }
        let mut closed: Vec<usize> = Vec::new();
        for component in tarjan_scc(&graph) {
            let members: HashSet<NodeIndex> = component.iter().copied().collect();
            let is_closed = component.iter().all(|&n| {
                !leaks[n.index()] && graph.neighbors(n).all(|m| members.contains(&m))
            });
            if is_closed {
                closed.extend(component.iter().map(|n| n.index()));
            }
        }
        if closed.is_empty() {
            return Ok(false);
        }
        // Drop the members' dependency records first so that each depender
        // outside the component sees exactly one final notification per key.
        let mut keys = Vec::new();
        for &i in &closed {
            self.unregister(&nodes[i].0);
            keys.extend(nodes[i].1.iter().cloned());
        }
        keys.sort();
        for key in &keys {
            let v = self.slots[key].state.value().expect("interim").clone();
            self.record_finalize(env, key, "cycle");
            self.stats.cycle_finalizations += 1;
            self.set_state(env, key, PropertyState::Final(v), Origin::Finalized)?;
        }
        Ok(true)
    }

    /// Finalizes the earliest commit level that still holds open
    /// collaborative properties.
    fn finalize_next_commit_level(&mut self, env: &Env<'_>) -> Result<bool, SolverError> {
        for level in env.schedule.commit_order() {
            let mut keys: Vec<PropertyKey> = self
                .slots
                .iter()
                .filter(|(k, s)| {
                    level.contains(&k.kind)
                        && (s.state.is_interim() || (s.state.is_none() && s.requested))
                })
                .map(|(k, _)| k.clone())
                .collect();
            if keys.is_empty() {
                continue;
            }
            keys.sort();
            for key in &keys {
                let (v, what) = match self.slots[key].state.value() {
                    Some(v) => (v.clone(), "commit"),
                    None => (Self::settle_value(env, key)?, "default"),
                };
                self.record_finalize(env, key, what);
                if what == "commit" {
                    self.stats.commit_finalizations += 1;
                } else {
                    self.stats.defaults_inserted += 1;
                }
                self.set_state(env, key, PropertyState::Final(v), Origin::Finalized)?;
            }
            return Ok(true);
        }
        Ok(false)
    }

    /// Final values after a successful run.
    pub fn finish(&self, kinds: &KindTable) -> Result<BTreeMap<PropertyKey, Value>, SolverError> {
        let open: BTreeSet<PropertyKey> = self
            .slots
            .iter()
            .filter(|(_, s)| !s.state.is_final() && (s.requested || !s.state.is_none()))
            .map(|(k, _)| k.clone())
            .collect();
        if !open.is_empty() {
            return Err(SolverError::Unresolved {
                count: open.len(),
                sample: sample_keys(kinds, &open),
            });
        }
        Ok(self
            .slots
            .iter()
            .filter_map(|(k, s)| match &s.state {
                PropertyState::Final(v) => Some((k.clone(), v.clone())),
                _ => None,
            })
            .collect())
    }
}
