//! Declarative analysis specifications and the execution-constraint check
//! that turns a chosen set of them into a [`Schedule`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::entity::EntityId;
use crate::lattice::{Direction, KindTable, PropertyKindId};
use crate::result::AnalysisResult;
use crate::solver::{Activation, Registrar, SolverError};

/// Which interim values a using analysis can process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Acceptance {
    InterimOptimistic,
    InterimPessimistic,
    FinalOnly,
}

impl Acceptance {
    fn direction(self) -> Option<Direction> {
        match self {
            Acceptance::InterimOptimistic => Some(Direction::Optimistic),
            Acceptance::InterimPessimistic => Some(Direction::Pessimistic),
            Acceptance::FinalOnly => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UseDeclaration {
    pub kind: PropertyKindId,
    pub acceptance: Acceptance,
}

impl UseDeclaration {
    pub fn optimistic(kind: PropertyKindId) -> Self {
        Self {
            kind,
            acceptance: Acceptance::InterimOptimistic,
        }
    }

    pub fn pessimistic(kind: PropertyKindId) -> Self {
        Self {
            kind,
            acceptance: Acceptance::InterimPessimistic,
        }
    }

    pub fn final_only(kind: PropertyKindId) -> Self {
        Self {
            kind,
            acceptance: Acceptance::FinalOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Derivation {
    pub kind: PropertyKindId,
    pub direction: Direction,
    pub collaborative: bool,
}

pub type EntitySelector = Arc<dyn Fn() -> Vec<EntityId> + Send + Sync>;

/// The first activation of an analysis for one entity.
pub type InitialAnalysisFunction =
    Arc<dyn Fn(&mut Activation<'_>, &EntityId) -> AnalysisResult + Send + Sync>;

pub type RegisterHook = Arc<dyn Fn(&mut Registrar<'_>) -> Result<(), SolverError> + Send + Sync>;

#[derive(Clone)]
pub enum ActivationMode {
    /// Started up front for every selected entity.
    Eager(EntitySelector),
    /// Started for an entity the first time one of its derived properties is
    /// queried.
    Lazy,
    /// Started for every entity that obtains a value of the given kind.
    Triggered(PropertyKindId),
    /// Reserved; no activation is ever scheduled for it.
    TransformerOnly,
}

impl fmt::Debug for ActivationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationMode::Eager(_) => f.write_str("Eager(..)"),
            ActivationMode::Lazy => f.write_str("Lazy"),
            ActivationMode::Triggered(k) => write!(f, "Triggered({k:?})"),
            ActivationMode::TransformerOnly => f.write_str("TransformerOnly"),
        }
    }
}

/// Declarative metadata of one analysis.
#[derive(Clone)]
pub struct AnalysisSpecification {
    pub name: String,
    pub derives: Vec<Derivation>,
    pub mode: ActivationMode,
    pub uses: Vec<UseDeclaration>,
    pub register: RegisterHook,
}

impl fmt::Debug for AnalysisSpecification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalysisSpecification")
            .field("name", &self.name)
            .field("derives", &self.derives)
            .field("mode", &self.mode)
            .field("uses", &self.uses)
            .finish_non_exhaustive()
    }
}

impl AnalysisSpecification {
    /// A specification whose registration hook does nothing but install
    /// `analysis` as the initial analysis function.
    pub fn new(
        name: impl Into<String>,
        mode: ActivationMode,
        analysis: impl Fn(&mut Activation<'_>, &EntityId) -> AnalysisResult + Send + Sync + 'static,
    ) -> Self {
        let iaf: InitialAnalysisFunction = Arc::new(analysis);
        Self {
            name: name.into(),
            derives: Vec::new(),
            mode,
            uses: Vec::new(),
            register: Arc::new(move |r| {
                r.install(iaf.clone());
                Ok(())
            }),
        }
    }

    pub fn derives(mut self, kind: PropertyKindId, direction: Direction) -> Self {
        self.derives.push(Derivation {
            kind,
            direction,
            collaborative: false,
        });
        self
    }

    pub fn derives_collaboratively(mut self, kind: PropertyKindId, direction: Direction) -> Self {
        self.derives.push(Derivation {
            kind,
            direction,
            collaborative: true,
        });
        self
    }

    pub fn uses(mut self, decl: UseDeclaration) -> Self {
        self.uses.push(decl);
        self
    }

    /// Replaces the registration hook. The hook must call
    /// [`Registrar::install`].
    pub fn on_register(
        mut self,
        hook: impl Fn(&mut Registrar<'_>) -> Result<(), SolverError> + Send + Sync + 'static,
    ) -> Self {
        self.register = Arc::new(hook);
        self
    }

    /// The kind keying this analysis' activations.
    pub fn primary_kind(&self) -> PropertyKindId {
        self.derives[0].kind
    }

    pub fn derives_kind(&self, kind: PropertyKindId) -> bool {
        self.derives.iter().any(|d| d.kind == kind)
    }

    pub fn declares_use(&self, kind: PropertyKindId) -> bool {
        self.uses.iter().any(|u| u.kind == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("property kind {kind} is derived by more than one analysis without collaboration: {}", analyses.join(", "))]
    ConflictingDerivers { kind: String, analyses: Vec<String> },
    #[error("collaborative property kind {kind} is derived both optimistically and pessimistically: {}", analyses.join(", "))]
    DirectionMismatch { kind: String, analyses: Vec<String> },
    #[error("dependency cycle between {consumer} and {producer} contains a suppressed edge; optimistic and pessimistic analyses cannot depend on each other cyclically")]
    SuppressedCycle { consumer: String, producer: String },
    #[error("unknown property kind #{0}")]
    UnknownKind(u32),
    #[error("analysis {0} derives no property kind")]
    NothingDerived(String),
    #[error("analysis {0} is registered twice")]
    DuplicateAnalysis(String),
    #[error("analysis {analysis} is triggered by {kind}, which no analysis derives and nothing presets")]
    UnderivedTrigger { analysis: String, kind: String },
}

/// Who produces a derived kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Producer {
    pub direction: Direction,
    pub collaborative: bool,
    pub analyses: Vec<usize>,
}

/// A validated specification plus the facts the solver derives from it.
#[derive(Debug, Clone)]
pub struct AnalysisPlan {
    pub spec: AnalysisSpecification,
    /// Used kinds whose interim values are withheld from this analysis.
    pub suppressed: BTreeSet<PropertyKindId>,
}

/// A configuration that passed validation.
#[derive(Debug, Clone)]
pub struct Schedule {
    plans: Vec<AnalysisPlan>,
    producers: BTreeMap<PropertyKindId, Producer>,
    suppression_edges: BTreeSet<(PropertyKindId, PropertyKindId)>,
    commit_order: Vec<BTreeSet<PropertyKindId>>,
    preset_kinds: BTreeSet<PropertyKindId>,
    satisfied_by_fallback: BTreeSet<PropertyKindId>,
}

impl PartialEq for Schedule {
    fn eq(&self, other: &Self) -> bool {
        let names = |s: &Schedule| s.plans.iter().map(|p| p.spec.name.clone()).collect::<Vec<_>>();
        let supp = |s: &Schedule| {
            s.plans
                .iter()
                .map(|p| p.suppressed.clone())
                .collect::<Vec<_>>()
        };
        names(self) == names(other)
            && supp(self) == supp(other)
            && self.producers == other.producers
            && self.suppression_edges == other.suppression_edges
            && self.commit_order == other.commit_order
            && self.preset_kinds == other.preset_kinds
            && self.satisfied_by_fallback == other.satisfied_by_fallback
    }
}

impl Schedule {
    pub fn empty() -> Self {
        Self {
            plans: Vec::new(),
            producers: BTreeMap::new(),
            suppression_edges: BTreeSet::new(),
            commit_order: Vec::new(),
            preset_kinds: BTreeSet::new(),
            satisfied_by_fallback: BTreeSet::new(),
        }
    }

    /// Plans ordered by analysis name.
    pub fn plans(&self) -> &[AnalysisPlan] {
        &self.plans
    }

    pub fn plan(&self, index: usize) -> &AnalysisPlan {
        &self.plans[index]
    }

    pub fn analysis_index(&self, name: &str) -> Option<usize> {
        self.plans.iter().position(|p| p.spec.name == name)
    }

    pub fn producer(&self, kind: PropertyKindId) -> Option<&Producer> {
        self.producers.get(&kind)
    }

    pub fn is_derived(&self, kind: PropertyKindId) -> bool {
        self.producers.contains_key(&kind)
    }

    pub fn is_collaborative(&self, kind: PropertyKindId) -> bool {
        self.producers.get(&kind).is_some_and(|p| p.collaborative)
    }

    pub fn direction(&self, kind: PropertyKindId) -> Option<Direction> {
        self.producers.get(&kind).map(|p| p.direction)
    }

    /// `(consumer kind, producer kind)` pairs whose interim values are
    /// withheld.
    pub fn suppression_edges(&self) -> &BTreeSet<(PropertyKindId, PropertyKindId)> {
        &self.suppression_edges
    }

    /// Levels of collaborative kinds, finalized front to back.
    pub fn commit_order(&self) -> &[BTreeSet<PropertyKindId>] {
        &self.commit_order
    }

    pub fn preset_kinds(&self) -> &BTreeSet<PropertyKindId> {
        &self.preset_kinds
    }

    /// Used kinds no analysis derives; queries for them are answered with
    /// fallback values.
    pub fn satisfied_by_fallback(&self) -> &BTreeSet<PropertyKindId> {
        &self.satisfied_by_fallback
    }

    /// The lazy analysis deriving `kind`, if any.
    pub fn lazy_deriver(&self, kind: PropertyKindId) -> Option<usize> {
        self.producers.get(&kind)?.analyses.iter().copied().find(|&a| {
            matches!(self.plans[a].spec.mode, ActivationMode::Lazy)
        })
    }

    /// Analyses triggered by values of `kind`.
    pub fn triggered_by(&self, kind: PropertyKindId) -> impl Iterator<Item = usize> + '_ {
        self.plans.iter().enumerate().filter_map(move |(i, p)| match p.spec.mode {
            ActivationMode::Triggered(k) if k == kind => Some(i),
            _ => None,
        })
    }
}

/// Checks that `specs` may run together and derives suppression edges and
/// the commit order.
///
/// The result does not depend on the order of `specs`.
pub fn validate(
    specs: Vec<AnalysisSpecification>,
    preset_kinds: &BTreeSet<PropertyKindId>,
    kinds: &KindTable,
) -> Result<Schedule, RegistryError> {
    let mut specs = specs;
    specs.sort_by(|a, b| a.name.cmp(&b.name));
    for pair in specs.windows(2) {
        if pair[0].name == pair[1].name {
            return Err(RegistryError::DuplicateAnalysis(pair[0].name.clone()));
        }
    }

    let known = |k: PropertyKindId| {
        kinds
            .get(k)
            .map(|_| ())
            .ok_or(RegistryError::UnknownKind(k.0))
    };
    for k in preset_kinds {
        known(*k)?;
    }
    for s in &specs {
        if s.derives.is_empty() {
            return Err(RegistryError::NothingDerived(s.name.clone()));
        }
        for d in &s.derives {
            known(d.kind)?;
        }
        for u in &s.uses {
            known(u.kind)?;
        }
        if let ActivationMode::Triggered(k) = s.mode {
            known(k)?;
        }
    }

    // At most one deriver per kind unless all derivers collaborate, and
    // collaborators agree on the direction.
    let mut derivers: BTreeMap<PropertyKindId, Vec<(usize, Derivation)>> = BTreeMap::new();
    for (i, s) in specs.iter().enumerate() {
        for d in &s.derives {
            derivers.entry(d.kind).or_default().push((i, *d));
        }
    }
    let mut producers = BTreeMap::new();
    for (kind, ds) in &derivers {
        let names = || ds.iter().map(|(i, _)| specs[*i].name.clone()).collect::<Vec<_>>();
        if ds.len() > 1 && ds.iter().any(|(_, d)| !d.collaborative) {
            return Err(RegistryError::ConflictingDerivers {
                kind: kinds.name(*kind).to_owned(),
                analyses: names(),
            });
        }
        let direction = ds[0].1.direction;
        if ds.iter().any(|(_, d)| d.direction != direction) {
            return Err(RegistryError::DirectionMismatch {
                kind: kinds.name(*kind).to_owned(),
                analyses: names(),
            });
        }
        producers.insert(
            *kind,
            Producer {
                direction,
                collaborative: ds[0].1.collaborative,
                analyses: ds.iter().map(|(i, _)| *i).collect(),
            },
        );
    }

    for s in &specs {
        if let ActivationMode::Triggered(k) = s.mode {
            if !producers.contains_key(&k) && !preset_kinds.contains(&k) {
                return Err(RegistryError::UnderivedTrigger {
                    analysis: s.name.clone(),
                    kind: kinds.name(k).to_owned(),
                });
            }
        }
    }

    // Suppression: final-only uses, and interim uses whose direction does
    // not match the producer's (downgraded to final-only).
    let mut plans = Vec::with_capacity(specs.len());
    let mut suppression_edges = BTreeSet::new();
    let mut graph: BTreeMap<PropertyKindId, Vec<(PropertyKindId, bool)>> = BTreeMap::new();
    let mut satisfied_by_fallback = BTreeSet::new();
    for s in &specs {
        let mut suppressed = BTreeSet::new();
        for u in &s.uses {
            let producer_dir = producers.get(&u.kind).map(|p: &Producer| p.direction);
            let is_suppressed = match (u.acceptance.direction(), producer_dir) {
                (None, _) => true,
                (Some(accepted), Some(produced)) => accepted != produced,
                (Some(_), None) => false,
            };
            if producer_dir.is_none() && !preset_kinds.contains(&u.kind) {
                satisfied_by_fallback.insert(u.kind);
            }
            if is_suppressed {
                suppressed.insert(u.kind);
            }
            for d in &s.derives {
                graph.entry(d.kind).or_default().push((u.kind, is_suppressed));
                if is_suppressed {
                    suppression_edges.insert((d.kind, u.kind));
                }
            }
        }
        plans.push(AnalysisPlan {
            spec: s.clone(),
            suppressed,
        });
    }
    for edges in graph.values_mut() {
        edges.sort();
        edges.dedup();
    }

    // No dependency cycle may contain a suppressed edge.
    for &(consumer, producer) in &suppression_edges {
        if reaches(&graph, producer, consumer) {
            return Err(RegistryError::SuppressedCycle {
                consumer: kinds.name(consumer).to_owned(),
                producer: kinds.name(producer).to_owned(),
            });
        }
    }

    let commit_order = commit_levels(&graph, &producers);

    Ok(Schedule {
        plans,
        producers,
        suppression_edges,
        commit_order,
        preset_kinds: preset_kinds.clone(),
        satisfied_by_fallback,
    })
}

fn reaches(
    graph: &BTreeMap<PropertyKindId, Vec<(PropertyKindId, bool)>>,
    from: PropertyKindId,
    to: PropertyKindId,
) -> bool {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(k) = queue.pop_front() {
        if k == to {
            return true;
        }
        for &(next, _) in graph.get(&k).into_iter().flatten() {
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    false
}

/// Collaborative kinds reachable from `from` along a path with at least one
/// suppressed edge.
fn suppressed_reach(
    graph: &BTreeMap<PropertyKindId, Vec<(PropertyKindId, bool)>>,
    from: PropertyKindId,
) -> BTreeSet<PropertyKindId> {
    let mut seen = BTreeSet::from([(from, false)]);
    let mut queue = VecDeque::from([(from, false)]);
    let mut out = BTreeSet::new();
    while let Some((k, crossed)) = queue.pop_front() {
        if crossed {
            out.insert(k);
        }
        for &(next, suppressed) in graph.get(&k).into_iter().flatten() {
            let state = (next, crossed || suppressed);
            if seen.insert(state) {
                queue.push_back(state);
            }
        }
    }
    out
}

/// Layers collaborative kinds so that every kind depending on another one
/// through a suppressed path lands in a strictly later level. Kinds with no
/// such relation share level zero.
fn commit_levels(
    graph: &BTreeMap<PropertyKindId, Vec<(PropertyKindId, bool)>>,
    producers: &BTreeMap<PropertyKindId, Producer>,
) -> Vec<BTreeSet<PropertyKindId>> {
    let collaborative: Vec<PropertyKindId> = producers
        .iter()
        .filter(|(_, p)| p.collaborative)
        .map(|(k, _)| *k)
        .collect();
    if collaborative.is_empty() {
        return Vec::new();
    }
    // before[p1] = collaborative kinds that must be finalized before p1
    let before: BTreeMap<PropertyKindId, BTreeSet<PropertyKindId>> = collaborative
        .iter()
        .map(|&p1| {
            let preds = suppressed_reach(graph, p1)
                .into_iter()
                .filter(|p2| *p2 != p1 && producers.get(p2).is_some_and(|p| p.collaborative))
                .collect();
            (p1, preds)
        })
        .collect();

    // Longest-path layering; the relation is acyclic once suppressed cycles
    // have been rejected.
    let mut level: BTreeMap<PropertyKindId, usize> = BTreeMap::new();
    let mut changed = true;
    while changed {
        changed = false;
        for &k in &collaborative {
            let l = before[&k]
                .iter()
                .map(|p| level.get(p).map_or(1, |l| l + 1))
                .max()
                .unwrap_or(0);
            if level.get(&k) != Some(&l) {
                level.insert(k, l);
                changed = true;
            }
        }
    }
    let depth = level.values().copied().max().unwrap_or(0);
    let mut levels = vec![BTreeSet::new(); depth + 1];
    for (k, l) in level {
        levels[l].insert(k);
    }
    levels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Chain, Counter, KindDefinition};
    use crate::result::AnalysisResult;

    fn noop(name: &str, mode: ActivationMode) -> AnalysisSpecification {
        AnalysisSpecification::new(name, mode, |_, e| {
            AnalysisResult::Multi(vec![(e.clone(), PropertyKindId(0), crate::lattice::Value::Count(0))])
        })
    }

    struct Kinds {
        table: KindTable,
        fm: PropertyKindId,
        cm: PropertyKindId,
        p1: PropertyKindId,
        p2: PropertyKindId,
    }

    fn kinds() -> Kinds {
        let mut table = KindTable::new();
        let fm = table
            .register(KindDefinition::new("FieldMutability", Chain::new(&["ImmutableField", "MutableField"])))
            .unwrap();
        let cm = table
            .register(KindDefinition::new("ClassMutability", Chain::new(&["ImmutableClass", "MutableClass"])))
            .unwrap();
        let p1 = table.register(KindDefinition::new("P1", Counter::new(4))).unwrap();
        let p2 = table.register(KindDefinition::new("P2", Counter::new(4))).unwrap();
        Kinds { table, fm, cm, p1, p2 }
    }

    fn mutability_pair(k: &Kinds) -> Vec<AnalysisSpecification> {
        vec![
            noop("class-mutability", ActivationMode::Lazy)
                .derives(k.cm, Direction::Optimistic)
                .uses(UseDeclaration::optimistic(k.fm)),
            noop("field-mutability", ActivationMode::Lazy).derives(k.fm, Direction::Optimistic),
        ]
    }

    #[test]
    fn mutability_configuration_is_valid_without_suppression() {
        let k = kinds();
        let s = validate(mutability_pair(&k), &BTreeSet::from([k.cm]), &k.table).unwrap();
        assert!(s.suppression_edges().is_empty());
        assert!(s.commit_order().is_empty());
        assert_eq!(s.lazy_deriver(k.fm), s.analysis_index("field-mutability"));
    }

    #[test]
    fn single_eager_analysis_is_trivially_valid() {
        let k = kinds();
        let spec = noop("solo", ActivationMode::Eager(Arc::new(Vec::new)))
            .derives(k.p1, Direction::Optimistic);
        let s = validate(vec![spec], &BTreeSet::new(), &k.table).unwrap();
        assert_eq!(s.plans().len(), 1);
    }

    #[test]
    fn validation_ignores_spec_order() {
        let k = kinds();
        let mut specs = mutability_pair(&k);
        let a = validate(specs.clone(), &BTreeSet::new(), &k.table).unwrap();
        specs.reverse();
        let b = validate(specs, &BTreeSet::new(), &k.table).unwrap();
        assert_eq!(a, b);
    }

    fn collaborative_pair(k: &Kinds, p2_uses_p1: bool) -> Vec<AnalysisSpecification> {
        let mut p2 = noop("p2", ActivationMode::Lazy).derives_collaboratively(k.p2, Direction::Optimistic);
        if p2_uses_p1 {
            p2 = p2.uses(UseDeclaration::optimistic(k.p1));
        }
        vec![
            noop("p1", ActivationMode::Lazy)
                .derives_collaboratively(k.p1, Direction::Optimistic)
                .uses(UseDeclaration::final_only(k.p2)),
            p2,
        ]
    }

    #[test]
    fn final_only_edge_orders_commit_levels() {
        let k = kinds();
        let s = validate(collaborative_pair(&k, false), &BTreeSet::new(), &k.table).unwrap();
        assert_eq!(
            s.commit_order(),
            &[BTreeSet::from([k.p2]), BTreeSet::from([k.p1])]
        );
        assert_eq!(s.suppression_edges(), &BTreeSet::from([(k.p1, k.p2)]));
    }

    #[test]
    fn suppressed_cycle_is_rejected() {
        let k = kinds();
        let err = validate(collaborative_pair(&k, true), &BTreeSet::new(), &k.table).unwrap_err();
        assert!(matches!(err, RegistryError::SuppressedCycle { .. }), "{err}");
    }

    #[test]
    fn conflicting_derivers_are_rejected() {
        let k = kinds();
        let specs = vec![
            noop("a", ActivationMode::Lazy).derives(k.cm, Direction::Optimistic),
            noop("b", ActivationMode::Lazy).derives(k.cm, Direction::Optimistic),
        ];
        let err = validate(specs, &BTreeSet::new(), &k.table).unwrap_err();
        assert_eq!(
            err,
            RegistryError::ConflictingDerivers {
                kind: "ClassMutability".into(),
                analyses: vec!["a".into(), "b".into()]
            }
        );
    }

    #[test]
    fn mixed_collaborative_directions_are_rejected() {
        let k = kinds();
        let specs = vec![
            noop("a", ActivationMode::Lazy).derives_collaboratively(k.p1, Direction::Optimistic),
            noop("b", ActivationMode::Lazy).derives_collaboratively(k.p1, Direction::Pessimistic),
        ];
        let err = validate(specs, &BTreeSet::new(), &k.table).unwrap_err();
        assert!(matches!(err, RegistryError::DirectionMismatch { .. }));
    }

    #[test]
    fn unknown_kinds_are_rejected() {
        let k = kinds();
        let specs = vec![
            noop("a", ActivationMode::Lazy)
                .derives(k.p1, Direction::Optimistic)
                .uses(UseDeclaration::optimistic(PropertyKindId(99))),
            noop("b", ActivationMode::Lazy).derives(k.p2, Direction::Optimistic),
        ];
        assert_eq!(
            validate(specs, &BTreeSet::new(), &k.table).unwrap_err(),
            RegistryError::UnknownKind(99)
        );
    }

    #[test]
    fn mismatched_acceptance_is_downgraded_to_final_only() {
        let k = kinds();
        let specs = vec![
            noop("consumer", ActivationMode::Lazy)
                .derives(k.cm, Direction::Optimistic)
                .uses(UseDeclaration::optimistic(k.fm)),
            noop("producer", ActivationMode::Lazy).derives(k.fm, Direction::Pessimistic),
        ];
        let s = validate(specs, &BTreeSet::new(), &k.table).unwrap();
        assert_eq!(s.suppression_edges(), &BTreeSet::from([(k.cm, k.fm)]));
        let consumer = s.analysis_index("consumer").unwrap();
        assert!(s.plan(consumer).suppressed.contains(&k.fm));
    }

    #[test]
    fn fallback_backed_uses_are_recorded() {
        let k = kinds();
        let specs = vec![noop("cm", ActivationMode::Lazy)
            .derives(k.cm, Direction::Optimistic)
            .uses(UseDeclaration::optimistic(k.fm))];
        let s = validate(specs, &BTreeSet::new(), &k.table).unwrap();
        assert_eq!(s.satisfied_by_fallback(), &BTreeSet::from([k.fm]));
    }

    #[test]
    fn triggers_need_a_source() {
        let k = kinds();
        let specs = vec![noop("t", ActivationMode::Triggered(k.p2)).derives(k.p1, Direction::Optimistic)];
        assert!(matches!(
            validate(specs.clone(), &BTreeSet::new(), &k.table),
            Err(RegistryError::UnderivedTrigger { .. })
        ));
        assert!(validate(specs, &BTreeSet::from([k.p2]), &k.table).is_ok());
    }

    #[test]
    fn three_level_commit_order() {
        let mut table = KindTable::new();
        let a = table.register(KindDefinition::new("A", Counter::new(1))).unwrap();
        let b = table.register(KindDefinition::new("B", Counter::new(1))).unwrap();
        let c = table.register(KindDefinition::new("C", Counter::new(1))).unwrap();
        let x = table.register(KindDefinition::new("X", Counter::new(1))).unwrap();
        // c -> (final-only) x -> b -> (final-only) a; plus an unrelated kind.
        let specs = vec![
            noop("a", ActivationMode::Lazy).derives_collaboratively(a, Direction::Optimistic),
            noop("b", ActivationMode::Lazy)
                .derives_collaboratively(b, Direction::Optimistic)
                .uses(UseDeclaration::final_only(a)),
            noop("x", ActivationMode::Lazy)
                .derives(x, Direction::Optimistic)
                .uses(UseDeclaration::optimistic(b)),
            noop("c", ActivationMode::Lazy)
                .derives_collaboratively(c, Direction::Optimistic)
                .uses(UseDeclaration::final_only(x)),
        ];
        let s = validate(specs, &BTreeSet::new(), &table).unwrap();
        assert_eq!(
            s.commit_order(),
            &[BTreeSet::from([a]), BTreeSet::from([b]), BTreeSet::from([c])]
        );
    }
}
