//! Property kinds, lattice values, stored states and the monotonicity rules
//! every other part of the framework relies on.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::entity::{EntityId, Name};

/// Dense identifier of a registered property kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PropertyKindId(pub u32);

impl PropertyKindId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One property: a kind attached to an entity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PropertyKey {
    pub entity: EntityId,
    pub kind: PropertyKindId,
}

impl PropertyKey {
    pub fn new(entity: EntityId, kind: PropertyKindId) -> Self {
        Self { entity, kind }
    }
}

/// A lattice element. Values are immutable; the set-shaped variants share
/// their payload so cloning a state is cheap.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    /// A named point of a finite lattice such as a chain.
    Atom(&'static str),
    Set(Arc<BTreeSet<String>>),
    /// Map from keys to sets; keys mapped to the empty set are never stored.
    Map(Arc<BTreeMap<String, BTreeSet<String>>>),
    Count(u32),
}

impl Value {
    pub fn set<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Value::Set(Arc::new(items.into_iter().map(Into::into).collect()))
    }

    pub fn empty_set() -> Self {
        Value::Set(Arc::default())
    }

    pub fn map<I, K, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (K, S)>,
        K: Into<String>,
        S: IntoIterator<Item = String>,
    {
        let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (k, vs) in entries {
            let vs: BTreeSet<String> = vs.into_iter().collect();
            if !vs.is_empty() {
                out.entry(k.into()).or_default().extend(vs);
            }
        }
        Value::Map(Arc::new(out))
    }

    pub fn empty_map() -> Self {
        Value::Map(Arc::default())
    }

    pub fn as_atom(&self) -> Option<&'static str> {
        match self {
            Value::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&BTreeSet<String>> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_map(&self) -> Option<&BTreeMap<String, BTreeSet<String>>> {
        match self {
            Value::Map(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_count(&self) -> Option<u32> {
        match self {
            Value::Count(c) => Some(*c),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(a) => f.write_str(a),
            Value::Set(s) => write!(f, "{s:?}"),
            Value::Map(m) => write!(f, "{m:?}"),
            Value::Count(c) => write!(f, "{c}"),
        }
    }
}

/// The order structure of one property kind.
///
/// Implementations must be finite-height join semilattices with a top; the
/// solver's termination argument depends on it.
pub trait Lattice: Send + Sync + fmt::Debug {
    /// Whether `v` is an element of this lattice.
    fn contains(&self, v: &Value) -> bool;
    fn leq(&self, a: &Value, b: &Value) -> bool;
    fn join(&self, a: &Value, b: &Value) -> Value;
    fn bottom(&self) -> Value;
    fn top(&self) -> Value;
    /// Upper bound on the number of elements in a strictly ascending chain.
    fn height(&self) -> usize;

    /// Canonical JSON rendering used in result files.
    fn render(&self, v: &Value) -> serde_json::Value {
        render_generic(v)
    }
}

pub fn render_generic(v: &Value) -> serde_json::Value {
    match v {
        Value::Atom(a) => serde_json::Value::String((*a).to_owned()),
        Value::Set(s) => serde_json::Value::Array(
            s.iter()
                .map(|x| serde_json::Value::String(x.clone()))
                .collect(),
        ),
        Value::Map(m) => serde_json::Value::Object(
            m.iter()
                .map(|(k, vs)| {
                    let arr = vs
                        .iter()
                        .map(|x| serde_json::Value::String(x.clone()))
                        .collect();
                    (k.clone(), serde_json::Value::Array(arr))
                })
                .collect(),
        ),
        Value::Count(c) => serde_json::Value::from(*c),
    }
}

/// A totally ordered finite lattice, listed from bottom to top.
#[derive(Debug, Clone)]
pub struct Chain {
    points: Vec<&'static str>,
}

impl Chain {
    pub fn new(points: &[&'static str]) -> Self {
        assert!(!points.is_empty(), "a chain needs at least one point");
        Self {
            points: points.to_vec(),
        }
    }

    pub fn points(&self) -> &[&'static str] {
        &self.points
    }

    fn rank(&self, v: &Value) -> Option<usize> {
        let a = v.as_atom()?;
        self.points.iter().position(|p| *p == a)
    }
}

impl Lattice for Chain {
    fn contains(&self, v: &Value) -> bool {
        self.rank(v).is_some()
    }

    fn leq(&self, a: &Value, b: &Value) -> bool {
        match (self.rank(a), self.rank(b)) {
            (Some(x), Some(y)) => x <= y,
            _ => false,
        }
    }

    fn join(&self, a: &Value, b: &Value) -> Value {
        let x = self.rank(a).unwrap_or(0);
        let y = self.rank(b).unwrap_or(0);
        Value::Atom(self.points[x.max(y)])
    }

    fn bottom(&self) -> Value {
        Value::Atom(self.points[0])
    }

    fn top(&self) -> Value {
        Value::Atom(self.points[self.points.len() - 1])
    }

    fn height(&self) -> usize {
        self.points.len()
    }
}

/// Subsets of a finite universe ordered by inclusion.
#[derive(Debug, Clone)]
pub struct Powerset {
    universe: Arc<BTreeSet<String>>,
    empty_label: Option<&'static str>,
}

impl Powerset {
    pub fn new<I, S>(universe: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            universe: Arc::new(universe.into_iter().map(Into::into).collect()),
            empty_label: None,
        }
    }

    /// Render the empty set as this label instead of `[]`.
    pub fn with_empty_label(mut self, label: &'static str) -> Self {
        self.empty_label = Some(label);
        self
    }

    pub fn universe(&self) -> &BTreeSet<String> {
        &self.universe
    }
}

impl Lattice for Powerset {
    fn contains(&self, v: &Value) -> bool {
        v.as_set().is_some_and(|s| s.is_subset(&self.universe))
    }

    fn leq(&self, a: &Value, b: &Value) -> bool {
        match (a.as_set(), b.as_set()) {
            (Some(x), Some(y)) => x.is_subset(y),
            _ => false,
        }
    }

    fn join(&self, a: &Value, b: &Value) -> Value {
        match (a.as_set(), b.as_set()) {
            (Some(x), Some(y)) if x.is_subset(y) => b.clone(),
            (Some(x), Some(y)) if y.is_subset(x) => a.clone(),
            (Some(x), Some(y)) => Value::Set(Arc::new(x.union(y).cloned().collect())),
            _ => self.top(),
        }
    }

    fn bottom(&self) -> Value {
        Value::empty_set()
    }

    fn top(&self) -> Value {
        Value::Set(self.universe.clone())
    }

    fn height(&self) -> usize {
        self.universe.len() + 1
    }

    fn render(&self, v: &Value) -> serde_json::Value {
        match (self.empty_label, v.as_set()) {
            (Some(label), Some(s)) if s.is_empty() => serde_json::Value::String(label.to_owned()),
            _ => render_generic(v),
        }
    }
}

/// Maps from a finite key universe to subsets of a finite element universe,
/// ordered pointwise by inclusion.
#[derive(Debug, Clone)]
pub struct PointwiseSets {
    keys: BTreeSet<String>,
    elements: BTreeSet<String>,
}

impl PointwiseSets {
    pub fn new<K, E>(keys: K, elements: E) -> Self
    where
        K: IntoIterator<Item = String>,
        E: IntoIterator<Item = String>,
    {
        Self {
            keys: keys.into_iter().collect(),
            elements: elements.into_iter().collect(),
        }
    }
}

impl Lattice for PointwiseSets {
    fn contains(&self, v: &Value) -> bool {
        v.as_map().is_some_and(|m| {
            m.iter().all(|(k, vs)| {
                self.keys.contains(k) && !vs.is_empty() && vs.is_subset(&self.elements)
            })
        })
    }

    fn leq(&self, a: &Value, b: &Value) -> bool {
        match (a.as_map(), b.as_map()) {
            (Some(x), Some(y)) => x
                .iter()
                .all(|(k, vs)| y.get(k).is_some_and(|ws| vs.is_subset(ws))),
            _ => false,
        }
    }

    fn join(&self, a: &Value, b: &Value) -> Value {
        match (a.as_map(), b.as_map()) {
            (Some(x), Some(y)) => {
                let mut out = x.clone();
                for (k, vs) in y {
                    out.entry(k.clone()).or_default().extend(vs.iter().cloned());
                }
                Value::Map(Arc::new(out))
            }
            _ => self.top(),
        }
    }

    fn bottom(&self) -> Value {
        Value::empty_map()
    }

    fn top(&self) -> Value {
        if self.elements.is_empty() {
            return Value::empty_map();
        }
        Value::Map(Arc::new(
            self.keys
                .iter()
                .map(|k| (k.clone(), self.elements.clone()))
                .collect(),
        ))
    }

    fn height(&self) -> usize {
        self.keys.len() * self.elements.len() + 1
    }
}

/// Natural numbers `0..=max` under the usual order.
#[derive(Debug, Clone)]
pub struct Counter {
    max: u32,
}

impl Counter {
    pub fn new(max: u32) -> Self {
        Self { max }
    }
}

impl Lattice for Counter {
    fn contains(&self, v: &Value) -> bool {
        v.as_count().is_some_and(|c| c <= self.max)
    }

    fn leq(&self, a: &Value, b: &Value) -> bool {
        match (a.as_count(), b.as_count()) {
            (Some(x), Some(y)) => x <= y,
            _ => false,
        }
    }

    fn join(&self, a: &Value, b: &Value) -> Value {
        match (a.as_count(), b.as_count()) {
            (Some(x), Some(y)) => Value::Count(x.max(y)),
            _ => self.top(),
        }
    }

    fn bottom(&self) -> Value {
        Value::Count(0)
    }

    fn top(&self) -> Value {
        Value::Count(self.max)
    }

    fn height(&self) -> usize {
        self.max as usize + 1
    }
}

/// Computes a value for an entity without consulting the store.
pub type ValueProvider = Arc<dyn Fn(&EntityId) -> Value + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("value {value} is not an element of property kind {kind}")]
    KindMismatch { kind: Name, value: Value },
    #[error("property kind {0} is already registered")]
    DuplicateKind(String),
    #[error("unknown property kind #{0}")]
    UnknownKind(u32),
}

/// Everything the framework knows about a property kind: its lattice and
/// the providers for fallback and default values.
#[derive(Clone)]
pub struct LatticeDescriptor {
    kind: PropertyKindId,
    name: Name,
    lattice: Arc<dyn Lattice>,
    fallback: ValueProvider,
    default: Option<ValueProvider>,
}

impl fmt::Debug for LatticeDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LatticeDescriptor")
            .field("kind", &self.kind)
            .field("name", &self.name)
            .field("lattice", &self.lattice)
            .field("has_default", &self.default.is_some())
            .finish()
    }
}

impl LatticeDescriptor {
    pub fn kind(&self) -> PropertyKindId {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn lattice(&self) -> &dyn Lattice {
        &*self.lattice
    }

    fn check(&self, v: &Value) -> Result<(), LatticeError> {
        if self.lattice.contains(v) {
            Ok(())
        } else {
            Err(LatticeError::KindMismatch {
                kind: self.name.clone(),
                value: v.clone(),
            })
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.lattice.contains(v)
    }

    pub fn leq(&self, a: &Value, b: &Value) -> Result<bool, LatticeError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.lattice.leq(a, b))
    }

    pub fn join(&self, a: &Value, b: &Value) -> Result<Value, LatticeError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.lattice.join(a, b))
    }

    pub fn bottom(&self) -> Value {
        self.lattice.bottom()
    }

    pub fn top(&self) -> Value {
        self.lattice.top()
    }

    pub fn height(&self) -> usize {
        self.lattice.height()
    }

    /// Sound value used when no analysis derives this kind.
    pub fn fallback_for(&self, entity: &EntityId) -> Value {
        (self.fallback)(entity)
    }

    /// Precise value for entities the deriving analysis never visited, if
    /// the kind declares one.
    pub fn default_for(&self, entity: &EntityId) -> Option<Value> {
        self.default.as_ref().map(|d| d(entity))
    }

    pub fn has_default(&self) -> bool {
        self.default.is_some()
    }

    pub fn render(&self, v: &Value) -> serde_json::Value {
        self.lattice.render(v)
    }
}

/// Builder for a property kind registration.
pub struct KindDefinition {
    name: String,
    lattice: Arc<dyn Lattice>,
    fallback: Option<ValueProvider>,
    default: Option<ValueProvider>,
}

impl KindDefinition {
    pub fn new(name: impl Into<String>, lattice: impl Lattice + 'static) -> Self {
        Self {
            name: name.into(),
            lattice: Arc::new(lattice),
            fallback: None,
            default: None,
        }
    }

    pub fn fallback(mut self, f: impl Fn(&EntityId) -> Value + Send + Sync + 'static) -> Self {
        self.fallback = Some(Arc::new(f));
        self
    }

    pub fn default_value(
        mut self,
        f: impl Fn(&EntityId) -> Value + Send + Sync + 'static,
    ) -> Self {
        self.default = Some(Arc::new(f));
        self
    }
}

/// The registered property kinds of one run.
#[derive(Debug, Default, Clone)]
pub struct KindTable {
    descriptors: Vec<LatticeDescriptor>,
    by_name: HashMap<String, PropertyKindId>,
}

impl KindTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a kind and assigns it the next dense identifier. Without an
    /// explicit fallback provider the lattice top is used.
    pub fn register(&mut self, def: KindDefinition) -> Result<PropertyKindId, LatticeError> {
        if self.by_name.contains_key(&def.name) {
            return Err(LatticeError::DuplicateKind(def.name));
        }
        let id = PropertyKindId(self.descriptors.len() as u32);
        let fallback = def.fallback.unwrap_or_else(|| {
            let top = def.lattice.top();
            Arc::new(move |_: &EntityId| top.clone())
        });
        self.by_name.insert(def.name.clone(), id);
        self.descriptors.push(LatticeDescriptor {
            kind: id,
            name: def.name.into(),
            lattice: def.lattice,
            fallback,
            default: def.default,
        });
        Ok(id)
    }

    pub fn get(&self, id: PropertyKindId) -> Option<&LatticeDescriptor> {
        self.descriptors.get(id.index())
    }

    pub fn descriptor(&self, id: PropertyKindId) -> Result<&LatticeDescriptor, LatticeError> {
        self.get(id).ok_or(LatticeError::UnknownKind(id.0))
    }

    pub fn by_name(&self, name: &str) -> Option<PropertyKindId> {
        self.by_name.get(name).copied()
    }

    pub fn name(&self, id: PropertyKindId) -> &str {
        self.get(id).map(|d| d.name()).unwrap_or("<unknown>")
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &LatticeDescriptor> {
        self.descriptors.iter()
    }
}

/// Refinement direction of interim results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    /// Starts at the bottom and only moves up.
    Optimistic,
    /// Starts at the top and only moves down.
    Pessimistic,
}

/// What the store knows about one property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertyState {
    NoValue,
    Interim { value: Value, direction: Direction },
    Final(Value),
}

impl PropertyState {
    pub fn value(&self) -> Option<&Value> {
        match self {
            PropertyState::NoValue => None,
            PropertyState::Interim { value, .. } | PropertyState::Final(value) => Some(value),
        }
    }

    pub fn is_final(&self) -> bool {
        matches!(self, PropertyState::Final(_))
    }

    pub fn is_interim(&self) -> bool {
        matches!(self, PropertyState::Interim { .. })
    }

    pub fn is_none(&self) -> bool {
        matches!(self, PropertyState::NoValue)
    }
}

impl fmt::Display for PropertyState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertyState::NoValue => f.write_str("NoValue"),
            PropertyState::Interim { value, direction } => {
                write!(f, "Interim({value}, {direction:?})")
            }
            PropertyState::Final(v) => write!(f, "Final({v})"),
        }
    }
}

/// A dependency an activation still waits on, together with the state it
/// last saw. Never final: final values need no further notification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservedDependee {
    pub entity: EntityId,
    pub kind: PropertyKindId,
    pub observed: PropertyState,
}

impl ObservedDependee {
    pub fn new(entity: EntityId, kind: PropertyKindId, observed: PropertyState) -> Self {
        Self {
            entity,
            kind,
            observed,
        }
    }

    pub fn key(&self) -> PropertyKey {
        PropertyKey::new(self.entity.clone(), self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("non-monotone {direction:?} update of {kind}: {old} -> {new}")]
pub struct MonotonicityViolation {
    pub kind: Name,
    pub direction: Direction,
    pub old: PropertyState,
    pub new: PropertyState,
}

/// Checks that `old -> new` is a legal transition for a property refined in
/// `direction`.
pub fn check_monotone(
    desc: &LatticeDescriptor,
    direction: Direction,
    old: &PropertyState,
    new: &PropertyState,
) -> Result<(), MonotonicityViolation> {
    let violation = || MonotonicityViolation {
        kind: desc.name.clone(),
        direction,
        old: old.clone(),
        new: new.clone(),
    };
    let ok = match (old, new) {
        (PropertyState::NoValue, _) => true,
        (PropertyState::Final(_), _) => old == new,
        (PropertyState::Interim { .. }, PropertyState::NoValue) => false,
        (PropertyState::Interim { value: a, .. }, _) => {
            let b = new.value().expect("non-empty state");
            match direction {
                Direction::Optimistic => desc.leq(a, b).unwrap_or(false),
                Direction::Pessimistic => desc.leq(b, a).unwrap_or(false),
            }
        }
    };
    if ok {
        Ok(())
    } else {
        Err(violation())
    }
}
