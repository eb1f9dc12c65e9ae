//! What analysis activations hand back to the blackboard.

use std::fmt;

use crate::entity::EntityId;
use crate::lattice::{ObservedDependee, PropertyKey, PropertyKindId, PropertyState, Value};
use crate::solver::Activation;

/// A property as observed at one point in time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub entity: EntityId,
    pub kind: PropertyKindId,
    pub state: PropertyState,
}

impl Property {
    pub fn key(&self) -> PropertyKey {
        PropertyKey::new(self.entity.clone(), self.kind)
    }
}

/// Invoked with the updated state of one dependee. It must fold that state
/// into its result in full; a later invocation is never guaranteed.
pub type Continuation = Box<dyn FnOnce(&mut Activation<'_>, Property) -> AnalysisResult + Send>;

/// Merges one contribution into the current state of a collaborative
/// property. Returning `None` means "no change".
pub type UpdateFn = Box<dyn FnOnce(&PropertyState) -> Option<Value> + Send>;

pub enum AnalysisResult {
    Final {
        entity: EntityId,
        kind: PropertyKindId,
        value: Value,
    },
    /// An interim value plus the dependencies it still waits on.
    Interim {
        entity: EntityId,
        kind: PropertyKindId,
        value: Value,
        dependees: Vec<ObservedDependee>,
        continuation: Continuation,
    },
    /// A contribution to a collaboratively computed property.
    Partial {
        entity: EntityId,
        kind: PropertyKindId,
        update: UpdateFn,
    },
    Multi(Vec<(EntityId, PropertyKindId, Value)>),
    Results(Vec<AnalysisResult>),
    /// Contributions to collaborative properties from an activation that
    /// still waits on dependees. The continuation is bound to the
    /// activation's own property key.
    InterimPartial {
        results: Vec<AnalysisResult>,
        dependees: Vec<ObservedDependee>,
        continuation: Continuation,
    },
    /// Asks the blackboard to start the named analyses on the given
    /// entities after `result` has been applied.
    WithFollowups {
        result: Box<AnalysisResult>,
        followups: Vec<(String, EntityId)>,
    },
}

impl AnalysisResult {
    pub fn final_value(entity: EntityId, kind: PropertyKindId, value: Value) -> Self {
        AnalysisResult::Final {
            entity,
            kind,
            value,
        }
    }

    pub fn interim(
        entity: EntityId,
        kind: PropertyKindId,
        value: Value,
        dependees: Vec<ObservedDependee>,
        continuation: Continuation,
    ) -> Self {
        AnalysisResult::Interim {
            entity,
            kind,
            value,
            dependees,
            continuation,
        }
    }

    pub fn partial(
        entity: EntityId,
        kind: PropertyKindId,
        update: impl FnOnce(&PropertyState) -> Option<Value> + Send + 'static,
    ) -> Self {
        AnalysisResult::Partial {
            entity,
            kind,
            update: Box::new(update),
        }
    }

    pub fn with_followups(self, followups: Vec<(String, EntityId)>) -> Self {
        if followups.is_empty() {
            return self;
        }
        AnalysisResult::WithFollowups {
            result: Box::new(self),
            followups,
        }
    }

    /// Short label used in activation traces.
    pub fn label(&self) -> String {
        match self {
            AnalysisResult::Final { .. } => "final".into(),
            AnalysisResult::Interim { .. } => "interim".into(),
            AnalysisResult::Partial { .. } => "partial".into(),
            AnalysisResult::Multi(_) => "multi".into(),
            AnalysisResult::Results(_) => "results".into(),
            AnalysisResult::InterimPartial { .. } => "interim-partial".into(),
            AnalysisResult::WithFollowups { result, .. } => format!("{}+followups", result.label()),
        }
    }
}

impl fmt::Debug for AnalysisResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisResult::Final {
                entity,
                kind,
                value,
            } => f
                .debug_struct("Final")
                .field("entity", entity)
                .field("kind", kind)
                .field("value", value)
                .finish(),
            AnalysisResult::Interim {
                entity,
                kind,
                value,
                dependees,
                ..
            } => f
                .debug_struct("Interim")
                .field("entity", entity)
                .field("kind", kind)
                .field("value", value)
                .field("dependees", dependees)
                .finish_non_exhaustive(),
            AnalysisResult::Partial { entity, kind, .. } => f
                .debug_struct("Partial")
                .field("entity", entity)
                .field("kind", kind)
                .finish_non_exhaustive(),
            AnalysisResult::Multi(v) => f.debug_tuple("Multi").field(v).finish(),
            AnalysisResult::Results(v) => f.debug_tuple("Results").field(v).finish(),
            AnalysisResult::InterimPartial {
                results, dependees, ..
            } => f
                .debug_struct("InterimPartial")
                .field("results", results)
                .field("dependees", dependees)
                .finish_non_exhaustive(),
            AnalysisResult::WithFollowups { result, followups } => f
                .debug_struct("WithFollowups")
                .field("result", result)
                .field("followups", followups)
                .finish(),
        }
    }
}
