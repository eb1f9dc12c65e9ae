//! Rapid type analysis. Every reachable method contributes its allocations to
//! the instantiated types, its resolved call targets to its callees, and a
//! caller record to each target, which in turn makes the target reachable.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use blackboard::{
    Activation, ActivationMode, AnalysisResult, AnalysisSpecification, Direction, EntityId,
    Lattice, ObservedDependee, PointwiseSets, Powerset, PropertyKindId, PropertyState,
    UseDeclaration, Value,
};
use blackboard_ir::{Op, Origin};

use crate::kinds::{call_site_label, project, ENTRY_POINT};
use crate::Ctx;

pub const NAME: &str = "callgraph-rta";

/// Joins `add` into the current value; `None` if nothing changes. An unset
/// property always receives a value, even an empty one.
fn grow(lattice: impl Lattice + 'static, add: Value) -> impl FnOnce(&PropertyState) -> Option<Value> + Send {
    move |current| match current.value() {
        None => Some(add),
        Some(old) => {
            let new = lattice.join(old, &add);
            (new != *old).then_some(new)
        }
    }
}

fn add_set(kind: PropertyKindId, entity: EntityId, items: BTreeSet<String>) -> AnalysisResult {
    // The lattice is only used for joining, where the universe is irrelevant.
    AnalysisResult::partial(entity, kind, grow(Powerset::new(Vec::<String>::new()), Value::set(items)))
}

fn evaluate(ctx: &Ctx, act: &mut Activation<'_>, method: &EntityId) -> AnalysisResult {
    let kinds = &ctx.kinds;
    let program = &ctx.program;
    let Some(mref) = method.as_method() else {
        return AnalysisResult::Results(Vec::new());
    };
    let Some(decl) = program.method(mref) else {
        return AnalysisResult::Results(Vec::new());
    };

    let mut dependees = Vec::new();
    let has_virtual = decl.ops.iter().any(|op| matches!(op, Op::InvokeVirtual { .. }));
    let instantiated: BTreeSet<String> = if has_virtual {
        let s = act.query(&project(), kinds.instantiated_types);
        let types = s.value().and_then(Value::as_set).cloned().unwrap_or_default();
        if !s.is_final() {
            dependees.push(ObservedDependee::new(project(), kinds.instantiated_types, s));
        }
        types
    } else {
        BTreeSet::new()
    };

    let mut allocated = BTreeSet::new();
    let mut callees: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut callers: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (i, op) in decl.ops.iter().enumerate() {
        let targets: BTreeSet<blackboard::MemberRef> = match op {
            Op::New { class } => {
                allocated.insert(class.to_string());
                continue;
            }
            Op::InvokeStatic { target } => [target.clone()].into(),
            Op::InvokeVirtual {
                receiver,
                declared,
                method: name,
            } => {
                let inst = instantiated.iter().map(String::as_str);
                match receiver {
                    Origin::Field(f) => {
                        let e = EntityId::Field(f.clone());
                        let s = act.query(&e, kinds.field_types);
                        match &s {
                            PropertyState::Final(v) => {
                                let mut out = BTreeSet::new();
                                for t in v.as_set().into_iter().flatten() {
                                    let inst = instantiated.iter().map(String::as_str);
                                    out.extend(program.resolve_virtual(t, name, inst).unwrap_or_default());
                                }
                                out
                            }
                            _ => {
                                dependees.push(ObservedDependee::new(e, kinds.field_types, s));
                                BTreeSet::new()
                            }
                        }
                    }
                    _ => program.resolve_virtual(declared, name, inst).unwrap_or_default(),
                }
            }
            _ => continue,
        };
        let site = call_site_label(mref, i);
        for t in &targets {
            callers.entry(t.to_string()).or_default().insert(site.clone());
        }
        callees.insert(i.to_string(), targets.iter().map(ToString::to_string).collect());
    }

    let mut results = vec![AnalysisResult::partial(
        method.clone(),
        kinds.callees,
        grow(PointwiseSets::new(Vec::new(), Vec::new()), Value::map(callees)),
    )];
    if !allocated.is_empty() {
        results.push(add_set(kinds.instantiated_types, project(), allocated));
    }
    for (target, sites) in callers {
        let (class, name) = target.split_once('.').expect("method references contain a dot");
        results.push(add_set(kinds.callers, EntityId::method(class, name), sites));
    }

    if dependees.is_empty() {
        return AnalysisResult::Results(results);
    }
    let ctx = ctx.clone();
    let m = method.clone();
    AnalysisResult::InterimPartial {
        results,
        dependees,
        continuation: Box::new(move |act, _| evaluate(&ctx, act, &m)),
    }
}

/// Started for every method that obtains a caller record. Entry points are
/// seeded with an [`ENTRY_POINT`] caller when the analysis is registered.
pub fn spec(ctx: &Ctx) -> AnalysisSpecification {
    let kinds = &ctx.kinds;
    let c = ctx.clone();
    let iaf: blackboard::registry::InitialAnalysisFunction =
        Arc::new(move |act, e| evaluate(&c, act, e));
    let run = iaf.clone();
    let program = ctx.program.clone();
    let callers = kinds.callers;
    AnalysisSpecification::new(NAME, ActivationMode::Triggered(callers), move |act, e| run(act, e))
        .derives_collaboratively(kinds.callees, Direction::Optimistic)
        .derives_collaboratively(kinds.callers, Direction::Optimistic)
        .derives_collaboratively(kinds.instantiated_types, Direction::Optimistic)
        .uses(UseDeclaration::optimistic(kinds.instantiated_types))
        .uses(UseDeclaration::final_only(kinds.field_types))
        .on_register(move |r| {
            for entry in program.entry_points() {
                r.seed(EntityId::Method(entry.clone()), callers, Value::set([ENTRY_POINT]))?;
            }
            r.install(iaf.clone());
            Ok(())
        })
}
