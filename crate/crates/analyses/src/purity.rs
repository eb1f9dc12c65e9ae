//! Method purity over the levels Pure, SideEffectFree and Impure.

use std::sync::Arc;

use blackboard::{
    Activation, ActivationMode, AnalysisResult, AnalysisSpecification, Direction, EntityId,
    Lattice, ObservedDependee, UseDeclaration, Value,
};
use blackboard_ir::Op;

use crate::kinds::{purity_lattice, IMPURE, MUTABLE_FIELD, PURE, SIDE_EFFECT_FREE};
use crate::Ctx;

pub const NAME: &str = "purity";

fn evaluate(ctx: &Ctx, act: &mut Activation<'_>, method: &EntityId) -> AnalysisResult {
    let kinds = &ctx.kinds;
    let lattice = purity_lattice();
    let decl = method.as_method().and_then(|m| ctx.program.method(m));
    let Some(decl) = decl else {
        return AnalysisResult::final_value(method.clone(), kinds.purity, Value::Atom(IMPURE));
    };

    // Every dependency is queried even once the outcome is known, so the set
    // of touched properties does not depend on the order of updates.
    let mut level = Value::Atom(PURE);
    let mut dependees = Vec::new();
    for op in &decl.ops {
        match op {
            Op::PutField { .. } => level = Value::Atom(IMPURE),
            Op::GetField { field, .. } => {
                let e = EntityId::Field(field.clone());
                let s = act.query(&e, kinds.field_mutability);
                if s.value().and_then(Value::as_atom) == Some(MUTABLE_FIELD) {
                    level = lattice.join(&level, &Value::Atom(SIDE_EFFECT_FREE));
                } else if !s.is_final() {
                    dependees.push(ObservedDependee::new(e, kinds.field_mutability, s));
                }
            }
            _ => {}
        }
    }
    if decl.has_invokes() {
        let callees = act.query(method, kinds.callees);
        if let Some(map) = callees.value().and_then(Value::as_map) {
            let targets: std::collections::BTreeSet<&String> = map.values().flatten().collect();
            for t in targets {
                let Some((class, name)) = t.split_once('.') else {
                    continue;
                };
                let e = EntityId::method(class, name);
                if &e == method {
                    continue;
                }
                let s = act.query(&e, kinds.purity);
                if let Some(v) = s.value() {
                    level = lattice.join(&level, v);
                }
                if !s.is_final() {
                    dependees.push(ObservedDependee::new(e, kinds.purity, s));
                }
            }
        }
        if !callees.is_final() {
            dependees.push(ObservedDependee::new(method.clone(), kinds.callees, callees));
        }
    }

    if dependees.is_empty() || level.as_atom() == Some(IMPURE) {
        return AnalysisResult::final_value(method.clone(), kinds.purity, level);
    }
    let ctx = ctx.clone();
    let m = method.clone();
    AnalysisResult::interim(
        method.clone(),
        kinds.purity,
        level,
        dependees,
        Box::new(move |act, _| evaluate(&ctx, act, &m)),
    )
}

/// Started for every method of the program.
pub fn spec(ctx: &Ctx) -> AnalysisSpecification {
    let program = ctx.program.clone();
    let all = Arc::new(move || program.methods().map(|(r, _)| EntityId::Method(r)).collect());
    let c = ctx.clone();
    AnalysisSpecification::new(NAME, ActivationMode::Eager(all), move |act, e| evaluate(&c, act, e))
        .derives(ctx.kinds.purity, Direction::Optimistic)
        .uses(UseDeclaration::optimistic(ctx.kinds.field_mutability))
        .uses(UseDeclaration::optimistic(ctx.kinds.callees))
        .uses(UseDeclaration::optimistic(ctx.kinds.purity))
}
