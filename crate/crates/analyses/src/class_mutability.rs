//! Class mutability: a class is immutable if all its own fields and its
//! superclass are.

use std::sync::Arc;

use blackboard::{
    ActivationMode, Activation, AnalysisResult, AnalysisSpecification, Direction, EntityId,
    ObservedDependee, PropertyState, UseDeclaration, Value,
};
use blackboard_ir::ROOT;

use crate::kinds::{IMMUTABLE_CLASS, MUTABLE_CLASS, MUTABLE_FIELD};
use crate::Ctx;

pub const NAME: &str = "class-mutability";
pub const EAGER_NAME: &str = "class-mutability-eager";

fn evaluate(ctx: &Ctx, act: &mut Activation<'_>, class: &EntityId) -> AnalysisResult {
    let kinds = &ctx.kinds;
    let kind = kinds.class_mutability;
    let decl = class.as_class().and_then(|c| ctx.program.class(c));
    let Some(decl) = decl else {
        return AnalysisResult::final_value(class.clone(), kind, Value::Atom(MUTABLE_CLASS));
    };

    let mut mutable = false;
    let mut dependees = Vec::new();
    let mut inspect = |entity: EntityId, k, bad: &str, state: PropertyState| {
        match &state {
            PropertyState::Final(v) | PropertyState::Interim { value: v, .. } if v.as_atom() == Some(bad) => {
                mutable = true
            }
            PropertyState::Final(_) => {}
            _ => dependees.push(ObservedDependee::new(entity, k, state)),
        }
    };
    for f in &decl.fields {
        let e = EntityId::field(decl.name.clone(), f.name.clone());
        let s = act.query(&e, kinds.field_mutability);
        inspect(e, kinds.field_mutability, MUTABLE_FIELD, s);
    }
    if let Some(sup) = &decl.superclass {
        let e = EntityId::Class(sup.clone());
        let s = act.query(&e, kind);
        inspect(e, kind, MUTABLE_CLASS, s);
    }

    if mutable {
        return AnalysisResult::final_value(class.clone(), kind, Value::Atom(MUTABLE_CLASS));
    }
    if dependees.is_empty() {
        return AnalysisResult::final_value(class.clone(), kind, Value::Atom(IMMUTABLE_CLASS));
    }
    let ctx = ctx.clone();
    let class2 = class.clone();
    AnalysisResult::interim(
        class.clone(),
        kind,
        Value::Atom(IMMUTABLE_CLASS),
        dependees,
        Box::new(move |act, _| evaluate(&ctx, act, &class2)),
    )
}

fn build(ctx: &Ctx, name: &'static str, mode: ActivationMode, eager: bool) -> AnalysisSpecification {
    let kind = ctx.kinds.class_mutability;
    let c = ctx.clone();
    let iaf: blackboard::registry::InitialAnalysisFunction = Arc::new(move |act, e| {
        let result = evaluate(&c, act, e);
        if !eager {
            return result;
        }
        let subclasses = e
            .as_class()
            .map(|cls| {
                c.program
                    .direct_subclasses(cls)
                    .map(|s| (name.to_owned(), EntityId::Class(s.clone())))
                    .collect()
            })
            .unwrap_or_default();
        result.with_followups(subclasses)
    });
    let run = iaf.clone();
    AnalysisSpecification::new(name, mode, move |act, e| run(act, e))
    .derives(kind, Direction::Optimistic)
    .uses(UseDeclaration::optimistic(ctx.kinds.field_mutability))
    .uses(UseDeclaration::optimistic(kind))
    .on_register(move |r| {
        r.preset_final(EntityId::class(ROOT), kind, Value::Atom(IMMUTABLE_CLASS))?;
        r.install(iaf.clone());
        Ok(())
    })
}

/// Started lazily for every class whose mutability is queried.
pub fn spec(ctx: &Ctx) -> AnalysisSpecification {
    build(ctx, NAME, ActivationMode::Lazy, false)
}

/// Started for the direct subclasses of `Object`; every activation schedules
/// the direct subclasses of its class, so the hierarchy is visited top-down.
pub fn eager_spec(ctx: &Ctx) -> AnalysisSpecification {
    let program = ctx.program.clone();
    let roots = Arc::new(move || {
        program
            .direct_subclasses(ROOT)
            .map(|c| EntityId::Class(c.clone()))
            .collect()
    });
    build(ctx, EAGER_NAME, ActivationMode::Eager(roots), true)
}
