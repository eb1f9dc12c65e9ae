//! Pessimistic field types: starts from every subtype of the declared type
//! and narrows to the types actually stored.

use std::collections::BTreeSet;

use blackboard::{
    Activation, ActivationMode, AnalysisResult, AnalysisSpecification, Direction, EntityId,
    MemberRef, ObservedDependee, UseDeclaration, Value,
};
use blackboard_ir::{Op, Origin, Program};

use crate::kinds::declared_field_types;
use crate::Ctx;

pub const NAME: &str = "field-types";

/// What a store into `field` may write, given the source's origin, as seen
/// from a method of `class`. Sources loaded from fields are not handled here.
pub fn source_types(
    program: &Program,
    class: &str,
    params: &[blackboard_ir::Param],
    field: &MemberRef,
    source: &Origin,
) -> BTreeSet<String> {
    let subtypes = |c: &str| -> BTreeSet<String> {
        program
            .subtypes_of(c)
            .map(|s| s.iter().map(|t| t.to_string()).collect())
            .unwrap_or_default()
    };
    match source {
        Origin::New(t) => [t.to_string()].into(),
        Origin::Const | Origin::Field(_) => BTreeSet::new(),
        Origin::This => subtypes(class),
        Origin::Param(i) => subtypes(&params[*i].ty),
        Origin::Call => program.field(field).map(|f| subtypes(&f.ty)).unwrap_or_default(),
    }
}

fn evaluate(ctx: &Ctx, act: &mut Activation<'_>, field: &EntityId) -> AnalysisResult {
    let kind = ctx.kinds.field_types;
    let program = &ctx.program;
    let top = declared_field_types(program, field);
    let Some(fref) = field.as_field() else {
        return AnalysisResult::final_value(field.clone(), kind, top);
    };
    let bound = top.as_set().cloned().unwrap_or_default();

    let mut types = BTreeSet::new();
    let mut dependees = Vec::new();
    for (mref, m) in program.methods() {
        for op in &m.ops {
            let Op::PutField { field: f, source, .. } = op else {
                continue;
            };
            if f != fref {
                continue;
            }
            match source {
                Origin::Field(g) => {
                    if g == fref {
                        // Copying a field into itself never narrows it.
                        types.extend(bound.iter().cloned());
                        continue;
                    }
                    let e = EntityId::Field(g.clone());
                    let s = act.query(&e, kind);
                    match s.value().and_then(Value::as_set) {
                        Some(v) => types.extend(v.iter().cloned()),
                        None => types.extend(declared_field_types(program, &e).as_set().into_iter().flatten().cloned()),
                    }
                    if !s.is_final() {
                        dependees.push(ObservedDependee::new(e, kind, s));
                    }
                }
                other => types.extend(source_types(program, &mref.class, &m.params, fref, other)),
            }
        }
    }
    let value = Value::set(types.intersection(&bound).cloned());
    if dependees.is_empty() {
        return AnalysisResult::final_value(field.clone(), kind, value);
    }
    let ctx = ctx.clone();
    let f = field.clone();
    AnalysisResult::interim(
        field.clone(),
        kind,
        value,
        dependees,
        Box::new(move |act, _| evaluate(&ctx, act, &f)),
    )
}

/// Started lazily for every field whose types are queried.
pub fn spec(ctx: &Ctx) -> AnalysisSpecification {
    let c = ctx.clone();
    AnalysisSpecification::new(NAME, ActivationMode::Lazy, move |act, e| evaluate(&c, act, e))
        .derives(ctx.kinds.field_types, Direction::Pessimistic)
        .uses(UseDeclaration::pessimistic(ctx.kinds.field_types))
}
