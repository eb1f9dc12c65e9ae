//! Field mutability: a field is mutable if it is written anywhere other than
//! a constructor of its declaring class.

use blackboard::{ActivationMode, AnalysisResult, AnalysisSpecification, Direction, MemberRef, Value};
use blackboard_ir::{Op, Program};

use crate::kinds::{IMMUTABLE_FIELD, MUTABLE_FIELD};
use crate::Ctx;

pub const NAME: &str = "field-mutability";

pub fn is_mutable(program: &Program, field: &MemberRef) -> bool {
    program.methods().any(|(r, m)| {
        let in_own_init = m.is_init() && r.class == field.class;
        !in_own_init
            && m
                .ops
                .iter()
                .any(|op| matches!(op, Op::PutField { field: f, .. } if f == field))
    })
}

pub fn spec(ctx: &Ctx) -> AnalysisSpecification {
    let kind = ctx.kinds.field_mutability;
    let program = ctx.program.clone();
    AnalysisSpecification::new(NAME, ActivationMode::Lazy, move |_, e| {
        let mutable = e.as_field().is_some_and(|f| is_mutable(&program, f));
        let v = if mutable { MUTABLE_FIELD } else { IMMUTABLE_FIELD };
        AnalysisResult::final_value(e.clone(), kind, Value::Atom(v))
    })
    .derives(kind, Direction::Optimistic)
}
