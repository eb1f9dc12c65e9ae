//! Canonical JSON writer. `parse_program(&print_program(p)) == p`.

use serde_json::{json, Value};

use crate::program::{ClassDecl, Program, Statement};

pub fn statement_json(s: &Statement) -> Value {
    fn opt(op: &str, local: &Option<blackboard::Name>, rest: &[&str]) -> Value {
        let mut parts = vec![Value::from(op)];
        if let Some(l) = local {
            parts.push(Value::from(&**l));
        }
        parts.extend(rest.iter().map(|s| Value::from(*s)));
        Value::Array(parts)
    }
    match s {
        Statement::New { local, class } => json!(["new", &**local, &**class]),
        Statement::Const { local } => json!(["const", &**local]),
        Statement::GetField {
            local,
            receiver,
            field,
        } => json!(["getfield", &**local, &**receiver, &**field]),
        Statement::PutField {
            receiver,
            field,
            source,
        } => json!(["putfield", &**receiver, &**field, &**source]),
        Statement::InvokeVirtual {
            local,
            receiver,
            method,
        } => opt("invokevirtual", local, &[receiver, method]),
        Statement::InvokeStatic {
            local,
            class,
            method,
        } => opt("invokestatic", local, &[class, method]),
        Statement::Return { local } => opt("return", local, &[]),
    }
}

fn class_json(c: &ClassDecl) -> Value {
    let fields: Vec<Value> = c
        .fields
        .iter()
        .map(|f| json!({"name": &*f.name, "type": &*f.ty, "final": f.is_final}))
        .collect();
    let methods: Vec<Value> = c
        .methods
        .iter()
        .map(|m| {
            let params: Vec<Value> = m
                .params
                .iter()
                .map(|p| json!({"name": &*p.name, "type": &*p.ty}))
                .collect();
            let body: Vec<Value> = m.body.iter().map(statement_json).collect();
            json!({"name": &*m.name, "params": params, "body": body})
        })
        .collect();
    let mut obj = json!({"name": &*c.name, "fields": fields, "methods": methods});
    if let Some(s) = &c.superclass {
        obj["super"] = Value::from(&**s);
    }
    obj
}

pub fn program_json(p: &Program) -> Value {
    let classes: Vec<Value> = p.classes().iter().map(class_json).collect();
    let entries: Vec<String> = p.entry_points().iter().map(ToString::to_string).collect();
    json!({"classes": classes, "entryPoints": entries})
}

/// Pretty-printed, newline-terminated document.
pub fn print_program(p: &Program) -> String {
    let mut s = serde_json::to_string_pretty(&program_json(p)).expect("json values serialize");
    s.push('\n');
    s
}
