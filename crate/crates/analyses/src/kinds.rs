//! Property kinds of the demo analyses, instantiated per program.

use std::collections::BTreeMap;
use std::sync::Arc;

use blackboard::{Chain, EntityId, KindDefinition, KindTable, PointwiseSets, Powerset, PropertyKindId, Value};
use blackboard_ir::{Op, Program};

pub const IMMUTABLE_FIELD: &str = "ImmutableField";
pub const MUTABLE_FIELD: &str = "MutableField";
pub const IMMUTABLE_CLASS: &str = "ImmutableClass";
pub const MUTABLE_CLASS: &str = "MutableClass";
pub const PURE: &str = "Pure";
pub const SIDE_EFFECT_FREE: &str = "SideEffectFree";
pub const IMPURE: &str = "Impure";
pub const NO_CALLERS: &str = "NoCallers";
/// Caller record marking an entry point.
pub const ENTRY_POINT: &str = "EntryPoint";
/// The entity carrying the instantiated types of the whole program.
pub const PROJECT: &str = "project";

pub fn project() -> EntityId {
    EntityId::opaque(PROJECT)
}

pub fn field_mutability_lattice() -> Chain {
    Chain::new(&[IMMUTABLE_FIELD, MUTABLE_FIELD])
}

pub fn class_mutability_lattice() -> Chain {
    Chain::new(&[IMMUTABLE_CLASS, MUTABLE_CLASS])
}

pub fn purity_lattice() -> Chain {
    Chain::new(&[PURE, SIDE_EFFECT_FREE, IMPURE])
}

/// Caller record for statement `index` of `method`.
pub fn call_site_label(method: &blackboard::MemberRef, index: usize) -> String {
    EntityId::call_site(method.clone(), index as u32).to_string()
}

/// The callees fallback: every invoke statement may reach any method of the
/// program with the invoked name.
pub fn callees_fallback(program: &Program, method: &blackboard::MemberRef) -> Value {
    let Some(decl) = program.method(method) else {
        return Value::empty_map();
    };
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, op) in decl.ops.iter().enumerate() {
        let name = match op {
            Op::InvokeVirtual { method, .. } => method.clone(),
            Op::InvokeStatic { target } => target.name.clone(),
            _ => continue,
        };
        let targets = program
            .methods()
            .filter(|(_, m)| m.name == name)
            .map(|(r, _)| r.to_string())
            .collect();
        out.insert(i.to_string(), targets);
    }
    Value::map(out)
}

/// FieldTypes top for a field: every subtype of its declared type.
pub fn declared_field_types(program: &Program, field: &EntityId) -> Value {
    let decl = field.as_field().and_then(|f| program.field(f));
    match decl.and_then(|d| program.subtypes_of(&d.ty).ok()) {
        Some(types) => Value::set(types.iter().map(|t| t.to_string())),
        None => Value::empty_set(),
    }
}

/// Identifiers of the demo kinds within one [`KindTable`].
#[derive(Debug, Clone)]
pub struct Kinds {
    pub table: Arc<KindTable>,
    pub field_mutability: PropertyKindId,
    pub class_mutability: PropertyKindId,
    pub purity: PropertyKindId,
    pub callers: PropertyKindId,
    pub callees: PropertyKindId,
    pub instantiated_types: PropertyKindId,
    pub field_types: PropertyKindId,
}

impl Kinds {
    pub fn for_program(program: &Arc<Program>) -> Self {
        let classes: Vec<String> = program.class_names().iter().map(|c| c.to_string()).collect();
        let methods: Vec<String> = program.methods().map(|(r, _)| r.to_string()).collect();
        let mut sites = vec![ENTRY_POINT.to_owned()];
        let mut longest = 0;
        for (r, m) in program.methods() {
            longest = longest.max(m.ops.len());
            for (i, op) in m.ops.iter().enumerate() {
                if matches!(op, Op::InvokeVirtual { .. } | Op::InvokeStatic { .. }) {
                    sites.push(call_site_label(&r, i));
                }
            }
        }

        let mut t = KindTable::new();
        let mut reg = |def| t.register(def).expect("demo kind names are distinct");
        let field_mutability = reg(KindDefinition::new("FieldMutability", field_mutability_lattice()));
        let class_mutability = reg(KindDefinition::new("ClassMutability", class_mutability_lattice()));
        let purity = reg(KindDefinition::new("Purity", purity_lattice()));
        let callers = reg(
            KindDefinition::new("Callers", Powerset::new(sites).with_empty_label(NO_CALLERS))
                .default_value(|_| Value::empty_set()),
        );
        let p = program.clone();
        let callees = reg(
            KindDefinition::new("Callees", PointwiseSets::new((0..longest).map(|i| i.to_string()), methods))
                .fallback(move |e| match e.as_method() {
                    Some(m) => callees_fallback(&p, m),
                    None => Value::empty_map(),
                }),
        );
        let instantiated_types = reg(
            KindDefinition::new("InstantiatedTypes", Powerset::new(classes.clone()))
                .default_value(|_| Value::empty_set()),
        );
        let p = program.clone();
        let field_types = reg(
            KindDefinition::new("FieldTypes", Powerset::new(classes))
                .fallback(move |e| declared_field_types(&p, e)),
        );
        Self {
            table: Arc::new(t),
            field_mutability,
            class_mutability,
            purity,
            callers,
            callees,
            instantiated_types,
            field_types,
        }
    }
}
