//! A deliberately naive evaluator for the demo analyses. It recomputes every
//! rule over the whole program in rounds until nothing changes, first for the
//! pessimistic field types and then for everything else.
//!
//! None of the analysis code is reused: only the program model and the kind
//! vocabulary are shared with the solver-based implementation.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use blackboard::report::ResultsDocument;
use blackboard::{EntityId, MemberRef, PropertyKey, PropertyKindId, Value};
use blackboard_analyses::kinds::{
    ENTRY_POINT, IMMUTABLE_CLASS, IMMUTABLE_FIELD, IMPURE, MUTABLE_CLASS, MUTABLE_FIELD, PROJECT,
    PURE, SIDE_EFFECT_FREE,
};
use blackboard_analyses::{ConfigError, Configuration, Kinds};
use blackboard_ir::{Op, Origin, Program, INIT, ROOT};

type Types = BTreeSet<String>;

/// Oracle output: one final value per property the solver records.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub kinds: Kinds,
    pub values: BTreeMap<PropertyKey, Value>,
}

impl OracleResult {
    pub fn get(&self, entity: &EntityId, kind: PropertyKindId) -> Option<&Value> {
        self.values.get(&PropertyKey::new(entity.clone(), kind))
    }

    pub fn report(&self) -> ResultsDocument {
        ResultsDocument::from_values(&self.kinds.table, &self.values)
    }
}

struct World<'p> {
    p: &'p Program,
}

impl World<'_> {
    fn parent(&self, c: &str) -> Option<String> {
        self.p
            .classes()
            .iter()
            .find(|d| &*d.name == c)
            .and_then(|d| d.superclass.as_ref().map(|s| s.to_string()))
    }

    fn is_sub(&self, sub: &str, sup: &str) -> bool {
        let mut cur = Some(sub.to_owned());
        while let Some(c) = cur {
            if c == sup {
                return true;
            }
            cur = self.parent(&c);
        }
        false
    }

    fn subtypes(&self, of: &str) -> Types {
        self.p
            .classes()
            .iter()
            .map(|c| c.name.to_string())
            .filter(|c| self.is_sub(c, of))
            .collect()
    }

    fn declares(&self, class: &str, method: &str) -> bool {
        self.p
            .classes()
            .iter()
            .any(|c| &*c.name == class && c.methods.iter().any(|m| &*m.name == method))
    }

    /// Most derived declaration of `method` at or above `class`.
    fn lookup(&self, class: &str, method: &str) -> Option<String> {
        let mut cur = Some(class.to_owned());
        while let Some(c) = cur {
            if self.declares(&c, method) {
                return Some(format!("{c}.{method}"));
            }
            cur = self.parent(&c);
        }
        None
    }

    fn dispatch(&self, declared: &str, method: &str, instantiated: &Types) -> Types {
        instantiated
            .iter()
            .filter(|t| self.is_sub(t, declared))
            .filter_map(|t| self.lookup(t, method))
            .collect()
    }

    fn field_type(&self, f: &MemberRef) -> String {
        self.p.field(f).map(|d| d.ty.to_string()).unwrap_or_else(|| ROOT.into())
    }
}

fn site(m: &MemberRef, i: usize) -> String {
    format!("{m}@{i}")
}

/// Evaluates `names` on `program` without the solver.
pub fn naive_solve<S: AsRef<str>>(program: &Arc<Program>, names: &[S]) -> Result<OracleResult, ConfigError> {
    let config = Configuration::new(program.clone(), names)?;
    let kinds = config.kinds().clone();
    let has = |n: &str| names.iter().any(|x| x.as_ref() == n);
    let fm_on = has("field-mutability");
    let cm_on = has("class-mutability") || has("class-mutability-eager");
    let purity_on = has("purity");
    let cg_on = has("callgraph-rta");
    let ft_on = has("field-types");

    let p: &Program = program;
    let w = World { p };
    let methods: Vec<(MemberRef, &blackboard_ir::MethodDecl)> = p.methods().collect();
    let fields: Vec<MemberRef> = p.fields().map(|(r, _)| r).collect();
    let mut out: BTreeMap<PropertyKey, Value> = BTreeMap::new();
    let mut put = |e: EntityId, k: PropertyKindId, v: Value| {
        out.insert(PropertyKey::new(e, k), v);
    };

    // Stage 1: field types, greatest fixpoint from the declared types.
    let bound: BTreeMap<MemberRef, Types> =
        fields.iter().map(|f| (f.clone(), w.subtypes(&w.field_type(f)))).collect();
    let mut ft = bound.clone();
    if ft_on {
        loop {
            let mut changed = false;
            for f in &fields {
                let mut acc = Types::new();
                for (mref, m) in &methods {
                    for op in &m.ops {
                        if let Op::PutField { field, source, .. } = op {
                            if field != f {
                                continue;
                            }
                            match source {
                                Origin::New(t) => {
                                    acc.insert(t.to_string());
                                }
                                Origin::Const => {}
                                Origin::This => acc.extend(w.subtypes(&mref.class)),
                                Origin::Param(i) => acc.extend(w.subtypes(&m.params[*i].ty)),
                                Origin::Call => acc.extend(bound[f].iter().cloned()),
                                Origin::Field(g) => acc.extend(ft[g].iter().cloned()),
                            }
                        }
                    }
                }
                let new: Types = acc.intersection(&bound[f]).cloned().collect();
                if new != ft[f] {
                    ft.insert(f.clone(), new);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for f in &fields {
            put(EntityId::Field(f.clone()), kinds.field_types, Value::set(ft[f].clone()));
        }
    }

    // Stage 2: everything optimistic, least fixpoints from the bottom.
    let fm: BTreeMap<MemberRef, &str> = fields
        .iter()
        .map(|f| {
            if !fm_on {
                return (f.clone(), MUTABLE_FIELD);
            }
            let written_outside_init = methods.iter().any(|(mref, m)| {
                let allowed = &*m.name == INIT && mref.class == f.class;
                !allowed
                    && m.ops.iter().any(|op| matches!(op, Op::PutField { field, .. } if field == f))
            });
            (f.clone(), if written_outside_init { MUTABLE_FIELD } else { IMMUTABLE_FIELD })
        })
        .collect();
    if fm_on {
        for f in &fields {
            put(EntityId::Field(f.clone()), kinds.field_mutability, Value::Atom(fm[f]));
        }
    }

    if cm_on {
        let mut cm: BTreeMap<String, &str> = p
            .classes()
            .iter()
            .map(|c| (c.name.to_string(), IMMUTABLE_CLASS))
            .collect();
        loop {
            let mut changed = false;
            for c in p.classes() {
                if &*c.name == ROOT {
                    continue;
                }
                let own = c.fields.iter().any(|f| {
                    fm[&MemberRef::new(c.name.clone(), f.name.clone())] == MUTABLE_FIELD
                });
                let sup = c.superclass.as_ref().is_some_and(|s| cm[&**s] == MUTABLE_CLASS);
                if (own || sup) && cm[&*c.name] != MUTABLE_CLASS {
                    cm.insert(c.name.to_string(), MUTABLE_CLASS);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for (c, v) in &cm {
            put(EntityId::class(c.as_str()), kinds.class_mutability, Value::Atom(v));
        }
    }

    // Call graph.
    let mut callers: BTreeMap<String, Types> = BTreeMap::new();
    let mut callees: BTreeMap<String, BTreeMap<String, Types>> = BTreeMap::new();
    let mut instantiated = Types::new();
    if cg_on {
        for e in p.entry_points() {
            callers.entry(e.to_string()).or_default().insert(ENTRY_POINT.into());
        }
        loop {
            let mut changed = false;
            for (mref, m) in &methods {
                let me = mref.to_string();
                if !callers.contains_key(&me) {
                    continue;
                }
                let mut map: BTreeMap<String, Types> = BTreeMap::new();
                for (i, op) in m.ops.iter().enumerate() {
                    let targets: Types = match op {
                        Op::New { class } => {
                            changed |= instantiated.insert(class.to_string());
                            continue;
                        }
                        Op::InvokeStatic { target } => [target.to_string()].into(),
                        Op::InvokeVirtual {
                            receiver: Origin::Field(f),
                            method,
                            ..
                        } => {
                            let types = if ft_on { &ft[f] } else { &bound[f] };
                            types
                                .iter()
                                .flat_map(|t| w.dispatch(t, method, &instantiated))
                                .collect()
                        }
                        Op::InvokeVirtual {
                            declared, method, ..
                        } => w.dispatch(declared, method, &instantiated),
                        _ => continue,
                    };
                    for t in &targets {
                        changed |= callers.entry(t.clone()).or_default().insert(site(mref, i));
                    }
                    if !targets.is_empty() {
                        map.insert(i.to_string(), targets);
                    }
                }
                let slot = callees.entry(me).or_default();
                for (k, v) in map {
                    let s = slot.entry(k).or_default();
                    let before = s.len();
                    s.extend(v);
                    changed |= s.len() != before;
                }
            }
            if !changed {
                break;
            }
        }
    }

    // Callees as purity sees them: computed for reachable methods, otherwise
    // every method with the invoked name.
    let by_name = |name: &str| -> Types {
        methods
            .iter()
            .filter(|(_, m)| &*m.name == name)
            .map(|(r, _)| r.to_string())
            .collect()
    };
    let callees_of = |mref: &MemberRef, m: &blackboard_ir::MethodDecl| -> BTreeMap<String, Types> {
        if let Some(c) = callees.get(&mref.to_string()) {
            return c.clone();
        }
        let mut map = BTreeMap::new();
        for (i, op) in m.ops.iter().enumerate() {
            let name = match op {
                Op::InvokeVirtual { method, .. } => method.to_string(),
                Op::InvokeStatic { target } => target.name.to_string(),
                _ => continue,
            };
            let t = by_name(&name);
            if !t.is_empty() {
                map.insert(i.to_string(), t);
            }
        }
        map
    };
    let as_value = |map: &BTreeMap<String, Types>| {
        Value::map(map.iter().map(|(k, v)| (k.clone(), v.iter().cloned().collect::<Vec<_>>())))
    };
    let has_invoke = |m: &blackboard_ir::MethodDecl| {
        m.ops
            .iter()
            .any(|op| matches!(op, Op::InvokeVirtual { .. } | Op::InvokeStatic { .. }))
    };

    if cg_on {
        for (mref, m) in &methods {
            let e = EntityId::Method(mref.clone());
            let c = callers.get(&mref.to_string()).cloned().unwrap_or_default();
            put(e.clone(), kinds.callers, Value::set(c));
            put(e, kinds.callees, as_value(&callees_of(mref, m)));
        }
        put(EntityId::opaque(PROJECT), kinds.instantiated_types, Value::set(instantiated.clone()));
    }

    if purity_on {
        let rank = |v: &str| [PURE, SIDE_EFFECT_FREE, IMPURE].iter().position(|x| *x == v).unwrap();
        let mut level: BTreeMap<String, usize> =
            methods.iter().map(|(r, _)| (r.to_string(), 0)).collect();
        let local: BTreeMap<String, usize> = methods
            .iter()
            .map(|(r, m)| {
                let mut l = rank(PURE);
                for op in &m.ops {
                    match op {
                        Op::PutField { .. } => l = l.max(rank(IMPURE)),
                        Op::GetField { field, .. } if fm[field] == MUTABLE_FIELD => {
                            l = l.max(rank(SIDE_EFFECT_FREE))
                        }
                        _ => {}
                    }
                }
                (r.to_string(), l)
            })
            .collect();
        loop {
            let mut changed = false;
            for (mref, m) in &methods {
                let me = mref.to_string();
                let mut l = local[&me];
                if has_invoke(m) {
                    for t in callees_of(mref, m).values().flatten() {
                        l = l.max(level[t]);
                    }
                }
                if l != level[&me] {
                    level.insert(me, l);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for (mref, _) in &methods {
            let v = [PURE, SIDE_EFFECT_FREE, IMPURE][level[&mref.to_string()]];
            put(EntityId::Method(mref.clone()), kinds.purity, Value::Atom(v));
        }
        // Callees of methods with calls are read even when nobody derives them.
        if !cg_on {
            for (mref, m) in &methods {
                if has_invoke(m) {
                    put(EntityId::Method(mref.clone()), kinds.callees, as_value(&callees_of(mref, m)));
                }
            }
        }
    }

    // Field mutability read by other analyses falls back to MutableField.
    if !fm_on {
        let mut read = BTreeSet::new();
        if purity_on {
            for (_, m) in &methods {
                for op in &m.ops {
                    if let Op::GetField { field, .. } = op {
                        read.insert(field.clone());
                    }
                }
            }
        }
        if cm_on {
            for c in p.classes().iter().filter(|c| &*c.name != ROOT) {
                for f in &c.fields {
                    read.insert(MemberRef::new(c.name.clone(), f.name.clone()));
                }
            }
        }
        for f in read {
            put(EntityId::Field(f), kinds.field_mutability, Value::Atom(MUTABLE_FIELD));
        }
    }

    // Field types read by the call graph fall back to the declared types.
    if cg_on && !ft_on {
        for (mref, m) in &methods {
            if !callers.contains_key(&mref.to_string()) {
                continue;
            }
            for op in &m.ops {
                if let Op::InvokeVirtual {
                    receiver: Origin::Field(f),
                    ..
                } = op
                {
                    put(EntityId::Field(f.clone()), kinds.field_types, Value::set(bound[f].clone()));
                }
            }
        }
    }

    Ok(OracleResult { kinds, values: out })
}
