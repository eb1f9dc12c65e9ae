use std::sync::Arc;

use blackboard::{EntityId, SolvedStore, SolverConfig, TaskKind, Value};
use blackboard_analyses::kinds::*;
use blackboard_analyses::{Configuration, STANDARD};
use blackboard_ir::{parse_program, Program};

const FIXTURE: &str = include_str!("../../../fixtures/immut.json");

fn program(text: &str) -> Arc<Program> {
    Arc::new(parse_program(text).expect("test program parses"))
}

/// Object plus the given classes, with the given entry points.
fn doc(classes: &str, entries: &[&str]) -> Arc<Program> {
    let entries: Vec<String> = entries.iter().map(|e| format!("\"{e}\"")).collect();
    program(&format!(
        r#"{{"classes":[{{"name":"Object"}},{classes}],"entryPoints":[{}]}}"#,
        entries.join(",")
    ))
}

fn solve(p: &Arc<Program>, names: &[&str]) -> (Configuration, SolvedStore) {
    let c = Configuration::new(p.clone(), names).unwrap();
    let s = c.solve(&SolverConfig::default().checked().traced()).unwrap();
    (c, s)
}

fn atom(s: &SolvedStore, e: EntityId, k: blackboard::PropertyKindId) -> &'static str {
    s.get(&e, k).and_then(Value::as_atom).unwrap_or("<missing>")
}

fn set(items: &[&str]) -> Value {
    Value::set(items.iter().copied())
}

#[test]
fn fixture_mutability_and_purity() {
    let p = program(FIXTURE);
    let (c, s) = solve(&p, &STANDARD);
    let k = c.kinds();
    assert_eq!(atom(&s, EntityId::field("A", "x"), k.field_mutability), IMMUTABLE_FIELD);
    assert_eq!(atom(&s, EntityId::field("B", "y"), k.field_mutability), MUTABLE_FIELD);
    assert_eq!(atom(&s, EntityId::class("A"), k.class_mutability), IMMUTABLE_CLASS);
    assert_eq!(atom(&s, EntityId::class("B"), k.class_mutability), MUTABLE_CLASS);
    assert_eq!(atom(&s, EntityId::class("Object"), k.class_mutability), IMMUTABLE_CLASS);
    assert_eq!(atom(&s, EntityId::method("A", "m"), k.purity), PURE);
    assert_eq!(atom(&s, EntityId::method("B", "setY"), k.purity), IMPURE);
    // Object's mutability is preset, never computed.
    assert!(!s
        .trace()
        .iter()
        .any(|r| r.entity == "Object" && r.kind == "ClassMutability" && r.task == TaskKind::Initial));
}

#[test]
fn fixture_call_graph() {
    let p = program(FIXTURE);
    let (c, s) = solve(&p, &STANDARD);
    let k = c.kinds();
    let it = s.get(&project(), k.instantiated_types).unwrap();
    assert!(it.as_set().unwrap().contains("B"));
    let main = EntityId::method("Main", "main");
    let callees = s.get(&main, k.callees).unwrap().as_map().unwrap().clone();
    assert_eq!(callees["1"], ["B.setY".to_string()].into());
    // B inherits m from A.
    assert_eq!(callees["2"], ["A.m".to_string()].into());
    assert_eq!(s.get(&main, k.callers), Some(&set(&[ENTRY_POINT])));
    assert_eq!(s.get(&EntityId::method("A", "m"), k.callers), Some(&set(&["Main.main@2"])));
    // B.<init> is never called.
    assert_eq!(s.get(&EntityId::method("B", "<init>"), k.callers), Some(&Value::empty_set()));
    assert!(!s
        .trace()
        .iter()
        .any(|r| r.entity == "B.<init>" && r.kind == "Callees" && r.task == TaskKind::Initial));
}

#[test]
fn override_is_dispatched_to() {
    let p = doc(
        r#"{"name":"A","super":"Object","methods":[{"name":"m","body":[]}]},
           {"name":"B","super":"A","methods":[{"name":"m","body":[]}]},
           {"name":"Main","super":"Object","methods":[{"name":"main","params":[{"name":"r","type":"A"}],
             "body":[["new","l0","B"],["invokevirtual","r","m"]]}]}"#,
        &["Main.main"],
    );
    let (c, s) = solve(&p, &["callgraph-rta"]);
    let callees = s.get(&EntityId::method("Main", "main"), c.kinds().callees).unwrap();
    assert_eq!(callees, &Value::map([("1", vec!["B.m".to_string()])]));
}

#[test]
fn nothing_instantiated_means_no_callees() {
    let p = doc(
        r#"{"name":"A","super":"Object","methods":[{"name":"m","body":[]}]},
           {"name":"Main","super":"Object","methods":[{"name":"main","params":[{"name":"r","type":"A"}],
             "body":[["invokevirtual","r","m"]]}]}"#,
        &["Main.main"],
    );
    let (c, s) = solve(&p, &["callgraph-rta"]);
    let k = c.kinds();
    assert_eq!(s.get(&EntityId::method("Main", "main"), k.callees), Some(&Value::empty_map()));
    assert_eq!(s.get(&project(), k.instantiated_types), Some(&Value::empty_set()));
    assert_eq!(s.get(&EntityId::method("A", "m"), k.callers), Some(&Value::empty_set()));
}

#[test]
fn mutually_recursive_methods_are_pure() {
    let p = doc(
        r#"{"name":"R","super":"Object","methods":[
             {"name":"f","body":[["const","l0"],["invokestatic","R","g"],["return","l0"]]},
             {"name":"g","body":[["invokestatic","l0","R","f"],["return","l0"]]}]}"#,
        &["R.f"],
    );
    for names in [&["purity", "callgraph-rta"][..], &["purity"][..]] {
        let (c, s) = solve(&p, names);
        let k = c.kinds();
        assert_eq!(atom(&s, EntityId::method("R", "f"), k.purity), PURE, "{names:?}");
        assert_eq!(atom(&s, EntityId::method("R", "g"), k.purity), PURE, "{names:?}");
    }
}

#[test]
fn purity_levels() {
    let p = doc(
        r#"{"name":"C","super":"Object","fields":[{"name":"v","type":"Object","final":false}],
            "methods":[
             {"name":"read","body":[["getfield","l0","this","v"],["return","l0"]]},
             {"name":"write","body":[["putfield","this","v","this"]]},
             {"name":"alloc","body":[["new","l0","C"],["return","l0"]]},
             {"name":"callsRead","body":[["invokevirtual","this","read"]]}]}"#,
        &["C.write"],
    );
    let (c, s) = solve(&p, &["field-mutability", "purity", "callgraph-rta"]);
    let k = c.kinds();
    let at = |m: &str| atom(&s, EntityId::method("C", m), k.purity);
    assert_eq!(at("read"), SIDE_EFFECT_FREE);
    assert_eq!(at("write"), IMPURE);
    assert_eq!(at("alloc"), PURE);
    // Unreachable, so its callees are the name-matching fallback.
    assert_eq!(at("callsRead"), SIDE_EFFECT_FREE);
}

#[test]
fn purity_without_field_mutability_uses_fallbacks() {
    let p = program(FIXTURE);
    let (c, s) = solve(&p, &["purity"]);
    let k = c.kinds();
    // The fallback for field mutability is MutableField.
    assert_eq!(atom(&s, EntityId::field("A", "x"), k.field_mutability), MUTABLE_FIELD);
    assert_eq!(atom(&s, EntityId::method("A", "m"), k.purity), SIDE_EFFECT_FREE);
    // Callees fallback: every method with the invoked name.
    let main = s.get(&EntityId::method("Main", "main"), k.callees).unwrap();
    assert_eq!(main.as_map().unwrap()["2"], ["A.m".to_string()].into());
    assert_eq!(s.stats().fallbacks_inserted, 2);
}

#[test]
fn field_mutability_rules() {
    let p = doc(
        r#"{"name":"C","super":"Object","fields":[
              {"name":"a","type":"Object","final":false},
              {"name":"b","type":"Object","final":true},
              {"name":"c","type":"Object","final":false}],
            "methods":[{"name":"<init>","body":[["putfield","this","a","this"],["putfield","this","b","this"]]}]},
           {"name":"D","super":"C","methods":[{"name":"<init>","body":[["putfield","this","b","this"]]}]}"#,
        &[],
    );
    let (c, s) = solve(&p, &["field-mutability"]);
    let k = c.kinds();
    assert_eq!(atom(&s, EntityId::field("C", "a"), k.field_mutability), IMMUTABLE_FIELD);
    // Written in a subclass constructor.
    assert_eq!(atom(&s, EntityId::field("C", "b"), k.field_mutability), MUTABLE_FIELD);
    assert_eq!(atom(&s, EntityId::field("C", "c"), k.field_mutability), IMMUTABLE_FIELD);
}

fn field_types_program() -> Arc<Program> {
    doc(
        r#"{"name":"A","super":"Object"},
           {"name":"B","super":"A"},
           {"name":"H","super":"Object","fields":[
              {"name":"one","type":"A","final":false},
              {"name":"none","type":"A","final":false},
              {"name":"f","type":"A","final":false},
              {"name":"g","type":"A","final":false},
              {"name":"p","type":"A","final":false},
              {"name":"q","type":"A","final":false}],
            "methods":[{"name":"w","body":[
              ["new","l0","B"],
              ["putfield","this","one","l0"],
              ["putfield","this","g","l0"],
              ["getfield","l1","this","g"],
              ["putfield","this","f","l1"],
              ["getfield","l2","this","q"],
              ["putfield","this","p","l2"],
              ["getfield","l3","this","p"],
              ["putfield","this","q","l3"]]}]}"#,
        &[],
    )
}

#[test]
fn field_types() {
    let p = field_types_program();
    let (c, s) = solve(&p, &["field-types"]);
    let k = c.kinds();
    let ft = |f: &str| s.get(&EntityId::field("H", f), k.field_types).cloned();
    assert_eq!(ft("one"), Some(set(&["B"])));
    assert_eq!(ft("none"), Some(Value::empty_set()));
    assert_eq!(ft("f"), Some(set(&["B"])));
    // A copy cycle without other sources stays at the declared types.
    assert_eq!(ft("p"), Some(set(&["A", "B"])));
    assert_eq!(ft("q"), Some(set(&["A", "B"])));
    assert!(s.stats().cycle_finalizations >= 2);
}

#[test]
fn eager_class_mutability_runs_top_down() {
    let p = doc(
        r#"{"name":"A","super":"Object"},
           {"name":"B","super":"A","fields":[{"name":"x","type":"Object","final":true}]},
           {"name":"C","super":"B"},
           {"name":"D","super":"A"},
           {"name":"E","super":"Object"}"#,
        &[],
    );
    let (c, s) = solve(&p, &["class-mutability-eager", "field-mutability"]);
    let k = c.kinds();
    for cls in ["A", "B", "C", "D", "E", "Object"] {
        assert_eq!(atom(&s, EntityId::class(cls), k.class_mutability), IMMUTABLE_CLASS);
    }
    let first = |cls: &str| {
        s.trace()
            .iter()
            .position(|r| r.entity == cls && r.task == TaskKind::Initial)
            .unwrap_or_else(|| panic!("{cls} was never activated"))
    };
    assert!(first("A") < first("B"));
    assert!(first("B") < first("C"));
    assert!(first("A") < first("D"));
}

#[test]
fn conflicting_class_mutability_variants_are_rejected() {
    let p = program(FIXTURE);
    let err = Configuration::new(p, &["class-mutability", "class-mutability-eager"]).unwrap_err();
    assert!(err.to_string().contains("more than one analysis"), "{err}");
}

#[test]
fn unknown_analysis_is_rejected() {
    let p = program(FIXTURE);
    assert!(Configuration::new(p.clone(), &["nope"]).is_err());
    assert!(Configuration::new(p, &[] as &[&str]).is_err());
}
