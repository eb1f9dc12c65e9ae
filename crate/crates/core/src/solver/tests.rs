use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use super::*;
use crate::lattice::{Chain, Counter, Direction, KindDefinition, ObservedDependee};
use crate::registry::{validate, AnalysisSpecification, UseDeclaration};
use crate::result::AnalysisResult;
use crate::trace::TaskKind;

const LEVELS: &[&str] = &["Low", "Mid", "High"];

fn e(name: &str) -> EntityId {
    EntityId::opaque(name)
}

fn board(kinds: KindTable, specs: Vec<AnalysisSpecification>) -> Blackboard {
    board_with_presets(kinds, specs, BTreeSet::new())
}

fn board_with_presets(
    kinds: KindTable,
    specs: Vec<AnalysisSpecification>,
    presets: BTreeSet<PropertyKindId>,
) -> Blackboard {
    let schedule = validate(specs, &presets, &kinds).unwrap();
    Blackboard::new(Arc::new(kinds), schedule)
}

fn level_kind(kinds: &mut KindTable, name: &str) -> PropertyKindId {
    kinds
        .register(KindDefinition::new(name, Chain::new(LEVELS)))
        .unwrap()
}

fn all_configs() -> Vec<SolverConfig> {
    let mut out = Vec::new();
    for policy in SchedulerPolicy::ALL {
        for workers in [1, 2, 8] {
            out.push(SolverConfig::default().with_policy(policy).with_workers(workers).checked());
        }
    }
    out
}

#[test]
fn empty_schedule_solves_to_empty_store() {
    let mut b = board(KindTable::new(), vec![]);
    b.register_all().unwrap();
    let store = b.solve(&SolverConfig::default()).unwrap();
    assert!(store.is_empty());
    assert_eq!(store.stats().activations, 0);
}

#[test]
fn presets_are_final_and_write_once() {
    let mut kinds = KindTable::new();
    let k = level_kind(&mut kinds, "L");
    let spec = AnalysisSpecification::new("l", ActivationMode::Lazy, move |_, en| {
        AnalysisResult::final_value(en.clone(), k, Value::Atom("Mid"))
    })
    .derives(k, Direction::Optimistic)
    .on_register(move |r| {
        assert!(matches!(
            r.get(&EntityId::opaque("x"), k),
            Err(SolverError::RegistrationPhaseViolation(_))
        ));
        r.preset_final(EntityId::opaque("x"), k, Value::Atom("Low"))?;
        r.install(Arc::new(move |_, en| {
            AnalysisResult::final_value(en.clone(), k, Value::Atom("Mid"))
        }));
        Ok(())
    });
    let mut b = board_with_presets(kinds, vec![spec], BTreeSet::from([k]));
    assert!(matches!(b.get(&e("x"), k), Err(SolverError::RegistrationPhaseViolation(_))));
    b.register_all().unwrap();
    assert_eq!(
        b.preset_final(e("x"), k, Value::Atom("High")),
        Err(SolverError::AlreadySet("x L".into()))
    );
    assert_eq!(b.get(&e("x"), k).unwrap(), PropertyState::Final(Value::Atom("Low")));
    b.request(e("x"), k);
    b.request(e("y"), k);
    let store = b.solve(&SolverConfig::default()).unwrap();
    assert_eq!(store.get(&e("x"), k), Some(&Value::Atom("Low")));
    assert_eq!(store.get(&e("y"), k), Some(&Value::Atom("Mid")));
    // the preset key never got an activation
    assert_eq!(store.stats().initial_activations, 1);
    assert!(matches!(
        b.preset_final(e("z"), k, Value::Atom("Low")),
        Err(SolverError::PhaseViolation(_))
    ));
    assert!(matches!(b.solve(&SolverConfig::default()), Err(SolverError::PhaseViolation(_))));
}

#[test]
fn lazy_analysis_waits_for_lazy_dependee() {
    // Class-mutability-like: outer is the join of inner over entity names.
    let mut kinds = KindTable::new();
    let inner = level_kind(&mut kinds, "Inner");
    let outer = level_kind(&mut kinds, "Outer");
    let inner_spec = AnalysisSpecification::new("inner", ActivationMode::Lazy, move |_, en| {
        let v = if en.to_string().starts_with('m') { "High" } else { "Low" };
        AnalysisResult::final_value(en.clone(), inner, Value::Atom(v))
    })
    .derives(inner, Direction::Optimistic);
    fn outer_step(act: &mut Activation<'_>, en: &EntityId, inner: PropertyKindId, outer: PropertyKindId) -> AnalysisResult {
        let parts = [format!("{en}1"), format!("{en}2")];
        let mut deps = Vec::new();
        let mut worst = "Low";
        for p in &parts {
            let pe = EntityId::opaque(p.as_str());
            match act.query(&pe, inner) {
                PropertyState::Final(Value::Atom("High")) => {
                    return AnalysisResult::final_value(en.clone(), outer, Value::Atom("High"))
                }
                PropertyState::Final(_) => {}
                s @ PropertyState::Interim { .. } | s @ PropertyState::NoValue => {
                    if let Some(Value::Atom(a)) = s.value() {
                        if *a == "Mid" {
                            worst = "Mid";
                        }
                    }
                    deps.push(ObservedDependee::new(pe, inner, s));
                }
            }
        }
        if deps.is_empty() {
            return AnalysisResult::final_value(en.clone(), outer, Value::Atom(worst));
        }
        let en2 = en.clone();
        AnalysisResult::interim(
            en.clone(),
            outer,
            Value::Atom(worst),
            deps,
            Box::new(move |act, _| outer_step(act, &en2, inner, outer)),
        )
    }
    let outer_spec = AnalysisSpecification::new("outer", ActivationMode::Lazy, move |act, en| {
        outer_step(act, en, inner, outer)
    })
    .derives(outer, Direction::Optimistic)
    .uses(UseDeclaration::optimistic(inner));
    for config in all_configs() {
        let mut b = board(kinds.clone(), vec![inner_spec.clone(), outer_spec.clone()]);
        b.register_all().unwrap();
        b.request(e("a"), outer);
        b.request(e("m"), outer);
        let store = b.solve(&config).unwrap();
        assert_eq!(store.get(&e("a"), outer), Some(&Value::Atom("Low")));
        assert_eq!(store.get(&e("m"), outer), Some(&Value::Atom("High")));
        assert_eq!(store.get(&e("a1"), inner), Some(&Value::Atom("Low")));
    }
}

/// Each entity's value is the join of its own base level and the values of
/// the entities it names; the graph may be cyclic.
fn graph_spec(kind: PropertyKindId, edges: Arc<Vec<(&'static str, &'static str, Vec<&'static str>)>>) -> AnalysisSpecification {
    fn step(
        act: &mut Activation<'_>,
        en: &EntityId,
        kind: PropertyKindId,
        edges: Arc<Vec<(&'static str, &'static str, Vec<&'static str>)>>,
    ) -> AnalysisResult {
        let name = en.to_string();
        let (_, base, succs) = edges.iter().find(|(n, _, _)| *n == name).unwrap().clone();
        let rank = |a: &str| LEVELS.iter().position(|l| *l == a).unwrap();
        let mut cur = base;
        let mut deps = Vec::new();
        for s in succs {
            let se = EntityId::opaque(s);
            let st = act.query(&se, kind);
            if let Some(Value::Atom(a)) = st.value() {
                if rank(a) > rank(cur) {
                    cur = a;
                }
            }
            if !st.is_final() {
                deps.push(ObservedDependee::new(se, kind, st));
            }
        }
        if cur == "High" || deps.is_empty() {
            return AnalysisResult::final_value(en.clone(), kind, Value::Atom(cur));
        }
        let en2 = en.clone();
        AnalysisResult::interim(
            en.clone(),
            kind,
            Value::Atom(cur),
            deps,
            Box::new(move |act, _| step(act, &en2, kind, edges)),
        )
    }
    let names: Vec<&'static str> = edges.iter().map(|(n, _, _)| *n).collect();
    AnalysisSpecification::new(
        "graph",
        ActivationMode::Eager(Arc::new(move || names.iter().map(|n| EntityId::opaque(*n)).collect())),
        move |act, en| step(act, en, kind, edges.clone()),
    )
    .derives(kind, Direction::Optimistic)
    .uses(UseDeclaration::optimistic(kind))
}

#[test]
fn closed_cycles_finalize_at_current_values() {
    let mut kinds = KindTable::new();
    let k = level_kind(&mut kinds, "L");
    let edges = Arc::new(vec![
        ("f", "Low", vec!["g"]),
        ("g", "Low", vec!["f"]),
        ("self", "Mid", vec!["self"]),
        // open cycle p <-> q also waits on r, which waits on the closed pair
        ("p", "Low", vec!["q", "r"]),
        ("q", "Low", vec!["p"]),
        ("r", "Low", vec!["s", "t"]),
        ("s", "Mid", vec!["t"]),
        ("t", "Low", vec!["s"]),
    ]);
    for config in all_configs() {
        let mut b = board(kinds.clone(), vec![graph_spec(k, edges.clone())]);
        b.register_all().unwrap();
        let store = b.solve(&config.clone().traced()).unwrap();
        let get = |n: &str| store.get(&e(n), k).cloned();
        assert_eq!(get("f"), Some(Value::Atom("Low")));
        assert_eq!(get("g"), Some(Value::Atom("Low")));
        assert_eq!(get("self"), Some(Value::Atom("Mid")));
        for n in ["p", "q", "r", "s", "t"] {
            assert_eq!(get(n), Some(Value::Atom("Mid")), "{n} under {config:?}");
        }
        // p and q can only be finalized after s and t
        let pos = |n: &str| {
            store
                .trace()
                .iter()
                .position(|r| r.task == TaskKind::Finalize && r.entity == n)
        };
        let (s, p) = (pos("s").unwrap(), pos("p").unwrap());
        assert!(s < p);
        assert!(store.stats().cycle_finalizations >= 5);
    }
}

fn counter(kinds: &mut KindTable, name: &str) -> PropertyKindId {
    kinds
        .register(KindDefinition::new(name, Counter::new(8)))
        .unwrap()
}

fn add(kind: PropertyKindId, en: EntityId, n: u32) -> AnalysisResult {
    AnalysisResult::partial(en, kind, move |old| {
        let cur = old.value().and_then(Value::as_count).unwrap_or(0);
        (n > cur).then_some(Value::Count(n))
    })
}

/// P2 contributions are plain; P1 reads P2 final-only and copies it.
fn commit_specs(p1: PropertyKindId, p2: PropertyKindId, entities: usize) -> Vec<AnalysisSpecification> {
    let sel = move || (0..entities).map(|i| EntityId::opaque(format!("e{i}"))).collect();
    fn copy(act: &mut Activation<'_>, en: &EntityId, p1: PropertyKindId, p2: PropertyKindId) -> AnalysisResult {
        let st = act.query(en, p2);
        assert!(!st.is_interim(), "suppressed value leaked");
        match st {
            PropertyState::Final(Value::Count(n)) => add(p1, en.clone(), n + 1),
            other => {
                let en2 = en.clone();
                AnalysisResult::InterimPartial {
                    results: vec![add(p1, en.clone(), 1)],
                    dependees: vec![ObservedDependee::new(en.clone(), p2, other)],
                    continuation: Box::new(move |act, _| copy(act, &en2, p1, p2)),
                }
            }
        }
    }
    vec![
        AnalysisSpecification::new("p1", ActivationMode::Eager(Arc::new(sel)), move |act, en| {
            copy(act, en, p1, p2)
        })
        .derives_collaboratively(p1, Direction::Optimistic)
        .uses(UseDeclaration::final_only(p2)),
        AnalysisSpecification::new("p2a", ActivationMode::Eager(Arc::new(sel)), move |_, en| {
            add(p2, en.clone(), 2)
        })
        .derives_collaboratively(p2, Direction::Optimistic),
        AnalysisSpecification::new("p2b", ActivationMode::Eager(Arc::new(sel)), move |_, en| {
            add(p2, en.clone(), 3)
        })
        .derives_collaboratively(p2, Direction::Optimistic),
    ]
}

#[test]
fn commit_levels_finalize_producers_first() {
    let mut kinds = KindTable::new();
    let p1 = counter(&mut kinds, "P1");
    let p2 = counter(&mut kinds, "P2");
    for config in all_configs() {
        let mut b = board(kinds.clone(), commit_specs(p1, p2, 6));
        assert_eq!(
            b.schedule().commit_order(),
            &[BTreeSet::from([p2]), BTreeSet::from([p1])]
        );
        b.register_all().unwrap();
        let store = b.solve(&config.traced()).unwrap();
        for i in 0..6 {
            let en = EntityId::opaque(format!("e{i}"));
            assert_eq!(store.get(&en, p2), Some(&Value::Count(3)));
            assert_eq!(store.get(&en, p1), Some(&Value::Count(4)));
        }
        let fin: Vec<&TraceRecord> = store
            .trace()
            .iter()
            .filter(|r| r.task == TaskKind::Finalize)
            .collect();
        let last_p2 = fin.iter().rposition(|r| r.kind == "P2").unwrap();
        let first_p1 = fin.iter().position(|r| r.kind == "P1").unwrap();
        assert!(last_p2 < first_p1);
    }
}

#[test]
fn repeated_partials_notify_once() {
    let mut kinds = KindTable::new();
    let p = counter(&mut kinds, "P");
    let seen = Arc::new(AtomicUsize::new(0));
    let seen2 = seen.clone();
    let q = level_kind(&mut kinds, "Q");
    let specs = vec![
        AnalysisSpecification::new("adder", ActivationMode::Eager(Arc::new(|| vec![EntityId::opaque("t")])), move |_, en| {
            AnalysisResult::Results(vec![add(p, en.clone(), 1), add(p, en.clone(), 1)])
        })
        .derives_collaboratively(p, Direction::Optimistic),
        AnalysisSpecification::new("watcher", ActivationMode::Eager(Arc::new(|| vec![EntityId::opaque("w")])), move |act, en| {
            fn go(act: &mut Activation<'_>, en: EntityId, p: PropertyKindId, q: PropertyKindId, seen: Arc<AtomicUsize>) -> AnalysisResult {
                match act.query(&EntityId::opaque("t"), p) {
                    PropertyState::Final(_) => AnalysisResult::final_value(en, q, Value::Atom("Low")),
                    s => {
                        let en2 = en.clone();
                        AnalysisResult::interim(
                            en,
                            q,
                            Value::Atom("Low"),
                            vec![ObservedDependee::new(EntityId::opaque("t"), p, s)],
                            Box::new(move |act, prop| {
                                seen.fetch_add(1, Ordering::SeqCst);
                                assert_eq!(prop.kind, p);
                                go(act, en2, p, q, seen)
                            }),
                        )
                    }
                }
            }
            go(act, en.clone(), p, q, seen2.clone())
        })
        .derives(q, Direction::Optimistic)
        .uses(UseDeclaration::optimistic(p)),
    ];
    let mut b = board(kinds, specs);
    b.register_all().unwrap();
    // FIFO runs the adder first: the watcher then sees Interim(1) and is
    // notified once more, by the final commit.
    let store = b.solve(&SolverConfig::default().checked()).unwrap();
    assert_eq!(store.get(&e("t"), p), Some(&Value::Count(1)));
    assert_eq!(seen.load(Ordering::SeqCst), 1);
}

#[test]
fn triggers_fire_on_presets_and_first_values_but_not_defaults() {
    let mut kinds = KindTable::new();
    let mark = kinds
        .register(
            KindDefinition::new("Mark", Counter::new(3)).default_value(|_| Value::Count(0)),
        )
        .unwrap();
    let out = level_kind(&mut kinds, "Out");
    let starts = Arc::new(AtomicUsize::new(0));
    let s2 = starts.clone();
    // marks the successor of every marked entity
    let walk = AnalysisSpecification::new("walk", ActivationMode::Triggered(mark), move |_, en| {
        s2.fetch_add(1, Ordering::SeqCst);
        let next = match en.to_string().as_str() {
            "a" => Some("b"),
            "b" => Some("a"),
            _ => None,
        };
        let mut rs = vec![AnalysisResult::final_value(en.clone(), out, Value::Atom("High"))];
        if let Some(n) = next {
            rs.push(add(mark, EntityId::opaque(n), 1));
        }
        AnalysisResult::Results(rs)
    })
    .derives(out, Direction::Optimistic)
    .derives_collaboratively(mark, Direction::Optimistic);
    let install = walk.register.clone();
    let spec = walk.on_register(move |r| {
        r.seed(EntityId::opaque("a"), mark, Value::Count(1))?;
        install(r)
    });
    let mut b = board(kinds, vec![spec]);
    b.register_all().unwrap();
    b.request(e("c"), mark);
    let store = b.solve(&SolverConfig::default().checked()).unwrap();
    assert_eq!(starts.load(Ordering::SeqCst), 2);
    assert_eq!(store.get(&e("a"), mark), Some(&Value::Count(1)));
    assert_eq!(store.get(&e("b"), mark), Some(&Value::Count(1)));
    assert_eq!(store.get(&e("c"), mark), Some(&Value::Count(0)));
    assert_eq!(store.get(&e("c"), out), None);
    assert_eq!(store.get(&e("b"), out), Some(&Value::Atom("High")));
}

#[test]
fn fallback_answers_queries_for_underived_kinds() {
    let mut kinds = KindTable::new();
    let missing = kinds
        .register(KindDefinition::new("Missing", Chain::new(LEVELS)).fallback(|_| Value::Atom("Mid")))
        .unwrap();
    let k = level_kind(&mut kinds, "K");
    let spec = AnalysisSpecification::new("k", ActivationMode::Eager(Arc::new(|| vec![EntityId::opaque("x")])), move |act, en| {
        let st = act.query(en, missing);
        assert_eq!(st, PropertyState::Final(Value::Atom("Mid")));
        AnalysisResult::final_value(en.clone(), k, st.value().unwrap().clone())
    })
    .derives(k, Direction::Optimistic)
    .uses(UseDeclaration::optimistic(missing));
    let mut b = board(kinds, vec![spec]);
    assert_eq!(b.schedule().satisfied_by_fallback(), &BTreeSet::from([missing]));
    b.register_all().unwrap();
    let store = b.solve(&SolverConfig::default()).unwrap();
    assert_eq!(store.get(&e("x"), k), Some(&Value::Atom("Mid")));
    assert_eq!(store.get(&e("x"), missing), Some(&Value::Atom("Mid")));
    assert_eq!(store.stats().fallbacks_inserted, 1);
}

fn single(kinds: KindTable, spec: AnalysisSpecification, config: &SolverConfig) -> Result<SolvedStore, SolverError> {
    let mut b = board(kinds, vec![spec]);
    b.register_all()?;
    b.solve(config)
}

fn eager_x() -> ActivationMode {
    ActivationMode::Eager(Arc::new(|| vec![EntityId::opaque("x")]))
}

#[test]
fn misbehaving_analyses_are_reported() {
    let mut kinds = KindTable::new();
    let k = level_kind(&mut kinds, "K");
    let other = level_kind(&mut kinds, "Other");
    let cfg = SolverConfig::default().checked();

    let undeclared = AnalysisSpecification::new("u", eager_x(), move |act, en| {
        act.query(en, other);
        AnalysisResult::final_value(en.clone(), k, Value::Atom("Low"))
    })
    .derives(k, Direction::Optimistic);
    assert!(matches!(single(kinds.clone(), undeclared, &cfg), Err(SolverError::UndeclaredUse { .. })));

    let foreign = AnalysisSpecification::new("f", eager_x(), move |_, en| {
        AnalysisResult::final_value(en.clone(), other, Value::Atom("Low"))
    })
    .derives(k, Direction::Optimistic);
    assert!(matches!(single(kinds.clone(), foreign, &cfg), Err(SolverError::ForeignKind { .. })));

    let overwrite = AnalysisSpecification::new("o", eager_x(), move |_, en| {
        AnalysisResult::Results(vec![
            AnalysisResult::final_value(en.clone(), k, Value::Atom("Low")),
            AnalysisResult::final_value(en.clone(), k, Value::Atom("High")),
        ])
    })
    .derives(k, Direction::Optimistic);
    assert!(matches!(single(kinds.clone(), overwrite, &cfg), Err(SolverError::FinalOverwrite { .. })));

    let no_deps = AnalysisSpecification::new("n", eager_x(), move |_, en| {
        AnalysisResult::interim(en.clone(), k, Value::Atom("Low"), vec![], Box::new(|_, _| unreachable!()))
    })
    .derives(k, Direction::Optimistic);
    assert!(matches!(single(kinds.clone(), no_deps, &cfg), Err(SolverError::InvalidResult { .. })));

    let bad_value = AnalysisSpecification::new("v", eager_x(), move |_, en| {
        AnalysisResult::final_value(en.clone(), k, Value::Count(3))
    })
    .derives(k, Direction::Optimistic);
    assert!(matches!(single(kinds.clone(), bad_value, &cfg), Err(SolverError::Lattice(_))));

    let panics = AnalysisSpecification::new("p", eager_x(), |_, _| panic!("boom"))
        .derives(k, Direction::Optimistic);
    match single(kinds.clone(), panics, &cfg) {
        Err(SolverError::AnalysisPanicked { message, .. }) => assert_eq!(message, "boom"),
        other => panic!("{other:?}"),
    }
}

/// Moves `x` down from Mid to Low once `y` is known.
fn downward(kinds: &mut KindTable) -> (PropertyKindId, AnalysisSpecification) {
    let k = level_kind(kinds, "K");
    let spec = AnalysisSpecification::new(
        "down",
        ActivationMode::Eager(Arc::new(|| vec![EntityId::opaque("x"), EntityId::opaque("y")])),
        move |act, en| {
            if *en == EntityId::opaque("y") {
                return AnalysisResult::final_value(en.clone(), k, Value::Atom("Low"));
            }
            let y = EntityId::opaque("y");
            let st = act.query(&y, k);
            if st.is_final() {
                return AnalysisResult::final_value(en.clone(), k, Value::Atom("Low"));
            }
            let en2 = en.clone();
            AnalysisResult::interim(
                en.clone(),
                k,
                Value::Atom("Mid"),
                vec![ObservedDependee::new(y, k, st)],
                Box::new(move |_, _| AnalysisResult::final_value(en2, k, Value::Atom("Low"))),
            )
        },
    )
    .derives(k, Direction::Optimistic)
    .uses(UseDeclaration::optimistic(k));
    (k, spec)
}

#[test]
fn monotonicity_violations_are_fatal_only_when_checked() {
    // FIFO runs x before y, so x publishes Mid first.
    let mut kinds = KindTable::new();
    let (_, spec) = downward(&mut kinds);
    let fifo = SolverConfig::default();
    let err = single(kinds.clone(), spec.clone(), &fifo.clone().checked()).unwrap_err();
    assert!(matches!(err, SolverError::Monotonicity { .. }), "{err}");
    let mut b = board(kinds, vec![spec]);
    b.register_all().unwrap();
    // Unchecked: the downward step is logged and counted.
    match b.solve(&fifo) {
        Ok(store) => assert_eq!(store.stats().monotonicity_violations, 1),
        Err(e) => panic!("{e}"),
    }
}

#[test]
fn activation_budget_stops_runaway_solves() {
    let mut kinds = KindTable::new();
    let k = level_kind(&mut kinds, "L");
    let edges = Arc::new(vec![("a", "Low", vec!["b"]), ("b", "Mid", vec![]), ("c", "Low", vec![])]);
    let config = SolverConfig {
        activation_budget: 2,
        ..SolverConfig::default()
    };
    let err = single(kinds, graph_spec(k, edges), &config).unwrap_err();
    assert_eq!(err, SolverError::NonTermination { activations: 2, budget: 2 });
}

#[test]
fn chains_converge_under_parallel_stale_reads() {
    // A long chain where every link copies the maximum of its predecessor;
    // with several workers reads regularly go stale before submission.
    let mut kinds = KindTable::new();
    let k = kinds
        .register(KindDefinition::new("Max", Counter::new(64)))
        .unwrap();
    const N: u32 = 64;
    fn step(act: &mut Activation<'_>, i: u32, k: PropertyKindId) -> AnalysisResult {
        let me = EntityId::opaque(format!("n{i}"));
        let own = (i * 7) % 13;
        if i == 0 {
            return AnalysisResult::final_value(me, k, Value::Count(own));
        }
        let prev = EntityId::opaque(format!("n{}", i - 1));
        let st = act.query(&prev, k);
        let v = own.max(st.value().and_then(Value::as_count).unwrap_or(0));
        if st.is_final() {
            return AnalysisResult::final_value(me, k, Value::Count(v));
        }
        AnalysisResult::interim(
            me,
            k,
            Value::Count(v),
            vec![ObservedDependee::new(prev, k, st)],
            Box::new(move |act, _| step(act, i, k)),
        )
    }
    let spec = AnalysisSpecification::new(
        "chain",
        ActivationMode::Eager(Arc::new(|| (0..N).rev().map(|i| EntityId::opaque(format!("n{i}"))).collect())),
        move |act, en| {
            let i: u32 = en.to_string()[1..].parse().unwrap();
            step(act, i, k)
        },
    )
    .derives(k, Direction::Optimistic)
    .uses(UseDeclaration::optimistic(k));
    for round in 0..20u64 {
        for config in all_configs() {
            let mut b = board(kinds.clone(), vec![spec.clone()]);
            b.register_all().unwrap();
            let store = b.solve(&config.with_seed(round)).unwrap();
            let mut expect = 0;
            for i in 0..N {
                expect = expect.max((i * 7) % 13);
                assert_eq!(store.get(&EntityId::opaque(format!("n{i}")), k), Some(&Value::Count(expect)));
            }
        }
    }
}
