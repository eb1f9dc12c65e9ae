use std::collections::BTreeMap;
use std::sync::Arc;

use blackboard::{
    ActivationInfo, EntityId, Lattice, Property, SolverConfig, SolverObserver, TaskKind,
};
use blackboard_analyses::kinds::purity_lattice;
use blackboard_analyses::{call_graph, Configuration, ALL, STANDARD};
use blackboard_ir::{generate, GenConfig};
use parking_lot::Mutex;
use proptest::prelude::*;

fn program(seed: u64) -> Arc<blackboard_ir::Program> {
    Arc::new(generate(seed, &GenConfig::default()))
}

#[derive(Default)]
struct Recorder {
    cg_initial: Mutex<BTreeMap<EntityId, usize>>,
    interim_field_types: Mutex<usize>,
    field_types_kind: Option<blackboard::PropertyKindId>,
}

impl SolverObserver for Recorder {
    fn activation_started(&self, info: &ActivationInfo) {
        if info.analysis == call_graph::NAME && info.task == TaskKind::Initial {
            *self.cg_initial.lock().entry(info.key.entity.clone()).or_default() += 1;
        }
    }

    fn state_delivered(&self, analysis: &str, property: &Property) {
        if analysis == call_graph::NAME
            && Some(property.kind) == self.field_types_kind
            && property.state.is_interim()
        {
            *self.interim_field_types.lock() += 1;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_subset_of_analyses_validates_and_solves(seed in 0u64..10_000, mask in 1u32..64) {
        let names: Vec<&str> = (0..ALL.len()).filter(|i| mask & (1 << i) != 0).map(|i| ALL[i]).collect();
        let conflicting = names.contains(&"class-mutability") && names.contains(&"class-mutability-eager");
        match Configuration::new(program(seed), &names) {
            Ok(c) => {
                prop_assert!(!conflicting);
                c.solve(&SolverConfig::default().checked()).unwrap();
            }
            Err(e) => prop_assert!(conflicting, "{e}"),
        }
    }

    #[test]
    fn dropping_field_mutability_never_improves_purity(seed in 0u64..10_000) {
        let p = program(seed);
        let with = Configuration::new(p.clone(), &STANDARD).unwrap();
        let without: Vec<&str> = STANDARD.iter().copied().filter(|n| *n != "field-mutability").collect();
        let without = Configuration::new(p.clone(), &without).unwrap();
        let a = with.solve(&SolverConfig::default()).unwrap();
        let b = without.solve(&SolverConfig::default()).unwrap();
        let purity = with.kinds().purity;
        let l = purity_lattice();
        for (m, _) in p.methods() {
            let e = EntityId::Method(m);
            let (x, y) = (a.get(&e, purity).unwrap(), b.get(&e, purity).unwrap());
            prop_assert!(l.leq(x, y), "{e}: {x} with, {y} without");
        }
    }

    #[test]
    fn call_graph_runs_once_per_reached_method_and_sees_only_final_field_types(seed in 0u64..10_000, workers in 1usize..4) {
        let p = program(seed);
        let c = Configuration::new(p.clone(), &STANDARD).unwrap();
        let rec = Recorder { field_types_kind: Some(c.kinds().field_types), ..Recorder::default() };
        let s = c.solve_observed(&SolverConfig::default().with_workers(workers), &rec).unwrap();
        prop_assert_eq!(*rec.interim_field_types.lock(), 0);
        let starts = rec.cg_initial.lock().clone();
        for (m, _) in p.methods() {
            let e = EntityId::Method(m);
            let reached = s.get(&e, c.kinds().callers).and_then(|v| v.as_set()).is_some_and(|v| !v.is_empty());
            prop_assert_eq!(starts.get(&e).copied().unwrap_or(0), usize::from(reached), "{}", e);
        }
    }
}
