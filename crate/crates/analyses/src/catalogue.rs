//! Selecting analyses by name and running them over a program.

use std::collections::BTreeSet;
use std::sync::Arc;

use blackboard::{
    validate, AnalysisSpecification, Blackboard, EntityId, RegistryError, Schedule, SolvedStore,
    SolverConfig, SolverError, SolverObserver,
};
use blackboard_ir::Program;
use thiserror::Error;

use crate::kinds::{project, Kinds};
use crate::{call_graph, class_mutability, field_mutability, field_types, purity, Ctx};

/// Every analysis name, in the order they are usually listed.
pub const ALL: [&str; 6] = [
    field_mutability::NAME,
    class_mutability::NAME,
    class_mutability::EAGER_NAME,
    purity::NAME,
    call_graph::NAME,
    field_types::NAME,
];

/// The configuration used by the examples: everything but the eager
/// class-mutability variant.
pub const STANDARD: [&str; 5] = [
    field_mutability::NAME,
    class_mutability::NAME,
    purity::NAME,
    call_graph::NAME,
    field_types::NAME,
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown analysis {0:?}; known analyses are {}", ALL.join(", "))]
    UnknownAnalysis(String),
    #[error("no analyses selected")]
    Empty,
    #[error(transparent)]
    Registry(#[from] RegistryError),
}

pub fn spec_by_name(ctx: &Ctx, name: &str) -> Option<AnalysisSpecification> {
    Some(match name {
        field_mutability::NAME => field_mutability::spec(ctx),
        class_mutability::NAME => class_mutability::spec(ctx),
        class_mutability::EAGER_NAME => class_mutability::eager_spec(ctx),
        purity::NAME => purity::spec(ctx),
        call_graph::NAME => call_graph::spec(ctx),
        field_types::NAME => field_types::spec(ctx),
        _ => return None,
    })
}

/// A validated selection of analyses for one program.
#[derive(Debug, Clone)]
pub struct Configuration {
    ctx: Ctx,
    names: Vec<String>,
    schedule: Schedule,
}

impl Configuration {
    pub fn new<S: AsRef<str>>(program: Arc<Program>, names: &[S]) -> Result<Self, ConfigError> {
        let ctx = Ctx::new(program);
        Self::with_context(ctx, names, Vec::new())
    }

    /// Like [`Configuration::new`] with additional, caller-built analyses.
    pub fn with_context<S: AsRef<str>>(
        ctx: Ctx,
        names: &[S],
        extra: Vec<AnalysisSpecification>,
    ) -> Result<Self, ConfigError> {
        if names.is_empty() && extra.is_empty() {
            return Err(ConfigError::Empty);
        }
        let mut specs = extra;
        let mut selected = Vec::new();
        for n in names {
            let n = n.as_ref();
            specs.push(spec_by_name(&ctx, n).ok_or_else(|| ConfigError::UnknownAnalysis(n.to_owned()))?);
            selected.push(n.to_owned());
        }
        let schedule = validate(specs, &BTreeSet::new(), &ctx.kinds.table)?;
        Ok(Self {
            ctx,
            names: selected,
            schedule,
        })
    }

    pub fn context(&self) -> &Ctx {
        &self.ctx
    }

    pub fn kinds(&self) -> &Kinds {
        &self.ctx.kinds
    }

    pub fn program(&self) -> &Arc<Program> {
        &self.ctx.program
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// A registered store with every derived kind requested over its natural
    /// domain: fields, classes, methods, or the project entity.
    pub fn blackboard(&self) -> Result<Blackboard, SolverError> {
        let k = &self.ctx.kinds;
        let p = &self.ctx.program;
        let mut board = Blackboard::new(k.table.clone(), self.schedule.clone());
        board.register_all()?;
        for kind in [
            k.field_mutability,
            k.class_mutability,
            k.purity,
            k.callers,
            k.callees,
            k.instantiated_types,
            k.field_types,
        ] {
            if !self.schedule.is_derived(kind) {
                continue;
            }
            let domain: Vec<EntityId> = if kind == k.field_mutability || kind == k.field_types {
                p.fields().map(|(r, _)| EntityId::Field(r)).collect()
            } else if kind == k.class_mutability {
                p.classes().iter().map(|c| EntityId::Class(c.name.clone())).collect()
            } else if kind == k.instantiated_types {
                vec![project()]
            } else {
                p.methods().map(|(r, _)| EntityId::Method(r)).collect()
            };
            for e in domain {
                board.request(e, kind);
            }
        }
        Ok(board)
    }

    pub fn solve(&self, config: &SolverConfig) -> Result<SolvedStore, SolverError> {
        self.blackboard()?.solve(config)
    }

    pub fn solve_observed(
        &self,
        config: &SolverConfig,
        observer: &dyn SolverObserver,
    ) -> Result<SolvedStore, SolverError> {
        self.blackboard()?.solve_observed(config, observer)
    }
}
