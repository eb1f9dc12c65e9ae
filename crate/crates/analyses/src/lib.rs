//! Demo analyses over the mini IR: field and class mutability, method purity,
//! an RTA call graph, and pessimistic field types.

use std::sync::Arc;

use blackboard_ir::Program;

pub mod call_graph;
pub mod catalogue;
pub mod class_mutability;
pub mod field_mutability;
pub mod field_types;
pub mod kinds;
pub mod purity;

pub use catalogue::{ConfigError, Configuration, ALL, STANDARD};
pub use kinds::Kinds;

/// What every analysis closure captures: the program and the kinds built
/// for it.
#[derive(Debug, Clone)]
pub struct Ctx {
    pub program: Arc<Program>,
    pub kinds: Kinds,
}

impl Ctx {
    pub fn new(program: Arc<Program>) -> Self {
        let kinds = Kinds::for_program(&program);
        Self { program, kinds }
    }
}
