//! A miniature object-oriented IR: classes with single inheritance, instance
//! fields, and straight-line method bodies.

pub mod gen;
mod parse;
mod print;
mod program;

pub use gen::{generate, generate_text, GenConfig};
pub use parse::parse_program;
pub use print::{print_program, program_json};
pub use program::{
    ClassDecl, FieldDecl, IrError, MethodDecl, Op, Origin, Param, Program, Statement, INIT, ROOT,
    THIS,
};
