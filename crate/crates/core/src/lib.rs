//! Interpreter for a small actor object calculus with gradual reference
//! capabilities.
//!
//! - [`ast`]: syntax, printing and well-formedness checks.
//! - [`parser`]: `.gcap` source to [`ast::Program`].
//! - [`store`]: heap, bindings, `cast` and capability application.
//! - [`eval`]: one sequential reduction step within a single actor.
//! - [`runtime`]: actors, messaging, schedulers and exhaustive exploration.
//! - [`generate`]: random well-formed programs.

pub mod ast;
pub mod eval;
pub mod generate;
pub mod parser;
pub mod runtime;
pub mod store;

pub use ast::{
    ActorId, Capability, ClassDecl, ClassTable, Diagnostic, Expr, ExprKind, Location,
    MethodDecl, Permission, Program, Span, Value,
};
pub use eval::{Fault, FaultKind, Rule};
pub use parser::{parse_program, ParseError};
pub use runtime::{
    explore_exhaustive, run, ActorStatus, ExploreConfig, Exploration, QueueDiscipline,
    RunConfig, RunOutcome, SchedulerPolicy, Termination, TraceEvent,
};
pub use store::{cast, Store};
