//! Abstract syntax, runtime values and the class table.
//!
//! Everything here is plain immutable data. Source positions travel with
//! every expression node but are ignored by equality, so a program that is
//! printed and parsed again compares equal to the original.

mod pretty;
mod validate;

use std::fmt;

use serde::Serialize;

pub use pretty::print_program;
pub use validate::{free_vars, validate_program, Diagnostic};

/// Reference capability attached to fields, receivers, parameters, returns
/// and local bindings. A missing annotation is `Dyn`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Capability {
    #[default]
    Dyn,
    Moved,
    Lent,
}

impl Capability {
    pub const ALL: [Capability; 3] = [Capability::Dyn, Capability::Moved, Capability::Lent];

    pub fn keyword(self) -> &'static str {
        match self {
            Capability::Dyn => "?",
            Capability::Moved => "moved",
            Capability::Lent => "lent",
        }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Runtime permission carried by locations and errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Permission {
    Movable,
    Unmov,
}

impl fmt::Display for Permission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Permission::Movable => "movable",
            Permission::Unmov => "unmov",
        })
    }
}

/// Heap address. Allocated sequentially, never reused within a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Location(pub u32);

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

/// Actor identifier. The main actor is 0; children are numbered in spawn order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct ActorId(pub u32);

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Unit,
    Actor(ActorId),
    Loc(Permission, Location),
    /// An uninitialised reference. Harmless until dereferenced.
    Err(Permission),
}

impl Value {
    pub fn movable(loc: Location) -> Value {
        Value::Loc(Permission::Movable, loc)
    }

    pub fn unmov(loc: Location) -> Value {
        Value::Loc(Permission::Unmov, loc)
    }

    pub fn location(&self) -> Option<Location> {
        match self {
            Value::Loc(_, l) => Some(*l),
            _ => None,
        }
    }

    pub fn permission(&self) -> Option<Permission> {
        match self {
            Value::Loc(p, _) | Value::Err(p) => Some(*p),
            _ => None,
        }
    }

    pub fn is_err(&self) -> bool {
        matches!(self, Value::Err(_))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("unit"),
            Value::Actor(a) => write!(f, "<{a}>"),
            Value::Loc(p, l) => write!(f, "<{p} {l}>"),
            Value::Err(p) => write!(f, "<{p} err>"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl Span {
    pub fn new(start: Pos, end: Pos) -> Span {
        Span { start, end }
    }

    pub fn to(self, other: Span) -> Span {
        Span { start: self.start, end: other.end }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start.line, self.start.column)
    }
}

/// An expression node. Equality ignores `span`.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Expr {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Call { recv: Box<Expr>, method: String, args: Vec<Expr> },
    FieldGet { recv: Box<Expr>, field: String },
    FieldSet { recv: Box<Expr>, field: String, rhs: Box<Expr> },
    Let { cap: Capability, var: String, rhs: Box<Expr>, body: Box<Expr> },
    New { class: String, args: Vec<Expr> },
    Spawn(Box<Expr>),
    Receive,
    Send { target: Box<Expr>, payload: Box<Expr> },
    Val(Value),
    Var(String),
    This,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    /// Node without source position, for programmatic construction.
    pub fn bare(kind: ExprKind) -> Expr {
        Expr { kind, span: Span::default() }
    }

    pub fn value(&self) -> Option<Value> {
        match self.kind {
            ExprKind::Val(v) => Some(v),
            _ => None,
        }
    }

    /// Immediate subexpressions in evaluation order. A spawn body counts as
    /// a child here even though it is not an evaluation position.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Call { recv, args, .. } => {
                std::iter::once(&**recv).chain(args.iter()).collect()
            }
            ExprKind::FieldGet { recv, .. } => vec![recv],
            ExprKind::FieldSet { recv, rhs, .. } => vec![recv, rhs],
            ExprKind::Let { rhs, body, .. } => vec![rhs, body],
            ExprKind::New { args, .. } => args.iter().collect(),
            ExprKind::Spawn(body) => vec![body],
            ExprKind::Send { target, payload } => vec![target, payload],
            ExprKind::Receive | ExprKind::Val(_) | ExprKind::Var(_) | ExprKind::This => vec![],
        }
    }

    /// Pre-order walk over every node, including spawn bodies.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Expr)) {
        visit(self);
        for child in self.children() {
            child.walk(visit);
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        match &mut self.kind {
            ExprKind::Call { recv, args, .. } => {
                std::iter::once(&mut **recv).chain(args.iter_mut()).collect()
            }
            ExprKind::FieldGet { recv, .. } => vec![recv],
            ExprKind::FieldSet { recv, rhs, .. } => vec![recv, rhs],
            ExprKind::Let { rhs, body, .. } => vec![rhs, body],
            ExprKind::New { args, .. } => args.iter_mut().collect(),
            ExprKind::Spawn(body) => vec![body],
            ExprKind::Send { target, payload } => vec![target, payload],
            ExprKind::Receive | ExprKind::Val(_) | ExprKind::Var(_) | ExprKind::This => vec![],
        }
    }

    /// Pre-order mutable walk. Children are taken after `visit` runs, so a
    /// rewritten node's new children are visited.
    pub fn walk_mut(&mut self, visit: &mut impl FnMut(&mut Expr)) {
        visit(self);
        for child in self.children_mut() {
            child.walk_mut(visit);
        }
    }

    /// Rewrites every capability annotation inside this expression to `?`.
    pub fn erase_capabilities(&mut self) {
        self.walk_mut(&mut |e| {
            if let ExprKind::Let { cap, .. } = &mut e.kind {
                *cap = Capability::Dyn;
            }
        });
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty::print_expr(self))
    }
}

/// Equality ignores `span`.
#[derive(Clone, Debug)]
pub struct MethodDecl {
    /// Capability applied to the implicit `this`.
    pub recv_cap: Capability,
    pub name: String,
    pub params: Vec<(String, Capability)>,
    pub ret_cap: Capability,
    pub body: Expr,
    pub span: Span,
}

/// Equality ignores `span`, as for [`Expr`].
#[derive(Clone, Debug)]
pub struct ClassDecl {
    pub name: String,
    /// Ordered: constructor arguments and field indices are positional.
    pub fields: Vec<(String, Capability)>,
    pub methods: Vec<MethodDecl>,
    pub span: Span,
}

impl PartialEq for ClassDecl {
    fn eq(&self, other: &ClassDecl) -> bool {
        self.name == other.name && self.fields == other.fields && self.methods == other.methods
    }
}

impl Eq for ClassDecl {}

impl PartialEq for MethodDecl {
    fn eq(&self, other: &MethodDecl) -> bool {
        self.recv_cap == other.recv_cap
            && self.name == other.name
            && self.params == other.params
            && self.ret_cap == other.ret_cap
            && self.body == other.body
    }
}

impl Eq for MethodDecl {}

impl ClassDecl {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|(f, _)| f == name)
    }

    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name)
    }
}

/// Class name to declaration. Declaration order is kept so programs print
/// back the way they were written.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassTable {
    classes: Vec<ClassDecl>,
}

impl ClassTable {
    pub fn new(classes: Vec<ClassDecl>) -> ClassTable {
        ClassTable { classes }
    }

    pub fn get(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ClassDecl> {
        self.classes.iter()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub(crate) fn iter_mut(&mut self) -> impl Iterator<Item = &mut ClassDecl> {
        self.classes.iter_mut()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub classes: ClassTable,
    pub main: Expr,
}

impl Program {
    /// The same program with every capability annotation replaced by `?`.
    pub fn erased(&self) -> Program {
        let mut p = self.clone();
        for class in p.classes.iter_mut() {
            for (_, cap) in &mut class.fields {
                *cap = Capability::Dyn;
            }
            for m in &mut class.methods {
                m.recv_cap = Capability::Dyn;
                m.ret_cap = Capability::Dyn;
                for (_, cap) in &mut m.params {
                    *cap = Capability::Dyn;
                }
                m.body.erase_capabilities();
            }
        }
        p.main.erase_capabilities();
        p
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_program(self))
    }
}

/// True for names introduced by the parser's sequencing sugar or by the
/// runtime. Neither form can be written in source.
pub fn is_hidden_name(name: &str) -> bool {
    name.starts_with('%') || name.contains('#')
}
