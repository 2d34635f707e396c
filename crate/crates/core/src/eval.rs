//! Single-actor small-step reduction.
//!
//! An expression is split into an evaluation context and the redex sitting
//! in its hole (left to right, call by value). The sequential rules rewrite
//! the hole in place; spawn, send and receive are handed back to the
//! runtime, which owns the actor table.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::ast::{Capability, ClassTable, Expr, ExprKind, Span, Value};
use crate::store::{cast, violates, ObjectRecord, Store};

/// Name of the reduction that produced a trace event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    NewClass,
    VarAssignment,
    FieldAccess,
    Assignment,
    Variable,
    MethodCall,
    Spawn,
    Send,
    Receive,
    Fault,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::NewClass => "E-NewClass",
            Rule::VarAssignment => "E-VarAssignment",
            Rule::FieldAccess => "E-FieldAccess",
            Rule::Assignment => "E-Assignment",
            Rule::Variable => "E-Variable",
            Rule::MethodCall => "E-MethodCall",
            Rule::Spawn => "E-Spawn",
            Rule::Send => "E-Send",
            Rule::Receive => "E-Receive",
            Rule::Fault => "Fault",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Rule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum FaultKind {
    /// An error value was dereferenced.
    UninitializedUse,
    /// `moved` was applied to an `unmov` reference.
    CapabilityViolation,
    UnknownClass,
    UnknownMethod,
    UnknownField,
    ArityMismatch,
    NotAnObject,
    NotAnActor,
    UnboundVariable,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fault {
    pub kind: FaultKind,
    pub detail: String,
    /// Source position of the faulting redex.
    pub span: Span,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.kind, self.span, self.detail)
    }
}

/// The expression in the hole once decomposition bottoms out. Every
/// position the evaluation order demands is already a value.
#[derive(Clone, Debug, PartialEq)]
pub enum Redex<'a> {
    Var(&'a str),
    This,
    New { class: &'a str, args: Vec<Value> },
    Let { cap: Capability, var: &'a str, value: Value, body: &'a Expr },
    FieldGet { target: Value, field: &'a str },
    FieldSet { target: Value, field: &'a str, value: Value },
    Call { target: Value, method: &'a str, args: Vec<Value> },
    SpawnReady { body: &'a Expr },
    ReceiveReady,
    SendReady { target: Value, payload: Value },
}

fn join(values: &[Value]) -> String {
    values.iter().map(Value::to_string).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for Redex<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Redex::Var(x) => f.write_str(x),
            Redex::This => f.write_str("this"),
            Redex::New { class, args } => write!(f, "new {class}({})", join(args)),
            Redex::Let { cap, var, value, .. } => write!(f, "let {cap} {var} = {value}; ..."),
            Redex::FieldGet { target, field } => write!(f, "{target}.{field}"),
            Redex::FieldSet { target, field, value } => write!(f, "{target}.{field} := {value}"),
            Redex::Call { target, method, args } => write!(f, "{target}.{method}({})", join(args)),
            Redex::SpawnReady { .. } => f.write_str("spawn { ... }"),
            Redex::ReceiveReady => f.write_str("receive"),
            Redex::SendReady { target, payload } => write!(f, "send({target}, {payload})"),
        }
    }
}

/// Path from the root of an expression to the hole, as child indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context {
    path: Vec<usize>,
}

impl Context {
    pub fn depth(&self) -> usize {
        self.path.len()
    }

    pub fn hole<'a>(&self, root: &'a Expr) -> &'a Expr {
        self.path.iter().fold(root, |e, &i| child(e, i))
    }

    pub fn hole_mut<'a>(&self, root: &'a mut Expr) -> &'a mut Expr {
        self.path.iter().fold(root, |e, &i| child_mut(e, i))
    }

    /// Replaces the hole's contents, keeping its source span.
    pub fn plug(&self, root: &mut Expr, kind: ExprKind) {
        self.hole_mut(root).kind = kind;
    }
}

fn child(e: &Expr, i: usize) -> &Expr {
    match (&e.kind, i) {
        (ExprKind::Call { recv, .. }, 0) => recv,
        (ExprKind::Call { args, .. }, i) => &args[i - 1],
        (ExprKind::FieldGet { recv, .. } | ExprKind::FieldSet { recv, .. }, 0) => recv,
        (ExprKind::FieldSet { rhs, .. } | ExprKind::Let { rhs, .. }, _) => rhs,
        (ExprKind::New { args, .. }, i) => &args[i],
        (ExprKind::Send { target, .. }, 0) => target,
        (ExprKind::Send { payload, .. }, _) => payload,
        _ => unreachable!("no evaluation position {i} in {:?}", e.kind),
    }
}

fn child_mut(e: &mut Expr, i: usize) -> &mut Expr {
    match (&mut e.kind, i) {
        (ExprKind::Call { recv, .. }, 0) => recv,
        (ExprKind::Call { args, .. }, i) => &mut args[i - 1],
        (ExprKind::FieldGet { recv, .. } | ExprKind::FieldSet { recv, .. }, 0) => recv,
        (ExprKind::FieldSet { rhs, .. } | ExprKind::Let { rhs, .. }, _) => rhs,
        (ExprKind::New { args, .. }, i) => &mut args[i],
        (ExprKind::Send { target, .. }, 0) => target,
        (ExprKind::Send { payload, .. }, _) => payload,
        (kind, i) => unreachable!("no evaluation position {i} in {kind:?}"),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decomposition<'a> {
    AlreadyValue(Value),
    Redex { context: Context, redex: Redex<'a>, span: Span },
}

/// Splits `e` into evaluation context and redex. Receivers go before
/// arguments, arguments left to right, a send's target before its payload,
/// a let's right-hand side before its body.
pub fn decompose(e: &Expr) -> Decomposition<'_> {
    if let Some(v) = e.value() {
        return Decomposition::AlreadyValue(v);
    }
    let mut path = Vec::new();
    let (redex, span) = find_redex(e, &mut path);
    Decomposition::Redex { context: Context { path }, redex, span }
}

/// Index of the first non-value among `items`, if any.
fn first_pending(items: &[&Expr]) -> Option<usize> {
    items.iter().position(|e| e.value().is_none())
}

fn values(items: &[Expr]) -> Vec<Value> {
    items.iter().map(|e| e.value().expect("evaluated")).collect()
}

fn find_redex<'a>(e: &'a Expr, path: &mut Vec<usize>) -> (Redex<'a>, Span) {
    let children = match &e.kind {
        ExprKind::Spawn(_) | ExprKind::Let { .. } => vec![],
        _ => e.children(),
    };
    let descend = match &e.kind {
        ExprKind::Let { rhs, .. } if rhs.value().is_none() => Some(0),
        _ => first_pending(&children),
    };
    if let Some(i) = descend {
        path.push(i);
        return find_redex(child(e, i), path);
    }
    let redex = match &e.kind {
        ExprKind::Var(x) => Redex::Var(x),
        ExprKind::This => Redex::This,
        ExprKind::New { class, args } => Redex::New { class, args: values(args) },
        ExprKind::Let { cap, var, rhs, body } => Redex::Let {
            cap: *cap,
            var,
            value: rhs.value().expect("evaluated"),
            body,
        },
        ExprKind::FieldGet { recv, field } => {
            Redex::FieldGet { target: recv.value().expect("evaluated"), field }
        }
        ExprKind::FieldSet { recv, field, rhs } => Redex::FieldSet {
            target: recv.value().expect("evaluated"),
            field,
            value: rhs.value().expect("evaluated"),
        },
        ExprKind::Call { recv, method, args } => Redex::Call {
            target: recv.value().expect("evaluated"),
            method,
            args: values(args),
        },
        ExprKind::Spawn(body) => Redex::SpawnReady { body },
        ExprKind::Receive => Redex::ReceiveReady,
        ExprKind::Send { target, payload } => Redex::SendReady {
            target: target.value().expect("evaluated"),
            payload: payload.value().expect("evaluated"),
        },
        ExprKind::Val(_) => unreachable!("values are not redexes"),
    };
    (redex, e.span)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Replacement {
    Var(String),
    Val(Value),
}

impl Replacement {
    fn kind(&self) -> ExprKind {
        match self {
            Replacement::Var(x) => ExprKind::Var(x.clone()),
            Replacement::Val(v) => ExprKind::Val(*v),
        }
    }
}

/// Simultaneous substitution for variables and `this`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    pub vars: HashMap<String, Replacement>,
    pub this: Option<Replacement>,
}

impl Substitution {
    pub fn rename(from: &str, to: &str) -> Substitution {
        let mut s = Substitution::default();
        s.vars.insert(from.to_owned(), Replacement::Var(to.to_owned()));
        s
    }

    fn is_empty(&self) -> bool {
        self.vars.is_empty() && self.this.is_none()
    }
}

pub fn substitute(e: &Expr, sub: &Substitution) -> Expr {
    let mut out = e.clone();
    substitute_in_place(&mut out, sub);
    out
}

/// In-place form of [`substitute`]. A `let` binder shadows the mapping for
/// its body. Spawn bodies are substituted like any other subterm.
pub fn substitute_in_place(e: &mut Expr, sub: &Substitution) {
    if sub.is_empty() {
        return;
    }
    match &mut e.kind {
        ExprKind::Var(x) => {
            if let Some(r) = sub.vars.get(x) {
                e.kind = r.kind();
            }
        }
        ExprKind::This => {
            if let Some(r) = &sub.this {
                e.kind = r.kind();
            }
        }
        ExprKind::Let { var, rhs, body, .. } => {
            substitute_in_place(rhs, sub);
            if sub.vars.contains_key(var.as_str()) {
                let mut inner = sub.clone();
                inner.vars.remove(var.as_str());
                substitute_in_place(body, &inner);
            } else {
                substitute_in_place(body, sub);
            }
        }
        ExprKind::Call { recv, args, .. } => {
            substitute_in_place(recv, sub);
            args.iter_mut().for_each(|a| substitute_in_place(a, sub));
        }
        ExprKind::FieldGet { recv, .. } => substitute_in_place(recv, sub),
        ExprKind::FieldSet { recv, rhs, .. } => {
            substitute_in_place(recv, sub);
            substitute_in_place(rhs, sub);
        }
        ExprKind::New { args, .. } => args.iter_mut().for_each(|a| substitute_in_place(a, sub)),
        ExprKind::Spawn(body) => substitute_in_place(body, sub),
        ExprKind::Send { target, payload } => {
            substitute_in_place(target, sub);
            substitute_in_place(payload, sub);
        }
        ExprKind::Receive | ExprKind::Val(_) => {}
    }
}

/// Actor-level work found in the hole.
#[derive(Clone, Debug, PartialEq)]
pub enum RuntimeAction {
    Spawn,
    Send { target: Value, payload: Value },
    Receive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuntimeRequest {
    pub context: Context,
    pub action: RuntimeAction,
    pub span: Span,
    pub redex: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepResult {
    Stepped { rule: Rule, redex: String },
    Fault(Fault),
    NeedsRuntime(RuntimeRequest),
    Done(Value),
}

/// Hidden binder for a method's return value.
const RETURN_BINDER: &str = "%ret";

enum Contractum {
    Replace(ExprKind),
    /// Continue with the let's body, its binder renamed.
    LetBody { from: String, to: String },
}

/// Performs one sequential reduction on `expr`, updating `store` in place.
/// On a fault neither the store nor the expression is changed.
pub fn step_local(store: &mut Store, expr: &mut Expr, classes: &ClassTable) -> StepResult {
    let (context, redex, span) = match decompose(expr) {
        Decomposition::AlreadyValue(v) => return StepResult::Done(v),
        Decomposition::Redex { context, redex, span } => (context, redex, span),
    };
    let summary = redex.to_string();
    let fault = |kind: FaultKind, detail: String| {
        StepResult::Fault(Fault { kind, detail: format!("{detail} in `{summary}`"), span })
    };

    let (rule, contractum) = match redex {
        Redex::Var(x) => match store.var(x) {
            Some(v) => (Rule::Variable, Contractum::Replace(ExprKind::Val(v))),
            None => return fault(FaultKind::UnboundVariable, format!("unbound variable {x}")),
        },
        Redex::This => return fault(FaultKind::UnboundVariable, "unbound this".into()),
        Redex::New { class, args } => {
            let Some(decl) = classes.get(class) else {
                return fault(FaultKind::UnknownClass, format!("unknown class {class}"));
            };
            if decl.fields.len() != args.len() {
                return fault(
                    FaultKind::ArityMismatch,
                    format!("{class} has {} fields, given {}", decl.fields.len(), args.len()),
                );
            }
            let caps: Vec<Capability> = decl.fields.iter().map(|(_, c)| *c).collect();
            if let Some(v) = caps.iter().zip(&args).find_map(|(c, v)| violates(*c, *v)) {
                return fault(FaultKind::CapabilityViolation, v.to_string());
            }
            let mut fields = Vec::with_capacity(args.len());
            for (cap, v) in caps.iter().zip(&args) {
                store.apply_capability(*cap, *v).expect("pre-checked");
                fields.push(cast(*cap, *v).expect("pre-checked"));
            }
            let loc = store.alloc(ObjectRecord { class: class.to_owned(), fields });
            (Rule::NewClass, Contractum::Replace(ExprKind::Val(Value::movable(loc))))
        }
        Redex::Let { cap, var, value, .. } => {
            if let Some(v) = violates(cap, value) {
                return fault(FaultKind::CapabilityViolation, v.to_string());
            }
            store.apply_capability(cap, value).expect("pre-checked");
            let fresh = store.bind_fresh(var, cast(cap, value).expect("pre-checked"));
            (Rule::VarAssignment, Contractum::LetBody { from: var.to_owned(), to: fresh })
        }
        Redex::FieldGet { target, field } => {
            let (loc, index) = match resolve_field(store, classes, target, field) {
                Ok(found) => found,
                Err((kind, detail)) => return fault(kind, detail),
            };
            let v = store.object(loc).expect("live location").fields[index];
            (Rule::FieldAccess, Contractum::Replace(ExprKind::Val(v)))
        }
        Redex::FieldSet { target, field, value } => {
            let (loc, index) = match resolve_field(store, classes, target, field) {
                Ok(found) => found,
                Err((kind, detail)) => return fault(kind, detail),
            };
            let class = &store.object(loc).expect("live location").class;
            let cap = classes.get(class).expect("resolved").fields[index].1;
            if let Some(v) = violates(cap, value) {
                return fault(FaultKind::CapabilityViolation, v.to_string());
            }
            store.apply_capability(cap, value).expect("pre-checked");
            store.set_field(loc, index, cast(cap, value).expect("pre-checked"));
            (Rule::Assignment, Contractum::Replace(ExprKind::Val(Value::Unit)))
        }
        Redex::Call { target, method, args } => {
            let loc = match object_target(target) {
                Ok(loc) => loc,
                Err((kind, detail)) => return fault(kind, detail),
            };
            let class = &store.object(loc).expect("live location").class;
            let Some(decl) = classes.get(class) else {
                return fault(FaultKind::UnknownClass, format!("unknown class {class}"));
            };
            let Some(m) = decl.method(method) else {
                return fault(FaultKind::UnknownMethod, format!("{class} has no method {method}"));
            };
            if m.params.len() != args.len() {
                return fault(
                    FaultKind::ArityMismatch,
                    format!("{class}.{method} takes {}, given {}", m.params.len(), args.len()),
                );
            }
            let uses = m.params.iter().map(|(_, c)| *c).zip(args.iter().copied());
            let uses: Vec<(Capability, Value)> =
                uses.chain(std::iter::once((m.recv_cap, target))).collect();
            if let Some(v) = uses.iter().find_map(|(c, v)| violates(*c, *v)) {
                return fault(FaultKind::CapabilityViolation, v.to_string());
            }
            for (cap, v) in &uses {
                store.apply_capability(*cap, *v).expect("pre-checked");
            }
            let mut sub = Substitution::default();
            for ((name, cap), v) in m.params.iter().zip(&args) {
                let fresh = store.bind_fresh(name, cast(*cap, *v).expect("pre-checked"));
                sub.vars.insert(name.clone(), Replacement::Var(fresh));
            }
            let this = store.bind_fresh("this", cast(m.recv_cap, target).expect("pre-checked"));
            sub.this = Some(Replacement::Var(this));
            let mut body = m.body.clone();
            substitute_in_place(&mut body, &sub);
            let kind = ExprKind::Let {
                cap: m.ret_cap,
                var: RETURN_BINDER.into(),
                rhs: Box::new(body),
                body: Box::new(Expr::new(ExprKind::Var(RETURN_BINDER.into()), span)),
            };
            (Rule::MethodCall, Contractum::Replace(kind))
        }
        Redex::SpawnReady { .. } => return needs(context, RuntimeAction::Spawn, span, summary),
        Redex::ReceiveReady => return needs(context, RuntimeAction::Receive, span, summary),
        Redex::SendReady { target, payload } => {
            return needs(context, RuntimeAction::Send { target, payload }, span, summary)
        }
    };

    let hole = context.hole_mut(expr);
    match contractum {
        Contractum::Replace(kind) => hole.kind = kind,
        Contractum::LetBody { from, to } => {
            let taken = std::mem::replace(&mut hole.kind, ExprKind::Val(Value::Unit));
            let ExprKind::Let { body, .. } = taken else { unreachable!("let redex") };
            let mut body = *body;
            substitute_in_place(&mut body, &Substitution::rename(&from, &to));
            *hole = body;
        }
    }
    StepResult::Stepped { rule, redex: summary }
}

fn needs(context: Context, action: RuntimeAction, span: Span, redex: String) -> StepResult {
    StepResult::NeedsRuntime(RuntimeRequest { context, action, span, redex })
}

fn object_target(target: Value) -> Result<crate::ast::Location, (FaultKind, String)> {
    match target {
        Value::Loc(_, loc) => Ok(loc),
        Value::Err(_) => Err((FaultKind::UninitializedUse, "use of uninitialised reference".into())),
        other => Err((FaultKind::NotAnObject, format!("{other} is not an object"))),
    }
}

fn resolve_field(
    store: &Store,
    classes: &ClassTable,
    target: Value,
    field: &str,
) -> Result<(crate::ast::Location, usize), (FaultKind, String)> {
    let loc = object_target(target)?;
    let class = &store.object(loc).expect("live location").class;
    classes
        .get(class)
        .and_then(|decl| decl.field_index(field))
        .map(|i| (loc, i))
        .ok_or_else(|| (FaultKind::UnknownField, format!("{class} has no field {field}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Location, Permission};
    use crate::parser::parse_program;

    fn val(v: Value) -> Expr {
        Expr::bare(ExprKind::Val(v))
    }

    fn var(x: &str) -> Expr {
        Expr::bare(ExprKind::Var(x.into()))
    }

    fn new(class: &str, args: Vec<Expr>) -> Expr {
        Expr::bare(ExprKind::New { class: class.into(), args })
    }

    fn classes(src: &str) -> ClassTable {
        parse_program(&format!("{src} main {{ unit }}")).unwrap().classes
    }

    #[test]
    fn decompose_send_of_spawn() {
        let body = Expr::bare(ExprKind::Receive);
        let e = Expr::bare(ExprKind::Send {
            target: Box::new(Expr::bare(ExprKind::Spawn(Box::new(body.clone())))),
            payload: Box::new(new("C", vec![])),
        });
        let Decomposition::Redex { context, redex, .. } = decompose(&e) else { panic!() };
        assert_eq!(redex, Redex::SpawnReady { body: &body });
        assert_eq!(context.depth(), 1);
    }

    #[test]
    fn decompose_value() {
        assert_eq!(decompose(&val(Value::Unit)), Decomposition::AlreadyValue(Value::Unit));
    }

    #[test]
    fn decompose_leftmost_argument() {
        let e = Expr::bare(ExprKind::Call {
            recv: Box::new(val(Value::movable(Location(0)))),
            method: "m".into(),
            args: vec![var("x"), new("C", vec![])],
        });
        let Decomposition::Redex { context, redex, .. } = decompose(&e) else { panic!() };
        assert_eq!(redex, Redex::Var("x"));
        assert_eq!(context.hole(&e), &var("x"));
    }

    #[test]
    fn substitution() {
        let sub = Substitution::rename("x", "x#1");
        assert_eq!(substitute(&var("x"), &sub), var("x#1"));

        let e = Expr::bare(ExprKind::Let {
            cap: Capability::Dyn,
            var: "x".into(),
            rhs: Box::new(var("y")),
            body: Box::new(var("x")),
        });
        let mut sub = Substitution::rename("y", "y#2");
        sub.vars.insert("x".into(), Replacement::Var("nope".into()));
        let ExprKind::Let { rhs, body, .. } = substitute(&e, &sub).kind else { panic!() };
        assert_eq!(*rhs, var("y#2"));
        assert_eq!(*body, var("x"));

        let get = Expr::bare(ExprKind::FieldGet {
            recv: Box::new(Expr::bare(ExprKind::This)),
            field: "f".into(),
        });
        let sub = Substitution { this: Some(Replacement::Var("this#3".into())), ..Default::default() };
        let ExprKind::FieldGet { recv, .. } = substitute(&get, &sub).kind else { panic!() };
        assert_eq!(*recv, var("this#3"));
    }

    #[test]
    fn reading_an_erred_variable_is_not_a_fault() {
        let mut s = Store::new();
        let x = s.bind_fresh("x", Value::Err(Permission::Movable));
        let mut e = var(&x);
        let r = step_local(&mut s, &mut e, &ClassTable::default());
        assert!(matches!(r, StepResult::Stepped { rule: Rule::Variable, .. }));
        assert_eq!(e, val(Value::Err(Permission::Movable)));
    }

    #[test]
    fn dereferencing_err_faults() {
        let mut s = Store::new();
        let mut e = Expr::bare(ExprKind::FieldGet {
            recv: Box::new(val(Value::Err(Permission::Movable))),
            field: "f".into(),
        });
        let before = e.clone();
        let StepResult::Fault(f) = step_local(&mut s, &mut e, &ClassTable::default()) else {
            panic!()
        };
        assert_eq!(f.kind, FaultKind::UninitializedUse);
        assert_eq!(e, before);
    }

    #[test]
    fn let_moved_on_unmov_faults() {
        let mut s = Store::new();
        let l = s.alloc(ObjectRecord { class: "File".into(), fields: vec![] });
        let mut e = Expr::bare(ExprKind::Let {
            cap: Capability::Moved,
            var: "x".into(),
            rhs: Box::new(val(Value::unmov(l))),
            body: Box::new(var("x")),
        });
        let before = s.clone();
        let StepResult::Fault(f) = step_local(&mut s, &mut e, &ClassTable::default()) else {
            panic!()
        };
        assert_eq!(f.kind, FaultKind::CapabilityViolation);
        assert_eq!(s, before);
    }

    #[test]
    fn new_casts_to_lent_field() {
        // Expected by hand: the lent field holds `unmov l0`, the new object
        // lands at l1 and the result is `movable l1`.
        let ct = classes("class C(lent f) {}");
        let mut s = Store::new();
        let l0 = s.alloc(ObjectRecord { class: "D".into(), fields: vec![] });
        let mut e = new("C", vec![val(Value::movable(l0))]);
        let r = step_local(&mut s, &mut e, &ct);
        assert!(matches!(r, StepResult::Stepped { rule: Rule::NewClass, .. }));
        assert_eq!(e, val(Value::movable(Location(1))));
        assert_eq!(s.object(Location(1)).unwrap().fields, vec![Value::unmov(l0)]);
        assert_eq!(s.heap_len(), 2);
    }

    #[test]
    fn let_binds_fresh_and_renames_body() {
        let mut s = Store::new();
        let mut e = parse_program("main { let x = unit; x }").unwrap().main;
        step_local(&mut s, &mut e, &ClassTable::default());
        assert_eq!(e, var("x#0"));
        assert_eq!(s.var("x#0"), Some(Value::Unit));
    }

    #[test]
    fn method_call_unfolds_to_return_let() {
        let ct = classes("class C(f) { lent method get(p: lent) -> moved { this.f } }");
        let mut s = Store::new();
        let o = s.alloc(ObjectRecord { class: "C".into(), fields: vec![Value::Unit] });
        let mut e = Expr::bare(ExprKind::Call {
            recv: Box::new(val(Value::movable(o))),
            method: "get".into(),
            args: vec![val(Value::movable(o))],
        });
        assert!(matches!(step_local(&mut s, &mut e, &ct), StepResult::Stepped { rule: Rule::MethodCall, .. }));
        assert_eq!(s.var("p#0"), Some(Value::unmov(o)));
        assert_eq!(s.var("this#1"), Some(Value::unmov(o)));
        let ExprKind::Let { cap, rhs, .. } = &e.kind else { panic!("{e}") };
        assert_eq!(*cap, Capability::Moved);
        assert_eq!(rhs.to_string(), "this#1.f");
        // this#1 -> value, .f -> unit, the return binding, then its variable.
        for _ in 0..4 {
            step_local(&mut s, &mut e, &ct);
        }
        assert_eq!(step_local(&mut s, &mut e, &ct), StepResult::Done(Value::Unit));
    }

    #[test]
    fn untyped_faults() {
        let ct = classes("class C(f) { method m(x) { x } }");
        let mut s = Store::new();
        let o = s.alloc(ObjectRecord { class: "C".into(), fields: vec![Value::Unit] });
        let obj = || Box::new(val(Value::movable(o)));
        let cases = [
            (new("Z", vec![]), FaultKind::UnknownClass),
            (new("C", vec![]), FaultKind::ArityMismatch),
            (Expr::bare(ExprKind::Call { recv: obj(), method: "nope".into(), args: vec![] }), FaultKind::UnknownMethod),
            (Expr::bare(ExprKind::Call { recv: obj(), method: "m".into(), args: vec![] }), FaultKind::ArityMismatch),
            (Expr::bare(ExprKind::FieldGet { recv: obj(), field: "g".into() }), FaultKind::UnknownField),
            (Expr::bare(ExprKind::FieldGet { recv: Box::new(val(Value::Unit)), field: "f".into() }), FaultKind::NotAnObject),
            (var("ghost"), FaultKind::UnboundVariable),
        ];
        for (mut e, kind) in cases {
            let StepResult::Fault(f) = step_local(&mut s, &mut e, &ct) else { panic!("{e}") };
            assert_eq!(f.kind, kind, "{e}");
        }
    }

    #[test]
    fn field_set_applies_field_capability() {
        let ct = classes("class H(moved f) {} class F() {}");
        let mut s = Store::new();
        let h = s.alloc(ObjectRecord { class: "H".into(), fields: vec![Value::Unit] });
        let f = s.alloc(ObjectRecord { class: "F".into(), fields: vec![] });
        let alias = s.bind_fresh("alias", Value::movable(f));
        let mut e = Expr::bare(ExprKind::FieldSet {
            recv: Box::new(val(Value::movable(h))),
            field: "f".into(),
            rhs: Box::new(val(Value::movable(f))),
        });
        step_local(&mut s, &mut e, &ct);
        assert_eq!(e, val(Value::Unit));
        assert_eq!(s.object(h).unwrap().fields, vec![Value::movable(f)]);
        assert_eq!(s.var(&alias), Some(Value::Err(Permission::Movable)));

        let mut bad = Expr::bare(ExprKind::FieldSet {
            recv: Box::new(val(Value::movable(h))),
            field: "f".into(),
            rhs: Box::new(val(Value::unmov(f))),
        });
        let StepResult::Fault(fault) = step_local(&mut s, &mut bad, &ct) else { panic!() };
        assert_eq!(fault.kind, FaultKind::CapabilityViolation);
    }

    #[test]
    fn runtime_actions_are_deferred() {
        let mut s = Store::new();
        for src in ["main { receive }", "main { spawn { unit } }", "main { send(unit, unit) }"] {
            let mut e = parse_program(src).unwrap().main;
            assert!(matches!(
                step_local(&mut s, &mut e, &ClassTable::default()),
                StepResult::NeedsRuntime(_)
            ));
        }
    }
}
