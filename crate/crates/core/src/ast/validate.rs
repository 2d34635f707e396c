use std::collections::HashSet;
use std::fmt;

use super::{Expr, ExprKind, Program, Span, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub span: Span,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

/// Checks the well-formedness rules of a whole program. Arity of `new` and
/// of method calls is left to the runtime.
pub fn validate_program(p: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut push = |span: Span, message: String| diags.push(Diagnostic { span, message });

    let mut seen_classes = HashSet::new();
    for class in p.classes.iter() {
        if !seen_classes.insert(class.name.as_str()) {
            push(class.span, format!("duplicate class {}", class.name));
        }
        let mut fields = HashSet::new();
        for (f, _) in &class.fields {
            if !fields.insert(f.as_str()) {
                push(class.span, format!("duplicate field {f} in class {}", class.name));
            }
        }
        let mut methods = HashSet::new();
        for m in &class.methods {
            if !methods.insert(m.name.as_str()) {
                push(m.span, format!("duplicate method {} in class {}", m.name, class.name));
            }
            let mut params = HashSet::new();
            for (x, _) in &m.params {
                if x == "this" {
                    push(m.span, format!("parameter of method {} may not be named this", m.name));
                } else if !params.insert(x.as_str()) {
                    push(m.span, format!("duplicate parameter {x} in method {}", m.name));
                }
            }
            let scope: Vec<&str> = m.params.iter().map(|(x, _)| x.as_str()).collect();
            check_expr(p, &m.body, true, &scope, &mut push);
        }
    }
    check_expr(p, &p.main, false, &[], &mut push);
    diags
}

fn check_expr(
    p: &Program,
    e: &Expr,
    in_method: bool,
    scope: &[&str],
    push: &mut impl FnMut(Span, String),
) {
    e.walk(&mut |node| match &node.kind {
        ExprKind::New { class, .. } if p.classes.get(class).is_none() => {
            push(node.span, format!("unknown class {class}"));
        }
        ExprKind::This if !in_method => push(node.span, "`this` outside a method body".into()),
        ExprKind::Val(v @ (Value::Loc(..) | Value::Err(_) | Value::Actor(_))) => {
            push(node.span, format!("runtime value {v} in source"));
        }
        _ => {}
    });
    for (name, span) in free_var_spans(e) {
        if !scope.contains(&name.as_str()) {
            push(span, format!("unbound variable {name}"));
        }
    }
}

/// Free variables of `e` in order of first occurrence. `this` is not a
/// variable. Spawn bodies are included.
pub fn free_vars(e: &Expr) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for (name, _) in free_var_spans(e) {
        if !out.contains(&name) {
            out.push(name);
        }
    }
    out
}

fn free_var_spans(e: &Expr) -> Vec<(String, Span)> {
    fn go(e: &Expr, bound: &mut Vec<String>, out: &mut Vec<(String, Span)>) {
        match &e.kind {
            ExprKind::Var(x) => {
                if !bound.contains(x) {
                    out.push((x.clone(), e.span));
                }
            }
            ExprKind::Let { var, rhs, body, .. } => {
                go(rhs, bound, out);
                bound.push(var.clone());
                go(body, bound, out);
                bound.pop();
            }
            _ => {
                for child in e.children() {
                    go(child, bound, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    go(e, &mut Vec::new(), &mut out);
    out
}
