use super::{Capability, ClassDecl, Expr, ExprKind, MethodDecl, Program};

// Binding strength, loosest first.
const SEQ: u8 = 0;
const ASSIGN: u8 = 1;
const POSTFIX: u8 = 2;

/// Renders a program in the concrete `.gcap` syntax. Parsing the output
/// yields a program equal to the input.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for class in p.classes.iter() {
        print_class(&mut out, class);
        out.push('\n');
    }
    out.push_str("main { ");
    out.push_str(&print_expr(&p.main));
    out.push_str(" }\n");
    out
}

pub(crate) fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e, SEQ);
    out
}

fn print_class(out: &mut String, class: &ClassDecl) {
    out.push_str("class ");
    out.push_str(&class.name);
    out.push('(');
    for (i, (name, cap)) in class.fields.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        cap_prefix(out, *cap);
        out.push_str(name);
    }
    out.push_str(") {");
    for m in &class.methods {
        out.push_str("\n  ");
        print_method(out, m);
    }
    if !class.methods.is_empty() {
        out.push('\n');
    }
    out.push('}');
}

fn print_method(out: &mut String, m: &MethodDecl) {
    cap_prefix(out, m.recv_cap);
    out.push_str("method ");
    out.push_str(&m.name);
    out.push('(');
    for (i, (name, cap)) in m.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(name);
        if *cap != Capability::Dyn {
            out.push_str(": ");
            out.push_str(cap.keyword());
        }
    }
    out.push(')');
    if m.ret_cap != Capability::Dyn {
        out.push_str(" -> ");
        out.push_str(m.ret_cap.keyword());
    }
    out.push_str(" { ");
    expr(out, &m.body, SEQ);
    out.push_str(" }");
}

fn cap_prefix(out: &mut String, cap: Capability) {
    if cap != Capability::Dyn {
        out.push_str(cap.keyword());
        out.push(' ');
    }
}

fn args(out: &mut String, args: &[Expr]) {
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, a, ASSIGN);
    }
    out.push(')');
}

fn expr(out: &mut String, e: &Expr, level: u8) {
    let needs_parens = match &e.kind {
        ExprKind::Let { .. } => level > SEQ,
        ExprKind::FieldSet { .. } => level > ASSIGN,
        _ => false,
    };
    if needs_parens {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Let { cap, var, rhs, body } => {
            if var.starts_with('%') && *cap == Capability::Dyn {
                expr(out, rhs, ASSIGN);
            } else {
                out.push_str("let ");
                cap_prefix(out, *cap);
                out.push_str(var);
                out.push_str(" = ");
                expr(out, rhs, ASSIGN);
            }
            out.push_str("; ");
            expr(out, body, SEQ);
        }
        ExprKind::FieldSet { recv, field, rhs } => {
            expr(out, recv, POSTFIX);
            out.push('.');
            out.push_str(field);
            out.push_str(" := ");
            expr(out, rhs, ASSIGN);
        }
        ExprKind::Call { recv, method, args: a } => {
            expr(out, recv, POSTFIX);
            out.push('.');
            out.push_str(method);
            args(out, a);
        }
        ExprKind::FieldGet { recv, field } => {
            expr(out, recv, POSTFIX);
            out.push('.');
            out.push_str(field);
        }
        ExprKind::New { class, args: a } => {
            out.push_str("new ");
            out.push_str(class);
            args(out, a);
        }
        ExprKind::Spawn(body) => {
            out.push_str("spawn { ");
            expr(out, body, SEQ);
            out.push_str(" }");
        }
        ExprKind::Receive => out.push_str("receive"),
        ExprKind::Send { target, payload } => {
            out.push_str("send(");
            expr(out, target, ASSIGN);
            out.push_str(", ");
            expr(out, payload, ASSIGN);
            out.push(')');
        }
        ExprKind::Val(v) => out.push_str(&v.to_string()),
        ExprKind::Var(name) => out.push_str(name),
        ExprKind::This => out.push_str("this"),
    }
    if needs_parens {
        out.push(')');
    }
}
