//! Random well-formed programs for property tests, benchmarks and the
//! acceptance suite.
//!
//! Output is scope-correct and names only declared classes. Whether it
//! runs without faults is left to chance: uses after a move, capability
//! violations and sends to non-actors are all reachable.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::ast::{Capability, ClassDecl, ClassTable, Expr, ExprKind, MethodDecl, Program, Span, Value};

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub max_classes: usize,
    pub max_fields: usize,
    /// Statements in `main`, not counting the final expression.
    pub max_statements: usize,
    /// Whether `spawn` and `send` may appear.
    pub actors: bool,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig { max_classes: 4, max_fields: 3, max_statements: 10, actors: true }
    }
}

fn cap<R: Rng>(rng: &mut R) -> Capability {
    *[Capability::Dyn, Capability::Dyn, Capability::Dyn, Capability::Lent, Capability::Moved]
        .choose(rng)
        .expect("non-empty")
}

fn e(kind: ExprKind) -> Expr {
    Expr::bare(kind)
}

fn var(x: &str) -> Expr {
    e(ExprKind::Var(x.to_string()))
}

fn unit() -> Expr {
    e(ExprKind::Val(Value::Unit))
}

fn call(recv: Expr, method: &str, args: Vec<Expr>) -> Expr {
    e(ExprKind::Call { recv: Box::new(recv), method: method.to_string(), args })
}

fn class<R: Rng>(rng: &mut R, name: String, max_fields: usize) -> ClassDecl {
    let fields: Vec<(String, Capability)> =
        (0..rng.gen_range(0..=max_fields)).map(|i| (format!("f{i}"), cap(rng))).collect();
    let this = || e(ExprKind::This);
    let mut methods = vec![MethodDecl {
        recv_cap: Capability::Dyn,
        name: "touch".into(),
        params: vec![],
        ret_cap: Capability::Dyn,
        body: unit(),
        span: Span::default(),
    }];
    for (f, _) in &fields {
        methods.push(MethodDecl {
            recv_cap: Capability::Dyn,
            name: format!("get_{f}"),
            params: vec![],
            ret_cap: cap(rng),
            body: e(ExprKind::FieldGet { recv: Box::new(this()), field: f.clone() }),
            span: Span::default(),
        });
        methods.push(MethodDecl {
            recv_cap: Capability::Dyn,
            name: format!("set_{f}"),
            params: vec![("x".into(), cap(rng))],
            ret_cap: Capability::Dyn,
            body: e(ExprKind::FieldSet {
                recv: Box::new(this()),
                field: f.clone(),
                rhs: Box::new(var("x")),
            }),
            span: Span::default(),
        });
    }
    ClassDecl { name, fields, methods, span: Span::default() }
}

struct Main<'c> {
    classes: &'c [ClassDecl],
    /// Variables in scope with the class they were created at, if known.
    vars: Vec<(String, Option<usize>)>,
    actors: Vec<String>,
    hidden: usize,
}

impl Main<'_> {
    fn fresh(&mut self, prefix: &str) -> String {
        format!("{prefix}{}", self.vars.len() + self.actors.len())
    }

    fn hidden(&mut self) -> String {
        self.hidden += 1;
        format!("%{}", self.hidden - 1)
    }

    fn operand<R: Rng>(&self, rng: &mut R) -> Expr {
        match self.vars.choose(rng) {
            Some((x, _)) if rng.gen_bool(0.8) => var(x),
            _ => unit(),
        }
    }

    fn object_var<R: Rng>(&self, rng: &mut R) -> Option<(String, usize)> {
        let known: Vec<_> =
            self.vars.iter().filter_map(|(x, c)| c.map(|c| (x.clone(), c))).collect();
        known.choose(rng).cloned()
    }

    /// One statement: an optional binding and its right-hand side.
    fn statement<R: Rng>(&mut self, rng: &mut R, actors: bool) -> (Capability, String, Expr) {
        loop {
            match rng.gen_range(0..8) {
                0 | 1 => {
                    let c = rng.gen_range(0..self.classes.len());
                    let args =
                        (0..self.classes[c].fields.len()).map(|_| self.operand(rng)).collect();
                    let x = self.fresh("x");
                    let rhs = e(ExprKind::New { class: self.classes[c].name.clone(), args });
                    self.vars.push((x.clone(), Some(c)));
                    return (cap(rng), x, rhs);
                }
                2 => {
                    let Some((y, c)) = self.object_var(rng) else { continue };
                    let Some((f, _)) = self.classes[c].fields.choose(rng) else { continue };
                    let rhs = e(ExprKind::FieldGet { recv: Box::new(var(&y)), field: f.clone() });
                    let x = self.fresh("x");
                    self.vars.push((x.clone(), None));
                    return (cap(rng), x, rhs);
                }
                3 => {
                    let Some((y, c)) = self.object_var(rng) else { continue };
                    let Some((f, _)) = self.classes[c].fields.choose(rng) else { continue };
                    let rhs = e(ExprKind::FieldSet {
                        recv: Box::new(var(&y)),
                        field: f.clone(),
                        rhs: Box::new(self.operand(rng)),
                    });
                    let h = self.hidden();
                    return (Capability::Dyn, h, rhs);
                }
                4 => {
                    let Some((y, c)) = self.object_var(rng) else { continue };
                    let (rhs, bind) = match self.classes[c].fields.choose(rng) {
                        Some((f, _)) if rng.gen_bool(0.5) => {
                            (call(var(&y), &format!("get_{f}"), vec![]), true)
                        }
                        Some((f, _)) => {
                            (call(var(&y), &format!("set_{f}"), vec![self.operand(rng)]), false)
                        }
                        None => (call(var(&y), "touch", vec![]), false),
                    };
                    if bind {
                        let x = self.fresh("x");
                        self.vars.push((x.clone(), None));
                        return (cap(rng), x, rhs);
                    }
                    let h = self.hidden();
                    return (Capability::Dyn, h, rhs);
                }
                5 => {
                    let Some((y, c)) = self.vars.choose(rng).cloned() else { continue };
                    let x = self.fresh("x");
                    self.vars.push((x.clone(), c));
                    return (cap(rng), x, var(&y));
                }
                6 if actors && self.actors.len() < 2 => {
                    let body = match rng.gen_range(0..4) {
                        0 => e(ExprKind::Let {
                            cap: Capability::Dyn,
                            var: "m".into(),
                            rhs: Box::new(e(ExprKind::Receive)),
                            body: Box::new(call(var("m"), "touch", vec![])),
                        }),
                        1 => e(ExprKind::Receive),
                        2 => match self.object_var(rng) {
                            Some((y, _)) => call(var(&y), "touch", vec![]),
                            None => unit(),
                        },
                        _ => unit(),
                    };
                    let a = format!("a{}", self.actors.len());
                    self.actors.push(a.clone());
                    return (Capability::Dyn, a, e(ExprKind::Spawn(Box::new(body))));
                }
                7 if actors && !self.actors.is_empty() => {
                    let a = self.actors.choose(rng).expect("non-empty").clone();
                    let rhs = e(ExprKind::Send {
                        target: Box::new(var(&a)),
                        payload: Box::new(self.operand(rng)),
                    });
                    let h = self.hidden();
                    return (Capability::Dyn, h, rhs);
                }
                _ => continue,
            }
        }
    }
}

/// A random program drawn according to `config`.
pub fn random_program<R: Rng>(rng: &mut R, config: &GenConfig) -> Program {
    let n = rng.gen_range(1..=config.max_classes.max(1));
    let classes: Vec<ClassDecl> =
        (0..n).map(|i| class(rng, format!("C{i}"), config.max_fields)).collect();
    let mut main = Main { classes: &classes, vars: Vec::new(), actors: Vec::new(), hidden: 0 };
    let count = rng.gen_range(1..=config.max_statements.max(1));
    let statements: Vec<_> = (0..count).map(|_| main.statement(rng, config.actors)).collect();
    let last = main.operand(rng);
    let body = statements.into_iter().rev().fold(last, |body, (cap, x, rhs)| {
        e(ExprKind::Let { cap, var: x, rhs: Box::new(rhs), body: Box::new(body) })
    });
    Program { classes: ClassTable::new(classes), main: body }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::validate_program;
    use crate::parser::parse_program;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_programs_validate_and_reparse() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let p = random_program(&mut rng, &GenConfig::default());
            assert!(validate_program(&p).is_empty(), "{p}");
            let text = p.to_string();
            assert_eq!(parse_program(&text).unwrap().to_string(), text);
        }
    }
}
