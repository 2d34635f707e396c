//! Exhaustive schedule exploration.
//!
//! Depth-first search over scheduler choices. Configurations are keyed by a
//! canonical rendering of the reachable state, so interleavings that reach
//! the same configuration are expanded once. A state met again at a smaller
//! depth is expanded again, which keeps step-limit verdicts exact.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::ast::{ActorId, ExprKind, Location, Program, Value};
use crate::eval::FaultKind;
use crate::store::{MoveAudit, Store};

use super::{check_actor_isolation, ActorStatus, Machine, QueueDiscipline, Termination};

#[derive(Clone, Debug)]
pub struct ExploreConfig {
    /// Paths longer than this end in `StepLimit`.
    pub max_steps: usize,
    /// Distinct configurations expanded before giving up.
    pub max_states: usize,
    pub queue: QueueDiscipline,
    /// Check the move postcondition and actor isolation along every path.
    pub audit: bool,
}

impl Default for ExploreConfig {
    fn default() -> ExploreConfig {
        ExploreConfig {
            max_steps: 100_000,
            max_states: 200_000,
            queue: QueueDiscipline::Fifo,
            audit: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("exploration budget of {limit} states exceeded")]
    BudgetExceeded { limit: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum TerminalStatus {
    Runnable,
    Blocked,
    Done,
    Faulted { kind: FaultKind, line: u32, column: u32 },
}

impl From<&ActorStatus> for TerminalStatus {
    fn from(s: &ActorStatus) -> TerminalStatus {
        match s {
            ActorStatus::Runnable => TerminalStatus::Runnable,
            ActorStatus::Blocked => TerminalStatus::Blocked,
            ActorStatus::Done(_) => TerminalStatus::Done,
            ActorStatus::Faulted(f) => TerminalStatus::Faulted {
                kind: f.kind,
                line: f.span.start.line,
                column: f.span.start.column,
            },
        }
    }
}

/// One distinct way a schedule can end.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct OutcomeSummary {
    pub termination: Termination,
    pub actors: Vec<(ActorId, TerminalStatus)>,
    /// FNV-1a of the canonical final state.
    pub state_hash: u64,
}

#[derive(Clone, Debug, Default)]
pub struct Exploration {
    pub summaries: BTreeSet<OutcomeSummary>,
    /// Configurations expanded.
    pub states: usize,
    /// Scheduler steps taken across the search.
    pub transitions: usize,
    /// Configurations in which two live actors share a location.
    pub isolation_failures: usize,
    pub move_audit: MoveAudit,
}

impl Exploration {
    pub fn terminations(&self) -> BTreeSet<Termination> {
        self.summaries.iter().map(|s| s.termination).collect()
    }
}

/// Explores every schedule of `program` up to the configured bounds.
pub fn explore_exhaustive(
    program: &Program,
    config: &ExploreConfig,
) -> Result<Exploration, ExploreError> {
    let mut root = Machine::new(program, config.queue);
    if config.audit {
        root.store_mut().enable_move_audit();
    }
    let mut out = Exploration::default();
    let mut visited: HashMap<String, usize> = HashMap::new();
    let mut stack = vec![(root, 0usize)];

    while let Some((machine, depth)) = stack.pop() {
        let key = canonical_state(machine.store());
        match visited.get(&key) {
            Some(&seen) if seen <= depth => continue,
            _ => {}
        }
        visited.insert(key.clone(), depth);
        out.states += 1;
        if out.states > config.max_states {
            return Err(ExploreError::BudgetExceeded { limit: config.max_states });
        }
        if config.audit && check_actor_isolation(machine.store()).is_err() {
            out.isolation_failures += 1;
        }

        let termination = match machine.termination() {
            Some(t) => Some(t),
            None if depth >= config.max_steps => Some(Termination::StepLimit),
            None => None,
        };
        if let Some(termination) = termination {
            out.summaries.insert(OutcomeSummary {
                termination,
                actors: machine
                    .store()
                    .actors()
                    .map(|a| (a.id, TerminalStatus::from(&a.status)))
                    .collect(),
                state_hash: fnv1a(key.as_bytes()),
            });
            continue;
        }

        let parent_audit = machine.store().move_audit().cloned().unwrap_or_default();
        for actor in machine.runnable().into_iter().rev() {
            let mut next = machine.clone();
            next.step(actor).expect("runnable");
            out.transitions += 1;
            if let Some(a) = next.store().move_audit() {
                out.move_audit.checked += a.checked - parent_audit.checked;
                out.move_audit.failed += a.failed - parent_audit.failed;
            }
            stack.push((next, depth + 1));
        }
    }
    Ok(out)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3))
}

/// Renders the part of the configuration reachable from the actors, with
/// locations and runtime variable names renumbered in order of first
/// occurrence. Two configurations that differ only in garbage or in the
/// choice of fresh names render identically.
pub fn canonical_state(store: &Store) -> String {
    let mut c = Canon { store, locs: HashMap::new(), loc_order: Vec::new(), vars: HashMap::new(), var_order: Vec::new() };
    let mut out = String::new();
    for a in store.actors() {
        let status = match &a.status {
            ActorStatus::Runnable => "run".to_string(),
            ActorStatus::Blocked => "blocked".to_string(),
            ActorStatus::Done(v) => format!("done {}", c.value(*v)),
            ActorStatus::Faulted(f) => format!("fault {:?}@{}", f.kind, f.span),
        };
        let queue: Vec<String> = a.queue.iter().map(|v| c.value(*v).to_string()).collect();
        let mut expr = a.expr.clone();
        expr.walk_mut(&mut |e| match &mut e.kind {
            ExprKind::Val(v) => *v = c.value(*v),
            ExprKind::Var(x) if x.contains('#') => *x = c.var(x),
            _ => {}
        });
        let _ = writeln!(out, "{} {status} [{}] {expr}", a.id, queue.join(", "));
    }
    let (mut vi, mut li) = (0, 0);
    while vi < c.var_order.len() || li < c.loc_order.len() {
        while vi < c.var_order.len() {
            let name = c.var_order[vi].clone();
            let v = store.var(&name).map(|v| c.value(v));
            let _ = match v {
                Some(v) => writeln!(out, "{}={v}", c.vars[&name]),
                None => writeln!(out, "{}=unbound", c.vars[&name]),
            };
            vi += 1;
        }
        while li < c.loc_order.len() {
            let loc = c.loc_order[li];
            let obj = store.object(loc).expect("live location");
            let fields: Vec<String> = obj.fields.iter().map(|v| c.value(*v).to_string()).collect();
            let _ = writeln!(out, "l{li}={}({})", obj.class, fields.join(", "));
            li += 1;
        }
    }
    out
}

struct Canon<'s> {
    store: &'s Store,
    locs: HashMap<Location, u32>,
    loc_order: Vec<Location>,
    vars: HashMap<String, String>,
    var_order: Vec<String>,
}

impl Canon<'_> {
    fn value(&mut self, v: Value) -> Value {
        match v {
            Value::Loc(p, l) => {
                let next = self.locs.len() as u32;
                let id = *self.locs.entry(l).or_insert_with(|| {
                    self.loc_order.push(l);
                    next
                });
                Value::Loc(p, Location(id))
            }
            other => other,
        }
    }

    fn var(&mut self, name: &str) -> String {
        if let Some(n) = self.vars.get(name) {
            return n.clone();
        }
        debug_assert!(self.store.var(name).is_some() || !name.is_empty());
        let n = format!("_#{}", self.vars.len());
        self.vars.insert(name.to_string(), n.clone());
        self.var_order.push(name.to_string());
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn explore(src: &str) -> Exploration {
        explore_exhaustive(&parse_program(src).unwrap(), &ExploreConfig::default()).unwrap()
    }

    #[test]
    fn sequential_program_has_one_outcome() {
        let e = explore("class C() {} main { let x = new C(); x }");
        assert_eq!(e.summaries.len(), 1);
        assert_eq!(e.terminations(), BTreeSet::from([Termination::AllDone]));
        assert_eq!(e.transitions, 3);
    }

    #[test]
    fn race_on_receive_has_two_outcomes() {
        // The child either receives before or after main finishes; both
        // end AllDone but hold different values in main.
        let e = explore("main { let a = spawn { receive }; send(a, unit); a }");
        assert_eq!(e.terminations(), BTreeSet::from([Termination::AllDone]));
        assert!(e.states > 4);
    }

    #[test]
    fn both_deadlock_and_success_found() {
        let src = "main { let a = spawn { receive; receive }; send(a, unit) }";
        let e = explore(src);
        assert_eq!(e.terminations(), BTreeSet::from([Termination::Deadlock]));
        let src = "main { let a = spawn { receive }; spawn { send(a, unit) }; receive }";
        assert_eq!(explore(src).terminations(), BTreeSet::from([Termination::Deadlock]));
    }

    #[test]
    fn diamond_is_merged() {
        let src = "main { spawn { unit; unit; unit; unit }; spawn { unit; unit; unit; unit }; unit }";
        let e = explore(src);
        assert_eq!(e.summaries.len(), 1);
        // Without merging the number of expanded states would be
        // exponential in the number of steps.
        assert!(e.states < 200, "{}", e.states);
    }

    #[test]
    fn budget() {
        let src = "main { spawn { unit; unit; unit; unit }; spawn { unit; unit; unit; unit }; unit }";
        let cfg = ExploreConfig { max_states: 5, ..ExploreConfig::default() };
        let err = explore_exhaustive(&parse_program(src).unwrap(), &cfg).unwrap_err();
        assert_eq!(err, ExploreError::BudgetExceeded { limit: 5 });
    }

    #[test]
    fn canonical_state_ignores_names_and_garbage() {
        let a = parse_program("class C() {} main { new C(); let x = new C(); x }").unwrap();
        let b = parse_program("class C() {} main { let y = new C(); y }").unwrap();
        let run = |p: &Program| {
            let (out, _) = super::super::run(p, &Default::default());
            canonical_state(&out.store)
        };
        assert_eq!(run(&a), run(&b));
    }
}
