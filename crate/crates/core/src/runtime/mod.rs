//! Whole-configuration semantics: actors, spawn/send/receive, scheduling
//! and run bookkeeping.
//!
//! Execution is a sequential simulation. Each scheduler step picks one
//! runnable actor and performs exactly one reduction for it, either a
//! sequential rule from [`crate::eval`] or an actor-level action handled
//! here, and records one [`TraceEvent`].

mod check;
mod explore;

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::ast::{free_vars, ActorId, Capability, ClassTable, Expr, ExprKind, Program, Value};
use crate::eval::{
    decompose, step_local, substitute_in_place, Decomposition, Fault, FaultKind, Redex,
    Replacement, Rule, RuntimeAction, RuntimeRequest, StepResult, Substitution,
};
use crate::store::{status_json, violates, Delta, Store};

pub use check::{actor_roots, check_actor_isolation, check_move_postcondition};
pub use explore::{
    canonical_state, explore_exhaustive, ExploreConfig, ExploreError, Exploration,
    OutcomeSummary, TerminalStatus,
};

#[derive(Clone, Debug, PartialEq)]
pub enum ActorStatus {
    Runnable,
    /// Waiting in `receive` on an empty queue.
    Blocked,
    Done(Value),
    Faulted(Fault),
}

impl ActorStatus {
    pub fn is_terminal(&self) -> bool {
        matches!(self, ActorStatus::Done(_) | ActorStatus::Faulted(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActorState {
    pub id: ActorId,
    /// Pending messages, oldest first.
    pub queue: VecDeque<Value>,
    pub expr: Expr,
    pub status: ActorStatus,
}

impl ActorState {
    fn refresh_status(&mut self) {
        if self.status.is_terminal() {
            return;
        }
        self.status = match decompose(&self.expr) {
            Decomposition::AlreadyValue(v) => ActorStatus::Done(v),
            Decomposition::Redex { redex: Redex::ReceiveReady, .. } if self.queue.is_empty() => {
                ActorStatus::Blocked
            }
            Decomposition::Redex { .. } => ActorStatus::Runnable,
        };
    }
}

/// Which end of the queue `receive` takes from. Sends always append.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum QueueDiscipline {
    /// Oldest message first.
    #[default]
    Fifo,
    /// Newest message first: sends prepend and receives take the front.
    LiteralLifo,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SchedulerPolicy {
    /// Next runnable id after the last one stepped, cyclically.
    #[default]
    RoundRobin,
    /// Uniform choice among runnable ids from a seeded generator.
    SeededRandom(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Termination {
    AllDone,
    FaultStop,
    Deadlock,
    StepLimit,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One scheduler step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEvent {
    pub step: usize,
    pub actor: ActorId,
    pub rule: Rule,
    pub redex: String,
    pub delta: Delta,
}

impl TraceEvent {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace events serialise")
    }
}

/// A running configuration: the store (which holds the actor table) and the
/// class table.
#[derive(Clone, Debug)]
pub struct Machine {
    store: Store,
    classes: Arc<ClassTable>,
    queue: QueueDiscipline,
    steps: usize,
}

impl Machine {
    /// Starts `program.main` as actor 0 with an empty queue.
    pub fn new(program: &Program, queue: QueueDiscipline) -> Machine {
        let mut store = Store::new();
        store.add_actor(|id| {
            let mut a = ActorState {
                id,
                queue: VecDeque::new(),
                expr: program.main.clone(),
                status: ActorStatus::Runnable,
            };
            a.refresh_status();
            a
        });
        Machine { store, classes: Arc::new(program.classes.clone()), queue, steps: 0 }
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut Store {
        &mut self.store
    }

    pub fn classes(&self) -> &ClassTable {
        &self.classes
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn runnable(&self) -> Vec<ActorId> {
        self.store
            .actors()
            .filter(|a| a.status == ActorStatus::Runnable)
            .map(|a| a.id)
            .collect()
    }

    /// How the run ended, if no actor can step.
    pub fn termination(&self) -> Option<Termination> {
        let mut any_fault = false;
        let mut any_blocked = false;
        for a in self.store.actors() {
            match a.status {
                ActorStatus::Runnable => return None,
                ActorStatus::Blocked => any_blocked = true,
                ActorStatus::Faulted(_) => any_fault = true,
                ActorStatus::Done(_) => {}
            }
        }
        Some(if any_fault {
            Termination::FaultStop
        } else if any_blocked {
            Termination::Deadlock
        } else {
            Termination::AllDone
        })
    }

    /// Performs one reduction for `actor`. Returns `None`, changing nothing,
    /// unless the actor is runnable.
    pub fn step(&mut self, actor: ActorId) -> Option<TraceEvent> {
        if self.store.actor(actor)?.status != ActorStatus::Runnable {
            return None;
        }
        let step = self.steps;
        self.steps += 1;
        let mut expr = {
            let a = self.store.actor_mut(actor).expect("known actor");
            std::mem::replace(&mut a.expr, Expr::bare(ExprKind::Val(Value::Unit)))
        };

        let result = step_local(&mut self.store, &mut expr, &self.classes);
        let (rule, redex, fault) = match result {
            StepResult::Stepped { rule, redex } => (rule, redex, None),
            StepResult::Fault(f) => (Rule::Fault, f.detail.clone(), Some(f)),
            StepResult::Done(_) => unreachable!("runnable actors hold a redex"),
            StepResult::NeedsRuntime(req) => match self.runtime_action(actor, &mut expr, req) {
                Ok((rule, redex)) => (rule, redex, None),
                Err(f) => (Rule::Fault, f.detail.clone(), Some(f)),
            },
        };

        let a = self.store.actor_mut(actor).expect("known actor");
        a.expr = expr;
        if let Some(f) = fault {
            a.status = ActorStatus::Faulted(f);
        }
        a.refresh_status();
        debug_assert_eq!(self.store.check_locations(), Ok(()));
        Some(TraceEvent { step, actor, rule, redex, delta: self.store.take_delta() })
    }

    fn runtime_action(
        &mut self,
        actor: ActorId,
        expr: &mut Expr,
        req: RuntimeRequest,
    ) -> Result<(Rule, String), Fault> {
        let RuntimeRequest { context, action, span, redex } = req;
        let fault = |kind: FaultKind, detail: String| Fault {
            kind,
            detail: format!("{detail} in `{redex}`"),
            span,
        };
        match action {
            RuntimeAction::Spawn => {
                let ExprKind::Spawn(body) = &context.hole(expr).kind else {
                    unreachable!("spawn redex")
                };
                let captured = free_vars(body);
                let mut values = Vec::with_capacity(captured.len());
                for x in &captured {
                    match self.store.var(x) {
                        Some(v) => values.push(v),
                        None => {
                            return Err(fault(FaultKind::UnboundVariable, format!("unbound variable {x}")))
                        }
                    }
                }
                if let Some(v) = values.iter().find_map(|v| violates(Capability::Moved, *v)) {
                    return Err(fault(FaultKind::CapabilityViolation, v.to_string()));
                }
                for v in &values {
                    self.store.apply_capability(Capability::Moved, *v).expect("pre-checked");
                }
                let mut sub = Substitution::default();
                for (x, v) in captured.iter().zip(&values) {
                    let fresh = self.store.bind_fresh(x, *v);
                    sub.vars.insert(x.clone(), Replacement::Var(fresh));
                }
                let hole = context.hole_mut(expr);
                let ExprKind::Spawn(body) =
                    std::mem::replace(&mut hole.kind, ExprKind::Val(Value::Unit))
                else {
                    unreachable!("spawn redex")
                };
                let mut body = *body;
                substitute_in_place(&mut body, &sub);
                let child = self.store.add_actor(|id| {
                    let mut a = ActorState {
                        id,
                        queue: VecDeque::new(),
                        expr: body,
                        status: ActorStatus::Runnable,
                    };
                    a.refresh_status();
                    a
                });
                hole.kind = ExprKind::Val(Value::Actor(child));
                Ok((Rule::Spawn, redex))
            }
            RuntimeAction::Send { target, payload } => {
                let to = match target {
                    Value::Actor(id) if self.store.actor(id).is_some() => id,
                    Value::Err(_) => {
                        return Err(fault(FaultKind::UninitializedUse, "send to uninitialised reference".into()))
                    }
                    other => return Err(fault(FaultKind::NotAnActor, format!("{other} is not an actor"))),
                };
                if let Some(v) = violates(Capability::Moved, payload) {
                    return Err(fault(FaultKind::CapabilityViolation, v.to_string()));
                }
                self.store.apply_capability(Capability::Moved, payload).expect("pre-checked");
                let receiver = self.store.actor_mut(to).expect("checked");
                match self.queue {
                    QueueDiscipline::Fifo => receiver.queue.push_back(payload),
                    QueueDiscipline::LiteralLifo => receiver.queue.push_front(payload),
                }
                if receiver.status == ActorStatus::Blocked {
                    receiver.status = ActorStatus::Runnable;
                }
                self.store.record_enqueue(to);
                context.plug(expr, ExprKind::Val(Value::Unit));
                Ok((Rule::Send, redex))
            }
            RuntimeAction::Receive => {
                let me = self.store.actor_mut(actor).expect("known actor");
                let v = me.queue.pop_front().expect("runnable receivers have mail");
                self.store.record_dequeue(actor);
                context.plug(expr, ExprKind::Val(v));
                Ok((Rule::Receive, redex))
            }
        }
    }

    /// Snapshot of the configuration as a finished run.
    pub fn outcome(&self, termination: Termination) -> RunOutcome {
        RunOutcome { termination, steps: self.steps, store: self.store.clone() }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub policy: SchedulerPolicy,
    pub max_steps: usize,
    pub queue: QueueDiscipline,
    /// Stop at the first fault instead of running the other actors on.
    pub fail_fast: bool,
    /// Check the move postcondition after every `moved` application.
    pub audit_moves: bool,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            policy: SchedulerPolicy::RoundRobin,
            max_steps: 100_000,
            queue: QueueDiscipline::Fifo,
            fail_fast: false,
            audit_moves: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub termination: Termination,
    pub steps: usize,
    pub store: Store,
}

impl RunOutcome {
    pub fn status(&self, actor: ActorId) -> Option<&ActorStatus> {
        self.store.actor(actor).map(|a| &a.status)
    }

    pub fn faults(&self) -> Vec<(ActorId, &Fault)> {
        self.store
            .actors()
            .filter_map(|a| match &a.status {
                ActorStatus::Faulted(f) => Some((a.id, f)),
                _ => None,
            })
            .collect()
    }

    pub fn to_json(&self) -> Json {
        let actors: Vec<Json> = self
            .store
            .actors()
            .map(|a| {
                let mut s = status_json(&a.status);
                s["id"] = json!(a.id.0);
                s
            })
            .collect();
        json!({
            "termination": self.termination,
            "steps": self.steps,
            "actors": actors,
            "store": self.store.snapshot(),
        })
    }
}

/// No actor can take a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoRunnableActor;

/// Picks actors according to a [`SchedulerPolicy`].
#[derive(Clone, Debug)]
pub struct Scheduler {
    policy: SchedulerPolicy,
    last: Option<ActorId>,
    rng: ChaCha8Rng,
}

impl Scheduler {
    pub fn new(policy: SchedulerPolicy) -> Scheduler {
        let seed = match policy {
            SchedulerPolicy::SeededRandom(seed) => seed,
            SchedulerPolicy::RoundRobin => 0,
        };
        Scheduler { policy, last: None, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn choose(&mut self, runnable: &[ActorId]) -> Option<ActorId> {
        if runnable.is_empty() {
            return None;
        }
        let pick = match self.policy {
            SchedulerPolicy::RoundRobin => runnable
                .iter()
                .copied()
                .find(|id| self.last.is_none_or(|last| *id > last))
                .unwrap_or(runnable[0]),
            SchedulerPolicy::SeededRandom(_) => runnable[self.rng.gen_range(0..runnable.len())],
        };
        self.last = Some(pick);
        Some(pick)
    }
}

/// Selects a runnable actor and steps it once.
pub fn scheduler_step(
    machine: &mut Machine,
    scheduler: &mut Scheduler,
) -> Result<TraceEvent, NoRunnableActor> {
    let actor = scheduler.choose(&machine.runnable()).ok_or(NoRunnableActor)?;
    Ok(machine.step(actor).expect("chosen actor is runnable"))
}

/// Runs `program` to quiescence, the first fault under `fail_fast`, or the
/// step limit.
pub fn run(program: &Program, config: &RunConfig) -> (RunOutcome, Vec<TraceEvent>) {
    let mut machine = Machine::new(program, config.queue);
    if config.audit_moves {
        machine.store_mut().enable_move_audit();
    }
    let mut scheduler = Scheduler::new(config.policy);
    let mut trace = Vec::new();
    loop {
        if let Some(t) = machine.termination() {
            return (machine.outcome(t), trace);
        }
        if machine.steps() >= config.max_steps {
            return (machine.outcome(Termination::StepLimit), trace);
        }
        let event = scheduler_step(&mut machine, &mut scheduler).expect("runnable actor exists");
        let faulted = event.rule == Rule::Fault;
        trace.push(event);
        if faulted && config.fail_fast {
            return (machine.outcome(Termination::FaultStop), trace);
        }
    }
}

impl Store {
    /// Every location mentioned anywhere is allocated.
    pub fn check_locations(&self) -> Result<(), String> {
        let live = |v: &Value| v.location().is_none_or(|l| (l.0 as usize) < self.heap_len());
        if let Some((name, v)) = self.vars().find(|(_, v)| !live(v)) {
            return Err(format!("variable {name} holds dangling {v}"));
        }
        for (loc, o) in self.heap() {
            if let Some(v) = o.fields.iter().find(|v| !live(v)) {
                return Err(format!("{loc} holds dangling {v}"));
            }
        }
        for a in self.actors() {
            if let Some(v) = a.queue.iter().find(|v| !live(v)) {
                return Err(format!("queue of {} holds dangling {v}", a.id));
            }
            let mut bad = None;
            a.expr.walk(&mut |e| {
                if let Some(v) = e.value().filter(|v| !live(v)) {
                    bad = Some(v);
                }
            });
            if let Some(v) = bad {
                return Err(format!("expression of {} holds dangling {v}", a.id));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{Location, Permission};
    use crate::parser::parse_program;

    fn run_src(src: &str, config: &RunConfig) -> (RunOutcome, Vec<TraceEvent>) {
        run(&parse_program(src).unwrap(), config)
    }

    const FILE: &str = "class File() { method close() { unit } }";

    #[test]
    fn unit_program_is_done_without_steps() {
        let (out, trace) = run_src("main { unit }", &RunConfig::default());
        assert_eq!(out.termination, Termination::AllDone);
        assert_eq!(out.steps, 0);
        assert!(trace.is_empty());
        assert_eq!(out.status(ActorId(0)), Some(&ActorStatus::Done(Value::Unit)));
    }

    #[test]
    fn lone_receive_deadlocks() {
        let (out, _) = run_src("main { receive }", &RunConfig::default());
        assert_eq!(out.termination, Termination::Deadlock);
        assert_eq!(out.status(ActorId(0)), Some(&ActorStatus::Blocked));
    }

    #[test]
    fn round_robin_alternates() {
        let src = "main { spawn { unit; unit; unit; unit }; unit; unit; unit; unit }";
        let (_, trace) = run_src(src, &RunConfig::default());
        let actors: Vec<u32> = trace.iter().map(|e| e.actor.0).collect();
        // Actor 0 spawns, then the two alternate until one finishes.
        assert_eq!(&actors[..7], &[0, 1, 0, 1, 0, 1, 0]);
    }

    #[test]
    fn spawn_without_captures() {
        let (out, trace) = run_src("main { spawn { unit } }", &RunConfig::default());
        assert_eq!(trace[0].rule, Rule::Spawn);
        assert_eq!(out.status(ActorId(0)), Some(&ActorStatus::Done(Value::Actor(ActorId(1)))));
        assert!(trace[0].delta.bound.is_empty());
        assert_eq!(out.store.vars().count(), 0);
    }

    #[test]
    fn spawn_capturing_lent_faults() {
        let src = format!("{FILE} main {{ let lent h = new File(); spawn {{ h.close() }} }}");
        let (out, _) = run_src(&src, &RunConfig::default());
        let faults = out.faults();
        assert_eq!(faults.len(), 1);
        assert_eq!(faults[0].1.kind, FaultKind::CapabilityViolation);
        assert_eq!(out.store.actor_count(), 1);
    }

    #[test]
    fn spawn_moves_captures_out_of_parent() {
        // By hand: the spawn errs h#1 in the parent and binds h#2 to the live
        // location for the child, so only the parent's later close faults.
        let src = format!("{FILE} main {{ let h = new File(); spawn {{ h.close() }}; h.close() }}");
        let (out, _) = run_src(&src, &RunConfig::default());
        assert_eq!(out.termination, Termination::FaultStop);
        let ActorStatus::Faulted(f) = out.status(ActorId(0)).unwrap() else { panic!() };
        assert_eq!(f.kind, FaultKind::UninitializedUse);
        assert!(matches!(out.status(ActorId(1)), Some(ActorStatus::Done(Value::Unit))));
        assert_eq!(out.store.var("h#0"), Some(Value::Err(Permission::Movable)));
        assert_eq!(out.store.var("h#1"), Some(Value::movable(Location(0))));
    }

    #[test]
    fn send_moves_and_enqueues() {
        let src = format!(
            "{FILE} main {{ let a = spawn {{ receive }}; let f = new File(); send(a, f); f }}"
        );
        let (out, trace) = run_src(&src, &RunConfig::default());
        let send = trace.iter().find(|e| e.rule == Rule::Send).unwrap();
        assert_eq!(send.delta.enqueued, vec![ActorId(1)]);
        assert_eq!(send.delta.erred_vars, vec!["f#1".to_string()]);
        assert_eq!(out.status(ActorId(0)), Some(&ActorStatus::Done(Value::Err(Permission::Movable))));
        assert_eq!(out.status(ActorId(1)), Some(&ActorStatus::Done(Value::movable(Location(0)))));
    }

    #[test]
    fn send_errors() {
        let cases = [
            (format!("{FILE} main {{ let a = spawn {{ receive }}; let lent f = new File(); send(a, f) }}"), FaultKind::CapabilityViolation),
            (format!("{FILE} main {{ send(new File(), unit) }}"), FaultKind::NotAnActor),
            (format!("{FILE} main {{ let f = new File(); let g = f; send(spawn {{ receive }}, f); send(g, unit) }}"), FaultKind::UninitializedUse),
        ];
        for (src, kind) in cases {
            let (out, _) = run_src(&src, &RunConfig::default());
            let faults = out.faults();
            assert_eq!(faults.len(), 1, "{src}");
            assert_eq!(faults[0].1.kind, kind, "{src}");
        }
    }

    #[test]
    fn send_unit_leaves_store() {
        let (out, trace) = run_src("main { send(spawn { receive }, unit) }", &RunConfig::default());
        let send = trace.iter().find(|e| e.rule == Rule::Send).unwrap();
        assert!(send.delta.erred_vars.is_empty() && send.delta.erred_fields.is_empty());
        assert_eq!(out.termination, Termination::AllDone);
    }

    #[test]
    fn receive_takes_head() {
        let mut a = ActorState {
            id: ActorId(0),
            queue: [Value::Unit, Value::Actor(ActorId(3))].into(),
            expr: Expr::bare(ExprKind::Receive),
            status: ActorStatus::Runnable,
        };
        let p = Program { classes: ClassTable::default(), main: a.expr.clone() };
        let mut m = Machine::new(&p, QueueDiscipline::Fifo);
        std::mem::swap(m.store_mut().actor_mut(ActorId(0)).unwrap(), &mut a);
        let e = m.step(ActorId(0)).unwrap();
        assert_eq!(e.rule, Rule::Receive);
        let me = m.store().actor(ActorId(0)).unwrap();
        assert_eq!(me.status, ActorStatus::Done(Value::Unit));
        assert_eq!(me.queue, VecDeque::from([Value::Actor(ActorId(3))]));
    }

    #[test]
    fn fifo_and_lifo_order() {
        let src = "class A() {} class B() {} class Pair(x, y) {}
            main { let r = spawn { unit; unit; unit; unit; unit; unit; unit; unit; unit; unit; unit; unit;
                     let x = receive; let y = receive; new Pair(x, y) };
                   send(r, new A()); send(r, new B()) }";
        let first_class = |queue| {
            let (out, _) = run_src(src, &RunConfig { queue, ..RunConfig::default() });
            let ActorStatus::Done(Value::Loc(_, pair)) = out.status(ActorId(1)).unwrap() else { panic!() };
            let first = out.store.object(*pair).unwrap().fields[0].location().unwrap();
            out.store.object(first).unwrap().class.clone()
        };
        assert_eq!(first_class(QueueDiscipline::Fifo), "A");
        assert_eq!(first_class(QueueDiscipline::LiteralLifo), "B");
    }

    #[test]
    fn fault_halts_only_the_actor() {
        let src = format!("{FILE} main {{ spawn {{ unit; unit; unit; unit; unit; unit; unit; unit }}; new Nope() }}");
        let p = parse_program(&src).unwrap();
        let (out, _) = run(&p, &RunConfig::default());
        assert_eq!(out.termination, Termination::FaultStop);
        assert!(matches!(out.status(ActorId(1)), Some(ActorStatus::Done(_))));
        let (out, trace) = run(&p, &RunConfig { fail_fast: true, ..RunConfig::default() });
        assert_eq!(out.termination, Termination::FaultStop);
        assert_eq!(trace.last().unwrap().rule, Rule::Fault);
        assert!(matches!(out.status(ActorId(1)), Some(ActorStatus::Runnable)));
    }

    #[test]
    fn step_limit() {
        let src = "class L() { method go() { this.go() } } main { new L().go() }";
        let (out, trace) = run_src(src, &RunConfig { max_steps: 50, ..RunConfig::default() });
        assert_eq!(out.termination, Termination::StepLimit);
        assert_eq!(trace.len(), 50);
    }

    #[test]
    fn seeded_random_is_reproducible() {
        let src = "main { spawn { unit; unit; unit }; spawn { unit; unit }; unit; unit; unit }";
        let cfg = RunConfig { policy: SchedulerPolicy::SeededRandom(7), ..RunConfig::default() };
        let (_, a) = run_src(src, &cfg);
        let (_, b) = run_src(src, &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn trace_line_shape() {
        let (_, trace) = run_src("main { let x = unit; x }", &RunConfig::default());
        assert_eq!(
            trace[0].to_json_line(),
            r#"{"step":0,"actor":0,"rule":"E-VarAssignment","redex":"let ? x = unit; ...","delta":{"bound":["x#0"],"allocated":[],"erred_fields":[],"erred_vars":[],"enqueued":[],"dequeued":[]}}"#
        );
    }

    #[test]
    fn erasing_a_lent_field_can_add_a_fault() {
        // A lent field is stored unmov, so it stays outside the moved graph
        // and the sender's alias survives the send. Erased, the field is
        // movable, the graph grows to include the file, and the alias errs.
        let src = format!(
            "{FILE} class Obj(lent h) {{}}
             main {{ let other = spawn {{ receive }}; let fh = new File(); let o = new Obj(fh);
                    send(other, o); fh.close() }}"
        );
        let p = parse_program(&src).unwrap();
        let (out, _) = run(&p, &RunConfig::default());
        assert_eq!(out.termination, Termination::AllDone);
        let (erased, _) = run(&p.erased(), &RunConfig::default());
        assert_eq!(erased.termination, Termination::FaultStop);
        assert_eq!(erased.faults()[0].1.kind, FaultKind::UninitializedUse);
    }
}
