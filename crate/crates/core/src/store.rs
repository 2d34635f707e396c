//! The global store: variable bindings, the heap and the actor table, plus
//! capability casts, movable reachable object graphs and the store update
//! performed when a value is used as `moved`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::ast::{ActorId, Capability, Location, Permission, Value};
use crate::runtime::{check_move_postcondition, ActorState, ActorStatus};

/// `moved` was applied to an `unmov` reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("cannot use unmov reference {0} as moved")]
pub struct CapabilityViolation(pub Location);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ObjectRecord {
    pub class: String,
    /// Positional, matching the class's declared fields.
    pub fields: Vec<Value>,
}

/// Casts `v` to capability `cap`. `lent` strips the movable permission;
/// `moved` refuses an unmov location; everything else passes through.
pub fn cast(cap: Capability, v: Value) -> Result<Value, CapabilityViolation> {
    match (cap, v) {
        (Capability::Lent, Value::Loc(Permission::Movable, l)) => Ok(Value::unmov(l)),
        (Capability::Moved, Value::Loc(Permission::Unmov, l)) => Err(CapabilityViolation(l)),
        _ => Ok(v),
    }
}

/// Whether using `v` as `cap` would be rejected. Same condition as `cast`
/// and `apply_capability` fail on, checkable before touching the store.
pub fn violates(cap: Capability, v: Value) -> Option<CapabilityViolation> {
    match (cap, v) {
        (Capability::Moved, Value::Loc(Permission::Unmov, l)) => Some(CapabilityViolation(l)),
        _ => None,
    }
}

/// Store changes made during one reduction step, drained by the runtime
/// into trace events.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Delta {
    pub bound: Vec<String>,
    pub allocated: Vec<Location>,
    pub erred_fields: Vec<(Location, usize)>,
    pub erred_vars: Vec<String>,
    pub enqueued: Vec<ActorId>,
    pub dequeued: Vec<ActorId>,
}

impl Delta {
    pub fn is_empty(&self) -> bool {
        *self == Delta::default()
    }
}

/// Tally of move postcondition checks performed while auditing is on.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MoveAudit {
    pub checked: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Store {
    vars: BTreeMap<String, Value>,
    heap: Vec<ObjectRecord>,
    actors: BTreeMap<ActorId, ActorState>,
    next_var: u64,
    delta: Delta,
    audit: Option<MoveAudit>,
    skip_var_erasure: bool,
}

impl PartialEq for Store {
    /// Compares state only: bindings, heap and actors.
    fn eq(&self, other: &Store) -> bool {
        self.vars == other.vars && self.heap == other.heap && self.actors == other.actors
    }
}

impl Store {
    pub fn new() -> Store {
        Store::default()
    }

    pub fn var(&self, name: &str) -> Option<Value> {
        self.vars.get(name).copied()
    }

    pub fn vars(&self) -> impl Iterator<Item = (&str, Value)> {
        self.vars.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn object(&self, loc: Location) -> Option<&ObjectRecord> {
        self.heap.get(loc.0 as usize)
    }

    pub fn heap(&self) -> impl Iterator<Item = (Location, &ObjectRecord)> {
        self.heap.iter().enumerate().map(|(i, o)| (Location(i as u32), o))
    }

    pub fn heap_len(&self) -> usize {
        self.heap.len()
    }

    pub fn actors(&self) -> impl Iterator<Item = &ActorState> {
        self.actors.values()
    }

    pub fn actor(&self, id: ActorId) -> Option<&ActorState> {
        self.actors.get(&id)
    }

    pub fn actor_mut(&mut self, id: ActorId) -> Option<&mut ActorState> {
        self.actors.get_mut(&id)
    }

    pub fn actor_count(&self) -> usize {
        self.actors.len()
    }

    /// Adds an actor with the next sequential id.
    pub fn add_actor(&mut self, make: impl FnOnce(ActorId) -> ActorState) -> ActorId {
        let id = ActorId(self.actors.len() as u32);
        self.actors.insert(id, make(id));
        id
    }

    /// Extends the heap with `record` at a fresh location.
    pub fn alloc(&mut self, record: ObjectRecord) -> Location {
        let loc = Location(self.heap.len() as u32);
        self.heap.push(record);
        self.delta.allocated.push(loc);
        loc
    }

    /// Overwrites one field. Panics if the location or index is out of range.
    pub fn set_field(&mut self, loc: Location, index: usize, v: Value) {
        self.heap[loc.0 as usize].fields[index] = v;
    }

    /// Binds `v` under a name no other binding or source identifier can
    /// have: the hint's base followed by `#` and a global counter.
    pub fn bind_fresh(&mut self, hint: &str, v: Value) -> String {
        let base = hint.trim_start_matches('%').split('#').next().unwrap_or("");
        let base = if base.is_empty() || base.starts_with(|c: char| c.is_ascii_digit()) {
            "_"
        } else {
            base
        };
        let name = format!("{base}#{}", self.next_var);
        self.next_var += 1;
        self.vars.insert(name.clone(), v);
        self.delta.bound.push(name.clone());
        name
    }

    pub(crate) fn record_enqueue(&mut self, target: ActorId) {
        self.delta.enqueued.push(target);
    }

    pub(crate) fn record_dequeue(&mut self, actor: ActorId) {
        self.delta.dequeued.push(actor);
    }

    pub fn take_delta(&mut self) -> Delta {
        std::mem::take(&mut self.delta)
    }

    /// Turns on postcondition checking for every `moved` application.
    pub fn enable_move_audit(&mut self) {
        self.audit.get_or_insert_with(MoveAudit::default);
    }

    pub fn move_audit(&self) -> Option<&MoveAudit> {
        self.audit.as_ref()
    }

    /// Locations reachable from `v` through movable references only.
    /// Empty unless `v` is a movable location.
    pub fn movable_rog(&self, v: Value) -> BTreeSet<Location> {
        let mut seen = BTreeSet::new();
        let Value::Loc(Permission::Movable, root) = v else {
            return seen;
        };
        let mut stack = vec![root];
        while let Some(loc) = stack.pop() {
            if !seen.insert(loc) {
                continue;
            }
            let Some(obj) = self.object(loc) else { continue };
            for field in &obj.fields {
                if let Value::Loc(Permission::Movable, next) = field {
                    if !seen.contains(next) {
                        stack.push(*next);
                    }
                }
            }
        }
        seen
    }

    /// Updates the store for `v` being used as `cap`. Only `moved` on a
    /// movable location changes anything: every reference crossing the
    /// boundary of its movable graph becomes an error, as does every
    /// variable pointing into the graph. Actors are left alone.
    pub fn apply_capability(&mut self, cap: Capability, v: Value) -> Result<(), CapabilityViolation> {
        if cap != Capability::Moved {
            return Ok(());
        }
        let skip = self.skip_var_erasure || cfg!(feature = "mutant-skip-var-erasure");
        self.apply_moved(v, !skip)
    }

    /// Mutation switch: `moved` stops erasing variables. Exists so the
    /// acceptance suite can show its postcondition checks catch the bug.
    #[doc(hidden)]
    pub fn set_skip_var_erasure(&mut self, skip: bool) {
        self.skip_var_erasure = skip;
    }

    /// `apply_capability(Moved, v)` with variable erasure optionally
    /// disabled. Exists so tests can confirm the postcondition checks catch
    /// the omission.
    #[doc(hidden)]
    pub fn apply_moved(&mut self, v: Value, erase_vars: bool) -> Result<(), CapabilityViolation> {
        if let Some(violation) = violates(Capability::Moved, v) {
            return Err(violation);
        }
        if !matches!(v, Value::Loc(Permission::Movable, _)) {
            return Ok(());
        }
        let before = self.audit.as_ref().map(|_| self.state_clone());

        let graph = self.movable_rog(v);
        for (i, obj) in self.heap.iter_mut().enumerate() {
            let loc = Location(i as u32);
            let inside = graph.contains(&loc);
            for (idx, field) in obj.fields.iter_mut().enumerate() {
                if let Value::Loc(perm, target) = *field {
                    if graph.contains(&target) != inside {
                        *field = Value::Err(perm);
                        self.delta.erred_fields.push((loc, idx));
                    }
                }
            }
        }
        if erase_vars {
            for (name, val) in self.vars.iter_mut() {
                if let Value::Loc(perm, target) = *val {
                    if graph.contains(&target) {
                        *val = Value::Err(perm);
                        self.delta.erred_vars.push(name.clone());
                    }
                }
            }
        }

        if let Some(before) = before {
            let ok = check_move_postcondition(&before, self, v);
            let audit = self.audit.as_mut().expect("audit enabled");
            audit.checked += 1;
            if !ok {
                audit.failed += 1;
            }
        }
        Ok(())
    }

    fn state_clone(&self) -> Store {
        Store {
            vars: self.vars.clone(),
            heap: self.heap.clone(),
            actors: self.actors.clone(),
            next_var: self.next_var,
            delta: Delta::default(),
            audit: None,
            skip_var_erasure: self.skip_var_erasure,
        }
    }

    /// Canonical JSON rendering with sorted keys and integer locations.
    pub fn snapshot(&self) -> Json {
        let vars: serde_json::Map<String, Json> =
            self.vars.iter().map(|(k, v)| (k.clone(), value_json(*v))).collect();
        let heap: Vec<Json> = self
            .heap()
            .map(|(loc, o)| {
                json!({
                    "loc": loc.0,
                    "class": o.class,
                    "fields": o.fields.iter().map(|v| value_json(*v)).collect::<Vec<_>>(),
                })
            })
            .collect();
        let actors: Vec<Json> = self.actors.values().map(actor_json).collect();
        json!({ "vars": vars, "heap": heap, "actors": actors })
    }
}

/// JSON form of a value: `"unit"`, `{"actor": n}`, `{"loc": n, "perm": p}`
/// or `{"err": p}`.
pub fn value_json(v: Value) -> Json {
    match v {
        Value::Unit => json!("unit"),
        Value::Actor(a) => json!({ "actor": a.0 }),
        Value::Loc(p, l) => json!({ "loc": l.0, "perm": p }),
        Value::Err(p) => json!({ "err": p }),
    }
}

pub(crate) fn status_json(status: &ActorStatus) -> Json {
    match status {
        ActorStatus::Runnable => json!({ "state": "runnable" }),
        ActorStatus::Blocked => json!({ "state": "blocked" }),
        ActorStatus::Done(v) => json!({ "state": "done", "value": value_json(*v) }),
        ActorStatus::Faulted(f) => json!({
            "state": "faulted",
            "kind": f.kind,
            "line": f.span.start.line,
            "column": f.span.start.column,
            "detail": f.detail,
        }),
    }
}

fn actor_json(a: &ActorState) -> Json {
    json!({
        "id": a.id.0,
        "queue": a.queue.iter().map(|v| value_json(*v)).collect::<Vec<_>>(),
        "expr": a.expr.to_string(),
        "status": status_json(&a.status),
    })
}
