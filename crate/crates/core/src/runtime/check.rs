//! Runtime checks of the ownership discipline, used by audits and tests.

use std::collections::BTreeSet;

use crate::ast::{ActorId, ExprKind, Location, Value};
use crate::store::Store;

use super::ActorStatus;

/// Whether `after` is a correct result of applying `moved` to `v` in
/// `before`. With `m` the movable graph of `v` in `before`:
///
/// - no field outside `m` refers into `m`;
/// - every field inside `m` that still holds a location refers into `m`;
/// - no variable refers into `m`;
/// - the actor table is unchanged;
/// - the heap domain and classes are unchanged, the crossing references
///   and variables into `m` become errors of the same permission, and
///   nothing else changes.
pub fn check_move_postcondition(before: &Store, after: &Store, v: Value) -> bool {
    let m = before.movable_rog(v);
    if m.is_empty() {
        return before == after;
    }
    let into_m = |val: &Value| matches!(val, Value::Loc(_, t) if m.contains(t));

    for (loc, obj) in after.heap() {
        if m.contains(&loc) {
            if obj.fields.iter().any(|f| f.location().is_some() && !into_m(f)) {
                return false;
            }
        } else if obj.fields.iter().any(into_m) {
            return false;
        }
    }
    if after.vars().any(|(_, val)| into_m(&val)) {
        return false;
    }
    if !before.actors().eq(after.actors()) {
        return false;
    }

    // Exactly the crossing references change, each to an error of the
    // same permission.
    let crossing = |inside: bool, old: Value| {
        matches!(old, Value::Loc(_, t) if m.contains(&t) != inside)
    };
    let erred = |old: Value, new: Value| {
        matches!((old, new), (Value::Loc(p, _), Value::Err(q)) if p == q)
    };
    let expected = |must_change: bool, old: Value, new: Value| {
        if must_change { erred(old, new) } else { old == new }
    };
    if before.heap_len() != after.heap_len() {
        return false;
    }
    for ((loc, old), (_, new)) in before.heap().zip(after.heap()) {
        let inside = m.contains(&loc);
        if old.class != new.class
            || old.fields.len() != new.fields.len()
            || !old
                .fields
                .iter()
                .zip(&new.fields)
                .all(|(a, b)| expected(crossing(inside, *a), *a, *b))
        {
            return false;
        }
    }
    before.vars().count() == after.vars().count()
        && before
            .vars()
            .zip(after.vars())
            .all(|((n1, a), (n2, b))| n1 == n2 && expected(crossing(false, a), a, b))
}

/// Values an actor can reach directly: its queued messages, values inside
/// its expression and the bindings of variables its expression names.
pub fn actor_roots(store: &Store, actor: ActorId) -> Vec<Value> {
    let Some(a) = store.actor(actor) else { return Vec::new() };
    let mut roots: Vec<Value> = a.queue.iter().copied().collect();
    a.expr.walk(&mut |e| match &e.kind {
        ExprKind::Val(v) => roots.push(*v),
        ExprKind::Var(x) => roots.extend(store.var(x)),
        _ => {}
    });
    roots
}

fn reach(store: &Store, roots: &[Value]) -> BTreeSet<Location> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<Location> = roots.iter().filter_map(Value::location).collect();
    while let Some(loc) = stack.pop() {
        if !seen.insert(loc) {
            continue;
        }
        if let Some(obj) = store.object(loc) {
            stack.extend(obj.fields.iter().filter_map(Value::location));
        }
    }
    seen
}

/// No location is reachable, through live references of either
/// permission, from two actors that have not finished. Returns the first
/// shared location found.
pub fn check_actor_isolation(store: &Store) -> Result<(), (ActorId, ActorId, Location)> {
    let live: Vec<(ActorId, BTreeSet<Location>)> = store
        .actors()
        .filter(|a| !matches!(a.status, ActorStatus::Done(_)))
        .map(|a| (a.id, reach(store, &actor_roots(store, a.id))))
        .collect();
    for (i, (a, ra)) in live.iter().enumerate() {
        for (b, rb) in &live[i + 1..] {
            if let Some(loc) = ra.intersection(rb).next() {
                return Err((*a, *b, *loc));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Permission;
    use crate::store::ObjectRecord;

    fn obj(fields: Vec<Value>) -> ObjectRecord {
        ObjectRecord { class: "O".into(), fields }
    }

    #[test]
    fn detects_skipped_variable_erasure() {
        let mut s = Store::new();
        let a = s.alloc(obj(vec![]));
        s.bind_fresh("x", Value::movable(a));
        let before = s.clone();
        let mut good = s.clone();
        good.apply_moved(Value::movable(a), true).unwrap();
        assert!(check_move_postcondition(&before, &good, Value::movable(a)));
        s.apply_moved(Value::movable(a), false).unwrap();
        assert!(!check_move_postcondition(&before, &s, Value::movable(a)));
    }

    #[test]
    fn detects_dangling_boundary_field() {
        let mut s = Store::new();
        let a = s.alloc(obj(vec![]));
        let b = s.alloc(obj(vec![Value::unmov(a)]));
        let before = s.clone();
        // Leaving b's reference to a in place is wrong.
        assert!(!check_move_postcondition(&before, &s, Value::movable(a)));
        s.set_field(b, 0, Value::Err(Permission::Unmov));
        assert!(check_move_postcondition(&before, &s, Value::movable(a)));
    }

    #[test]
    fn over_erasure_is_rejected() {
        let mut s = Store::new();
        let a = s.alloc(obj(vec![]));
        s.bind_fresh("y", Value::Unit);
        let c = s.alloc(obj(vec![]));
        s.bind_fresh("z", Value::movable(c));
        let before = s.clone();
        let mut after = s.clone();
        after.apply_moved(Value::movable(a), true).unwrap();
        assert!(check_move_postcondition(&before, &after, Value::movable(a)));
        let mut wrong = Store::new();
        wrong.alloc(obj(vec![]));
        wrong.bind_fresh("y", Value::Unit);
        wrong.alloc(obj(vec![]));
        wrong.bind_fresh("z", Value::Err(Permission::Movable));
        assert!(!check_move_postcondition(&before, &wrong, Value::movable(a)));
    }
}
