//! Fixtures shared by the benchmarks in `benches/`.

use gradcap_core::ast::{Location, Permission, Program, Value};
use gradcap_core::generate::{random_program, GenConfig};
use gradcap_core::store::{ObjectRecord, Store};
use gradcap_core::parse_program;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Corpus programs as `(name, source)`.
pub const CORPUS: [(&str, &str); 7] = [
    ("hello_unit", include_str!("../../../corpus/hello_unit.gcap")),
    ("deadlock_receive", include_str!("../../../corpus/deadlock_receive.gcap")),
    ("moved_filehandle", include_str!("../../../corpus/moved_filehandle.gcap")),
    ("lent_send", include_str!("../../../corpus/lent_send.gcap")),
    ("borrowed_field", include_str!("../../../corpus/borrowed_field.gcap")),
    ("spawn_reply", include_str!("../../../corpus/spawn_reply.gcap")),
    ("fifo_order", include_str!("../../../corpus/fifo_order.gcap")),
];

pub fn corpus_program(name: &str) -> Program {
    let (_, src) = CORPUS.iter().find(|(n, _)| *n == name).expect("corpus name");
    parse_program(src).expect("corpus parses")
}

/// `n` objects, each holding a movable reference to the next and an
/// unmov reference back to the first.
pub fn chain_store(n: u32) -> Store {
    let mut s = Store::new();
    for i in 0..n {
        let next = if i + 1 < n { Value::movable(Location(i + 1)) } else { Value::Unit };
        s.alloc(ObjectRecord {
            class: "Node".into(),
            fields: vec![next, Value::Loc(Permission::Unmov, Location(0))],
        });
    }
    s.bind_fresh("head", Value::movable(Location(0)));
    s.take_delta();
    s
}

/// Deterministic batch of random programs.
pub fn random_programs(count: usize, seed: u64) -> Vec<Program> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_program(&mut rng, &GenConfig::default())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        for (name, _) in CORPUS {
            corpus_program(name);
        }
        let s = chain_store(10);
        assert_eq!(s.movable_rog(Value::movable(Location(0))).len(), 10);
        assert_eq!(random_programs(3, 1).len(), 3);
    }
}
