//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::time::Duration;

use chase_sentinel::activeness::{KSafeOptions, SearchOptions};
use chase_sentinel::acyclicity::Condition;
use chase_sentinel::chase::{self, ExhaustiveLimits, Outcome};
use chase_sentinel::gen::{self, GenParams, HeadShape};
use chase_sentinel::{Atom, Instance, RuleSet, Term};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small generated rule sets: binary predicates, short bodies and heads.
pub fn small_params(seed: u64, max_rules: usize) -> GenParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GenParams {
        count: rng.gen_range(1..=max_rules),
        predicate_pool: rng.gen_range(2..=4),
        arity: rng.gen_range(1..=2),
        max_repeated: 3,
        body_atoms: rng.gen_range(1..=2),
        head_atoms: rng.gen_range(1..=2),
        shape: if rng.gen_bool(0.5) { HeadShape::Chained } else { HeadShape::Discrete },
        seed,
    }
}

pub fn small_rule_set(seed: u64) -> RuleSet {
    gen::generate(&small_params(seed, 3)).expect("valid parameters")
}

/// Two rules at most, which keeps the number of 2-cycles small.
pub fn tiny_rule_set(seed: u64) -> RuleSet {
    gen::generate(&small_params(seed, 2)).expect("valid parameters")
}

/// Analysis options with budgets sized for test loops.
pub fn quick(k: usize, c: Condition) -> KSafeOptions {
    KSafeOptions {
        search: SearchOptions {
            max_probes: 200_000,
            wall_clock: Some(Duration::from_secs(5)),
            max_atoms: 5_000,
            ..SearchOptions::default()
        },
        max_cycles: 5_000,
        ..KSafeOptions::new(k, c)
    }
}

/// At most `max_atoms` facts over the schema of `rules`, drawn from at most
/// `max_consts` constants.
pub fn random_database(rules: &RuleSet, rng: &mut ChaCha8Rng, max_consts: usize, max_atoms: usize) -> Instance {
    let consts: Vec<String> = (0..rng.gen_range(1..=max_consts)).map(|i| format!("c{i}")).collect();
    let preds: Vec<(&str, usize)> = rules.schema.iter().map(|(p, &a)| (p.as_str(), a)).collect();
    let mut atoms = Vec::new();
    if !preds.is_empty() {
        for _ in 0..rng.gen_range(1..=max_atoms) {
            let (p, arity) = preds[rng.gen_range(0..preds.len())];
            let args = (0..arity).map(|_| Term::constant(&consts[rng.gen_range(0..consts.len())])).collect();
            atoms.push(Atom::new(p, args));
        }
    }
    Instance::from_atoms(atoms)
}

/// Explores every restricted chase sequence from `dbs` random databases and
/// reports the first one that runs past `10·(k+1)·|R|` steps.
pub fn smoke(rules: &RuleSet, k: usize, dbs: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limit = 10 * (k + 1) * rules.len().max(1);
    for _ in 0..dbs {
        let db = random_database(rules, &mut rng, 4, 6);
        let traces = chase::restricted_chase_exhaustive(&db, rules, ExhaustiveLimits { max_steps: limit, max_traces: 2_000 });
        if let Some(t) = traces.iter().find(|t| t.outcome != Outcome::Saturated) {
            return Err(format!("sequence of {} steps from {:?} does not saturate", t.steps.len(), db.to_string_set()));
        }
    }
    Ok(())
}
