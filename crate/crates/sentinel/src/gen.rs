//! Seeded random TGD generator for benchmark-style rule sets.
//!
//! Body atoms are joined in a chain: the last variable of each atom is the
//! first variable of the next. Head atoms are either chained the same way or
//! pairwise variable-disjoint. The first head atom draws its non-existential
//! slots from the body variables; later head atoms may reuse body variables
//! too, subject to the shape constraint, and every remaining slot gets a
//! fresh existential.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{Atom, Rule, RuleSet, Sym, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HeadShape {
    Chained,
    Discrete,
}

impl FromStr for HeadShape {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chained" => Ok(HeadShape::Chained),
            "discrete" => Ok(HeadShape::Discrete),
            _ => Err(format!("unknown head shape {s}; expected chained or discrete")),
        }
    }
}

impl fmt::Display for HeadShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeadShape::Chained => "chained",
            HeadShape::Discrete => "discrete",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub count: usize,
    pub predicate_pool: usize,
    pub arity: usize,
    /// Maximum occurrences of one predicate within a rule, body and head together.
    pub max_repeated: usize,
    pub body_atoms: usize,
    pub head_atoms: usize,
    pub shape: HeadShape,
    pub seed: u64,
}

impl GenParams {
    /// Linear rules with four-ary atoms: one body atom and three head atoms
    /// over a pool of twenty predicates.
    pub fn preset(shape: HeadShape, count: usize, seed: u64) -> GenParams {
        GenParams { count, predicate_pool: 20, arity: 4, max_repeated: 3, body_atoms: 1, head_atoms: 3, shape, seed }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenerationError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("{atoms} atoms per rule cannot be drawn from {pool} predicates with at most {max} repeats each")]
    TooFewPredicates { atoms: usize, pool: usize, max: usize },
}

pub fn validate(p: &GenParams) -> Result<(), GenerationError> {
    for (name, v) in [
        ("predicate_pool", p.predicate_pool),
        ("arity", p.arity),
        ("max_repeated", p.max_repeated),
        ("body_atoms", p.body_atoms),
        ("head_atoms", p.head_atoms),
    ] {
        if v == 0 {
            return Err(GenerationError::NotPositive(name));
        }
    }
    let atoms = p.body_atoms + p.head_atoms;
    if atoms > p.predicate_pool * p.max_repeated {
        return Err(GenerationError::TooFewPredicates { atoms, pool: p.predicate_pool, max: p.max_repeated });
    }
    Ok(())
}

pub fn generate(p: &GenParams) -> Result<RuleSet, GenerationError> {
    validate(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let rules = (1..=p.count).map(|n| gen_rule(p, n, &mut rng)).collect();
    Ok(RuleSet::new(rules).expect("generated rules are well formed"))
}

fn predicates(p: &GenParams, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut used = vec![0usize; p.predicate_pool];
    let mut out = Vec::new();
    while out.len() < p.body_atoms + p.head_atoms {
        let pick = rng.gen_range(0..p.predicate_pool);
        if used[pick] < p.max_repeated {
            used[pick] += 1;
            out.push(pick);
        }
    }
    out
}

fn gen_rule(p: &GenParams, n: usize, rng: &mut ChaCha8Rng) -> Rule {
    let preds = predicates(p, rng);
    let var = |name: String| Term::Variable(Sym::new(&format!("{name}@{n}")));
    let pred_name = |i: usize| format!("p{i}");

    let mut body = Vec::new();
    let mut body_vars: Vec<Term> = Vec::new();
    let mut fresh = 0usize;
    let mut last: Option<Term> = None;
    for &pi in &preds[..p.body_atoms] {
        let mut args = Vec::with_capacity(p.arity);
        for slot in 0..p.arity {
            let t = match (&last, slot) {
                (Some(t), 0) => t.clone(),
                _ => {
                    fresh += 1;
                    let t = var(format!("X{fresh}"));
                    body_vars.push(t.clone());
                    t
                }
            };
            args.push(t);
        }
        last = args.last().cloned();
        body.push(Atom::new(&pred_name(pi), args));
    }

    let mut head = Vec::new();
    let mut available: Vec<Term> = body_vars.clone();
    let mut ex = 0usize;
    let mut last: Option<Term> = None;
    for &pi in &preds[p.body_atoms..] {
        let mut args = Vec::with_capacity(p.arity);
        for slot in 0..p.arity {
            if let (HeadShape::Chained, Some(t), 0) = (p.shape, &last, slot) {
                args.push(t.clone());
                continue;
            }
            let t = if !available.is_empty() && rng.gen_bool(0.5) {
                available.choose(rng).unwrap().clone()
            } else {
                ex += 1;
                var(format!("Z{ex}"))
            };
            args.push(t);
        }
        if p.shape == HeadShape::Discrete {
            available.retain(|v| !args.contains(v));
        }
        last = args.last().cloned();
        head.push(Atom::new(&pred_name(pi), args));
    }
    Rule::new(format!("g{n}"), body, head).expect("generated rule is well formed")
}

/// Structural checks every generated rule set must pass.
pub fn check_postconditions(p: &GenParams, rs: &RuleSet) -> Result<(), String> {
    if rs.len() != p.count {
        return Err(format!("expected {} rules, got {}", p.count, rs.len()));
    }
    for r in &rs.rules {
        if r.body.len() != p.body_atoms || r.head.len() != p.head_atoms {
            return Err(format!("{}: wrong atom counts", r.label));
        }
        let mut counts: BTreeMap<Sym, usize> = BTreeMap::new();
        for a in r.atoms() {
            if a.args.len() != p.arity {
                return Err(format!("{}: {a} has the wrong arity", r.label));
            }
            if a.args.iter().any(|t| !t.is_variable()) {
                return Err(format!("{}: {a} contains a constant", r.label));
            }
            *counts.entry(a.pred).or_default() += 1;
        }
        if let Some((pred, c)) = counts.iter().find(|(_, &c)| c > p.max_repeated) {
            return Err(format!("{}: {pred} occurs {c} times", r.label));
        }
        for w in r.body.windows(2) {
            if w[0].args.last() != w[1].args.first() {
                return Err(format!("{}: body atoms {} and {} are not chained", r.label, w[0], w[1]));
            }
        }
        match p.shape {
            HeadShape::Chained => {
                for w in r.head.windows(2) {
                    if w[0].args.last() != w[1].args.first() {
                        return Err(format!("{}: head atoms {} and {} are not chained", r.label, w[0], w[1]));
                    }
                }
            }
            HeadShape::Discrete => {
                for (i, a) in r.head.iter().enumerate() {
                    let va: BTreeSet<Sym> = a.vars().collect();
                    for b in &r.head[i + 1..] {
                        if b.vars().any(|v| va.contains(&v)) {
                            return Err(format!("{}: head atoms {a} and {b} share a variable", r.label));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dlgp;
    use proptest::prelude::*;

    #[test]
    fn benchmark_preset_shape() {
        for shape in [HeadShape::Chained, HeadShape::Discrete] {
            let p = GenParams::preset(shape, 25, 7);
            let rs = generate(&p).unwrap();
            check_postconditions(&p, &rs).unwrap();
            assert!(rs.rules.iter().all(|r| r.body.len() == 1 && r.head.len() == 3));
            assert!(rs.schema.values().all(|&a| a == 4));
        }
    }

    #[test]
    fn zero_rules() {
        let p = GenParams { count: 0, ..GenParams::preset(HeadShape::Chained, 0, 1) };
        assert!(generate(&p).unwrap().is_empty());
    }

    #[test]
    fn deterministic() {
        let p = GenParams::preset(HeadShape::Discrete, 10, 99);
        let a = dlgp::serialize(&dlgp::SourceDocument::new(vec![], generate(&p).unwrap()));
        let b = dlgp::serialize(&dlgp::SourceDocument::new(vec![], generate(&p).unwrap()));
        assert_eq!(a, b);
        let c = dlgp::serialize(&dlgp::SourceDocument::new(vec![], generate(&GenParams { seed: 100, ..p }).unwrap()));
        assert_ne!(a, c);
    }

    #[test]
    fn unsatisfiable_parameters() {
        let p = GenParams { max_repeated: 1, predicate_pool: 2, head_atoms: 3, ..GenParams::preset(HeadShape::Chained, 1, 0) };
        assert!(matches!(generate(&p), Err(GenerationError::TooFewPredicates { .. })));
        let p = GenParams { arity: 0, ..GenParams::preset(HeadShape::Chained, 1, 0) };
        assert_eq!(generate(&p), Err(GenerationError::NotPositive("arity")));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn postconditions_hold(
            count in 0usize..6, pool in 1usize..6, arity in 1usize..5, max_rep in 1usize..4,
            body in 1usize..4, head in 1usize..4, chained in any::<bool>(), seed in any::<u64>()
        ) {
            let p = GenParams {
                count, predicate_pool: pool, arity, max_repeated: max_rep, body_atoms: body, head_atoms: head,
                shape: if chained { HeadShape::Chained } else { HeadShape::Discrete }, seed,
            };
            match generate(&p) {
                Ok(rs) => prop_assert_eq!(check_postconditions(&p, &rs), Ok(())),
                Err(_) => prop_assert!(body + head > pool * max_rep),
            }
        }
    }
}
