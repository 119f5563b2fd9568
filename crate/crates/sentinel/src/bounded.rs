//! Height-bounded membership check for the restricted chase.
//!
//! Phase 1 runs the skolem chase on the critical database with terms capped
//! one level above the bound. If nothing reaches that level the set is
//! bounded. Otherwise every atom at the capped level yields the rule sequence
//! of its derivation support, and each such path must be unable to reach the
//! level in a chained restricted sequence. Up to eight smaller bounds are
//! tried first, since a proof for any of them settles the requested one.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::activeness::{self, ChainWitness, SafetyVerdict, SearchOptions};
use crate::chase::{self, ChaseBudget, Limit, Outcome};
use crate::critdb;
use crate::model::{Atom, RuleSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundFunction {
    Constant(u64),
    /// `a·n + b`
    Linear(u64, u64),
    /// `exp_κ(n)`: `n` for κ = 0, else `2^exp_{κ-1}(n)`.
    ExpTower(u32),
}

impl BoundFunction {
    /// Saturates at `u64::MAX`.
    pub fn evaluate(&self, n: u64) -> u64 {
        match *self {
            BoundFunction::Constant(c) => c,
            BoundFunction::Linear(a, b) => a.saturating_mul(n).saturating_add(b),
            BoundFunction::ExpTower(k) => {
                let mut v = n;
                for _ in 0..k {
                    v = if v >= 64 { u64::MAX } else { 1u64 << v };
                }
                v
            }
        }
    }
}

impl fmt::Display for BoundFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundFunction::Constant(c) => write!(f, "const:{c}"),
            BoundFunction::Linear(a, b) => write!(f, "linear:{a},{b}"),
            BoundFunction::ExpTower(k) => write!(f, "exptower:{k}"),
        }
    }
}

impl FromStr for BoundFunction {
    type Err = String;

    /// `const:c`, `linear:a,b` or `exptower:k`. Values must be positive for
    /// every positive argument.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, arg) = s.split_once(':').ok_or_else(|| format!("bad bound {s:?}; expected kind:args"))?;
        let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad number {t:?}: {e}"));
        let f = match kind {
            "const" => BoundFunction::Constant(num(arg)?),
            "linear" => {
                let (a, b) = arg.split_once(',').ok_or("linear takes a,b")?;
                BoundFunction::Linear(num(a)?, num(b)?)
            }
            "exptower" => BoundFunction::ExpTower(num(arg)? as u32),
            _ => return Err(format!("unknown bound kind {kind:?}")),
        };
        if f.evaluate(1) == 0 {
            return Err(format!("{f} is not positive"));
        }
        Ok(f)
    }
}

#[derive(Clone, Debug)]
pub struct BoundedOptions {
    pub search: SearchOptions,
    pub chase: ChaseBudget,
    pub max_paths: usize,
}

impl Default for BoundedOptions {
    fn default() -> Self {
        BoundedOptions {
            search: SearchOptions::default(),
            chase: ChaseBudget::steps(200_000).with_atoms(100_000),
            max_paths: 10_000,
        }
    }
}

#[derive(Clone, Debug)]
pub enum MembVerdict {
    /// Bounded; `phase` is 1 or 2.
    Bounded { phase: u8 },
    /// A path reaches height `bound + 1` in a chained restricted sequence.
    Unbounded { path: Vec<usize>, witness: Box<ChainWitness> },
    ResourceExhausted(String),
}

#[derive(Clone, Debug)]
pub struct MembReport {
    pub verdict: MembVerdict,
    /// `δ(||R||)`.
    pub bound: u64,
    pub paths_checked: usize,
    /// Present for rule sets with a multi-atom head.
    pub caveat: Option<String>,
}

impl MembReport {
    pub fn letter(&self) -> &'static str {
        match self.verdict {
            MembVerdict::Bounded { .. } => "T",
            MembVerdict::Unbounded { .. } => "F",
            MembVerdict::ResourceExhausted(_) => "ResourceExhausted",
        }
    }
}

pub const MULTI_HEAD_CAVEAT: &str =
    "some rule has several head atoms; a T answer is sound but an F answer may be pessimistic";

/// Rule sequence of the steps that support `atom`, in chase order.
pub fn support_path(trace: &chase::ChaseTrace, rules: &RuleSet, atom: &Atom) -> Vec<usize> {
    let mut steps = BTreeSet::new();
    let mut todo = vec![atom.clone()];
    while let Some(a) = todo.pop() {
        let s = trace.result.step_of(&a).expect("atom in the chase result");
        if s == 0 || !steps.insert(s) {
            continue;
        }
        let st = &trace.steps[s - 1];
        todo.extend(rules.rules[st.rule].instantiate_body(&st.binding));
    }
    steps.into_iter().map(|s| trace.steps[s - 1].rule).collect()
}

/// Smaller bounds tried before the requested one. A height bound proved for
/// a smaller value implies the requested one, and long support paths make
/// phase 2 expensive.
const SMALLER_BOUNDS: u64 = 8;

pub fn memb_check(rules: &RuleSet, delta: BoundFunction, opts: &BoundedOptions) -> MembReport {
    let bound = delta.evaluate(rules.size() as u64);
    let caveat = rules.rules.iter().any(|r| r.head.len() > 1).then(|| MULTI_HEAD_CAVEAT.to_string());
    let report = |verdict, paths_checked| MembReport { verdict, bound, paths_checked, caveat: caveat.clone() };
    if u32::try_from(bound.saturating_add(1)).is_err() {
        // No chase on a finite budget gets anywhere near such heights.
        return report(MembVerdict::ResourceExhausted(format!("bound {bound} is too large to explore")), 0);
    }

    let mut checked = 0;
    for b in (1..bound).take(SMALLER_BOUNDS as usize).chain([bound]) {
        let (verdict, n) = check_height(rules, b, opts);
        checked += n;
        match verdict {
            MembVerdict::Bounded { phase } => return report(MembVerdict::Bounded { phase }, checked),
            v if b == bound => return report(v, checked),
            _ => {}
        }
    }
    unreachable!("the requested bound is always tried")
}

/// Both phases for one height bound.
fn check_height(rules: &RuleSet, bound: u64, opts: &BoundedOptions) -> (MembVerdict, usize) {
    let cap = (bound + 1) as u32;
    let db = critdb::skolem_critical_db(rules);
    let trace = chase::skolem_chase(&db, rules, &opts.chase.clone().with_height(cap), false);
    match &trace.outcome {
        Outcome::Saturated | Outcome::BudgetExhausted(Limit::Height) => {}
        other => return (MembVerdict::ResourceExhausted(chase::describe(other)), 0),
    }
    let tall: Vec<&Atom> = trace.result.atoms().filter(|a| a.height() >= cap).collect();
    if tall.is_empty() {
        return (MembVerdict::Bounded { phase: 1 }, 0);
    }

    let mut seen = HashSet::new();
    let mut paths = Vec::new();
    for a in tall {
        let p = support_path(&trace, rules, a);
        if seen.insert(p.clone()) {
            paths.push(p);
        }
    }
    paths.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    if paths.len() > opts.max_paths {
        return (MembVerdict::ResourceExhausted(format!("more than {} support paths", opts.max_paths)), 0);
    }

    let search = SearchOptions { min_height: Some(cap), sub_databases: true, ..opts.search.clone() };
    let results: Mutex<Vec<(usize, SafetyVerdict)>> = Mutex::new(Vec::new());
    paths.par_iter().enumerate().for_each(|(i, p)| {
        let (v, _) = activeness::is_path_active(rules, p, &search);
        results.lock().unwrap().push((i, v));
    });
    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|r| r.0);
    let checked = results.len();
    let mut inconclusive = None;
    for (i, v) in results {
        match v {
            SafetyVerdict::Safe => {}
            SafetyVerdict::Active(w) => {
                return (MembVerdict::Unbounded { path: paths[i].clone(), witness: w }, checked);
            }
            SafetyVerdict::Inconclusive(e) => {
                inconclusive.get_or_insert(e);
            }
        }
    }
    match inconclusive {
        Some(e) => (MembVerdict::ResourceExhausted(e), checked),
        None => (MembVerdict::Bounded { phase: 2 }, checked),
    }
}
