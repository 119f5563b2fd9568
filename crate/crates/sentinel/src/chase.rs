//! Skolem, restricted and Datalog-first chase runs with budgets and traces.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::time::{Duration, Instant};

use crate::hom::{self, CandidateOrder, Meter, SearchEnd};
use crate::model::{Atom, Instance, Rule, RuleSet, Term};

/// Limits for a chase run. `None` means unlimited.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChaseBudget {
    /// Trigger applications.
    pub max_steps: Option<usize>,
    /// Triggers whose output would contain a term higher than this are not
    /// applied.
    pub max_height: Option<u32>,
    pub max_atoms: Option<usize>,
    pub wall_clock: Option<Duration>,
}

impl ChaseBudget {
    pub fn unlimited() -> ChaseBudget {
        ChaseBudget::default()
    }

    pub fn steps(n: usize) -> ChaseBudget {
        ChaseBudget { max_steps: Some(n), ..Default::default() }
    }

    pub fn with_atoms(mut self, n: usize) -> ChaseBudget {
        self.max_atoms = Some(n);
        self
    }

    pub fn with_height(mut self, h: u32) -> ChaseBudget {
        self.max_height = Some(h);
        self
    }

    pub fn with_wall_clock(mut self, d: Duration) -> ChaseBudget {
        self.wall_clock = Some(d);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limit {
    Steps,
    Height,
    Atoms,
    Time,
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Limit::Steps => "steps",
            Limit::Height => "height",
            Limit::Atoms => "atoms",
            Limit::Time => "time",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Saturated,
    BudgetExhausted(Limit),
    CyclicTermFound(Term),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: usize,
    /// Values of the rule's universal variables.
    pub binding: Vec<Term>,
    /// Atoms that were new at this step.
    pub added: Vec<Atom>,
    /// Datalog saturation step inserted by the Datalog-first strategy rather
    /// than a step of the requested path.
    pub saturation: bool,
}

#[derive(Clone, Debug)]
pub struct ChaseTrace {
    pub initial: Instance,
    pub steps: Vec<TraceStep>,
    pub outcome: Outcome,
    pub result: Instance,
}

impl ChaseTrace {
    fn start(initial: &Instance) -> ChaseTrace {
        ChaseTrace {
            initial: initial.clone(),
            steps: Vec::new(),
            outcome: Outcome::Saturated,
            result: initial.clone(),
        }
    }

    /// Re-applies every step from the initial instance.
    pub fn replay(&self, rules: &RuleSet) -> Instance {
        let mut inst = self.initial.clone();
        for (i, s) in self.steps.iter().enumerate() {
            hom::apply(&rules.rules[s.rule], &s.binding, &mut inst, i + 1);
        }
        inst
    }

    /// Rule labels of the non-saturation steps.
    pub fn path_labels<'a>(&self, rules: &'a RuleSet) -> Vec<&'a str> {
        self.steps.iter().filter(|s| !s.saturation).map(|s| rules.rules[s.rule].label.as_str()).collect()
    }

    pub fn applications(&self) -> usize {
        self.steps.len()
    }

    /// Human-readable derivation, one step per line.
    pub fn render(&self, rules: &RuleSet) -> String {
        let mut out = String::new();
        let mut atoms: Vec<String> = self.initial.atoms().map(|a| a.to_string()).collect();
        atoms.sort();
        out.push_str(&format!("I0 = {{{}}}\n", atoms.join(", ")));
        for (i, s) in self.steps.iter().enumerate() {
            let r = &rules.rules[s.rule];
            let binding: Vec<String> = r
                .universals
                .iter()
                .zip(&s.binding)
                .map(|(v, t)| format!("{}/{}", crate::model::base_name(*v).to_lowercase(), t))
                .collect();
            let added: Vec<String> = s.added.iter().map(|a| a.to_string()).collect();
            out.push_str(&format!(
                "step {}: {}{} {{{}}} adds {{{}}}\n",
                i + 1,
                r.label,
                if s.saturation { " (saturation)" } else { "" },
                binding.join(", "),
                added.join(", ")
            ));
        }
        out.push_str(&format!("outcome: {}\n", describe(&self.outcome)));
        out
    }
}

pub fn describe(o: &Outcome) -> String {
    match o {
        Outcome::Saturated => "saturated".into(),
        Outcome::BudgetExhausted(l) => format!("budget exhausted ({l})"),
        Outcome::CyclicTermFound(t) => format!("cyclic term {t}"),
    }
}

struct Guard {
    budget: ChaseBudget,
    deadline: Option<Instant>,
}

impl Guard {
    fn new(budget: &ChaseBudget) -> Guard {
        Guard { budget: budget.clone(), deadline: budget.wall_clock.map(|d| Instant::now() + d) }
    }

    fn check(&self, steps: usize, atoms: usize) -> Option<Limit> {
        if self.budget.max_steps.is_some_and(|m| steps >= m) {
            return Some(Limit::Steps);
        }
        if self.budget.max_atoms.is_some_and(|m| atoms >= m) {
            return Some(Limit::Atoms);
        }
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            return Some(Limit::Time);
        }
        None
    }

    fn too_high(&self, rule: &Rule, binding: &[Term]) -> bool {
        match self.budget.max_height {
            None => false,
            Some(h) => rule.instantiate_head(binding).iter().any(|a| a.height() > h),
        }
    }
}

fn meter_for(guard: &Guard) -> Meter {
    Meter::new(u64::MAX, guard.deadline.map(|d| d.saturating_duration_since(Instant::now())))
}

/// Breadth-first skolem chase: each round applies every trigger of the
/// previous round's instance that has not been applied before.
pub fn skolem_chase(i0: &Instance, rules: &RuleSet, budget: &ChaseBudget, detect_cyclic: bool) -> ChaseTrace {
    skolem_rounds(i0, rules, budget, detect_cyclic, |_| true)
}

/// Skolem chase restricted to the rules accepted by `allow`.
pub(crate) fn skolem_rounds(
    i0: &Instance,
    rules: &RuleSet,
    budget: &ChaseBudget,
    detect_cyclic: bool,
    allow: impl Fn(&Rule) -> bool,
) -> ChaseTrace {
    let guard = Guard::new(budget);
    let mut trace = ChaseTrace::start(i0);
    let mut applied: HashSet<(usize, Vec<Term>)> = HashSet::new();
    let mut blocked = false;
    loop {
        let mut round = Vec::new();
        for (ri, r) in rules.rules.iter().enumerate() {
            if !allow(r) {
                continue;
            }
            let mut meter = meter_for(&guard);
            let (matches, end) = hom::body_matches(r, &trace.result, CandidateOrder::Oldest, &mut meter);
            if end == SearchEnd::OutOfBudget {
                trace.outcome = Outcome::BudgetExhausted(Limit::Time);
                return trace;
            }
            for (binding, _) in matches {
                if !applied.contains(&(ri, binding.clone())) {
                    round.push((ri, binding));
                }
            }
        }
        let mut progressed = false;
        for (ri, binding) in round {
            let r = &rules.rules[ri];
            if guard.too_high(r, &binding) {
                blocked = true;
                continue;
            }
            if let Some(limit) = guard.check(trace.steps.len(), trace.result.len()) {
                trace.outcome = Outcome::BudgetExhausted(limit);
                return trace;
            }
            let step = trace.steps.len() + 1;
            let added = hom::apply(r, &binding, &mut trace.result, step);
            applied.insert((ri, binding.clone()));
            progressed = true;
            let cyclic = if detect_cyclic {
                added.iter().flat_map(|a| &a.args).find(|t| t.is_cyclic()).cloned()
            } else {
                None
            };
            trace.steps.push(TraceStep { rule: ri, binding, added, saturation: false });
            if let Some(t) = cyclic {
                trace.outcome = Outcome::CyclicTermFound(t);
                return trace;
            }
        }
        if !progressed {
            trace.outcome = if blocked { Outcome::BudgetExhausted(Limit::Height) } else { Outcome::Saturated };
            return trace;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathMode {
    Skolem,
    Restricted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureReason {
    NoTrigger,
    NoActiveTrigger,
}

#[derive(Clone, Debug)]
pub struct PathFailure {
    /// 1-based position in the path.
    pub step: usize,
    pub reason: FailureReason,
    /// Steps applied before the failure.
    pub partial: ChaseTrace,
}

/// Applies the rules of `path` in order, each with the first suitable body
/// match in `order`. Restricted mode only accepts active triggers.
pub fn run_path(
    i0: &Instance,
    rules: &RuleSet,
    path: &[usize],
    mode: PathMode,
    order: CandidateOrder,
) -> Result<ChaseTrace, Box<PathFailure>> {
    assert!(!path.is_empty(), "paths are non-empty");
    let mut trace = ChaseTrace::start(i0);
    for (i, &ri) in path.iter().enumerate() {
        let r = &rules.rules[ri];
        let mut meter = Meter::unlimited();
        let (matches, _) = hom::body_matches(r, &trace.result, order, &mut meter);
        if matches.is_empty() {
            return Err(Box::new(PathFailure { step: i + 1, reason: FailureReason::NoTrigger, partial: trace }));
        }
        let pick = match mode {
            PathMode::Skolem => matches.into_iter().next(),
            PathMode::Restricted => matches
                .into_iter()
                .find(|(b, _)| hom::is_active(r, b, &trace.result, &mut Meter::unlimited()).unwrap()),
        };
        let Some((binding, _)) = pick else {
            return Err(Box::new(PathFailure { step: i + 1, reason: FailureReason::NoActiveTrigger, partial: trace }));
        };
        let added = hom::apply(r, &binding, &mut trace.result, i + 1);
        trace.steps.push(TraceStep { rule: ri, binding, added, saturation: false });
    }
    Ok(trace)
}

/// Trigger selection for the deterministic restricted chase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// The active trigger whose body uses the most recently derived atoms.
    NewestFirst,
    /// As `NewestFirst`, but any active Datalog trigger goes before every
    /// generating one.
    DatalogFirst,
}

/// Rule index, binding and matched atom ids.
type ActiveTrigger = (usize, Vec<Term>, Vec<u32>);

fn active_triggers(inst: &Instance, rules: &RuleSet, meter: &mut Meter) -> Option<Vec<ActiveTrigger>> {
    let mut out = Vec::new();
    for (ri, r) in rules.rules.iter().enumerate() {
        let (matches, end) = hom::body_matches(r, inst, CandidateOrder::Oldest, meter);
        if end == SearchEnd::OutOfBudget {
            return None;
        }
        for (binding, ids) in matches {
            match hom::is_active(r, &binding, inst, meter) {
                None => return None,
                Some(true) => out.push((ri, binding, ids)),
                Some(false) => {}
            }
        }
    }
    Some(out)
}

/// One deterministic restricted chase sequence.
pub fn restricted_chase(i0: &Instance, rules: &RuleSet, budget: &ChaseBudget, strategy: Strategy) -> ChaseTrace {
    let guard = Guard::new(budget);
    let mut trace = ChaseTrace::start(i0);
    loop {
        let mut meter = meter_for(&guard);
        let Some(active) = active_triggers(&trace.result, rules, &mut meter) else {
            trace.outcome = Outcome::BudgetExhausted(Limit::Time);
            return trace;
        };
        let key = |(ri, _, ids): &(usize, Vec<Term>, Vec<u32>)| {
            let mut ids = ids.clone();
            ids.sort_unstable_by(|a, b| b.cmp(a));
            let datalog = strategy == Strategy::DatalogFirst && !rules.rules[*ri].is_generating();
            (datalog, ids, std::cmp::Reverse(*ri))
        };
        let mut best: Option<&(usize, Vec<Term>, Vec<u32>)> = None;
        let mut blocked = false;
        for t in &active {
            if guard.too_high(&rules.rules[t.0], &t.1) {
                blocked = true;
                continue;
            }
            if best.is_none_or(|b| key(t) > key(b)) {
                best = Some(t);
            }
        }
        let Some((ri, binding, _)) = best.cloned() else {
            trace.outcome = if blocked { Outcome::BudgetExhausted(Limit::Height) } else { Outcome::Saturated };
            return trace;
        };
        if let Some(limit) = guard.check(trace.steps.len(), trace.result.len()) {
            trace.outcome = Outcome::BudgetExhausted(limit);
            return trace;
        }
        let step = trace.steps.len() + 1;
        let added = hom::apply(&rules.rules[ri], &binding, &mut trace.result, step);
        trace.steps.push(TraceStep { rule: ri, binding, added, saturation: false });
    }
}

/// Limits for [`restricted_chase_exhaustive`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExhaustiveLimits {
    /// Longest sequence explored; deeper branches end as step-budget traces.
    pub max_steps: usize,
    /// Stop after this many traces.
    pub max_traces: usize,
}

impl Default for ExhaustiveLimits {
    fn default() -> Self {
        ExhaustiveLimits { max_steps: 20, max_traces: 10_000 }
    }
}

/// Every restricted chase sequence, branching on each active trigger. Nulls
/// are named by skolem terms, which is harmless here: two triggers naming the
/// same null can never both be active.
pub fn restricted_chase_exhaustive(i0: &Instance, rules: &RuleSet, limits: ExhaustiveLimits) -> Vec<ChaseTrace> {
    let mut out = Vec::new();
    let mut trace = ChaseTrace::start(i0);
    explore(&mut trace, rules, limits, &mut out);
    out
}

fn explore(trace: &mut ChaseTrace, rules: &RuleSet, limits: ExhaustiveLimits, out: &mut Vec<ChaseTrace>) {
    if out.len() >= limits.max_traces {
        return;
    }
    let active = active_triggers(&trace.result, rules, &mut Meter::unlimited()).unwrap();
    if active.is_empty() {
        let mut t = trace.clone();
        t.outcome = Outcome::Saturated;
        out.push(t);
        return;
    }
    if trace.steps.len() >= limits.max_steps {
        let mut t = trace.clone();
        t.outcome = Outcome::BudgetExhausted(Limit::Steps);
        out.push(t);
        return;
    }
    for (ri, binding, _) in active {
        let mark = trace.result.len();
        let step = trace.steps.len() + 1;
        let added = hom::apply(&rules.rules[ri], &binding, &mut trace.result, step);
        trace.steps.push(TraceStep { rule: ri, binding, added, saturation: false });
        explore(trace, rules, limits, out);
        trace.steps.pop();
        trace.result.truncate(mark);
        if out.len() >= limits.max_traces {
            return;
        }
    }
}

fn fingerprint(inst: &Instance) -> (u64, u64, usize) {
    let (mut sum, mut xor) = (0u64, 0u64);
    for a in inst.atoms() {
        let mut h = DefaultHasher::new();
        a.hash(&mut h);
        let v = h.finish();
        sum = sum.wrapping_add(v);
        xor ^= v.rotate_left(17).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    }
    (sum, xor, inst.len())
}

/// Length of the longest restricted chase sequence from `i0`, or `None` when
/// some sequence is longer than `limit`. States reached along different
/// orders are shared.
pub fn longest_restricted_sequence(i0: &Instance, rules: &RuleSet, limit: usize) -> Option<usize> {
    let mut memo: HashMap<(u64, u64, usize), usize> = HashMap::new();
    let mut inst = i0.clone();
    longest(&mut inst, rules, limit, &mut memo)
}

fn longest(
    inst: &mut Instance,
    rules: &RuleSet,
    remaining: usize,
    memo: &mut HashMap<(u64, u64, usize), usize>,
) -> Option<usize> {
    let key = fingerprint(inst);
    if let Some(&d) = memo.get(&key) {
        return (d <= remaining).then_some(d);
    }
    let active = active_triggers(inst, rules, &mut Meter::unlimited()).unwrap();
    if active.is_empty() {
        memo.insert(key, 0);
        return Some(0);
    }
    if remaining == 0 {
        return None;
    }
    let mut best = 0;
    for (ri, binding, _) in active {
        let mark = inst.len();
        hom::apply(&rules.rules[ri], &binding, inst, 1);
        let sub = longest(inst, rules, remaining - 1, memo);
        inst.truncate(mark);
        best = best.max(1 + sub?);
    }
    memo.insert(key, best);
    Some(best)
}

/// True iff in `path` no Datalog rule comes after a generating rule, except
/// possibly as the last element.
pub fn datalog_first_admissible(rules: &RuleSet, path: &[usize]) -> bool {
    let n = path.len();
    let mut seen_generating = false;
    for (i, &ri) in path.iter().enumerate() {
        let gen = rules.rules[ri].is_generating();
        if !gen && seen_generating && i + 1 < n {
            return false;
        }
        seen_generating |= gen;
    }
    true
}
