//! Active paths and the k-safe decision procedure.
//!
//! A path `(r_1,…,r_n)` is active on a database when some restricted chase
//! sequence applies `r_1,…,r_n` in order (every trigger active) and the last
//! step is reachable from the first through a chain of steps, each of which
//! uses an atom first derived by the previous chain element. Atoms carry the
//! number of the path step that first derived them; atoms added by Datalog
//! saturation in Datalog-first mode inherit the largest step of the atoms
//! their trigger used.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::acyclicity::{self, Condition};
use crate::chase::{ChaseBudget, ChaseTrace, Outcome, TraceStep};
use crate::critdb::{self, MatchFailure, Renaming};
use crate::cycles::{self, KCycle};
use crate::deps;
use crate::hom::{self, CandidateOrder, HeadCheck, Meter, SearchEnd};
use crate::model::{Atom, Instance, RuleSet, Term};

/// How chain edges between steps may be established.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainMode {
    /// Only through atoms actually used by the later trigger.
    Witness,
    /// Also when the earlier rule's triggers on the instance before its step
    /// could feed the later rule. Such edges are flagged in the witness.
    WithDependencyFallback,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RenamingMode {
    /// Only the plain restricted critical database.
    Off,
    /// Merges proposed from failed matches, composed up to the path length.
    DemandDriven,
    /// Demand-driven, then every index-lowering renaming when the database
    /// has at most this many indexed constants.
    Exhaustive(usize),
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub chain: ChainMode,
    pub datalog_first: bool,
    /// Require the last step to add an atom of at least this height.
    pub min_height: Option<u32>,
    pub renaming: RenamingMode,
    /// Also search the sub-databases that omit body atoms of steps after the
    /// first. Those atoms may instead be derived along the way, and when
    /// present they can satisfy an earlier step's head.
    pub sub_databases: bool,
    pub max_probes: u64,
    pub wall_clock: Option<Duration>,
    pub max_atoms: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            chain: ChainMode::Witness,
            datalog_first: false,
            min_height: None,
            renaming: RenamingMode::Exhaustive(8),
            sub_databases: false,
            max_probes: 1_000_000,
            wall_clock: Some(Duration::from_secs(60)),
            max_atoms: 100_000,
        }
    }
}

/// A chained restricted sequence for a path.
#[derive(Clone, Debug)]
pub struct ChainWitness {
    pub trace: ChaseTrace,
    /// Path steps (1-based) of the chain, from 1 to n.
    pub chain: Vec<usize>,
    /// Chain edges accepted through the dependency fallback.
    pub fallback_edges: Vec<(usize, usize)>,
    /// Renaming applied to the restricted critical database, if any.
    pub renaming: Renaming,
}

#[derive(Clone, Debug)]
pub enum SafetyVerdict {
    Safe,
    Active(Box<ChainWitness>),
    Inconclusive(String),
}

impl SafetyVerdict {
    pub fn is_safe(&self) -> bool {
        matches!(self, SafetyVerdict::Safe)
    }

    pub fn witness(&self) -> Option<&ChainWitness> {
        match self {
            SafetyVerdict::Active(w) => Some(w),
            _ => None,
        }
    }
}

enum Flow {
    Found,
    Exhausted,
    Budget(String),
}

struct Search<'a> {
    rules: &'a RuleSet,
    path: &'a [usize],
    opts: &'a SearchOptions,
    meter: &'a mut Meter,
    inst: Instance,
    initial: Instance,
    steps: Vec<TraceStep>,
    /// `reach[s]`: path step `s` is chained from step 1.
    reach: Vec<bool>,
    pred: Vec<Option<(usize, bool)>>,
    /// Instance length right before each path step's application.
    marks: Vec<usize>,
    failures: Vec<MatchFailure>,
    failure_keys: HashSet<(usize, Vec<String>)>,
    collect: bool,
    /// Initial atoms that satisfied the head of a path step's trigger.
    blockers: HashSet<Atom>,
    peak_atoms: usize,
}

const MAX_FAILURES: usize = 64;

impl Search<'_> {
    fn budget_note(&self) -> String {
        if self.inst.len() > self.opts.max_atoms {
            format!("more than {} atoms", self.opts.max_atoms)
        } else {
            format!("search budget spent after {} probes", self.meter.probes())
        }
    }

    fn saturate_datalog(&mut self) -> Result<(), String> {
        loop {
            let mut fired = false;
            for (ri, r) in self.rules.rules.iter().enumerate() {
                if r.is_generating() {
                    continue;
                }
                let (matches, end) = hom::body_matches(r, &self.inst, CandidateOrder::Oldest, self.meter);
                if end == SearchEnd::OutOfBudget {
                    return Err(self.budget_note());
                }
                for (binding, ids) in matches {
                    match hom::is_active(r, &binding, &self.inst, self.meter) {
                        None => return Err(self.budget_note()),
                        Some(false) => continue,
                        Some(true) => {}
                    }
                    let step = ids.iter().map(|&i| self.inst.get(i).1).max().unwrap_or(0);
                    let added = hom::apply(r, &binding, &mut self.inst, step);
                    self.steps.push(TraceStep { rule: ri, binding, added, saturation: true });
                    fired = true;
                }
            }
            if self.inst.len() > self.opts.max_atoms {
                return Err(self.budget_note());
            }
            if !fired {
                return Ok(());
            }
        }
    }

    /// Chain predecessor for a trigger at path step `j` using atoms `ids`.
    fn chain_from(&mut self, j: usize, ids: &[u32]) -> Option<(usize, bool)> {
        if j == 1 {
            return Some((0, false));
        }
        let via_atoms = ids
            .iter()
            .map(|&i| self.inst.get(i).1)
            .filter(|&s| s >= 1 && s < j && self.reach[s])
            .max();
        if let Some(s) = via_atoms {
            return Some((s, false));
        }
        if self.opts.chain == ChainMode::WithDependencyFallback {
            let consumer = &self.rules.rules[self.path[j - 1]];
            for s in (1..j).rev() {
                if !self.reach[s] {
                    continue;
                }
                let mut before = self.inst.clone();
                before.truncate(self.marks[s]);
                if deps::depends_on_wrt(consumer, &self.rules.rules[self.path[s - 1]], &before) {
                    return Some((s, true));
                }
            }
        }
        None
    }

    fn record_failure(&mut self, step: usize) {
        if !self.collect || self.failures.len() >= MAX_FAILURES {
            return;
        }
        let key = (step, self.inst.to_string_set());
        if self.failure_keys.insert(key) {
            self.failures.push(MatchFailure {
                step,
                body: self.rules.rules[self.path[step - 1]].body.clone(),
                instance: self.inst.iter().map(|(a, s)| (a.clone(), s)).collect(),
            });
        }
    }

    fn go(&mut self, j: usize) -> Flow {
        let n = self.path.len();
        if j > n {
            return Flow::Found;
        }
        let ri = self.path[j - 1];
        let r = &self.rules.rules[ri];
        let inst_mark = self.inst.len();
        let steps_mark = self.steps.len();
        if self.opts.datalog_first && r.is_generating() {
            if let Err(e) = self.saturate_datalog() {
                return Flow::Budget(e);
            }
        }
        let (matches, end) = hom::body_matches(r, &self.inst, CandidateOrder::Newest, self.meter);
        if end == SearchEnd::OutOfBudget {
            return Flow::Budget(self.budget_note());
        }
        let mut applied_any = false;
        for (binding, ids) in matches {
            match hom::head_check(r, &binding, &self.inst, self.meter) {
                HeadCheck::OutOfBudget => return Flow::Budget(self.budget_note()),
                HeadCheck::Satisfied(image) => {
                    if self.opts.sub_databases {
                        self.blockers.extend(image.into_iter().filter(|a| self.initial.contains(a)));
                    }
                    continue;
                }
                HeadCheck::Active => {}
            }
            let link = self.chain_from(j, &ids);
            if j == n && link.is_none() {
                continue;
            }
            let before = self.inst.len();
            self.marks[j] = before;
            let added = hom::apply(r, &binding, &mut self.inst, j);
            if j == n {
                if let Some(h) = self.opts.min_height {
                    if !added.iter().any(|a| a.height() >= h) {
                        self.inst.truncate(before);
                        continue;
                    }
                }
            }
            applied_any = true;
            self.peak_atoms = self.peak_atoms.max(self.inst.len());
            if self.inst.len() > self.opts.max_atoms {
                return Flow::Budget(self.budget_note());
            }
            self.steps.push(TraceStep { rule: ri, binding, added, saturation: false });
            self.reach[j] = link.is_some();
            self.pred[j] = link;
            match self.go(j + 1) {
                Flow::Exhausted => {}
                other => return other,
            }
            self.reach[j] = false;
            self.pred[j] = None;
            self.steps.pop();
            self.inst.truncate(before);
        }
        if !applied_any {
            self.record_failure(j);
        }
        self.inst.truncate(inst_mark);
        self.steps.truncate(steps_mark);
        Flow::Exhausted
    }

    fn witness(&self, renaming: Renaming) -> ChainWitness {
        let n = self.path.len();
        let mut chain = vec![n];
        let mut fallback_edges = Vec::new();
        let mut cur = n;
        while cur > 1 {
            let (p, fb) = self.pred[cur].expect("last step is chained");
            if fb {
                fallback_edges.push((p, cur));
            }
            chain.push(p);
            cur = p;
        }
        chain.reverse();
        fallback_edges.reverse();
        ChainWitness {
            trace: ChaseTrace {
                initial: self.initial.clone(),
                steps: self.steps.clone(),
                outcome: Outcome::Saturated,
                result: self.inst.clone(),
            },
            chain,
            fallback_edges,
            renaming,
        }
    }
}

struct Attempt {
    verdict: SafetyVerdict,
    failures: Vec<MatchFailure>,
    blockers: HashSet<Atom>,
    peak_atoms: usize,
}

fn attempt(
    rules: &RuleSet,
    path: &[usize],
    i0: &Instance,
    opts: &SearchOptions,
    meter: &mut Meter,
    renaming: Renaming,
    collect: bool,
) -> Attempt {
    assert!(!path.is_empty(), "paths are non-empty");
    let n = path.len();
    let mut s = Search {
        rules,
        path,
        opts,
        meter,
        inst: i0.clone(),
        initial: i0.clone(),
        steps: Vec::new(),
        reach: vec![false; n + 1],
        pred: vec![None; n + 1],
        marks: vec![0; n + 1],
        failures: Vec::new(),
        failure_keys: HashSet::new(),
        collect,
        blockers: HashSet::new(),
        peak_atoms: i0.len(),
    };
    let verdict = match s.go(1) {
        Flow::Found => SafetyVerdict::Active(Box::new(s.witness(renaming))),
        Flow::Exhausted => SafetyVerdict::Safe,
        Flow::Budget(e) => SafetyVerdict::Inconclusive(e),
    };
    Attempt { verdict, failures: s.failures, blockers: s.blockers, peak_atoms: s.peak_atoms }
}

/// Whether `path` admits a chained restricted sequence from `i0`.
pub fn is_active_wrt(rules: &RuleSet, path: &[usize], i0: &Instance, opts: &SearchOptions) -> SafetyVerdict {
    let mut meter = Meter::new(opts.max_probes, opts.wall_clock);
    attempt(rules, path, i0, opts, &mut meter, Renaming::identity(), false).verdict
}

#[derive(Clone, Debug, Default)]
pub struct PathStats {
    /// Renamed critical databases searched, the plain one included.
    pub databases: usize,
    pub probes: u64,
    pub peak_atoms: usize,
}

/// Sub-databases tried per path when `SearchOptions::sub_databases` is set.
/// Running out of them makes a `Safe` answer inconclusive.
const MAX_SUB_DATABASES: usize = 256;

/// Whether `path` is active on some database, searched over the restricted
/// critical database of the path and its index-lowering renamings.
pub fn is_path_active(rules: &RuleSet, path: &[usize], opts: &SearchOptions) -> (SafetyVerdict, PathStats) {
    let base = critdb::restricted_critical_db(rules, path);
    let mut meter = Meter::new(opts.max_probes, opts.wall_clock);
    let mut stats = PathStats::default();
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    let verdict = if opts.sub_databases {
        search_sub_databases(rules, path, &base, opts, &mut meter, &mut stats, &mut seen)
    } else {
        search_database(rules, path, &base, opts, &mut meter, &mut stats, &mut seen).0
    };
    stats.probes = meter.probes();
    (verdict, stats)
}

/// Drops atoms of later steps' bodies on demand: whenever an initial atom
/// satisfies the head of a path trigger, the database without it is queued.
fn search_sub_databases(
    rules: &RuleSet,
    path: &[usize],
    base: &Instance,
    opts: &SearchOptions,
    meter: &mut Meter,
    stats: &mut PathStats,
    seen: &mut HashSet<Vec<String>>,
) -> SafetyVerdict {
    let first: HashSet<Atom> = rules.rules[path[0]].body.iter().map(|a| critdb::freeze(a, 1)).collect();
    let mut queued: HashSet<Vec<Atom>> = HashSet::new();
    let mut queue: std::collections::VecDeque<Vec<Atom>> = [Vec::new()].into();
    while let Some(dropped) = queue.pop_front() {
        if queued.len() > MAX_SUB_DATABASES {
            return SafetyVerdict::Inconclusive(format!("more than {MAX_SUB_DATABASES} sub-databases"));
        }
        let sub = Instance::from_atoms(base.atoms().filter(|a| !dropped.contains(a)).cloned());
        // Exhaustive renaming only on the full database.
        let sub_opts;
        let o = if dropped.is_empty() || opts.renaming == RenamingMode::Off {
            opts
        } else {
            sub_opts = SearchOptions { renaming: RenamingMode::DemandDriven, ..opts.clone() };
            &sub_opts
        };
        let (v, blocked) = search_database(rules, path, &sub, o, meter, stats, seen);
        if !v.is_safe() {
            return v;
        }
        for a in blocked.into_iter().filter(|a| !first.contains(a)) {
            let mut next = dropped.clone();
            next.push(a);
            next.sort();
            if queued.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    SafetyVerdict::Safe
}

/// Searches `base` and its renamings. Also returns the atoms of `base` whose
/// images blocked a path trigger.
fn search_database(
    rules: &RuleSet,
    path: &[usize],
    base: &Instance,
    opts: &SearchOptions,
    meter: &mut Meter,
    stats: &mut PathStats,
    seen: &mut HashSet<Vec<String>>,
) -> (SafetyVerdict, BTreeSet<Atom>) {
    let mut blocked = BTreeSet::new();
    let mut queue: std::collections::VecDeque<(Renaming, usize)> = [(Renaming::identity(), 0)].into();
    let mut run = |rn: Renaming, meter: &mut Meter, stats: &mut PathStats, collect: bool| -> Option<Attempt> {
        let image = rn.apply(base);
        if !seen.insert(image.to_string_set()) {
            return None;
        }
        stats.databases += 1;
        let a = attempt(rules, path, &image, opts, meter, rn.clone(), collect);
        stats.peak_atoms = stats.peak_atoms.max(a.peak_atoms);
        blocked.extend(base.atoms().filter(|b| a.blockers.contains(&rn.apply_atom(b))).cloned());
        Some(a)
    };

    let demand = opts.renaming != RenamingMode::Off;
    while let Some((rn, depth)) = queue.pop_front() {
        let Some(a) = run(rn.clone(), meter, stats, demand) else { continue };
        if !a.verdict.is_safe() {
            return (a.verdict, blocked);
        }
        if demand && depth < path.len() {
            for f in &a.failures {
                for m in critdb::propose_merges(f, 4096) {
                    queue.push_back((m.after(&rn), depth + 1));
                }
            }
        }
    }
    if let RenamingMode::Exhaustive(limit) = opts.renaming {
        let consts = critdb::indexed_constants(base);
        if consts.len() <= limit {
            for rn in critdb::all_renamings(&consts) {
                let Some(a) = run(rn, meter, stats, false) else { continue };
                if !a.verdict.is_safe() {
                    return (a.verdict, blocked);
                }
            }
        }
    }
    (SafetyVerdict::Safe, blocked)
}

/// Re-executes a witness from its initial instance and checks every claim it
/// makes: the rules applied, trigger activeness, the added atoms, the chain
/// and the final instance.
pub fn verify_witness(rules: &RuleSet, path: &[usize], w: &ChainWitness, opts: &SearchOptions) -> Result<(), String> {
    let mut inst = w.trace.initial.clone();
    let mut meter = Meter::unlimited();
    let mut path_step = 0usize;
    let mut used_steps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut marks: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, s) in w.trace.steps.iter().enumerate() {
        let r = &rules.rules[s.rule];
        let body = r.instantiate_body(&s.binding);
        let mut steps = Vec::new();
        for a in &body {
            match inst.step_of(a) {
                Some(st) => steps.push(st),
                None => return Err(format!("trace step {}: body atom {a} is missing", i + 1)),
            }
        }
        if hom::is_active(r, &s.binding, &inst, &mut meter) != Some(true) {
            return Err(format!("trace step {}: trigger for {} is not active", i + 1, r.label));
        }
        let step_no = if s.saturation {
            if !opts.datalog_first || r.is_generating() {
                return Err(format!("trace step {}: unexpected saturation step", i + 1));
            }
            steps.iter().copied().max().unwrap_or(0)
        } else {
            path_step += 1;
            if path.get(path_step - 1) != Some(&s.rule) {
                return Err(format!("trace step {}: rule {} is not path element {path_step}", i + 1, r.label));
            }
            used_steps.insert(path_step, steps);
            marks.insert(path_step, inst.len());
            path_step
        };
        let added = hom::apply(r, &s.binding, &mut inst, step_no);
        if added != s.added {
            return Err(format!("trace step {}: added atoms differ", i + 1));
        }
    }
    if path_step != path.len() {
        return Err(format!("trace applies {path_step} path steps, expected {}", path.len()));
    }
    if inst != w.trace.result {
        return Err("replayed instance differs from the recorded result".into());
    }
    if w.chain.first() != Some(&1) || w.chain.last() != Some(&path.len()) {
        return Err(format!("chain {:?} does not run from 1 to {}", w.chain, path.len()));
    }
    for e in w.chain.windows(2) {
        let (a, b) = (e[0], e[1]);
        if a >= b {
            return Err(format!("chain {:?} is not increasing", w.chain));
        }
        let direct = used_steps[&b].contains(&a);
        if !direct {
            if !w.fallback_edges.contains(&(a, b)) {
                return Err(format!("step {b} uses no atom first derived at step {a}"));
            }
            let mut snapshot = inst.clone();
            snapshot.truncate(marks[&a]);
            if !deps::depends_on_wrt(&rules.rules[path[b - 1]], &rules.rules[path[a - 1]], &snapshot) {
                return Err(format!("fallback edge {a}->{b} has no dependency"));
            }
        }
    }
    if let Some(h) = opts.min_height {
        let last = w.trace.steps.iter().rev().find(|s| !s.saturation).unwrap();
        if !last.added.iter().any(|a| a.height() >= h) {
            return Err(format!("last step adds no atom of height {h}"));
        }
    }
    Ok(())
}

/// As [`verify_witness`], additionally checking that the trace starts from the
/// witness's renaming of the path's restricted critical database.
pub fn verify_path_witness(rules: &RuleSet, path: &[usize], w: &ChainWitness, opts: &SearchOptions) -> Result<(), String> {
    let db = w.renaming.apply(&critdb::restricted_critical_db(rules, path));
    if db != w.trace.initial {
        return Err("initial instance is not the renamed critical database".into());
    }
    if !w.renaming.is_valid() {
        return Err("renaming raises an index".into());
    }
    verify_witness(rules, path, w, opts)
}

#[derive(Clone, Debug)]
pub struct KSafeOptions {
    pub k: usize,
    pub condition: Condition,
    pub search: SearchOptions,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    pub max_cycles: usize,
    pub mfa_budget: ChaseBudget,
}

impl KSafeOptions {
    pub fn new(k: usize, condition: Condition) -> KSafeOptions {
        KSafeOptions {
            k,
            condition,
            search: SearchOptions::default(),
            jobs: None,
            max_cycles: 1_000_000,
            mfa_budget: acyclicity::default_mfa_budget(),
        }
    }

    pub fn datalog_first(mut self, on: bool) -> KSafeOptions {
        self.search.datalog_first = on;
        self
    }
}

#[derive(Clone, Debug)]
pub enum NotProvenWitness {
    /// k = 0: the whole set fails the condition.
    Condition(acyclicity::Witness),
    ActiveCycle { cycle: KCycle, witness: Box<ChainWitness> },
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Terminating,
    NotProven(NotProvenWitness),
    ResourceExhausted(String),
}

impl Verdict {
    pub fn status(&self) -> &'static str {
        match self {
            Verdict::Terminating => "Terminating",
            Verdict::NotProven(_) => "NotProven",
            Verdict::ResourceExhausted(_) => "ResourceExhausted",
        }
    }

    pub fn is_terminating(&self) -> bool {
        matches!(self, Verdict::Terminating)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.status())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Stats {
    pub components: usize,
    /// Components whose rules satisfy the condition and were not searched.
    pub components_skipped: usize,
    pub cycles_enumerated: usize,
    /// Cycles with no dependency chain.
    pub cycles_pruned: usize,
    /// Cycles a Datalog-first sequence cannot follow.
    pub cycles_inadmissible: usize,
    /// Cycles whose rules satisfy the condition.
    pub cycles_accepted: usize,
    pub cycles_checked: usize,
    pub databases_searched: usize,
    pub probes: u64,
    pub peak_atoms: usize,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub verdict: Verdict,
    pub stats: Stats,
}

/// Cycles of `rules` that must be shown safe, with the counters filled in.
pub fn cycles_to_check(rules: &RuleSet, opts: &KSafeOptions, stats: &mut Stats) -> (Vec<KCycle>, bool) {
    let g = deps::dependency_graph(rules);
    let comps = acyclicity::connected_components(&g);
    stats.components = comps.len();
    let mut phi: HashMap<Vec<usize>, bool> = HashMap::new();
    let mut holds = |set: Vec<usize>| -> bool {
        *phi.entry(set.clone())
            .or_insert_with(|| acyclicity::check(opts.condition, &rules.subset(&set), &opts.mfa_budget).holds())
    };
    let searched: Vec<Vec<usize>> = comps.into_iter().filter(|c| !holds(c.clone())).collect();
    stats.components_skipped = stats.components - searched.len();
    let e = cycles::enumerate_k_cycles(opts.k, &searched, opts.max_cycles);
    stats.cycles_enumerated = e.cycles.len();
    let mut out = Vec::new();
    for c in e.cycles {
        if !cycles::is_relevant(c.rules(), &g) {
            stats.cycles_pruned += 1;
            continue;
        }
        if opts.search.datalog_first && !crate::chase::datalog_first_admissible(rules, c.rules()) {
            stats.cycles_inadmissible += 1;
            continue;
        }
        let mut set: Vec<usize> = c.rules().to_vec();
        set.sort_unstable();
        set.dedup();
        if holds(set) {
            stats.cycles_accepted += 1;
            continue;
        }
        out.push(c);
    }
    // Short cycles are cheap and usually decide the verdict.
    out.sort_by(|a, b| (a.len(), a.rules()).cmp(&(b.len(), b.rules())));
    (out, e.truncated)
}

/// Decides membership of `rules` in k-safe(Φ) for the condition's cycle
/// function. The witness of a `NotProven` verdict is the first active cycle
/// among the shortest ones, ties broken by rule indexes.
pub fn k_safe(rules: &RuleSet, opts: &KSafeOptions) -> Analysis {
    let start = Instant::now();
    let mut stats = Stats::default();
    if opts.k == 0 {
        let verdict = match acyclicity::check(opts.condition, rules, &opts.mfa_budget) {
            acyclicity::Check::Holds => Verdict::Terminating,
            acyclicity::Check::Fails(w) => Verdict::NotProven(NotProvenWitness::Condition(w)),
            acyclicity::Check::Unknown => Verdict::ResourceExhausted("MFA chase budget spent".into()),
        };
        stats.elapsed = start.elapsed();
        return Analysis { verdict, stats };
    }
    let (todo, truncated) = cycles_to_check(rules, opts, &mut stats);
    stats.cycles_checked = todo.len();

    let first_active = AtomicUsize::new(usize::MAX);
    let results: Mutex<Vec<(usize, SafetyVerdict, PathStats)>> = Mutex::new(Vec::new());
    let work = || {
        todo.par_iter().enumerate().for_each(|(i, c)| {
            if first_active.load(Ordering::Relaxed) < i {
                return;
            }
            let (v, ps) = is_path_active(rules, c.rules(), &opts.search);
            if matches!(v, SafetyVerdict::Active(_)) {
                first_active.fetch_min(i, Ordering::Relaxed);
            }
            results.lock().unwrap().push((i, v, ps));
        })
    };
    match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().expect("thread pool").install(work),
        None => work(),
    }
    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|r| r.0);
    let mut inconclusive = None;
    let mut verdict = None;
    for (i, v, ps) in results {
        stats.databases_searched += ps.databases;
        stats.probes += ps.probes;
        stats.peak_atoms = stats.peak_atoms.max(ps.peak_atoms);
        match v {
            SafetyVerdict::Safe => {}
            SafetyVerdict::Active(w) => {
                // Work past the first active cycle depends on scheduling; leave it out of the stats.
                verdict = Some(Verdict::NotProven(NotProvenWitness::ActiveCycle { cycle: todo[i].clone(), witness: w }));
                stats.cycles_checked = i + 1;
                break;
            }
            SafetyVerdict::Inconclusive(e) => {
                inconclusive.get_or_insert_with(|| format!("cycle {}: {e}", todo[i].display(rules)));
            }
        }
    }
    let verdict = verdict.unwrap_or_else(|| match (inconclusive, truncated) {
        (Some(e), _) => Verdict::ResourceExhausted(e),
        (None, true) => Verdict::ResourceExhausted(format!("more than {} cycles", opts.max_cycles)),
        (None, false) => Verdict::Terminating,
    });
    stats.elapsed = start.elapsed();
    Analysis { verdict, stats }
}

/// Rendering of an indexed or ground term list for reports.
pub fn binding_text(binding: &[Term]) -> String {
    binding.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
}
