//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the test
//! harness so the lines are always printed.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are expected to fail. The suite
//! asserts that they still fail, so a change that makes one pass is noticed.

mod common;

use std::cell::Cell;
use std::collections::HashSet;
use std::time::{Duration, Instant};

use chase_sentinel::activeness::{
    self, is_active_wrt, is_path_active, k_safe, verify_path_witness, KSafeOptions, NotProvenWitness,
    RenamingMode, SearchOptions, Verdict,
};
use chase_sentinel::acyclicity::{self, Check, Condition};
use chase_sentinel::bounded::{memb_check, BoundFunction, BoundedOptions, MembVerdict};
use chase_sentinel::chase::{self, ChaseBudget, Outcome, PathMode, Strategy as ChaseStrategy};
use chase_sentinel::critdb::{restricted_critical_db, skolem_critical_db};
use chase_sentinel::cycles::{enumerate_k_cycles, is_k_cycle, is_relevant, KCycle};
use chase_sentinel::deps::{dependency_graph, DependencyGraph};
use chase_sentinel::dlgp;
use chase_sentinel::fixtures::{self, path};
use chase_sentinel::gen::{self, GenParams, HeadShape};
use chase_sentinel::hom::{brute_force_homomorphisms, find_homomorphisms, CandidateOrder};
use chase_sentinel::model::atom;
use chase_sentinel::{Instance, RuleSet};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

const LIMIT_C1: Duration = Duration::from_secs(1);
const LIMIT_C2: Duration = Duration::from_secs(5);
const LIMIT_C4: Duration = Duration::from_millis(100);
const LIMIT_C10: Duration = Duration::from_secs(120);
const PROPERTY_CASES: u32 = 200;
const GENERATED_SMOKE_SETS: u64 = 50;

/// Criteria that cannot be met, with the reason.
const KNOWN_UNATTAINABLE: &[(u32, &str)] = &[(
    2,
    "trusted_signals at k=2 has an active 2-cycle (r3,r3,r4,r3) on its restricted critical database, \
     so it is NotProven rather than Terminating",
)];

type Res = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Res);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn labels(rs: &RuleSet, p: &[usize]) -> Vec<String> {
    p.iter().map(|&r| rs.rules[r].label.clone()).collect()
}

fn active_cycle(a: &activeness::Analysis) -> Option<(&KCycle, &activeness::ChainWitness)> {
    match &a.verdict {
        Verdict::NotProven(NotProvenWitness::ActiveCycle { cycle, witness }) => Some((cycle, witness)),
        _ => None,
    }
}

fn typeb() -> Instance {
    Instance::from_atoms([atom("typeB", &["t", "r"])])
}

fn c1_signals() -> Res {
    let rs = fixtures::signals();
    let (a1, t1) = timed(|| k_safe(&rs, &KSafeOptions::new(1, Condition::Wa)));
    let (a0, t0) = timed(|| k_safe(&rs, &KSafeOptions::new(0, Condition::Wa)));
    ensure!(a1.verdict.is_terminating(), "k=1 gave {}", a1.verdict.status());
    ensure!(matches!(a0.verdict, Verdict::NotProven(_)), "k=0 gave {}", a0.verdict.status());
    ensure!(t1 + t0 < LIMIT_C1, "took {:?}", t1 + t0);
    Ok(format!("k=1 Terminating, k=0 NotProven in {:?}", t1 + t0))
}

fn c2_trusted_signals() -> Res {
    let rs = fixtures::trusted_signals();
    let start = Instant::now();
    let a = k_safe(&rs, &KSafeOptions::new(1, Condition::Wa));
    let (cycle, w) = active_cycle(&a).ok_or_else(|| format!("k=1 gave {}", a.verdict.status()))?;
    verify_path_witness(&rs, cycle.rules(), w, &SearchOptions::default())?;
    let derivation = ["r3", "r4", "r3", "r4"];
    let applied: Vec<&str> = w.trace.path_labels(&rs);
    ensure!(derivation.starts_with(&applied), "witness applies {applied:?}");
    let full = path(&rs, &derivation);
    chase::run_path(&typeb(), &rs, &full, PathMode::Skolem, CandidateOrder::Newest)
        .map_err(|e| format!("skolem derivation stops at step {}", e.step))?;

    let mut k2 = Vec::new();
    for c in [Condition::Wa, Condition::Agrd] {
        let a = k_safe(&rs, &KSafeOptions::new(2, c));
        let detail = active_cycle(&a).map(|(cy, _)| cy.display(&rs).to_string()).unwrap_or_default();
        k2.push((c, a.verdict.is_terminating(), format!("{c}: {} {detail}", a.verdict.status())));
    }
    let elapsed = start.elapsed();
    let report: Vec<String> = k2.iter().map(|x| x.2.clone()).collect();
    ensure!(k2.iter().all(|x| x.1), "k=1 part holds ({applied:?} replays); k=2 gave {}", report.join(", "));
    ensure!(elapsed < LIMIT_C2, "took {elapsed:?}");
    Ok(format!("k=1 witness {applied:?}, k=2 Terminating in {elapsed:?}"))
}

fn c3_successor() -> Res {
    let rs = fixtures::successor();
    for k in 1..=3 {
        let a = k_safe(&rs, &KSafeOptions::new(k, Condition::Wa));
        let (cycle, w) = active_cycle(&a).ok_or_else(|| format!("k={k} gave {}", a.verdict.status()))?;
        verify_path_witness(&rs, cycle.rules(), w, &SearchOptions::default())?;
        if k == 1 {
            ensure!(cycle.rules() == [0, 0], "k=1 witness cycle {}", cycle.display(&rs));
            ensure!(w.trace.initial == restricted_critical_db(&rs, &[0, 0]), "witness does not start from I^(r,r)");
        }
    }
    let db = skolem_critical_db(&rs);
    ensure!(db.to_string_set() == ["e(star0,star0)"], "skolem critical db {:?}", db.to_string_set());
    let t = chase::restricted_chase(&db, &rs, &ChaseBudget::steps(100), ChaseStrategy::NewestFirst);
    ensure!(t.steps.is_empty() && t.outcome == Outcome::Saturated, "restricted chase took {} steps", t.steps.len());
    Ok("k=1..3 NotProven, witness replays from I^(r,r), critical db saturated at 0 steps".into())
}

fn c4_guarded_successor() -> Res {
    let rs = fixtures::guarded_successor();
    let g = dependency_graph(&rs);
    ensure!(!is_relevant(&[0, 0], &g), "(r,r) is relevant");
    ensure!(acyclicity::is_agrd(&rs).holds(), "{{r}} is not aGRD");
    let (a, t) = timed(|| k_safe(&rs, &KSafeOptions::new(1, Condition::Agrd)));
    ensure!(a.verdict.is_terminating(), "k=1 gave {}", a.verdict.status());
    ensure!(t < LIMIT_C4, "took {t:?}");
    Ok(format!("(r,r) pruned, aGRD, Terminating in {t:?}"))
}

fn c5_rotation() -> Res {
    let rs = fixtures::rotation();
    let o = SearchOptions::default();
    let p1 = path(&rs, &["r1", "r2", "r3"]);
    let p2 = path(&rs, &["r3", "r2", "r1"]);
    let v1 = is_active_wrt(&rs, &p1, &restricted_critical_db(&rs, &p1), &o);
    ensure!(v1.is_safe(), "pi1 not safe: {v1:?}");
    let v2 = is_active_wrt(&rs, &p2, &restricted_critical_db(&rs, &p2), &o);
    let w = v2.witness().ok_or("pi2 is not active")?;
    activeness::verify_witness(&rs, &p2, w, &o)?;
    let cyc = path(&rs, &["r3", "r2", "r1", "r3"]);
    let (v, _) = is_path_active(&rs, &cyc, &o);
    let w = v.witness().ok_or("(r3,r2,r1,r3) is not active")?;
    verify_path_witness(&rs, &cyc, w, &o)?;
    let a = k_safe(&rs, &KSafeOptions::new(1, Condition::Wa));
    ensure!(matches!(a.verdict, Verdict::NotProven(_)), "k=1 gave {}", a.verdict.status());
    Ok("pi1 Safe, pi2 Active, (r3,r2,r1,r3) Active, k=1 NotProven".into())
}

fn c6_renaming() -> Res {
    let rs = fixtures::renaming();
    let o = SearchOptions::default();
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for p in perms {
        let cyc = [p[0], p[1], p[2], p[0]];
        let v = is_active_wrt(&rs, &cyc, &restricted_critical_db(&rs, &cyc), &o);
        ensure!(v.is_safe(), "{:?} active on its plain critical db", labels(&rs, &cyc));
    }
    let cyc = path(&rs, &["r3", "r2", "r1", "r3"]);
    let (v, _) = is_path_active(&rs, &cyc, &o);
    let w = v.witness().ok_or("(r3,r2,r1,r3) not active under renamings")?;
    verify_path_witness(&rs, &cyc, w, &o)?;
    let rn = w.renaming.describe();
    for m in ["x__3->x__1", "y__3->y__1", "z__3->z__1"] {
        ensure!(rn.contains(m), "renaming {rn} lacks {m}");
    }
    let a = k_safe(&rs, &KSafeOptions::new(1, Condition::Wa));
    let (_, w) = active_cycle(&a).ok_or_else(|| format!("k=1 gave {}", a.verdict.status()))?;
    ensure!(!w.renaming.is_identity(), "k=1 witness needs no renaming");
    let mut off = KSafeOptions::new(1, Condition::Wa);
    off.search.renaming = RenamingMode::Off;
    ensure!(k_safe(&rs, &off).verdict.is_terminating(), "without renamings the set is not accepted");
    Ok(format!("plain DBs Safe, active via {rn}, k=1 NotProven"))
}

fn c7_lab_access() -> Res {
    let rs = fixtures::lab_access();
    let db = Instance::from_atoms([atom("hasKey", &["a", "b"])]);
    let p = path(&rs, &["r2", "r3", "r2"]);
    let v = is_active_wrt(&rs, &p, &db, &SearchOptions::default());
    ensure!(v.is_safe(), "(r2,r3,r2) not safe: {v:?}");
    let keys = rs.subset(&path(&rs, &["r2", "r3"]));
    let t = chase::skolem_chase(&db, &keys, &ChaseBudget::steps(10_000), true);
    ensure!(matches!(t.outcome, Outcome::CyclicTermFound(_)), "skolem chase: {}", chase::describe(&t.outcome));
    let grants = rs.subset(&path(&rs, &["r4", "r5"]));
    let t = chase::skolem_chase(&db, &grants, &ChaseBudget::steps(10_000), false);
    ensure!(t.outcome == Outcome::Saturated && t.applications() == 2, "{{r4,r5}}: {} after {}", chase::describe(&t.outcome), t.applications());
    Ok("(r2,r3,r2) Safe, cyclic term found, {r4,r5} saturates in 2".into())
}

fn c8_fairness() -> Res {
    let rs = fixtures::fairness();
    let df = k_safe(&rs, &KSafeOptions::new(1, Condition::Wa).datalog_first(true));
    let plain = k_safe(&rs, &KSafeOptions::new(1, Condition::Wa));
    ensure!(df.verdict.is_terminating(), "datalog-first gave {}", df.verdict.status());
    ensure!(matches!(plain.verdict, Verdict::NotProven(_)), "plain gave {}", plain.verdict.status());
    Ok("datalog-first Terminating, plain NotProven".into())
}

fn c9_memb_check() -> Res {
    let rs = fixtures::signals();
    let opts = BoundedOptions::default();
    let r3 = memb_check(&rs, BoundFunction::Constant(3), &opts);
    ensure!(matches!(r3.verdict, MembVerdict::Bounded { .. }), "delta=3 gave {}", r3.letter());
    let r2 = memb_check(&rs, BoundFunction::Constant(2), &opts);
    let MembVerdict::Unbounded { path: p, witness } = &r2.verdict else {
        return Err(format!("delta=2 gave {}", r2.letter()));
    };
    ensure!(witness.trace.result.height() == 3, "witness height {}", witness.trace.result.height());
    let search = SearchOptions { min_height: Some(3), ..opts.search.clone() };
    verify_path_witness(&rs, p, witness, &search)?;
    let datalog = dlgp::parse("[d1] q(X,Y) :- p(X,Y).\n[d2] p(Y,X) :- q(X,Y).").unwrap().rules;
    let rd = memb_check(&datalog, BoundFunction::Constant(1), &opts);
    ensure!(matches!(rd.verdict, MembVerdict::Bounded { phase: 1 }), "datalog gave {:?}", rd.verdict);
    Ok("delta=3 T, delta=2 F with height-3 witness, Datalog T in phase 1".into())
}

fn run_suite<S: Strategy>(
    timings: &mut Vec<String>,
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let config = Config { cases: PROPERTY_CASES, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    let t = Instant::now();
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))?;
    timings.push(format!("{name} {:.1}s", t.elapsed().as_secs_f64()));
    Ok(())
}

fn arb_hom_case() -> impl Strategy<Value = (Vec<chase_sentinel::Atom>, Vec<chase_sentinel::Atom>)> {
    let fact = (any::<bool>(), 0usize..4, 0usize..4).prop_map(|(two, x, y)| {
        let c = ["a", "b", "c", "d"];
        if two {
            atom("e", &[c[x], c[y]])
        } else {
            atom("u", &[c[x]])
        }
    });
    let pat = (any::<bool>(), 0usize..4, 0usize..4).prop_map(|(two, x, y)| {
        let v = ["X", "Y", "Z", "a"];
        if two {
            atom("e", &[v[x], v[y]])
        } else {
            atom("u", &[v[x]])
        }
    });
    (prop::collection::vec(pat, 1..4), prop::collection::vec(fact, 0..=30))
}

fn brute_force_cycles(k: usize, comp: &[usize]) -> HashSet<KCycle> {
    let n = comp.len();
    let mut out = HashSet::new();
    for len in 2..=(k + 1) * n {
        for mut code in 0..n.pow(len as u32) {
            let mut p = Vec::with_capacity(len);
            for _ in 0..len {
                p.push(comp[code % n]);
                code /= n;
            }
            if is_k_cycle(&p, k) {
                out.insert(KCycle(p));
            }
        }
    }
    out
}

fn arb_document() -> impl Strategy<Value = String> {
    let term = prop::sample::select(vec!["a", "b", "c1", "X", "Y", "Z"]);
    let atom = (prop::sample::select(vec![("p", 1usize), ("q", 2), ("s", 3)]), prop::collection::vec(term, 3))
        .prop_map(|((p, n), ts)| format!("{p}({})", ts[..n].join(",")));
    let list = prop::collection::vec(atom, 1..4).prop_map(|v| v.join(", "));
    let stmt = (list.clone(), prop::option::of(list)).prop_map(|(h, b)| match b {
        Some(b) => format!("{h} :- {b}."),
        None => format!("{}.", h.replace(['X', 'Y', 'Z'], "k")),
    });
    prop::collection::vec(stmt, 0..6).prop_map(|v| v.join("\n"))
}

fn terminating(rs: &RuleSet, k: usize, c: Condition) -> Option<bool> {
    match k_safe(rs, &common::quick(k, c)).verdict {
        Verdict::Terminating => Some(true),
        Verdict::NotProven(_) => Some(false),
        Verdict::ResourceExhausted(_) => None,
    }
}

fn c10_properties() -> Res {
    let start = Instant::now();
    let mut t = Vec::new();
    run_suite(&mut t, "homomorphisms", arb_hom_case(), |(conj, facts)| {
        let inst = Instance::from_atoms(facts);
        let found = find_homomorphisms(&conj, &inst);
        let set: HashSet<_> = found.iter().cloned().collect();
        prop_assert_eq!(set.len(), found.len());
        prop_assert_eq!(set, brute_force_homomorphisms(&conj, &inst));
        Ok(())
    })?;
    run_suite(&mut t, "acyclicity inclusions", any::<u64>(), |seed| {
        let rs = common::small_rule_set(seed);
        let budget = ChaseBudget::steps(5_000).with_atoms(5_000);
        let wa = acyclicity::is_wa(&rs).holds();
        let ja = acyclicity::is_ja(&rs).holds();
        prop_assert!(!wa || ja);
        prop_assert!(!ja || !matches!(acyclicity::is_mfa(&rs, &budget), Check::Fails(_)));
        Ok(())
    })?;
    let implications = Cell::new(0);
    run_suite(&mut t, "k monotonicity", any::<u64>(), |seed| {
        let rs = common::tiny_rule_set(seed);
        for c in [Condition::Wa, Condition::Agrd] {
            if terminating(&rs, 1, c) == Some(true) {
                implications.set(implications.get() + 1);
                prop_assert_ne!(terminating(&rs, 2, c), Some(false), "{} {:?}", c, rs.rules);
            }
        }
        Ok(())
    })?;
    run_suite(&mut t, "condition monotonicity", any::<u64>(), |seed| {
        let rs = common::small_rule_set(seed);
        let wa = terminating(&rs, 1, Condition::Wa);
        let ja = terminating(&rs, 1, Condition::Ja);
        let mfa = terminating(&rs, 1, Condition::Mfa);
        prop_assert!(wa != Some(true) || ja != Some(false));
        prop_assert!(ja != Some(true) || mfa != Some(false));
        Ok(())
    })?;
    run_suite(
        &mut t,
        "k-cycle enumeration",
        (1usize..=3, prop::collection::vec((0usize..3, 0usize..3), 0..9), 1usize..=2),
        |(nodes, edges, k)| {
            let edges = edges.into_iter().filter(|(a, b)| *a < nodes && *b < nodes).collect();
            let g = DependencyGraph::from_edges(nodes, edges);
            let comps = acyclicity::connected_components(&g);
            let got: HashSet<KCycle> = enumerate_k_cycles(k, &comps, usize::MAX).cycles.into_iter().collect();
            let want: HashSet<KCycle> = comps.iter().flat_map(|c| brute_force_cycles(k, c)).collect();
            prop_assert_eq!(got, want);
            Ok(())
        },
    )?;
    run_suite(&mut t, "parse and serialize", arb_document(), |text| {
        let doc = dlgp::parse(&text).unwrap();
        let again = dlgp::parse(&dlgp::serialize(&doc)).unwrap();
        prop_assert!(doc.same_content(&again));
        Ok(())
    })?;
    let witnesses = Cell::new(0);
    run_suite(&mut t, "witness replay", any::<u64>(), |seed| {
        let rs = common::small_rule_set(seed);
        let a = k_safe(&rs, &common::quick(1, Condition::Wa));
        if let Some((cycle, w)) = active_cycle(&a) {
            witnesses.set(witnesses.get() + 1);
            let r = verify_path_witness(&rs, cycle.rules(), w, &common::quick(1, Condition::Wa).search);
            prop_assert!(r.is_ok(), "{:?}", r);
        }
        Ok(())
    })?;
    run_suite(&mut t, "generator post-conditions", (any::<u64>(), any::<bool>(), 0usize..12), |(seed, chained, count)| {
        let shape = if chained { HeadShape::Chained } else { HeadShape::Discrete };
        let p = GenParams::preset(shape, count, seed);
        let rs = gen::generate(&p).unwrap();
        prop_assert_eq!(gen::check_postconditions(&p, &rs), Ok(()));
        Ok(())
    })?;
    let elapsed = start.elapsed();
    ensure!(elapsed < LIMIT_C10, "suites took {elapsed:?} ({})", t.join(", "));
    Ok(format!(
        "8 suites x {PROPERTY_CASES} cases in {elapsed:?} ({}); {} k-implications and {} witnesses checked",
        t.join(", "),
        implications.get(),
        witnesses.get()
    ))
}

fn c11_soundness_smoke() -> Res {
    let mut sets: Vec<(String, RuleSet, usize)> = Vec::new();
    for (name, text) in fixtures::ALL {
        let rs = dlgp::parse(text).unwrap().rules;
        if let Some(k) = (1..=2).find(|&k| terminating(&rs, k, Condition::Wa) == Some(true)) {
            sets.push((name.to_string(), rs, k));
        }
    }
    let regressions = sets.len();
    let mut seed = 0u64;
    let mut generated = 0;
    while generated < GENERATED_SMOKE_SETS {
        seed += 1;
        ensure!(seed < 10_000, "only {generated} generated sets were accepted");
        let rs = common::small_rule_set(seed);
        if terminating(&rs, 1, Condition::Wa) == Some(true) {
            sets.push((format!("generated #{seed}"), rs, 1));
            generated += 1;
        }
    }
    for (i, (name, rs, k)) in sets.iter().enumerate() {
        common::smoke(rs, *k, 5, 1000 + i as u64).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(format!("{regressions} regressions and {generated} generated sets saturate from 5 databases each"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "signals k-safe under WA", c1_signals),
        (2, "trusted_signals witness and level 2", c2_trusted_signals),
        (3, "successor rule", c3_successor),
        (4, "guarded successor pruning", c4_guarded_successor),
        (5, "rotation activeness", c5_rotation),
        (6, "renaming regression", c6_renaming),
        (7, "lab access rules", c7_lab_access),
        (8, "Datalog-first chase", c8_fairness),
        (9, "height-bounded membership", c9_memb_check),
        (10, "property suites", c10_properties),
        (11, "soundness smoke", c11_soundness_smoke),
    ];
    let mut unexpected = Vec::new();
    for (id, name, f) in criteria {
        let result = f();
        let known = KNOWN_UNATTAINABLE.iter().find(|(k, _)| *k == id);
        match (&result, known) {
            (Ok(msg), None) => println!("criterion {id:>2} PASS  {name}: {msg}"),
            (Err(msg), None) => {
                println!("criterion {id:>2} FAIL  {name}: {msg}");
                unexpected.push(id);
            }
            (Err(msg), Some((_, why))) => println!("criterion {id:>2} FAIL  {name}: {msg} [known unattainable: {why}]"),
            (Ok(msg), Some(_)) => {
                println!("criterion {id:>2} PASS  {name}: {msg} [listed as unattainable; update the list]");
                unexpected.push(id);
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("criteria with unexpected results: {unexpected:?}");
        std::process::exit(1);
    }
}
