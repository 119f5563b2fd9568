//! Homomorphism search, triggers and trigger application.
//!
//! The matcher binds pattern variables to numbered slots and picks, at every
//! level, the unmatched atom with the fewest index candidates. Callers get the
//! binding and the ids of the matched instance atoms, and stop the search by
//! returning `ControlFlow::Break`.

use std::collections::{BTreeMap, HashSet};
use std::ops::ControlFlow;
use std::time::{Duration, Instant};

use crate::model::{Atom, Instance, Rule, Sym, Term};

/// Work budget shared by a family of searches.
#[derive(Clone, Debug)]
pub struct Meter {
    probes: u64,
    max_probes: u64,
    deadline: Option<Instant>,
    exhausted: bool,
}

impl Meter {
    pub fn new(max_probes: u64, wall_clock: Option<Duration>) -> Meter {
        Meter { probes: 0, max_probes, deadline: wall_clock.map(|d| Instant::now() + d), exhausted: false }
    }

    pub fn unlimited() -> Meter {
        Meter::new(u64::MAX, None)
    }

    /// Counts one unit of work; false once the budget is spent.
    #[inline]
    pub fn tick(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        self.probes += 1;
        if self.probes > self.max_probes {
            self.exhausted = true;
        } else if self.probes & 0x3ff == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.exhausted = true;
                }
            }
        }
        !self.exhausted
    }

    pub fn exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn probes(&self) -> u64 {
        self.probes
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CandidateOrder {
    /// Instance insertion order.
    #[default]
    Oldest,
    /// Reverse insertion order, so derived atoms are tried before database atoms.
    Newest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchEnd {
    Completed,
    Stopped,
    OutOfBudget,
}

#[derive(Clone, Debug)]
enum Arg {
    Slot(usize),
    Fixed(Term),
}

/// Callback for each match: values of the pattern's slots and the ids of the
/// matched atoms.
pub type OnMatch<'a> = dyn FnMut(&[Term], &[u32]) -> ControlFlow<()> + 'a;

/// Universal-variable values and matched atom ids.
pub type BodyMatch = (Vec<Term>, Vec<u32>);

/// Conjunction compiled against a list of variables.
#[derive(Clone, Debug)]
pub struct Pattern {
    atoms: Vec<(Sym, Vec<Arg>)>,
    slots: usize,
}

impl Pattern {
    /// Variables in `vars` become slots in that order; any other variable in
    /// `conj` gets a further slot.
    pub fn compile(conj: &[Atom], vars: &[Sym]) -> (Pattern, Vec<Sym>) {
        let mut all: Vec<Sym> = vars.to_vec();
        let atoms = conj
            .iter()
            .map(|a| {
                let args = a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Variable(v) => Arg::Slot(match all.iter().position(|x| x == v) {
                            Some(i) => i,
                            None => {
                                all.push(*v);
                                all.len() - 1
                            }
                        }),
                        t => Arg::Fixed(t.clone()),
                    })
                    .collect();
                (a.pred, args)
            })
            .collect();
        (Pattern { atoms, slots: all.len() }, all)
    }

    pub fn for_rule_body(rule: &Rule) -> Pattern {
        Pattern::compile(&rule.body, &rule.universals).0
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Enumerates all extensions of `init` mapping the pattern into `inst`.
    /// `f` receives the full binding and the matched atom id per pattern atom.
    pub fn search(
        &self,
        inst: &Instance,
        init: &[Option<Term>],
        order: CandidateOrder,
        meter: &mut Meter,
        f: &mut OnMatch<'_>,
    ) -> SearchEnd {
        debug_assert_eq!(init.len(), self.slots);
        let mut st = State {
            pat: self,
            inst,
            order,
            binding: init.to_vec(),
            done: vec![false; self.atoms.len()],
            matched: vec![0; self.atoms.len()],
            meter,
            out: Vec::with_capacity(self.slots),
        };
        match st.go(self.atoms.len(), f) {
            ControlFlow::Continue(()) => SearchEnd::Completed,
            ControlFlow::Break(Halt::Stop) => SearchEnd::Stopped,
            ControlFlow::Break(Halt::Budget) => SearchEnd::OutOfBudget,
        }
    }
}

enum Halt {
    Stop,
    Budget,
}

struct State<'a, 'm> {
    pat: &'a Pattern,
    inst: &'a Instance,
    order: CandidateOrder,
    binding: Vec<Option<Term>>,
    done: Vec<bool>,
    matched: Vec<u32>,
    meter: &'m mut Meter,
    out: Vec<Term>,
}

fn candidates<'i>(inst: &'i Instance, pat: &Pattern, binding: &[Option<Term>], ai: usize) -> &'i [u32] {
    let (pred, args) = &pat.atoms[ai];
    let mut best = inst.with_pred(*pred);
    for (i, a) in args.iter().enumerate() {
        let t = match a {
            Arg::Fixed(t) => t,
            Arg::Slot(s) => match &binding[*s] {
                Some(t) => t,
                None => continue,
            },
        };
        let c = inst.with_arg(*pred, i, t);
        if c.len() < best.len() {
            best = c;
            if best.is_empty() {
                break;
            }
        }
    }
    best
}

impl State<'_, '_> {
    fn go(&mut self, left: usize, f: &mut OnMatch<'_>) -> ControlFlow<Halt> {
        if left == 0 {
            self.out.clear();
            for b in &self.binding {
                self.out.push(b.clone().expect("every pattern slot is bound after a full match"));
            }
            return match f(&self.out, &self.matched) {
                ControlFlow::Continue(()) => ControlFlow::Continue(()),
                ControlFlow::Break(()) => ControlFlow::Break(Halt::Stop),
            };
        }
        let mut pick = usize::MAX;
        let mut cands: &[u32] = &[];
        for ai in 0..self.pat.atoms.len() {
            if self.done[ai] {
                continue;
            }
            let c = candidates(self.inst, self.pat, &self.binding, ai);
            if pick == usize::MAX || c.len() < cands.len() {
                pick = ai;
                cands = c;
                if c.is_empty() {
                    return ControlFlow::Continue(());
                }
            }
        }
        self.done[pick] = true;
        let n = cands.len();
        let mut bound_here: Vec<usize> = Vec::new();
        for k in 0..n {
            let id = match self.order {
                CandidateOrder::Oldest => cands[k],
                CandidateOrder::Newest => cands[n - 1 - k],
            };
            if !self.meter.tick() {
                self.done[pick] = false;
                return ControlFlow::Break(Halt::Budget);
            }
            let (atom, _) = self.inst.get(id);
            let (_, args) = &self.pat.atoms[pick];
            let mut ok = true;
            for (a, t) in args.iter().zip(&atom.args) {
                match a {
                    Arg::Fixed(x) => {
                        if x != t {
                            ok = false;
                            break;
                        }
                    }
                    Arg::Slot(s) => match &self.binding[*s] {
                        Some(x) => {
                            if x != t {
                                ok = false;
                                break;
                            }
                        }
                        None => {
                            self.binding[*s] = Some(t.clone());
                            bound_here.push(*s);
                        }
                    },
                }
            }
            if ok {
                self.matched[pick] = id;
                let r = self.go(left - 1, f);
                if r.is_break() {
                    for s in bound_here.drain(..) {
                        self.binding[s] = None;
                    }
                    self.done[pick] = false;
                    return r;
                }
            }
            for s in bound_here.drain(..) {
                self.binding[s] = None;
            }
        }
        self.done[pick] = false;
        ControlFlow::Continue(())
    }
}

/// Substitution from variables to ground terms.
pub type Substitution = BTreeMap<Sym, Term>;

/// All homomorphisms from `conj` into `inst`, in search order.
pub fn find_homomorphisms(conj: &[Atom], inst: &Instance) -> Vec<Substitution> {
    let (pat, vars) = Pattern::compile(conj, &[]);
    let mut out = Vec::new();
    let init = vec![None; pat.slots()];
    pat.search(inst, &init, CandidateOrder::Oldest, &mut Meter::unlimited(), &mut |b, _| {
        out.push(vars.iter().copied().zip(b.iter().cloned()).collect());
        ControlFlow::Continue(())
    });
    out
}

/// A rule with a binding of its universal variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Trigger {
    pub rule: usize,
    pub binding: Vec<Term>,
}

impl Trigger {
    pub fn substitution(&self, rule: &Rule) -> Substitution {
        rule.universals.iter().copied().zip(self.binding.iter().cloned()).collect()
    }
}

/// All body matches of `rule`, with matched atom ids.
pub fn body_matches(rule: &Rule, inst: &Instance, order: CandidateOrder, meter: &mut Meter) -> (Vec<BodyMatch>, SearchEnd) {
    let pat = Pattern::for_rule_body(rule);
    let mut out = Vec::new();
    let end = pat.search(inst, &vec![None; pat.slots()], order, meter, &mut |b, m| {
        out.push((b.to_vec(), m.to_vec()));
        ControlFlow::Continue(())
    });
    (out, end)
}

/// True iff no extension of `binding` to the existentials maps the head into
/// `inst`. `None` when the meter ran out first.
pub fn is_active(rule: &Rule, binding: &[Term], inst: &Instance, meter: &mut Meter) -> Option<bool> {
    match head_check(rule, binding, inst, meter) {
        HeadCheck::Active => Some(true),
        HeadCheck::Satisfied(_) => Some(false),
        HeadCheck::OutOfBudget => None,
    }
}

pub enum HeadCheck {
    Active,
    /// The head already maps into the instance; these are the atoms it maps to.
    Satisfied(Vec<Atom>),
    OutOfBudget,
}

pub fn head_check(rule: &Rule, binding: &[Term], inst: &Instance, meter: &mut Meter) -> HeadCheck {
    let head: Vec<Atom> = rule.head.iter().map(|a| crate::model::substitute(a, &rule.universals, binding)).collect();
    if rule.existentials.is_empty() {
        return if head.iter().all(|a| inst.contains(a)) { HeadCheck::Satisfied(head) } else { HeadCheck::Active };
    }
    let (pat, _) = Pattern::compile(&head, &rule.existentials);
    let mut found = None;
    let end = pat.search(inst, &vec![None; pat.slots()], CandidateOrder::Oldest, meter, &mut |_, ids| {
        found = Some(ids.iter().map(|&i| inst.get(i).0.clone()).collect());
        ControlFlow::Break(())
    });
    match (end, found) {
        (SearchEnd::OutOfBudget, _) => HeadCheck::OutOfBudget,
        (_, Some(image)) => HeadCheck::Satisfied(image),
        (_, None) => HeadCheck::Active,
    }
}

/// Convenience form of [`is_active`] without a budget.
pub fn is_active_trigger(rules: &[Rule], t: &Trigger, inst: &Instance) -> bool {
    is_active(&rules[t.rule], &t.binding, inst, &mut Meter::unlimited()).unwrap()
}

/// Adds the skolemized head; returns the atoms that were new. Existing atoms
/// keep their step.
pub fn apply(rule: &Rule, binding: &[Term], inst: &mut Instance, step: usize) -> Vec<Atom> {
    let mut added = Vec::new();
    for a in rule.instantiate_head(binding) {
        if inst.insert(a.clone(), step) {
            added.push(a);
        }
    }
    added
}

/// Brute-force reference: every assignment of the conjunction's variables to
/// instance terms whose image lies in the instance.
pub fn brute_force_homomorphisms(conj: &[Atom], inst: &Instance) -> HashSet<Substitution> {
    let mut vars: Vec<Sym> = Vec::new();
    for a in conj {
        for v in a.vars() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    let terms = inst.terms();
    let mut out = HashSet::new();
    if terms.is_empty() && !vars.is_empty() {
        return out;
    }
    let mut idx = vec![0usize; vars.len()];
    loop {
        let values: Vec<Term> = idx.iter().map(|&i| terms[i].clone()).collect();
        if conj.iter().all(|a| inst.contains(&crate::model::substitute(a, &vars, &values))) {
            out.insert(vars.iter().copied().zip(values).collect());
        }
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return out;
            }
            idx[pos] += 1;
            if idx[pos] < terms.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dlgp;
    use crate::model::atom;
    use proptest::prelude::*;

    fn sub(pairs: &[(&str, &str)]) -> Substitution {
        pairs.iter().map(|(v, c)| (Sym::new(v), Term::constant(c))).collect()
    }

    fn triangle() -> (Vec<Atom>, Instance) {
        let body = vec![atom("p", &["X", "Y"]), atom("p", &["Y", "Z"]), atom("p", &["Z", "X"])];
        let inst = Instance::from_atoms([
            atom("p", &["a", "b"]),
            atom("p", &["b", "c"]),
            atom("p", &["c", "a"]),
            atom("q", &["a", "b"]),
        ]);
        (body, inst)
    }

    #[test]
    fn triangle_homomorphisms() {
        let (body, inst) = triangle();
        let found: HashSet<_> = find_homomorphisms(&body, &inst).into_iter().collect();
        let want: HashSet<_> = [
            sub(&[("X", "a"), ("Y", "b"), ("Z", "c")]),
            sub(&[("X", "b"), ("Y", "c"), ("Z", "a")]),
            sub(&[("X", "c"), ("Y", "a"), ("Z", "b")]),
        ]
        .into_iter()
        .collect();
        assert_eq!(found, want);
    }

    #[test]
    fn small_cases() {
        let inst = Instance::from_atoms([atom("p", &["a"])]);
        assert_eq!(find_homomorphisms(&[atom("p", &["X"])], &inst), vec![sub(&[("X", "a")])]);
        let inst = Instance::from_atoms([atom("t", &["a", "b"])]);
        assert!(find_homomorphisms(&[atom("t", &["X", "X"])], &inst).is_empty());
    }

    #[test]
    fn activeness_of_triangle_triggers() {
        let doc = dlgp::parse("q(X,W) :- p(X,Y), p(Y,Z), p(Z,X).").unwrap();
        let rules = &doc.rules.rules;
        let (_, inst) = triangle();
        let r = &rules[0];
        let bind = |x: &str, y: &str, z: &str| -> Vec<Term> {
            r.universals
                .iter()
                .map(|v| Term::constant(match crate::model::base_name(*v) {
                    "X" => x,
                    "Y" => y,
                    _ => z,
                }))
                .collect()
        };
        let t1 = Trigger { rule: 0, binding: bind("a", "b", "c") };
        let t2 = Trigger { rule: 0, binding: bind("c", "a", "b") };
        assert!(!is_active_trigger(rules, &t1, &inst));
        assert!(is_active_trigger(rules, &t2, &inst));
    }

    #[test]
    fn satisfied_datalog_head_is_inactive() {
        let doc = dlgp::parse("q(X) :- p(X).").unwrap();
        let inst = Instance::from_atoms([atom("p", &["a"]), atom("q", &["a"])]);
        let t = Trigger { rule: 0, binding: vec![Term::constant("a")] };
        assert!(!is_active_trigger(&doc.rules.rules, &t, &inst));
    }

    #[test]
    fn apply_skolem_head() {
        let rs = crate::fixtures::signals();
        let mut inst = Instance::from_atoms([atom("typeB", &["t", "r"])]);
        let added = apply(&rs.rules[0], &[Term::constant("t"), Term::constant("r")], &mut inst, 1);
        let fu = Term::skolem(Sym::new("f_r1_u"), vec![Term::constant("t")]);
        let t = Term::constant("t");
        assert_eq!(
            added,
            vec![Atom::new("typeA", vec![t.clone(), fu.clone()]), Atom::new("typeA", vec![fu, t])]
        );
        let again = apply(&rs.rules[0], &[Term::constant("t"), Term::constant("r")], &mut inst, 2);
        assert!(again.is_empty());
        assert_eq!(inst.len(), 3);
    }

    #[test]
    fn apply_lab_access_third_step() {
        let rs = crate::fixtures::lab_access();
        let (r2, r3) = (&rs.rules[1], &rs.rules[2]);
        let (a, b) = (Term::constant("a"), Term::constant("b"));
        let mut inst = Instance::from_atoms([atom("hasKey", &["a", "b"])]);
        apply(r2, &[a.clone(), b.clone()], &mut inst, 1);
        let fu = Term::skolem(Sym::new("f_r2_u"), vec![a.clone(), b.clone()]);
        apply(r3, &[a.clone(), fu.clone()], &mut inst, 2);
        let fv = Term::skolem(Sym::new("f_r3_v"), vec![a.clone(), fu.clone()]);
        assert!(inst.contains(&Atom::new("hasKey", vec![a.clone(), fv.clone()])));
        let added = apply(r2, &[a.clone(), fv.clone()], &mut inst, 3);
        let fu2 = Term::skolem(Sym::new("f_r2_u"), vec![a.clone(), fv.clone()]);
        assert_eq!(
            added,
            vec![Atom::new("enters", vec![a, fu2.clone()]), Atom::new("keyOpens", vec![fv, fu2.clone()])]
        );
        assert_eq!(fu2.height(), 4);
        assert!(fu2.is_cyclic());
        assert_eq!(inst.step_of(&added[0]), Some(3));
    }

    #[test]
    fn meter_stops_search() {
        let (body, inst) = triangle();
        let (pat, _) = Pattern::compile(&body, &[]);
        let mut meter = Meter::new(2, None);
        let end = pat.search(&inst, &vec![None; pat.slots()], CandidateOrder::Oldest, &mut meter, &mut |_, _| {
            ControlFlow::Continue(())
        });
        assert_eq!(end, SearchEnd::OutOfBudget);
    }

    fn arb_case() -> impl Strategy<Value = (Vec<Atom>, Vec<Atom>)> {
        let c = prop::sample::select(vec!["a", "b", "c", "d"]);
        let v = prop::sample::select(vec!["X", "Y", "Z", "a"]);
        let fact = (prop::bool::ANY, c.clone(), c).prop_map(|(two, x, y)| {
            if two {
                atom("e", &[x, y])
            } else {
                atom("u", &[x])
            }
        });
        let pat = (prop::bool::ANY, v.clone(), v).prop_map(|(two, x, y)| {
            if two {
                atom("e", &[x, y])
            } else {
                atom("u", &[x])
            }
        });
        (prop::collection::vec(pat, 1..4), prop::collection::vec(fact, 0..30))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn matches_brute_force((conj, facts) in arb_case()) {
            let inst = Instance::from_atoms(facts);
            let found = find_homomorphisms(&conj, &inst);
            let set: HashSet<_> = found.iter().cloned().collect();
            prop_assert_eq!(set.len(), found.len(), "duplicates");
            prop_assert_eq!(set, brute_force_homomorphisms(&conj, &inst));
        }

        #[test]
        fn inactive_triggers_stay_inactive((conj, facts) in arb_case(), extra in prop::collection::vec(("[abcd]", "[abcd]"), 0..5)) {
            let doc = dlgp::parse("e(Y,Z), u(Z) :- e(X,Y).").unwrap();
            let r = &doc.rules.rules[0];
            let _ = conj;
            let small = Instance::from_atoms(facts.clone());
            let mut big = small.clone();
            for (x, y) in &extra {
                big.insert(atom("e", &[x, y]), 0);
                big.insert(atom("u", &[y]), 0);
            }
            for (binding, _) in body_matches(r, &small, CandidateOrder::Oldest, &mut Meter::unlimited()).0 {
                let before = is_active(r, &binding, &small, &mut Meter::unlimited()).unwrap();
                let after = is_active(r, &binding, &big, &mut Meter::unlimited()).unwrap();
                prop_assert!(before || !after);
            }
        }
    }
}
