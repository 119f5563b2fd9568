//! Critical databases and index-lowering renamings of indexed constants.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Atom, Instance, RuleSet, Sym, Term};

/// Name of the extra constant of the skolem critical database: the first of
/// `star0`, `star1`, … that does not occur in the rules.
pub fn star_constant(rules: &RuleSet) -> Sym {
    (0..)
        .map(|i| Sym::new(&format!("star{i}")))
        .find(|s| !rules.constants.contains(s))
        .unwrap()
}

/// Every predicate of the schema as the full relation over the rule
/// constants plus the star constant.
pub fn skolem_critical_db(rules: &RuleSet) -> Instance {
    let mut domain: Vec<Term> = rules.constants.iter().map(|c| Term::Constant(*c)).collect();
    domain.push(Term::Constant(star_constant(rules)));
    let mut inst = Instance::new();
    for (&pred, &arity) in &rules.schema {
        let mut idx = vec![0usize; arity];
        loop {
            inst.insert(Atom { pred, args: idx.iter().map(|&i| domain[i].clone()).collect() }, 0);
            let mut k = 0;
            while k < arity {
                idx[k] += 1;
                if idx[k] < domain.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == arity {
                break;
            }
        }
    }
    inst
}

/// `⋃ e_i(body(r_i))`, where `e_i` freezes variable `v` of the i-th rule as
/// the indexed constant `⟨v,i⟩`.
pub fn restricted_critical_db(rules: &RuleSet, path: &[usize]) -> Instance {
    assert!(!path.is_empty(), "paths are non-empty");
    let mut inst = Instance::new();
    for (i, &ri) in path.iter().enumerate() {
        for a in &rules.rules[ri].body {
            inst.insert(freeze(a, i as u32 + 1), 0);
        }
    }
    inst
}

pub(crate) fn freeze(a: &Atom, index: u32) -> Atom {
    Atom {
        pred: a.pred,
        args: a
            .args
            .iter()
            .map(|t| match t {
                Term::Variable(v) => Term::Indexed(*v, index),
                t => t.clone(),
            })
            .collect(),
    }
}

pub type IndexedConst = (Sym, u32);

/// Indexed constants occurring in `inst`, sorted by index then name.
pub fn indexed_constants(inst: &Instance) -> Vec<IndexedConst> {
    let mut set = BTreeSet::new();
    for a in inst.atoms() {
        for t in &a.args {
            t.for_each_indexed(&mut |v, i| {
                set.insert((i, v));
            });
        }
    }
    set.into_iter().map(|(i, v)| (v, i)).collect()
}

/// Map between indexed constants where every target has a smaller index than
/// its source. Constants outside the map are fixed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Renaming {
    map: BTreeMap<IndexedConst, IndexedConst>,
}

impl Renaming {
    pub fn identity() -> Renaming {
        Renaming::default()
    }

    /// Panics when some pair does not lower the index.
    pub fn new(pairs: impl IntoIterator<Item = (IndexedConst, IndexedConst)>) -> Renaming {
        let mut map = BTreeMap::new();
        for (from, to) in pairs {
            assert!(to.1 < from.1, "renamings must lower the index");
            map.insert(from, to);
        }
        Renaming { map }
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, c: IndexedConst) -> IndexedConst {
        self.map.get(&c).copied().unwrap_or(c)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (IndexedConst, IndexedConst)> + '_ {
        self.map.iter().map(|(a, b)| (*a, *b))
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn after(&self, inner: &Renaming) -> Renaming {
        let mut map = BTreeMap::new();
        let keys: BTreeSet<IndexedConst> = inner.map.keys().chain(self.map.keys()).copied().collect();
        for k in keys {
            let v = self.get(inner.get(k));
            if v != k {
                map.insert(k, v);
            }
        }
        Renaming { map }
    }

    pub fn is_valid(&self) -> bool {
        self.map.iter().all(|(a, b)| b.1 < a.1)
    }

    pub fn apply_term(&self, t: &Term) -> Term {
        t.map_indexed(&|v, i| self.get((v, i)))
    }

    pub fn apply_atom(&self, a: &Atom) -> Atom {
        Atom { pred: a.pred, args: a.args.iter().map(|t| self.apply_term(t)).collect() }
    }

    /// Atom-wise image; atoms that become equal collapse. Steps are kept.
    pub fn apply(&self, inst: &Instance) -> Instance {
        let mut out = Instance::new();
        for (a, s) in inst.iter() {
            out.insert(self.apply_atom(a), s);
        }
        out
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self
            .map
            .iter()
            .map(|(a, b)| format!("{}->{}", Term::Indexed(a.0, a.1), Term::Indexed(b.0, b.1)))
            .collect();
        if parts.is_empty() {
            "identity".into()
        } else {
            parts.join(", ")
        }
    }
}

/// A step at which no usable trigger was found: the rule's body atoms could
/// not be matched in `instance`.
#[derive(Clone, Debug)]
pub struct MatchFailure {
    pub step: usize,
    pub body: Vec<Atom>,
    /// Atoms with their first-derivation step.
    pub instance: Vec<(Atom, usize)>,
}

struct Merge {
    parent: BTreeMap<IndexedConst, IndexedConst>,
}

impl Merge {
    fn find(&mut self, c: IndexedConst) -> IndexedConst {
        let mut cur = c;
        while let Some(&p) = self.parent.get(&cur) {
            if p == cur {
                break;
            }
            cur = p;
        }
        cur
    }

    fn union(&mut self, a: IndexedConst, b: IndexedConst) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent.insert(ra, rb);
        }
    }

    /// Unifies two ground terms, indexed constants acting as variables.
    fn unify(&mut self, s: &Term, t: &Term, var_of: &mut BTreeMap<Sym, Term>) -> bool {
        match (s, t) {
            (Term::Variable(v), _) => match var_of.get(v).cloned() {
                Some(bound) => self.unify(&bound, t, var_of),
                None => {
                    var_of.insert(*v, t.clone());
                    true
                }
            },
            (Term::Indexed(a, i), Term::Indexed(b, j)) => {
                self.union((*a, *i), (*b, *j));
                true
            }
            (Term::Skolem(x), Term::Skolem(y)) => {
                x.func() == y.func()
                    && x.args().len() == y.args().len()
                    && x.args().iter().zip(y.args()).all(|(p, q)| self.unify(p, q, var_of))
            }
            (Term::Constant(a), Term::Constant(b)) => a == b,
            _ => false,
        }
    }

    /// The induced renaming, if every class has a unique lowest index.
    fn renaming(mut self) -> Option<Renaming> {
        let keys: Vec<IndexedConst> = self.parent.keys().copied().collect();
        let mut classes: BTreeMap<IndexedConst, Vec<IndexedConst>> = BTreeMap::new();
        for k in keys {
            let r = self.find(k);
            classes.entry(r).or_default().push(k);
        }
        let mut pairs = Vec::new();
        for (root, mut members) in classes {
            if !members.contains(&root) {
                members.push(root);
            }
            let low = members.iter().map(|c| c.1).min().unwrap();
            let lows: Vec<&IndexedConst> = members.iter().filter(|c| c.1 == low).collect();
            if lows.len() != 1 {
                return None;
            }
            let target = *lows[0];
            for m in members {
                if m != target {
                    pairs.push((m, target));
                }
            }
        }
        Some(Renaming::new(pairs))
    }
}

/// Renamings under which the failed body would match, each the least merge
/// for one assignment of body atoms to instance atoms. Assignments that use
/// only database atoms are skipped. Sorted by number of merged constants.
pub fn propose_merges(failure: &MatchFailure, max_assignments: usize) -> Vec<Renaming> {
    let options: Vec<Vec<usize>> = failure
        .body
        .iter()
        .map(|b| {
            failure
                .instance
                .iter()
                .enumerate()
                .filter(|(_, (a, _))| a.pred == b.pred)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let mut out: BTreeSet<(usize, Renaming)> = BTreeSet::new();
    if options.iter().any(Vec::is_empty) {
        return Vec::new();
    }
    let mut choice = vec![0usize; options.len()];
    let mut tried = 0;
    loop {
        tried += 1;
        if tried > max_assignments {
            break;
        }
        let picked: Vec<usize> = choice.iter().zip(&options).map(|(&c, o)| o[c]).collect();
        if picked.iter().any(|&i| failure.instance[i].1 > 0) {
            let mut m = Merge { parent: BTreeMap::new() };
            let mut var_of = BTreeMap::new();
            let ok = failure
                .body
                .iter()
                .zip(&picked)
                .all(|(b, &i)| b.args.iter().zip(&failure.instance[i].0.args).all(|(s, t)| m.unify(s, t, &mut var_of)));
            if ok {
                if let Some(rn) = m.renaming() {
                    if !rn.is_identity() {
                        out.insert((rn.len(), rn));
                    }
                }
            }
        }
        let mut k = 0;
        while k < choice.len() {
            choice[k] += 1;
            if choice[k] < options[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == choice.len() {
            break;
        }
    }
    out.into_iter().map(|(_, r)| r).collect()
}

/// Every index-lowering map on the given constants, closed under chaining so
/// each result is the composite of the renamings it stands for. Only feasible
/// for a handful of constants.
pub fn all_renamings(consts: &[IndexedConst]) -> Vec<Renaming> {
    let targets: Vec<Vec<Option<IndexedConst>>> = consts
        .iter()
        .map(|c| {
            std::iter::once(None)
                .chain(consts.iter().filter(|d| d.1 < c.1).map(|d| Some(*d)))
                .collect()
        })
        .collect();
    let mut seen = BTreeSet::new();
    let mut choice = vec![0usize; consts.len()];
    loop {
        let raw: BTreeMap<IndexedConst, IndexedConst> = consts
            .iter()
            .zip(&choice)
            .filter_map(|(c, &k)| targets_of(&targets, consts, c, k).map(|t| (*c, t)))
            .collect();
        let resolved: Vec<(IndexedConst, IndexedConst)> = raw
            .keys()
            .map(|&c| {
                let mut cur = c;
                while let Some(&n) = raw.get(&cur) {
                    cur = n;
                }
                (c, cur)
            })
            .collect();
        seen.insert(Renaming::new(resolved));
        let mut k = 0;
        while k < choice.len() {
            choice[k] += 1;
            if choice[k] < targets[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == choice.len() {
            break;
        }
    }
    seen.into_iter().collect()
}

fn targets_of(
    targets: &[Vec<Option<IndexedConst>>],
    consts: &[IndexedConst],
    c: &IndexedConst,
    k: usize,
) -> Option<IndexedConst> {
    let i = consts.iter().position(|x| x == c).unwrap();
    targets[i][k]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::atom;

    fn ix(v: &str, rule: usize, i: u32) -> Term {
        Term::Indexed(Sym::new(&format!("{v}@{rule}")), i)
    }

    #[test]
    fn successor_skolem_critical_db() {
        let db = skolem_critical_db(&fixtures::successor());
        assert_eq!(db.atom_set(), [atom("e", &["star0", "star0"])].into_iter().collect());
    }

    #[test]
    fn star_avoids_rule_constants() {
        let rs = crate::dlgp::parse("p(a) :- p(star0).").unwrap().rules;
        let db = skolem_critical_db(&rs);
        let want: BTreeSet<Atom> = [atom("p", &["a"]), atom("p", &["star0"]), atom("p", &["star1"])].into_iter().collect();
        assert_eq!(db.atom_set(), want);
        let rs = crate::dlgp::parse("q(X) :- p(X, a).").unwrap().rules;
        assert_eq!(skolem_critical_db(&rs).len(), 2 + 4);
        assert!(skolem_critical_db(&RuleSet::empty()).is_empty());
    }

    #[test]
    fn guarded_successor_restricted_db() {
        let rs = fixtures::guarded_successor();
        let db = restricted_critical_db(&rs, &[0, 0]);
        let want: BTreeSet<Atom> = (1..=2)
            .flat_map(|i| {
                [
                    Atom::new("t", vec![ix("X", 1, i), ix("Y", 1, i)]),
                    Atom::new("p", vec![ix("X", 1, i), ix("Y", 1, i)]),
                ]
            })
            .collect();
        assert_eq!(db.atom_set(), want);
    }

    #[test]
    fn rotation_restricted_db() {
        let rs = fixtures::rotation();
        let db = restricted_critical_db(&rs, &[0, 1, 2]);
        let want: BTreeSet<Atom> = [
            Atom::new("p", vec![ix("X", 1, 1), ix("Y", 1, 1)]),
            Atom::new("r", vec![ix("X", 2, 2), ix("Y", 2, 2)]),
            Atom::new("q", vec![ix("X", 3, 3), ix("Y", 3, 3)]),
            Atom::new("t", vec![ix("X", 3, 3), ix("Y", 3, 3)]),
        ]
        .into_iter()
        .collect();
        assert_eq!(db.atom_set(), want);
        assert_eq!(db.to_string_set(), ["p(x__1,y__1)", "q(x__3,y__3)", "r(x__2,y__2)", "t(x__3,y__3)"]);
    }

    #[test]
    fn constants_are_not_indexed() {
        let rs = crate::dlgp::parse("q(X) :- p(X, c).").unwrap().rules;
        let db = restricted_critical_db(&rs, &[0]);
        assert!(db.contains(&Atom::new("p", vec![ix("X", 1, 1), Term::constant("c")])));
    }

    #[test]
    fn renaming_index_three_to_one() {
        let rs = fixtures::renaming();
        // (r3, r2, r1)
        let db = restricted_critical_db(&rs, &[2, 1, 0]);
        let rn = Renaming::new(
            ["X", "Y", "Z"].iter().map(|v| ((Sym::new(&format!("{v}@1")), 3), (Sym::new(&format!("{v}@3")), 1))),
        );
        // The index-3 constants belong to r1 and the index-1 ones to r3, so the
        // mapping pairs r1's x, y, z with r3's x, y, z.
        let image = rn.apply(&db);
        assert_eq!(
            image.to_string_set(),
            ["k(z__1)", "p(x__1,y__1,z__1)", "q(x__1,y__1,z__1)", "r(x__2,y__2,z__2)", "t(x__1,y__1,z__1)"]
        );
        assert!(Renaming::identity().apply(&db) == db);
    }

    #[test]
    fn collapsing_atoms_shrinks_instance() {
        let rs = fixtures::successor();
        let db = restricted_critical_db(&rs, &[0, 0]);
        let v = |n: &str| Sym::new(n);
        let rn = Renaming::new([((v("X1@1"), 2), (v("X1@1"), 1)), ((v("X2@1"), 2), (v("X2@1"), 1))]);
        assert_eq!(rn.apply(&db).len(), 1);
    }

    #[test]
    #[should_panic]
    fn raising_renaming_is_rejected() {
        Renaming::new([((Sym::new("X"), 1), (Sym::new("X"), 2))]);
    }

    #[test]
    fn composition_lowers_indexes() {
        let v = Sym::new("V");
        let a = Renaming::new([((v, 3), (v, 2))]);
        let b = Renaming::new([((v, 2), (v, 1))]);
        let c = b.after(&a);
        assert!(c.is_valid());
        assert_eq!(c.get((v, 3)), (v, 1));
        assert_eq!(c.get((v, 2)), (v, 1));
    }

    #[test]
    fn proposals_from_failures() {
        let rs = fixtures::renaming();
        let r1 = &rs.rules[0];
        let fz = Term::skolem(Sym::new("f_r3_v"), vec![ix("X", 3, 1), ix("Z", 3, 1)]);
        let failure = MatchFailure {
            step: 3,
            body: r1.body.clone(),
            instance: vec![
                (Atom::new("k", vec![ix("Z", 1, 3)]), 0),
                (Atom::new("p", vec![ix("X", 1, 3), ix("Y", 1, 3), ix("Z", 1, 3)]), 0),
                (Atom::new("p", vec![fz.clone(), ix("X", 3, 1), ix("Z", 3, 1)]), 1),
            ],
        };
        let props = propose_merges(&failure, 1000);
        assert_eq!(props.len(), 1);
        assert_eq!(props[0].pairs().collect::<Vec<_>>(), vec![((Sym::new("Z@1"), 3), (Sym::new("Z@3"), 1))]);
        let none = MatchFailure { step: 1, body: r1.body.clone(), instance: vec![] };
        assert!(propose_merges(&none, 1000).is_empty());
    }

    #[test]
    fn independent_conflicts_merge_together() {
        let body = vec![atom("e", &["X", "Y"]), atom("u", &["X"]), atom("w", &["Y"])];
        let v = |n: &str, i| Term::Indexed(Sym::new(n), i);
        let failure = MatchFailure {
            step: 3,
            body,
            instance: vec![
                (Atom::new("e", vec![v("a", 1), v("b", 1)]), 1),
                (Atom::new("u", vec![v("c", 2)]), 0),
                (Atom::new("w", vec![v("d", 3)]), 0),
            ],
        };
        let props = propose_merges(&failure, 1000);
        assert_eq!(props.len(), 1);
        assert_eq!(props[0].len(), 2);
        // Every proposal also appears among the exhaustive renamings.
        let all = all_renamings(&[(Sym::new("a"), 1), (Sym::new("b"), 1), (Sym::new("c"), 2), (Sym::new("d"), 3)]);
        assert!(all.contains(&props[0]));
        assert!(all.iter().all(Renaming::is_valid));
    }

    #[test]
    fn exhaustive_renamings_count() {
        let s = |n: &str| Sym::new(n);
        // One constant per index 1..3: 1 * 2 * 3 raw maps, all distinct after chaining? x3->x2->x1 and
        // x3->x1 with x2->x1 coincide.
        let all = all_renamings(&[(s("a"), 1), (s("b"), 2), (s("c"), 3)]);
        assert_eq!(all.len(), 5);
        assert!(all.contains(&Renaming::identity()));
    }
}
