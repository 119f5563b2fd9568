//! Piece-unifiers and the graph of rule dependencies.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::ControlFlow;

use crate::hom::{self, CandidateOrder, Meter, Pattern};
use crate::model::{Atom, Instance, Rule, RuleSet, Sym, Term};

/// Unifier of a subset `b` of the consumer's body with a subset `h` of the
/// producer's head. Indexes refer to the rules' atom lists. When producer and
/// consumer are the same rule, the consumer's variables carry a `'` suffix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PieceUnifier {
    pub b: Vec<usize>,
    pub h: Vec<usize>,
    pub theta: BTreeMap<Sym, Term>,
}

fn primed(rule: &Rule) -> (Vec<Atom>, Vec<Atom>, Vec<Sym>) {
    let p = |a: &Atom| Atom {
        pred: a.pred,
        args: a
            .args
            .iter()
            .map(|t| match t {
                Term::Variable(v) => Term::variable(&format!("{v}'")),
                t => t.clone(),
            })
            .collect(),
    };
    let ex = rule.existentials.iter().map(|v| Sym::new(&format!("{v}'"))).collect();
    (rule.body.iter().map(p).collect(), rule.head.iter().map(p).collect(), ex)
}

/// Union-find over terms; classes may hold at most one constant.
#[derive(Default, Clone)]
struct Classes {
    parent: HashMap<Term, Term>,
}

impl Classes {
    fn find(&mut self, t: &Term) -> Term {
        let mut cur = t.clone();
        while let Some(p) = self.parent.get(&cur) {
            if *p == cur {
                break;
            }
            cur = p.clone();
        }
        if cur != *t {
            self.parent.insert(t.clone(), cur.clone());
        }
        cur
    }

    fn union(&mut self, a: &Term, b: &Term) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return true;
        }
        match (ra.is_variable(), rb.is_variable()) {
            (false, false) => false,
            (true, _) => {
                self.parent.insert(ra, rb);
                true
            }
            (false, true) => {
                self.parent.insert(rb, ra);
                true
            }
        }
    }
}

struct Pair<'a> {
    body2: Vec<Atom>,
    head2: Vec<Atom>,
    producer: &'a Rule,
}

impl<'a> Pair<'a> {
    fn new(producer: &'a Rule, consumer: &'a Rule) -> Pair<'a> {
        if std::ptr::eq(producer, consumer) || producer.label == consumer.label {
            let (body2, head2, _) = primed(consumer);
            Pair { body2, head2, producer }
        } else {
            Pair { body2: consumer.body.clone(), head2: consumer.head.clone(), producer }
        }
    }
}

/// All piece-unifiers of `body(consumer)` with `head(producer)`, one most
/// general unifier per choice of body subset and atom-wise head mapping.
pub fn piece_unifiers(producer: &Rule, consumer: &Rule) -> Vec<PieceUnifier> {
    let pair = Pair::new(producer, consumer);
    let mut out: Vec<PieceUnifier> = Vec::new();
    let nb = pair.body2.len();
    assert!(nb < 24, "rule bodies this large are not supported");
    let options: Vec<Vec<usize>> = pair
        .body2
        .iter()
        .map(|a| {
            producer
                .head
                .iter()
                .enumerate()
                .filter(|(_, h)| h.pred == a.pred)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    for mask in 1u32..(1 << nb) {
        let b: Vec<usize> = (0..nb).filter(|i| mask & (1 << i) != 0).collect();
        if b.iter().any(|&i| options[i].is_empty()) {
            continue;
        }
        let mut choice = vec![0usize; b.len()];
        loop {
            let map: Vec<usize> = b.iter().zip(&choice).map(|(&bi, &c)| options[bi][c]).collect();
            if let Some(pu) = unify(&pair, &b, &map) {
                if !out.contains(&pu) {
                    out.push(pu);
                }
            }
            let mut k = 0;
            loop {
                if k == choice.len() {
                    break;
                }
                choice[k] += 1;
                if choice[k] < options[b[k]].len() {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == choice.len() {
                break;
            }
        }
    }
    out
}

fn unify(pair: &Pair, b: &[usize], map: &[usize]) -> Option<PieceUnifier> {
    let mut cl = Classes::default();
    for (&bi, &hi) in b.iter().zip(map) {
        for (s, t) in pair.body2[bi].args.iter().zip(&pair.producer.head[hi].args) {
            if !cl.union(s, t) {
                return None;
            }
        }
    }
    // Variables of the consumer's body outside the piece.
    let outside: BTreeSet<Sym> = (0..pair.body2.len())
        .filter(|i| !b.contains(i))
        .flat_map(|i| pair.body2[i].vars().collect::<Vec<_>>())
        .collect();
    let inside: BTreeSet<Sym> = b.iter().flat_map(|&i| pair.body2[i].vars().collect::<Vec<_>>()).collect();
    let producer_vars: BTreeSet<Sym> = pair.producer.atoms().flat_map(|a| a.vars().collect::<Vec<_>>()).collect();
    let mut members: HashMap<Term, Vec<Term>> = HashMap::new();
    let keys: Vec<Term> = cl.parent.keys().cloned().collect();
    for t in keys {
        let r = cl.find(&t);
        members.entry(r.clone()).or_insert_with(|| vec![r]).push(t);
    }
    for z in &pair.producer.existentials {
        let zt = Term::Variable(*z);
        let root = cl.find(&zt);
        let class = members.get(&root).cloned().unwrap_or_else(|| vec![zt.clone()]);
        for m in class {
            match &m {
                Term::Variable(v) if v == z => {}
                Term::Variable(v) => {
                    if producer_vars.contains(v) || !inside.contains(v) || outside.contains(v) {
                        return None;
                    }
                }
                _ => return None,
            }
        }
    }
    let mut theta = BTreeMap::new();
    for (root, ms) in &members {
        for m in ms {
            if let Term::Variable(v) = m {
                if m != root && !theta.contains_key(v) {
                    theta.insert(*v, root.clone());
                }
            }
        }
    }
    let mut h: Vec<usize> = map.to_vec();
    h.sort_unstable();
    h.dedup();
    Some(PieceUnifier { b: b.to_vec(), h, theta })
}

fn apply_theta(atoms: &[Atom], theta: &BTreeMap<Sym, Term>) -> BTreeSet<Atom> {
    atoms
        .iter()
        .map(|a| Atom {
            pred: a.pred,
            args: a
                .args
                .iter()
                .map(|t| match t {
                    Term::Variable(v) => theta.get(v).cloned().unwrap_or_else(|| t.clone()),
                    t => t.clone(),
                })
                .collect(),
        })
        .collect()
}

/// The unifier witnessing that `consumer` depends on `producer`: it must be
/// atom-erasing and productive, and the unified head atoms must not all be
/// copies of the producer's body atoms. Existential variables are kept as
/// distinct variables in these tests.
pub fn dependency_witness(producer: &Rule, consumer: &Rule) -> Option<PieceUnifier> {
    let pair = Pair::new(producer, consumer);
    piece_unifiers(producer, consumer).into_iter().find(|pu| {
        let body1 = apply_theta(&producer.body, &pu.theta);
        let head1 = apply_theta(&producer.head, &pu.theta);
        let body2 = apply_theta(&pair.body2, &pu.theta);
        let head2 = apply_theta(&pair.head2, &pu.theta);
        let erasing = !body2.is_subset(&body1);
        let productive = head2.iter().any(|a| !body1.contains(a) && !head1.contains(a) && !body2.contains(a));
        // A producer whose unified head atoms already sit in its own body never
        // contributes a new atom to the consumer.
        let piece = apply_theta(&pu.h.iter().map(|&i| producer.head[i].clone()).collect::<Vec<_>>(), &pu.theta);
        let fresh = !piece.is_subset(&body1);
        erasing && productive && fresh
    })
}

/// True iff `consumer` depends on `producer`.
pub fn depends_on(consumer: &Rule, producer: &Rule) -> bool {
    dependency_witness(producer, consumer).is_some()
}

/// True iff some trigger of `producer` on `inst` yields atoms that a body
/// match of `consumer` needs.
pub fn depends_on_wrt(consumer: &Rule, producer: &Rule, inst: &Instance) -> bool {
    let mut meter = Meter::unlimited();
    let (matches, _) = hom::body_matches(producer, inst, CandidateOrder::Oldest, &mut meter);
    let mut work = inst.clone();
    let mark = inst.len();
    let pat = Pattern::for_rule_body(consumer);
    for (binding, _) in matches {
        if hom::apply(producer, &binding, &mut work, 1).is_empty() {
            continue;
        }
        let mut found = false;
        pat.search(&work, &vec![None; pat.slots()], CandidateOrder::Newest, &mut meter, &mut |_, ids| {
            if ids.iter().any(|&i| i as usize >= mark) {
                found = true;
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        work.truncate(mark);
        if found {
            return true;
        }
    }
    false
}

/// Edges `from → to` mean rule `to` depends on rule `from`.
#[derive(Clone, Debug)]
pub struct DependencyGraph {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
    pub witnesses: BTreeMap<(usize, usize), PieceUnifier>,
    succ: Vec<Vec<usize>>,
}

impl DependencyGraph {
    pub fn from_edges(nodes: usize, edges: Vec<(usize, usize)>) -> DependencyGraph {
        let mut succ = vec![Vec::new(); nodes];
        for &(a, b) in &edges {
            succ[a].push(b);
        }
        DependencyGraph { nodes, edges, witnesses: BTreeMap::new(), succ }
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.succ[from].contains(&to)
    }

    pub fn successors(&self, from: usize) -> &[usize] {
        &self.succ[from]
    }

    /// Graphviz rendering with rule labels.
    pub fn to_dot(&self, rules: &RuleSet) -> String {
        let mut s = String::from("digraph dependencies {\n");
        for r in &rules.rules {
            s.push_str(&format!("  \"{}\";\n", r.label));
        }
        for &(a, b) in &self.edges {
            s.push_str(&format!("  \"{}\" -> \"{}\";\n", rules.rules[a].label, rules.rules[b].label));
        }
        s.push_str("}\n");
        s
    }
}

pub fn dependency_graph(rules: &RuleSet) -> DependencyGraph {
    let n = rules.len();
    let mut edges = Vec::new();
    let mut witnesses = BTreeMap::new();
    for a in 0..n {
        for b in 0..n {
            if let Some(w) = dependency_witness(&rules.rules[a], &rules.rules[b]) {
                edges.push((a, b));
                witnesses.insert((a, b), w);
            }
        }
    }
    let mut g = DependencyGraph::from_edges(n, edges);
    g.witnesses = witnesses;
    g
}
