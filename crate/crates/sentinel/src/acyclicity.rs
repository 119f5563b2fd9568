//! Skolem-chase acyclicity conditions and the cycle functions built on them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::chase::{self, ChaseBudget, Outcome};
use crate::critdb;
use crate::deps::{self, DependencyGraph};
use crate::model::{Position, RuleSet, Sym, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    Wa,
    Ja,
    Agrd,
    Mfa,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Condition::Wa, Condition::Ja, Condition::Agrd, Condition::Mfa];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Wa => "wa",
            Condition::Ja => "ja",
            Condition::Agrd => "agrd",
            Condition::Mfa => "mfa",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wa" => Ok(Condition::Wa),
            "ja" => Ok(Condition::Ja),
            "agrd" => Ok(Condition::Agrd),
            "mfa" => Ok(Condition::Mfa),
            _ => Err(format!("unknown condition {s}; expected wa, ja, agrd or mfa")),
        }
    }
}

/// Result of an acyclicity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Check {
    Holds,
    /// The condition fails; the witness explains why.
    Fails(Witness),
    /// MFA's chase ran out of budget.
    Unknown,
}

impl Check {
    pub fn holds(&self) -> bool {
        matches!(self, Check::Holds)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// Positions of a cycle through a special edge; the first edge is special.
    Positions(Vec<Position>),
    /// Existential variables forming a cycle in the joint-acyclicity graph.
    Existentials(Vec<Sym>),
    /// Rule indexes of a dependency cycle.
    Rules(Vec<usize>),
    CyclicTerm(Term),
}

impl Witness {
    pub fn render(&self, rules: &RuleSet) -> String {
        match self {
            Witness::Positions(ps) => ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" -> "),
            Witness::Existentials(vs) => vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" -> "),
            Witness::Rules(rs) => rs.iter().map(|&r| rules.rules[r].label.clone()).collect::<Vec<_>>().join(" -> "),
            Witness::CyclicTerm(t) => t.to_string(),
        }
    }
}

/// Normal and special edges of the weak-acyclicity position graph.
#[derive(Clone, Debug, Default)]
pub struct PositionGraph {
    pub normal: BTreeSet<(Position, Position)>,
    pub special: BTreeSet<(Position, Position)>,
}

pub fn position_graph(rules: &RuleSet) -> PositionGraph {
    let mut g = PositionGraph::default();
    for r in &rules.rules {
        let ex_positions: BTreeSet<Position> = r.existentials.iter().flat_map(|z| r.head_positions(*z)).collect();
        for x in &r.frontier {
            let body = r.body_positions(*x);
            let head = r.head_positions(*x);
            for p in &body {
                for q in &head {
                    g.normal.insert((*p, *q));
                }
                for q in &ex_positions {
                    g.special.insert((*p, *q));
                }
            }
        }
    }
    g
}

/// Directed graph helper keyed by arbitrary ordered node labels.
struct Labeled<N: Ord + Copy> {
    graph: DiGraph<N, ()>,
    index: BTreeMap<N, NodeIndex>,
}

impl<N: Ord + Copy> Labeled<N> {
    fn new() -> Self {
        Labeled { graph: DiGraph::new(), index: BTreeMap::new() }
    }

    fn node(&mut self, n: N) -> NodeIndex {
        if let Some(&i) = self.index.get(&n) {
            return i;
        }
        let i = self.graph.add_node(n);
        self.index.insert(n, i);
        i
    }

    fn edge(&mut self, a: N, b: N) {
        let (x, y) = (self.node(a), self.node(b));
        self.graph.update_edge(x, y, ());
    }

    /// Component id of each node.
    fn components(&self) -> BTreeMap<N, usize> {
        let mut out = BTreeMap::new();
        for (ci, comp) in tarjan_scc(&self.graph).into_iter().enumerate() {
            for n in comp {
                out.insert(self.graph[n], ci);
            }
        }
        out
    }

    /// Shortest path from `a` to `b`, inclusive.
    fn path(&self, a: N, b: N) -> Option<Vec<N>> {
        let (s, t) = (*self.index.get(&a)?, *self.index.get(&b)?);
        let mut prev: BTreeMap<NodeIndex, NodeIndex> = BTreeMap::new();
        let mut queue = std::collections::VecDeque::from([s]);
        let mut seen = BTreeSet::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                let mut out = vec![self.graph[t]];
                let mut cur = t;
                while cur != s {
                    cur = prev[&cur];
                    out.push(self.graph[cur]);
                }
                out.reverse();
                return Some(out);
            }
            let mut next: Vec<NodeIndex> = self.graph.neighbors(u).collect();
            next.sort_by_key(|n| self.graph[*n]);
            for v in next {
                if seen.insert(v) {
                    prev.insert(v, u);
                    queue.push_back(v);
                }
            }
        }
        None
    }
}

pub fn is_wa(rules: &RuleSet) -> Check {
    let pg = position_graph(rules);
    let mut g = Labeled::new();
    for &(a, b) in pg.normal.iter().chain(&pg.special) {
        g.edge(a, b);
    }
    let comp = g.components();
    for &(a, b) in &pg.special {
        if comp[&a] == comp[&b] {
            let mut cycle = vec![a];
            cycle.extend(g.path(b, a).expect("same component"));
            return Check::Fails(Witness::Positions(cycle));
        }
    }
    Check::Holds
}

/// `Move(y)` for every existential variable `y`.
pub fn move_sets(rules: &RuleSet) -> BTreeMap<Sym, BTreeSet<Position>> {
    let mut out = BTreeMap::new();
    for r in &rules.rules {
        for &y in &r.existentials {
            let mut mv: BTreeSet<Position> = r.head_positions(y);
            loop {
                let mut grew = false;
                for r2 in &rules.rules {
                    for &x in &r2.universals {
                        let body = r2.body_positions(x);
                        if body.is_subset(&mv) {
                            for p in r2.head_positions(x) {
                                grew |= mv.insert(p);
                            }
                        }
                    }
                }
                if !grew {
                    break;
                }
            }
            out.insert(y, mv);
        }
    }
    out
}

pub fn is_ja(rules: &RuleSet) -> Check {
    let moves = move_sets(rules);
    let mut g = Labeled::new();
    for y in moves.keys() {
        g.node(*y);
    }
    for (y1, mv) in &moves {
        for r in &rules.rules {
            let feeds = r.frontier.iter().any(|x| r.body_positions(*x).is_subset(mv));
            if feeds {
                for &y2 in &r.existentials {
                    g.edge(*y1, y2);
                }
            }
        }
    }
    if let Some(cycle) = find_cycle(&g) {
        return Check::Fails(Witness::Existentials(cycle));
    }
    Check::Holds
}

fn find_cycle<N: Ord + Copy>(g: &Labeled<N>) -> Option<Vec<N>> {
    let comp = g.components();
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for c in comp.values() {
        *sizes.entry(*c).or_default() += 1;
    }
    for e in g.graph.edge_indices() {
        let (a, b) = g.graph.edge_endpoints(e).unwrap();
        let (na, nb) = (g.graph[a], g.graph[b]);
        if comp[&na] == comp[&nb] {
            let mut cycle = vec![na];
            if a != b {
                cycle.extend(g.path(nb, na).unwrap());
            } else {
                cycle.push(na);
            }
            return Some(cycle);
        }
    }
    None
}

pub fn is_agrd_graph(g: &DependencyGraph) -> Check {
    let mut lg = Labeled::new();
    for i in 0..g.nodes {
        lg.node(i);
    }
    for &(a, b) in &g.edges {
        lg.edge(a, b);
    }
    match find_cycle(&lg) {
        Some(c) => Check::Fails(Witness::Rules(c)),
        None => Check::Holds,
    }
}

pub fn is_agrd(rules: &RuleSet) -> Check {
    is_agrd_graph(&deps::dependency_graph(rules))
}

/// Default budget for the MFA chase on the critical database.
pub fn default_mfa_budget() -> ChaseBudget {
    ChaseBudget::steps(100_000).with_atoms(100_000)
}

pub fn is_mfa(rules: &RuleSet, budget: &ChaseBudget) -> Check {
    let db = critdb::skolem_critical_db(rules);
    let trace = chase::skolem_chase(&db, rules, budget, true);
    match trace.outcome {
        Outcome::Saturated => Check::Holds,
        Outcome::CyclicTermFound(t) => Check::Fails(Witness::CyclicTerm(t)),
        Outcome::BudgetExhausted(_) => Check::Unknown,
    }
}

pub fn check(cond: Condition, rules: &RuleSet, mfa_budget: &ChaseBudget) -> Check {
    match cond {
        Condition::Wa => is_wa(rules),
        Condition::Ja => is_ja(rules),
        Condition::Agrd => is_agrd(rules),
        Condition::Mfa => is_mfa(rules, mfa_budget),
    }
}

/// Strongly connected components of the dependency graph, each sorted, in
/// order of their smallest rule index.
pub fn connected_components(g: &DependencyGraph) -> Vec<Vec<usize>> {
    let mut graph: DiGraph<usize, ()> = DiGraph::new();
    let nodes: Vec<NodeIndex> = (0..g.nodes).map(|i| graph.add_node(i)).collect();
    for &(a, b) in &g.edges {
        graph.add_edge(nodes[a], nodes[b], ());
    }
    let mut comps: Vec<Vec<usize>> = tarjan_scc(&graph)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| graph[n]).collect();
            v.sort_unstable();
            v
        })
        .collect();
    comps.sort();
    comps
}

/// `Φ_Δ(R, σ)`: true iff the rules occurring in `cycle` satisfy the condition.
/// An unknown MFA result counts as false.
pub fn cycle_function(cond: Condition, rules: &RuleSet, cycle: &[usize], mfa_budget: &ChaseBudget) -> bool {
    let set: BTreeSet<usize> = cycle.iter().copied().collect();
    let idx: Vec<usize> = set.into_iter().collect();
    check(cond, &rules.subset(&idx), mfa_budget).holds()
}
