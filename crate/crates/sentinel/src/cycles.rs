//! k-cycle enumeration and the relevance filter.
//!
//! A k-cycle is a rule sequence drawn from one strongly connected component of
//! the dependency graph whose first and last rule coincide, in which some rule
//! occurs exactly k+1 times and none more often (both endpoints count).
//! Consecutive rules need not be connected by an edge: a path can still be
//! chained through a step it skips. Relevance asks for such a chain, i.e. a
//! subsequence from the first to the last position in which every element
//! depends on its predecessor.

use std::fmt;

use crate::deps::DependencyGraph;
use crate::model::RuleSet;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KCycle(pub Vec<usize>);

impl KCycle {
    pub fn rules(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest occurrence count of any rule.
    pub fn level(&self) -> usize {
        let mut counts = std::collections::BTreeMap::new();
        for r in &self.0 {
            *counts.entry(*r).or_insert(0usize) += 1;
        }
        counts.into_values().max().unwrap_or(0)
    }

    pub fn display<'a>(&'a self, rules: &'a RuleSet) -> impl fmt::Display + 'a {
        Labels(&self.0, rules)
    }
}

struct Labels<'a>(&'a [usize], &'a RuleSet);

impl fmt::Display for Labels<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", self.1.rules[*r].label)?;
        }
        write!(f, ")")
    }
}

/// True when `path` satisfies the k-cycle occurrence constraint.
pub fn is_k_cycle(path: &[usize], k: usize) -> bool {
    if path.len() < 2 || path.first() != path.last() {
        return false;
    }
    KCycle(path.to_vec()).level() == k + 1
}

/// Cycles found in one run, in deterministic order.
#[derive(Clone, Debug, Default)]
pub struct Enumeration {
    pub cycles: Vec<KCycle>,
    /// The cycle cap was reached before the search finished.
    pub truncated: bool,
}

/// All k-cycles over the given components, each component searched
/// separately and rules tried in index order. Stops after `max_cycles`.
pub fn enumerate_k_cycles(k: usize, components: &[Vec<usize>], max_cycles: usize) -> Enumeration {
    assert!(k >= 1, "k-cycles need k >= 1");
    let mut out = Enumeration::default();
    for comp in components {
        let mut counts = vec![0usize; comp.len()];
        for start in 0..comp.len() {
            let mut path = vec![start];
            counts[start] = 1;
            if !extend(k, comp, &mut path, &mut counts, &mut out, max_cycles) {
                out.truncated = true;
                return out;
            }
            counts[start] = 0;
        }
    }
    out
}

fn extend(
    k: usize,
    comp: &[usize],
    path: &mut Vec<usize>,
    counts: &mut [usize],
    out: &mut Enumeration,
    max: usize,
) -> bool {
    for next in 0..comp.len() {
        if counts[next] == k + 1 {
            continue;
        }
        path.push(next);
        counts[next] += 1;
        if next == path[0] && counts.iter().any(|&c| c == k + 1) {
            if out.cycles.len() == max {
                return false;
            }
            out.cycles.push(KCycle(path.iter().map(|&i| comp[i]).collect()));
        }
        let ok = extend(k, comp, path, counts, out, max);
        counts[next] -= 1;
        path.pop();
        if !ok {
            return false;
        }
    }
    true
}

/// Whether some subsequence of `path` from its first to its last position
/// follows dependency edges.
pub fn is_relevant(path: &[usize], g: &DependencyGraph) -> bool {
    chain_positions(path, g).is_some()
}

/// Positions of a dependency chain through `path`, each hop taken from the
/// latest reachable predecessor, or `None` when the last position is unreachable from the first.
pub fn chain_positions(path: &[usize], g: &DependencyGraph) -> Option<Vec<usize>> {
    let n = path.len();
    if n == 0 {
        return None;
    }
    let mut prev: Vec<Option<usize>> = vec![None; n];
    let mut reach = vec![false; n];
    reach[0] = true;
    for j in 1..n {
        for i in (0..j).rev() {
            if reach[i] && g.has_edge(path[i], path[j]) {
                reach[j] = true;
                prev[j] = Some(i);
                break;
            }
        }
    }
    if !reach[n - 1] {
        return None;
    }
    let mut chain = vec![n - 1];
    let mut cur = n - 1;
    while let Some(p) = prev[cur] {
        chain.push(p);
        cur = p;
    }
    chain.reverse();
    (chain[0] == 0).then_some(chain)
}
