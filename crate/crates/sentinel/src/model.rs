//! Terms, atoms, rules, rule sets and instances.
//!
//! Symbols are interned process-wide so that atoms hash and compare cheaply.
//! Skolem terms are reference counted and carry a cached hash, height and the
//! set of function symbols nested inside them, which makes the cyclic-term
//! test and height bookkeeping constant time per new term.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock, RwLock};

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Default)]
struct Interner {
    ids: HashMap<&'static str, u32>,
    names: Vec<&'static str>,
}

fn interner() -> &'static RwLock<Interner> {
    static INTERNER: OnceLock<RwLock<Interner>> = OnceLock::new();
    INTERNER.get_or_init(Default::default)
}

/// Interned name. Equality and hashing use the id, ordering uses the text so
/// that sorted output does not depend on interning order.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sym(u32);

impl Sym {
    pub fn new(name: &str) -> Sym {
        if let Some(&id) = interner().read().unwrap().ids.get(name) {
            return Sym(id);
        }
        let mut guard = interner().write().unwrap();
        if let Some(&id) = guard.ids.get(name) {
            return Sym(id);
        }
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        let id = guard.names.len() as u32;
        guard.names.push(leaked);
        guard.ids.insert(leaked, id);
        Sym(id)
    }

    pub fn as_str(self) -> &'static str {
        interner().read().unwrap().names[self.0 as usize]
    }
}

impl PartialOrd for Sym {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Sym {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        if self.0 == other.0 {
            return std::cmp::Ordering::Equal;
        }
        self.as_str().cmp(other.as_str())
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Strips the rule-ordinal suffix added when rules are standardized apart.
pub fn base_name(var: Sym) -> &'static str {
    let s = var.as_str();
    match s.find('@') {
        Some(i) => &s[..i],
        None => s,
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Constant(Sym),
    Variable(Sym),
    Skolem(Arc<SkolemTerm>),
    /// `⟨var, index⟩`: the frozen copy of variable `var` for the rule at
    /// position `index` of a path.
    Indexed(Sym, u32),
}

pub struct SkolemTerm {
    func: Sym,
    args: Vec<Term>,
    height: u32,
    hash: u64,
    /// Function symbols occurring strictly below the root.
    nested: Box<[Sym]>,
}

impl SkolemTerm {
    pub fn func(&self) -> Sym {
        self.func
    }
    pub fn args(&self) -> &[Term] {
        &self.args
    }
}

impl PartialEq for SkolemTerm {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self, other)
            || (self.hash == other.hash && self.func == other.func && self.args == other.args)
    }
}
impl Eq for SkolemTerm {}

impl Hash for SkolemTerm {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

impl PartialOrd for SkolemTerm {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for SkolemTerm {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.func
            .cmp(&other.func)
            .then_with(|| self.args.cmp(&other.args))
    }
}

impl Term {
    pub fn constant(name: &str) -> Term {
        Term::Constant(Sym::new(name))
    }
    pub fn variable(name: &str) -> Term {
        Term::Variable(Sym::new(name))
    }
    pub fn indexed(var: &str, index: u32) -> Term {
        assert!(index >= 1, "indexed constants start at 1");
        Term::Indexed(Sym::new(var), index)
    }

    /// Builds `func(args)`. Arguments must be ground.
    pub fn skolem(func: Sym, args: Vec<Term>) -> Term {
        let mut h = DefaultHasher::new();
        func.hash(&mut h);
        let mut height = 0;
        let mut nested: BTreeSet<Sym> = BTreeSet::new();
        for a in &args {
            assert!(a.is_ground(), "skolem arguments must be ground");
            a.hash(&mut h);
            height = height.max(a.height());
            if let Term::Skolem(s) = a {
                nested.insert(s.func);
                nested.extend(s.nested.iter().copied());
            }
        }
        Term::Skolem(Arc::new(SkolemTerm {
            func,
            args,
            height: height + 1,
            hash: h.finish(),
            nested: nested.into_iter().collect(),
        }))
    }

    pub fn is_ground(&self) -> bool {
        !matches!(self, Term::Variable(_))
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }

    /// Nesting depth; constants and indexed constants have height 1.
    pub fn height(&self) -> u32 {
        match self {
            Term::Constant(_) | Term::Indexed(..) => 1,
            Term::Skolem(s) => s.height,
            Term::Variable(v) => panic!("height of non-ground term {v}"),
        }
    }

    /// True when some function symbol occurs twice on one nesting path.
    pub fn is_cyclic(&self) -> bool {
        match self {
            Term::Skolem(s) => s.nested.binary_search(&s.func).is_ok() || s.args.iter().any(Term::is_cyclic),
            _ => false,
        }
    }

    /// Calls `f` on every indexed constant inside the term.
    pub fn for_each_indexed(&self, f: &mut impl FnMut(Sym, u32)) {
        match self {
            Term::Indexed(v, i) => f(*v, *i),
            Term::Skolem(s) => s.args.iter().for_each(|a| a.for_each_indexed(f)),
            _ => {}
        }
    }

    /// Rebuilds the term with every indexed constant passed through `f`.
    pub fn map_indexed(&self, f: &impl Fn(Sym, u32) -> (Sym, u32)) -> Term {
        match self {
            Term::Indexed(v, i) => {
                let (w, j) = f(*v, *i);
                Term::Indexed(w, j)
            }
            Term::Skolem(s) => Term::skolem(s.func, s.args.iter().map(|a| a.map_indexed(f)).collect()),
            t => t.clone(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Constant(c) => write!(f, "{c}"),
            Term::Variable(v) => write!(f, "{v}"),
            Term::Skolem(s) => {
                write!(f, "{}(", s.func)?;
                for (i, a) in s.args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Term::Indexed(v, i) => {
                let base = base_name(*v);
                let mut chars = base.chars();
                if let Some(c) = chars.next() {
                    write!(f, "{}{}", c.to_lowercase(), chars.as_str())?;
                }
                write!(f, "__{i}")
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Height of a set of terms: the maximum, or 1 when there are none.
pub fn height_of<'a>(terms: impl IntoIterator<Item = &'a Term>) -> u32 {
    terms.into_iter().map(Term::height).max().unwrap_or(1)
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: Sym,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Atom {
        Atom { pred: Sym::new(pred), args }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn height(&self) -> u32 {
        height_of(&self.args)
    }

    pub fn vars(&self) -> impl Iterator<Item = Sym> + '_ {
        self.args.iter().filter_map(|t| match t {
            Term::Variable(v) => Some(*v),
            _ => None,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Shorthand used heavily in tests: `atom("p", &["X", "a"])` where names
/// starting with an uppercase letter are variables.
pub fn atom(pred: &str, args: &[&str]) -> Atom {
    Atom::new(
        pred,
        args.iter()
            .map(|a| {
                if a.starts_with(|c: char| c.is_ascii_uppercase()) {
                    Term::variable(a)
                } else {
                    Term::constant(a)
                }
            })
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position {
    pub pred: Sym,
    /// 1-based.
    pub slot: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.pred, self.slot)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("rule {rule}: empty body")]
    EmptyBody { rule: String },
    #[error("rule {rule}: empty head")]
    EmptyHead { rule: String },
    #[error("rule {rule}: skolem terms are not allowed in source rules")]
    FunctionTerm { rule: String },
    #[error("predicate {pred} used with arities {first} and {second}")]
    Arity { pred: String, first: usize, second: usize },
    #[error("variable {var} shared by rules {first} and {second}")]
    NotStandardized { var: String, first: String, second: String },
    #[error("duplicate rule label {0}")]
    DuplicateLabel(String),
}

/// Argument of a skolemized head atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum HeadArg {
    /// Index into `Rule::universals`.
    Universal(usize),
    Constant(Sym),
    /// Skolem function applied to the frontier, as indexes into `universals`.
    Skolem { func: Sym, args: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SkolemAtom {
    pub pred: Sym,
    pub args: Vec<HeadArg>,
}

/// Existential rule `body → ∃z head`.
#[derive(Clone)]
pub struct Rule {
    pub label: String,
    pub body: Vec<Atom>,
    pub head: Vec<Atom>,
    /// Body variables in order of first occurrence.
    pub universals: Vec<Sym>,
    /// Head variables missing from the body, in order of first occurrence.
    pub existentials: Vec<Sym>,
    /// Variables shared by body and head, ordered by first occurrence in the head.
    pub frontier: Vec<Sym>,
    sk_head: Vec<SkolemAtom>,
}

impl PartialEq for Rule {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.body == other.body && self.head == other.head
    }
}
impl Eq for Rule {}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn push_unique(v: &mut Vec<Sym>, s: Sym) {
    if !v.contains(&s) {
        v.push(s);
    }
}

impl Rule {
    pub fn new(label: impl Into<String>, body: Vec<Atom>, head: Vec<Atom>) -> Result<Rule, ModelError> {
        let label = label.into();
        if body.is_empty() {
            return Err(ModelError::EmptyBody { rule: label });
        }
        if head.is_empty() {
            return Err(ModelError::EmptyHead { rule: label });
        }
        if body.iter().chain(&head).flat_map(|a| &a.args).any(|t| matches!(t, Term::Skolem(_) | Term::Indexed(..))) {
            return Err(ModelError::FunctionTerm { rule: label });
        }
        let mut universals = Vec::new();
        for a in &body {
            a.vars().for_each(|v| push_unique(&mut universals, v));
        }
        let mut frontier = Vec::new();
        let mut existentials = Vec::new();
        for a in &head {
            for v in a.vars() {
                if universals.contains(&v) {
                    push_unique(&mut frontier, v);
                } else {
                    push_unique(&mut existentials, v);
                }
            }
        }
        let base = label.to_lowercase();
        let frontier_idx: Vec<usize> = frontier
            .iter()
            .map(|v| universals.iter().position(|u| u == v).unwrap())
            .collect();
        let sk_head = head
            .iter()
            .map(|a| SkolemAtom {
                pred: a.pred,
                args: a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Variable(v) => match universals.iter().position(|u| u == v) {
                            Some(i) => HeadArg::Universal(i),
                            None => HeadArg::Skolem {
                                func: Sym::new(&format!("f_{}_{}", base, base_name(*v).to_lowercase())),
                                args: frontier_idx.clone(),
                            },
                        },
                        Term::Constant(c) => HeadArg::Constant(*c),
                        _ => unreachable!(),
                    })
                    .collect(),
            })
            .collect();
        Ok(Rule { label, body, head, universals, existentials, frontier, sk_head })
    }

    pub fn is_generating(&self) -> bool {
        !self.existentials.is_empty()
    }

    pub fn skolem_head(&self) -> &[SkolemAtom] {
        &self.sk_head
    }

    /// Instantiates the skolemized head under a binding of the universals.
    pub fn instantiate_head(&self, binding: &[Term]) -> Vec<Atom> {
        debug_assert_eq!(binding.len(), self.universals.len());
        self.sk_head
            .iter()
            .map(|sa| Atom {
                pred: sa.pred,
                args: sa
                    .args
                    .iter()
                    .map(|a| match a {
                        HeadArg::Universal(i) => binding[*i].clone(),
                        HeadArg::Constant(c) => Term::Constant(*c),
                        HeadArg::Skolem { func, args } => {
                            Term::skolem(*func, args.iter().map(|i| binding[*i].clone()).collect())
                        }
                    })
                    .collect(),
            })
            .collect()
    }

    pub fn instantiate_body(&self, binding: &[Term]) -> Vec<Atom> {
        self.body.iter().map(|a| substitute(a, &self.universals, binding)).collect()
    }

    /// Atoms together with their predicates' arities.
    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.body.iter().chain(&self.head)
    }

    pub fn constants(&self) -> impl Iterator<Item = Sym> + '_ {
        self.atoms().flat_map(|a| &a.args).filter_map(|t| match t {
            Term::Constant(c) => Some(*c),
            _ => None,
        })
    }

    pub fn body_positions(&self, var: Sym) -> BTreeSet<Position> {
        positions(&self.body, var)
    }

    pub fn head_positions(&self, var: Sym) -> BTreeSet<Position> {
        positions(&self.head, var)
    }

    /// Sum of argument counts over body and head.
    pub fn size(&self) -> usize {
        self.atoms().map(|a| a.args.len()).sum()
    }

    /// Renders the skolemized head, e.g. `typeB(Z@2,f_r2_v(Z@2))`.
    pub fn skolem_head_display(&self) -> String {
        self.sk_head
            .iter()
            .map(|sa| {
                let args: Vec<String> = sa
                    .args
                    .iter()
                    .map(|a| match a {
                        HeadArg::Universal(i) => self.universals[*i].to_string(),
                        HeadArg::Constant(c) => c.to_string(),
                        HeadArg::Skolem { func, args } => format!(
                            "{func}({})",
                            args.iter().map(|i| self.universals[*i].to_string()).collect::<Vec<_>>().join(",")
                        ),
                    })
                    .collect();
                format!("{}({})", sa.pred, args.join(","))
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn positions(atoms: &[Atom], var: Sym) -> BTreeSet<Position> {
    let mut out = BTreeSet::new();
    for a in atoms {
        for (i, t) in a.args.iter().enumerate() {
            if *t == Term::Variable(var) {
                out.insert(Position { pred: a.pred, slot: i + 1 });
            }
        }
    }
    out
}

/// Replaces variables listed in `vars` by the matching entry of `values`.
pub fn substitute(a: &Atom, vars: &[Sym], values: &[Term]) -> Atom {
    Atom {
        pred: a.pred,
        args: a
            .args
            .iter()
            .map(|t| match t {
                Term::Variable(v) => match vars.iter().position(|x| x == v) {
                    Some(i) => values[i].clone(),
                    None => t.clone(),
                },
                _ => t.clone(),
            })
            .collect(),
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |atoms: &[Atom]| atoms.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ");
        write!(f, "{}: {} -> ", self.label, join(&self.body))?;
        if !self.existentials.is_empty() {
            let ex: Vec<_> = self.existentials.iter().map(|v| v.to_string()).collect();
            write!(f, "exists {} ", ex.join(","))?;
        }
        f.write_str(&join(&self.head))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub constants: BTreeSet<Sym>,
    pub schema: BTreeMap<Sym, usize>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Result<RuleSet, ModelError> {
        let mut schema = BTreeMap::new();
        let mut constants = BTreeSet::new();
        let mut owner: HashMap<Sym, usize> = HashMap::new();
        let mut labels = HashSet::new();
        for (ri, r) in rules.iter().enumerate() {
            if !labels.insert(r.label.clone()) {
                return Err(ModelError::DuplicateLabel(r.label.clone()));
            }
            for a in r.atoms() {
                check_arity(&mut schema, a)?;
                for v in a.vars() {
                    if let Some(&other) = owner.get(&v) {
                        if other != ri {
                            return Err(ModelError::NotStandardized {
                                var: v.to_string(),
                                first: rules[other].label.clone(),
                                second: r.label.clone(),
                            });
                        }
                    }
                    owner.insert(v, ri);
                }
            }
            constants.extend(r.constants());
        }
        Ok(RuleSet { rules, constants, schema })
    }

    pub fn empty() -> RuleSet {
        RuleSet { rules: Vec::new(), constants: BTreeSet::new(), schema: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// `||R||`: the number of argument slots over all rule atoms.
    pub fn size(&self) -> usize {
        self.rules.iter().map(Rule::size).sum()
    }

    pub fn rule(&self, label: &str) -> Option<usize> {
        self.rules.iter().position(|r| r.label == label)
    }

    /// Rule set made of the rules at the given indexes.
    pub fn subset(&self, idx: &[usize]) -> RuleSet {
        RuleSet::new(idx.iter().map(|&i| self.rules[i].clone()).collect()).expect("subset of a valid rule set")
    }

    pub fn is_datalog(&self) -> bool {
        self.rules.iter().all(|r| !r.is_generating())
    }
}

pub(crate) fn check_arity(schema: &mut BTreeMap<Sym, usize>, a: &Atom) -> Result<(), ModelError> {
    match schema.get(&a.pred) {
        Some(&n) if n != a.args.len() => Err(ModelError::Arity {
            pred: a.pred.to_string(),
            first: n,
            second: a.args.len(),
        }),
        Some(_) => Ok(()),
        None => {
            schema.insert(a.pred, a.args.len());
            Ok(())
        }
    }
}

/// Growing set of ground atoms. Each atom remembers the step that first
/// derived it (0 for database atoms). Atoms keep insertion order, and the
/// only way to drop atoms is [`Instance::truncate`], used by backtracking
/// searches to roll back to a checkpoint.
#[derive(Clone, Default)]
pub struct Instance {
    atoms: IndexMap<Atom, usize>,
    by_pred: HashMap<Sym, Vec<u32>>,
    by_arg: HashMap<(Sym, u16, Term), Vec<u32>>,
}

impl Instance {
    pub fn new() -> Instance {
        Instance::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Instance {
        let mut inst = Instance::new();
        for a in atoms {
            inst.insert(a, 0);
        }
        inst
    }

    /// Adds a ground atom; returns false if it was already present, in which
    /// case its step is left unchanged.
    pub fn insert(&mut self, atom: Atom, step: usize) -> bool {
        assert!(atom.is_ground(), "instances hold ground atoms only: {atom}");
        if self.atoms.contains_key(&atom) {
            return false;
        }
        let id = self.atoms.len() as u32;
        self.by_pred.entry(atom.pred).or_default().push(id);
        for (i, t) in atom.args.iter().enumerate() {
            self.by_arg.entry((atom.pred, i as u16, t.clone())).or_default().push(id);
        }
        self.atoms.insert(atom, step);
        true
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.atoms.contains_key(atom)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn step_of(&self, atom: &Atom) -> Option<usize> {
        self.atoms.get(atom).copied()
    }

    pub fn get(&self, id: u32) -> (&Atom, usize) {
        let (a, s) = self.atoms.get_index(id as usize).expect("atom id in range");
        (a, *s)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Atom, usize)> {
        self.atoms.iter().map(|(a, s)| (a, *s))
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.keys()
    }

    pub fn with_pred(&self, pred: Sym) -> &[u32] {
        self.by_pred.get(&pred).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn with_arg(&self, pred: Sym, slot: usize, term: &Term) -> &[u32] {
        self.by_arg.get(&(pred, slot as u16, term.clone())).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Drops every atom inserted after the first `len` ones.
    pub fn truncate(&mut self, len: usize) {
        while self.atoms.len() > len {
            let (atom, _) = self.atoms.pop().unwrap();
            let id = self.atoms.len() as u32;
            if let Some(v) = self.by_pred.get_mut(&atom.pred) {
                debug_assert_eq!(v.last(), Some(&id));
                v.pop();
            }
            for (i, t) in atom.args.into_iter().enumerate() {
                let key = (atom.pred, i as u16, t);
                if let Some(v) = self.by_arg.get_mut(&key) {
                    v.pop();
                    if v.is_empty() {
                        self.by_arg.remove(&key);
                    }
                }
            }
        }
    }

    /// `term(I)` in first-occurrence order.
    pub fn terms(&self) -> Vec<Term> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for a in self.atoms.keys() {
            for t in &a.args {
                if seen.insert(t.clone()) {
                    out.push(t.clone());
                }
            }
        }
        out
    }

    pub fn height(&self) -> u32 {
        self.atoms.keys().map(Atom::height).max().unwrap_or(1)
    }

    /// Rendered atoms, sorted.
    pub fn to_string_set(&self) -> Vec<String> {
        let mut v: Vec<String> = self.atoms.keys().map(|a| a.to_string()).collect();
        v.sort();
        v
    }

    /// Atoms as a sorted set, for order-insensitive comparison.
    pub fn atom_set(&self) -> BTreeSet<Atom> {
        self.atoms.keys().cloned().collect()
    }
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.atoms.len() == other.atoms.len() && self.atoms.keys().all(|a| other.atoms.contains_key(a))
    }
}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.atoms.keys()).finish()
    }
}
