//! Small regression rule sets used by tests, the acceptance suite and the CLI
//! documentation. The `.dlgp` sources live in the crate's `fixtures/` folder.

use crate::dlgp;
use crate::model::RuleSet;

pub const SIGNALS: &str = include_str!("../fixtures/signals.dlgp");
pub const TRUSTED_SIGNALS: &str = include_str!("../fixtures/trusted_signals.dlgp");
pub const SUCCESSOR: &str = include_str!("../fixtures/successor.dlgp");
pub const GUARDED_SUCCESSOR: &str = include_str!("../fixtures/guarded_successor.dlgp");
pub const ROTATION: &str = include_str!("../fixtures/rotation.dlgp");
pub const RENAMING: &str = include_str!("../fixtures/renaming.dlgp");
pub const LAB_ACCESS: &str = include_str!("../fixtures/lab_access.dlgp");
pub const FAIRNESS: &str = include_str!("../fixtures/fairness.dlgp");

/// Every fixture by file stem.
pub const ALL: &[(&str, &str)] = &[
    ("signals", SIGNALS),
    ("trusted_signals", TRUSTED_SIGNALS),
    ("successor", SUCCESSOR),
    ("guarded_successor", GUARDED_SUCCESSOR),
    ("rotation", ROTATION),
    ("renaming", RENAMING),
    ("lab_access", LAB_ACCESS),
    ("fairness", FAIRNESS),
];

fn load(text: &str) -> RuleSet {
    dlgp::parse(text).expect("fixture parses").rules
}

/// `typeB → ∃u typeA(x,u), typeA(u,x)` and its round-trip rule.
pub fn signals() -> RuleSet {
    load(SIGNALS)
}
pub fn trusted_signals() -> RuleSet {
    load(TRUSTED_SIGNALS)
}
/// `e(x1,x2) → ∃z e(x2,z)`.
pub fn successor() -> RuleSet {
    load(SUCCESSOR)
}
pub fn guarded_successor() -> RuleSet {
    load(GUARDED_SUCCESSOR)
}
pub fn rotation() -> RuleSet {
    load(ROTATION)
}
pub fn renaming() -> RuleSet {
    load(RENAMING)
}
pub fn lab_access() -> RuleSet {
    load(LAB_ACCESS)
}
pub fn fairness() -> RuleSet {
    load(FAIRNESS)
}

/// Rule indexes for the given labels, panicking on unknown labels.
pub fn path(rs: &RuleSet, labels: &[&str]) -> Vec<usize> {
    labels
        .iter()
        .map(|l| rs.rule(l).unwrap_or_else(|| panic!("no rule labelled {l}")))
        .collect()
}
