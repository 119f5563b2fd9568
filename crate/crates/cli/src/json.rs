//! JSON shapes emitted by `--json`. Field order is fixed by the structs, so
//! identical inputs give identical output apart from `elapsed`.

use std::collections::BTreeMap;

use chase_sentinel::activeness::{Analysis, ChainWitness, NotProvenWitness, Verdict};
use chase_sentinel::bounded::{MembReport, MembVerdict};
use chase_sentinel::chase::{self, ChaseTrace};
use chase_sentinel::model::{base_name, RuleSet};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StepJson {
    pub rule: String,
    pub binding: BTreeMap<String, String>,
    pub added: Vec<String>,
    pub saturation: bool,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceJson {
    pub initial: Vec<String>,
    pub steps: Vec<StepJson>,
    pub outcome: String,
    pub result: Vec<String>,
}

impl TraceJson {
    pub fn new(t: &ChaseTrace, rules: &RuleSet) -> TraceJson {
        let steps = t
            .steps
            .iter()
            .map(|s| {
                let r = &rules.rules[s.rule];
                StepJson {
                    rule: r.label.clone(),
                    binding: r
                        .universals
                        .iter()
                        .zip(&s.binding)
                        .map(|(v, t)| (base_name(*v).to_string(), t.to_string()))
                        .collect(),
                    added: s.added.iter().map(|a| a.to_string()).collect(),
                    saturation: s.saturation,
                }
            })
            .collect();
        TraceJson {
            initial: t.initial.to_string_set(),
            steps,
            outcome: chase::describe(&t.outcome),
            result: t.result.to_string_set(),
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChainJson {
    pub renaming: String,
    pub chain: Vec<usize>,
    pub fallback_edges: Vec<(usize, usize)>,
    pub trace: TraceJson,
}

impl ChainJson {
    pub fn new(w: &ChainWitness, rules: &RuleSet) -> ChainJson {
        ChainJson {
            renaming: w.renaming.describe(),
            chain: w.chain.clone(),
            fallback_edges: w.fallback_edges.clone(),
            trace: TraceJson::new(&w.trace, rules),
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum WitnessJson {
    #[serde(rename_all = "camelCase")]
    Condition { explanation: String },
    #[serde(rename_all = "camelCase")]
    ActiveCycle { cycle: Vec<String>, sequence: ChainJson },
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisJson {
    pub schema_version: u32,
    pub input: String,
    pub input_digest: String,
    pub status: String,
    pub condition: String,
    pub k: usize,
    pub datalog_first: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub components: usize,
    pub components_skipped: usize,
    pub cycles_enumerated: usize,
    pub cycles_pruned: usize,
    pub cycles_inadmissible: usize,
    pub cycles_accepted: usize,
    pub cycles_checked: usize,
    pub databases_searched: usize,
    pub probes: u64,
    pub peak_atoms: usize,
    /// Milliseconds.
    pub elapsed: u128,
}

pub struct AnalysisMeta<'a> {
    pub input: &'a str,
    pub digest: &'a str,
    pub condition: &'a str,
    pub k: usize,
    pub datalog_first: bool,
}

impl AnalysisJson {
    pub fn new(a: &Analysis, rules: &RuleSet, m: AnalysisMeta<'_>) -> AnalysisJson {
        let (witness, reason) = match &a.verdict {
            Verdict::Terminating => (None, None),
            Verdict::NotProven(NotProvenWitness::Condition(w)) => {
                (Some(WitnessJson::Condition { explanation: w.render(rules) }), None)
            }
            Verdict::NotProven(NotProvenWitness::ActiveCycle { cycle, witness }) => (
                Some(WitnessJson::ActiveCycle {
                    cycle: cycle.rules().iter().map(|&r| rules.rules[r].label.clone()).collect(),
                    sequence: ChainJson::new(witness, rules),
                }),
                None,
            ),
            Verdict::ResourceExhausted(e) => (None, Some(e.clone())),
        };
        let s = &a.stats;
        AnalysisJson {
            schema_version: SCHEMA_VERSION,
            input: m.input.to_string(),
            input_digest: m.digest.to_string(),
            status: a.verdict.status().to_string(),
            condition: m.condition.to_string(),
            k: m.k,
            datalog_first: m.datalog_first,
            witness,
            reason,
            components: s.components,
            components_skipped: s.components_skipped,
            cycles_enumerated: s.cycles_enumerated,
            cycles_pruned: s.cycles_pruned,
            cycles_inadmissible: s.cycles_inadmissible,
            cycles_accepted: s.cycles_accepted,
            cycles_checked: s.cycles_checked,
            databases_searched: s.databases_searched,
            probes: s.probes,
            peak_atoms: s.peak_atoms,
            elapsed: s.elapsed.as_millis(),
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChaseJson {
    pub schema_version: u32,
    pub variant: String,
    pub applications: usize,
    pub trace: TraceJson,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundedJson {
    pub schema_version: u32,
    pub input_digest: String,
    pub delta: String,
    pub bound: u64,
    pub result: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<ChainJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub paths_checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
}

impl BoundedJson {
    pub fn new(r: &MembReport, rules: &RuleSet, digest: &str, delta: String) -> BoundedJson {
        let mut j = BoundedJson {
            schema_version: SCHEMA_VERSION,
            input_digest: digest.to_string(),
            delta,
            bound: r.bound,
            result: r.letter().to_string(),
            phase: None,
            path: None,
            witness: None,
            reason: None,
            paths_checked: r.paths_checked,
            caveat: r.caveat.clone(),
        };
        match &r.verdict {
            MembVerdict::Bounded { phase } => j.phase = Some(*phase),
            MembVerdict::Unbounded { path, witness } => {
                j.path = Some(path.iter().map(|&i| rules.rules[i].label.clone()).collect());
                j.witness = Some(ChainJson::new(witness, rules));
            }
            MembVerdict::ResourceExhausted(e) => j.reason = Some(e.clone()),
        }
        j
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CycleJson {
    pub cycle: Vec<String>,
    pub relevant: bool,
    pub condition_holds: Option<bool>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AcyclicityJson {
    pub condition: String,
    pub holds: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}
