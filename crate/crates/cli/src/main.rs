mod json;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use chase_sentinel::acyclicity::{self, Check, Condition};
use chase_sentinel::activeness::{self, KSafeOptions, NotProvenWitness, SearchOptions, Verdict};
use chase_sentinel::bounded::{self, BoundFunction, BoundedOptions, MembVerdict};
use chase_sentinel::chase::{self, ChaseBudget, Outcome, Strategy};
use chase_sentinel::cycles::{self, KCycle};
use chase_sentinel::deps;
use chase_sentinel::dlgp::{self, SourceDocument};
use chase_sentinel::gen::{self, GenParams, HeadShape};
use chase_sentinel::{Instance, RuleSet};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crate::json::{AnalysisJson, AnalysisMeta, BoundedJson, ChaseJson, TraceJson, SCHEMA_VERSION};

const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "chase-sentinel", version, about = "Restricted-chase termination analysis for existential rules")]
struct Cli {
    /// Worker threads for cycle and path checks.
    #[arg(long, global = true, env = "CHASE_SENTINEL_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide k-safe membership under an acyclicity condition.
    Analyze(AnalyzeArgs),
    /// Run a chase variant on a database and print the derivation.
    Chase(ChaseArgs),
    /// Test the skolem acyclicity conditions.
    Check(CheckArgs),
    /// List the k-cycles of the dependency graph.
    Cycles(CyclesArgs),
    /// Decide whether the restricted chase height stays within a bound.
    Bounded(BoundedArgs),
    /// Write a random rule set.
    Generate(GenerateArgs),
    /// Membership grid over every .dlgp file of a directory.
    Report(ReportArgs),
    /// Print the rule dependency graph in DOT format.
    Dot { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum CondArg {
    Wa,
    Ja,
    Agrd,
    Mfa,
}

impl From<CondArg> for Condition {
    fn from(c: CondArg) -> Condition {
        match c {
            CondArg::Wa => Condition::Wa,
            CondArg::Ja => Condition::Ja,
            CondArg::Agrd => Condition::Agrd,
            CondArg::Mfa => Condition::Mfa,
        }
    }
}

#[derive(Args, Clone)]
struct Budget {
    /// Homomorphism probes per cycle.
    #[arg(long, default_value_t = 1_000_000)]
    budget_probes: u64,
    /// Wall-clock seconds per cycle.
    #[arg(long, default_value_t = 60.0)]
    budget_seconds: f64,
    /// Atoms per instance.
    #[arg(long, default_value_t = 100_000)]
    budget_atoms: usize,
}

impl Budget {
    fn search(&self, datalog_first: bool) -> SearchOptions {
        SearchOptions {
            datalog_first,
            max_probes: self.budget_probes,
            wall_clock: Some(Duration::from_secs_f64(self.budget_seconds.max(0.0))),
            max_atoms: self.budget_atoms,
            ..SearchOptions::default()
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    file: PathBuf,
    #[arg(long, value_enum)]
    condition: CondArg,
    #[arg(long)]
    k: usize,
    /// Apply Datalog rules before generating ones.
    #[arg(long)]
    datalog_first: bool,
    #[command(flatten)]
    budget: Budget,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Skolem,
    Restricted,
    DatalogFirst,
}

#[derive(Args)]
struct ChaseArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "restricted")]
    variant: Variant,
    /// Facts to start from; defaults to the facts of the rule file.
    #[arg(long)]
    database: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    max_steps: usize,
    #[arg(long)]
    max_height: Option<u32>,
    /// Stop the skolem chase at the first cyclic term.
    #[arg(long)]
    detect_cyclic: bool,
    /// One JSON object with the whole trace.
    #[arg(long, conflicts_with = "jsonl")]
    json: bool,
    /// One JSON record per step.
    #[arg(long)]
    jsonl: bool,
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    /// Defaults to all four conditions.
    #[arg(long, value_enum)]
    condition: Vec<CondArg>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CyclesArgs {
    file: PathBuf,
    #[arg(long)]
    k: usize,
    /// Also report whether the cycle's rules satisfy this condition.
    #[arg(long, value_enum)]
    condition: Option<CondArg>,
    #[arg(long, default_value_t = 10_000)]
    max_cycles: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BoundedArgs {
    file: PathBuf,
    /// `const:c`, `linear:a,b` or `exptower:k`.
    #[arg(long)]
    delta: BoundFunction,
    #[command(flatten)]
    budget: Budget,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Chained,
    Discrete,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    preset: PresetArg,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Markdown,
}

#[derive(Args)]
struct ReportArgs {
    dir: PathBuf,
    /// Conditions to tabulate; defaults to all four.
    #[arg(long, value_enum, value_delimiter = ',')]
    conditions: Vec<CondArg>,
    /// Inclusive range `a..b` or a single level.
    #[arg(long, default_value = "0..2")]
    k: String,
    #[arg(long)]
    datalog_first: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    #[command(flatten)]
    budget: Budget,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} workers: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Chase(a) => run_chase(a),
        Command::Check(a) => check(a),
        Command::Cycles(a) => list_cycles(a),
        Command::Bounded(a) => run_bounded(a),
        Command::Generate(a) => generate(a),
        Command::Report(a) => report(a),
        Command::Dot { file } => load(&file).map(|(doc, _)| {
            print!("{}", deps::dependency_graph(&doc.rules).to_dot(&doc.rules));
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn load(path: &Path) -> Result<(SourceDocument, String), Failure> {
    let bytes = fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let doc = dlgp::parse(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    Ok((doc, digest))
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn verdict_code(v: &Verdict) -> u8 {
    match v {
        Verdict::Terminating => 0,
        Verdict::NotProven(_) => 1,
        Verdict::ResourceExhausted(_) => 2,
    }
}

fn analyze(a: AnalyzeArgs) -> Result<u8, Failure> {
    let (doc, digest) = load(&a.file)?;
    let rules = &doc.rules;
    let cond: Condition = a.condition.into();
    let opts = KSafeOptions { search: a.budget.search(a.datalog_first), ..KSafeOptions::new(a.k, cond) };
    let analysis = activeness::k_safe(rules, &opts);
    if a.json {
        let meta = AnalysisMeta {
            input: &a.file.display().to_string(),
            digest: &digest,
            condition: cond.name(),
            k: a.k,
            datalog_first: a.datalog_first,
        };
        print_json(&AnalysisJson::new(&analysis, rules, meta))?;
    } else {
        print!("{}", analysis_text(&analysis, rules, cond, a.k));
    }
    Ok(verdict_code(&analysis.verdict))
}

fn analysis_text(a: &activeness::Analysis, rules: &RuleSet, cond: Condition, k: usize) -> String {
    let mut out = String::new();
    let s = &a.stats;
    let _ = writeln!(out, "{}-safe under {cond}: {}", k, a.verdict.status());
    match &a.verdict {
        Verdict::Terminating => {}
        Verdict::NotProven(NotProvenWitness::Condition(w)) => {
            let _ = writeln!(out, "{cond} fails: {}", w.render(rules));
        }
        Verdict::NotProven(NotProvenWitness::ActiveCycle { cycle, witness }) => {
            let _ = writeln!(out, "active cycle {}", cycle.display(rules));
            let _ = writeln!(out, "renaming: {}", witness.renaming.describe());
            let chain: Vec<String> = witness.chain.iter().map(|p| p.to_string()).collect();
            let _ = writeln!(out, "chain through steps {}", chain.join(" -> "));
            out.push_str(&witness.trace.render(rules));
        }
        Verdict::ResourceExhausted(e) => {
            let _ = writeln!(out, "reason: {e}");
        }
    }
    let _ = writeln!(
        out,
        "components {} (skipped {}), cycles enumerated {}, pruned {}, inadmissible {}, accepted {}, checked {}",
        s.components,
        s.components_skipped,
        s.cycles_enumerated,
        s.cycles_pruned,
        s.cycles_inadmissible,
        s.cycles_accepted,
        s.cycles_checked
    );
    let _ = writeln!(
        out,
        "databases {}, probes {}, peak atoms {}, elapsed {} ms",
        s.databases_searched,
        s.probes,
        s.peak_atoms,
        s.elapsed.as_millis()
    );
    out
}

fn run_chase(a: ChaseArgs) -> Result<u8, Failure> {
    let (doc, _) = load(&a.file)?;
    let facts = match &a.database {
        Some(p) => load(p)?.0.facts,
        None => doc.facts.clone(),
    };
    let i0 = Instance::from_atoms(facts);
    let mut budget = ChaseBudget::steps(a.max_steps);
    if let Some(h) = a.max_height {
        budget = budget.with_height(h);
    }
    let rules = &doc.rules;
    let (trace, name) = match a.variant {
        Variant::Skolem => (chase::skolem_chase(&i0, rules, &budget, a.detect_cyclic), "skolem"),
        Variant::Restricted => (chase::restricted_chase(&i0, rules, &budget, Strategy::NewestFirst), "restricted"),
        Variant::DatalogFirst => {
            (chase::restricted_chase(&i0, rules, &budget, Strategy::DatalogFirst), "datalog-first")
        }
    };
    if a.json {
        print_json(&ChaseJson {
            schema_version: SCHEMA_VERSION,
            variant: name.into(),
            applications: trace.applications(),
            trace: TraceJson::new(&trace, rules),
        })?;
    } else if a.jsonl {
        let t = TraceJson::new(&trace, rules);
        let stdout = std::io::stdout();
        let mut w = stdout.lock();
        for (i, s) in t.steps.iter().enumerate() {
            let rec = serde_json::json!({ "step": i + 1, "rule": s.rule, "bindings": s.binding, "added": s.added });
            writeln!(w, "{rec}")?;
        }
    } else {
        print!("{}", trace.render(rules));
        println!("{} applications", trace.applications());
    }
    Ok(match trace.outcome {
        Outcome::Saturated => 0,
        Outcome::CyclicTermFound(_) => 1,
        Outcome::BudgetExhausted(_) => 2,
    })
}

fn check(a: CheckArgs) -> Result<u8, Failure> {
    let (doc, _) = load(&a.file)?;
    let rules = &doc.rules;
    let conds: Vec<Condition> = if a.condition.is_empty() {
        Condition::ALL.to_vec()
    } else {
        a.condition.iter().map(|&c| c.into()).collect()
    };
    let budget = acyclicity::default_mfa_budget();
    let mut rows = Vec::new();
    let (mut failed, mut unknown) = (false, false);
    for c in conds {
        let res = acyclicity::check(c, rules, &budget);
        let (holds, witness) = match &res {
            Check::Holds => (Some(true), None),
            Check::Fails(w) => (Some(false), Some(w.render(rules))),
            Check::Unknown => (None, None),
        };
        failed |= holds == Some(false);
        unknown |= holds.is_none();
        rows.push(json::AcyclicityJson { condition: c.name().into(), holds, witness });
    }
    if a.json {
        print_json(&serde_json::json!({ "schemaVersion": SCHEMA_VERSION, "conditions": rows }))?;
    } else {
        for r in &rows {
            match (r.holds, &r.witness) {
                (Some(true), _) => println!("{}: holds", r.condition),
                (Some(false), Some(w)) => println!("{}: fails, witness {w}", r.condition),
                (Some(false), None) => println!("{}: fails", r.condition),
                (None, _) => println!("{}: unknown (chase budget exhausted)", r.condition),
            }
        }
    }
    Ok(if failed {
        1
    } else if unknown {
        2
    } else {
        0
    })
}

fn list_cycles(a: CyclesArgs) -> Result<u8, Failure> {
    if a.k == 0 {
        return Err(Failure("--k must be at least 1".into()));
    }
    let (doc, _) = load(&a.file)?;
    let rules = &doc.rules;
    let g = deps::dependency_graph(rules);
    let comps = acyclicity::connected_components(&g);
    let e = cycles::enumerate_k_cycles(a.k, &comps, a.max_cycles);
    let budget = acyclicity::default_mfa_budget();
    let label = |c: &KCycle| c.rules().iter().map(|&r| rules.rules[r].label.clone()).collect::<Vec<_>>();
    let rows: Vec<json::CycleJson> = e
        .cycles
        .iter()
        .map(|c| json::CycleJson {
            cycle: label(c),
            relevant: cycles::is_relevant(c.rules(), &g),
            condition_holds: a.condition.map(|cond| acyclicity::cycle_function(cond.into(), rules, c.rules(), &budget)),
        })
        .collect();
    if a.json {
        print_json(&serde_json::json!({
            "schemaVersion": SCHEMA_VERSION,
            "k": a.k,
            "truncated": e.truncated,
            "cycles": rows,
        }))?;
    } else {
        for r in &rows {
            let mut line = format!("({}) {}", r.cycle.join(","), if r.relevant { "relevant" } else { "pruned" });
            if let Some(h) = r.condition_holds {
                line.push_str(if h { ", condition holds" } else { ", condition fails" });
            }
            println!("{line}");
        }
        if e.truncated {
            println!("stopped after {} cycles", a.max_cycles);
        }
    }
    Ok(0)
}

fn run_bounded(a: BoundedArgs) -> Result<u8, Failure> {
    let (doc, digest) = load(&a.file)?;
    let rules = &doc.rules;
    let opts = BoundedOptions { search: a.budget.search(false), ..BoundedOptions::default() };
    let r = bounded::memb_check(rules, a.delta, &opts);
    if a.json {
        print_json(&BoundedJson::new(&r, rules, &digest, a.delta.to_string()))?;
    } else {
        println!("{}-bounded (bound {}): {}", a.delta, r.bound, r.letter());
        match &r.verdict {
            MembVerdict::Bounded { phase } => println!("decided in phase {phase}"),
            MembVerdict::Unbounded { path, witness } => {
                println!("path {} reaches height {}", KCycle(path.clone()).display(rules), r.bound + 1);
                println!("renaming: {}", witness.renaming.describe());
                print!("{}", witness.trace.render(rules));
            }
            MembVerdict::ResourceExhausted(e) => println!("reason: {e}"),
        }
        if let Some(c) = &r.caveat {
            println!("note: {c}");
        }
    }
    Ok(match r.verdict {
        MembVerdict::Bounded { .. } => 0,
        MembVerdict::Unbounded { .. } => 1,
        MembVerdict::ResourceExhausted(_) => 2,
    })
}

fn generate(a: GenerateArgs) -> Result<u8, Failure> {
    let shape = match a.preset {
        PresetArg::Chained => HeadShape::Chained,
        PresetArg::Discrete => HeadShape::Discrete,
    };
    let rules = gen::generate(&GenParams::preset(shape, a.count, a.seed))?;
    let text = dlgp::serialize(&SourceDocument::new(Vec::new(), rules));
    match a.output {
        Some(p) => fs::write(&p, text).map_err(|e| Failure(format!("{}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn parse_k_range(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure(format!("bad --k {s:?}; expected a..b or a single level"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let v: usize = s.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

const REPORT_HEADER: [&str; 7] = ["file", "rules", "condition", "k", "status", "cyclesChecked", "cyclesPruned"];

fn report(a: ReportArgs) -> Result<u8, Failure> {
    let ks = parse_k_range(&a.k)?;
    let conds: Vec<Condition> = if a.conditions.is_empty() {
        Condition::ALL.to_vec()
    } else {
        a.conditions.iter().map(|&c| c.into()).collect()
    };
    let mut files: Vec<PathBuf> = fs::read_dir(&a.dir)
        .map_err(|e| Failure(format!("{}: {e}", a.dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "dlgp"))
        .collect();
    files.sort();

    let mut rows: Vec<[String; 7]> = Vec::new();
    for f in &files {
        let name = f.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let doc = match fs::read_to_string(f).map_err(|e| e.to_string()).and_then(|t| dlgp::parse(&t).map_err(|e| e.to_string())) {
            Ok(d) => d,
            Err(e) => {
                eprintln!("warning: {name}: {e}");
                rows.push([name, String::new(), String::new(), String::new(), "ParseError".into(), String::new(), String::new()]);
                continue;
            }
        };
        for &c in &conds {
            for &k in &ks {
                let opts = KSafeOptions { search: a.budget.search(a.datalog_first), ..KSafeOptions::new(k, c) };
                let an = activeness::k_safe(&doc.rules, &opts);
                rows.push([
                    name.clone(),
                    doc.rules.len().to_string(),
                    c.name().into(),
                    k.to_string(),
                    an.verdict.status().into(),
                    an.stats.cycles_checked.to_string(),
                    an.stats.cycles_pruned.to_string(),
                ]);
            }
        }
    }

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match a.format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(REPORT_HEADER)?;
            for r in &rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        TableFormat::Markdown => {
            writeln!(out, "| {} |", REPORT_HEADER.join(" | "))?;
            writeln!(out, "|{}", "---|".repeat(REPORT_HEADER.len()))?;
            for r in &rows {
                writeln!(out, "| {} |", r.join(" | "))?;
            }
        }
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_ranges() {
        assert_eq!(parse_k_range("0..2").ok().unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_k_range("3").ok().unwrap(), vec![3]);
        assert!(parse_k_range("2..1").is_err());
        assert!(parse_k_range("x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
