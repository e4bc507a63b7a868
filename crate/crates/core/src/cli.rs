//! The `vcdlab` command line: argument parsing and command dispatch.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::definability::{breadth, min_scheme_count, DefinabilityContext};
use crate::definer::{lemma31_define, zero_type_partition};
use crate::error::{Error, Result};
use crate::gallery::{make_grid_order, make_hypercube_poset, random_width_poset, GridOrderSpec, HypercubePosetSpec};
use crate::io::ModelFile;
use crate::limits::Limits;
use crate::logic::{parse_formula, satisfier_set_with, Formula, FormulaSet, Term, Vocabulary};
use crate::model::{Element, FiniteStructure, ORDER};
use crate::report::RunReport;
use crate::symmetry::{automorphism_generators, orbits};
use crate::typespace::{enumerate_types, realize_type, ParamSet};
use crate::verify::{run_suite, Suite};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CLAIM_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vcdlab", version, about = "Definability of types and VC density on finite partial orders")]
pub struct Cli {
    /// Print the full JSON report instead of the text summary.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a structure file.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
        /// Output path (default: stdout).
        #[arg(long, short, global = true)]
        out: Option<PathBuf>,
    },
    /// Measure a structure.
    Analyze {
        file: PathBuf,
        #[arg(long, value_enum)]
        what: Measure,
        /// Parameters for `breadth` and stabilized points for `aut`.
        #[arg(long = "B")]
        b: Option<String>,
    },
    /// Def-sets, scheme-count bound and certificates for types over B.
    Definability(DefinabilityArgs),
    /// Run a verification suite.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the recursive definer.
    Lemma31(Lemma31Args),
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    Grid {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
    },
    Hypercube {
        #[arg(long)]
        d: usize,
    },
    Random {
        #[arg(long)]
        width: usize,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Measure {
    Width,
    Breadth,
    Zerotypes,
    Aut,
}

#[derive(Debug, Args)]
pub struct DefinabilityArgs {
    file: PathBuf,
    /// `order`, `order-eq`, or `;`-separated formulas in `x` and `y`.
    #[arg(long, default_value = "order")]
    delta: String,
    /// A set name from the file, `all`, `none`, or a comma list of elements.
    #[arg(long = "B", default_value = "B")]
    b: String,
    #[arg(long)]
    d: usize,
    /// Restrict to the type of this element.
    #[arg(long)]
    type_of: Option<String>,
    /// Realizers whose types are enumerated (default: the set `A` when the
    /// file has one, else every element).
    #[arg(long)]
    over: Option<String>,
}

#[derive(Debug, Args)]
pub struct Lemma31Args {
    file: PathBuf,
    /// Formula in `x`.
    #[arg(long)]
    psi: String,
    /// `Δ` as for `definability --delta`.
    #[arg(long, default_value = "order")]
    phi: String,
    #[arg(long)]
    c: String,
    #[arg(long = "B", default_value = "B")]
    b: String,
    #[arg(long)]
    d: usize,
}

/// Parses arguments, runs the command and prints the report. Returns the
/// process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    let limits = Limits::from_env();
    let start = Instant::now();
    match execute(&cli.command, &limits) {
        Ok(Output::Model(text)) => {
            emit(&text);
            EXIT_PASS
        }
        Ok(Output::Report(mut report)) => {
            report.wall_time_ms = start.elapsed().as_millis() as u64;
            if cli.json {
                emit(&(report.to_json() + "\n"));
            } else {
                emit(&report.to_text());
            }
            if report.passed {
                EXIT_PASS
            } else {
                EXIT_CLAIM_FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Replay(_) => EXIT_CLAIM_FAILURE,
                _ => EXIT_USAGE,
            }
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

pub enum Output {
    /// A model file written to stdout.
    Model(String),
    Report(RunReport),
}

pub fn execute(cmd: &Command, limits: &Limits) -> Result<Output> {
    match cmd {
        Command::Gen { kind, out } => {
            let file = cmd_gen(kind, limits)?;
            match out {
                None => Ok(Output::Model(file.to_json())),
                Some(path) => {
                    file.write(path)?;
                    let mut r = RunReport::new("gen");
                    r.input("spec", format!("{kind:?}").as_bytes());
                    r.line(format!("wrote {} ({} elements)", path.display(), file.universe));
                    r.findings = json!({ "universe": file.universe, "sets": file.sets });
                    Ok(Output::Report(r))
                }
            }
        }
        Command::Analyze { file, what, b } => cmd_analyze(file, *what, b.as_deref(), limits).map(Output::Report),
        Command::Definability(args) => cmd_definability(args, limits).map(Output::Report),
        Command::Verify { suite, seed } => cmd_verify(suite, *seed, limits).map(Output::Report),
        Command::Lemma31(args) => cmd_lemma31(args, limits).map(Output::Report),
    }
}

pub fn cmd_gen(kind: &GenKind, limits: &Limits) -> Result<ModelFile> {
    match *kind {
        GenKind::Grid { n, k } => {
            let g = make_grid_order(GridOrderSpec { n, k })?;
            let sets = BTreeMap::from([("B".to_string(), g.params.clone()), ("A".to_string(), g.realizers.clone())]);
            Ok(ModelFile::from_structure(&g.structure, sets))
        }
        GenKind::Hypercube { d } => {
            let h = make_hypercube_poset(HypercubePosetSpec { d })?;
            let sets = BTreeMap::from([
                ("B".to_string(), h.hyperplanes.clone()),
                ("H".to_string(), h.hyperplanes.clone()),
                ("A".to_string(), h.points.clone()),
                ("P".to_string(), h.points.clone()),
            ]);
            Ok(ModelFile::from_structure(&h.structure, sets))
        }
        GenKind::Random { width, size, seed } => {
            let s = random_width_poset(width, size, seed, limits)?;
            Ok(ModelFile::from_structure(&s, BTreeMap::new()))
        }
    }
}

struct Loaded {
    file: ModelFile,
    structure: FiniteStructure,
    bytes: Vec<u8>,
}

fn load(path: &PathBuf) -> Result<Loaded> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Io(format!("{}: not UTF-8", path.display())))?;
    let file = ModelFile::parse(&text)?;
    let structure = file.to_structure()?;
    Ok(Loaded { file, structure, bytes })
}

/// An element index or label.
pub fn parse_element(s: &FiniteStructure, text: &str) -> Result<Element> {
    let text = text.trim().trim_start_matches('@');
    let e = match text.parse::<usize>() {
        Ok(e) => e,
        Err(_) => *s
            .labels()
            .get(text)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown element {text:?}")))?,
    };
    s.check_element(e)?;
    Ok(e)
}

/// A named set from the file, `all`, `none`, or a comma list of elements.
pub fn parse_set(file: &ModelFile, s: &FiniteStructure, text: &str) -> Result<Vec<Element>> {
    let text = text.trim();
    let mut out = if let Some(set) = file.sets.get(text) {
        set.clone()
    } else if text == "all" {
        (0..s.universe_size()).collect()
    } else if text == "none" || text.is_empty() {
        Vec::new()
    } else if !text.contains(',') && text.parse::<usize>().is_err() && !s.labels().contains_key(text) {
        return Err(Error::InvalidArgument(format!("unknown set {text:?}")));
    } else {
        text.split(',').map(|t| parse_element(s, t)).collect::<Result<_>>()?
    };
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// `order`, `order-eq`, or `;`-separated formulas with free variables among
/// `x` and `y`.
pub fn parse_delta(s: &FiniteStructure, text: &str) -> Result<FormulaSet> {
    match text.trim() {
        "order" => return Ok(FormulaSet::order()),
        "order-eq" => return Ok(FormulaSet::order_and_equality()),
        _ => {}
    }
    let vocab = Vocabulary::of(s);
    let formulas = text
        .split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let f = parse_formula(t, &vocab)?;
            let free = f.free_vars();
            if free.iter().any(|v| v != "x" && v != "y") {
                return Err(Error::FreeVariables {
                    expected: vec!["x".into(), "y".into()],
                    found: free.into_iter().collect(),
                });
            }
            Ok(f)
        })
        .collect::<Result<Vec<_>>>()?;
    if formulas.is_empty() {
        return Err(Error::InvalidArgument("empty formula set".into()));
    }
    Ok(FormulaSet::new(&["x"], &["y"], formulas))
}

fn show(s: &FiniteStructure, e: Element) -> String {
    s.label_of(e).map_or(e.to_string(), str::to_string)
}

pub fn cmd_analyze(path: &PathBuf, what: Measure, b: Option<&str>, limits: &Limits) -> Result<RunReport> {
    let m = load(path)?;
    let s = &m.structure;
    let mut r = RunReport::new("analyze");
    r.input("file", &m.bytes);
    match what {
        Measure::Width => {
            let p = s.poset(ORDER)?;
            let antichain = p.maximum_antichain(limits)?;
            r.line(format!("width {}", antichain.len()));
            r.findings = json!({ "width": antichain.len() });
            r.certificates = json!({ "maximum_antichain": antichain });
        }
        Measure::Breadth => {
            s.poset(ORDER)?;
            let b = parse_set(&m.file, s, b.unwrap_or("all"))?;
            let family: Vec<Vec<Element>> = b
                .iter()
                .map(|&e| satisfier_set_with(s, &Formula::less(Term::var("x"), Term::Const(e)), "x", limits))
                .collect::<Result<_>>()?;
            let report = breadth(&family, limits.breadth_cap);
            report.replay()?;
            match report.breadth {
                Some(d) => r.line(format!("breadth of {{x < b : b in B}} is {d} ({} sets)", family.len())),
                None => r.line(format!("breadth exceeds cap {}", limits.breadth_cap)),
            }
            r.findings = json!({ "breadth": report.breadth, "family_size": family.len(), "params": b });
            r.certificates = json!({ "witnesses": report.witnesses });
        }
        Measure::Zerotypes => {
            let p = s.poset(ORDER)?;
            let part = zero_type_partition(&p, limits)?;
            r.line(format!("{} classes over the empty set", part.len()));
            for (c, inv) in part.classes.iter().zip(&part.invariants) {
                let names: Vec<String> = c.iter().map(|&e| show(s, e)).collect();
                r.line(format!("  size {} (down {}, up {}): {}", c.len(), inv.down, inv.up, names.join(" ")));
            }
            r.findings = json!({ "classes": part.classes, "sizes": part.sizes(), "invariants": part.invariants });
        }
        Measure::Aut => {
            let fixed = parse_set(&m.file, s, b.unwrap_or("none"))?;
            let gens = automorphism_generators(s, &fixed, limits)?;
            let orb = orbits(s, &fixed, limits)?;
            r.line(format!(
                "{} generators fixing {:?}, {} orbits",
                gens.len(),
                fixed,
                orb.orbits.len()
            ));
            r.findings = json!({ "fixed": fixed, "orbits": orb.orbits });
            r.certificates = json!({ "generators": gens });
        }
    }
    Ok(r)
}

pub fn cmd_definability(args: &DefinabilityArgs, limits: &Limits) -> Result<RunReport> {
    let m = load(&args.file)?;
    let s = &m.structure;
    let delta = parse_delta(s, &args.delta)?;
    let b = parse_set(&m.file, s, &args.b)?;
    let params = ParamSet::elements(&b)?;
    let mut r = RunReport::new("definability");
    r.input("file", &m.bytes);
    r.input("args", format!("delta={} B={:?} d={} type_of={:?} over={:?}", args.delta, b, args.d, args.type_of, args.over).as_bytes());

    let ctx = DefinabilityContext::new(s, &delta, &params, limits)?;
    let over = match (&args.over, m.file.sets.contains_key("A")) {
        (Some(o), _) => parse_set(&m.file, s, o)?,
        (None, true) => m.file.sets["A"].clone(),
        (None, false) => (0..s.universe_size()).collect(),
    };
    let types = match &args.type_of {
        Some(a) => vec![realize_type(s, &delta, &[parse_element(s, a)?], &params, limits)?],
        None => enumerate_types(s, &delta, &params, Some(&over), limits)?,
    };
    let defs = ctx.def_sets(&types, args.d)?;
    let tuples = ctx.tuples(args.d)?;
    let mut findings = Vec::new();
    let mut certificates = Vec::new();
    for (p, def) in types.iter().zip(&defs) {
        let realizers: Vec<String> = match (&args.type_of, p.realizers()) {
            (Some(a), []) => vec![a.clone()],
            (_, rs) => rs.iter().map(|&e| show(s, e)).collect(),
        };
        let shown: Vec<Vec<Vec<Element>>> = def.iter().map(|t| params.resolve(t)).collect();
        r.line(format!(
            "type of {}: Def has {} of {} tuples{}",
            realizers.join(","),
            def.len(),
            tuples.len(),
            if def.is_empty() { String::new() } else { format!(", first {:?}", shown[0]) }
        ));
        findings.push(json!({ "trace": p, "def_set": shown }));
        // One replayable certificate per tuple: invariance for the first
        // admissible tuple, a violation for every rejected one.
        let mut per_type = Vec::new();
        for t in &tuples {
            let admissible = def.binary_search(t).is_ok();
            if admissible && def.first() != Some(t) {
                continue;
            }
            let v = ctx.verdict(p, t)?;
            v.replay(s, p, &params)?;
            per_type.push(v);
        }
        certificates.push(per_type);
    }
    let bound = if args.type_of.is_none() {
        let bound = min_scheme_count(types.iter().cloned().zip(defs).collect(), args.d);
        r.line(match bound.lower_bound {
            Some(v) => format!("{} types; min scheme count with d = {}: {v}", types.len(), args.d),
            None => format!("{} types; some type has empty Def with d = {}: no scheme count", types.len(), args.d),
        });
        Some(bound)
    } else {
        None
    };
    r.findings = json!({
        "d": args.d,
        "params": b,
        "types": findings,
        "lower_bound": bound.as_ref().map(|b| b.lower_bound),
        "schemes": bound,
    });
    r.certificates = json!(certificates);
    Ok(r)
}

pub fn cmd_verify(suite: &str, seed: u64, limits: &Limits) -> Result<RunReport> {
    let suite: Suite = suite.parse()?;
    let mut r = RunReport::new("verify");
    r.seed = Some(seed);
    r.input("suite", format!("{suite:?}").as_bytes());
    let outcomes = run_suite(suite, seed, limits);
    for o in &outcomes {
        r.line(o.line());
        for f in &o.failures {
            r.line(format!("      {f}"));
        }
    }
    r.passed = outcomes.iter().all(|o| o.passed);
    let passed = outcomes.iter().filter(|o| o.passed).count();
    r.line(format!("{passed}/{} criteria passed", outcomes.len()));
    r.findings = json!(outcomes
        .iter()
        .map(|o| json!({ "id": o.id, "title": o.title, "passed": o.passed, "measured": o.measured, "time_budget": o.time_budget }))
        .collect::<Vec<_>>());
    r.certificates = json!(outcomes
        .iter()
        .map(|o| json!({ "id": o.id, "failures": o.failures }))
        .collect::<Vec<_>>());
    Ok(r)
}

pub fn cmd_lemma31(args: &Lemma31Args, limits: &Limits) -> Result<RunReport> {
    let m = load(&args.file)?;
    let s = &m.structure;
    let psi = parse_formula(&args.psi, &Vocabulary::of(s))?;
    let delta = parse_delta(s, &args.phi)?;
    let c = parse_element(s, &args.c)?;
    let b = parse_set(&m.file, s, &args.b)?;
    let params = ParamSet::elements(&b)?;
    let mut r = RunReport::new("lemma31");
    r.input("file", &m.bytes);
    r.input(
        "args",
        format!("psi={psi} phi={} c={c} B={b:?} d={}", args.phi, args.d).as_bytes(),
    );
    let res = lemma31_define(s, &psi, "x", &delta, c, &params, args.d, limits)?;
    r.line(format!(
        "{} formulas, {} parameters (bound {}), depth {}, |psi(M)| per level {:?}",
        res.formulas.len(),
        res.param_count,
        res.param_bound,
        res.depth,
        res.psi_sizes
    ));
    for (i, f) in res.formulas.iter().enumerate() {
        r.line(format!("  phi_{i}: {f}"));
    }
    r.passed = res.param_count <= res.param_bound;
    r.findings = json!({
        "formulas": res.formulas.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "param_count": res.param_count,
        "param_bound": res.param_bound,
        "termination": res.termination,
        "depth": res.depth,
    });
    r.certificates = json!(res);
    Ok(r)
}
