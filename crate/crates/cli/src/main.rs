//! `isolde`: command-line front end.
//!
//! Exit codes: 0 isolated (or success), 1 non-isolated, 2 input error, 3 resource error.

use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use isolde_core::applications::{
    emptiness_if_isolated, subset_sum_gadget, value_one, ApplicationError, SubsetSumInstance,
};
use isolde_core::format::{
    emptiness_json, oracle_json, trace_json, verdict_json, FormatError, ProblemFile,
};
use isolde_core::isolation::{decide_with, EngineError, EngineOptions, Problem, Verdict};
use isolde_core::oracle::{brute_force_min_distance, check_verdict};
use isolde_core::semilinear::{
    is_stratified, parikh_image, Grammar, LetterBoundedGrammar, SemilinearError,
};

const EXIT_NON_ISOLATED: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(name = "isolde", version, about = "Exact cutpoint isolation for probabilistic automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct EngineArgs {
    /// Maximum number of explored branch nodes.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Explore branches on all cores.
    #[arg(long)]
    parallel: bool,
}

impl EngineArgs {
    fn options(&self, trace: bool) -> EngineOptions {
        EngineOptions {
            node_budget: self.budget,
            parallel: self.parallel,
            trace,
            ..EngineOptions::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the cutpoint is isolated.
    Decide {
        /// Problem file (`-` for stdin).
        path: PathBuf,
        /// Include one record per explored branch.
        #[arg(long)]
        trace: bool,
        /// Also cross-check the verdict by enumeration up to this coordinate bound.
        #[arg(long)]
        bound: Option<u64>,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Decide whether some word reaches the cutpoint, if the cutpoint is isolated.
    Emptiness {
        path: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Decide whether values arbitrarily close to 1 occur (the file's cutpoint is ignored).
    Value1 {
        path: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Write the subset-sum reduction instance as a problem file.
    Gadget {
        /// Comma-separated positive integers.
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<u64>,
        #[arg(long)]
        target: u64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum distance to the cutpoint over all points with coordinates up to the bound.
    Oracle {
        path: PathBuf,
        #[arg(long, default_value_t = 20)]
        bound: u64,
    },
    /// Print the semilinear Parikh image of a letter-bounded grammar file.
    Parikh { path: PathBuf },
}

enum Failure {
    Input(String),
    Resource(String),
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Capacity(m) => Failure::Resource(format!("capacity exceeded: {m}")),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Limit(_) => Failure::Input(e.to_string()),
            other => Failure::Resource(other.to_string()),
        }
    }
}

impl From<ApplicationError> for Failure {
    fn from(e: ApplicationError) -> Self {
        match e {
            ApplicationError::Engine(inner) => inner.into(),
            ApplicationError::Capacity(_) => Failure::Resource(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Input(format!("reading stdin: {e}")))?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Problem, Failure> {
    Ok(ProblemFile::parse(&read_input(path)?)?.to_problem()?)
}

fn print(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Decide {
            path,
            trace,
            bound,
            engine,
        } => {
            let problem = load(&path)?;
            let decision = decide_with(&problem, engine.options(trace))?;
            let mut out = verdict_json(&decision.verdict);
            if trace {
                out["trace"] = trace_json(&decision.trace);
            }
            if let Some(b) = bound {
                let check = check_verdict(&problem, &decision.verdict, b);
                out["check"] = json!({ "bound": b, "pass": check.pass, "detail": check.detail });
            }
            print(&out);
            Ok(match decision.verdict {
                Verdict::Isolated { .. } => 0,
                Verdict::NonIsolated(_) => EXIT_NON_ISOLATED,
            })
        }
        Command::Emptiness { path, engine } => {
            let problem = load(&path)?;
            print(&emptiness_json(&emptiness_if_isolated(&problem, engine.options(false))?));
            Ok(0)
        }
        Command::Value1 { path, engine } => {
            let problem = load(&path)?;
            let v = value_one(problem.pfa(), problem.language(), engine.options(false))?;
            print(&json!({ "value_one": v }));
            Ok(0)
        }
        Command::Gadget { set, target, out } => {
            let inst = SubsetSumInstance::new(set, target)?;
            let text = ProblemFile::from_problem(&subset_sum_gadget(&inst)?).to_pretty_string();
            match out {
                Some(p) => fs::write(&p, text)
                    .map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Oracle { path, bound } => {
            let problem = load(&path)?;
            print(&oracle_json(&brute_force_min_distance(&problem, bound)));
            Ok(0)
        }
        Command::Parikh { path } => {
            let grammar = Grammar::parse(&read_input(&path)?)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            let g = LetterBoundedGrammar::with_declared_order(grammar).map_err(semilinear_failure)?;
            let image = parikh_image(&g).map_err(semilinear_failure)?;
            print(&json!({
                "alphabet": g.order(),
                "semilinear": image.components().iter().map(|c| json!({
                    "base": c.base(),
                    "periods": c.periods(),
                })).collect::<Vec<_>>(),
                "stratified": is_stratified(&image),
            }));
            Ok(0)
        }
    }
}

fn semilinear_failure(e: SemilinearError) -> Failure {
    match e {
        SemilinearError::Capacity(_) => Failure::Resource(e.to_string()),
        other => Failure::Input(other.to_string()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Resource(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RESOURCE)
        }
    }
}
