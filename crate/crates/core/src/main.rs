use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chainmail::ast::ModuleDef;
use chainmail::checker::{check_trace, report_json, report_text, CheckOptions};
use chainmail::corpus;
use chainmail::dump::{config_from_str, config_to_string, trace_end_label, trace_to_json_lines};
use chainmail::interpreter::{initial, record_from, Bounds, Trace, TraceEnd};
use chainmail::props::all_suites;
use chainmail::runtime::Config;
use chainmail::sat::Modules;
use chainmail::syntax::{parse_module, parse_spec, parse_stmts};

const USAGE_ERROR: u8 = 3;

#[derive(Parser)]
#[command(
    name = "chainmail",
    version,
    about = "Run object-language programs and check holistic specifications on their runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Record one run and judge a spec at every external configuration.
    /// Exit status: 0 no violation found, 1 violated, 2 withheld.
    Check(CheckArgs),
    /// Record one run and print its end state.
    Run(RunArgs),
    /// Run the randomized property suites.
    Props(PropsArgs),
    /// List or check the bundled examples.
    Corpus(CorpusArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct ProgramArgs {
    /// Internal module (.loo).
    #[arg(long)]
    internal: PathBuf,
    /// External module (.loo). Defaults to the empty module.
    #[arg(long)]
    external: Option<PathBuf>,
    /// Driver statements, or @FILE to read them from a file.
    #[arg(long, conflicts_with = "start", required_unless_present = "start")]
    driver: Option<String>,
    /// Start from a configuration in JSON instead of a driver.
    #[arg(long)]
    start: Option<PathBuf>,
    #[arg(long, default_value_t = Bounds::default().max_steps)]
    max_steps: usize,
    #[arg(long, default_value_t = Bounds::default().max_micro)]
    max_micro: usize,
    /// Ghost evaluation depth.
    #[arg(long, default_value_t = Bounds::default().fuel)]
    fuel: u32,
    /// Largest heap whose subsets set quantifiers may enumerate.
    #[arg(long, default_value_t = Bounds::default().set_cap)]
    set_cap: usize,
    /// Write the run as JSON lines.
    #[arg(long)]
    dump_trace: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    program: ProgramArgs,
    /// Specification (.cmail).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Recorded in the report. Falls back to CHAINMAIL_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Also judge internal configurations (diagnostic only).
    #[arg(long)]
    check_internal: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    program: ProgramArgs,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct PropsArgs {
    /// Falls back to CHAINMAIL_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// Only run suites whose name contains this text.
    #[arg(long)]
    only: Option<String>,
}

#[derive(Args)]
struct CorpusArgs {
    #[command(subcommand)]
    action: CorpusAction,
}

#[derive(Subcommand)]
enum CorpusAction {
    /// List examples with their expected verdicts.
    List,
    /// Check one example and print the report.
    Check {
        name: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Write the bundled files into a directory.
    Export { dir: PathBuf },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: USAGE_ERROR, message: message.into() }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn env_seed() -> Result<u64, Failure> {
    match std::env::var("CHAINMAIL_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| usage(format!("CHAINMAIL_SEED is not a number: {s:?}"))),
        Err(_) => Ok(0),
    }
}

fn seed(flag: Option<u64>) -> Result<u64, Failure> {
    flag.map_or_else(env_seed, Ok)
}

fn module(path: Option<&Path>) -> Result<ModuleDef, Failure> {
    match path {
        None => Ok(ModuleDef::new()),
        Some(p) => parse_module(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display()))),
    }
}

struct Program {
    modules: Modules,
    start: Config,
    bounds: Bounds,
}

impl ProgramArgs {
    fn bounds(&self) -> Bounds {
        Bounds { max_steps: self.max_steps, max_micro: self.max_micro, fuel: self.fuel, set_cap: self.set_cap }
    }

    fn load(&self) -> Result<Program, Failure> {
        let internal = module(Some(&self.internal))?;
        let external = module(self.external.as_deref())?;
        let modules = Modules::new(internal, external).map_err(|e| usage(e.to_string()))?;
        let start = match (&self.driver, &self.start) {
            (Some(d), _) => {
                let (src, origin) = match d.strip_prefix('@') {
                    Some(p) => (read(Path::new(p))?, p.to_string()),
                    None => (d.clone(), "--driver".to_string()),
                };
                initial(parse_stmts(&src).map_err(|e| usage(format!("{origin}: {e}")))?)
            }
            (None, Some(p)) => config_from_str(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?,
            (None, None) => return Err(usage("one of --driver or --start is required")),
        };
        Ok(Program { modules, start, bounds: self.bounds() })
    }

    fn record(&self, p: &Program) -> Result<Trace, Failure> {
        let trace = record_from(&p.modules.internal, &p.modules.linked, p.start.clone(), &p.bounds);
        if let Some(path) = &self.dump_trace {
            write(path, &trace_to_json_lines(&trace))?;
        }
        Ok(trace)
    }
}

fn check(a: &CheckArgs) -> Result<u8, Failure> {
    let spec = parse_spec(&read(&a.spec)?).map_err(|e| usage(format!("{}: {e}", a.spec.display())))?;
    let p = a.program.load()?;
    let trace = a.program.record(&p)?;
    let opts =
        CheckOptions { bounds: p.bounds, seed: seed(a.seed)?, check_internal: a.check_internal, threads: a.threads };
    let v = check_trace(&p.modules, &trace, &spec, &opts);
    match a.format {
        Format::Json => println!("{}", report_json(&v, &spec, &opts)),
        Format::Text => print!("{}", report_text(&v, &spec)),
    }
    Ok(v.status.exit_code() as u8)
}

fn run(a: &RunArgs) -> Result<u8, Failure> {
    let p = a.program.load()?;
    let trace = a.program.record(&p)?;
    let last = trace.externals.last().expect("a trace has a start");
    match a.format {
        Format::Json => println!("{}", config_to_string(last)),
        Format::Text => {
            println!("{} after {} steps, {} external positions", trace_end_label(&trace.end), trace.steps, trace.len());
            for (x, v) in &last.stack[0].vars {
                println!("  {x} = {v}");
            }
        }
    }
    Ok(match trace.end {
        TraceEnd::Terminated => 0,
        TraceEnd::Truncated(_) => 1,
    })
}

fn props(a: &PropsArgs) -> Result<u8, Failure> {
    let seed = seed(a.seed)?;
    let mut failed = false;
    for r in all_suites(seed, a.trials) {
        if a.only.as_deref().is_some_and(|o| !r.name.contains(o)) {
            continue;
        }
        let mark = if r.ok() { "ok  " } else { "FAIL" };
        println!("{mark} {:<40} {} passed, {} skipped, {} failed", r.name, r.passed, r.skipped, r.failures.len());
        for f in r.failures.iter().take(3) {
            println!("       {f}");
        }
        failed |= !r.ok();
    }
    println!("seed {seed}, {} trials per suite", a.trials);
    Ok(u8::from(failed))
}

fn corpus_cmd(a: &CorpusArgs) -> Result<u8, Failure> {
    match &a.action {
        CorpusAction::List => {
            for e in corpus::exemplars() {
                println!("{:<22} {:<18} {}", e.name, format!("{:?}", e.expected), e.description);
            }
            Ok(0)
        }
        CorpusAction::Check { name, format } => {
            let e = corpus::exemplar(name).ok_or_else(|| usage(format!("no example named {name:?}")))?;
            let p = e.parse().map_err(|err| usage(err.to_string()))?;
            let opts = CheckOptions::default();
            let (v, _) = chainmail::checker::check_run(&p.internal, &p.external, p.driver, &p.spec, &opts)
                .map_err(|err| usage(err.to_string()))?;
            match format {
                Format::Json => println!("{}", report_json(&v, &p.spec, &opts)),
                Format::Text => print!("{}", report_text(&v, &p.spec)),
            }
            Ok(v.status.exit_code() as u8)
        }
        CorpusAction::Export { dir } => {
            fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
            for (name, contents) in corpus::FILES {
                write(&dir.join(name), contents)?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE_ERROR } else { 0 });
        }
    };
    let r = match &cli.command {
        Command::Check(a) => check(a),
        Command::Run(a) => run(a),
        Command::Props(a) => props(a),
        Command::Corpus(a) => corpus_cmd(a),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
