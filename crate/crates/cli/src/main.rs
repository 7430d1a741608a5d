//! `openmedium`: run, resume, inspect, export and verify simulations.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use openmedium::chem::rules::type_letter;
use openmedium::engine::run::{checkpoint_path, sidecar_path, EVENTS_FILE, METRICS_FILE};
use openmedium::engine::{resume_run, start_run, EngineError, RunError, RunOptions, RunSummary};
use openmedium::observatory::{chem_genotype, connected_components, csv_field, Class, Observatory};
use openmedium::soup::disassemble;
use openmedium::verify::{run_scenario, Scenario, VerifyOptions};
use openmedium::{ConfigError, Event, RunConfig, Simulation, World};

const LOG_ENV: &str = "OPENMEDIUM_LOG_LEVEL";

/// Exit statuses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Ok = 0,
    Runtime = 1,
    Usage = 2,
    VerifyFailed = 3,
}

struct Failure {
    status: Status,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { status: Status::Usage, message: message.into() }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Failure { status: Status::Runtime, message: message.into() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        let status = match &e {
            RunError::Config(_) | RunError::Engine(_) => Status::Usage,
            _ => Status::Runtime,
        };
        Failure { status, message: e.to_string() }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        Failure::usage(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "openmedium", version, about = "Open-ended evolution in a program soup and an artificial chemistry")]
#[command(after_help = "Exit codes: 0 success, 1 runtime failure, 2 usage or config error, 3 verification failure.\n\
                        Log level: OPENMEDIUM_LOG_LEVEL=error|info|debug (default info).")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Start a run from a config file.
    Run {
        config: PathBuf,
        /// Output directory (default: `out_dir` from the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override a config key, e.g. `--set seed=7`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Skip metrics, stasis flags and observatory sidecars.
        #[arg(long)]
        no_observatory: bool,
        /// Exit with status 1 if the population dies out.
        #[arg(long)]
        fail_on_extinction: bool,
    },
    /// Continue a run from a checkpoint.
    Resume {
        checkpoint: PathBuf,
        /// Steps to run past the checkpoint.
        #[arg(long, default_value_t = 0)]
        steps: u64,
        /// Output directory (default: the checkpoint's directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        no_observatory: bool,
        #[arg(long)]
        fail_on_extinction: bool,
    },
    /// Summarise a checkpoint, or show one organism with `org:N`.
    Inspect {
        checkpoint: PathBuf,
        /// `org:N`: a soup organism id, or a chem component index.
        selector: Option<String>,
    },
    /// Print a run table as CSV.
    Export { run_dir: PathBuf, what: Table },
    /// Run a built-in scenario and report PASS or FAIL.
    Verify {
        scenario: ScenarioArg,
        /// Genome file for the ancestor scenario.
        #[arg(long)]
        genome: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    Metrics,
    Genotypes,
    Events,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Ancestor,
    Replicator,
    Conservation,
    Determinism,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Ancestor => Scenario::Ancestor,
            ScenarioArg::Replicator => Scenario::Replicator,
            ScenarioArg::Conservation => Scenario::Conservation,
            ScenarioArg::Determinism => Scenario::Determinism,
        }
    }
}

fn init_logging() {
    let level = std::env::var(LOG_ENV).unwrap_or_else(|_| "info".into());
    env_logger::Builder::new().parse_filters(&level).format_target(false).init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Status::Usage as u8 } else { 0 });
        }
    };
    init_logging();
    let result = match cli.command {
        Command::Run { config, out, overrides, no_observatory, fail_on_extinction } => {
            cmd_run(&config, out, &overrides, !no_observatory, fail_on_extinction)
        }
        Command::Resume { checkpoint, steps, out, no_observatory, fail_on_extinction } => {
            cmd_resume(&checkpoint, steps, out, !no_observatory, fail_on_extinction)
        }
        Command::Inspect { checkpoint, selector } => cmd_inspect(&checkpoint, selector.as_deref()),
        Command::Export { run_dir, what } => cmd_export(&run_dir, what),
        Command::Verify { scenario, genome, seed } => cmd_verify(scenario.into(), genome, seed),
    };
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.status as u8)
        }
    }
}

fn print_summary(s: &RunSummary) {
    println!(
        "{} run: step {}, population {}, instructions {}, event hash {:016x}, {} checkpoints{}{}",
        s.world_kind,
        s.final_step,
        s.population,
        s.instructions,
        s.event_hash,
        s.checkpoints.len(),
        if s.audit_violations > 0 { format!(", {} audit violations", s.audit_violations) } else { String::new() },
        if s.extinct { ", extinct" } else { "" },
    );
}

fn cmd_run(
    config: &Path,
    out: Option<PathBuf>,
    overrides: &[String],
    observatory: bool,
    fail_on_extinction: bool,
) -> Result<Status, Failure> {
    let mut cfg = RunConfig::load(config)?;
    for o in overrides {
        cfg = cfg.with_override(o)?;
    }
    cfg.validate()?;
    let out_dir = out.unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    let opts = RunOptions { observatory, fail_on_extinction, ..RunOptions::new(out_dir) };
    let summary = start_run(cfg, opts)?;
    print_summary(&summary);
    Ok(Status::Ok)
}

fn cmd_resume(
    checkpoint: &Path,
    steps: u64,
    out: Option<PathBuf>,
    observatory: bool,
    fail_on_extinction: bool,
) -> Result<Status, Failure> {
    let out_dir = out.unwrap_or_else(|| checkpoint.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf));
    let observatory = observatory && sidecar_path(checkpoint).exists();
    if !observatory {
        log::info!("resuming without the observatory");
    }
    let opts = RunOptions { observatory, fail_on_extinction, ..RunOptions::new(out_dir) };
    let summary = resume_run(checkpoint, steps, opts)?;
    print_summary(&summary);
    Ok(Status::Ok)
}

fn parse_selector(s: &str) -> Result<u64, Failure> {
    s.strip_prefix("org:")
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| Failure::usage(format!("bad selector `{s}`: expected org:N")))
}

fn cmd_inspect(checkpoint: &Path, selector: Option<&str>) -> Result<Status, Failure> {
    let sim = Simulation::load_checkpoint(checkpoint).map_err(|e| Failure::runtime(e.to_string()))?;
    let wanted = selector.map(parse_selector).transpose()?;
    let mut out = String::new();
    match sim.world() {
        World::Soup(w) => match wanted {
            None => {
                let _ = writeln!(
                    out,
                    "soup: step {}, {} cells, {} occupied, population {}, instructions {}",
                    sim.step_number(),
                    w.soup_size(),
                    w.occupied_cells(),
                    w.population(),
                    w.instructions_executed()
                );
                let _ = writeln!(out, "{:>8} {:>8} {:>6} {:>16}", "org", "start", "length", "genotype");
                for o in w.organisms() {
                    let _ =
                        writeln!(out, "{:>8} {:>8} {:>6} {:016x}", o.id, o.body.start, o.body.len, o.genotype);
                }
            }
            Some(id) => {
                let o = w.organism(id).ok_or_else(|| Failure::usage(format!("no organism {id}")))?;
                let c = &o.cpu;
                let _ = writeln!(
                    out,
                    "; organism {} at {} length {} genotype {:016x} parent {}",
                    o.id,
                    o.body.start,
                    o.body.len,
                    o.genotype,
                    o.parent.map_or("-".into(), |p| p.to_string())
                );
                let _ = writeln!(
                    out,
                    "; ax {} bx {} cx {} ip {} errors {} stack {:?}",
                    c.ax,
                    c.bx,
                    c.cx,
                    c.ip,
                    c.errors,
                    c.stack()
                );
                out.push_str(&disassemble(&w.body_cells(o.body)));
            }
        },
        World::Chem(w) => {
            let comps: Vec<Vec<u32>> = connected_components(w).into_iter().filter(|c| c.len() >= 2).collect();
            match wanted {
                None => {
                    let census = w.census();
                    let _ = writeln!(
                        out,
                        "atoms: step {}, grid {}x{}, {} atoms, {} bonds, {} free food, {} components",
                        sim.step_number(),
                        w.width(),
                        w.height(),
                        w.atoms().len(),
                        w.bond_count(),
                        w.free_food(),
                        comps.len()
                    );
                    let counts: Vec<String> =
                        census.iter().enumerate().map(|(t, n)| format!("{}={n}", type_letter(t as u8))).collect();
                    let _ = writeln!(out, "census {}", counts.join(" "));
                    for (i, comp) in comps.iter().enumerate() {
                        let g = chem_genotype(w, comp);
                        let _ = writeln!(out, "org:{i} {}", describe(&g.class, &g.canonical, g.id, comp.len()));
                    }
                }
                Some(i) => {
                    let comp = comps
                        .get(i as usize)
                        .ok_or_else(|| Failure::usage(format!("no component {i} ({} present)", comps.len())))?;
                    let g = chem_genotype(w, comp);
                    let _ = writeln!(out, "{}", describe(&g.class, &g.canonical, g.id, comp.len()));
                    for &a in comp {
                        let atom = w.atoms()[a as usize];
                        let (x, y) = w.xy(atom.cell);
                        let _ = writeln!(
                            out,
                            "  atom {a} {}{} at ({x}, {y}) bonds {:?}",
                            type_letter(atom.kind),
                            atom.state,
                            w.bonds_of(a)
                        );
                    }
                }
            }
        }
    }
    print!("{out}");
    Ok(Status::Ok)
}

fn describe(class: &Class, canonical: &[u8], id: u64, atoms: usize) -> String {
    let kind = match class {
        Class::Chain => "chain",
        Class::NonChain => "non-chain",
        Class::Singleton => "singleton",
        Class::Program => "program",
    };
    format!("{kind} {} genotype {id:016x} ({atoms} atoms)", String::from_utf8_lossy(canonical))
}

/// The highest-step observatory sidecar in `dir`.
fn latest_sidecar(dir: &Path) -> Option<PathBuf> {
    fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let step: u64 = name.strip_prefix("ckpt_")?.strip_suffix(".obs.json")?.parse().ok()?;
            Some((step, e.path()))
        })
        .max_by_key(|(s, _)| *s)
        .map(|(_, p)| p)
}

fn cmd_export(dir: &Path, what: Table) -> Result<Status, Failure> {
    let missing = |p: &Path| Failure::usage(format!("{}: not found (is this a run directory?)", p.display()));
    let text = match what {
        Table::Metrics => {
            let p = dir.join(METRICS_FILE);
            fs::read_to_string(&p).map_err(|_| missing(&p))?
        }
        Table::Genotypes => {
            let p = latest_sidecar(dir).ok_or_else(|| missing(&checkpoint_path(dir, 0).with_extension("obs.json")))?;
            let json = fs::read_to_string(&p).map_err(|_| missing(&p))?;
            let obs = Observatory::from_json(&json)
                .map_err(|e| Failure::runtime(format!("{}: {e}", p.display())))?;
            obs.registry().to_csv()
        }
        Table::Events => {
            let p = dir.join(EVENTS_FILE);
            let log = fs::read_to_string(&p).map_err(|_| missing(&p))?;
            let mut out = String::from("step,kind,org,parent,genotype,addr,value,detail\n");
            let opt = |v: Option<u64>| v.map_or(String::new(), |v| v.to_string());
            for (n, line) in log.lines().enumerate() {
                let e = Event::from_line(line)
                    .map_err(|err| Failure::runtime(format!("{} line {}: {err}", p.display(), n + 1)))?;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    e.step,
                    e.kind,
                    opt(e.org),
                    opt(e.parent),
                    e.genotype.map_or(String::new(), |g| format!("{g:016x}")),
                    opt(e.addr),
                    opt(e.value),
                    csv_field(&e.detail)
                );
            }
            out
        }
    };
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(text.as_bytes()).map_err(|e| Failure::runtime(e.to_string()))?;
    Ok(Status::Ok)
}

fn cmd_verify(scenario: Scenario, genome: Option<PathBuf>, seed: u64) -> Result<Status, Failure> {
    let report = run_scenario(scenario, &VerifyOptions { genome, seed })?;
    print!("{report}");
    Ok(if report.passed { Status::Ok } else { Status::VerifyFailed })
}
