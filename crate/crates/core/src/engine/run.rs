//! The run loop and its files: `events.log`, `metrics.csv`,
//! `ckpt_<step>.vwld` and the observatory sidecar `ckpt_<step>.obs.json`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, RunConfig, WorldKind};
use crate::event::Event;
use crate::observatory::{AuditViolation, Observatory, METRICS_HEADER};
use crate::soup::StepOutcome;

use super::{CheckpointError, EngineError, Simulation};

pub const EVENTS_FILE: &str = "events.log";
pub const METRICS_FILE: &str = "metrics.csv";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Audit(#[from] AuditViolation),
    #[error("population extinct at step {0}")]
    Extinct(u64),
    #[error("observatory sidecar {path}: {cause}")]
    Sidecar { path: String, cause: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.display().to_string(), source }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Attach the observatory (metrics.csv, stasis flags, sidecars).
    pub observatory: bool,
    pub write_checkpoints: bool,
    pub fail_on_extinction: bool,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        RunOptions { out_dir: out_dir.into(), observatory: true, write_checkpoints: true, fail_on_extinction: false }
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub world_kind: WorldKind,
    pub final_step: u64,
    pub population: u64,
    pub instructions: u64,
    pub extinct: bool,
    pub event_hash: u64,
    pub audit_violations: u64,
    pub checkpoints: Vec<PathBuf>,
}

pub fn checkpoint_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("ckpt_{step}.vwld"))
}

pub fn sidecar_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("obs.json")
}

/// Writes `bytes` to a temporary name and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

struct Runner {
    sim: Simulation,
    obs: Option<Observatory>,
    opts: RunOptions,
    events: BufWriter<File>,
    metrics: Option<BufWriter<File>>,
    last_checkpoint: Option<u64>,
    checkpoints: Vec<PathBuf>,
    audit_violations: u64,
}

impl Runner {
    fn write_events(&mut self, events: &[Event]) -> Result<(), RunError> {
        let path = self.opts.out_dir.join(EVENTS_FILE);
        for e in events {
            self.events.write_all(e.to_line().as_bytes()).map_err(io_err(&path))?;
            self.events.write_all(b"\n").map_err(io_err(&path))?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<(), RunError> {
        self.events.flush().map_err(io_err(&self.opts.out_dir.join(EVENTS_FILE)))?;
        if let Some(m) = &mut self.metrics {
            m.flush().map_err(io_err(&self.opts.out_dir.join(METRICS_FILE)))?;
        }
        Ok(())
    }

    fn checkpoint(&mut self) -> Result<(), RunError> {
        let step = self.sim.step_number();
        if !self.opts.write_checkpoints || self.last_checkpoint == Some(step) {
            return Ok(());
        }
        self.flush()?;
        let path = checkpoint_path(&self.opts.out_dir, step);
        if let Some(obs) = &self.obs {
            write_atomic(&sidecar_path(&path), obs.to_json().as_bytes())?;
        }
        write_atomic(&path, &self.sim.to_checkpoint())?;
        log::debug!("checkpoint {}", path.display());
        self.last_checkpoint = Some(step);
        self.checkpoints.push(path);
        Ok(())
    }

    fn frame(&mut self, buf: &mut Vec<Event>) -> Result<(), RunError> {
        let step = self.sim.step_number();
        buf.clear();
        if let Some((v, e)) = self.sim.audit_event() {
            self.audit_violations += 1;
            self.write_events(std::slice::from_ref(&e))?;
            if self.sim.config().strict_audit {
                self.flush()?;
                return Err(v.into());
            }
            log::warn!("{v}");
        }
        if let Some(obs) = &mut self.obs {
            let frame = obs.frame(step, self.sim.world(), buf);
            let path = self.opts.out_dir.join(METRICS_FILE);
            let m = self.metrics.as_mut().expect("metrics writer");
            writeln!(m, "{}", frame.csv_row()).map_err(io_err(&path))?;
            self.write_events(buf)?;
        }
        Ok(())
    }

    fn run_to(&mut self, target: u64) -> Result<RunSummary, RunError> {
        let interval = self.sim.config().metrics_interval;
        let cadence = self.sim.config().checkpoint_cadence();
        let mut buf = Vec::new();
        let mut obs_buf = Vec::new();
        while self.sim.step_number() < target && !self.sim.is_extinct() {
            buf.clear();
            let before = self.sim.instructions_executed();
            let outcome = self.sim.step(&mut buf);
            let step = self.sim.step_number();
            if let Some(obs) = &mut self.obs {
                obs.observe_events(step, self.sim.world(), &buf);
            }
            self.write_events(&buf)?;
            if (step - 1) % interval == 0 {
                self.frame(&mut obs_buf)?;
            }
            let due = match self.sim.world().kind() {
                WorldKind::Soup => self.sim.instructions_executed() / cadence > before / cadence,
                WorldKind::Atoms => step % cadence == 0,
            };
            if due {
                self.checkpoint()?;
            }
            if outcome == StepOutcome::Extinct {
                log::info!("population extinct at step {step}");
                break;
            }
        }
        self.checkpoint()?;
        self.flush()?;
        let population = match self.sim.world() {
            crate::World::Soup(w) => w.population() as u64,
            crate::World::Chem(w) => crate::observatory::chem_census(w).values().map(|(_, n)| n).sum(),
        };
        let summary = RunSummary {
            world_kind: self.sim.world().kind(),
            final_step: self.sim.step_number(),
            population,
            instructions: self.sim.instructions_executed(),
            extinct: self.sim.is_extinct(),
            event_hash: self.sim.event_hash(),
            audit_violations: self.audit_violations,
            checkpoints: std::mem::take(&mut self.checkpoints),
        };
        if summary.extinct && self.opts.fail_on_extinction {
            return Err(RunError::Extinct(summary.final_step));
        }
        Ok(summary)
    }
}

/// Runs a fresh simulation for `config.steps` steps into `opts.out_dir`.
pub fn start_run(config: RunConfig, opts: RunOptions) -> Result<RunSummary, RunError> {
    let target = config.steps;
    let (sim, seed_events) = Simulation::new(config)?;
    fs::create_dir_all(&opts.out_dir).map_err(io_err(&opts.out_dir))?;
    let ev_path = opts.out_dir.join(EVENTS_FILE);
    let events = BufWriter::new(File::create(&ev_path).map_err(io_err(&ev_path))?);
    let mut obs = None;
    let mut metrics = None;
    if opts.observatory {
        let m_path = opts.out_dir.join(METRICS_FILE);
        let mut m = BufWriter::new(File::create(&m_path).map_err(io_err(&m_path))?);
        writeln!(m, "{METRICS_HEADER}").map_err(io_err(&m_path))?;
        metrics = Some(m);
        let mut o = Observatory::new(sim.config());
        o.observe_events(0, sim.world(), &seed_events);
        obs = Some(o);
    }
    let mut runner = Runner {
        sim,
        obs,
        opts,
        events,
        metrics,
        last_checkpoint: None,
        checkpoints: Vec::new(),
        audit_violations: 0,
    };
    runner.write_events(&seed_events)?;
    runner.run_to(target)
}

/// Keeps the lines of a text file for which `keep` holds, stopping at the
/// first line that fails it (lines are in step order).
fn truncate_lines(path: &Path, skip_header: bool, keep: impl Fn(&str) -> bool) -> Result<(), RunError> {
    if !path.exists() {
        return Ok(());
    }
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = String::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if !(skip_header && i == 0) && !keep(&line) {
            break;
        }
        out.push_str(&line);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Continues the run stored in `checkpoint` for `extra_steps` more steps.
/// `events.log` and `metrics.csv` in `opts.out_dir` are cut back to the
/// checkpoint step before new output is appended.
pub fn resume_run(checkpoint: &Path, extra_steps: u64, opts: RunOptions) -> Result<RunSummary, RunError> {
    let mut sim = Simulation::load_checkpoint(checkpoint)?;
    let at = sim.step_number();
    let target = at + extra_steps;
    sim.set_target_steps(target);
    fs::create_dir_all(&opts.out_dir).map_err(io_err(&opts.out_dir))?;
    let ev_path = opts.out_dir.join(EVENTS_FILE);
    truncate_lines(&ev_path, false, |l| Event::from_line(l).is_ok_and(|e| e.step <= at))?;
    let m_path = opts.out_dir.join(METRICS_FILE);
    truncate_lines(&m_path, true, |l| {
        l.split(',').next().and_then(|s| s.parse::<u64>().ok()).is_some_and(|s| s <= at)
    })?;
    let events = BufWriter::new(
        fs::OpenOptions::new().create(true).append(true).open(&ev_path).map_err(io_err(&ev_path))?,
    );
    let mut obs = None;
    let mut metrics = None;
    if opts.observatory {
        let side = sidecar_path(checkpoint);
        let text = fs::read_to_string(&side).map_err(io_err(&side))?;
        let o = Observatory::from_json(&text)
            .map_err(|e| RunError::Sidecar { path: side.display().to_string(), cause: e.to_string() })?;
        obs = Some(o);
        let fresh = !m_path.exists();
        let mut m = BufWriter::new(
            fs::OpenOptions::new().create(true).append(true).open(&m_path).map_err(io_err(&m_path))?,
        );
        if fresh {
            writeln!(m, "{METRICS_HEADER}").map_err(io_err(&m_path))?;
        }
        metrics = Some(m);
    }
    let mut runner = Runner {
        sim,
        obs,
        opts,
        events,
        metrics,
        last_checkpoint: None,
        checkpoints: Vec::new(),
        audit_violations: 0,
    };
    // Never rewrite the input checkpoint itself.
    let same = checkpoint_path(&runner.opts.out_dir, at).canonicalize().ok() == checkpoint.canonicalize().ok();
    if same {
        runner.last_checkpoint = Some(at);
        runner.checkpoints.push(checkpoint.to_path_buf());
    }
    runner.run_to(target)
}
