//! Command-line entry point.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use manibench_core::control::{PolicyController, ScriptedController};
use manibench_core::harness::{self, CellOutcome, CellResult, MatrixReport};
use manibench_core::rl::{self, EpisodeSummary};
use manibench_core::robot::RobotSpec;
use manibench_core::world::{shipped_tasks, TaskSpec};

use crate::checkpoint::Checkpoint;
use crate::config::{parse_config, task_by_id, ControllerKind, RunConfig};
use crate::data;
use crate::error::{io, Error, Result};
use crate::exec::{resolve_workers, RayonExecutor};
use crate::report;

/// Exit status for success, runtime failure and usage errors.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "manibench", version, about = "Desk-scale mobile manipulation benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a PPO policy and write a checkpoint and learning curve.
    Train,
    /// Evaluate a policy, the scripted controller, a task matrix or the
    /// fixed-base ablation.
    Eval,
    /// Record successful trajectories into a dataset directory.
    GenData,
    /// Summarize a dataset directory.
    Stats {
        /// Dataset directory (defaults to --out).
        path: Option<PathBuf>,
    },
    /// Verify and re-simulate recorded trajectories.
    Replay {
        /// Trajectory file or dataset directory (defaults to --out).
        path: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// gripper-bot or hand-bot.
    #[arg(long, global = true)]
    robot: Option<String>,
    /// Task id such as lid-open, or "all" for data generation.
    #[arg(long, global = true)]
    task: Option<String>,
    #[arg(long, global = true)]
    skill: Option<String>,
    /// Evaluation episodes, or trajectories per task for gen-data.
    #[arg(long, global = true)]
    episodes: Option<usize>,
    #[arg(long, global = true)]
    fixed_base: bool,
    /// Worker threads (MANIBENCH_WORKERS takes precedence).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Policy checkpoint (defaults to <out>/checkpoint.mmrl).
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other),
        }
    }
}

impl From<manibench_core::Error> for Failure {
    fn from(e: manibench_core::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

/// Runs the command line `args` (including the program name), writing
/// reports to `out` and diagnostics to `err`. Returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
    }
}

fn load_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(path) => parse_config(&std::fs::read_to_string(path).map_err(io(path))?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        None => RunConfig::default(),
    };
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = &c.out {
        cfg.out = v.clone();
    }
    if let Some(v) = &c.robot {
        cfg.robot = v.clone();
    }
    if let Some(v) = &c.task {
        cfg.task = v.clone();
    }
    if let Some(v) = &c.skill {
        cfg.skill = Some(v.clone());
    }
    if let Some(v) = c.episodes {
        cfg.episodes = Some(v);
    }
    if c.fixed_base {
        cfg.fixed_base = true;
    }
    if let Some(v) = c.workers {
        cfg.workers = Some(v);
    }
    if let Some(v) = &c.checkpoint {
        cfg.checkpoint = Some(v.clone());
    }
    Ok(cfg)
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let mut cfg = load_config(&cli.common)?;
    let all_tasks = matches!(cli.command, Command::GenData) && cfg.task == "all";
    if all_tasks {
        // Validated per task below.
        cfg.task = RunConfig::default().task;
    }
    cfg.validate()?;
    let exec = RayonExecutor::new(resolve_workers(cfg.workers)?)?;
    let spec = cfg.robot_spec()?;
    let w = |out: &mut dyn Write, text: &str| -> Result<()> {
        out.write_all(text.as_bytes())
            .map_err(|e| Error::Failed(format!("writing report: {e}")))
    };
    match cli.command {
        Command::Train => {
            let task = cfg.task_spec()?;
            let ppo = cfg.ppo_config();
            let outcome = rl::train(&task, &spec, &ppo, &cfg.episode_config(), &cfg.reward, &exec, |s| {
                let _ = writeln!(
                    err,
                    "iteration {} mean_return {:.3} success_rate {:.3} kl {:.4}",
                    s.iteration, s.mean_return, s.success_rate, s.update.approx_kl
                );
            })?;
            let ckpt = Checkpoint {
                robot: spec.name.clone(),
                nets: outcome.nets,
            };
            let path = cfg.checkpoint_path();
            ckpt.save(&path)?;
            let curve = cfg.out.join("curve.csv");
            report::write_file(&curve, &report::curve_csv(&outcome.curve))?;
            let last = outcome.curve.last();
            w(
                out,
                &format!(
                    "checkpoint={}\ncurve={}\niterations={}\nmean_return={}\nsuccess_rate={}\n",
                    path.display(),
                    curve.display(),
                    outcome.curve.len(),
                    last.map_or(0.0, |s| s.mean_return),
                    last.map_or(0.0, |s| s.success_rate)
                ),
            )?;
        }
        Command::Eval => {
            if let Some(m) = cfg.matrix.clone() {
                let report = run_matrix(&cfg, &m.cells, &exec)?;
                std::fs::create_dir_all(&cfg.out).map_err(io(&cfg.out))?;
                report::write_file(&cfg.out.join("matrix.csv"), &report.to_csv())?;
                report::write_file(&cfg.out.join("episodes.csv"), &report.episodes_csv())?;
                w(out, &report.to_csv())?;
            } else if let Some(a) = cfg.ablation.clone() {
                let task = cfg.task_spec()?;
                let n = cfg.episodes.unwrap_or(100);
                let ep = cfg.episode_config();
                let load = |p: &Option<PathBuf>| -> Result<Option<Checkpoint>> {
                    p.as_ref()
                        .map(|p| {
                            let c = Checkpoint::load(p)?;
                            c.check_robot(&spec)?;
                            Ok(c)
                        })
                        .transpose()
                };
                let (mc, fc) = (load(&a.mobile_checkpoint)?, load(&a.fixed_checkpoint)?);
                let rate = |ckpt: &Option<Checkpoint>, fixed: bool| -> Result<f64> {
                    let ep = manibench_core::env::EpisodeConfig {
                        fixed_base: fixed,
                        ..ep.clone()
                    };
                    let eps = evaluate_cell(ckpt.as_ref(), &task, &spec, &ep, &cfg.reward, n, &exec)?;
                    Ok(eps.iter().filter(|e| e.success).count() as f64 / eps.len() as f64)
                };
                let (m, f) = (rate(&mc, false)?, rate(&fc, true)?);
                w(out, &format!("mobile_rate={m}\nfixed_rate={f}\n"))?;
            } else {
                let task = cfg.task_spec()?;
                let n = cfg.episodes.unwrap_or(200);
                let ckpt = match cfg.controller.unwrap_or(ControllerKind::Policy) {
                    ControllerKind::Scripted => None,
                    ControllerKind::Policy => {
                        let c = Checkpoint::load(&cfg.checkpoint_path())?;
                        c.check_robot(&spec)?;
                        Some(c)
                    }
                };
                let eps = evaluate_cell(ckpt.as_ref(), &task, &spec, &cfg.episode_config(), &cfg.reward, n, &exec)?;
                let rate = eps.iter().filter(|e| e.success).count() as f64 / eps.len() as f64;
                w(out, &format!("success_rate={rate}\n"))?;
            }
        }
        Command::GenData => {
            let tasks = gen_tasks(&cfg, &spec, all_tasks)?;
            let per_task = cfg.episodes.unwrap_or(10);
            let ep = cfg.episode_config();
            let report = match cfg.controller.unwrap_or(ControllerKind::Scripted) {
                ControllerKind::Scripted => data::generate(
                    &cfg.out,
                    &tasks,
                    &spec,
                    &ScriptedController,
                    &ep,
                    &cfg.reward,
                    cfg.seed,
                    per_task,
                    cfg.retries,
                    &exec,
                )?,
                ControllerKind::Policy => {
                    let c = Checkpoint::load(&cfg.checkpoint_path())?;
                    c.check_robot(&spec)?;
                    let pc = PolicyController::new(&c.nets.policy, &spec);
                    data::generate(&cfg.out, &tasks, &spec, &pc, &ep, &cfg.reward, cfg.seed, per_task, cfg.retries, &exec)?
                }
            };
            for (task, i) in &report.failures {
                let _ = writeln!(err, "generation failed: {task} #{i} after {} attempts", cfg.retries + 1);
            }
            let stored: usize = report.manifest.tasks.iter().map(|t| t.count).sum();
            w(
                out,
                &format!(
                    "dataset={}\ntrajectories={stored}\nfailures={}\n",
                    cfg.out.display(),
                    report.failures.len()
                ),
            )?;
        }
        Command::Stats { path } => {
            let root = path.unwrap_or_else(|| cfg.out.clone());
            w(out, &data::stats(&root)?.report())?;
        }
        Command::Replay { path } => {
            let root = path.unwrap_or_else(|| cfg.out.clone());
            let files = data::trajectory_files(&root)?;
            let n = data::replay_all(&files, &exec)?;
            w(out, &format!("replayed={n}\n"))?;
        }
    }
    Ok(())
}

fn gen_tasks(cfg: &RunConfig, spec: &RobotSpec, all: bool) -> Result<Vec<TaskSpec>> {
    let skill = cfg.skill()?;
    let tasks: Vec<TaskSpec> = if all {
        shipped_tasks()
    } else {
        vec![cfg.task_spec()?]
    };
    let tasks: Vec<TaskSpec> = tasks
        .into_iter()
        .filter(|t| skill.is_none_or(|s| t.skill == s))
        .collect();
    if tasks.is_empty() {
        return Err(Error::Config(format!("no task of {} matches the requested skill", spec.name)));
    }
    Ok(tasks)
}

/// Policy evaluation when a checkpoint is given, otherwise the scripted
/// controller.
fn evaluate_cell(
    ckpt: Option<&Checkpoint>,
    task: &TaskSpec,
    spec: &RobotSpec,
    ep: &manibench_core::env::EpisodeConfig,
    weights: &manibench_core::reward::RewardWeights,
    n: usize,
    exec: &RayonExecutor,
) -> Result<Vec<EpisodeSummary>> {
    Ok(match ckpt {
        Some(c) => rl::evaluate(&c.nets.policy, task, spec, ep, weights, n, exec)?.episodes,
        None => harness::run_controller(&ScriptedController, task, spec, ep, weights, n, exec)?,
    })
}

/// Evaluates every cell; unreadable or mismatched checkpoints become
/// "missing" cells.
pub fn run_matrix(cfg: &RunConfig, cells: &[crate::config::MatrixCell], exec: &RayonExecutor) -> Result<MatrixReport> {
    let n = cfg.episodes.unwrap_or(200);
    let ep = cfg.episode_config();
    let mut results = Vec::with_capacity(cells.len());
    for cell in cells {
        let spec = RobotSpec::by_name(&cell.robot).ok_or_else(|| Error::Config(format!("unknown robot {:?}", cell.robot)))?;
        let task = task_by_id(&cell.task)?;
        let kind = cell.controller.unwrap_or(ControllerKind::Policy);
        let ckpt = match kind {
            ControllerKind::Scripted => Ok(None),
            ControllerKind::Policy => match &cell.checkpoint {
                None => Err("no checkpoint".to_string()),
                Some(p) => Checkpoint::load(p)
                    .and_then(|c| c.check_robot(&spec).map(|_| c))
                    .map(Some)
                    .map_err(|e| e.to_string()),
            },
        };
        let outcome = match ckpt {
            Err(reason) => CellOutcome::Missing(reason),
            Ok(c) => CellOutcome::Evaluated(evaluate_cell(c.as_ref(), &task, &spec, &ep, &cfg.reward, n, exec)?),
        };
        results.push(CellResult {
            robot: cell.robot.clone(),
            family: task.object.family.to_string(),
            skill: task.skill.as_str().to_string(),
            outcome,
        });
    }
    Ok(MatrixReport::from_cells(results)?)
}
