//! Dataset directories: one trajectory file per successful episode plus a
//! `manifest.toml` at the root.
//!
//! ```text
//! <root>/manifest.toml
//! <root>/<task id>/<robot>-<index>.mmtj
//! ```

use std::path::{Path, PathBuf};

use manibench_core::control::Controller;
use manibench_core::dataset::{self, DatasetStats, TrajectorySummary};
use manibench_core::env::EpisodeConfig;
use manibench_core::exec::Executor;
use manibench_core::observation::ObservationLayout;
use manibench_core::reward::RewardWeights;
use manibench_core::robot::RobotSpec;
use manibench_core::world::TaskSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io, Error, Result};
use crate::trajfile::{self, hex};

pub const MANIFEST: &str = "manifest.toml";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutBlock {
    pub name: String,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEntry {
    pub id: String,
    pub instruction: String,
    pub count: usize,
    /// Paths relative to the dataset root.
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub frame_rate: f64,
    pub robot: String,
    pub robot_spec_hash: String,
    pub observation: Vec<LayoutBlock>,
    pub tasks: Vec<TaskEntry>,
}

pub fn robot_spec_hash(spec: &RobotSpec) -> String {
    hex(&Sha256::digest(format!("{spec:?}").as_bytes())[..8])
}

impl Manifest {
    pub fn new(spec: &RobotSpec, dt: f64) -> Manifest {
        Manifest {
            version: DATASET_VERSION,
            frame_rate: 1.0 / dt,
            robot: spec.name.clone(),
            robot_spec_hash: robot_spec_hash(spec),
            observation: ObservationLayout::for_robot(spec)
                .blocks()
                .iter()
                .map(|(name, _, size)| LayoutBlock {
                    name: name.to_string(),
                    size: *size,
                })
                .collect(),
            tasks: Vec::new(),
        }
    }

    pub fn load(root: &Path) -> Result<Manifest> {
        let path = root.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(io(&path))?;
        let m: Manifest = toml::from_str(&text).map_err(|e| Error::Manifest {
            path: path.clone(),
            detail: e.to_string(),
        })?;
        for t in &m.tasks {
            if t.count != t.files.len() {
                return Err(Error::Manifest {
                    path,
                    detail: format!("task {} lists {} files but counts {}", t.id, t.files.len(), t.count),
                });
            }
            for f in &t.files {
                if !root.join(f).is_file() {
                    return Err(Error::Manifest {
                        path,
                        detail: format!("missing trajectory file {f}"),
                    });
                }
            }
        }
        Ok(m)
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        std::fs::create_dir_all(root).map_err(io(root))?;
        let path = root.join(MANIFEST);
        let text = toml::to_string(self).map_err(|e| Error::Failed(format!("manifest: {e}")))?;
        std::fs::write(&path, text).map_err(io(&path))
    }

    pub fn files(&self, root: &Path) -> Vec<PathBuf> {
        self.tasks.iter().flat_map(|t| t.files.iter().map(|f| root.join(f))).collect()
    }
}

/// Outcome of one generation job.
#[derive(Debug, Clone, PartialEq)]
pub struct GenReport {
    pub manifest: Manifest,
    /// `(task id, index)` of jobs whose retries were exhausted.
    pub failures: Vec<(String, usize)>,
}

/// Records `per_task` successful trajectories for each task. Trajectory `i`
/// of a task is episode `i`; its attempts use seeds `seed, seed + 1, …`.
/// Each file has exactly one writer.
#[allow(clippy::too_many_arguments)]
pub fn generate<C, E>(
    root: &Path,
    tasks: &[TaskSpec],
    spec: &RobotSpec,
    controller: &C,
    config: &EpisodeConfig,
    weights: &RewardWeights,
    seed: u64,
    per_task: usize,
    retries: usize,
    exec: &E,
) -> Result<GenReport>
where
    C: Controller + Clone + Sync,
    E: Executor,
{
    struct Job {
        task: usize,
        index: usize,
        result: Option<Result<Option<String>>>,
    }
    let mut jobs: Vec<Job> = (0..tasks.len())
        .flat_map(|task| (0..per_task).map(move |index| Job { task, index, result: None }))
        .collect();
    exec.for_each(&mut jobs, &|_, job| {
        let task = &tasks[job.task];
        let run = || -> Result<Option<String>> {
            let mut c = controller.clone();
            let traj = dataset::record_rollout(&mut c, task, spec, config, weights, seed, job.index as u64, retries)?;
            let Some(traj) = traj else { return Ok(None) };
            let rel = format!("{}/{}-{:04}.mmtj", task.id, spec.name, job.index);
            trajfile::write(&traj, spec, &root.join(&rel))?;
            Ok(Some(rel))
        };
        job.result = Some(run());
    });

    let mut manifest = Manifest::new(spec, config.dt);
    let mut failures = Vec::new();
    for (i, task) in tasks.iter().enumerate() {
        let mut entry = TaskEntry {
            id: task.id.clone(),
            instruction: task.instruction(),
            count: 0,
            files: Vec::new(),
        };
        for job in jobs.iter_mut().filter(|j| j.task == i) {
            match job.result.take().expect("job ran") {
                Ok(Some(rel)) => entry.files.push(rel),
                Ok(None) => failures.push((task.id.clone(), job.index)),
                Err(e) => return Err(e),
            }
        }
        entry.count = entry.files.len();
        manifest.tasks.push(entry);
    }
    manifest.save(root)?;
    Ok(GenReport { manifest, failures })
}

/// Aggregates the dataset under `root` from trajectory headers.
pub fn stats(root: &Path) -> Result<DatasetStats> {
    let manifest = Manifest::load(root)?;
    let mut items = Vec::new();
    for task in &manifest.tasks {
        let spec = TaskSpec::by_id(&task.id).ok_or_else(|| Error::Manifest {
            path: root.join(MANIFEST),
            detail: format!("unknown task {}", task.id),
        })?;
        for f in &task.files {
            let h = trajfile::read_header(&root.join(f))?;
            if h.task_id != task.id {
                return Err(Error::Manifest {
                    path: root.join(MANIFEST),
                    detail: format!("{f} holds task {}", h.task_id),
                });
            }
            items.push(TrajectorySummary {
                category: spec.object.category_label.to_string(),
                skill: spec.skill.as_str().to_string(),
                length: h.steps,
            });
        }
    }
    Ok(DatasetStats::from_summaries(&items))
}

/// Verifies and replays every trajectory file. Returns the number checked.
pub fn replay_all<E: Executor>(files: &[PathBuf], exec: &E) -> Result<usize> {
    let mut results: Vec<Option<Result<()>>> = (0..files.len()).map(|_| None).collect();
    exec.for_each(&mut results, &|i, r| {
        let path = &files[i];
        let run = || -> Result<()> {
            let traj = trajfile::read(path)?;
            let spec = RobotSpec::by_name(&traj.robot)
                .ok_or_else(|| Error::Failed(format!("{}: unknown robot {}", path.display(), traj.robot)))?;
            let ctx = |e: manibench_core::Error| Error::Failed(format!("{}: {e}", path.display()));
            dataset::verify(&traj, &spec).map_err(ctx)?;
            dataset::replay(&traj, &spec).map_err(ctx)?;
            Ok(())
        };
        *r = Some(run());
    });
    for r in results {
        r.expect("job ran")?;
    }
    Ok(files.len())
}

/// Trajectory files under `path`: the file itself, or every file listed in
/// the manifest of a dataset directory.
pub fn trajectory_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    Ok(Manifest::load(path)?.files(path))
}
