//! Batch evaluation over a task matrix and the fixed-base ablation.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::control::Controller;
use crate::env::{EpisodeConfig, Env};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::reward::RewardWeights;
use crate::rl::EpisodeSummary;
use crate::robot::RobotSpec;
use crate::world::TaskSpec;

/// Runs episodes `0..episodes` of `config.seed` with a fresh clone of
/// `controller` each, in episode order.
pub fn run_controller<C, E>(
    controller: &C,
    task: &TaskSpec,
    spec: &RobotSpec,
    config: &EpisodeConfig,
    weights: &RewardWeights,
    episodes: usize,
    exec: &E,
) -> Result<Vec<EpisodeSummary>>
where
    C: Controller + Clone + Sync,
    E: Executor,
{
    if episodes == 0 {
        return Err(Error::NoEpisodes);
    }
    let mut slots: Vec<Result<EpisodeSummary>> = (0..episodes).map(|_| Err(Error::NoEpisodes)).collect();
    exec.for_each(&mut slots, &|i, slot| {
        *slot = (|| {
            let (mut env, _) = Env::reset(config, task, spec, i as u64)?;
            let mut c = controller.clone();
            let mut total = 0.0;
            while !env.done {
                let a = c.act(&env)?;
                total += env.step(&a, weights)?.reward;
            }
            Ok(EpisodeSummary {
                episode: i as u64,
                slot: i,
                total_return: total,
                success: env.success,
                steps: env.t,
                final_distance: env.goal_distance(),
            })
        })();
    });
    slots.into_iter().collect()
}

/// What happened in one matrix cell.
#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    /// The cell could not be evaluated (for example its checkpoint is
    /// absent); the reason is kept for the report.
    Missing(String),
    Evaluated(Vec<EpisodeSummary>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub robot: String,
    pub family: String,
    pub skill: String,
    pub outcome: CellOutcome,
}

impl CellResult {
    pub fn success_rate(&self) -> Option<f64> {
        match &self.outcome {
            CellOutcome::Evaluated(eps) if !eps.is_empty() => {
                Some(eps.iter().filter(|e| e.success).count() as f64 / eps.len() as f64)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixReport {
    pub cells: Vec<CellResult>,
    /// Unweighted mean of cell rates per skill (evaluated cells only).
    pub skill_means: BTreeMap<String, f64>,
    /// Successes over episodes across all evaluated cells.
    pub grand_mean: Option<f64>,
}

impl MatrixReport {
    pub fn from_cells(cells: Vec<CellResult>) -> Result<MatrixReport> {
        let mut per_skill: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        let (mut wins, mut total) = (0usize, 0usize);
        for c in &cells {
            if let CellOutcome::Evaluated(eps) = &c.outcome {
                if eps.is_empty() {
                    return Err(Error::NoEpisodes);
                }
                let w = eps.iter().filter(|e| e.success).count();
                wins += w;
                total += eps.len();
                let e = per_skill.entry(c.skill.clone()).or_insert((0.0, 0));
                e.0 += w as f64 / eps.len() as f64;
                e.1 += 1;
            }
        }
        let skill_means = per_skill.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
        let grand_mean = (total > 0).then(|| wins as f64 / total as f64);
        Ok(MatrixReport {
            cells,
            skill_means,
            grand_mean,
        })
    }

    /// Comma-separated table: one row per (robot, family), one column per
    /// skill, then per-skill means and the grand mean. Empty fields are
    /// combinations not in the matrix.
    pub fn to_csv(&self) -> String {
        let skills: Vec<&String> = self.skill_means.keys().chain(self.cells.iter().map(|c| &c.skill)).collect();
        let mut skills: Vec<&str> = skills.into_iter().map(|s| s.as_str()).collect();
        skills.sort_unstable();
        skills.dedup();
        let mut rows: Vec<(&str, &str)> = self.cells.iter().map(|c| (c.robot.as_str(), c.family.as_str())).collect();
        rows.sort_unstable();
        rows.dedup();

        let mut out = String::from("robot,family");
        for s in &skills {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for (robot, family) in &rows {
            out.push_str(&format!("{robot},{family}"));
            for s in &skills {
                out.push(',');
                let cell = self
                    .cells
                    .iter()
                    .find(|c| c.robot == *robot && c.family == *family && c.skill == *s);
                if let Some(c) = cell {
                    match (&c.outcome, c.success_rate()) {
                        (CellOutcome::Missing(_), _) => out.push_str("missing"),
                        (_, Some(r)) => out.push_str(&format!("{r:.4}")),
                        _ => {}
                    }
                }
            }
            out.push('\n');
        }
        out.push_str("mean,");
        for s in &skills {
            out.push(',');
            if let Some(m) = self.skill_means.get(*s) {
                out.push_str(&format!("{m:.4}"));
            }
        }
        out.push('\n');
        out.push_str("grand_mean,");
        match self.grand_mean {
            Some(g) => out.push_str(&format!("{g:.4}")),
            None => out.push_str("missing"),
        }
        out.push('\n');
        out
    }

    /// One line per evaluated episode:
    /// `robot,family,skill,episode,success,steps`.
    pub fn episodes_csv(&self) -> String {
        let mut out = String::from("robot,family,skill,episode,success,steps\n");
        for c in &self.cells {
            if let CellOutcome::Evaluated(eps) = &c.outcome {
                for e in eps {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        c.robot, c.family, c.skill, e.episode, e.success as u8, e.steps
                    ));
                }
            }
        }
        out
    }

    /// Rebuilds a report from [`episodes_csv`](Self::episodes_csv) output.
    /// Missing cells are not part of that file and do not come back.
    pub fn from_episodes_csv(text: &str) -> Result<MatrixReport> {
        let bad = |line: usize, what: &str| Error::InvalidConfig(format!("episode record line {line}: {what}"));
        let mut cells: Vec<CellResult> = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad(i + 1, "expected 6 fields"));
            }
            let episode: u64 = f[3].parse().map_err(|_| bad(i + 1, "episode"))?;
            let success = match f[4] {
                "0" => false,
                "1" => true,
                _ => return Err(bad(i + 1, "success")),
            };
            let steps: usize = f[5].parse().map_err(|_| bad(i + 1, "steps"))?;
            let rec = EpisodeSummary {
                episode,
                slot: 0,
                total_return: 0.0,
                success,
                steps,
                final_distance: 0.0,
            };
            let pos = cells
                .iter()
                .position(|c| c.robot == f[0] && c.family == f[1] && c.skill == f[2]);
            match pos {
                Some(p) => {
                    if let CellOutcome::Evaluated(eps) = &mut cells[p].outcome {
                        eps.push(rec);
                    }
                }
                None => cells.push(CellResult {
                    robot: f[0].to_string(),
                    family: f[1].to_string(),
                    skill: f[2].to_string(),
                    outcome: CellOutcome::Evaluated(alloc::vec![rec]),
                }),
            }
        }
        MatrixReport::from_cells(cells)
    }
}

/// Success rates of the same task with a mobile and with a fixed base.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AblationResult {
    pub mobile_rate: f64,
    pub fixed_rate: f64,
}

/// Evaluates `mobile` with the base free and `fixed` with the base frozen,
/// each over `episodes` episodes.
#[allow(clippy::too_many_arguments)]
pub fn ablate_fixed_base<C1, C2, E>(
    task: &TaskSpec,
    spec: &RobotSpec,
    mobile: &C1,
    fixed: &C2,
    config: &EpisodeConfig,
    weights: &RewardWeights,
    episodes: usize,
    exec: &E,
) -> Result<AblationResult>
where
    C1: Controller + Clone + Sync,
    C2: Controller + Clone + Sync,
    E: Executor,
{
    let rate = |eps: &[EpisodeSummary]| eps.iter().filter(|e| e.success).count() as f64 / eps.len() as f64;
    let m_cfg = EpisodeConfig {
        fixed_base: false,
        ..config.clone()
    };
    let f_cfg = EpisodeConfig {
        fixed_base: true,
        ..config.clone()
    };
    let m = run_controller(mobile, task, spec, &m_cfg, weights, episodes, exec)?;
    let f = run_controller(fixed, task, spec, &f_cfg, weights, episodes, exec)?;
    Ok(AblationResult {
        mobile_rate: rate(&m),
        fixed_rate: rate(&f),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ScriptedController;
    use crate::exec::Sequential;
    use crate::robot::gripper_bot;

    fn ep(success: bool) -> EpisodeSummary {
        EpisodeSummary {
            episode: 0,
            slot: 0,
            total_return: 0.0,
            success,
            steps: 10,
            final_distance: 0.0,
        }
    }

    fn cell(family: &str, skill: &str, wins: usize, n: usize) -> CellResult {
        CellResult {
            robot: "gripper-bot".into(),
            family: family.into(),
            skill: skill.into(),
            outcome: CellOutcome::Evaluated((0..n).map(|i| ep(i < wins)).collect()),
        }
    }

    #[test]
    fn skill_mean_is_unweighted() {
        let r = MatrixReport::from_cells(alloc::vec![cell("lid", "open", 8, 10), cell("drawer", "open", 3, 5)]).unwrap();
        assert!((r.skill_means["open"] - 0.7).abs() < 1e-15);
        assert!((r.grand_mean.unwrap() - 11.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn missing_cells_are_reported() {
        let mut cells = alloc::vec![cell("lid", "open", 1, 2)];
        cells.push(CellResult {
            robot: "gripper-bot".into(),
            family: "door".into(),
            skill: "open".into(),
            outcome: CellOutcome::Missing("no checkpoint".into()),
        });
        let r = MatrixReport::from_cells(cells).unwrap();
        let csv = r.to_csv();
        assert!(csv.contains("gripper-bot,door,missing\n"), "{csv}");
        assert!(csv.contains("gripper-bot,lid,0.5000\n"));
        assert_eq!(r.skill_means["open"], 0.5);
    }

    #[test]
    fn empty_cell_is_an_error() {
        assert_eq!(MatrixReport::from_cells(alloc::vec![cell("lid", "open", 0, 0)]), Err(Error::NoEpisodes));
        let task = TaskSpec::by_id("lid-open").unwrap();
        let got = run_controller(
            &ScriptedController,
            &task,
            &gripper_bot(),
            &EpisodeConfig::default(),
            &RewardWeights::default(),
            0,
            &Sequential,
        );
        assert_eq!(got, Err(Error::NoEpisodes));
    }

    #[test]
    fn episode_records_regenerate_the_report() {
        let r = MatrixReport::from_cells(alloc::vec![cell("lid", "open", 3, 4), cell("cart", "push", 1, 3)]).unwrap();
        let again = MatrixReport::from_episodes_csv(&r.episodes_csv()).unwrap();
        assert_eq!(again.to_csv(), r.to_csv());
    }
}
