use std::path::Path;

use manibench::checkpoint::Checkpoint;
use manibench::cli;
use manibench::data::Manifest;

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("manibench").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&[]).0, 2);
    assert_eq!(run(&["fly"]).0, 2);
    assert_eq!(run(&["eval", "--episodes", "many"]).0, 2);
    let (code, _, err) = run(&["eval", "--robot", "arm"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown robot"), "{err}");
}

#[test]
fn config_errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[ppo]\nlerning_rate = 1e-3\n");
    let (code, _, err) = run(&["train", "--config", &cfg]);
    assert_eq!(code, 2);
    assert!(err.contains("lerning_rate"), "{err}");

    let cfg = write_config(dir.path(), "[ppo]\nclip_ratio = 2.0\n");
    assert_eq!(run(&["train", "--config", &cfg]).0, 2);
}

#[test]
fn missing_checkpoint_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["eval", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("checkpoint.mmrl"), "{err}");
}

#[test]
fn train_then_eval_reports_a_success_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = write_config(dir.path(), "[ppo]\niterations = 2\nnum_envs = 4\nhidden = [16, 16]\n");
    let (code, text, err) = run(&["train", "--config", &cfg, "--out", out, "--task", "drawer-open"]);
    assert_eq!(code, 0, "{err}");
    assert!(text.contains("iterations=2"), "{text}");
    let ckpt = Checkpoint::load(&dir.path().join("checkpoint.mmrl")).unwrap();
    assert_eq!(ckpt.robot, "gripper-bot");
    let curve = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 3);

    let (code, text, _) = run(&["eval", "--config", &cfg, "--out", out, "--task", "drawer-open", "--episodes", "3"]);
    assert_eq!(code, 0);
    let rate: f64 = text.trim().strip_prefix("success_rate=").unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&rate));

    // A checkpoint for another robot is rejected.
    let (code, _, err) = run(&["eval", "--config", &cfg, "--out", out, "--robot", "hand-bot", "--episodes", "1"]);
    assert_eq!(code, 1);
    assert!(err.contains("does not fit"), "{err}");
}

#[test]
fn scripted_eval_and_ablation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "controller = \"scripted\"\n");
    let (code, text, _) = run(&["eval", "--config", &cfg, "--episodes", "4"]);
    assert_eq!((code, text.as_str()), (0, "success_rate=1\n"));

    let cfg = write_config(
        dir.path(),
        "[ablation]\n[episode]\nbase_offset_range = [0.8485, 0.8485]\nfixed_base_offset_range = [0.8485, 0.8485]\n",
    );
    let (code, text, _) = run(&["eval", "--config", &cfg, "--episodes", "3"]);
    assert_eq!((code, text.as_str()), (0, "mobile_rate=1\nfixed_rate=0\n"));
}

#[test]
fn matrix_eval_marks_missing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[matrix]\ncells = [\n  { robot = \"gripper-bot\", task = \"lid-open\", controller = \"scripted\" },\n  { robot = \"hand-bot\", task = \"drawer-open\", checkpoint = \"nowhere.mmrl\" },\n]\n",
    );
    let out = dir.path().join("report");
    let (code, text, err) = run(&["eval", "--config", &cfg, "--episodes", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(text.contains("missing"), "{text}");
    assert_eq!(std::fs::read_to_string(out.join("matrix.csv")).unwrap(), text);
    assert!(out.join("episodes.csv").is_file());
}

#[test]
fn gen_data_stats_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("data");
    let r = root.to_str().unwrap();
    let (code, text, err) = run(&["gen-data", "--task", "all", "--skill", "open", "--episodes", "2", "--out", r]);
    assert_eq!(code, 0, "{err}");
    assert!(text.contains("failures=0"), "{text}");
    let manifest = Manifest::load(&root).unwrap();
    assert!(manifest.tasks.len() >= 3);
    assert!(manifest.tasks.iter().all(|t| t.id.ends_with("-open") && t.count == 2));

    let (code, stats, _) = run(&["stats", r]);
    assert_eq!(code, 0);
    assert!(stats.contains(&format!("trajectories,{}", manifest.tasks.len() * 2)), "{stats}");

    let (code, text, _) = run(&["replay", r]);
    assert_eq!((code, text), (0, format!("replayed={}\n", manifest.tasks.len() * 2)));

    // A corrupted file fails replay with its location.
    let first = root.join(&manifest.tasks[0].files[0]);
    let mut bytes = std::fs::read(&first).unwrap();
    let n = bytes.len();
    bytes.truncate(n - 5);
    std::fs::write(&first, bytes).unwrap();
    let (code, _, err) = run(&["replay", first.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("at byte"), "{err}");
}

#[test]
fn worker_count_does_not_change_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    std::env::set_var("MANIBENCH_WORKERS", "2");
    let ra = run(&["gen-data", "--task", "lid-open", "--episodes", "3", "--workers", "1", "--out", a.to_str().unwrap()]);
    std::env::remove_var("MANIBENCH_WORKERS");
    let rb = run(&["gen-data", "--task", "lid-open", "--episodes", "3", "--workers", "3", "--out", b.to_str().unwrap()]);
    assert_eq!((ra.0, rb.0), (0, 0));
    for f in Manifest::load(&a).unwrap().files(&a) {
        let rel = f.strip_prefix(&a).unwrap();
        assert_eq!(std::fs::read(&f).unwrap(), std::fs::read(b.join(rel)).unwrap());
    }
}
