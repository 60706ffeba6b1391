use std::path::Path;
use std::process::Command;

fn partopt(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_partopt"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

const SPEC: &str = r#"
particles = 8
[target]
kind = "toy"
potential = "quad-modal-gauss"
[sampler]
kind = "w-sgld"
stepsize = 0.05
iterations = 20
plan_scale = 0.8
[metrics]
names = ["mmd", "mode-coverage"]
cadence = 5
reference_samples = 200
grid_resolution = 60
[output]
dir = "results"
"#;

#[test]
fn validate_echoes_normal_form() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.toml"), SPEC).unwrap();
    let (code, out, _) = partopt(&["validate", "a.toml"], dir.path());
    assert_eq!(code, 0);
    assert!(out.contains("entropic_reg = 1.0") && out.contains("repeats = 1"), "{out}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), SPEC.replace("plan_scale", "plan_scal")).unwrap();
    let (code, _, err) = partopt(&["validate", "bad.toml"], dir.path());
    assert_eq!(code, 1);
    assert!(err.contains("bad.toml:10:1") && err.contains("`plan_scale`"), "{err}");

    let (code, _, _) = partopt(&["run", "missing.toml"], dir.path());
    assert_eq!(code, 3);

    let diverging = SPEC.replace("stepsize = 0.05", "stepsize = 1e6").replace("w-sgld", "sgld")
        .replace("iterations = 20", "iterations = 200");
    std::fs::write(dir.path().join("boom.toml"), diverging).unwrap();
    let (code, _, err) = partopt(&["run", "boom.toml"], dir.path());
    assert_eq!(code, 2, "{err}");
    let repeats = std::fs::read_to_string(dir.path().join("results/repeats.csv")).unwrap();
    assert!(repeats.lines().nth(1).unwrap().starts_with("0,diverged,"), "{repeats}");
}

#[test]
fn run_then_plot() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.toml"), SPEC).unwrap();
    let (code, out, err) = partopt(&["run", "a.toml"], dir.path());
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("modes-covered"));
    let res = dir.path().join("results");
    for f in ["metrics.csv", "metrics_seed0.csv", "particles_seed0.csv", "summary.csv", "spec.toml", "curves.svg"] {
        assert!(res.join(f).exists(), "{f}");
    }
    let (code, _, _) = partopt(&["plot", "results/metrics.csv", "-o", "m.svg"], dir.path());
    assert_eq!(code, 0);
    let (code, _, _) = partopt(&["plot", "results/particles_seed0.csv", "-o", "p.svg"], dir.path());
    assert_eq!(code, 0);
    let svg = std::fs::read_to_string(dir.path().join("p.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 8);
}

#[test]
fn sweep_writes_one_directory_per_value() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.toml"), SPEC).unwrap();
    let (code, _, err) = partopt(
        &["sweep", "a.toml", "--param", "sampler.plan_scale", "--values", "0.2,0.8"],
        dir.path(),
    );
    assert_eq!(code, 0, "{err}");
    let res = dir.path().join("results");
    assert!(res.join("sampler.plan_scale=0.2/metrics.csv").exists());
    assert!(res.join("sampler.plan_scale=0.8/metrics.csv").exists());
    let sweep = std::fs::read_to_string(res.join("sweep.csv")).unwrap();
    assert!(sweep.starts_with("param,value,metric,iteration,mean,std,count\n"));
    assert!(sweep.contains("sampler.plan_scale,0.8,mmd,20,"));
    let spec = std::fs::read_to_string(res.join("sampler.plan_scale=0.2/spec.toml")).unwrap();
    assert!(spec.contains("plan_scale = 0.2"));

    let (code, _, _) = partopt(
        &["sweep", "a.toml", "--param", "sampler.stepsize", "--values=-1"],
        dir.path(),
    );
    assert_eq!(code, 1);
}
