use std::path::Path;

use partopt::run_experiment;
use partopt::spec::{parse_spec, ExperimentSpec};

fn spec(text: &str) -> ExperimentSpec {
    parse_spec(text, Path::new("example.toml")).unwrap()
}

#[test]
fn pi_sgld_covers_both_bimodal_modes() {
    let s = spec(
        r#"
particles = 200
[target]
kind = "toy"
potential = "bimodal-gauss"
[sampler]
kind = "pi-sgld"
stepsize = 0.05
iterations = 2000
[metrics]
names = ["mode-coverage"]
cadence = 2000
[output]
plots = false
"#,
    );
    let run = &run_experiment(&s).unwrap().runs[0];
    for k in 0..2 {
        let c = run.final_metric(&format!("mode-coverage-{k}")).unwrap();
        assert!(c >= 0.35, "mode {k}: {c}");
    }
}

#[test]
fn pi_sgld_covers_at_least_as_many_quad_modes_as_sgld() {
    let base = r#"
particles = 50
[target]
kind = "toy"
potential = "quad-modal-gauss"
[sampler]
kind = "KIND"
stepsize = 0.05
iterations = 3000
[metrics]
names = ["mode-coverage"]
cadence = 3000
[output]
plots = false
[run]
repeats = 5
"#;
    let covered = |kind: &str| -> Vec<f64> {
        run_experiment(&spec(&base.replace("KIND", kind)))
            .unwrap()
            .runs
            .iter()
            .map(|r| r.final_metric("modes-covered").unwrap())
            .collect()
    };
    let sgld = covered("sgld");
    let pi = covered("pi-sgld");
    let wins = pi.iter().zip(&sgld).filter(|(p, s)| p >= s).count();
    assert!(wins >= 4, "pi-sgld {pi:?} vs sgld {sgld:?}");
}
