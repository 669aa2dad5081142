use std::path::{Path, PathBuf};

use stable_sde::io::{read_trace, run_command, ExperimentConfig};

const SMALL: &str = r#"
seed = 31
beta = 1.5

[model]
drift = "alpha1*(x - alpha2)"
scale = "exp(gamma*cos(x))"
alpha = [
    { name = "alpha1", lower = -10.0, upper = 10.0 },
    { name = "alpha2", lower = -10.0, upper = 10.0 },
]
gamma = [{ name = "gamma", lower = -10.0, upper = 10.0 }]

[data.simulate]
n = 200
theta0 = { alpha1 = -1.0, alpha2 = 0.5, gamma = 0.5 }

[mcmc]
iterations = 400
burn_in = 100
"#;

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["stable-sde"];
    argv.extend_from_slice(args);
    run_command(argv)
}

fn config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fit_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("out");
    assert_eq!(run(&["fit", "-c", s(&cfg), "-o", s(&out)]), 0);
    let trace = read_trace(&out.join("trace.csv")).unwrap();
    assert_eq!(trace.thetas.len(), 400);
    assert_eq!(trace.param_names, ["alpha1", "alpha2", "gamma"]);
    let summary = json(&out.join("summary.json"));
    let rate = summary["acceptance_rate"].as_f64().unwrap();
    assert!(rate > 0.0 && rate < 1.0);
    for key in ["acceptance_rate", "posterior_mean", "posterior_sd", "mle", "beta", "N", "T", "h", "seed"] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    assert!(summary["drift_average"].is_number() && summary["scale_average"].is_number());
    assert_eq!(summary["N"], 200);
    // the echoed config reads back to the same experiment
    let echoed = ExperimentConfig::load(&out.join("config.toml")).unwrap();
    assert_eq!(echoed.seed, 31);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "c.toml", SMALL);
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        assert_eq!(run(&["simulate", "-c", s(&cfg), "-o", s(&out)]), 0);
        assert_eq!(run(&["fit", "-c", s(&cfg), "-o", s(&out)]), 0);
        let files: Vec<Vec<u8>> = ["observations.csv", "trace.csv", "summary.json"]
            .iter()
            .map(|f| std::fs::read(out.join(f)).unwrap())
            .collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
    let other = dir.path().join("other");
    assert_eq!(run(&["fit", "-c", s(&cfg), "-o", s(&other), "--seed", "32"]), 0);
    assert_ne!(std::fs::read(other.join("trace.csv")).unwrap(), outputs[0][1]);
}

#[test]
fn sweep_on_the_paper_grid_has_seven_rows() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[sweep]\nn_list = [10, 50, 100, 250, 500, 1000, 2000]\nreplicates = 1\niterations = 20\n");
    let cfg = config(dir.path(), "c.toml", &text);
    let out = dir.path().join("out");
    assert_eq!(run(&["sweep", "-c", s(&cfg), "-o", s(&out)]), 0);
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,mean_rate,sd_rate");
    assert_eq!(lines.len(), 8);
    assert!(lines[7].starts_with("2000,"));
}

#[test]
fn other_subcommands_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("n = 200", "n = 400");
    let cfg = config(dir.path(), "c.toml", &text);
    let out = dir.path().join("out");
    assert_eq!(run(&["mle", "-c", s(&cfg), "-o", s(&out)]), 0);
    assert_eq!(json(&out.join("mle.json"))["mle"].as_array().unwrap().len(), 3);
    assert_eq!(run(&["bvm", "-c", s(&cfg), "-o", s(&out)]), 0);
    let bvm = json(&out.join("bvm.json"));
    assert_eq!(bvm["per_coordinate_ks"].as_array().unwrap().len(), 3);
    assert_eq!(bvm["retained_draws"], 300);
    assert_eq!(run(&["pp", "-c", s(&cfg), "-o", s(&out)]), 0);
    let pp = std::fs::read_to_string(out.join("pp.csv")).unwrap();
    assert_eq!(pp.lines().count(), 401);
    assert_eq!(run(&["estimate-beta", "-c", s(&cfg), "-o", s(&out)]), 0);
    let beta = json(&out.join("beta.json"))["beta"].as_f64().unwrap();
    assert!((1.0..=1.99).contains(&beta));
}

#[test]
fn file_data_with_gaps_is_loaded() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,price\n");
    let obs: Vec<f64> = (0..300).map(|i| (i as f64 * 0.37).sin() + 0.01 * i as f64).collect();
    for (i, x) in obs.iter().enumerate() {
        if i % 50 == 7 {
            csv.push_str(&format!("{i},NA\n"));
        } else {
            csv.push_str(&format!("{i},{x}\n"));
        }
    }
    std::fs::write(dir.path().join("series.csv"), csv).unwrap();
    let text = SMALL.replace(
        "[data.simulate]\nn = 200\ntheta0 = { alpha1 = -1.0, alpha2 = 0.5, gamma = 0.5 }",
        "[data]\npath = \"series.csv\"\ncolumn = \"price\"\nt = 10.0",
    );
    let cfg = config(dir.path(), "c.toml", &text);
    let out = dir.path().join("out");
    assert_eq!(run(&["mle", "-c", s(&cfg), "-o", s(&out)]), 0);
    assert_eq!(json(&out.join("mle.json"))["N"], 293);
}

#[test]
fn standin_real_data_setup_completes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs/ibm_standin.toml");
    let out = dir.path().join("out");
    assert_eq!(run(&["fit", "-c", s(&cfg), "-o", s(&out)]), 0);
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["N"], 1155);
    assert_eq!(summary["T"], 1170.0);
    assert_eq!(summary["beta"], 1.411);
    assert_eq!(read_trace(&out.join("trace.csv")).unwrap().thetas.len(), 10_000);
    assert_eq!(run(&["pp", "-c", s(&cfg), "-o", s(&out)]), 0);
    assert!(out.join("pp.csv").exists());
}

#[test]
fn errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["no-such-command"]), 1);
    assert_eq!(run(&["fit", "-c", s(&dir.path().join("missing.toml"))]), 1);

    let bad = SMALL
        .replace("beta = 1.5", "beta = 2.5")
        .replace("gamma = 0.5 }", "delta = 0.5 }")
        .replace("iterations = 400", "iterations = 400\nvariant = \"cpm\"");
    let cfg = config(dir.path(), "bad.toml", &bad);
    assert_eq!(run(&["fit", "-c", s(&cfg)]), 1);
    match ExperimentConfig::load(&cfg).unwrap_err() {
        stable_sde::Error::Config(v) => assert!(v.len() >= 4, "{v:?}"),
        e => panic!("{e}"),
    }

    // an exploding path is a numerical failure
    let boom = SMALL
        .replace("drift = \"alpha1*(x - alpha2)\"", "drift = \"alpha1*x^3 + 0*alpha2\"")
        .replace("alpha1 = -1.0", "alpha1 = 10.0")
        .replace("n = 200", "n = 200\nt = 100.0\nx0 = 5.0");
    let cfg = config(dir.path(), "boom.toml", &boom);
    assert_eq!(run(&["simulate", "-c", s(&cfg), "-o", s(&dir.path().join("o"))]), 2);

    // unwritable output
    let cfg = config(dir.path(), "c.toml", SMALL);
    assert_eq!(run(&["simulate", "-c", s(&cfg), "-o", "/proc/nonexistent/out"]), 1);
}
