use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;
use wmlg::asymptotics::{Dependence, DistributionModel, Marginal};
use wmlg::montecarlo::{simulate_panel, ProcessModel};

const SEED: &str = "20240601";

fn wmlg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wmlg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("invalid json ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn crate_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn assert_schema(name: &str, doc: &Value) {
    let text = std::fs::read_to_string(crate_path(&format!("schema/{name}.schema.json"))).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

struct Files {
    dir: TempDir,
}

impl Files {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn write(&self, name: &str, text: &str) -> String {
        let path = self.dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path.display().to_string()
    }

    fn fixture(&self) -> String {
        self.write("fixture.csv", "id,time,value\na,0,2\nb,0,4\nc,0,12\nd,0,20\n")
    }

    fn two_period(&self) -> String {
        self.write(
            "two.csv",
            "id,time,value\na,0,2\na,1,1\nb,0,4\nb,1,3\nc,0,12\nc,1,11\nd,0,20\nd,1,22\ne,0,7\ne,1,9\n",
        )
    }

    fn simulated(&self, name: &str, hi: f64, n: usize) -> String {
        let model = DistributionModel::new(
            vec![0.0, 1.0],
            vec![Marginal::Uniform { lo: 0.0, hi: 1.0 }, Marginal::Uniform { lo: 0.0, hi }],
            Dependence::Exchangeable(0.6),
        )
        .unwrap();
        let panel = simulate_panel(&ProcessModel::new(model, 7), n, 0).unwrap();
        let mut text = String::from("id,time,value\n");
        for (i, &t) in panel.times().iter().enumerate() {
            for (id, v) in panel.ids().iter().zip(panel.column(i)) {
                text.push_str(&format!("{id},{t},{v}\n"));
            }
        }
        self.write(name, &text)
    }
}

#[test]
fn compute_matches_hand_sums_on_fixture() {
    let f = Files::new();
    let input = f.fixture();
    let out = wmlg(&["compute", "--input", &input, "--index", "fgt", "--alpha", "1", "--z", "10", "--json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert_schema("index", &doc);
    assert!((doc["values"][0]["value"].as_f64().unwrap() - 0.35).abs() < 1e-12);
    assert_eq!(doc["values"][0]["headcount"], 2);

    let out = wmlg(&["compute", "--input", &input, "--index", "kakwani", "--k", "1", "--z", "10", "--json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let value = json(&out)["values"][0]["value"].as_f64().unwrap();
    assert!((value - 0.3666667).abs() < 1e-7, "{value}");
}

#[test]
fn compute_text_output_lists_each_time() {
    let f = Files::new();
    let out = wmlg(&["compute", "--input", &f.two_period(), "--index", "thon", "--z", "10"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("index thon"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn series_emits_csv_and_json() {
    let f = Files::new();
    let input = f.two_period();
    let out = wmlg(&["series", "--input", &input, "--index", "sen", "--z", "10"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "time,threshold,headcount,value");
    assert_eq!(lines.len(), 3);
    let out = wmlg(&["series", "--input", &input, "--index", "sen", "--z", "10", "--json"]);
    assert_schema("index", &json(&out));
}

#[test]
fn per_time_thresholds_come_from_file() {
    let f = Files::new();
    let input = f.two_period();
    let zfile = f.write("z.csv", "time,z\n0,10\n1,5\n");
    let out = wmlg(&["compute", "--input", &input, "--index", "fgt", "--alpha-exp", "0", "--z-file", &zfile, "--json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert_eq!(doc["values"][0]["threshold"], 10.0);
    assert_eq!(doc["values"][1]["threshold"], 5.0);
    assert_eq!(doc["values"][1]["headcount"], 2);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let f = Files::new();
    let input = f.fixture();
    let cfg = f.write("run.cfg", &format!("input = {input}\nindex = fgt\nalpha-exp = 2\nz = 10\n"));
    let base = json(&wmlg(&["compute", "--config", &cfg, "--json"]));
    assert!((base["values"][0]["value"].as_f64().unwrap() - (0.64 + 0.36) / 4.0).abs() < 1e-12);
    let over = json(&wmlg(&["compute", "--config", &cfg, "--alpha-exp", "1", "--json"]));
    assert!((over["values"][0]["value"].as_f64().unwrap() - 0.35).abs() < 1e-12);
}

#[test]
fn out_flag_writes_file() {
    let f = Files::new();
    let input = f.fixture();
    let target = f.dir.path().join("report.json");
    let out = wmlg(&["compute", "--input", &input, "--z", "10", "--json", "--out", target.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_schema("index", &doc);
}

#[test]
fn cov_plugin_and_analytic_outputs_follow_schema() {
    let f = Files::new();
    let input = f.simulated("sim.csv", 2.0, 400);
    let out = wmlg(&["cov", "--input", &input, "--index", "shorrocks", "--z", "0.5", "--json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert_schema("covariance", &doc);
    assert_eq!(doc["method"], "plugin-empirical");

    let out = wmlg(&[
        "cov", "--index", "kakwani", "--k", "2", "--z", "0.5", "--times", "0",
        "--marginals", "uniform:0:1", "--json",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert_schema("covariance", &doc);
    let gamma = doc["gamma"][0][0].as_f64().unwrap();
    assert!((gamma - 81.0 / 448.0).abs() < 1e-6, "{gamma}");

    let out = wmlg(&["cov", "--input", &input, "--z", "0.5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("time,"));
}

#[test]
fn variation_without_target_has_no_verdict() {
    let f = Files::new();
    let input = f.simulated("sim.csv", 2.0, 500);
    let out = wmlg(&["variation", "--input", &input, "--index", "shorrocks", "--z", "0.5", "--times", "0,1", "--json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert_schema("variation", &doc);
    assert!(doc.get("verdict").is_none());
    assert!(doc.get("target").is_none());
}

#[test]
fn variation_on_halving_scenario_is_achieved() {
    let f = Files::new();
    let p = (3.0 - 7f64.sqrt()) / 2.0;
    let input = f.simulated("halving.csv", 0.5 / p, 5000);
    let out = wmlg(&[
        "variation", "--input", &input, "--index", "shorrocks", "--z", "0.5", "--times", "0,1",
        "--target", "-0.5", "--json",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert_schema("variation", &doc);
    let rj = doc["delta_rj"].as_f64().unwrap();
    assert!((rj + 0.6).abs() < 0.05, "{rj}");
    assert_eq!(doc["verdict"], "achieved");
}

#[test]
fn variation_on_identical_sections_has_zero_change() {
    let f = Files::new();
    let input = f.write(
        "same.csv",
        "id,time,value\na,0,1\na,1,1\nb,0,3\nb,1,3\nc,0,6\nc,1,6\nd,0,12\nd,1,12\n",
    );
    let out = wmlg(&["variation", "--input", &input, "--z", "8", "--target", "-0.5", "--json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert_schema("variation", &doc);
    assert_eq!(doc["delta_j"], 0.0);
    assert_eq!(doc["verdict"], "not-achieved");
}

#[test]
fn variation_text_reports_verdict() {
    let f = Files::new();
    let out = wmlg(&["variation", "--input", &f.two_period(), "--z", "10", "--target", "0.5"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("delta_rj"));
    assert!(text.contains("verdict"));
}

#[test]
fn check_reports_diagnostics() {
    let f = Files::new();
    let input = f.simulated("sim.csv", 2.0, 200);
    let out = wmlg(&["check", "--input", &input, "--z", "0.5", "--json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert_schema("diagnostics", &doc);
    assert_eq!(doc["marked_mass_bounded"], true);
    assert_eq!(doc["increment_quotients"].as_array().unwrap().len(), 1);
}

#[test]
fn default_clt_config_passes() {
    let cfg = crate_path("configs/clt.cfg");
    let out = wmlg(&["simulate", "--config", cfg.to_str().unwrap(), "--json"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc = json(&out);
    assert_schema("experiment", &doc);
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["experiment"], "clt");
    assert_eq!(doc["provenance"]["seed"], 20240601);
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--experiment", "clt", "--seed", SEED, "--n", "200", "--replications", "100", "--json"];
    assert_eq!(wmlg(&args).stdout, wmlg(&args).stdout);
}

#[test]
fn coverage_with_zero_variance_fails() {
    let cfg = crate_path("configs/coverage.cfg");
    let out = wmlg(&[
        "simulate", "--config", cfg.to_str().unwrap(), "--replications", "100", "--n", "300",
        "--set", "variance-override=0", "--json",
    ]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let doc = json(&out);
    assert_schema("experiment", &doc);
    assert_eq!(doc["passed"], false);
}

#[test]
fn every_experiment_emits_schema_valid_json() {
    let cases: [&[&str]; 5] = [
        &["--experiment", "representation", "--set", "n_list=100,400", "--replications", "20"],
        &["--experiment", "quantile-form", "--n", "200", "--replications", "20"],
        &["--experiment", "consistency", "--set", "n_list=100,400", "--replications", "10"],
        &["--experiment", "plugin", "--set", "n_list=100,400", "--replications", "10"],
        &["--experiment", "arbitration", "--n", "200", "--replications", "50"],
    ];
    for extra in cases {
        let mut args = vec!["simulate", "--seed", SEED, "--json"];
        args.extend_from_slice(extra);
        let out = wmlg(&args);
        assert!([0, 1].contains(&code(&out)), "{extra:?}: {}", stderr(&out));
        assert_schema("experiment", &json(&out));
    }
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let f = Files::new();
    let input = f.fixture();
    let bad_cfg = f.write("bad.cfg", "colour = blue\n");
    let sim_cfg = f.write("sim.cfg", "experiment = clt\nbogus = 1\n");
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["frobnicate"],
        vec!["compute", "--input", &input, "--z", "ten"],
        vec!["compute", "--input", &input],
        vec!["compute", "--z", "10"],
        vec!["compute", "--input", &input, "--z", "10", "--index", "watts"],
        vec!["compute", "--input", &input, "--z", "10", "--index", "fgt"],
        vec!["compute", "--input", &input, "--z", "10", "--cost", "cubic"],
        vec!["compute", "--input", &input, "--z", "10", "--cost", "pwl:/no/such/knots.csv"],
        vec!["compute", "--input", &input, "--z", "10", "--config", &bad_cfg],
        vec!["compute", "--input", &input, "--z", "10", "--config", "/no/such.cfg"],
        vec!["compute", "--input", &input, "--z", "10", "--z-file", "/no/such/z.csv"],
        vec!["compute", "--input", &input, "--z", "10", "--columns", "id,time"],
        vec!["variation", "--input", &input, "--z", "10"],
        vec!["variation", "--input", &input, "--z", "10", "--times", "0,1", "--level", "2"],
        vec!["check", "--input", &input, "--z", "10", "--r", "0.9"],
        vec!["cov", "--marginals", "uniform:0:1", "--z", "0.5"],
        vec!["cov", "--marginals", "gamma:1", "--z", "0.5", "--times", "0"],
        vec!["simulate", "--experiment", "bogus", "--seed", "1"],
        vec!["simulate", "--experiment", "clt"],
        vec!["simulate", "--seed", "1"],
        vec!["simulate", "--experiment", "clt", "--seed", "1", "--set", "nokey"],
        vec!["simulate", "--experiment", "clt", "--seed", "1", "--set", "colour=blue"],
        vec!["simulate", "--config", &sim_cfg, "--seed", "1"],
        vec!["simulate", "--config", "/no/such.cfg", "--seed", "1"],
    ];
    for args in cases {
        let out = wmlg(&args);
        assert_eq!(code(&out), 2, "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn missing_input_names_the_path() {
    let out = wmlg(&["compute", "--input", "/no/such/panel.csv", "--z", "10"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("/no/such/panel.csv"));
}

#[test]
fn data_errors_exit_with_one() {
    let f = Files::new();
    let unbalanced = f.write("unbalanced.csv", "id,time,value\na,0,1\na,1,2\nb,0,3\n");
    let negative = f.write("negative.csv", "id,time,value\na,0,-1\nb,0,3\n");
    let garbled = f.write("garbled.csv", "id,time,value\na,0,abc\n");
    let headerless = f.write("headerless.csv", "who,when,what\na,0,1\n");
    let input = f.fixture();
    let two = f.two_period();
    let cases: Vec<Vec<&str>> = vec![
        vec!["compute", "--input", &unbalanced, "--z", "10"],
        vec!["compute", "--input", &negative, "--z", "10"],
        vec!["compute", "--input", &garbled, "--z", "10"],
        vec!["compute", "--input", &headerless, "--z", "10"],
        vec!["compute", "--input", &input, "--z", "10", "--times", "5"],
        vec!["variation", "--input", &two, "--z", "1", "--times", "0,1"],
        vec!["cov", "--input", &input, "--z", "1"],
    ];
    for args in cases {
        let out = wmlg(&args);
        assert_eq!(code(&out), 1, "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn successful_commands_exit_with_zero() {
    let f = Files::new();
    let input = f.fixture();
    let two = f.two_period();
    let cases: Vec<Vec<&str>> = vec![
        vec!["--help"],
        vec!["--version"],
        vec!["compute", "--input", &input, "--z", "10"],
        vec!["compute", "--input", &input, "--z", "10", "--index", "general", "--weights", "kakwani:2"],
        vec!["compute", "--input", &input, "--z", "10", "--index", "thon", "--cost", "power:2"],
        vec!["series", "--input", &two, "--z", "10"],
        vec!["cov", "--input", &two, "--z", "10"],
        vec!["variation", "--input", &two, "--z", "10"],
        vec!["check", "--input", &two, "--z", "10"],
    ];
    for args in cases {
        let out = wmlg(&args);
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
    }
}
