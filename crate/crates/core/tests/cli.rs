use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tourney-extremes"))
        .args(args)
        .output()
        .unwrap()
}

fn data_rows(csv: &[u8]) -> Vec<String> {
    String::from_utf8_lossy(csv)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn exact_grid_has_one_row_per_point() {
    let out = cli(&["exact", "--model", "chess", "--n", "100,1000", "--t", "-1,0,1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("# tourney-extremes exceedance v1\n# manifest {"));
    assert_eq!(data_rows(&out.stdout).len(), 6);
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&["exact", "--model", "chess", "--n", "3"]).status.code(), Some(2));
    assert_eq!(cli(&["exact", "--model", "nonsense.json", "--n", "10"]).status.code(), Some(2));
    assert_eq!(cli(&["simulate", "--model", "chess", "--n", "10,20"]).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
    let capacity = cli(&["exact", "--model", "chess", "--n", "1000000000", "--t", "0"]);
    assert_eq!(capacity.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&capacity.stderr).contains("n = 1000000000"));
    assert_eq!(cli(&["verify", "--budget", "100000"]).status.code(), Some(0));
    assert_eq!(
        cli(&["verify", "--budget", "100000", "--mutate", "negate-covariance"]).status.code(),
        Some(1)
    );
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}

#[test]
fn bounds_and_limits_columns() {
    let out = cli(&["bounds", "--model", "classical", "--n", "8,256", "--t", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = data_rows(&out.stdout);
    assert_eq!(rows.len(), 2);
    // No envelope below n = 16.
    assert!(rows[0].ends_with(",,"), "{}", rows[0]);
    assert!(!rows[1].ends_with(','));

    let out = cli(&["limits", "--n", "100", "--t", "lin:-2:2:5", "--j", "3"]);
    let text = String::from_utf8_lossy(&out.stdout);
    let header = text.lines().nth(2).unwrap();
    assert!(header.ends_with("limit_cdf_j0,limit_cdf_j1,limit_cdf_j2,limit_cdf_j3"));
    assert_eq!(data_rows(&out.stdout).len(), 5);
}

#[test]
fn reruns_are_byte_identical_and_timing_goes_to_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let common = ["simulate", "--model", "chess", "--n", "150", "--replicates", "300", "--seed", "4", "--j", "1"];
    for (out, workers) in [(&a, "1"), (&b, "8")] {
        let mut args = common.to_vec();
        args.extend(["--workers", workers, "--out", path(out)]);
        assert_eq!(cli(&args).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let sidecar: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a.json.run.json")).unwrap()).unwrap();
    assert_eq!(sidecar["workers"], 1);
    assert!(sidecar["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn outputs_reproduce_through_config() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let out = cli(&[
        "exact", "--model", "classical", "--n", "geom:64:4096:4", "--t", "-0.5,0.5", "--out", path(&first),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let second = dir.path().join("second.csv");
    assert_eq!(cli(&["exact", "--config", path(&first), "--out", path(&second)]).status.code(), Some(0));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());

    let sim = dir.path().join("sim.json");
    let args = ["simulate", "--model", "classical", "--n", "64", "--replicates", "100", "--out", path(&sim)];
    assert_eq!(cli(&args).status.code(), Some(0));
    let again = dir.path().join("again.json");
    assert_eq!(cli(&["simulate", "--config", path(&sim), "--out", path(&again)]).status.code(), Some(0));
    assert_eq!(std::fs::read(&sim).unwrap(), std::fs::read(&again).unwrap());

    // Flags win over the file.
    let other = dir.path().join("other.json");
    let args = ["simulate", "--config", path(&sim), "--seed", "99", "--out", path(&other)];
    assert_eq!(cli(&args).status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&other).unwrap()).unwrap();
    assert_eq!(doc["manifest"]["config"]["seed"], 99);
    assert_eq!(doc["report"]["replicates"], 100);
}

#[test]
fn config_file_and_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    std::fs::write(&model, r#"{"denominator": 2, "support_exact": [[0, [1, 3]], [1, [1, 3]], [2, [1, 3]]]}"#).unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(
        &config,
        format!(r#"{{"model": "{}", "n": [50, 500], "t": "lin:-1:1:3"}}"#, path(&model)),
    )
    .unwrap();
    let out = cli(&["exact", "--config", path(&config), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 6);

    std::fs::write(&config, r#"{"model": "chess", "bogus": 1}"#).unwrap();
    assert_eq!(cli(&["exact", "--config", path(&config), "--n", "10"]).status.code(), Some(2));
}
