use std::f64::consts::TAU;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curve-bpe"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const CUSP: &str = r#"{"coords":[{"num":[[0,0],[0,0],[1,0]],"den":[[1,0]]},{"num":[[0,0],[0,0],[0,0],[1,0]],"den":[[1,0]]}]}"#;

#[test]
fn analyze_hyperbola_has_no_bounded_component() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["analyze", "--preset", "hyperbola", "--dmax", "16"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = read(&dir.path().join("analyze.json"));
    let r = &v["result"];
    assert_eq!(r["scan"]["bounded_components"].as_array().unwrap().len(), 0);
    assert_eq!(r["density"]["verdict"], "saturates_node_space");
    assert_eq!(r["consistent"], true);
    assert_eq!(v["config"]["command"], "analyze");
    assert_eq!(v["config"]["arguments"]["analyze"]["dmax"], 16);
    let csv = std::fs::read_to_string(dir.path().join("heatmap.csv")).unwrap();
    assert!(csv.starts_with("re,im,code,last_c,growth_rate\n"));
    assert!(dir.path().join("run.log").exists());
}

#[test]
fn analyze_disk_reproduces_szego_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["analyze", "--preset", "projection", "--a", "0", "--dmax", "60", "--grid", "-1.5,1.5,60"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read(&dir.path().join("analyze.json"))["result"].clone();
    let comps = r["scan"]["bounded_components"].as_array().unwrap();
    assert_eq!(comps.len(), 1);
    let cells = r["scan"]["cells"].as_array().unwrap();
    for k in comps[0].as_array().unwrap() {
        let cell = &cells[k.as_u64().unwrap() as usize];
        let (x, y) = (cell["grid_point"][0].as_f64().unwrap(), cell["grid_point"][1].as_f64().unwrap());
        let r2 = x * x + y * y;
        assert!(r2 < 1.0);
        if r2 < 0.81 {
            let c = cell["last_c"].as_f64().unwrap();
            let exact = 1.0 / (TAU * (1.0 - r2));
            assert!((c * c - exact).abs() <= 0.02 * exact);
        }
    }
}

#[test]
fn outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--seed", "7", "analyze", "--preset", "cusp", "--dmax", "12", "--grid", "-1.2,1.2,12"];
    assert_eq!(code(&run(a.path(), &args)), 0);
    assert_eq!(code(&run(b.path(), &args)), 0);
    for f in ["analyze.json", "heatmap.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn pushforward_then_pullback_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cusp.json"), CUSP).unwrap();
    assert_eq!(code(&run(d, &["project", "--preset", "hyperbola", "--a", "0", "--nodes", "64"])), 0);
    let nu_path = d.join("project.measure.json");
    let o = run(
        d,
        &["pushforward", "--map", d.join("cusp.json").to_str().unwrap(), "--measure", nu_path.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mu_path = d.join("pushforward.measure.json");
    let o = run(
        d,
        &["pullback", "--map", d.join("cusp.json").to_str().unwrap(), "--measure", mu_path.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read(&d.join("pullback.json"))["result"].clone();
    assert_eq!(r["dropped_mass"], 0.0);
    assert!(r["worst_isometry_defect"].as_f64().unwrap() < 1e-12);

    let nu = read(&nu_path);
    let back = read(&d.join("pullback.measure.json"));
    assert_eq!(nu["weights"], back["weights"]);
    let (a, b) = (nu["nodes"].as_array().unwrap(), back["nodes"].as_array().unwrap());
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        for k in 0..2 {
            let dx = x[0][k].as_f64().unwrap() - y[0][k].as_f64().unwrap();
            assert!(dx.abs() < 1e-12);
        }
    }
}

#[test]
fn excessive_dropped_mass_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // ζ ↦ (ζ², ζ⁴) is two-to-one, so every fiber has two points
    let double = r#"{"coords":[{"num":[[0,0],[0,0],[1,0]],"den":[[1,0]]},{"num":[[0,0],[0,0],[0,0],[0,0],[1,0]],"den":[[1,0]]}]}"#;
    std::fs::write(d.join("double.json"), double).unwrap();
    assert_eq!(code(&run(d, &["project", "--preset", "hyperbola", "--nodes", "16"])), 0);
    let map = d.join("double.json");
    let nu = d.join("project.measure.json");
    assert_eq!(
        code(&run(d, &["pushforward", "--map", map.to_str().unwrap(), "--measure", nu.to_str().unwrap()])),
        0
    );
    let mu = d.join("pushforward.measure.json");
    let o = run(d, &["pullback", "--map", map.to_str().unwrap(), "--measure", mu.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(read(&d.join("pullback.json"))["result"]["relative_dropped_mass"].as_f64().unwrap() > 0.99);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["analyze", "--preset", "torus"])), 2);
    assert_eq!(code(&run(d, &["analyze", "--preset", "circle", "--grid", "1,0,4"])), 2);
    assert_eq!(code(&run(d, &["analyze", "--preset", "circle", "--a", "2"])), 2);
    assert_eq!(code(&run(d, &["analyze"])), 2);
    assert_eq!(code(&run(d, &["analyze", "--preset", "circle", "--plateau-tol", "-1"])), 2);
    // coupling needs 4 d_max + 1 ≤ N
    assert_eq!(code(&run(d, &["analyze", "--preset", "circle", "--nodes", "32", "--dmax", "10"])), 3);
    assert_eq!(code(&run(d, &["analyze", "--measure", "/nonexistent.json"])), 2);
    assert_eq!(code(&run(d, &["no-such-command"])), 2);
}

#[test]
fn codim_blocks_witness_region() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["codim", "--preset", "cusp"])), 0);
    let r = read(&d.join("codim.json"))["result"].clone();
    assert_eq!(r["codimension"], 1);
    assert_eq!(r["complement"], serde_json::json!([1]));

    assert_eq!(code(&run(d, &["blocks", "--preset", "circle", "--nodes", "64", "--degree", "10"])), 0);
    let r = read(&d.join("blocks.json"))["result"].clone();
    assert!((r[0]["norm_s"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!(r[0]["reassembly_error"].as_f64().unwrap() < 1e-10);

    let o = run(d, &["witness", "--preset", "hyperbola", "--nodes", "64", "--beta", "0.5", "--through-map", "--degrees", "5,10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read(&d.join("witness.json"))["result"].clone();
    assert_eq!(r.as_array().unwrap().len(), 2);
    assert!(r[1]["residual"].as_f64().unwrap() > 0.1);

    assert_eq!(code(&run(d, &["region", "--preset", "hyperbola", "--nodes", "64"])), 0);
    let r = read(&d.join("region.json"))["result"].clone();
    assert_eq!(r["representatives"], serde_json::json!([[0.0, 0.0]]));
    assert_eq!(r["under_resolved"], false);
    assert_eq!(code(&run(d, &["region", "--preset", "hyperbola", "--nodes", "64", "--poles", "0.1,0"])), 0);
    assert_eq!(code(&run(d, &["region", "--preset", "hyperbola", "--nodes", "64", "--poles", "1,0"])), 2);
}

#[test]
fn project_onto_the_ellipse() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["project", "--preset", "hyperbola", "--nodes", "32", "--a", "2"])), 0);
    let m = read(&d.join("project.measure.json"));
    assert_eq!(m["dim"], 1);
    for x in m["nodes"].as_array().unwrap() {
        let (re, im) = (x[0][0].as_f64().unwrap(), x[0][1].as_f64().unwrap());
        assert!(((re / 3.0).powi(2) + im * im - 1.0).abs() < 1e-12);
    }
}
