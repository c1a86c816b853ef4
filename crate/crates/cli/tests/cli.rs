use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use magspec::lattice::io::{write_binary, ValueKind};
use magspec::lattice::{rasterize, Cube, GridFunction};
use serde_json::Value;
use sha2::{Digest, Sha256};

fn run(cmd: &str, config: &str, dir: &Path) -> (Output, PathBuf) {
    let cfg = dir.join(format!("{cmd}.toml"));
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("out-{cmd}"));
    let output = Command::new(env!("CARGO_BIN_EXE_magspec"))
        .arg(cmd)
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .current_dir(dir)
        .env_remove("MAGSPEC_THREADS")
        .output()
        .unwrap();
    (output, out)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn capacity_record_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(
        "capacity",
        "dim = 3\nm = 9\ncube = { center = [0.0, 0.0, 0.0], edge = 1.0 }\nset = { kind = \"full\" }\n",
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cap = json(&out.join("capacity.json"));
    assert!(cap["capacity"]["value"].as_f64().unwrap() > 0.0);
    assert!(cap["convention"].as_str().unwrap().contains("space"));
    let rec = json(&out.join("run.json"));
    assert_eq!(rec["exit_code"], 0);
    let cfg = std::fs::read(dir.path().join("capacity.toml")).unwrap();
    assert_eq!(rec["config_sha256"].as_str().unwrap(), hex(&cfg));
    let listed: Vec<&str> = rec["outputs"].as_array().unwrap().iter().map(|e| e["path"].as_str().unwrap()).collect();
    assert_eq!(listed, ["capacity.json", "set.rle"]);
    for e in rec["outputs"].as_array().unwrap() {
        let body = std::fs::read(out.join(e["path"].as_str().unwrap())).unwrap();
        assert_eq!(e["sha256"].as_str().unwrap(), hex(&body));
    }
}

#[test]
fn eigen_free_laplacian_and_idempotence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "dim = 2\nm = 33\ncube = { center = [0.5, 0.5], edge = 1.0 }\nboundary = \"both\"\n";
    let (o, out) = run("eigen", cfg, dir.path());
    assert_eq!(code(&o), 0);
    let e = json(&out.join("eigen.json"));
    let two_pi_sq = 2.0 * std::f64::consts::PI.powi(2);
    let lambda = e["dirichlet"]["value"].as_f64().unwrap();
    assert!((lambda - two_pi_sq).abs() / two_pi_sq < 0.01, "{lambda}");
    assert!(e["neumann"]["value"].as_f64().unwrap() <= 1e-10);
    let first = std::fs::read(out.join("eigen.json")).unwrap();
    let (_, out) = run("eigen", cfg, dir.path());
    assert_eq!(first, std::fs::read(out.join("eigen.json")).unwrap());
}

#[test]
fn eigen_reads_potential_file() {
    let dir = tempfile::tempdir().unwrap();
    let grid = rasterize(&Cube::new(vec![0.0, 0.0], 1.0).unwrap(), 9).unwrap();
    let v = GridFunction::from_real_fn(grid, |_| 2.0).unwrap();
    let mut bytes = Vec::new();
    write_binary(&v, ValueKind::Real, &mut bytes).unwrap();
    std::fs::write(dir.path().join("v.mgf"), bytes).unwrap();
    let cfg = "dim = 2\nm = 9\ncube = { center = [0.0, 0.0], edge = 1.0 }\nboundary = \"neumann\"\n[field]\nv_file = \"v.mgf\"\n";
    let (o, out) = run("eigen", cfg, dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // constant V shifts the Neumann bottom from 0 to V
    let mu = json(&out.join("eigen.json"))["neumann"]["value"].as_f64().unwrap();
    assert!((mu - 2.0).abs() < 1e-8, "{mu}");
    let wrong = cfg.replace("m = 9", "m = 5");
    let (o, _) = run("eigen", &wrong, dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn molchanov_gamma_zero_is_the_integral() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "dim = 2\nm = 4\ncube = { center = [0.5, 0.5], edge = 1.0 }\nv = \"1 + 10*x\"\ngammas = [0.0, 0.7]\nmethod = \"both\"\n";
    let (o, out) = run("molchanov", cfg, dir.path());
    assert_eq!(code(&o), 0);
    let rows = json(&out.join("molchanov.json"));
    // midpoint rule is exact for linear V
    assert!((rows[0]["greedy"]["value"].as_f64().unwrap() - 6.0).abs() < 1e-12);
    let (g, b) = (rows[1]["greedy"]["value"].as_f64().unwrap(), rows[1]["brute"]["value"].as_f64().unwrap());
    assert!(b <= g + 1e-12 && g < 6.0);
}

fn shell_minima(csv: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(csv).unwrap();
    text.lines().skip(1).map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect()
}

#[test]
fn scans_oscillator_grows_free_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let base = "dim = 2\nkind = \"discreteness\"\nsizes = [1.0]\nradius = 5.0\nm = 5\nmax_per_shell = 3\n";
    let (o, out) = run("scan", &format!("{base}[field]\nv = \"x^2 + y^2\"\n[second_pair]\nf = \"0.5/(1+t)\"\n"), dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mins = shell_minima(&out.join("discreteness_shells.csv"));
    assert!(mins.len() >= 5 && mins.windows(2).all(|w| w[1] > w[0]), "{mins:?}");
    assert_eq!(json(&out.join("equivalence.json"))["agree"], true);
    let (o, out) = run("scan", base, dir.path());
    assert_eq!(code(&o), 0);
    assert!(shell_minima(&out.join("discreteness_shells.csv")).iter().all(|&x| x == 0.0));
}

#[test]
fn positivity_scan() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "dim = 2\nkind = \"positivity\"\n[field]\nv = \"1\"\n[positivity]\nvariant = \"b\"\nc = 0.1\nd1 = 1.0\nd = 1.0\ncount = 4\n";
    let (o, out) = run("scan", cfg, dir.path());
    assert_eq!(code(&o), 0);
    let r = json(&out.join("positivity.json"));
    assert_eq!(r["verdict"], true);
    assert_eq!(r["agree"], true);
}

#[test]
fn verify_calibrate_validate_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cal = "mode = \"calibrate\"\ndims = [2]\nseed = 5\nledger = \"ledger.toml\"\n";
    let (o, out) = run("verify", cal, dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rec = json(&out.join("run.json"));
    assert!(rec["outputs"].as_array().unwrap().iter().any(|e| e["path"] == "ledger.toml"));
    let val = "mode = \"validate\"\ndims = [2]\nseed = 5\nledger = \"ledger.toml\"\n";
    let (o, _) = run("verify", val, dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    // shrinking a frozen constant makes inequality cases fail
    let path = dir.path().join("ledger.toml");
    let mut ledger: toml::Table = std::fs::read_to_string(&path).unwrap().parse().unwrap();
    ledger["constants"]["cap_upper_n2"]["value"] = toml::Value::Float(1e-6);
    std::fs::write(&path, toml::to_string(&ledger).unwrap()).unwrap();
    let (o, out) = run("verify", val, dir.path());
    assert_eq!(code(&o), 1);
    assert_eq!(json(&out.join("run.json"))["exit_code"], 1);

    let missing = val.replace("ledger.toml", "absent.toml");
    let (o, _) = run("verify", &missing, dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.toml"));
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run("eigen", "dim = 2\nm = 9\ncube = { center = [0.0, 0.0], edge = 1.0 }\nboundary = \"both\"\nbogus = 1\n", dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
    let (o, _) = run("eigen", "dim = 2\nm = 9\ncube = { center = [0.0, 0.0], edge = 1.0 }\nboundary = \"both\"\n[field]\nv = \"w + 1\"\n", dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown variable 'w'"));
}

#[test]
fn solver_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run("eigen", "dim = 2\nm = 17\ncube = { center = [0.0, 0.0], edge = 1.0 }\nboundary = \"dirichlet\"\nmax_iter = 2\n", dir.path());
    assert_eq!(code(&o), 3);
}

#[test]
fn demo_precision_in_plane() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run("demo-precision", "dim = 2\nd = 1.0\nprofile = \"logarithmic\"\ndeltas = [0.25, 0.125, 0.0625]\n", dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.join("precision.json"));
    assert!(r["found_delta"].as_f64().is_some());
    let (o, _) = run("demo-precision", "dim = 2\nd = 1.0\nprofile = \"1\"\n", dir.path());
    assert_eq!(code(&o), 2);
}
