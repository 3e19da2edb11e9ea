use std::fs;
use std::process::Command as Process;

use neumann_sieve::cli::{execute, exit_code, CellKey, ExperimentConfig, Lookup, RunOptions};
use neumann_sieve::solver::SolveOptions;
use std::f64::consts::PI;

const CAPACITY: &str = r#"
command = "capacity"

[capacity]
d = 3
p = 2.0
r_out = [2.0, 4.0, 8.0, inf]
"#;

const CELL: &str = r#"
command = "cell"

[density]
kind = "power"
p = 2.0
n = 4

[geometry]
d = 3
n_list = [2.0, 4.0, 8.0]

[cell]
ell = inf
z = [1.0]
"#;

fn run(text: &str, dir: &std::path::Path, no_cache: bool) -> neumann_sieve::cli::RunSummary {
    let cfg = ExperimentConfig::parse(text).unwrap();
    execute(&cfg, &RunOptions { out: Some(dir.to_path_buf()), no_cache, ..Default::default() }).unwrap()
}

#[test]
fn capacity_csv_has_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    run(CAPACITY, dir.path(), false);
    let mut rdr = csv::Reader::from_path(dir.path().join("capacity.csv")).unwrap();
    let got: Vec<f64> = rdr.records().map(|r| r.unwrap()[4].parse().unwrap()).collect();
    // oracle: |S²| / ∫_1^R s^{-2} ds = 4π R / (R - 1)
    let expect = [8.0 * PI, 16.0 * PI / 3.0, 32.0 * PI / 7.0, 4.0 * PI];
    for (g, e) in got.iter().zip(expect) {
        assert!((g - e).abs() / e < 1e-11, "{g} vs {e}");
    }
}

#[test]
fn invalid_exponent_exits_two() {
    let text = CELL.replace("n = 4", "n = 3").replace("d = 3", "d = 2");
    let err = ExperimentConfig::parse(&text).unwrap_err();
    assert_eq!(exit_code(&err), 2);
    assert!(err.to_string().contains("1 < p < n-1"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, text).unwrap();
    let out = Process::new(env!("CARGO_BIN_EXE_sieve")).arg("--config").arg(&path).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1 < p < n-1"));
}

#[test]
fn unknown_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, CAPACITY.replace("d = 3", "d = 3\nradius = 2")).unwrap();
    let out = Process::new(env!("CARGO_BIN_EXE_sieve")).arg("--config").arg(&path).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("radius"));
}

#[test]
fn binary_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cap.toml");
    fs::write(&path, CAPACITY).unwrap();
    let out = Process::new(env!("CARGO_BIN_EXE_sieve"))
        .args(["--workers", "1", "--seed", "3", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["outputs"][0], "capacity.csv");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn cache_hit_miss_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(CELL, dir.path(), false);
    assert_eq!(first.manifest.operations[0].cache, Lookup::Miss);
    let body = fs::read(dir.path().join("cell.csv")).unwrap();

    let second = run(CELL, dir.path(), false);
    assert_eq!(second.manifest.operations[0].cache, Lookup::Hit);
    assert_eq!(fs::read(dir.path().join("cell.csv")).unwrap(), body);

    // a tolerance change is a different key
    let tighter = CELL.to_string() + "\n[solver]\ngrad_tol = 1e-9\n";
    let third = run(&tighter, dir.path(), false);
    assert_eq!(third.manifest.operations[0].cache, Lookup::Miss);

    let cfg = ExperimentConfig::parse(CELL).unwrap();
    let key = CellKey {
        version: neumann_sieve::cli::VERSION,
        density: cfg.density.as_ref().unwrap(),
        geometry: cfg.geometry.as_ref().unwrap(),
        solver: &SolveOptions::default(),
        ell: f64::INFINITY,
        z: &[1.0],
    }
    .hash();
    let entry = dir.path().join("cache").join(format!("{key}.json"));
    let text = fs::read_to_string(&entry).unwrap();
    fs::write(&entry, &text[..text.len() / 2]).unwrap();
    let fourth = run(CELL, dir.path(), false);
    assert_eq!(fourth.manifest.operations[0].cache, Lookup::Miss);
    assert_eq!(fs::read(dir.path().join("cell.csv")).unwrap(), body);

    let fifth = run(CELL, dir.path(), true);
    assert_eq!(fifth.manifest.operations[0].cache, Lookup::Disabled);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run(CELL, a.path(), true).manifest;
    let mb = run(CELL, b.path(), true).manifest;
    for f in ["cell.csv", "cell.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert_eq!(ma.config_hash, mb.config_hash);
    let strip = |m: &neumann_sieve::cli::RunManifest| {
        let mut v = serde_json::to_value(m).unwrap();
        v.as_object_mut().unwrap().remove("timestamp");
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    assert_eq!(strip(&ma), strip(&mb));
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let parsed = ExperimentConfig::load(&path);
        if name.starts_with("bad_") {
            assert!(parsed.is_err(), "{name}");
            continue;
        }
        let cfg = parsed.unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg, "{name}");
        assert_eq!(again.to_toml(), cfg.to_toml(), "{name}");
    }
}

#[test]
fn regime_film_poincare_commands() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    let dir = tempfile::tempdir().unwrap();
    for name in ["regime", "film", "poincare"] {
        let cfg = ExperimentConfig::load(format!("{root}/{name}.toml").as_ref()).unwrap();
        let out = dir.path().join(name);
        let s = execute(&cfg, &RunOptions { out: Some(out.clone()), ..Default::default() }).unwrap();
        assert!(s.manifest.converged);
        assert!(out.join(format!("{name}.csv")).exists());
    }
    let film = fs::read_to_string(dir.path().join("film/film.csv")).unwrap();
    let row: Vec<f64> = film.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((row[5] - row[6]).abs() < 1e-9);
}

#[test]
fn relax_is_seeded() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    let cfg = ExperimentConfig::load(format!("{root}/relax.toml").as_ref()).unwrap();
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    execute(&cfg, &RunOptions { out: Some(a.path().into()), ..Default::default() }).unwrap();
    execute(&cfg, &RunOptions { out: Some(b.path().into()), ..Default::default() }).unwrap();
    execute(&cfg, &RunOptions { out: Some(c.path().into()), seed: Some(99), ..Default::default() }).unwrap();
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("growth.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}
