use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn oplearn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oplearn"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_values(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().unwrap())
        .collect()
}

#[test]
fn encode_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    // F = diag(3, 2, 1) on columns e_1, e_1 + e_2, e_3
    fs::write(dir.path().join("x.csv"), "1,1,0\n0,1,0\n0,0,1\n").unwrap();
    fs::write(dir.path().join("y.csv"), "3,3,0\n0,2,0\n0,0,1\n").unwrap();
    fs::write(dir.path().join("d.csv"), "6\n-4\n0.5\n").unwrap();
    let o = oplearn(
        dir.path(),
        &[
            "encode", "--images", "x.csv", "--data", "y.csv", "--out", "learned",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("gamma_1 = 3.0"));
    assert!(dir.path().join("learned/manifest.json").exists());

    let o = oplearn(
        dir.path(),
        &[
            "decode",
            "--spectrum",
            "learned",
            "--data",
            "d.csv",
            "--out",
            "dec",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let x = read_values(&dir.path().join("dec/x_ls.csv"));
    for (a, b) in x.iter().zip([2.0, -2.0, 0.5]) {
        assert!((a - b).abs() < 1e-12, "{x:?}");
    }

    let o = oplearn(
        dir.path(),
        &[
            "decode",
            "--spectrum",
            "learned",
            "--data",
            "d.csv",
            "--top-k",
            "1",
            "--out",
            "dec1",
        ],
    );
    assert_eq!(code(&o), 0);
    let x = read_values(&dir.path().join("dec1/x_ls.csv"));
    assert!((x[0] - 2.0).abs() < 1e-12 && x[1].abs() < 1e-12 && x[2].abs() < 1e-12);
}

#[test]
fn invalid_geometry_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("g.txt"),
        "n_pix=0\nn_angles=10\nn_offsets=10\n",
    )
    .unwrap();
    let o = oplearn(dir.path(), &["spectrum-build", "--geom", "g.txt"]);
    assert_eq!(code(&o), 2);
    let o = oplearn(dir.path(), &["run-decode-test", "--which", "3"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn dependent_images_exit_with_numerical_code() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.csv"), "1,2\n0,0\n").unwrap();
    fs::write(dir.path().join("y.csv"), "1,2\n1,2\n").unwrap();
    let o = oplearn(
        dir.path(),
        &["encode", "--images", "x.csv", "--data", "y.csv"],
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_input_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = oplearn(
        dir.path(),
        &["encode", "--images", "nope.csv", "--data", "nope.csv"],
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"geometry": {"n_pix": 12}, "phantoms": {"n_images": 3, "ellipses_per_image": 2}}"#,
    )
    .unwrap();
    let o = oplearn(
        dir.path(),
        &[
            "phantom-gen",
            "--seed",
            "5",
            "--config",
            "c.json",
            "--out",
            "ph",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let images = fs::read_to_string(dir.path().join("ph/images.csv")).unwrap();
    assert_eq!(images.lines().count(), 144);
    assert_eq!(images.lines().next().unwrap().split(',').count(), 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ph/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["phantoms"]["seed"], 5);
    assert_eq!(manifest["config"]["geometry"]["n_pix"], 12);
}

#[test]
fn spectrum_build_writes_the_singular_system() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("g.txt"),
        "n_pix=10\nn_angles=8\nn_offsets=8\n",
    )
    .unwrap();
    let o = oplearn(
        dir.path(),
        &["spectrum-build", "--geom", "g.txt", "--k-max", "2"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let indices = fs::read_to_string(dir.path().join("out/indices.csv")).unwrap();
    assert_eq!(indices.lines().count(), 1 + 4);
    let v = fs::read_to_string(dir.path().join("out/v.csv")).unwrap();
    assert_eq!(v.lines().count(), 64);
}
