use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn sociface(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sociface"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn small_spec(dir: &Path) -> String {
    let spec = serde_json::json!({
        "n_identities": 3,
        "n_strangers": 2,
        "sessions_per_identity": 10,
        "frames_per_session": 30,
        "facebook_photos": 60,
        "sigma_session": 1.0,
        "sigma_frame": 0.3,
        "camera": {"sigma": 0.1},
        "facebook": {"sigma": 0.8, "crop_jitter": 2, "domain_shift": 1.6},
        "hard_shift": 6.0,
        "seed": 42
    });
    let path = dir.join("small.json");
    std::fs::write(&path, spec.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["bogus"],
        vec![],
        vec!["corpus", "gen"],
        vec!["exp", "nonsense"],
        vec!["exp", "cost", "--theta", "0.5"],
        vec!["exp", "window", "--window", "5"],
        vec!["serve", "--port", "not-a-port"],
    ] {
        let out = sociface(&args, dir.path());
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty(), "{args:?} prints usage");
    }
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"n_identities\": 0}").unwrap();
    for args in [
        vec!["corpus", "gen", "--spec", "missing.json"],
        vec!["exp", "threshold", "--spec", "bad.json"],
        vec!["store", "query", "--store", "missing.json", "person", "x"],
    ] {
        let out = sociface(&args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn transfer_experiment_is_reproducible_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path());
    let mut csvs = Vec::new();
    for out in ["a", "b"] {
        let o = sociface(
            &[
                "exp", "transfer", "--seed", "42", "--spec", &spec, "--out", out,
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        csvs.push(std::fs::read_to_string(dir.path().join(out).join("transfer.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0].lines().count(), 1 + 2 * 12);
    let other = sociface(
        &[
            "exp", "transfer", "--seed", "7", "--spec", &spec, "--out", "c",
        ],
        dir.path(),
    );
    assert!(other.status.success());
    assert!(dir.path().join("c/transfer.json").exists());
}

#[test]
fn sweep_flags_reach_the_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path());
    let o = sociface(
        &["exp", "threshold", "--spec", &spec, "--window", "10"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("reports/threshold.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["summary"]["window"], "10");
}

#[test]
fn dialogue_demo_prints_8_to_10_robot_turns_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = sociface(&["dialogue", "demo"], dir.path());
    let b = sociface(&["dialogue", "demo", "--out", "demo"], dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let turns = text.lines().filter(|l| l.starts_with("ROBOT: ")).count();
    assert!((8..=10).contains(&turns), "{turns} turns:\n{text}");
    assert_eq!(
        std::fs::read_to_string(dir.path().join("demo/transcript.txt")).unwrap(),
        text
    );

    let json = sociface(&["dialogue", "demo", "--json"], dir.path());
    let t: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(t["lines"].as_array().unwrap().len(), text.lines().count());
}

#[test]
fn corpus_gen_writes_spec_manifest_and_images() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path());
    let o = sociface(
        &[
            "corpus", "gen", "--spec", &spec, "--seed", "9", "--out", "gen",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("gen/spec.json")).unwrap())
            .unwrap();
    assert_eq!(written["seed"], 9);
    let manifest = std::fs::read_to_string(dir.path().join("gen/manifest.csv")).unwrap();
    // 5 identities x (10 sessions + 1 hard + 5 photos)
    assert_eq!(manifest.lines().count(), 1 + 5 * 16);
    let first = manifest.lines().nth(1).unwrap().split(',').next().unwrap();
    assert!(dir.path().join("gen").join(first).exists());

    let spec_out = sociface(&["corpus", "spec"], dir.path());
    let parsed: serde_json::Value = serde_json::from_slice(&spec_out.stdout).unwrap();
    assert_eq!(parsed["seed"], 42);
}

#[test]
fn store_ingest_then_query() {
    let dir = tempfile::tempdir().unwrap();
    let export = serde_json::json!({
        "version": 1,
        "persons": [
            {"id": "ada", "name": "Ada Quill"},
            {"id": "bo", "name": "Bo Rask"},
            {"id": "cy", "name": "Cy Nash", "online": true}
        ],
        "edges": [{"a": "ada", "b": "cy"}, {"a": "bo", "b": "cy"}]
    });
    std::fs::write(dir.path().join("export.json"), export.to_string()).unwrap();
    let o = sociface(
        &["store", "ingest", "--store", "s.json", "export.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["persons"], 3);
    assert_eq!(summary["edges"], 2);

    let q = |args: &[&str]| -> serde_json::Value {
        let mut full = vec!["store", "query", "--store", "s.json"];
        full.extend_from_slice(args);
        let o = sociface(&full, dir.path());
        assert!(o.status.success(), "{args:?}");
        serde_json::from_slice(&o.stdout).unwrap()
    };
    assert_eq!(
        q(&["mutual", "ada", "bo"])["mutual"],
        serde_json::json!(["cy"])
    );
    assert_eq!(
        q(&["person", "cy"])["friends"],
        serde_json::json!(["ada", "bo"])
    );
    assert_eq!(q(&["memory", "ada"])["records"], serde_json::json!([]));
    let missing = sociface(
        &["store", "query", "--store", "s.json", "person", "zed"],
        dir.path(),
    );
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn serve_answers_http_on_the_requested_port() {
    let dir = tempfile::tempdir().unwrap();
    let spec = small_spec(dir.path());
    let mut child = Command::new(env!("CARGO_BIN_EXE_sociface"))
        .args([
            "serve",
            "--bind",
            "127.0.0.1",
            "--port",
            "0",
            "--spec",
            &spec,
            "--store",
            "store.json",
        ])
        .current_dir(dir.path())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on http://")
        .expect("banner")
        .to_string();

    let mut conn = TcpStream::connect(&addr).unwrap();
    write!(
        conn,
        "POST /sessions HTTP/1.1\r\nHost: x\r\nContent-Length: 0\r\nConnection: close\r\n\r\n"
    )
    .unwrap();
    let mut resp = String::new();
    conn.read_to_string(&mut resp).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.contains("\"window\":25"), "{resp}");
    assert!(dir.path().join("store.json").exists());
}
