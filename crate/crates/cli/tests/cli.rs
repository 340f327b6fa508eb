use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rss-survival"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("error line");
    serde_json::from_str(line).expect("json error line")
}

#[test]
fn sample_estimate_bootstrap_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("sample.csv");
    let out = bin(&[
        "sample",
        "--k",
        "3",
        "--m",
        "20",
        "--rho",
        "0.7",
        "--p-cens",
        "0.2",
        "--seed",
        "4",
        "--out",
        s(&sample),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&sample).unwrap();
    assert_eq!(text.lines().next().unwrap(), "cycle,rank,time,event");
    assert_eq!(text.lines().count(), 61);

    let curve = dir.path().join("curve.csv");
    let out = bin(&["estimate", "--input", s(&sample), "--out", s(&curve)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&curve).unwrap();
    assert!(text.starts_with("rank,time,survival,greenwood_var,cum_hazard,hazard_var"));
    assert!(text.lines().any(|l| l.starts_with("rss,")));

    let boot = dir.path().join("boot.csv");
    let out = bin(&[
        "bootstrap",
        "--input",
        s(&sample),
        "--out",
        s(&boot),
        "--times",
        "0.3,0.7",
        "--reps",
        "200",
        "--jobs",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&boot).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "t,point_estimate,greenwood_var,bootstrap_var,n_excluded_reps"
    );
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn simulate_is_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("grid.toml");
    std::fs::write(
        &config,
        "model = \"weibull\"\nk = [2, 3]\nm = [8]\nrho = [0.5]\np_cens = [0.1]\nb_mc = 100\nmixing_sets = 5000\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for jobs in ["1", "4"] {
        let csv = dir.path().join(format!("out{jobs}.csv"));
        let out = bin(&[
            "simulate",
            "--config",
            s(&config),
            "--out",
            s(&csv),
            "--jobs",
            jobs,
            "--seed",
            "9",
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push(std::fs::read(csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.pop().unwrap()).unwrap();
    assert!(text.starts_with("schema_version,model,k,m,n,"));
    assert_eq!(text.lines().count(), 1 + 2 * 4);
}

#[test]
fn kernels_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("k.toml");
    std::fs::write(
        &config,
        "model = \"weibull\"\nk = [2]\nrho = [0.5, 0.9]\nmixing_sets = 10000\n",
    )
    .unwrap();
    let csv = dir.path().join("kernels.csv");
    let out = bin(&["kernels", "--config", s(&config), "--out", s(&csv)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "k,rho,p_cens,level,t,v_srs,v_perf,v_judg,re_perf,re_judg"
    );
    assert_eq!(text.lines().count(), 1 + 2 * 4 * 4);
}

#[test]
fn failures_emit_a_json_error_line() {
    let dir = tempfile::tempdir().unwrap();

    let out = bin(&[
        "estimate",
        "--input",
        "/no/such/file.csv",
        "--out",
        s(&dir.path().join("x.csv")),
    ]);
    assert!(!out.status.success());
    let e = error_line(&out);
    assert_eq!(e["error"], "io");
    assert!(e["message"].as_str().unwrap().contains("file.csv"));

    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "k = [0]\n").unwrap();
    let out = bin(&[
        "simulate",
        "--config",
        s(&config),
        "--out",
        s(&dir.path().join("y.csv")),
    ]);
    assert!(!out.status.success());
    let e = error_line(&out);
    assert_eq!(e["error"], "config");
    assert!(e["message"].as_str().unwrap().contains("`k`"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "cycle,rank,time,event\n1,1,0.5,1\n1,2,abc,0\n").unwrap();
    let out = bin(&[
        "estimate",
        "--input",
        s(&bad),
        "--out",
        s(&dir.path().join("z.csv")),
    ]);
    assert!(!out.status.success());
    let e = error_line(&out);
    assert_eq!(e["error"], "input");
    assert!(e["message"].as_str().unwrap().contains("`time`"));
}
