use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CERTIFIED: &str = r#"
form = "physical"
[physical]
D = 1.0
lambda1 = 1.0
lambda2 = 1.0
k1 = 1.0
k2 = 0.3333333333333333
[reaction]
kind = "cubic"
a = 0.5
"#;

fn twopatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twopatch")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().skip(1).filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn exit_code_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", CERTIFIED);
    let cases: [(&[&str], i32); 9] = [
        (&["check", "thm-main", "--config", &cfg], 0),
        (&["check", "thm-main", "--config", &cfg, "--k2", "0.5"], 2),
        (
            &["check", "sawtooth-predicate", "--alpha", "1", "--beta", "1", "--gamma", "0.6", "--reaction", "sawtooth"],
            1,
        ),
        (&["check", "thm-main", "--config", &cfg, "--a", "0.3"], 1),
        (&["check", "no-such-certificate", "--config", &cfg], 1),
        (&["equilibria", "--config", "/nonexistent/config.toml"], 1),
        (&["equilibria", "--config", &cfg], 0),
        (&["sweep", "--plane", "lambda", "--range", "0:4:1", "--k2", "0.4"], 1),
        (&["--help"], 0),
    ];
    for (args, code) in cases {
        let o = twopatch(args);
        assert_eq!(o.status.code(), Some(code), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn failing_check_names_the_condition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", CERTIFIED);
    let o = twopatch(&["check", "thm-main", "--config", &cfg, "--k2", "0.5"]);
    assert!(stdout(&o).contains("[FAIL] 2 k2 < k1"), "{}", stdout(&o));
}

#[test]
fn zero_dispersal_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &CERTIFIED.replace("D = 1.0", "D = 0.0"));
    let o = twopatch(&["equilibria", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("D must be positive"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_rejected_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &CERTIFIED.replace("a = 0.5", "a = 0.5\nshape = 2"));
    let o = twopatch(&["equilibria", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("reaction.shape"), "{}", stderr(&o));
}

#[test]
fn certified_config_has_only_the_origin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", CERTIFIED);
    let o = twopatch(&["equilibria", "--config", &cfg]);
    let out = stdout(&o);
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("0.0000000000000000e0,0.0000000000000000e0,"));
    assert!(rows[0].contains("stable-node,origin"));
}

#[test]
fn symmetric_large_diffusion_has_three_rows() {
    let o = twopatch(&["equilibria", "--alpha", "0.5", "--beta", "0.5", "--gamma", "1"]);
    assert_eq!(data_rows(&stdout(&o)).len(), 3);
}

#[test]
fn sawtooth_alias_matches_exact_enumeration() {
    let o = twopatch(&["sawtooth", "--alpha", "1.3", "--beta", "1.3", "--gamma", "1"]);
    let out = stdout(&o);
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 3, "{out}");
    assert!(rows[1].starts_with("5.0000000000000000e-1,5.0000000000000000e-1,"));
    let o2 = twopatch(&["equilibria", "--alpha", "1.3", "--beta", "1.3", "--gamma", "1", "--reaction", "sawtooth"]);
    assert_eq!(stdout(&o2), out);
}

#[test]
fn simulate_from_origin_is_constant() {
    let o = twopatch(&["simulate", "--alpha", "1", "--beta", "1", "--gamma", "0.4", "--x0", "0", "--y0", "0"]);
    let out = stdout(&o);
    assert!(out.starts_with("t,x,y\n"));
    for row in data_rows(&out) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(&cols[1..], ["0.0000000000000000e0", "0.0000000000000000e0"]);
    }
    assert!(out.trim_end().ends_with("# terminal converged 0.0000000000000000e0 0.0000000000000000e0"));
}

#[test]
fn simulate_certified_config_goes_extinct() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", CERTIFIED);
    let o = twopatch(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("t,x1,x2\n"));
    let footer = out.lines().last().unwrap();
    let parts: Vec<&str> = footer.split_whitespace().collect();
    assert_eq!(&parts[..3], ["#", "terminal", "converged"]);
    let (x, y): (f64, f64) = (parts[3].parse().unwrap(), parts[4].parse().unwrap());
    assert!(x.hypot(y) < 1e-6);
}

#[test]
fn balanced_logistic_stays_at_capacities() {
    let args = [
        "simulate",
        "--D",
        "1",
        "--lambda1",
        "1",
        "--lambda2",
        "2",
        "--k1",
        "1",
        "--k2",
        "0.5",
        "--reaction",
        "logistic",
        "--coupling",
        "balanced",
        "--t-end",
        "5",
    ];
    let out = stdout(&twopatch(&args));
    for row in data_rows(&out) {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!((cols[1], cols[2]), (1.0, 0.5));
    }
}

#[test]
fn mixing_table() {
    let args =
        ["mixing", "--D", "1", "--lambda1", "2", "--lambda2", "1", "--k1", "2", "--k2", "1", "--reaction", "logistic"];
    let o = twopatch(&[&args[..], &["--D-list", "1,1000"]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("D,total,formula,relative_gap,converged\n"));
    let last: Vec<f64> = data_rows(&out)[1].split(',').map(|c| c.parse().unwrap()).collect();
    assert!(last[3].abs() < 0.01);
    let eq = twopatch(&[
        "mixing",
        "--D",
        "1",
        "--lambda1",
        "1",
        "--lambda2",
        "1",
        "--k1",
        "1.5",
        "--k2",
        "1.5",
        "--reaction",
        "logistic",
        "--D-list",
        "0.5,5",
    ]);
    for row in data_rows(&stdout(&eq)) {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols[3].abs() < 1e-6);
    }
    let cubic = twopatch(&[
        "mixing",
        "--D",
        "1",
        "--lambda1",
        "2",
        "--lambda2",
        "1",
        "--k1",
        "2",
        "--k2",
        "1",
        "--D-list",
        "1",
    ]);
    assert_eq!(cubic.status.code(), Some(1));
}

#[test]
fn smoke_sweep_writes_two_by_two_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("o.csv");
    let svg = dir.path().join("o.svg");
    let o = twopatch(&[
        "sweep",
        "--plane",
        "lambda",
        "--range",
        "0:4:2",
        "--k2",
        "0.4",
        "--csv",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("axis1,axis2,count,degenerate,cert_thm-main\n"));
    assert!(fs::read_to_string(&svg).unwrap().contains("</svg>"));
    assert!(stdout(&o).contains("cells 4"));
}

#[test]
fn sweep_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, tag: &str| {
        let csv = dir.path().join(format!("{tag}.csv"));
        let svg = dir.path().join(format!("{tag}.svg"));
        let o = twopatch(&[
            "sweep",
            "--plane",
            "alpha-beta",
            "--gamma",
            "0.44",
            "--reaction",
            "sawtooth",
            "--range",
            "0:4:30",
            "--threads",
            threads,
            "--csv",
            csv.to_str().unwrap(),
            "--svg",
            svg.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (fs::read(csv).unwrap(), fs::read(svg).unwrap(), o.stdout)
    };
    assert_eq!(run("1", "a"), run("4", "b"));
}

#[test]
fn sweep_needs_a_fixed_capacity() {
    let o = twopatch(&["sweep", "--plane", "lambda", "--range", "0:4:2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--k2"));
}
