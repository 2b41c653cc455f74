use std::path::PathBuf;
use std::process::{Command, Output};

use gconv::csv::{parse_csv, to_csv};

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) {
        std::fs::write(self.path(name), text).unwrap();
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.path(name)).unwrap()
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_gconv"))
            .current_dir(self.dir.path())
            .args(args)
            .output()
            .unwrap()
    }

    fn code(&self, args: &[&str]) -> i32 {
        self.run(args).status.code().unwrap()
    }

    fn lattice_signal(
        &self,
        name: &str,
        h: f64,
        range: std::ops::RangeInclusive<i64>,
        u: impl Fn(f64) -> f64,
    ) {
        let mut text = format!("# group=lattice:1:{h} vdim=1\n");
        for k in range {
            let v = u(k as f64 * h);
            if v != 0.0 {
                text.push_str(&format!("{k},{v}\n"));
            }
        }
        self.write(name, &text);
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn fixture() -> Workspace {
    let ws = Workspace::new();
    ws.write("a.csv", "# group=Z vdim=1\n0,1\n1,2\n");
    ws.write("b.csv", "# group=Z vdim=1\n0,3\n1,4\n");
    ws
}

#[test]
fn conv_examples() {
    let ws = fixture();
    assert_eq!(
        ws.code(&[
            "conv",
            "--group",
            "Z",
            "--pairing",
            "mul",
            "a.csv",
            "b.csv",
            "-o",
            "out.csv"
        ]),
        0
    );
    assert_eq!(ws.read("out.csv"), "# group=Z vdim=1\n0,3\n1,10\n2,8\n");

    ws.write("empty.csv", "# group=Z vdim=1\n");
    assert_eq!(
        ws.code(&[
            "conv",
            "--group",
            "Z",
            "--pairing",
            "mul",
            "empty.csv",
            "b.csv",
            "-o",
            "e.csv"
        ]),
        0
    );
    assert_eq!(ws.read("e.csv"), "# group=Z vdim=1\n");

    ws.write("v2.csv", "# group=Z vdim=2\n0,1,2\n");
    assert_eq!(ws.code(&["conv", "--pairing", "mul", "a.csv", "v2.csv"]), 3);
    assert!(!ws.path("m.csv").exists());
}

#[test]
fn conv_writes_stdout_and_infers_pairing() {
    let ws = fixture();
    ws.write("v.csv", "# group=Z vdim=2\n0,1,-1\n");
    let out = ws.run(&["conv", "a.csv", "v.csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "# group=Z vdim=2\n0,1,-1\n1,2,-2\n");
    let fast = ws.run(&["conv", "--fast", "a.csv", "v.csv"]);
    assert_eq!(stdout(&fast), stdout(&out));
}

#[test]
fn conv_group_checks() {
    let ws = fixture();
    ws.write("c.csv", "# group=Zn:4 vdim=1\n3,1\n");
    assert_eq!(ws.code(&["conv", "a.csv", "c.csv"]), 3);
    assert_eq!(ws.code(&["conv", "--group", "Zn:4", "a.csv", "b.csv"]), 3);
    assert_eq!(
        ws.code(&[
            "conv",
            "--group",
            "D4",
            "--measure",
            "grid",
            "c.csv",
            "c.csv"
        ]),
        3
    );
    assert_eq!(ws.code(&["conv", "--group", "Q", "a.csv", "b.csv"]), 2);
    assert_eq!(ws.code(&["conv", "a.csv", "missing.csv"]), 2);
}

#[test]
fn parse_errors_name_file_and_line() {
    let ws = fixture();
    ws.write("dup.csv", "# group=Z vdim=1\n0,1\n5,2\n0,3\n");
    let out = ws.run(&["conv", "dup.csv", "b.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("dup.csv:4:"), "{}", stderr(&out));
}

#[test]
fn cyclic_wraps_around() {
    let ws = Workspace::new();
    ws.write("x.csv", "# group=Zn:4 vdim=1\n3,1\n");
    ws.write("y.csv", "# group=Zn:4 vdim=1\n2,5\n");
    let out = ws.run(&["conv", "--group", "Zn:4", "x.csv", "y.csv"]);
    assert_eq!(stdout(&out), "# group=Zn:4 vdim=1\n1,5\n");
}

#[test]
fn laws_pass_on_abelian_data() {
    let ws = fixture();
    let out = ws.run(&["laws", "--group", "Z", "a.csv", "b.csv", "-o", "report.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let report = ws.read("report.csv");
    assert!(report.starts_with("check,status,lhs,rhs,deviation\n"));
    assert!(report.contains("integral identity,pass,21,21,0"));
    assert!(!report.contains("FAIL"));
}

#[test]
fn laws_exhibit_dihedral_counterexample() {
    let ws = Workspace::new();
    ws.write("r.csv", "# group=D4 vdim=1\n1,0,1\n");
    ws.write("s.csv", "# group=D4 vdim=1\n0,1,1\n");
    let out = ws.run(&[
        "laws", "--group", "D4", "r.csv", "s.csv", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let comm = rows
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["check"] == "commutativity")
        .unwrap();
    assert_eq!(comm["status"], "counterexample_exhibited");
}

#[test]
fn laws_negative_control() {
    let ws = fixture();
    ws.write("good.csv", "# group=Z vdim=1\n0,3\n1,10\n2,8\n");
    ws.write("corrupt.csv", "# group=Z vdim=1\n0,3\n1,10\n2,9\n");
    assert_eq!(
        ws.code(&["laws", "a.csv", "b.csv", "--verify", "good.csv"]),
        0
    );
    let out = ws.run(&["laws", "a.csv", "b.csv", "--verify", "corrupt.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("verify"));
    assert_eq!(ws.code(&["laws", "a.csv", "--tol", "0"]), 2);
}

#[test]
fn mollify_constant_and_guard() {
    let ws = Workspace::new();
    ws.lattice_signal("c.csv", 0.01, -100..=100, |_| 2.0);
    assert_eq!(
        ws.code(&["mollify", "c.csv", "--radius", "0.2", "-o", "m.csv"]),
        0
    );
    let m = parse_csv(&ws.read("m.csv")).unwrap();
    for k in -80..=80 {
        let v = m.eval(&gconv::GroupPoint::scalar(k)).unwrap()[0];
        assert!((v - 2.0).abs() < 1e-10);
    }
    assert_eq!(ws.code(&["mollify", "c.csv", "--radius", "0.01"]), 4);
    assert_eq!(
        ws.code(&[
            "mollify",
            "c.csv",
            "--radius",
            "0.2",
            "--measure",
            "counting"
        ]),
        2
    );
    ws.write("z.csv", "# group=Z vdim=1\n0,1\n");
    assert_eq!(ws.code(&["mollify", "z.csv", "--radius", "0.2"]), 3);
}

#[test]
fn mollify_study_report() {
    let ws = Workspace::new();
    ws.lattice_signal("abs.csv", 0.005, -400..=400, f64::abs);
    let out = ws.run(&[
        "mollify",
        "abs.csv",
        "--study",
        "0.5,0.25,0.125",
        "-o",
        "study.csv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = ws.read("study.csv");
    let mut lines = text.lines();
    let slack: f64 = lines
        .next()
        .unwrap()
        .split_whitespace()
        .find_map(|f| f.strip_prefix("slack="))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(lines.next(), Some("radius,distance,bound"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!(r[1] <= r[0] + slack);
    }
    assert_eq!(ws.code(&["mollify", "abs.csv", "--study", "0.25,0.5"]), 2);
    assert_eq!(
        ws.code(&["mollify", "abs.csv", "--study", "0.5", "--at", "1,2"]),
        3
    );
}

#[test]
fn deriv_check_orders() {
    let ws = Workspace::new();
    ws.lattice_signal("step.csv", 0.02, 0..=50, |_| 1.0);
    let out = ws.run(&[
        "deriv-check",
        "step.csv",
        "--radius",
        "0.5",
        "--order",
        "1",
        "--tol",
        "1e-2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out)
        .lines()
        .any(|l| l.trim_start().starts_with('1')));
    // central differences are 9e-3 off at this spacing
    assert_eq!(
        ws.code(&[
            "deriv-check",
            "step.csv",
            "--radius",
            "0.5",
            "--order",
            "1",
            "--tol",
            "5e-3"
        ]),
        1
    );
    assert_eq!(
        ws.code(&["deriv-check", "step.csv", "--radius", "0.5", "--order", "3"]),
        2
    );
    assert_eq!(ws.code(&["deriv-check", "step.csv", "--radius", "0.1"]), 4);
}

#[test]
fn bench_table_and_json() {
    let ws = Workspace::new();
    let out = ws.run(&["bench", "64", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("max_deviation"));
    assert_eq!(
        ws.code(&["bench", "64,128", "--trials", "1", "--format", "json", "-o", "b.json"]),
        0
    );
    let rows: serde_json::Value = serde_json::from_str(&ws.read("b.json")).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert_eq!(ws.code(&["bench", "32"]), 2);
    assert_eq!(ws.code(&["bench"]), 2);
}

#[test]
fn output_round_trips() {
    let ws = fixture();
    ws.write(
        "w.csv",
        "# group=lattice:2:0.5 vdim=2\n1,1,0.1,3\n0,-2,1e-3,-7.25\n",
    );
    ws.write(
        "k.csv",
        "# group=lattice:2:0.5 vdim=1\n0,0,0.3333333333333333\n1,0,2\n",
    );
    assert_eq!(ws.code(&["conv", "k.csv", "w.csv", "-o", "o.csv"]), 0);
    let text = ws.read("o.csv");
    assert_eq!(to_csv(&parse_csv(&text).unwrap()), text);
}

#[test]
fn help_exits_zero() {
    let ws = Workspace::new();
    assert_eq!(ws.code(&["--help"]), 0);
    assert_eq!(ws.code(&["conv", "--help"]), 0);
    assert_eq!(ws.code(&["frobnicate"]), 2);
}
