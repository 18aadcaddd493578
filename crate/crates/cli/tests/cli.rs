use std::io::Write;
use std::process::{Command, Output, Stdio};

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_stabsym"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn deterministic_zero() {
    let o = run(&["sample", "--shots", "3"], "M 0\n");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0\n0\n0\n");
    let err = stderr(&o);
    assert!(err.contains("initialization:") && err.contains("sampling:"), "{err}");
}

#[test]
fn packed_output() {
    let o = run(&["sample", "--shots", "2", "--format", "b8"], "X 0\nM 0 1 2\n");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(o.stdout, vec![0x01, 0x01]);
}

#[test]
fn parse_errors_name_the_line() {
    let o = run(&["analyze"], "H 0\nFOO 1\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = run(&["sample"], "H 0\n\nREPEAT 3 {\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn usage_errors() {
    assert_eq!(run(&["sample", "--shots", "0"], "M 0\n").status.code(), Some(1));
    assert_eq!(run(&["sample", "--format", "hex"], "M 0\n").status.code(), Some(1));
    assert_eq!(run(&["frobnicate"], "").status.code(), Some(1));
    assert_eq!(run(&["sample", "--in", "/nonexistent/circuit.stim"], "").status.code(), Some(1));
    assert_eq!(run(&["bench", "--noise", "2"], "").status.code(), Some(1));
    assert_eq!(run(&["--help"], "").status.code(), Some(0));
}

#[test]
fn in_and_out_files() {
    let dir = std::env::temp_dir().join(format!("stabsym-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let input = dir.join("c.stim");
    let output = dir.join("out.txt");
    std::fs::write(&input, "X 1\nM 0 1\n").unwrap();
    let o = run(
        &["sample", "--in", input.to_str().unwrap(), "--out", output.to_str().unwrap(), "--shots", "2"],
        "",
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&output).unwrap(), "01\n01\n");
}

#[test]
fn analyze_lists_symbols() {
    let o = run(&["analyze"], "H 0\nDEPOLARIZE2(0.2) 0 1\nM 0\n");
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let legend: Vec<&str> = text.lines().filter(|l| l.starts_with("# s")).collect();
    assert_eq!(legend.len(), 5, "{text}");
    assert!(legend[0].contains("fault") && legend[0].contains("component 1/4"), "{text}");
    assert!(legend[4].contains("measurement-randomness"), "{text}");
}

#[test]
fn verify_passes_on_small_circuit() {
    let o = run(&["verify", "--shots", "4000"], "H 0\nCX 0 1\nS 1\nH 1\nM 0 1\nX_ERROR(0.2) 0\nM 0\n");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("pass")).count(), 2);
}

#[test]
fn bench_writes_csv() {
    let o = run(&["bench", "--families", "a,c", "--sizes", "8,12", "--shots", "100"], "");
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "family,n,init_seconds,sampling_seconds,shots");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("a,8,") && lines[4].starts_with("c,12,") && lines[4].ends_with(",100"));
}
