use gorbit::cli::run_with;

const SU3_SO3: &str = r#"{"k":{"family":"so","n":3},"g1":{"family":"su","n":3},"g2":{"family":"su","n":3},"same_group":true}"#;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["gorbit"];
    argv.extend_from_slice(args);
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn check_go_on_locus() {
    let (code, out, _) = run(&["check-go", "--case", "B.3", "--n", "3", "--x", "1.5", "--locus", "--assert"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["decision"], "GO");
    assert!(v["max_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn check_go_off_locus_asserts() {
    let (code, out, err) = run(&["check-go", "--case", "B.3", "--n", "3", "--x", "0.5", "--y", "3", "--assert"]);
    assert_eq!(code, 1);
    assert!(out.contains("NOT_GO"));
    assert!(err.contains("NOT_GO"));
    let (code, _, _) = run(&["check-go", "--case", "B.3", "--n", "3", "--x", "0.5", "--y", "3"]);
    assert_eq!(code, 0);
}

#[test]
fn coupled_scan_go_rows_are_diagonal() {
    let (code, out, _) =
        run(&["scan", "--space", SU3_SO3, "--grid", "a=0.5:2:0.25,b=0.5:2:0.25,c=-0.4:0.4:0.2", "--samples", "50"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), gorbit::geodesic::CSV_HEADER);
    let mut go = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        if cols[10] == "GO" {
            go += 1;
            assert!(cols[5].parse::<f64>().unwrap().abs() < 1e-8, "{line}");
        }
    }
    assert!(go >= 1);
}

#[test]
fn scan_is_deterministic_and_json() {
    let args = ["scan", "--case", "B.3", "--n", "3", "--grid", "x=0.5:1.5:0.5,y=0.5:1.5:0.5", "--samples", "20"];
    let (_, a, _) = run(&args);
    let (_, b, _) = run(&args);
    assert_eq!(a, b);
    let mut json_args = args.to_vec();
    json_args.extend(["--format", "json"]);
    let (code, out, _) = run(&json_args);
    assert_eq!(code, 0);
    let rows: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 9);
}

#[test]
fn build_space_summary() {
    let (code, out, _) = run(&["build-space", "--case", "B.3", "--n", "3"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["dims"]["m1"], 3);
    assert_eq!(v["dims"]["m2"], 5);
    assert!((v["c1"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn isotropy_commands() {
    let (code, out, _) = run(&["isotropy", "--algebra", "su(3)", "--rep", "adjoint"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["dim"], 2);
    assert_eq!(v["structure"], "abelian");
    let (code, out, _) = run(&["isotropy", "--case", "B.3", "--n", "3", "--factor", "2"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["dim"], 0);
}

#[test]
fn validate_catalog_passes() {
    let (code, out, err) = run(&["validate-catalog", "--assert"]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["records"], 83);
    assert_eq!(v["failed"].as_array().unwrap().len(), 0);
    assert_eq!(v["alarms"].as_array().unwrap().len(), 0);
}

#[test]
fn input_errors_exit_2() {
    let (code, _, err) = run(&["build-space", "--space", r#"{"k":{"family":"su","n":3}"#]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"));
    let (code, _, _) = run(&["build-space", "--space", r#"{"k":{"family":"xx","n":3},"g1":{"family":"su","n":3},"g2":{"family":"su","n":3}}"#]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["check-go", "--case", "Z.9"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["scan", "--case", "B.3", "--n", "3", "--grid", "q=1:2:1"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["check-go", "--case", "B.3", "--n", "3", "--x", "-1"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn out_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("gorbit-cli-{}.json", std::process::id()));
    let (code, out, _) = run(&["build-space", "--case", "B.3", "--n", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert!(text.contains("\"c2\""));
}
