use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

fn subexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subexp")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn column<'a>(header: &[String], row: &'a [String], name: &str) -> &'a str {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    &row[i]
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn free_energy_default_grid() {
    let o = subexp(&["free-energy"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = csv(&stdout(&o));
    assert_eq!(h.join(","), "eta,lambda,lambda_prime,lambda_second,V");
    let at = |eta: f64| rows.iter().find(|r| num(&r[0]) == eta).unwrap_or_else(|| panic!("no row {eta}"));
    let zero = at(0.0);
    assert_eq!(num(column(&h, zero, "lambda")), 0.0);
    assert_eq!(num(column(&h, zero, "lambda_prime")), 0.0);
    assert_eq!(column(&h, zero, "V"), "nan");
    let half = at(0.5);
    assert!((num(column(&h, half, "lambda")) - 0.2876821).abs() < 1e-7);
}

#[test]
fn free_energy_outside_domain_names_xi() {
    let o = subexp(&["free-energy", "--model", "gauss-power", "--p", "4", "--eta-grid", "0.1,0.6"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("(-0.5, 0.5)"), "{}", stderr(&o));
}

#[test]
fn free_energy_json_rows() {
    let o = subexp(&["free-energy", "--format", "json", "--eta-grid", "-0.3,0.3"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["xi"], 1.0);
    let row = &v["rows"][1];
    for key in ["eta", "lambda", "lambda_prime", "lambda_second", "V"] {
        assert!(row[key].is_number(), "{key}");
    }
}

#[test]
fn check_exit_codes() {
    let exp = subexp(&["check", "--model", "exp-power", "--p", "2"]);
    assert_eq!(exp.status.code(), Some(0), "{}", stderr(&exp));
    let v: serde_json::Value = serde_json::from_str(&stdout(&exp)).unwrap();
    for key in [
        "xi",
        "domain_nontrivial_bounded",
        "steepness_ok",
        "steepness_sequence",
        "xi0",
        "omega",
        "lambda_second_nondecreasing",
        "V_nonincreasing",
    ] {
        assert!(!v[key].is_null(), "{key}");
    }
    assert_eq!(subexp(&["check", "--model", "gauss-power", "--p", "4"]).status.code(), Some(0));
    let bounded = subexp(&["check", "--model", "bounded-slope"]);
    assert_eq!(bounded.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_str(&stdout(&bounded)).unwrap();
    assert_eq!(v["steepness_ok"], false);
}

#[test]
fn model_pairing_is_enforced() {
    let o = subexp(&["check", "--model", "exp-power", "--p", "2", "--alpha", "0.4"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(subexp(&["check", "--model", "gauss-power", "--p", "1.5"]).status.code(), Some(2));
    assert_eq!(subexp(&["check", "--model", "nope"]).status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_4() {
    let o = subexp(&["legendre", "--model", "bounded-slope", "--x-grid", "5"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn naive_estimate_reproduces_single_summand_tail() {
    let o = subexp(&["estimate", "--method", "naive", "--n", "1", "--x", "4", "--reps", "1000000", "--seed", "3"]);
    assert!(o.status.success());
    let (h, rows) = csv(&stdout(&o));
    let est = num(column(&h, &rows[0], "estimate"));
    let se = num(column(&h, &rows[0], "std_error"));
    assert!((est - 0.5 * (-2.0f64).exp()).abs() <= 4.0 * se);
    assert!(stderr(&o).contains("theory_rate="));
}

#[test]
fn esscher_with_zero_tilt_matches_naive() {
    let base = ["estimate", "--n", "5", "--x", "1", "--reps", "50000", "--seed", "4"];
    let naive = subexp(&[&base[..], &["--method", "naive"]].concat());
    let tilt0 = subexp(&[&base[..], &["--method", "esscher", "--eta", "0"]].concat());
    let (h, a) = csv(&stdout(&naive));
    let (_, b) = csv(&stdout(&tilt0));
    let (ea, eb) = (num(column(&h, &a[0], "estimate")), num(column(&h, &b[0], "estimate")));
    let se = num(column(&h, &a[0], "std_error"));
    assert!((ea - eb).abs() <= 3.0 * se);
    assert_eq!(num(column(&h, &b[0], "tilt_eta")), 0.0);
}

#[test]
fn method_all_emits_three_rows_with_one_seed() {
    let o = subexp(&["estimate", "--method", "all", "--n", "5", "--x", "3", "--reps", "20000", "--seed", "17"]);
    let (h, rows) = csv(&stdout(&o));
    assert_eq!(h.join(","), "method,n,x,shape,delta,replications,seed,estimate,std_error,ess,tilt_eta,empirical_rate");
    let methods: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(methods, ["naive", "esscher", "shift"]);
    assert!(rows.iter().all(|r| column(&h, r, "seed") == "17"));
}

#[test]
fn ball_events_need_delta() {
    assert_eq!(subexp(&["estimate", "--shape", "ball", "--n", "5"]).status.code(), Some(2));
    let o = subexp(&["estimate", "--shape", "ball", "--delta", "0.5", "--n", "5", "--reps", "5000"]);
    assert!(o.status.success());
    let (h, rows) = csv(&stdout(&o));
    assert_eq!(column(&h, &rows[0], "shape"), "ball");
    assert_eq!(num(column(&h, &rows[0], "delta")), 0.5);
}

#[test]
fn rate_sweep_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let plot = dir.path().join("rate.svg");
    let o = subexp(&[
        "rate-sweep",
        "--model",
        "gauss-power",
        "--p",
        "4",
        "--n-grid",
        "10,40",
        "--reps",
        "5000",
        "--plot",
        plot.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = csv(&stdout(&o));
    assert_eq!(h.join(","), "n,estimate,std_error,empirical_rate,theory_rate");
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| num(&r[4]) == 0.5));
    let svg = std::fs::read_to_string(&plot).unwrap();
    assert!(svg.contains("<polyline") && svg.contains("reference 0.5000"));
}

#[test]
fn rate_sweep_rejects_empty_grid() {
    assert_eq!(subexp(&["rate-sweep", "--n-grid", ""]).status.code(), Some(2));
    assert_eq!(subexp(&["rate-sweep", "--n-grid", "50,10"]).status.code(), Some(2));
}

#[test]
fn diagnostics_report() {
    let o = subexp(&["diagnostics", "--n", "100", "--x", "1", "--reps", "5000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let a1 = v["big_jump"]["A1"].as_f64().unwrap();
    assert!((a1 - (1.0 - (1.0 - 0.5 * (-10.0f64).exp()).powi(100))).abs() < 1e-12);
    assert!(v["tchebychev"].as_array().unwrap().iter().all(|t| t["dominates"] == true));
    assert!(v["symmetrized_tchebychev"].as_array().unwrap().iter().all(|t| t["dominates"] == true));
    assert!(v["ibp"]["abs_diff"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn bench_lists_three_methods() {
    let o = subexp(&["bench", "--n", "10", "--x", "1", "--reps", "5000", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["method"].as_str().unwrap()).collect();
    assert_eq!(names, ["naive", "esscher", "shift"]);
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn outputs_are_bit_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = subexp(&[
            "estimate",
            "--method",
            "all",
            "--n",
            "20",
            "--x",
            "1",
            "--reps",
            "40000",
            "--seed",
            "99",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        read(&out)
    };
    let one = run("1", "a.csv");
    assert_eq!(one, run("4", "b.csv"));
    assert_eq!(one, run("1", "c.csv"));
}

#[test]
fn config_file_with_flag_override() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# sweep settings\nmodel=gauss-power\np=4\nn=3\nx=1\nreps=3000\nseed=5\nmethod=naive").unwrap();
    let path = f.path().to_str().unwrap();
    let o = subexp(&["estimate", "--config", path, "--n", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = csv(&stdout(&o));
    assert_eq!(column(&h, &rows[0], "n"), "7");
    assert_eq!(column(&h, &rows[0], "seed"), "5");
    assert_eq!(column(&h, &rows[0], "method"), "naive");

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad, "sed=5").unwrap();
    let o = subexp(&["estimate", "--config", bad.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key 'sed'"));
}
