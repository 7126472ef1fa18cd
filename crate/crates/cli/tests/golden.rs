use std::fs;
use std::path::PathBuf;

use fair_orient_cli::{run, RunOutput, EXIT_INPUT, EXIT_NONE, EXIT_OK};
use serde_json::Value;

fn dir(sub: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(sub)
}

fn data(name: &str) -> String {
    dir("data").join(name).display().to_string()
}

fn cli(args: &[&str]) -> RunOutput {
    run(std::iter::once("fair-orient").chain(args.iter().copied()))
}

/// Report JSON without the timing block, which varies between runs.
fn stable(out: &RunOutput) -> Value {
    let mut v: Value = serde_json::from_str(&out.stdout).expect("stdout is JSON");
    v.as_object_mut().expect("report is an object").remove("timing");
    v
}

/// Compares against `tests/golden/<name>.json`. Set FAIR_ORIENT_BLESS=1
/// to rewrite the file instead.
fn golden(name: &str, out: &RunOutput) {
    let path = dir("golden").join(format!("{name}.json"));
    let got = stable(out);
    if std::env::var_os("FAIR_ORIENT_BLESS").is_some() {
        fs::write(&path, serde_json::to_string_pretty(&got).unwrap() + "\n").unwrap();
        return;
    }
    let want: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(got, want, "golden {name} differs:\n{}", out.stdout);
}

#[test]
fn gadget_brute_force_reports_none() {
    let out = cli(&["solve-efx", &data("gadget_x.json"), "--method", "brute"]);
    assert_eq!(out.code, EXIT_NONE);
    golden("solve_efx_gadget_brute", &out);
}

#[test]
fn gadget_dynamic_program_reports_none() {
    let out = cli(&["solve-efx", &data("gadget_x.json"), "--method", "fpt"]);
    assert_eq!(out.code, EXIT_NONE);
    golden("solve_efx_gadget_fpt", &out);
}

#[test]
fn intro_ef1_orientation() {
    let out = cli(&["solve-ef1", &data("intro.json")]);
    assert_eq!(out.code, EXIT_OK);
    let v = stable(&out);
    assert_eq!(v["verification"]["orientation"]["holds"], true);
    assert_eq!(v["verification"]["ef1"]["holds"], true);
    golden("solve_ef1_intro", &out);
}

#[test]
fn intro_allocation_is_efx_but_not_ef() {
    let out = cli(&["check", &data("intro.json"), "--property", "efx"]);
    assert_eq!(out.code, EXIT_OK);
    golden("check_intro_efx", &out);
    let out = cli(&["check", &data("intro.json"), "--property", "ef"]);
    assert_eq!(out.code, EXIT_NONE);
    golden("check_intro_ef", &out);
}

#[test]
fn trace_is_written_on_request() {
    let path = std::env::temp_dir().join(format!("fair-orient-trace-{}.json", std::process::id()));
    let p = path.display().to_string();
    let out = cli(&["solve-ef1", &data("intro.json"), "--trace-out", &p]);
    assert_eq!(out.code, EXIT_OK);
    let trace: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    fs::remove_file(&path).unwrap();
    let events = trace.as_array().unwrap();
    assert_eq!(events.len(), 3);
    assert!(events.iter().all(|e| e["event"] == "assign"));
    assert_eq!(stable(&out)["trace"], Value::String(p));
}

#[test]
fn generation_depends_only_on_the_seed() {
    let args = |seed: &'static str| {
        cli(&["gen", "--kind", "random", "--random-kind", "table", "--agents", "3", "--seed", seed]).stdout
    };
    assert_eq!(args("5"), args("5"));
    assert_ne!(args("5"), args("6"));
    let default = cli(&["gen", "--kind", "random", "--random-kind", "table", "--agents", "3"]).stdout;
    assert_eq!(default, args("0"));
}

#[test]
fn thread_count_does_not_change_answers() {
    let gen = cli(&["gen", "--kind", "partition-vc", "--values", "3,3,4,4,2"]);
    assert_eq!(gen.code, EXIT_OK);
    let path = std::env::temp_dir().join(format!("fair-orient-vc-{}.json", std::process::id()));
    fs::write(&path, &gen.stdout).unwrap();
    let p = path.display().to_string();
    let one = cli(&["solve-efx", &p, "--method", "brute", "--threads", "1"]);
    let four = cli(&["solve-efx", &p, "--method", "brute", "--threads", "4"]);
    fs::remove_file(&path).unwrap();
    assert_eq!(one.code, EXIT_OK);
    assert_eq!(stable(&one), stable(&four));
}

#[test]
fn digest_ignores_formatting() {
    let text = fs::read_to_string(dir("data").join("gadget_x.json")).unwrap();
    let compact: Value = serde_json::from_str(&text).unwrap();
    let path = std::env::temp_dir().join(format!("fair-orient-compact-{}.json", std::process::id()));
    fs::write(&path, compact.to_string()).unwrap();
    let a = stable(&cli(&["solve-efx", &path.display().to_string(), "--method", "brute"]));
    fs::remove_file(&path).unwrap();
    let b = stable(&cli(&["solve-efx", &data("gadget_x.json"), "--method", "brute"]));
    assert_eq!(a["instance_digest"], b["instance_digest"]);
}

#[test]
fn input_errors_exit_2() {
    assert_eq!(cli(&["solve-efx", &data("intro.json"), "--method", "brute"]).code, EXIT_INPUT);
    assert_eq!(cli(&["solve-efx", &data("missing.json"), "--method", "brute"]).code, EXIT_INPUT);
    assert_eq!(cli(&["solve-ef1", &data("intro.json"), "--frobnicate"]).code, EXIT_INPUT);
    assert_eq!(cli(&["check", &data("gadget_x.json"), "--property", "efx"]).code, EXIT_INPUT);
    assert_eq!(cli(&["gen", "--kind", "partition-vc", "--values", "1,1,1"]).code, EXIT_INPUT);
    assert_eq!(cli(&["solve-efxr", &data("intro.json"), "--method", "planar-faces"]).code, EXIT_INPUT);
}

#[test]
fn efxr_methods_self_verify() {
    for (kind, method, extra) in [
        ("partition-multigraph", "multigraph", vec!["--values", "2,3,3,4"]),
        ("random", "decomposable", vec!["--random-kind", "decomposable", "--items", "8", "--depth", "3"]),
        ("random-planar", "planar-faces", vec!["--agents", "10"]),
    ] {
        let mut args = vec!["gen", "--kind", kind];
        args.extend(extra);
        let gen = cli(&args);
        assert_eq!(gen.code, EXIT_OK, "{}", gen.stdout);
        let path = std::env::temp_dir().join(format!("fair-orient-{method}-{}.json", std::process::id()));
        fs::write(&path, &gen.stdout).unwrap();
        let out = cli(&["solve-efxr", &path.display().to_string(), "--method", method]);
        fs::remove_file(&path).unwrap();
        assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
        let v = stable(&out);
        assert_eq!(v["verification"]["efxr"]["holds"], true);
        assert_eq!(v["verification"]["orientation"]["holds"], true);
    }
}
