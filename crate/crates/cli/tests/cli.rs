use std::path::PathBuf;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irrigation-lq")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("irrigation-lq-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const TIME_RESPONSE: &str = r#"
pools = 5
kind = "alternating"
initial_levels = [5.0, 0.0, 0.0, 0.0, -5.0]

[[disturbance]]
pool = 1
start = 250
end = 450
"#;

#[test]
fn simulate_writes_trace() {
    let scenario = scratch("time_response.toml");
    std::fs::write(&scenario, TIME_RESPONSE).unwrap();
    for controller in ["structured", "lq3", "p"] {
        let out = scratch(&format!("{controller}.csv"));
        let run = cli(&[
            "simulate",
            "--scenario",
            scenario.to_str().unwrap(),
            "--controller",
            controller,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
        assert!(String::from_utf8_lossy(&run.stdout).contains("horizon 3000"));
        let csv = std::fs::read_to_string(&out).unwrap();
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(header.len(), 1 + 3 * 5 + 3);
        assert_eq!(header[0], "t");
        assert_eq!(header[1], "y_1");
        assert_eq!(header[6], "u_1");
        assert_eq!(header[11], "d_1");
        assert_eq!(header[16..], ["cost_cum_level", "cost_cum_input", "cost_cum_deltau"]);
        assert_eq!(lines.count(), 3000);
    }
}

#[test]
fn message_log_only_for_structured() {
    let scenario = scratch("msg.toml");
    std::fs::write(&scenario, "pools = 3\nhorizon = 20\n").unwrap();
    let out = scratch("msg.csv");
    let log = scratch("msg-log.csv");
    let args = |c| {
        cli(&[
            "simulate",
            "--scenario",
            scenario.to_str().unwrap(),
            "--controller",
            c,
            "--out",
            out.to_str().unwrap(),
            "--messages",
            log.to_str().unwrap(),
        ])
    };
    assert!(args("structured").status.success());
    assert!(std::fs::read_to_string(&log).unwrap().starts_with("tick,from,to,kind,index,value"));
    assert!(!args("lq3").status.success());
}

#[test]
fn config_errors_exit_nonzero() {
    let bad = scratch("bad.toml");
    let out = scratch("bad.csv");
    for text in ["pools = 0\n", "pools = 3\nunknown = 1\n", "pools = 3\n[weights]\nr_n = -1.0\n", "pools = \"x\"\n"] {
        std::fs::write(&bad, text).unwrap();
        let run = cli(&["simulate", "--scenario", bad.to_str().unwrap(), "--controller", "p", "--out", out.to_str().unwrap()]);
        assert!(!run.status.success(), "{text}");
        assert!(String::from_utf8_lossy(&run.stderr).starts_with("error:"));
    }
    let missing = cli(&["simulate", "--scenario", "/nonexistent.toml", "--controller", "p", "--out", out.to_str().unwrap()]);
    assert!(!missing.status.success());
    std::fs::write(&bad, "pools = 3\n[weights]\nr = 1.0\n").unwrap();
    assert!(!cli(&["params", "--scenario", bad.to_str().unwrap()]).status.success());
}

#[test]
fn params_lists_gates() {
    let run = cli(&["params", "--pools", "4", "--kind", "alternating"]);
    assert!(run.status.success());
    let text = String::from_utf8_lossy(&run.stdout);
    assert!(text.starts_with("gate q q_tilde b_hat gamma"));
    assert!(text.contains("\n4 ") && text.contains("r_tilde"));
}

#[test]
fn ident_reports_delays() {
    let prefix = scratch("fit");
    let run = cli(&["ident", "--csv-prefix", prefix.to_str().unwrap()]);
    assert!(run.status.success());
    let text = String::from_utf8_lossy(&run.stdout);
    assert!(text.contains("tau_bar 10") && text.contains("tau pool1 2"));
    let common = std::fs::read_to_string(scratch("fit_common.csv")).unwrap();
    assert!(common.starts_with("delay,error\n1,"));
    assert!(scratch("fit_pool2.csv").exists());
}

#[test]
fn sweeps_print_tables() {
    let run = cli(&["sweep-size", "--sizes", "3,4"]);
    assert!(run.status.success());
    assert_eq!(String::from_utf8_lossy(&run.stdout).lines().count(), 1 + 2 * 3);
    let run = cli(&["sweep-location", "--pools", "4", "--locations", "1,4"]);
    assert_eq!(String::from_utf8_lossy(&run.stdout).lines().count(), 1 + 2 * 3);
    assert!(!cli(&["sweep-location", "--pools", "4", "--locations", "5"]).status.success());
}

#[test]
fn shipped_scenarios_run() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let out = scratch("shipped.csv");
    for name in ["time_response.toml", "setpoint.toml", "full.toml"] {
        let path = dir.join(name);
        let run = cli(&["simulate", "--scenario", path.to_str().unwrap(), "--controller", "structured", "--out", out.to_str().unwrap()]);
        assert!(run.status.success(), "{name}: {}", String::from_utf8_lossy(&run.stderr));
    }
}
