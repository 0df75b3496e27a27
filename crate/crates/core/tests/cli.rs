use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_sscodes");

const SWEEP: &str = r#"
seed = 5
trials = 2
[channel]
kind = "bsc"
epsilon = 0.01
[code]
B = 4
L = 64
[sweep]
rates = [0.4, 0.65, 0.9]
[replica]
mc_samples = 20000
"#;

const GRIDS: &str = r#"
[replica]
mc_samples = 20000
[thresholds]
channels = [{ kind = "bec", epsilon = 0.1 }, { kind = "awgn", snr = 10.0 }]
B = [2]
ensembles = ["gaussian-iid"]
[error_floor]
rate = 0.6
channels = [{ kind = "zc", epsilon = 0.05 }, { kind = "awgn", snr = 10.0 }]
B = [2]
ensembles = ["row-orthogonal", "custom"]
[capacity]
channels = [{ kind = "bec", epsilon = 0.1 }]
ensembles = ["row-orthogonal", "custom"]
[ensemble]
spectrum_file = "spectrum.txt"
"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(BIN).args(args).arg("--config").arg(&path).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("spectrum.txt"), "# value weight\n0.5 1\n1.5 1 # upper atom\n").unwrap();
    dir
}

#[test]
fn decode_sweep_emits_one_row_per_trial() {
    let dir = setup();
    let csv = stdout(&run(dir.path(), SWEEP, &["decode-sweep"]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 7);
    assert!(lines[0].starts_with("schema_version,channel,epsilon,ensemble,B,L,M,rate,seed,trial"));
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 21);
        assert_eq!((f[0], f[1], f[3], f[5]), ("1", "bsc", "row-orthogonal", "64"));
        assert!(f[14..].iter().all(|s| s.is_empty()), "{line}");
    }
    let trials: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(9).unwrap()).collect();
    assert_eq!(trials, ["0", "1", "0", "1", "0", "1"]);
}

#[test]
fn replica_sweep_reports_both_branches() {
    let dir = setup();
    let csv = stdout(&run(dir.path(), SWEEP, &["replica-sweep"]));
    let rows: Vec<Vec<String>> =
        csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 6);
    let phases: Vec<&str> = rows.iter().step_by(2).map(|r| r[19].as_str()).collect();
    assert_eq!(phases, ["easy", "hard", "impossible"]);
    for pair in rows.chunks(2) {
        let (un, inf) = (&pair[0], &pair[1]);
        assert_eq!((un[9].as_str(), inf[9].as_str()), ("0", "1"));
        assert!(un[5].is_empty() && un[13].is_empty());
        let phi = |r: &Vec<String>| r[18].parse::<f64>().unwrap();
        match un[19].as_str() {
            "hard" => assert!(phi(un) < phi(inf)),
            "impossible" => assert!(phi(un) > phi(inf)),
            _ => assert!((phi(un) - phi(inf)).abs() <= un[20].parse::<f64>().unwrap() + 1e-9),
        }
    }
}

#[test]
fn every_command_is_reproducible() {
    let dir = setup();
    for (cmd, cfg) in [
        ("decode-sweep", SWEEP),
        ("replica-sweep", SWEEP),
        ("thresholds", GRIDS),
        ("error-floor", GRIDS),
        ("capacity", GRIDS),
    ] {
        let a = stdout(&run(dir.path(), cfg, &[cmd]));
        let b = stdout(&run(dir.path(), cfg, &[cmd, "--threads", "1"]));
        assert_eq!(a, b, "{cmd}");
        assert!(!a.is_empty());
    }
}

#[test]
fn seed_flag_changes_trials_and_out_writes_file() {
    let dir = setup();
    let base = stdout(&run(dir.path(), SWEEP, &["decode-sweep"]));
    let reseeded = stdout(&run(dir.path(), SWEEP, &["decode-sweep", "--seed", "6"]));
    assert_ne!(base, reseeded);
    let out = dir.path().join("rows.csv");
    let o = run(dir.path(), SWEEP, &["decode-sweep", "--out", out.to_str().unwrap()]);
    assert!(stdout(&o).is_empty());
    assert_eq!(std::fs::read_to_string(out).unwrap(), base);
}

#[test]
fn threshold_failures_stay_in_their_cell() {
    let dir = setup();
    let csv = stdout(&run(dir.path(), GRIDS, &["thresholds"]));
    let status: Vec<&str> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(status, ["ok", "bracket"]);
}

#[test]
fn exit_codes() {
    let dir = setup();
    let code = |o: Output| o.status.code().unwrap();
    assert_eq!(code(run(dir.path(), "seed = 1\ntypo = 2\n", &["decode-sweep"])), 2);
    assert_eq!(code(run(dir.path(), "[channel]\nkind = \"bsc\"\nepsilon = 1.5\n", &["decode-sweep"])), 2);
    assert_eq!(code(run(dir.path(), SWEEP, &["error-floor"])), 2);
    assert_eq!(code(run(dir.path(), SWEEP, &["replica-sweep", "--mc-samples", "0"])), 2);
    let missing = Command::new(BIN).args(["capacity", "--config", "/nonexistent.toml"]).output().unwrap();
    assert_eq!(code(missing), 2);
    assert_eq!(code(run(dir.path(), SWEEP, &["replica-sweep", "--out", "/nonexistent/dir/x.csv"])), 1);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            sscodes::harness::ExperimentConfig::load(&path)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert_eq!(n, 4);
}
