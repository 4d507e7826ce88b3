use std::path::Path;
use std::process::{Command, Output};

use cogbeam::experiments::{read_solution, write_channel_file};
use cogbeam::{sample_channels, Mode, ScenarioConfig};

fn cogbeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cogbeam"))
        .args(args)
        .env_remove("COGBEAM_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_channels(dir: &Path, m: usize, q: usize, seed: u64) -> String {
    let c = ScenarioConfig::new(m, m, 2, q, 1, 1.0, 0.1, vec![1.0], seed).unwrap();
    let path = dir.join(format!("channels_{m}_{q}_{seed}.txt"));
    write_channel_file(&sample_channels(&c, 0).unwrap(), &path).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn sweep_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sweep.csv");
    let args = [
        "sweep", "--values", "0,10", "--unit", "db", "--trials", "8", "--d", "2", "--xi", "0.1", "--seed", "4",
    ];
    let first = cogbeam(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let mut with_file = args.to_vec();
    with_file.extend(["--output", file.to_str().unwrap()]);
    assert!(cogbeam(&with_file).status.success());

    let csv = stdout(&first);
    assert_eq!(std::fs::read_to_string(&file).unwrap(), csv);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "axis,axis_unit,solver,mean_power,stddev,mean_interference,infeasible,trials"
    );
    assert_eq!(lines.count(), 6);
    assert!(csv.contains(",dB,nfb,"));
}

#[test]
fn flags_override_config_and_env_sets_default_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small sweep\naxis = xi\nvalues = 0.05, 0.5\ntrials = 3\nsolvers = nfb\nd = 1\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let from_file = stdout(&cogbeam(&["--config", cfg, "sweep"]));
    assert!(from_file.lines().skip(1).all(|l| l.ends_with(",3")), "{from_file}");
    let overridden = stdout(&cogbeam(&["--config", cfg, "sweep", "--trials", "2"]));
    assert!(overridden.lines().skip(1).all(|l| l.ends_with(",2")), "{overridden}");

    let run_with_env = |seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_cogbeam"))
            .args(["--config", cfg, "sweep"])
            .env("COGBEAM_SEED", seed)
            .output()
            .unwrap();
        stdout(&out)
    };
    assert_eq!(run_with_env("0"), from_file);
    assert_ne!(run_with_env("17"), from_file);
    assert_eq!(run_with_env("17"), stdout(&cogbeam(&["--config", cfg, "sweep", "--seed", "17"])));
}

#[test]
fn access_prob_with_spare_dimensions_is_one() {
    let out = cogbeam(&["access-prob", "--xi-values", "0.01,0.1,1", "--streams", "1,2,3", "--trials", "20"]);
    assert!(out.status.success());
    let csv = stdout(&out);
    assert_eq!(csv.lines().next().unwrap(), "axis,axis_unit,streams,access_probability,trials");
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[3].parse::<f64>().unwrap(), 1.0, "{line}");
    }
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn solve_writes_a_valid_record() {
    let dir = tempfile::tempdir().unwrap();
    let channels = write_channels(dir.path(), 4, 2, 1);
    let dump = dir.path().join("nfb.json");
    let out = cogbeam(&[
        "solve", "--channels", &channels, "--snr", "3,1", "--xi", "0.05", "--dump", dump.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rec = read_solution(&dump).unwrap();
    assert_eq!(rec.mode, Mode::Nfb);
    assert!(rec.interference <= 0.05 * (1.0 + 1e-6));
    assert_eq!(rec.scenario.unwrap().m, 4);

    let zfb = cogbeam(&["solve", "--channels", &channels, "--snr", "3,1", "--mode", "zfb"]);
    assert!(zfb.status.success());
    let stdout_dump = dir.path().join("zfb.json");
    std::fs::write(&stdout_dump, zfb.stdout).unwrap();
    let rec = read_solution(&stdout_dump).unwrap();
    assert_eq!(rec.mode, Mode::Zfb);
    assert!(rec.interference < 1e-15);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // m − q = 1 leaves no room for two zero-forcing streams.
    let tight = write_channels(dir.path(), 3, 2, 2);
    let zfb = cogbeam(&["solve", "--channels", &tight, "--d", "2", "--mode", "zfb"]);
    assert_eq!(zfb.status.code(), Some(3));
    let nfb = cogbeam(&["solve", "--channels", &tight, "--d", "2", "--xi", "1e-9"]);
    assert_eq!(nfb.status.code(), Some(3), "{}", String::from_utf8_lossy(&nfb.stderr));

    assert_eq!(cogbeam(&["sweep", "--trials", "2"]).status.code(), Some(2));
    assert_eq!(cogbeam(&["sweep", "--values", "1", "--pattern", "skewed"]).status.code(), Some(2));
    assert_eq!(cogbeam(&["sweep", "--values", "2,1", "--trials", "2"]).status.code(), Some(2));
    let bad_cfg = dir.path().join("bad.cfg");
    std::fs::write(&bad_cfg, "colour = blue\n").unwrap();
    assert_eq!(
        cogbeam(&["--config", bad_cfg.to_str().unwrap(), "selftest"]).status.code(),
        Some(2)
    );
}

#[test]
fn selftest_passes() {
    let out = cogbeam(&["selftest", "--instances", "5", "--seed", "2"]);
    assert!(out.status.success(), "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 7);
}
