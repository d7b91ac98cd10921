use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cpde-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn cpde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpde")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const SIM: [&str; 10] = [
    "--set", "topology=cycle:16", "--set", "lambda=2", "--set", "v=1", "--set", "p=0.5", "--set", "horizon=3",
];

#[test]
fn config_errors_exit_two_and_name_the_field() {
    let o = cpde(&["simulate", "--seed", "1", "--set", "topology=cycle:8", "--set", "v=1", "--set", "p=0.5", "--set", "horizon=1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("`lambda`"));

    let mut args = vec!["simulate", "--seed", "1"];
    args.extend(SIM);
    args.extend(["--set", "p=1.5"]);
    let o = cpde(&args);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("1.5"));

    let mut args = vec!["simulate"];
    args.extend(SIM);
    assert_eq!(code(&cpde(&args)), 2, "missing seed");

    let mut args = vec!["simulate", "--seed", "1", "--set", "colour=red"];
    args.extend(SIM);
    assert_eq!(code(&cpde(&args)), 2, "unknown key");
}

#[test]
fn config_file_with_sections() {
    let dir = scratch("file");
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "# shared\n[run]\ntopology = path:8\nv = 1\np = 0.5\nhorizon = 2\n\n[simulate]\nlambda = 1.5\nreplicas = 30\n\n[sweep]\nvs = 1\n",
    )
    .unwrap();
    let out = dir.join("sim.csv");
    let o = cpde(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("# lambda = 1.5"));
    assert!(text.contains("path:8,simulate,8,1.5,1,0.5,2,all,30,3,"));
    std::fs::write(&cfg, "[simulate]\nlambda = 1\n[bogus]\n").unwrap();
    assert_eq!(code(&cpde(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "3"])), 2);
}

#[test]
fn sweep_writes_all_cells_and_a_manifest() {
    let dir = scratch("sweep");
    let out = dir.join("sweep.csv");
    let o = cpde(&[
        "sweep", "--seed", "5", "--replicas", "10", "--out", out.to_str().unwrap(),
        "--set", "topology=cycle:16", "--set", "horizon=2",
        "--set", "vs=0.5,1,2", "--set", "ps=0.2,0.5,0.8", "--set", "lambdas=0.5,1,2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains(",sweep,")).count(), 27);
    assert!(text.contains("# cells = 27"));
    assert!(text.lines().any(|l| l == cpde::estimators::CSV_HEADER));
    let manifest = std::fs::read_to_string(manifest_of(&out)).unwrap();
    assert!(manifest.contains("seed = 5") && manifest.contains("wall_time_s") && manifest.contains("exit_status = 0"));
}

fn manifest_of(out: &Path) -> PathBuf {
    PathBuf::from(format!("{}.manifest", out.display()))
}

#[test]
fn simulate_is_reproducible() {
    let dir = scratch("repro");
    let mut bytes = Vec::new();
    for (i, par) in ["1", "4"].iter().enumerate() {
        let out = dir.join(format!("{i}.csv"));
        let mut args = vec!["simulate", "--seed", "11", "--replicas", "100", "--parallelism", par, "--out", out.to_str().unwrap()];
        args.extend(SIM);
        assert_eq!(code(&cpde(&args)), 0);
        bytes.push(std::fs::read(out).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    let mut args = vec!["simulate", "--seed", "12", "--replicas", "100"];
    args.extend(SIM);
    let other = cpde(&args).stdout;
    assert_ne!(other, bytes[0]);
}

#[test]
fn induced_containment_bug_exits_three() {
    let dir = scratch("fault");
    let out = dir.join("c.csv");
    let mut args = vec!["couplings", "--seed", "2", "--replicas", "5", "--out", out.to_str().unwrap()];
    args.extend(SIM);
    assert_eq!(code(&cpde(&args)), 0);
    args.extend(["--set", "fault=lower-ignores-environment"]);
    let o = cpde(&args);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL"));
    let manifest = std::fs::read_to_string(manifest_of(&out)).unwrap();
    assert!(manifest.contains("# violations") && manifest.contains("exit_status = 3"));
}

#[test]
fn oracle_mismatch_exits_four() {
    let o = cpde(&["oracle-check"]);
    assert_eq!(code(&o), 0);
    let dir = scratch("oracle");
    let fixture = dir.join("bad.txt");
    std::fs::write(&fixture, "path2-single-death-T1 0.5 1e-10\n").unwrap();
    let o = cpde(&["oracle-check", "--set", &format!("fixture={}", fixture.display())]);
    assert_eq!(code(&o), 4);
    std::fs::write(&fixture, "no-such-instance 1 1\n").unwrap();
    assert_eq!(code(&cpde(&["oracle-check", "--set", &format!("fixture={}", fixture.display())])), 4);
}

#[test]
fn blocks_modes_run_clean() {
    let base = ["--seed", "4", "--replicas", "5", "--set", "topology=cycle:64", "--set", "lambda=2", "--set", "v=1", "--set", "p=0.5"];
    let mut args = vec!["blocks"];
    args.extend(base);
    args.extend(["--set", "r0=8", "--set", "windows=5"]);
    let o = cpde(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("replica,violations,empty_z_alive,n_ext,cpde_alive_at_end"));

    let mut args = vec!["blocks"];
    args.extend(base);
    args.extend(["--set", "r0=7"]);
    assert_eq!(code(&cpde(&args)), 2, "64 sites do not split into blocks of 7");

    let o = cpde(&["blocks", "--seed", "1", "--replicas", "20", "--set", "blocks.mode=z", "--set", "eps=0.05", "--set", "z0_size=50"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().filter(|l| !l.starts_with('#')).count(), 21);
}

#[test]
fn calibrate_prints_one_row() {
    let o = cpde(&["calibrate", "--seed", "1", "--replicas", "300", "--set", "lambda=0.5", "--set", "p=0.5", "--set", "eps=0.2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "delta0,r0,t_len,tail,tail_se,cap");
    assert_eq!(rows.len(), 2);
}
