use std::process::{Command, Output};

fn twr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twr")).args(args).output().expect("binary runs")
}

const SMALL: &[&str] = &["--k", "1", "--m", "1", "--nr", "2", "--si-db=-150,-110", "--realizations", "2", "--seed", "5", "--no-timing"];

#[test]
fn header_follows_the_row_layout() {
    let out = twr(SMALL);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "preset,realization,seed,algorithm,K,M,N_R,si_db,iterations,objective_nats,objective_bits,\
         sum_rate_nats,total_tx_power_w,physical_ee,tau,status,runtime_ms"
    );
    // 2 SI levels x 2 realizations x 6 algorithms, then 2 x 6 averages
    assert_eq!(text.lines().count(), 1 + 24 + 12);
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = std::env::temp_dir().join(format!("twr-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for path in [&a, &b] {
        let mut args = SMALL.to_vec();
        args.extend(["--algo", "fd_maximin,tf_ee", "--out", path.to_str().unwrap()]);
        assert!(twr(&args).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_file_overrides_the_model() {
    let dir = std::env::temp_dir().join(format!("twr-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("cfg.json");
    std::fs::write(&cfg, r#"{"max_iters": 1}"#).unwrap();
    let out = twr(&["--k", "1", "--m", "1", "--nr", "2", "--si-db=-130", "--realizations", "1", "--algo", "fd_maximin",
        "--no-timing", "--config", cfg.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    let iterations: f64 = row.split(',').nth(8).unwrap().parse().unwrap();
    assert!(iterations <= 1.0, "{row}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn usage_errors_exit_nonzero() {
    for args in [&[][..], &["--preset", "fig9"][..], &["--k", "2", "--algo", "fd_magic"][..], &["--k", "2", "--m", "2"][..]] {
        let out = twr(args);
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty());
        assert!(out.stdout.is_empty());
    }
}
