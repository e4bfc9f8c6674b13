use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn recipes() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("recipes")
}

fn tbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tbound"))
        .args(args)
        .output()
        .expect("tbound runs")
}

fn recipe(name: &str) -> String {
    recipes().join(name).to_string_lossy().into_owned()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Header and data rows, without the `#` preamble.
fn rows(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn check_schema(csv: &str) {
    let (header, rows) = rows(csv);
    assert!(!rows.is_empty());
    for row in &rows {
        assert_eq!(row.len(), header.len(), "{csv}");
        for (h, v) in header.iter().zip(row).skip(1) {
            if h == "verdict" || h == "trials" {
                continue;
            }
            let x: f64 = v.parse().unwrap_or_else(|_| panic!("{h}={v} is not a number"));
            if !h.starts_with("snr_db") && !h.starts_with("w_") {
                assert!((0.0..=1.0).contains(&x), "{h}={x} outside [0, 1]");
            }
        }
    }
}

fn recipe_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(recipes())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    files
}

#[test]
fn every_recipe_runs_bound_and_simulate() {
    let files = recipe_files();
    for fig in 4..=11 {
        assert!(
            files
                .iter()
                .any(|p| p.file_name().unwrap() == format!("fig{fig:02}.toml").as_str()),
            "missing recipe for figure {fig}"
        );
    }
    for path in &files {
        let p = path.to_str().unwrap();
        check_schema(&stdout(&tbound(&["bound", p])));
        check_schema(&stdout(&tbound(&["simulate", p, "--trials", "2000"])));
    }
}

#[test]
fn fig04_all_families_over_w() {
    let csv = stdout(&tbound(&["bound", &recipe("fig04.toml"), "--family", "all"]));
    let (header, rows) = rows(&csv);
    assert_eq!(header, ["w", "stationary", "sotat", "wtb"]);
    let ws: Vec<usize> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(ws, (0..=24).collect::<Vec<_>>());
}

#[test]
fn fig05_wtb_not_above_sotat() {
    let csv = stdout(&tbound(&["bound", &recipe("fig05.toml")]));
    let (header, rows) = rows(&csv);
    let (so, wt) = (
        header.iter().position(|h| h == "sotat").unwrap(),
        header.iter().position(|h| h == "wtb").unwrap(),
    );
    for r in rows {
        let (a, b): (f64, f64) = (r[wt].parse().unwrap(), r[so].parse().unwrap());
        assert!(a <= b, "w={}: {a} > {b}", r[0]);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["simulate", &recipe("fig06.toml"), "--trials", "100000", "--seed", "42"];
    let a = stdout(&tbound(&args));
    let b = stdout(&tbound(&args));
    assert_eq!(a, b);
    let one = stdout(&tbound(&[&args[..], &["--workers", "1"]].concat()));
    let four = stdout(&tbound(&[&args[..], &["--workers", "4"]].concat()));
    assert_eq!(one, four);
    assert!(a.contains("# seed=42"));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let printed = stdout(&tbound(&["bound", &recipe("fig04.toml")]));
    stdout(&tbound(&[
        "bound",
        &recipe("fig04.toml"),
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(fs::read_to_string(out).unwrap(), printed);
}

#[test]
fn override_changes_only_snr() {
    let base = stdout(&tbound(&["bound", &recipe("fig05.toml")]));
    let same = stdout(&tbound(&["bound", &recipe("fig05.toml"), "--override", "snr_db=10"]));
    // the recipe is already at 10 dB
    assert_eq!(base, same);
    let other = stdout(&tbound(&[
        "bound",
        &recipe("fig05.toml"),
        "--override",
        "channel.snr_db=5",
    ]));
    assert_ne!(rows(&base).1, rows(&other).1);
    assert_eq!(rows(&base).0, rows(&other).0);
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn parse_errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(recipes().join("fig05.toml")).unwrap();
    let missing = write(dir.path(), "m.toml", &text.replace("[channel]", "[chanel]"));
    let out = tbound(&["bound", &missing]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("chanel"), "{}", stderr(&out));

    let no_channel: String = text
        .split("\n\n")
        .filter(|block| !block.starts_with("[channel]"))
        .collect::<Vec<_>>()
        .join("\n\n");
    let out = tbound(&["bound", &write(dir.path(), "n.toml", &no_channel)]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("channel"), "{}", stderr(&out));

    let unknown = write(dir.path(), "u.toml", &text.replace("hops = 2", "hops = 2\nlinks = 2"));
    let out = tbound(&["bound", &unknown]);
    assert!(!out.status.success());
    let msg = stderr(&out);
    assert!(msg.contains("links") && msg.contains("line"), "{msg}");
}

#[test]
fn zero_trials_is_an_argument_error() {
    let out = tbound(&["simulate", &recipe("fig06.toml"), "--trials", "0"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("trials"), "{}", stderr(&out));
}

#[test]
fn inverse_delay_at_eps_one_is_zero() {
    let csv = stdout(&tbound(&[
        "inverse",
        &recipe("fig04.toml"),
        "--mode",
        "delay",
        "--eps",
        "1",
    ]));
    let (header, rows) = rows(&csv);
    assert_eq!(header, ["eps", "w_stationary", "w_sotat", "w_wtb"]);
    assert_eq!(rows[0][1..], ["0", "0", "0"]);
}

#[test]
fn inverse_snr_at_eps_one_is_the_floor() {
    let csv = stdout(&tbound(&[
        "inverse",
        &recipe("fig07.toml"),
        "--mode",
        "snr",
        "--eps",
        "1",
    ]));
    for r in rows(&csv).1 {
        for v in &r[1..] {
            assert_eq!(v.parse::<f64>().unwrap(), -10.0);
        }
    }
}

#[test]
fn unreachable_eps_names_the_cap() {
    let out = tbound(&[
        "inverse",
        &recipe("fig07.toml"),
        "--mode",
        "snr",
        "--eps",
        "1e-9",
        "-o",
        "w_grid=[0]",
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("60 dB"), "{}", stderr(&out));

    let out = tbound(&[
        "inverse",
        &recipe("fig04.toml"),
        "--mode",
        "delay",
        "--eps",
        "1e-3",
        "--family",
        "stationary",
        "-o",
        "stationary_rho=40",
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("10000"), "{}", stderr(&out));
}

#[test]
fn inverse_snr_orders_families() {
    let csv = stdout(&tbound(&[
        "inverse",
        &recipe("fig07.toml"),
        "--mode",
        "snr",
        "--eps",
        "1e-9",
    ]));
    let (header, rows) = rows(&csv);
    assert_eq!(header, ["w", "snr_db_stationary", "snr_db_sotat", "snr_db_wtb"]);
    for r in rows {
        let v: Vec<f64> = r[1..].iter().map(|x| x.parse().unwrap()).collect();
        assert!(v[2] < v[1] && v[1] < v[0], "w={}: {v:?}", r[0]);
    }
}

#[test]
fn compare_reports_verdicts() {
    let csv = stdout(&tbound(&["compare", &recipe("fig06.toml"), "--trials", "20000"]));
    let (header, rows) = rows(&csv);
    assert_eq!(header.last().unwrap(), "verdict");
    let verdicts: Vec<&str> = rows.iter().map(|r| r.last().unwrap().as_str()).collect();
    assert!(verdicts.contains(&"pass"));
    assert!(verdicts.contains(&"inconclusive"));
    assert!(!verdicts.contains(&"fail"));
}

#[test]
fn t_eval_flag_moves_the_evaluation_slot() {
    let at_end = stdout(&tbound(&["bound", &recipe("fig06.toml")]));
    let early = stdout(&tbound(&["bound", &recipe("fig06.toml"), "--t-eval", "2"]));
    assert_ne!(rows(&at_end).1, rows(&early).1);
}

#[test]
fn delayed_recipe_rejects_current_backlog_families_per_row() {
    let out = tbound(&["bound", &recipe("fig11.toml"), "--family", "wtb,wtb_delayed"]);
    let csv = stdout(&out);
    let (_, rows) = rows(&csv);
    assert_ne!(rows[0][1], "NaN");
    assert!(rows[1..].iter().all(|r| r[1] == "NaN" && r[2] != "NaN"));
    assert!(stderr(&out).contains("warning"));
}
