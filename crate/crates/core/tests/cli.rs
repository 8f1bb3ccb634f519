use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_simo-sounder"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.path().join(name);
    let mut args = vec!["simulate", "--out", p(&out)];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn analyze(input: &Path, report: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["analyze", "--in", p(input), "--report", p(report)];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn simulate_writes_800_rows_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let out = simulate(&dir, "ula.csv", &["--geometry", "ula"]);
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "interval,snapshot,t_ms,element,h_re,h_im,rss_dbm");
    assert_eq!(lines.len(), 801);
    assert!(lines[800].starts_with("2,99,3.96000000e2,4,"));
    let conf = fs::read_to_string(dir.path().join("ula.csv.conf")).unwrap();
    assert!(conf.contains("geometry = ula\n"));
    assert!(conf.contains("seed = 1\n"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let a = simulate(&dir, "a.csv", &["--geometry", "pi", "--seed", "17"]);
    let b = simulate(&dir, "b.csv", &["--geometry", "pi", "--seed", "17"]);
    let c = simulate(&dir, "c.csv", &["--geometry", "pi", "--seed", "18"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());

    let (ra, rb) = (dir.path().join("a.ini"), dir.path().join("b.ini"));
    assert_eq!(analyze(&a, &ra, &[]).status.code(), Some(0));
    assert_eq!(analyze(&b, &rb, &[]).status.code(), Some(0));
    let (ta, tb) = (fs::read_to_string(&ra).unwrap(), fs::read_to_string(&rb).unwrap());
    assert_eq!(ta.replace("input = a.csv", "input = b.csv"), tb);
}

#[test]
fn misspelled_config_key_exits_2() {
    let dir = TempDir::new().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "geometry = ula\nsnr = 33\n").unwrap();
    let out = dir.path().join("x.csv");
    let o = run(&["simulate", "--config", p(&conf), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`snr`"), "{err}");
    assert!(!out.exists());
}

#[test]
fn config_file_is_applied() {
    let dir = TempDir::new().unwrap();
    let conf = dir.path().join("short.conf");
    fs::write(&conf, "# short run\ngeometry = pi\nintervals = 1\nsnapshots_per_interval = 5\n").unwrap();
    let out = simulate(&dir, "s.csv", &["--config", p(&conf)]);
    assert_eq!(fs::read_to_string(out).unwrap().lines().count(), 1 + 5 * 4);
    let o = run(&["simulate", "--config", p(&conf), "--geometry", "ula", "--out", p(&dir.path().join("y.csv"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_arguments_exit_1() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--geometry", "ring", "--out", "x.csv"]).status.code(), Some(1));
    assert_eq!(run(&["analyze", "--in", "x.csv"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--seed", "-3", "--out", "x.csv"]).status.code(), Some(1));
}

#[test]
fn invalid_config_value_exits_2() {
    let dir = TempDir::new().unwrap();
    let conf = dir.path().join("v.conf");
    fs::write(&conf, "ula_spacing_wavelengths = 0\n").unwrap();
    let o = run(&["simulate", "--config", p(&conf), "--out", p(&dir.path().join("z.csv"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_writes_report_and_series() {
    let dir = TempDir::new().unwrap();
    let input = simulate(&dir, "ula.csv", &[]);
    let report = dir.path().join("ula.ini");
    let series = dir.path().join("series");
    let o = analyze(&input, &report, &["--series-dir", p(&series), "--snr-db", "33"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&report).unwrap();
    let rho: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("rho_linear = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((rho - 1995.2623149688789).abs() < 1e-9);
    assert!(text.contains("input = ula.csv\n"));
    assert!(text.contains("geometry = ula\n"));
    assert!(!text.contains(dir.path().to_str().unwrap()));
    for name in ["rss.csv", "k_ratios.csv", "capacity.csv", "normalized_capacity.csv"] {
        let body = fs::read_to_string(series.join(name)).unwrap();
        assert_eq!(body.lines().count(), 201, "{name}");
    }
}

#[test]
fn truncated_input_exits_2_naming_line() {
    let dir = TempDir::new().unwrap();
    let input = simulate(&dir, "t.csv", &[]);
    let text = fs::read_to_string(&input).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.pop();
    let truncated = dir.path().join("trunc.csv");
    fs::write(&truncated, lines.join("\n") + "\n").unwrap();
    let o = analyze(&truncated, &dir.path().join("r.ini"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 800"), "{err}");
    assert!(!dir.path().join("r.ini").exists());
}

#[test]
fn compare_reports() {
    let dir = TempDir::new().unwrap();
    let ula = simulate(&dir, "ula.csv", &["--geometry", "ula"]);
    let pi = simulate(&dir, "pi.csv", &["--geometry", "pi"]);
    let (ru, rp, r30) = (dir.path().join("u.ini"), dir.path().join("p.ini"), dir.path().join("p30.ini"));
    assert_eq!(analyze(&ula, &ru, &[]).status.code(), Some(0));
    assert_eq!(analyze(&pi, &rp, &[]).status.code(), Some(0));
    assert_eq!(analyze(&pi, &r30, &["--snr-db", "30"]).status.code(), Some(0));

    let same = dir.path().join("same.txt");
    let o = run(&["compare", "--report-a", p(&ru), "--report-b", p(&ru), "--out", p(&same)]);
    assert_eq!(o.status.code(), Some(0));
    let table = fs::read_to_string(&same).unwrap();
    let rows: Vec<&str> = table
        .split("[table]")
        .nth(1)
        .unwrap()
        .split("[winners]")
        .next()
        .unwrap()
        .lines()
        .filter(|l| l.contains(" = ") && !l.starts_with('#'))
        .collect();
    assert_eq!(rows.len(), 3 + 4);
    assert!(rows.iter().all(|r| r.ends_with(", 0")), "{rows:?}");

    let cmp = dir.path().join("cmp.txt");
    let o = run(&["compare", "--report-a", p(&ru), "--report-b", p(&rp), "--out", p(&cmp)]);
    assert_eq!(o.status.code(), Some(0));
    let table = fs::read_to_string(&cmp).unwrap();
    assert!(table.contains("capacity = a\n"), "{table}");
    assert!(table.contains("normalized_capacity = b\n"), "{table}");

    let o = run(&["compare", "--report-a", p(&ru), "--report-b", p(&r30), "--out", p(&dir.path().join("m.txt"))]);
    assert_eq!(o.status.code(), Some(1));

    let broken = dir.path().join("broken.ini");
    fs::write(&broken, fs::read_to_string(&ru).unwrap().replace("[capacity]", "[cap]")).unwrap();
    let o = run(&["compare", "--report-a", p(&broken), "--report-b", p(&ru), "--out", p(&dir.path().join("n.txt"))]);
    assert_eq!(o.status.code(), Some(2));
}
