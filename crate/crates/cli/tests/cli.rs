use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spinterface::io::parse_csv;
use spinterface::spin::MU_B_OVER_H;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(name: &str) -> PathBuf {
    root().join("configs").join(name)
}

fn protocol(name: &str) -> PathBuf {
    root().join("protocols").join(name)
}

fn spinterface(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinterface")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "status {:?}\nstderr: {}", out.status, String::from_utf8_lossy(&out.stderr));
}

fn table(path: &Path) -> spinterface::io::Table {
    parse_csv(&fs::read_to_string(path).unwrap()).unwrap()
}

fn report_value(dir: &Path, key: &str) -> f64 {
    let text = fs::read_to_string(dir.join("fit_report.txt")).unwrap();
    let line = text.lines().find(|l| l.starts_with(&format!("{key}="))).unwrap();
    line[key.len() + 1..].parse().unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("test.conf");
    fs::write(&p, body).unwrap();
    p
}

fn c1() -> String {
    s(&config("compound1.conf")).to_string()
}

#[test]
fn levels_at_zero_and_ten_millitesla() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(&spinterface(&["levels", "-c", &c1(), "-o", s(out)]));
    let levels = table(&out.join("levels.csv"));
    let e = levels.column("energy_ghz").unwrap();
    for (a, b) in e.iter().zip([-2.42, 1.21, 1.21]) {
        assert!((a - b).abs() < 1e-9, "{e:?}");
    }

    ok(&spinterface(&["levels", "-c", &c1(), "-o", s(out), "--field-mt", "10"]));
    let tr = table(&out.join("transitions.csv"));
    let f = tr.column("frequency_ghz").unwrap();
    for want in [3.3501, 3.9099] {
        assert!(f.iter().any(|x| (x - want).abs() < 1e-4), "{f:?}");
    }
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "[spin]\nd_ghz = 3.63\nthis is not a setting\n");
    let out = spinterface(&["levels", "-c", s(&bad), "-o", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let missing = spinterface(&["levels", "-c", "/nonexistent/file.conf"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn bad_direction_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = spinterface(&["levels", "-c", &c1(), "-o", s(dir.path()), "--axis", "1,2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = spinterface(&["esr", "-c", &c1(), "-o", s(dir.path()), "--linewidth-mt=-1"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn odmr_ridges_follow_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    ok(&spinterface(&["odmr", "-c", &c1(), "-o", s(dir.path()), "--svg"]));
    let text = fs::read_to_string(dir.path().join("odmr.csv")).unwrap();
    let mut rows = text.lines().filter(|l| !l.starts_with('#'));
    let freqs: Vec<f64> = rows.next().unwrap().split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    let step = freqs[1] - freqs[0];
    let mut checked = 0;
    for row in rows {
        let vals: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        let b = vals[0];
        let col = &vals[1..];
        let shift = 2.0 * MU_B_OVER_H * b * 1e-3;
        if shift < 5.0 * step {
            continue;
        }
        for centre in [3.63 - shift, 3.63 + shift] {
            if centre < freqs[0] + 0.02 || centre > freqs[freqs.len() - 1] - 0.02 {
                continue;
            }
            // strongest point within 20 MHz of the expected line
            let near: Vec<usize> = (0..freqs.len()).filter(|&j| (freqs[j] - centre).abs() < 0.02).collect();
            let best = near.iter().copied().max_by(|&a, &b| col[a].total_cmp(&col[b])).unwrap();
            assert!((freqs[best] - centre).abs() <= step, "B={b}: {} vs {centre}", freqs[best]);
            checked += 1;
        }
    }
    assert!(checked > 30, "{checked}");
    let svg = fs::read_to_string(dir.path().join("odmr.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn esr_of_a_free_spin_is_one_line_at_g2() {
    let dir = tempfile::tempdir().unwrap();
    let conf = write_config(
        dir.path(),
        "[spin]\nd_ghz = 0\ne_ghz = 0\ng = 2.0\n[optical]\nzpl_nm = 1025\nt_opt_us = 3.3\n[dynamics]\nt1_ms = 0.22\n",
    );
    ok(&spinterface(&["esr", "-c", s(&conf), "-o", s(dir.path()), "--field-steps", "8001", "--linewidth-mt", "1"]));
    let t = table(&dir.path().join("esr.csv"));
    let (b, v) = (t.columns[0].as_slice(), t.columns[1].as_slice());
    let peak = (0..v.len()).max_by(|&a, &c| v[a].total_cmp(&v[c])).unwrap();
    assert!((b[peak] - 335.8).abs() < 0.2, "{}", b[peak]);
    // single line: nothing else above 1% of the peak away from it
    let others = (0..v.len()).filter(|&i| (b[i] - b[peak]).abs() > 10.0).map(|i| v[i]).fold(0.0, f64::max);
    assert!(others < 0.01 * v[peak]);
}

#[test]
fn zeeman_pl_without_field_has_zero_difference() {
    let dir = tempfile::tempdir().unwrap();
    ok(&spinterface(&["zeeman-pl", "-c", &c1(), "-o", s(dir.path()), "--field-t", "0"]));
    let t = table(&dir.path().join("zeeman_pl_differential.csv"));
    assert!(t.columns[1].iter().all(|&v| v == 0.0));
}

#[test]
fn shipped_t1_protocol_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&spinterface(&["run", s(&protocol("fig2e.seq")), "-c", &c1(), "-o", s(d)]));
    ok(&spinterface(&["fit", s(&d.join("fig2e_readout0.csv")), "-m", "exp_recovery", "-o", s(d)]));
    let t1 = report_value(d, "tau") * 1e3;
    assert!((t1 - 0.22).abs() / 0.22 < 0.02, "{t1}");
}

#[test]
fn shipped_echo_protocol_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&spinterface(&["run", s(&protocol("fig3f.seq")), "-c", &c1(), "-o", s(d)]));
    ok(&spinterface(&["fit", s(&d.join("fig3f_readout0.csv")), "-m", "exp_decay", "-o", s(d)]));
    // the sweep variable is tau, the echo decays over 2 tau
    let t2 = 2.0 * report_value(d, "tau") * 1e9;
    assert!((t2 - 640.0).abs() / 640.0 < 0.01, "{t2}");
}

#[test]
fn broken_sequence_exits_4_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("broken.seq");
    fs::write(&seq, "laser 300us\nwait 5GHz\n").unwrap();
    let out = spinterface(&["run", s(&seq), "-c", &c1(), "-o", s(dir.path())]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&format!("{}:2:6:", seq.display())), "{err}");

    fs::write(&seq, "mw pi f=7GHz\nlaser 1us measure 1us\n").unwrap();
    let out = spinterface(&["run", s(&seq), "-c", &c1(), "-o", s(dir.path())]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn shipped_rabi_data_fits_to_its_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let data = root().join("data/rabi.csv");
    ok(&spinterface(&["fit", s(&data), "-m", "damped_cosine", "-o", s(dir.path())]));
    let expect: f64 = table(&data).metadata.get("rabi_mhz").unwrap().parse().unwrap();
    let f = report_value(dir.path(), "f") / 1e6;
    assert!((f - expect).abs() / expect < 0.01, "{f} vs {expect}");
}

#[test]
fn fit_rejects_unknown_models() {
    let dir = tempfile::tempdir().unwrap();
    let out = spinterface(&["fit", s(&root().join("data/rabi.csv")), "-m", "gaussian", "-o", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn noiseless_exponential_fixture_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("decay.csv");
    let mut text = String::from("# kind=fixture\nt,y\n");
    for i in 0..100 {
        let t = i as f64 * 1e-7;
        text += &format!("{t},{}\n", 2.0 * (-t / 3.3e-6).exp() + 0.5);
    }
    fs::write(&path, text).unwrap();
    ok(&spinterface(&["fit", s(&path), "-m", "exp_decay", "--x", "t", "--y", "y", "-o", s(dir.path())]));
    let tau = report_value(dir.path(), "tau");
    assert!((tau - 3.3e-6).abs() / 3.3e-6 < 1e-3, "{tau}");
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv" || x == "svg"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn full_suite(dir: &Path, threads: &str) {
    let d = s(dir);
    let env = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_spinterface"))
            .args(args)
            .env("SPINTERFACE_THREADS", threads)
            .output()
            .unwrap();
        ok(&out);
    };
    env(&["levels", "-c", &c1(), "-o", d, "--field-mt", "10"]);
    env(&["odmr", "-c", &c1(), "-o", d, "--freq-steps", "261", "--svg"]);
    env(&["esr", "-c", &c1(), "-o", d, "--powder", "200", "--field-steps", "401"]);
    env(&["zeeman-pl", "-c", &c1(), "-o", d, "--wl-steps", "401"]);
    for p in ["fig2d.seq", "fig2e.seq", "fig3f.seq"] {
        env(&["run", s(&protocol(p)), "-c", &c1(), "-o", d, "--noise-fraction", "0.01", "--record-pl"]);
    }
    env(&["fit", &format!("{d}/fig2e_readout0.csv"), "-m", "exp_recovery", "-o", d]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    full_suite(a.path(), "1");
    full_suite(b.path(), "4");
    let (fa, fb) = (csv_files(a.path()), csv_files(b.path()));
    assert!(fa.len() > 10);
    assert_eq!(fa.iter().map(|f| &f.0).collect::<Vec<_>>(), fb.iter().map(|f| &f.0).collect::<Vec<_>>());
    for (x, y) in fa.iter().zip(&fb) {
        assert!(x.1 == y.1, "{} differs", x.0);
    }
}

#[test]
fn every_manifest_lists_existing_outputs() {
    let dir = tempfile::tempdir().unwrap();
    full_suite(dir.path(), "2");
    for sub in ["levels", "odmr", "esr", "zeeman-pl", "run", "fit"] {
        let text = fs::read_to_string(dir.path().join(format!("{sub}_manifest.txt"))).unwrap();
        assert!(text.starts_with(&format!("subcommand={sub}\n")));
        let outputs: Vec<&str> =
            text.lines().skip_while(|l| *l != "[outputs]").skip(1).take_while(|l| !l.starts_with('[')).collect();
        assert!(!outputs.is_empty(), "{sub}");
        for name in outputs {
            let meta = fs::metadata(dir.path().join(name)).unwrap();
            assert!(meta.len() > 0, "{name}");
        }
    }
    let run = fs::read_to_string(dir.path().join("run_manifest.txt")).unwrap();
    assert!(run.contains("[sweep]\npoint0=tau=0\n"), "{run}");
    assert!(run.contains("dynamics.noise_fraction=0.01"));
}

#[test]
fn invalid_thread_count_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_spinterface"))
        .args(["run", s(&protocol("fig2d.seq")), "-c", &c1(), "-o", s(dir.path())])
        .env("SPINTERFACE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_documents_every_flag() {
    let cases: [(&str, &[&str]); 6] = [
        ("levels", &["--config", "--out", "--field-mt", "--axis"]),
        (
            "odmr",
            &["--config", "--out", "--field-min", "--field-max", "--field-steps", "--freq-min", "--freq-max", "--freq-steps", "--linewidth-mhz", "--svg"],
        ),
        (
            "esr",
            &["--config", "--out", "--freq-ghz", "--field-min", "--field-max", "--field-steps", "--linewidth-mt", "--lorentzian", "--derivative", "--powder", "--direction", "--svg"],
        ),
        ("zeeman-pl", &["--config", "--out", "--field-t", "--wl-min", "--wl-max", "--wl-steps", "--linewidth-ghz", "--svg"]),
        ("run", &["--config", "--out", "--record-pl", "--pulse-model", "--noise-fraction", "--svg"]),
        ("fit", &["--model", "--x", "--y", "--out"]),
    ];
    for (sub, flags) in cases {
        let out = spinterface(&[sub, "--help"]);
        ok(&out);
        let text = String::from_utf8_lossy(&out.stdout);
        for f in flags {
            assert!(text.contains(f), "{sub} --help lacks {f}");
        }
    }
    ok(&spinterface(&["--help"]));
}

#[test]
fn shipped_configs_load() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["compound1.conf", "compound2.conf", "compound3.conf"] {
        ok(&spinterface(&["levels", "-c", s(&config(name)), "-o", s(dir.path())]));
    }
}
