use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wigkernel::battery::{random_matrix, rng};
use wigkernel::fio::Symbol;
use wigkernel::io::{load_wkt, save_wkt, Tensor};
use wigkernel::kernel::OperatorKernel;
use wigkernel::signal::{gaussian, Grid};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wig-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn wig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wig")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_matrix(p: &Path, rows: &[&[f64]]) {
    let text: Vec<String> = rows.iter().map(|r| r.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",")).collect();
    fs::write(p, text.join("\n")).unwrap();
}

#[test]
fn gaussian_heatmap_has_one_central_blob() {
    let dir = scratch("heat");
    let g = Grid::new(1, 32).unwrap();
    save_wkt(dir.join("g.wkt"), &Tensor::from_signal(&gaussian(g))).unwrap();
    let out = wig(&["wigner", "--input", s(&dir.join("g.wkt")), "--out", s(&dir.join("w.wkt")), "--pgm", s(&dir.join("w.pgm")), "--linear"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let pgm = fs::read(dir.join("w.pgm")).unwrap();
    let header = String::from_utf8_lossy(&pgm[..20]).to_string();
    let mut parts = header.split_whitespace();
    assert_eq!(parts.next(), Some("P5"));
    let cols: usize = parts.next().unwrap().parse().unwrap();
    let rows: usize = parts.next().unwrap().parse().unwrap();
    let body = &pgm[pgm.len() - 2 * rows * cols..];
    let px = |r: usize, c: usize| u16::from_be_bytes([body[2 * (r * cols + c)], body[2 * (r * cols + c) + 1]]);
    let (mut best, mut at) = (0, (0, 0));
    for r in 0..rows {
        for c in 0..cols {
            if px(r, c) > best {
                best = px(r, c);
                at = (r, c);
            }
        }
    }
    assert_eq!(best, u16::MAX);
    assert!(at.0.abs_diff(rows / 2) <= 1 && at.1.abs_diff(cols / 2) <= 1, "peak at {at:?} of {rows}x{cols}");
    // a single blob: linear intensity falls off monotonically along the centre row
    for c in cols / 2..cols - 1 {
        assert!(px(rows / 2, c + 1) <= px(rows / 2, c));
    }
}

#[test]
fn stft_and_wigner_metadata_differ() {
    let dir = scratch("meta");
    save_wkt(dir.join("g.wkt"), &Tensor::from_signal(&gaussian(Grid::new(1, 32).unwrap()))).unwrap();
    let w = wig(&["wigner", "--input", s(&dir.join("g.wkt")), "--out", s(&dir.join("w.wkt"))]);
    let t = wig(&["wigner", "--transform", "stft", "--input", s(&dir.join("g.wkt")), "--out", s(&dir.join("s.wkt"))]);
    assert_eq!((code(&w), code(&t)), (0, 0));
    let fw = load_wkt(dir.join("w.wkt")).unwrap().to_field().unwrap();
    let fs_ = load_wkt(dir.join("s.wkt")).unwrap().to_field().unwrap();
    assert_ne!(fw.x_axes[0].step, fs_.x_axes[0].step);
    assert_ne!(String::from_utf8_lossy(&w.stdout), String::from_utf8_lossy(&t.stdout));
}

#[test]
fn bad_magic_is_a_format_error() {
    let dir = scratch("magic");
    fs::write(dir.join("bad.wkt"), b"WGK9\x01\x00\x00\x00").unwrap();
    let out = wig(&["wigner", "--input", s(&dir.join("bad.wkt")), "--out", s(&dir.join("x.wkt"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("format version"));
}

#[test]
fn kernel_membership_exit_codes() {
    let dir = scratch("memb");
    let g = Grid::new(1, 32).unwrap();
    save_wkt(dir.join("id.wkt"), &Tensor::from_operator(&OperatorKernel::identity(g))).unwrap();
    let dense = OperatorKernel::new(g, random_matrix(32, &mut rng(7))).unwrap();
    save_wkt(dir.join("dense.wkt"), &Tensor::from_operator(&dense)).unwrap();
    write_matrix(&dir.join("I.csv"), &[&[1.0, 0.0], &[0.0, 1.0]]);

    let ok = wig(&["kernel", "--op", s(&dir.join("id.wkt")), "--membership", s(&dir.join("I.csv")), "--adjoint", "--invert"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let bad = wig(&["kernel", "--op", s(&dir.join("dense.wkt")), "--membership", s(&dir.join("I.csv"))]);
    assert_eq!(code(&bad), 1);
    let line: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&bad.stdout).lines().last().unwrap()).unwrap();
    assert_eq!(line["pass"], false);
}

#[test]
fn compose_across_lattices_is_rejected() {
    let dir = scratch("lattice");
    save_wkt(dir.join("a.wkt"), &Tensor::from_operator(&OperatorKernel::identity(Grid::new(1, 16).unwrap()))).unwrap();
    save_wkt(dir.join("b.wkt"), &Tensor::from_operator(&OperatorKernel::identity(Grid::new(1, 24).unwrap()))).unwrap();
    let out = wig(&["kernel", "--op", s(&dir.join("a.wkt")), "--compose", s(&dir.join("b.wkt"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("lattice mismatch"));
}

#[test]
fn fio_emits_the_membership_report() {
    let dir = scratch("fio");
    let g = Grid::new(1, 32).unwrap();
    let sigma = Symbol::bump(g, 0.5, 1.5, 1.0).unwrap();
    save_wkt(dir.join("s.wkt"), &Tensor::from_field(&sigma.field)).unwrap();
    write_matrix(&dir.join("phase.csv"), &[&[1.0, 1.0, 0.0]]);
    write_matrix(&dir.join("S.csv"), &[&[1.0, 0.0], &[1.0, 1.0]]);
    let out = wig(&[
        "fio",
        "--symbol",
        s(&dir.join("s.wkt")),
        "--phase",
        s(&dir.join("phase.csv")),
        "--check-membership",
        "--S",
        s(&dir.join("S.csv")),
    ]);
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let line: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    for key in ["decay_profile", "symbol_norm", "exponent", "pass"] {
        assert!(line.get(key).is_some(), "missing {key} in {text}");
    }
    assert_eq!(code(&out) == 0, line["pass"] == true);
}

#[test]
fn propagate_writes_a_unit_norm_state() {
    let dir = scratch("prop");
    fs::write(dir.join("ham.cfg"), "# oscillator\nn = 32\nA = 0\nB = 1\nC = -1\n").unwrap();
    let out = wig(&["--threads", "1", "propagate", "--ham", s(&dir.join("ham.cfg")), "--t", "1.5", "--steps", "64", "--out", s(&dir.join("u.wkt"))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let u = load_wkt(dir.join("u.wkt")).unwrap().to_signal().unwrap();
    let g = gaussian(u.grid);
    assert!((u.norm() - g.norm()).abs() < 1e-10);

    fs::write(dir.join("bad.cfg"), "n = 32\nD = 1\n").unwrap();
    let out = wig(&["propagate", "--ham", s(&dir.join("bad.cfg")), "--out", s(&dir.join("v.wkt"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_suite_and_usage_errors() {
    assert_eq!(code(&wig(&["checks", "nope"])), 2);
    assert_eq!(code(&wig(&["kernel"])), 2);
    assert_eq!(code(&wig(&["frobnicate"])), 2);
}

#[test]
fn help_documents_numeric_defaults() {
    let out = wig(&["propagate", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[default: 256]") && text.contains("[default: 1]"), "{text}");
    let out = wig(&["--help"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("WIG_THREADS"));
}

#[test]
fn threads_env_is_honoured() {
    let out = Command::new(env!("CARGO_BIN_EXE_wig")).arg("info").env("WIG_THREADS", "3").output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("threads: 3"));
}

#[test]
fn moyal_suite_passes_from_the_command_line() {
    let dir = scratch("checks");
    let out = wig(&["checks", "moyal", "--out", s(&dir.join("summary.csv"))]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let csv = fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert!(csv.starts_with("suite,check,value,threshold,status,detail"));
    assert!(!csv.contains("FAIL"));
}
