use std::path::Path;
use std::process::{Command, Output};

use tarst_core::textio::{read_tensor, write_tensor};
use tarst_core::{DenseTensor, Shape};

fn tarst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tarst")).args(args).output().unwrap()
}

fn tarst_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tarst"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rank_one() -> DenseTensor {
    let (a, b, c) = ([1.0, 2.0, -1.0, 0.5], [2.0, -1.0, 1.0], [1.0, 3.0, 0.5, -2.0, 1.0]);
    DenseTensor::from_fn(Shape::new(vec![4, 3, 5]).unwrap(), |i| a[i[0]] * b[i[1]] * c[i[2]])
}

#[test]
fn denoise_recovers_rank_one_tensor() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("y.txt");
    let output = dir.path().join("x.txt");
    let x = rank_one();
    write_tensor(&input, &x).unwrap();
    let o = tarst(&[
        "denoise",
        "-i",
        input.to_str().unwrap(),
        "-o",
        output.to_str().unwrap(),
        "--sigma",
        "1e-6",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 3);
    for (k, l) in lines.iter().enumerate() {
        assert!(l.starts_with(&format!("mode {}: tau=", k + 1)), "{l}");
        assert!(l.ends_with("rank=1"), "{l}");
    }
    let est = read_tensor(&output).unwrap();
    let err = tarst_core::metrics::rrse(&est, &x).unwrap();
    assert!(err < 1e-10, "{err}");
}

#[test]
fn denoise_pure_noise_warns_and_writes_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("y.txt");
    let output = dir.path().join("x.txt");
    let noise = DenseTensor::from_fn(Shape::new(vec![6, 6, 6]).unwrap(), |i| {
        (((i[0] * 31 + i[1] * 17 + i[2] * 7) % 13) as f64 - 6.0) * 1e-3
    });
    write_tensor(&input, &noise).unwrap();
    let o = tarst(&["denoise", "-i", input.to_str().unwrap(), "-o", output.to_str().unwrap(), "--sigma", "1"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"));
    assert!(read_tensor(&output).unwrap().as_slice().iter().all(|&v| v == 0.0));
}

#[test]
fn malformed_input_exits_with_parse_code() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.txt");
    std::fs::write(&input, "3\n2 2 2\n1 2\n3 oops\n5 6\n7 8\n").unwrap();
    let out = dir.path().join("x.txt");
    let o = tarst(&["denoise", "-i", input.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn missing_input_exits_with_io_code() {
    let o = tarst(&["denoise", "-i", "/nonexistent/y.txt", "-o", "/tmp/never.txt"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn sigma_and_median_are_exclusive() {
    let o = tarst(&["denoise", "-i", "a", "-o", "b", "--sigma", "1", "--median"]);
    assert_eq!(o.status.code(), Some(1));
    let o = tarst(&["denoise", "-i", "a", "-o", "b", "--sigma", "-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(tarst(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn thresholds_prints_coefficients() {
    let o = tarst(&["thresholds", "--beta", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("lambda_star=2.309401"), "{text}");
    let omega: f64 = text.split("omega=").nth(1).unwrap().trim().parse().unwrap();
    assert!((omega - 2.858).abs() < 1e-3);
    assert_eq!(tarst(&["thresholds", "--beta", "1.5"]).status.code(), Some(1));
}

#[test]
fn bench_p1_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["bench-p1", "--sigma-points", "4", "--reps", "2", "--no-timing"];
    let a = tarst_in(dir.path(), &[&args[..], &["-o", "a.csv"]].concat());
    let b = tarst_in(dir.path(), &[&args[..], &["-o", "b.csv"]].concat());
    assert!(a.status.success(), "{}", stderr(&a));
    assert!(b.status.success());
    let ta = std::fs::read(dir.path().join("a.csv")).unwrap();
    let tb = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(ta, tb);
    let rows = String::from_utf8(ta).unwrap().lines().count();
    assert_eq!(rows, 1 + 4 * 2 * 4);
}

#[test]
fn bench_p1_default_grid_row_count_and_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let o = tarst_in(dir.path(), &["bench-p1", "--matrix", "m.txt"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("bench_p1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 20 * 5 * 4);
    assert!(csv.starts_with("method,N,dims,sigma,outlier_ratio,outlier_scale,seed,rrse,ranks,wall_time_ms,svd_calls"));
    assert!(!csv.contains("NaN"));
    assert!(dir.path().join("m.txt").exists());
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("sigma=")).count(), 20);
}

#[test]
fn bench_p2_runs_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = tarst_in(
        dir.path(),
        &[
            "bench-p2",
            "--sigma-points",
            "2",
            "--ratios",
            "0.05,0.5",
            "--scales",
            "10",
            "--reps",
            "2",
            "--methods",
            "baseline,tarst",
            "--outlier-mode",
            "scaled-mean",
            "-o",
            "p2.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("p2.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 1 * 2 * 2);
}

#[test]
fn bench_rejects_bad_configuration() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tarst_in(dir.path(), &["bench-p1", "--ranks", "11,3,3"]).status.code(), Some(1));
    assert_eq!(tarst_in(dir.path(), &["bench-p1", "--methods", "pca"]).status.code(), Some(1));
    assert_eq!(tarst_in(dir.path(), &["bench-p1", "--sigma-min", "0"]).status.code(), Some(1));
    let o = Command::new(env!("CARGO_BIN_EXE_tarst"))
        .current_dir(dir.path())
        .env("TARST_THREADS", "many")
        .args(["bench-p1", "--sigma-points", "1", "--reps", "1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_p1_large_tensor_finishes() {
    let dir = tempfile::tempdir().unwrap();
    let start = std::time::Instant::now();
    let o = tarst_in(dir.path(), &["bench-p1", "--shape", "50,50,50", "--no-timing"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(start.elapsed().as_secs() < 300);
    let csv = std::fs::read_to_string(dir.path().join("bench_p1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 20 * 5 * 4);
    assert!(csv.lines().skip(1).all(|l| !l.starts_with("hosvd,") || l.contains(",6;6;6,")));
}
