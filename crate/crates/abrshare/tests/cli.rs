use std::path::Path;
use std::process::{Command, Output};

use abrshare::config::LadderConfig;
use abrshare::exec::Threaded;
use abrshare::ladder::{Executor, Scheme};

fn abrshare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abrshare")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_encode_share_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.yuv");
    let small = dir.path().join("small.yuv");
    let ana = dir.path().join("small.ana");
    let stats = dir.path().join("stats.csv");
    let recon = dir.path().join("recon.yuv");

    let out = stdout(&abrshare(&["gen", "--kind", "pan:2,0", "--width", "64", "--height", "64", "--frames", "3", "--out", s(&big)]));
    assert!(out.contains("3 64x64"), "{out}");
    assert_eq!(std::fs::metadata(&big).unwrap().len(), 3 * 6144);
    stdout(&abrshare(&["gen", "--kind", "pan:1,0", "--width", "32", "--height", "32", "--frames", "3", "--out", s(&small)]));

    let out = stdout(&abrshare(&[
        "encode", "--input", s(&small), "--width", "32", "--height", "32", "--qp", "30", "--save-analysis", s(&ana),
    ]));
    assert!(out.starts_with("3 frames"), "{out}");

    // A 32x32 archive drives a 64x64 encode through scaling.
    let out = stdout(&abrshare(&[
        "encode", "--input", s(&big), "--width", "64", "--height", "64", "--kbps", "80", "--load-analysis", s(&ana),
        "--reuse-level", "6", "--stats-out", s(&stats), "--recon-out", s(&recon),
    ]));
    assert!(out.contains("mode evaluations"), "{out}");
    let csv = std::fs::read_to_string(&stats).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("frame,slice,qp,bits,psnr_y,mode_evaluations,reencoded"));
    assert_eq!(std::fs::metadata(&recon).unwrap().len(), 3 * 6144);

    let out = stdout(&abrshare(&["dump-analysis", s(&ana)]));
    assert!(out.contains("32x32"), "{out}");
}

#[test]
fn bad_arguments_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.yuv");
    let o = abrshare(&["encode", "--input", s(&missing), "--width", "64", "--height", "64", "--qp", "30"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let o = abrshare(&["encode", "--input", s(&missing), "--width", "64", "--height", "64", "--qp", "30", "--kbps", "9"]);
    assert!(!o.status.success());
    let o = abrshare(&["encode", "--input", s(&missing), "--width", "64", "--height", "64", "--qp", "30", "--depth", "9"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--depth"));
    let o = abrshare(&["bench", "--filter", "nothing*"]);
    assert!(!o.status.success());
}

#[test]
fn bdrate_reads_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "kbps,psnr\n100,30\n200,33\n400,36\n800,39\n").unwrap();
    std::fs::write(&b, "110,30\n220,33\n440,36\n880,39\n").unwrap();
    let out = stdout(&abrshare(&["bdrate", "--anchor", s(&a), "--test", s(&b)]));
    assert!(out.contains("BD-rate +10.0000%"), "{out}");
}

#[test]
fn bench_json_lists_filtered_kernels() {
    let o = abrshare(&["bench", "--filter", "sad_8x8", "--runs", "50", "--check-runs", "10", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["name"], "sad_8x8");
    assert_eq!(v[0]["mismatches"], 0);
}

#[test]
fn ladder_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ladder.toml");
    let report = dir.path().join("report.csv");
    std::fs::write(
        &cfg,
        r#"
scheme = "proposed-intra"
frames = 2
[source]
kind = "mixed"
[[tiers]]
width = 32
height = 32
qps = [30, 36]
[[tiers]]
width = 64
height = 64
qps = [30, 36]
"#,
    )
    .unwrap();
    let out = stdout(&abrshare(&["ladder", "--config", s(&cfg), "--report", s(&report), "--threads", "2"]));
    assert!(!out.is_empty());
    let csv = std::fs::read_to_string(&report).unwrap();
    assert_eq!(csv.lines().count(), 5, "{csv}");
}

#[test]
fn config_parsing() {
    let c = LadderConfig::parse(
        r#"
scheme = "sota-multi"
[source]
kind = "static"
[[tiers]]
width = 64
height = 64
kbps = [100.0, 200.0]
"#,
    )
    .unwrap();
    assert_eq!(c.reuse_level, 10);
    assert_eq!(c.frames, 32);
    let spec = c.to_spec().unwrap();
    assert_eq!(spec.rungs.len(), 2);
    assert!(matches!(spec.scheme, Scheme::SotaMulti));

    assert!(LadderConfig::parse("scheme = \"proposed\"\nbogus = 1\n[source]\n[[tiers]]\nwidth=8\nheight=8\n").is_err());
    let bad_scheme = LadderConfig::parse("scheme = \"nope\"\n[source]\nkind=\"static\"\n[[tiers]]\nwidth=8\nheight=8\nqps=[30]\n").unwrap();
    assert!(bad_scheme.to_spec().is_err());
}

#[test]
fn threaded_executor_keeps_job_order() {
    for workers in [1, 3, 8] {
        let out = Threaded::new(workers).run(10, |i| i * i);
        assert_eq!(out.iter().map(|(v, _)| *v).collect::<Vec<_>>(), (0..10).map(|i| i * i).collect::<Vec<_>>());
    }
    assert_eq!(Threaded::new(0).workers, 1);
}
