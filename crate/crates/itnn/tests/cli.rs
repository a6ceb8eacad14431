use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use itnn::manifest::Manifest;
use itnn::pnm::load_pgm;

fn itnn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itnn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn itnn")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = itnn(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str], dir: &Path) -> i32 {
    itnn(args, dir).status.code().unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    let mut words = text.split_whitespace();
    while let Some(w) = words.next() {
        if w == key {
            return words.next().unwrap();
        }
    }
    panic!("{key} not in {text:?}")
}

const TINY: &str = r#"{
  "hidden": 8,
  "batch_size": 8,
  "learning_rate": 1e-5,
  "stages": [{"steps": 4, "lr_multiplier": 1.0}],
  "q": 6
}"#;

#[test]
fn encode_decode_round_trip_and_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["synth", "--out", "imgs", "--count", "1", "--width", "72", "--height", "40", "--seed", "3"], d);
    let enc = ok(
        &["encode", "--in", "imgs/img_00000.pgm", "--qp", "32", "--nn", "off", "--out", "f.bin", "--recon", "r.pgm", "--dump-records", "rec.csv"],
        d,
    );
    let dec = ok(&["decode", "--in", "f.bin", "--out", "back.pgm"], d);
    assert_eq!(field(&enc, "recon_sha256"), field(&dec, "recon_sha256"));
    let back = load_pgm(&d.join("back.pgm")).unwrap();
    assert_eq!(back, load_pgm(&d.join("r.pgm")).unwrap());
    assert_eq!((back.width(), back.height()), (72, 40));
    let header = fs::read_to_string(d.join("rec.csv")).unwrap();
    assert!(header.starts_with("x,y,h,w,n0,n1,s,d_nn,d_c,isSplitTBs\n"));

    let bytes = fs::read(d.join("f.bin")).unwrap();
    fs::write(d.join("cut.bin"), &bytes[..bytes.len() - 1]).unwrap();
    assert_eq!(code(&["decode", "--in", "cut.bin", "--out", "x.pgm"], d), 5);
    assert_eq!(code(&["decode", "--in", "missing.bin", "--out", "x.pgm"], d), 3);
    fs::write(d.join("bad.pgm"), b"P5\n4 4\n65535\n").unwrap();
    assert_eq!(code(&["encode", "--in", "bad.pgm", "--qp", "32", "--out", "x.bin"], d), 4);
    assert_eq!(code(&["encode", "--in", "imgs/img_00000.pgm", "--qp", "60", "--out", "x.bin"], d), 5);
    assert_eq!(code(&["encode", "--in", "imgs/img_00000.pgm", "--qp", "32", "--nn", "on", "--out", "x.bin"], d), 6);
    assert_eq!(code(&["encode", "--bogus"], d), 2);
    assert_eq!(code(&["frobnicate"], d), 2);
}

#[test]
fn ingest_converts_rgb() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::create_dir(d.join("rgb")).unwrap();
    let mut ppm = b"P6\n2 1\n255\n".to_vec();
    ppm.extend_from_slice(&[255, 0, 0, 255, 255, 255]);
    fs::write(d.join("rgb/a.ppm"), ppm).unwrap();
    ok(&["ingest", "--in", "rgb", "--out", "luma"], d);
    assert_eq!(load_pgm(&d.join("luma/a.pgm")).unwrap().samples(), &[76, 255]);
}

#[test]
fn eval_on_identical_curves_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(d.join("a.csv"), "bpp,psnr\n0.1,30.1\n0.22,33.4\n0.45,36.0\n0.9,39.2\n1.7,42.5\n").unwrap();
    let out = ok(&["eval", "--anchor", "a.csv", "--test", "a.csv", "--svg", "rd.svg"], d);
    assert!(out.contains(": 0.00%"), "{out}");
    assert!(fs::read_to_string(d.join("rd.svg")).unwrap().contains("<polyline"));
    fs::write(d.join("short.csv"), "bpp,psnr\n0.1,30\n0.2,31\n").unwrap();
    assert_eq!(code(&["eval", "--anchor", "a.csv", "--test", "short.csv"], d), 8);
}

#[test]
fn train_iter_then_nn_codec_stats_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&["synth", "--out", "corpus", "--count", "3", "--width", "64", "--height", "64", "--seed", "5"], d);
    fs::write(d.join("tiny.json"), TINY).unwrap();

    ok(&["train-iter", "--corpus", "corpus", "--config", "tiny.json", "--iters", "1", "--seed", "4", "--out", "run1"], d);
    let m = Manifest::load(&d.join("run1/manifest.json")).unwrap();
    assert_eq!(m.iterations.len(), 1);
    assert!(m.iterations.iter().all(|it| !it.cleansing && it.stage == "get_partition"));
    assert_eq!((m.config.q, m.config.seed, m.config.iterations), (6, 4, 1));
    assert_eq!(m.models.len(), 4);

    ok(&["train-iter", "--corpus", "corpus", "--config", "tiny.json", "--iters", "2", "--seed", "4", "--out", "run2"], d);
    let m2 = Manifest::load(&d.join("run2/manifest.json")).unwrap();
    let stages: Vec<&str> = m2.iterations.iter().map(|i| i.stage.as_str()).collect();
    assert_eq!(stages, ["get_partition", "get_partition_nn"]);
    // Same seed, same first iteration.
    assert_eq!(m.iterations[0], m2.iterations[0]);
    assert_eq!(code(&["train-iter", "--corpus", "corpus", "--q", "0", "--out", "bad"], d), 6);
    assert_eq!(code(&["train-iter", "--corpus", "nowhere", "--out", "bad"], d), 3);

    let img = "corpus/img_00001.pgm";
    let enc = ok(
        &["encode", "--in", img, "--qp", "27", "--nn", "on", "--models", "run2/models", "--out", "nn.bin", "--dump-records", "nn.csv"],
        d,
    );
    assert_eq!(code(&["decode", "--in", "nn.bin", "--out", "x.pgm"], d), 6);
    let dec = ok(&["decode", "--in", "nn.bin", "--models", "run2/models", "--out", "x.pgm"], d);
    assert_eq!(field(&enc, "recon_sha256"), field(&dec, "recon_sha256"));

    ok(&["stats", "--a", "run2/iter_0/records.csv", "--b", "run2/iter_1/records.csv", "--out", "delta.csv"], d);
    let mut r = csv::Reader::from_path(d.join("delta.csv")).unwrap();
    let mut sums = std::collections::BTreeMap::<(String, String), f64>::new();
    for row in r.records() {
        let row = row.unwrap();
        *sums.entry((row[0].to_string(), row[1].to_string())).or_default() += row[5].parse::<f64>().unwrap();
    }
    assert!(!sums.is_empty());

    ok(&["report", "--corpus", "corpus", "--models-i", "run1/models", "--models-j", "run2/models", "--samples", "4", "--seed", "2", "--out", "rep.csv", "--dump", "panels"], d);
    let rows = csv::Reader::from_path(d.join("rep.csv")).unwrap().records().count();
    assert_eq!(rows, 4);
    assert_eq!(load_pgm(&d.join("panels/0000_context.pgm")).unwrap().width(), 8 + 16);
    assert_eq!(code(&["report", "--corpus", "corpus", "--models-i", "run1/models", "--models-j", "run2/models", "--size", "64x64", "--out", "r.csv"], d), 8);
}
