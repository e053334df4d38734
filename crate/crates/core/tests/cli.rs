use std::path::{Path, PathBuf};
use std::process::Command;

use certhom::cli::{parse_system, RunReport, StartFile, SystemFile};
use certhom::homotopy::{canonical_start, LinearHomotopy};
use certhom::oracle::univariate_roots;
use certhom::sampling;
use certhom::suites::bijective_match;
use certhom::tracker::refined_endpoint;
use proptest::prelude::*;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn certhom(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_certhom"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn sqrt2_z0z1() -> String {
    r#"{"n":1,"degrees":[2],"equations":[[{"exponents":[1,1],"coeff_re":1.4142135623730951,"coeff_im":0.0}]]}"#.into()
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn golden_report_roots_are_verified() {
    let report: RunReport =
        serde_json::from_str(&std::fs::read_to_string(data("cubic_report.golden.json")).unwrap())
            .unwrap();
    let target =
        parse_system(&std::fs::read_to_string(data("cubic_target.json")).unwrap()).unwrap();
    let start = certhom::homotopy::unit_roots_start(&[3]).unwrap();
    let h = LinearHomotopy::new(start.system.normalized(), target.normalized()).unwrap();
    let endpoints: Vec<_> = report
        .roots
        .iter()
        .map(|r| refined_endpoint(&h, r.result.as_ref().unwrap()).unwrap())
        .collect();
    assert!(report.roots.iter().all(|r| r.certified));
    assert!(bijective_match(
        &endpoints,
        &univariate_roots(&target).unwrap(),
        1e-8
    ));
}

#[test]
fn solve_matches_golden_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let (code, stdout) = certhom(&[
        "solve",
        "--target",
        data("cubic_target.json").to_str().unwrap(),
        "--start",
        "unit-roots",
        "--epsilon",
        "0.05",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stdout}");
    assert_eq!(stdout.lines().count(), 3);
    let text = std::fs::read_to_string(&out).unwrap();
    let got: Value = serde_json::from_str(&text).unwrap();
    let golden: Value =
        serde_json::from_str(&std::fs::read_to_string(data("cubic_report.golden.json")).unwrap())
            .unwrap();
    assert_eq!(without_timing(got), without_timing(golden));
    let report: RunReport = serde_json::from_str(&text).unwrap();
    let again: RunReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(report, again);
}

#[test]
fn constant_homotopy_takes_one_step_per_path() {
    let dir = tempfile::tempdir().unwrap();
    let pair = canonical_start(&[2, 3]).unwrap();
    let target = write(
        dir.path(),
        "target.json",
        &SystemFile::from_system(&pair.system).to_json().unwrap(),
    );
    let out = dir.path().join("r.json");
    let (code, _) = certhom(&[
        "solve",
        "--target",
        &target,
        "--start",
        "canonical",
        "--epsilon",
        "0.05",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: RunReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.roots.len(), 1);
    assert_eq!(report.roots[0].result.as_ref().unwrap().k, 1);
    assert_eq!(report.digests.target_sha256.len(), 64);
}

#[test]
fn start_file_mode_and_uncertified_start() {
    let dir = tempfile::tempdir().unwrap();
    let target = write(
        dir.path(),
        "t.json",
        &std::fs::read_to_string(data("cubic_target.json")).unwrap(),
    );
    let pair = certhom::homotopy::unit_roots_start(&[3]).unwrap();
    let mut file = StartFile {
        system: SystemFile::from_system(&pair.system),
        zeros: pair.zeros.iter().map(|z| z.coords().to_vec()).collect(),
    };
    let good = write(
        dir.path(),
        "start.json",
        &serde_json::to_string(&file).unwrap(),
    );
    let out = dir.path().join("r.json");
    let out = out.to_str().unwrap();
    let (code, _) = certhom(&[
        "solve",
        "--target",
        &target,
        "--start",
        &good,
        "--epsilon",
        "0.05",
        "--out",
        out,
    ]);
    assert_eq!(code, 0);
    let report: RunReport = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(report.digests.start_sha256.is_some());

    file.zeros[1][1] *= 1.3;
    let bad = write(
        dir.path(),
        "bad.json",
        &serde_json::to_string(&file).unwrap(),
    );
    let (code, _) = certhom(&[
        "solve",
        "--target",
        &target,
        "--start",
        &bad,
        "--epsilon",
        "0.05",
        "--out",
        out,
    ]);
    assert_eq!(code, 3);
    let report: RunReport = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(report.roots[1].error.is_some());
    assert!(report.roots[0].certified && report.roots[2].certified);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let target = data("cubic_target.json");
    let target = target.to_str().unwrap();
    let out = dir.path().join("r.json");
    let out = out.to_str().unwrap();
    let eps = certhom(&[
        "solve",
        "--target",
        target,
        "--start",
        "unit-roots",
        "--epsilon",
        "0.2",
        "--out",
        out,
    ]);
    assert_eq!(eps.0, 2);
    let garbage = write(dir.path(), "g.json", "{\"n\": 1,");
    assert_eq!(
        certhom(&[
            "solve",
            "--target",
            &garbage,
            "--start",
            "unit-roots",
            "--out",
            out
        ])
        .0,
        2
    );
    let mismatch = write(
        dir.path(),
        "m.json",
        r#"{"n":2,"degrees":[2],"equations":[[{"exponents":[1,1],"coeff_re":1.0,"coeff_im":0.0}]]}"#,
    );
    assert_eq!(
        certhom(&[
            "solve",
            "--target",
            &mismatch,
            "--start",
            "unit-roots",
            "--out",
            out
        ])
        .0,
        2
    );
    assert_eq!(
        certhom(&[
            "check",
            "--suite",
            "nonsense",
            "--samples",
            "3",
            "--seed",
            "1"
        ])
        .0,
        2
    );
    assert_eq!(certhom(&["solve"]).0, 2);
    let sys = write(dir.path(), "s.json", &sqrt2_z0z1());
    assert_eq!(
        certhom(&["certify", "--system", &sys, "--point", "1,2,3"]).0,
        2
    );
}

#[test]
fn certify_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "s.json", &sqrt2_z0z1());
    let (code, out) = certhom(&["certify", "--system", &sys, "--point", "1,0"]);
    assert_eq!(code, 0);
    assert!(out.contains("certified = true") && out.contains("radius = 0\n"));

    let (code, out) = certhom(&["certify", "--system", &sys, "--point", "1,0.1"]);
    assert_eq!(code, 3);
    let field = |name: &str| -> f64 {
        out.lines()
            .find_map(|l| l.strip_prefix(&format!("{name} = ")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((field("beta0") - 0.1 / 0.99).abs() <= 1e-12);
    assert!((field("alpha_bound") - 2f64.sqrt() * field("mu") * field("beta0")).abs() <= 1e-12);

    let square = write(
        dir.path(),
        "q.json",
        r#"{"n":1,"degrees":[2],"equations":[[{"exponents":[2,0],"coeff_re":1.0,"coeff_im":0.0}]]}"#,
    );
    let (code, out) = certhom(&["certify", "--system", &square, "--point", "0,1"]);
    assert_ne!(code, 0);
    assert!(out.contains("mu = inf") && out.contains("certified = false"));
}

#[test]
fn check_reports_violations() {
    let (code, out) = certhom(&[
        "check",
        "--suite",
        "lemma37",
        "--samples",
        "25",
        "--seed",
        "4",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("violations = 0"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn system_files_round_trip_bit_exactly(seed in any::<u64>(), degrees in prop::collection::vec(1u32..=4, 1..=3)) {
        let mut rng = sampling::rng_for(seed, 0);
        let f = sampling::bw_gaussian_system(&mut rng, &degrees).scaled(certhom::linalg::C64::new(1e-3, 7.0));
        let text = SystemFile::from_system(&f).to_json().unwrap();
        let g = parse_system(&text).unwrap();
        prop_assert_eq!(&f, &g);
        prop_assert_eq!(SystemFile::from_system(&g).to_json().unwrap(), text);
    }
}
