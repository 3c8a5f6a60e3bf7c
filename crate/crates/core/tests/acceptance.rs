//! Acceptance criteria. Each test writes one `PASS criterion k` or
//! `FAIL criterion k` line to stderr (outside the harness capture) and then
//! asserts the criterion at its stated tolerance.

use std::io::Write;
use std::time::Instant;

use subgauss::bodies::BodySpec;
use subgauss::cli;
use subgauss::construction::{make_grid, prepare, FindOptions};
use subgauss::moments::{
    EvaluatorKind, LpEvaluator, ProjectedSample, QuadratureEvaluator, SampleEvaluator,
};
use subgauss::sampling::{default_method, sample_gaussian, sample_uniform};
use subgauss::verify::{
    check_counterexample, check_injected_axis, check_moment_comparison, integer_pairs, run_suite,
    standard_log_concave_laws, CheckResult, Suite, SuiteConfig,
};

fn report(k: usize, ok: bool, detail: &str) {
    let line = format!(
        "{} criterion {k}: {detail}\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn summarize(results: &[CheckResult]) -> (bool, String) {
    let bad: Vec<String> = results
        .iter()
        .filter(|r| !r.as_expected())
        .map(|r| format!("{} {}", r.check_id, r.scope))
        .collect();
    let ok = bad.is_empty() && !results.is_empty();
    let detail = if ok {
        format!("{} checks as expected", results.len())
    } else {
        format!(
            "{} of {} checks off: {}",
            bad.len(),
            results.len(),
            bad.join("; ")
        )
    };
    (ok, detail)
}

fn suite(s: Suite, samples: usize) -> Vec<CheckResult> {
    let cfg = SuiteConfig {
        samples,
        ..SuiteConfig::default()
    };
    run_suite(s, &cfg).expect("suite runs")
}

#[test]
fn criterion_1_pipeline_on_symmetric_bodies() {
    let mut ok = true;
    let mut lines = Vec::new();
    for name in ["ball", "cube"] {
        let start = Instant::now();
        let mut sups = Vec::new();
        let mut infs = Vec::new();
        for n in [10, 20, 40] {
            let body = match name {
                "ball" => BodySpec::ball(n).unwrap(),
                _ => BodySpec::cube(n).unwrap(),
            };
            let prep = prepare(&body, 100_000, 0, EvaluatorKind::Auto).unwrap();
            let grid = make_grid(n, 0.25, 4.0, 0.05).unwrap();
            let set = prep.find(&grid, &FindOptions::default()).unwrap();
            let cert = prep.certify(&set, true);
            let need = (9 * n).div_ceil(10);
            let (off, diag) = set.orthonormality_error();
            let sup = cert
                .directions
                .iter()
                .map(|d| d.sup_ratio)
                .fold(0.0, f64::max);
            let inf = cert
                .directions
                .iter()
                .map(|d| d.inf_ratio)
                .fold(f64::INFINITY, f64::min);
            let good =
                set.thetas.len() >= need && off < 1e-10 && diag < 1e-10 && sup <= 3.0 && inf >= 0.2;
            ok &= good;
            lines.push(format!(
                "{name} n={n}: {} dirs (need {need}), orth {off:.1e}/{diag:.1e}, sup {sup:.3}, inf {inf:.3}",
                set.thetas.len()
            ));
            sups.push(sup);
            infs.push(inf);
        }
        let spread = |v: &[f64]| {
            v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        let secs = start.elapsed().as_secs_f64();
        let stable = spread(&sups) <= 1.5 && spread(&infs) <= 1.5 && secs < 300.0;
        ok &= stable;
        lines.push(format!(
            "{name}: sup spread {:.3}, inf spread {:.3}, {secs:.1}s",
            spread(&sups),
            spread(&infs)
        ));
    }
    report(1, ok, &lines.join("; "));
    assert!(ok, "{}", lines.join("\n"));
}

#[test]
fn criterion_2_closed_form_moment_oracles() {
    let n = 5;
    let cube = BodySpec::cube(n).unwrap();
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let exact = |p: f64| 0.5 * (p + 1.0).powf(-1.0 / p);
    let ps = [1.0, 2.0, 3.0, 4.0, 6.0, 8.0];
    let quad = QuadratureEvaluator::new(&cube, None);
    let q = quad.norms(&e1, &ps).unwrap();
    let quad_err = q
        .iter()
        .map(|e| (e.value - exact(e.p)).abs())
        .fold(0.0, f64::max);

    let batch = sample_uniform(&cube, 1_000_000, 2, default_method(&cube)).unwrap();
    let mc = SampleEvaluator::with_body(&cube, &batch, None);
    let m = mc.norms(&e1, &ps).unwrap();
    let mc_z = m
        .iter()
        .map(|e| (e.value - exact(e.p)).abs() / e.std_err)
        .fold(0.0, f64::max);

    let g = sample_gaussian(1, 1_000_000, 3).unwrap();
    let l4 = ProjectedSample::new(&g.points, 4).lp(4.0).unwrap();
    let gauss_z = (l4.value - 3f64.powf(0.25)).abs() / l4.std_err;

    let ok = quad_err <= 1e-8 && mc_z <= 3.0 && gauss_z <= 3.0;
    let detail = format!(
        "cube quadrature max error {quad_err:.1e}, cube MC max |z| {mc_z:.2}, gaussian L4 {:.5} |z| {gauss_z:.2}",
        l4.value
    );
    report(2, ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_3_negative_moment_identity() {
    let results: Vec<CheckResult> = suite(Suite::Moments, 200_000)
        .into_iter()
        .filter(|r| {
            matches!(
                r.check_id.as_str(),
                "negative_moment_identity" | "prefactor_range"
            )
        })
        .collect();
    let identities = results
        .iter()
        .filter(|r| r.check_id == "negative_moment_identity")
        .count();
    let (ok, detail) = summarize(&results);
    let ok = ok && identities == 10;
    report(3, ok, &format!("{identities} identity instances; {detail}"));
    assert!(ok, "{detail}");
}

#[test]
fn criterion_4_cone_counterexample() {
    let main = check_counterexample(&[50]).unwrap();
    let tv = check_counterexample(&[200]).unwrap();
    let injected = check_injected_axis(50).unwrap();
    let slope = main.observation("cone_axis_slope[n=50]").unwrap();
    let tv200 = tv.observation("cone_axis_tv[n=200]").unwrap();
    let mgf_ok = main
        .observations
        .iter()
        .filter(|o| o.name.starts_with("mgf"))
        .all(|o| o.within());
    let slope_ok = (0.8..=1.05).contains(&slope);
    let tv_ok = tv200 <= 0.02;
    let flagged = injected.as_expected();
    let ok = mgf_ok && slope_ok && tv_ok && flagged;
    let detail = format!(
        "MGF {}, slope at n=50 {slope:.4} (need [0.8, 1.05]), TV at n=200 {tv200:.4}, injected axis flagged {flagged}",
        if mgf_ok { "ok" } else { "off" }
    );
    report(4, ok, &detail);
    assert!(ok, "{detail}");
}

#[test]
fn criterion_5_endpoint_on_catalog() {
    let results = suite(Suite::Endpoint, 0);
    let bodies: std::collections::BTreeSet<String> = results
        .iter()
        .filter_map(|r| {
            r.scope
                .get("body")
                .and_then(|b| b.as_str())
                .map(String::from)
        })
        .collect();
    let (ok, detail) = summarize(&results);
    let ok = ok && results.len() >= 100;
    report(5, ok, &format!("bodies {bodies:?}; {detail}"));
    assert!(ok, "{detail}");
}

#[test]
fn criterion_6_moment_comparison() {
    let laws = standard_log_concave_laws(50).unwrap();
    let results = vec![check_moment_comparison(&laws, &integer_pairs(32)).unwrap()];
    let max = results
        .iter()
        .flat_map(|r| r.observations.iter())
        .filter(|o| o.hi.is_some())
        .map(|o| o.value)
        .fold(0.0, f64::max);
    let (ok, detail) = summarize(&results);
    report(6, ok, &format!("max ratio {max:.4} (bound 3); {detail}"));
    assert!(ok, "{detail}");
}

#[test]
fn criterion_7_gaussian_correlation() {
    let results = suite(Suite::Correlation, 1_000_000);
    let pairs = results
        .iter()
        .filter(|r| r.check_id == "gaussian_correlation")
        .count();
    let (ok, detail) = summarize(&results);
    let ok = ok && pairs == 20;
    report(
        7,
        ok,
        &format!("{pairs} random pairs plus product slabs at N=1e6; {detail}"),
    );
    assert!(ok, "{detail}");
}

#[test]
fn criterion_8_volume_radius_separation() {
    let results = suite(Suite::Volume, 0);
    let expected_failures = results.iter().filter(|r| r.expected_failure).count();
    let (ok, detail) = summarize(&results);
    let ok = ok && expected_failures == 1;
    report(
        8,
        ok,
        &format!("cube n=8, dim F 6/7/8 plus eps=C0; {detail}"),
    );
    assert!(ok, "{detail}");
}

fn artifacts(args: &[&str], threads: usize) -> Vec<(String, Vec<u8>)> {
    let dir = tempfile::tempdir().unwrap();
    let mut argv = vec!["subgauss".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.extend([
        "--threads".into(),
        threads.to_string(),
        "--out".into(),
        dir.path().display().to_string(),
    ]);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(argv, &mut out, &mut err);
    assert!(
        code == 0 || code == 1,
        "{args:?} exited {code}: {}",
        String::from_utf8_lossy(&err)
    );
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "meta.json")
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_9_determinism_across_threads() {
    let commands: [&[&str]; 7] = [
        &["--body", "cube", "--n", "12", "--samples", "20000", "find"],
        &["--body", "cone", "--n", "6", "--samples", "20000", "find"],
        &[
            "--body",
            "simplex",
            "--n",
            "5",
            "--samples",
            "5000",
            "sample",
        ],
        &[
            "--body",
            "cube",
            "--n",
            "5",
            "--samples",
            "5000",
            "--format",
            "bin",
            "sample",
        ],
        &[
            "--body",
            r#"{"kind": "lp_ball", "n": 6, "params": {"p": 1}}"#,
            "--samples",
            "20000",
            "isotropize",
        ],
        &[
            "--body",
            "cube",
            "--n",
            "8",
            "--samples",
            "20000",
            "--evaluator",
            "mc",
            "profile",
            "--random",
            "3",
        ],
        &["--samples", "20000", "verify", "correlation"],
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for args in commands {
        let base = artifacts(args, 1);
        let same = [4, 8].iter().all(|&t| artifacts(args, t) == base);
        ok &= same && !base.is_empty();
        lines.push(format!(
            "{} {}",
            args.last().unwrap(),
            if same { "identical" } else { "differs" }
        ));
    }
    report(9, ok, &format!("1/4/8 threads: {}", lines.join(", ")));
    assert!(ok, "{lines:?}");
}
