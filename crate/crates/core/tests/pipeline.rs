use subgauss::bodies::BodySpec;
use subgauss::construction::{certify, injected_set, make_grid, prepare, FindOptions};
use subgauss::isotropy::isotropize;
use subgauss::moments::EvaluatorKind;
use subgauss::sampling::{default_method, sample_uniform};

#[test]
fn cone_directions_are_orthonormal_in_the_original_frame() {
    let n = 12;
    let body = BodySpec::cone(n).unwrap();
    let prep = prepare(&body, 50_000, 4, EvaluatorKind::Auto).unwrap();
    let grid = make_grid(n, 0.25, 4.0, 0.05).unwrap();
    let set = prep.find(&grid, &FindOptions::default()).unwrap();
    assert!(set.is_complete());
    let (off, diag) = set.orthonormality_error();
    assert!(off < 1e-10 && diag < 1e-10);
    let cert = prep.certify(&set, false);
    assert!(cert.directions.iter().all(|d| d.sup_ratio <= 3.0));
}

#[test]
fn isotropic_constant_of_the_cube() {
    let body = BodySpec::cube(6).unwrap();
    let batch = sample_uniform(&body, 100_000, 1, default_method(&body)).unwrap();
    let (_, t) = isotropize(&batch).unwrap();
    // L_K^2 = 1/12 for the unit cube
    assert!((t.lk - (1.0f64 / 12.0).sqrt()).abs() < 2e-3);
}

#[test]
fn injected_coordinate_of_the_cube_is_certified() {
    let n = 10;
    let body = BodySpec::cube(n).unwrap();
    let mut e1 = vec![0.0; n];
    e1[0] = 1.0;
    let set = injected_set(n, vec![e1], (1.0f64 / 12.0).sqrt());
    let cert = certify(&set, &body, None, true);
    let d = &cert.directions[0];
    assert!((d.sup_ratio - 0.866).abs() < 1e-3);
    assert!(d.pass);
}

#[test]
fn same_seed_same_directions() {
    let body = BodySpec::simplex(8).unwrap();
    let grid = make_grid(8, 0.25, 4.0, 0.05).unwrap();
    let run = || {
        let prep = prepare(&body, 20_000, 5, EvaluatorKind::MonteCarlo).unwrap();
        prep.find(&grid, &FindOptions::default())
            .unwrap()
            .to_json()
            .unwrap()
    };
    assert_eq!(run(), run());
}
