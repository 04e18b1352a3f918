mod common;

use common::*;
use nalgebra::DMatrix;
use tachibana::forms::*;
use tachibana::geometry::{build_grid, ManifoldSpec};
use tachibana::operators::*;
use tachibana::oracles::*;

#[test]
fn flat_killing_forms_solve_their_equations() {
    for (n, r) in [(2, 1), (3, 1), (3, 2), (4, 2)] {
        let spec = ManifoldSpec::standard_torus(n);
        let grid = build_grid(&spec, 4).unwrap();
        for f in flat_killing_basis(n, r).unwrap() {
            let res = residuals(&f, &grid).unwrap();
            assert!(res.ck < 1e-12 && res.killing < 1e-12, "{}: {res:?}", f.description);
        }
        for f in torus_parallel_basis(n, r).unwrap() {
            let res = residuals(&f, &grid).unwrap();
            assert!(res.ck.max(res.killing).max(res.closed_ck) < 1e-12);
        }
    }
}

#[test]
fn sphere_family_is_conformal_killing_under_deformation() {
    for spec in [ManifoldSpec::round_sphere(), conformal()] {
        let grid = build_grid(&spec, 30).unwrap();
        for f in sphere_ck_basis() {
            let ck = residual_ck(&f, &grid).unwrap();
            assert!(ck < 1e-10, "{}: {ck:e}", f.description);
        }
    }
}

#[test]
fn rotations_are_not_closed() {
    let spec = ManifoldSpec::round_sphere();
    let grid = build_grid(&spec, 20).unwrap();
    for f in sphere_ck_basis() {
        let res = residuals(&f, &grid).unwrap();
        match f.provenance {
            Provenance::SphereRotation => {
                assert!(res.killing < 1e-10);
                assert!(res.closed_ck > 0.1, "{}: {:e}", f.description, res.closed_ck);
            }
            _ => {
                assert!(res.closed_ck < 1e-10);
                assert!(res.killing > 0.1);
            }
        }
    }
}

#[test]
fn deformation_breaks_off_axis_symmetry() {
    let spec = conformal();
    let grid = build_grid(&spec, 30).unwrap();
    let family = sphere_ck_basis();
    let mut killing = 0;
    let mut closed = 0;
    for f in &family {
        let res = residuals(f, &grid).unwrap();
        killing += usize::from(res.killing < 1e-10);
        closed += usize::from(res.closed_ck < 1e-10);
    }
    assert_eq!((killing, closed), (1, 1));
}

#[test]
fn random_fields_have_large_residuals() {
    let spec = ManifoldSpec::round_sphere();
    let grid = build_grid(&spec, 15).unwrap();
    let basis = build_basis(&spec, &grid, 1, 5).unwrap();
    let mut g = rng(5);
    for _ in 0..5 {
        let f = random_field(&basis, &mut g);
        assert!(residual_ck(&f, &grid).unwrap() > 1e-2);
    }
}

#[test]
fn sphere_family_is_independent() {
    let spec = ManifoldSpec::round_sphere();
    let grid = build_grid(&spec, 20).unwrap();
    let vals: Vec<NodalForm> = sphere_ck_basis().iter().map(|f| f.nodal(&grid).unwrap().0).collect();
    let mut gram = DMatrix::from_fn(6, 6, |i, j| vals[i].inner(&vals[j], grid.weights()));
    let d: Vec<f64> = (0..6).map(|i| gram[(i, i)].sqrt()).collect();
    for i in 0..6 {
        for j in 0..6 {
            gram[(i, j)] /= d[i] * d[j];
        }
    }
    assert!(gram.determinant() > 1e-6);
    assert_eq!(gram_rank(&gram, 1e-8), 6);
}

#[test]
fn sphere_cross_certification() {
    let spec = ManifoldSpec::round_sphere();
    let grid = build_grid(&spec, 24).unwrap();
    let basis = build_basis(&spec, &grid, 1, 8).unwrap();
    let qf = assemble(&spec, &grid, &basis).unwrap();
    let pol = TolerancePolicy::default();
    let family = sphere_ck_basis();
    for (which, want) in [(QuadForm::Tachibana, 6), (QuadForm::KillingSum, 3), (QuadForm::PlanaritySum, 3)] {
        let cert = cross_certify(&family, &qf, &basis, which, &pol).unwrap();
        assert!(cert.span_matches(), "{which:?}: {cert:?}");
        assert_eq!(cert.span_dimension, want);
    }
}

#[test]
fn torus_cross_certification() {
    let spec = ManifoldSpec::standard_torus(3);
    let grid = build_grid(&spec, 8).unwrap();
    let basis = build_basis(&spec, &grid, 1, 2).unwrap();
    let qf = assemble(&spec, &grid, &basis).unwrap();
    let pol = TolerancePolicy::default();
    let par = cross_certify(&torus_parallel_basis(3, 1).unwrap(), &qf, &basis, QuadForm::Bochner, &pol).unwrap();
    assert!(par.span_matches() && par.span_dimension == 3);

    // on an oversampled grid the linear forms do not project onto the periodic basis
    let cert = cross_certify(&flat_killing_basis(3, 1).unwrap(), &qf, &basis, QuadForm::KillingSum, &pol).unwrap();
    assert_eq!(cert.rejected(), 3);
    assert!(cert.span_matches());
    for f in cert.forms.iter().filter(|f| f.provenance == Provenance::FlatKilling && !f.in_kernel) {
        assert!(f.projection_defect > 1e-2, "{}: {:e}", f.description, f.projection_defect);
    }
}

#[test]
fn analytic_forms_round_trip_json() {
    for f in sphere_ck_basis().into_iter().chain(flat_killing_basis(3, 2).unwrap()) {
        let text = serde_json::to_string(&f).unwrap();
        let back: AnalyticForm = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
    }
}
