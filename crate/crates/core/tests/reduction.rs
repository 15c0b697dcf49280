mod common;

use common::{input_set, output_set, probes, rel, system};
use num_complex::Complex64;
use proptest::prelude::*;
use somor::moments::{self, InterpolationSet};
use somor::numerics::{self, c64, CMatrix, CVector};
use somor::random::{self, rng};
use somor::reduction::{self, FamilyGParams, FamilyHParams, MatchPoint};
use somor::system::msd_benchmark;
use somor::SecondOrderSystem;

fn random_g_params(r: &mut random::Rng64, nu: usize, p: usize, q: usize) -> FamilyGParams {
    FamilyGParams {
        f2: random::complex_matrix(r, nu, nu) + CMatrix::identity(nu, nu) * c64(2.0, 0.0),
        f1: random::complex_matrix(r, nu, nu),
        g: random::complex_matrix(r, nu, p),
        h1: random::complex_matrix(r, q, nu),
    }
}

fn random_h_params(r: &mut random::Rng64, nu: usize, q: usize) -> FamilyHParams {
    FamilyHParams {
        f2: random::complex_matrix(r, nu, nu) + CMatrix::identity(nu, nu) * c64(2.0, 0.0),
        f1: random::complex_matrix(r, nu, nu),
        h0: random::complex_matrix(r, q, nu),
        h1: random::complex_matrix(r, q, nu),
    }
}

#[test]
fn family_g_matches_at_interpolation_points() {
    let mut r = rng(11);
    for _ in 0..10 {
        let sys = system(&mut r, 8, 1, 1, true);
        let (_, set) = input_set(&mut r, 3, 1);
        let params = random_g_params(&mut r, 3, 1, 1);
        let model = reduction::family_g(&sys, &set, &params).unwrap();
        let err = reduction::verify_match(&sys, &model, &MatchPoint::from_set(&set).unwrap()).unwrap();
        assert!(err <= 1e-8, "{err}");
    }
}

#[test]
fn family_h_matches_at_interpolation_points() {
    let mut r = rng(12);
    for _ in 0..10 {
        let sys = system(&mut r, 8, 2, 2, true);
        let (_, set) = output_set(&mut r, 3, 2);
        let params = random_h_params(&mut r, 3, 2);
        let model = reduction::family_h(&sys, &set, &params).unwrap();
        let err = reduction::verify_match(&sys, &model, &MatchPoint::from_set(&set).unwrap()).unwrap();
        assert!(err <= 1e-8, "{err}");
    }
}

#[test]
fn family_members_differ_away_from_the_points() {
    let mut r = rng(13);
    let sys = system(&mut r, 8, 1, 1, false);
    let (_, set) = input_set(&mut r, 3, 1);
    let a = reduction::family_g(&sys, &set, &random_g_params(&mut r, 3, 1, 1)).unwrap();
    let b = reduction::family_g(&sys, &set, &random_g_params(&mut r, 3, 1, 1)).unwrap();
    let pts = MatchPoint::from_set(&set).unwrap();
    let diff_at: Vec<f64> = pts
        .iter()
        .map(|p| rel(&a.system.eval_transfer(p.s()).unwrap(), &b.system.eval_transfer(p.s()).unwrap()))
        .collect();
    assert!(diff_at.iter().all(|&d| d < 1e-8), "{diff_at:?}");
    let probe = c64(0.0, 0.77);
    let away = rel(&a.system.eval_transfer(probe).unwrap(), &b.system.eval_transfer(probe).unwrap());
    assert!(away > 1e-6, "{away}");
}

#[test]
fn perturbed_output_map_is_detected() {
    let mut r = rng(14);
    let sys = system(&mut r, 8, 1, 1, false);
    let (_, set) = input_set(&mut r, 3, 1);
    let model = reduction::family_g(&sys, &set, &random_g_params(&mut r, 3, 1, 1)).unwrap();
    let s = &model.system;
    let bumped = SecondOrderSystem::new(
        s.m().clone(),
        s.d().clone(),
        s.k().clone(),
        s.b().clone(),
        s.c0().add_scalar(c64(1e-3, 0.0)),
        s.c1().clone(),
    )
    .unwrap();
    let bumped = reduction::ReducedModel { system: bumped, provenance: model.provenance.clone() };
    let err = reduction::verify_match(&sys, &bumped, &MatchPoint::from_set(&set).unwrap()).unwrap();
    assert!(err > 1e-4, "{err}");
}

#[test]
fn zero_input_map_puts_poles_on_the_points() {
    // With G = 0, F₀ = −F₂S² − F₁S and every sᵢ is a root of the reduced
    // pencil (eigenvector eᵢ), so the member is rejected outright.
    let mut r = rng(15);
    let sys = system(&mut r, 6, 1, 1, false);
    let (_, set) = input_set(&mut r, 2, 1);
    let mut params = random_g_params(&mut r, 2, 1, 1);
    params.g = CMatrix::zeros(2, 1);
    let err = reduction::family_g(&sys, &set, &params).unwrap_err();
    assert_eq!(err.name(), "SpectraOverlap");
}

#[test]
fn non_diagonal_shift_matches_at_its_eigenvalues() {
    let mut r = rng(16);
    let sys = system(&mut r, 7, 1, 1, true);
    let (_, diag_set) = input_set(&mut r, 3, 1);
    let t = CMatrix::identity(3, 3) + random::complex_matrix(&mut r, 3, 3) * c64(0.3, 0.0);
    let t_inv = numerics::inverse(&t).unwrap();
    let set = InterpolationSet::input(&t_inv * diag_set.shift() * &t, diag_set.direction() * &t).unwrap();
    let model = reduction::family_g(&sys, &set, &random_g_params(&mut r, 3, 1, 1)).unwrap();
    let err = reduction::verify_match(&sys, &model, &MatchPoint::from_set(&set).unwrap()).unwrap();
    assert!(err <= 1e-8, "{err}");
}

#[test]
fn two_sided_matches_both_sides_and_forms_agree() {
    let mut r = rng(21);
    for _ in 0..10 {
        let sys = system(&mut r, 10, 1, 1, true);
        let (_, inp) = input_set(&mut r, 3, 1);
        let (_, out) = output_set(&mut r, 3, 1);
        let g = reduction::two_sided(&sys, &inp, &out).unwrap();
        let h = reduction::two_sided_h(&sys, &inp, &out).unwrap();
        for set in [&inp, &out] {
            let pts = MatchPoint::from_set(set).unwrap();
            assert!(reduction::verify_match(&sys, &g, &pts).unwrap() <= 1e-8);
            assert!(reduction::verify_match(&sys, &h, &pts).unwrap() <= 1e-8);
        }
        for s in probes(&mut r, 20) {
            let e = rel(&h.system.eval_transfer(s).unwrap(), &g.system.eval_transfer(s).unwrap());
            assert!(e <= 1e-9, "{e}");
        }
    }
}

#[test]
fn two_sided_full_order_is_a_similarity() {
    let mut r = rng(22);
    let sys = system(&mut r, 4, 1, 1, false);
    let (_, inp) = input_set(&mut r, 4, 1);
    let (_, out) = output_set(&mut r, 4, 1);
    let model = reduction::two_sided(&sys, &inp, &out).unwrap();
    for s in probes(&mut r, 10) {
        let e = rel(&model.system.eval_transfer(s).unwrap(), &sys.eval_transfer(s).unwrap());
        assert!(e <= 1e-10, "{e}");
    }
}

#[test]
fn two_sided_rejects_singular_product() {
    // Output directions orthogonal to everything: Υ has a zero row.
    let mut r = rng(23);
    let sys = system(&mut r, 5, 1, 1, false);
    let (_, inp) = input_set(&mut r, 2, 1);
    let sys0 = sys.with_outputs(CMatrix::zeros(1, 5), CMatrix::zeros(1, 5)).unwrap();
    let (_, out) = output_set(&mut r, 2, 1);
    let err = reduction::two_sided(&sys0, &inp, &out).unwrap_err();
    assert_eq!(err.name(), "SingularProduct");
}

#[test]
fn stable_choices_are_stable_and_definite() {
    let mut r = rng(31);
    for case in 0..20 {
        let nu = 1 + case % 4;
        let s = random::negative_real_shift(&mut r, nu, case % 2 == 0);
        let l = random::complex_matrix(&mut r, 1, nu);
        let dfree: Vec<f64> = (0..nu).map(|i| 0.5 + 0.25 * i as f64).collect();
        let (f2, f1, g) = reduction::stable_choice_g(&s, &l, &dfree, reduction::DEFAULT_THETA).unwrap();
        let rep = reduction::check_stability_condition_g(&s, &l, &f2, &f1, &g).unwrap();
        assert!(rep.definite && rep.spectrally_stable, "case {case}: {rep:?}");

        let q = random::negative_real_shift(&mut r, nu, case % 2 == 0);
        let rr = random::complex_matrix(&mut r, nu, 1);
        let (f2, f1, h0, h1) = reduction::stable_choice_h(&q, &rr, &dfree, reduction::DEFAULT_THETA).unwrap();
        let rep = reduction::check_stability_condition_h(&q, &rr, &f2, &f1, &h0, &h1).unwrap();
        assert!(rep.definite && rep.spectrally_stable, "case {case}: {rep:?}");
    }
}

#[test]
fn stable_models_match_and_are_stable() {
    let mut r = rng(32);
    let sys = system(&mut r, 8, 1, 1, false);
    let s = random::negative_real_shift(&mut r, 3, false);
    let l = random::complex_matrix(&mut r, 1, 3);
    let set = InterpolationSet::input(s, l).unwrap();
    let model = reduction::stable_model_g(&sys, &set, &[1.0, 2.0, 0.5], 0.5, CMatrix::zeros(1, 3)).unwrap();
    assert!(model.system.max_pole_real_part().unwrap() < 0.0);
    let err = reduction::verify_match(&sys, &model, &MatchPoint::from_set(&set).unwrap()).unwrap();
    assert!(err <= 1e-8, "{err}");
}

fn passive_msd(n: usize) -> SecondOrderSystem {
    let sys = msd_benchmark(n, 1.0, 0.1, 1.5).unwrap();
    sys.with_outputs(CMatrix::zeros(1, n), sys.b().adjoint()).unwrap()
}

#[test]
fn passive_galerkin_is_definite_and_stable() {
    let sys = passive_msd(10);
    let pts = [c64(0.0, 0.3), c64(0.1, 1.1), c64(0.0, 2.0)];
    let ones = vec![CVector::from_element(1, c64(1.0, 0.0)); 3];
    let inp = InterpolationSet::input_diagonal(&pts, &ones).unwrap();
    let out = InterpolationSet::output_diagonal(&pts, &ones).unwrap();
    for model in [
        reduction::passive_galerkin_g(&sys, &inp).unwrap(),
        reduction::passive_galerkin_h(&sys, &out).unwrap(),
    ] {
        let s = &model.system;
        for f in [s.m(), s.d(), s.k()] {
            assert!(numerics::is_positive_definite(f, 0.0).unwrap());
        }
        assert_eq!(s.b().adjoint(), *s.c1());
        assert!(s.max_pole_real_part().unwrap() <= 1e-12);
        assert!(model.provenance.details["match_residual"].is_number());
    }
}

#[test]
fn passive_galerkin_full_order_reproduces_system() {
    let sys = passive_msd(3);
    let pts = [c64(0.0, 0.3), c64(0.1, 1.1), c64(0.0, 2.0)];
    let ones = vec![CVector::from_element(1, c64(1.0, 0.0)); 3];
    let inp = InterpolationSet::input_diagonal(&pts, &ones).unwrap();
    let model = reduction::passive_galerkin_g(&sys, &inp).unwrap();
    for s in [c64(0.2, 0.4), c64(0.0, 3.0)] {
        assert!(rel(&model.system.eval_transfer(s).unwrap(), &sys.eval_transfer(s).unwrap()) < 1e-10);
    }
}

fn unit_points(pts: &[Complex64]) -> InterpolationSet {
    InterpolationSet::input_diagonal(pts, &vec![CVector::from_element(1, c64(1.0, 0.0)); pts.len()]).unwrap()
}

#[test]
fn pole_placement_on_msd() {
    let sys = msd_benchmark(6, 1.0, 0.1, 1.5).unwrap();
    let set = unit_points(&[c64(0.0, 0.2), c64(0.0, 0.9), c64(0.0, 1.6)]);
    let targets = [c64(-1.0, 0.0), c64(-2.0, 0.0)];
    let mut r = rng(41);
    for _ in 0..10 {
        let rp = random::complex_matrix(&mut r, 2, 1);
        let model = reduction::pole_placement(&sys, &set, &targets, &rp).unwrap();
        let poles = model.system.poles().unwrap();
        for t in targets {
            let d = numerics::min_pairwise_distance(poles, &[t]);
            assert!(d <= 1e-6, "target {t} missed by {d}");
        }
        let err = reduction::verify_match(&sys, &model, &MatchPoint::from_set(&set).unwrap()).unwrap();
        assert!(err <= 1e-8, "{err}");
    }
}

#[test]
fn pole_placement_with_no_targets_is_the_center_model() {
    let sys = msd_benchmark(6, 1.0, 0.1, 1.5).unwrap();
    let set = unit_points(&[c64(0.0, 0.2), c64(0.0, 0.9)]);
    let model = reduction::pole_placement(&sys, &set, &[], &CMatrix::zeros(0, 1)).unwrap();
    let pi = moments::solve_pi(&sys, &set).unwrap();
    let pa = pi.adjoint();
    let pinv = numerics::solve(&(&pa * &pi), &pa).unwrap();
    assert!(rel(model.system.m(), &(&pinv * sys.m() * &pi)) < 1e-12);
    assert!(rel(model.system.b(), &(&pinv * sys.b())) < 1e-12);
}

#[test]
fn pole_placement_rejects_target_in_shift_spectrum() {
    let sys = msd_benchmark(6, 1.0, 0.1, 1.5).unwrap();
    let set = unit_points(&[c64(0.0, 0.2), c64(0.0, 0.9)]);
    let err = reduction::pole_placement(&sys, &set, &[c64(0.0, 0.2)], &CMatrix::from_element(1, 1, c64(1.0, 0.0)))
        .unwrap_err();
    assert_eq!(err.name(), "SpectraOverlap");
}

fn assert_hermite(sys: &SecondOrderSystem, model: &SecondOrderSystem, pts: &[Complex64]) {
    for &s in pts {
        let e0 = rel(&model.eval_transfer(s).unwrap(), &sys.eval_transfer(s).unwrap());
        let e1 = rel(
            &model.eval_transfer_derivative(s, 1).unwrap(),
            &sys.eval_transfer_derivative(s, 1).unwrap(),
        );
        assert!(e0 <= 1e-8 && e1 <= 1e-8, "at {s}: {e0} {e1}");
    }
}

#[test]
fn derivative_matching_on_random_systems() {
    let mut r = rng(51);
    for _ in 0..10 {
        let sys = system(&mut r, 8, 1, 1, false);
        let (pts, set) = input_set(&mut r, 3, 1);
        let model = reduction::derivative_matching(&sys, &set).unwrap();
        assert_hermite(&sys, &model.system, &pts);
    }
}

#[test]
fn derivative_matching_on_msd() {
    let sys = msd_benchmark(8, 1.0, 0.1, 1.5).unwrap();
    let pts = [c64(0.0, 0.1), c64(0.0, -0.1)];
    let model = reduction::derivative_matching(&sys, &unit_points(&pts)).unwrap();
    assert_hermite(&sys, &model.system, &pts);
}

#[test]
fn derivative_matching_scalar_is_exact() {
    let sys = msd_benchmark(1, 1.0, 0.1, 1.5).unwrap();
    let pts = [c64(0.2, 0.5)];
    let model = reduction::derivative_matching(&sys, &unit_points(&pts)).unwrap();
    assert_hermite(&sys, &model.system, &pts);
    assert!(rel(&model.system.eval_transfer(c64(0.0, 2.0)).unwrap(), &sys.eval_transfer(c64(0.0, 2.0)).unwrap()) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prop_family_g_always_matches(seed in any::<u64>(), nu in 1usize..4, velocity in any::<bool>()) {
        let mut r = rng(seed);
        let sys = system(&mut r, 6, 1, 1, velocity);
        let (_, set) = input_set(&mut r, nu, 1);
        let params = random_g_params(&mut r, nu, 1, 1);
        if let Ok(model) = reduction::family_g(&sys, &set, &params) {
            let err = reduction::verify_match(&sys, &model, &MatchPoint::from_set(&set).unwrap()).unwrap();
            prop_assert!(err <= 1e-8, "{}", err);
        }
    }

    #[test]
    fn prop_stable_choice_g_is_stable(seed in any::<u64>(), nu in 1usize..5, theta in 0.05f64..0.95) {
        let mut r = rng(seed);
        let s = random::negative_real_shift(&mut r, nu, false);
        let l = random::complex_matrix(&mut r, 1, nu);
        let dfree: Vec<f64> = (0..nu).map(|_| rand::Rng::gen_range(&mut r, 0.1..2.0)).collect();
        let (f2, f1, g) = reduction::stable_choice_g(&s, &l, &dfree, theta).unwrap();
        let rep = reduction::check_stability_condition_g(&s, &l, &f2, &f1, &g).unwrap();
        prop_assert!(rep.definite && rep.spectrally_stable, "{:?}", rep);
    }
}
