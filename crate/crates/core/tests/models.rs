use proptest::prelude::*;

use relax_core::densecore::{Mat, Vector};
use relax_core::models::{
    build_model, eddington, eddington_derivative, tau_from_u, ModelParams, MODEL_NAMES,
};
use relax_core::system::{jacobian_fd, measure_model, sample_rng, RelaxationModel};

fn model(name: &str) -> Box<dyn RelaxationModel> {
    build_model(name, &ModelParams::default()).unwrap()
}

fn rel_gap(a: &Mat, b: &Mat) -> f64 {
    (a - b).max_abs() / b.max_abs().max(1.0)
}

#[test]
fn jacobians_match_finite_differences() {
    for name in MODEL_NAMES {
        let m = model(name);
        let mut rng = sample_rng(17);
        for _ in 0..50 {
            let s = m.sample_state(&mut rng);
            let adm = |x: &Vector| m.admissible(x);
            let fd = jacobian_fd(|x| m.flux(x), adm, &s, 1e-6).unwrap();
            assert!(
                rel_gap(&m.flux_jacobian(&s), &fd) < 1e-6,
                "{name} flux at {s:?}"
            );
            let fd = jacobian_fd(|x| m.relaxation(x), adm, &s, 1e-6).unwrap();
            assert!(
                rel_gap(&m.relaxation_jacobian(&s), &fd) < 1e-6,
                "{name} relaxation at {s:?}"
            );
        }
    }
}

#[test]
fn structural_identities_hold() {
    for name in MODEL_NAMES {
        let m = model(name);
        let r = measure_model(m.as_ref(), 100, 5).unwrap();
        assert!(r.passed(), "{r}");
        assert_eq!(m.q_matrix().rank(1e-12), m.equil_dim());
        assert_eq!(m.q_matrix(), model(name).q_matrix());
    }
}

#[test]
fn relaxation_exponents() {
    let q: Vec<u32> = MODEL_NAMES
        .iter()
        .map(|n| model(n).relax_exponent())
        .collect();
    assert_eq!(q, [1, 1, 1, 2]);
}

#[test]
fn eddington_factor() {
    assert!((eddington(0.0) - 1.0 / 3.0).abs() < 1e-15);
    assert!((eddington(1.0) - 1.0).abs() < 1e-15);
    assert!((eddington(-1.0) - 1.0).abs() < 1e-15);
    assert_eq!(eddington_derivative(0.0), 0.0);
    let mut prev = eddington(0.0);
    for k in 1..=100 {
        let chi = eddington(k as f64 / 100.0);
        assert!(chi > prev);
        prev = chi;
    }
}

#[test]
fn euler_equilibrium_flux() {
    let m = model("euler_friction");
    for rho in [0.3, 1.0, 2.5] {
        let e = m.equilibrium(&Vector::from_slice(&[rho])).unwrap();
        assert_eq!(e.as_slice(), &[rho, 0.0]);
        assert_eq!(m.flux(&e).as_slice(), &[0.0, rho * rho]);
        let a = m.flux_jacobian(&e);
        assert_eq!(a, Mat::from_rows(&[&[0.0, 1.0], &[2.0 * rho, 0.0]]));
        assert!((m.spectral_radius(&e) - (2.0 * rho).sqrt()).abs() < 1e-14);
    }
}

#[test]
fn m1_equilibrium_flux() {
    let m = model("m1");
    for tau in [0.2, 1.0, 1.7] {
        let u = tau + tau * tau * tau * tau;
        let e = m.equilibrium(&Vector::from_slice(&[u])).unwrap();
        assert!((e[0] - tau.powi(4)).abs() < 1e-12 && e[1] == 0.0 && (e[2] - tau).abs() < 1e-13);
        let f = m.flux(&e);
        assert!(f[0].abs() < 1e-15 && f[2] == 0.0);
        assert!((f[1] - tau.powi(4) / 3.0).abs() < 1e-12);
    }
}

#[test]
fn shallow_water_friction_balances_on_corrector() {
    use relax_core::chapman_enskog::{corrector, relaxation_balance_defect};
    let m = model("shallow_water_friction");
    let mut rng = sample_rng(9);
    for _ in 0..50 {
        let u = m.sample_equil(&mut rng);
        let du = m.sample_gradient(&mut rng);
        let u1 = corrector(m.as_ref(), &u, &du).unwrap().u1;
        // R(E + M(0) U1) is c(u) U1 with c = kappa(h) sqrt(h |dh/dx|)
        let m0 = m.relaxation_scaling(0.0).unwrap();
        let lhs = m.relaxation(&(&m.equilibrium(&u).unwrap() + &m0.mul_vec(&u1)));
        let rate = (u[0] * du[0].abs()).sqrt() / u[0];
        assert!((&lhs - &u1.scale(rate)).norm_inf() < 1e-12 * (1.0 + lhs.norm_inf()));
        assert!(relaxation_balance_defect(m.as_ref(), &u, &du).unwrap() < 1e-12);
        // quadratic friction: R(h, eps m) = eps^2 R(h, m)
        let eps = 1e-3;
        let s = Vector::from_slice(&[u[0], u1[1]]);
        let small = Vector::from_slice(&[u[0], eps * u1[1]]);
        assert!(
            (&m.relaxation(&small).scale(1.0 / (eps * eps)) - &m.relaxation(&s)).norm_inf() < 1e-12
        );
        assert_eq!(m.relaxation_scaling(eps).unwrap(), Mat::diag(&[eps, 1.0]));
    }
}

#[test]
fn entropy_dissipates_relaxation() {
    use relax_core::chapman_enskog::dissipation_check;
    for name in ["euler_friction", "shallow_water_friction"] {
        let m = model(name);
        let mut rng = sample_rng(2);
        for _ in 0..50 {
            let s = m.sample_state(&mut rng);
            let ent = m.entropy().unwrap();
            assert!(
                ent.entropy_gradient(&s).dot(&m.relaxation(&s)) >= 0.0,
                "{name}"
            );
            let u = m.sample_equil(&mut rng);
            assert!(dissipation_check(m.as_ref(), &u).unwrap() >= -1e-12);
        }
    }
}

#[test]
fn unknown_names_and_bad_parameters() {
    assert!(build_model("vlasov", &ModelParams::default()).is_err());
    let mut p = ModelParams::default();
    p.set("kappa", -1.0).unwrap();
    assert!(build_model("euler_m1", &p).is_err());
    assert!(p.set("nope", 1.0).is_err());
}

proptest! {
    #[test]
    fn tau_inverts_equilibrium_relation(tau in 1e-3f64..10.0) {
        let u = tau + tau.powi(4);
        let t = tau_from_u(u).unwrap();
        prop_assert!((t - tau).abs() <= 1e-12 * tau.max(1.0));
    }

    #[test]
    fn equilibrium_is_projected_back(seed in any::<u64>(), k in 0usize..4) {
        let m = model(MODEL_NAMES[k]);
        let mut rng = sample_rng(seed);
        let u = m.sample_equil(&mut rng);
        let e = m.equilibrium(&u).unwrap();
        prop_assert!((&m.q_matrix().mul_vec(&e) - &u).norm_inf() < 1e-12 * (1.0 + u.norm_inf()));
        prop_assert!(m.relaxation(&e).norm_inf() < 1e-12 * (1.0 + e.norm_inf()));
        prop_assert!(m.q_matrix().mul_vec(&m.relaxation(&m.sample_state(&mut rng))).norm_inf() < 1e-12);
    }
}
