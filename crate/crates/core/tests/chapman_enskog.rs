use relax_core::chapman_enskog::{
    corrector, effective_matrix_numeric, entropy_form_flux, entropy_production, entropy_structure,
};
use relax_core::densecore::Vector;
use relax_core::models::{build_model, ModelParams, MODEL_NAMES};
use relax_core::system::{sample_rng, RelaxationModel};
use relax_core::Error;

fn model(name: &str) -> Box<dyn RelaxationModel> {
    build_model(name, &ModelParams::default()).unwrap()
}

const LINEAR: [&str; 3] = ["euler_friction", "m1", "euler_m1"];

#[test]
fn corrector_satisfies_both_equations() {
    for name in MODEL_NAMES {
        let m = model(name);
        let mut rng = sample_rng(21);
        for _ in 0..50 {
            let u = m.sample_equil(&mut rng);
            let du = m.sample_gradient(&mut rng);
            let r = corrector(m.as_ref(), &u, &du).unwrap();
            let scale = 1.0 + r.u1.norm_inf();
            assert!(r.solve_residual < 1e-12 * scale, "{name}");
            assert!(r.constraint_residual < 1e-12 * scale, "{name}");
        }
    }
}

#[test]
fn assembled_matrix_reproduces_every_gradient() {
    for name in LINEAR {
        let m = model(name);
        let mut rng = sample_rng(8);
        for _ in 0..50 {
            let u = m.sample_equil(&mut rng);
            let mm = effective_matrix_numeric(m.as_ref(), &u).unwrap();
            let du = m.sample_gradient(&mut rng);
            let flux = corrector(m.as_ref(), &u, &du).unwrap().effective_flux;
            let expect = mm.mul_vec(&du);
            assert!(
                (&flux - &expect).norm_inf() < 1e-12 * (1.0 + flux.norm_inf()),
                "{name}"
            );
        }
    }
}

#[test]
fn corrector_is_linear_in_the_gradient() {
    for name in LINEAR {
        let m = model(name);
        let mut rng = sample_rng(13);
        let u = m.sample_equil(&mut rng);
        let (g1, g2) = (m.sample_gradient(&mut rng), m.sample_gradient(&mut rng));
        let (a, b) = (1.7, -0.4);
        let combo = &g1.scale(a) + &g2.scale(b);
        let lhs = corrector(m.as_ref(), &u, &combo).unwrap().u1;
        let r1 = corrector(m.as_ref(), &u, &g1).unwrap().u1;
        let r2 = corrector(m.as_ref(), &u, &g2).unwrap().u1;
        let rhs = &r1.scale(a) + &r2.scale(b);
        assert!(
            (&lhs - &rhs).norm_inf() < 1e-12 * (1.0 + rhs.norm_inf()),
            "{name}"
        );
    }
}

#[test]
fn quadratic_friction_scales_with_root_of_gradient() {
    let m = model("shallow_water_friction");
    let u = Vector::from_slice(&[1.3]);
    let f1 = corrector(m.as_ref(), &u, &Vector::from_slice(&[0.2]))
        .unwrap()
        .effective_flux;
    let f4 = corrector(m.as_ref(), &u, &Vector::from_slice(&[0.8]))
        .unwrap()
        .effective_flux;
    assert!((f4[0] / f1[0] - 2.0).abs() < 1e-12);
    assert!(matches!(
        effective_matrix_numeric(m.as_ref(), &u),
        Err(Error::NotLinearRegime(_))
    ));
}

#[test]
fn entropy_form_agrees_with_corrector() {
    for name in ["euler_friction", "shallow_water_friction"] {
        let m = model(name);
        let mut rng = sample_rng(31);
        for _ in 0..50 {
            let u = m.sample_equil(&mut rng);
            let du = m.sample_gradient(&mut rng);
            let a = entropy_form_flux(m.as_ref(), &u, &du).unwrap();
            let b = corrector(m.as_ref(), &u, &du).unwrap().effective_flux;
            assert!(
                (&a - &b).norm_inf() < 1e-10 * (1.0 + b.norm_inf()),
                "{name}"
            );
            let l = entropy_structure(m.as_ref(), &u, &du).unwrap().l;
            assert!((&l - &l.transpose()).max_abs() < 1e-12 * (1.0 + l.max_abs()));
            assert!(l.symmetric_eigenvalues()[0] >= 0.0);
        }
    }
    assert!(matches!(
        entropy_form_flux(
            model("m1").as_ref(),
            &Vector::from_slice(&[1.0]),
            &Vector::from_slice(&[1.0])
        ),
        Err(Error::EntropyUnavailable(_))
    ));
}

#[test]
fn entropy_production_is_monotone_in_gradient() {
    for name in ["euler_friction", "shallow_water_friction"] {
        let m = model(name);
        let u = Vector::from_slice(&[1.2]);
        let mut prev = 0.0;
        for k in 1..=10 {
            let p =
                entropy_production(m.as_ref(), &u, &Vector::from_slice(&[0.1 * k as f64])).unwrap();
            assert!(p > prev, "{name}: {p} after {prev}");
            prev = p;
        }
        assert!(entropy_production(m.as_ref(), &u, &Vector::from_slice(&[-0.5])).unwrap() > 0.0);
    }
}

#[test]
fn gradient_dimension_is_checked() {
    let m = model("euler_m1");
    let u = Vector::from_slice(&[1.0, 1.0]);
    assert!(matches!(
        corrector(m.as_ref(), &u, &Vector::from_slice(&[1.0])),
        Err(Error::DimensionMismatch(_))
    ));
}
