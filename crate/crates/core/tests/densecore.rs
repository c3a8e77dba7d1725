use proptest::prelude::*;

use relax_core::densecore::{constrained_residuals, solve_constrained, Mat, Vector};
use relax_core::Error;

/// A uniquely solvable `(C, Q, V)` with `Q V = 0`, built from a
/// diagonally dominant change of basis `T`: `Q` is the first `n` rows of
/// `T^-1`, so `ker Q` is spanned by the trailing columns of `T`.
#[derive(Debug, Clone)]
struct Instance {
    c: Mat,
    q: Mat,
    v: Vector,
}

fn dominant(entries: &[f64], k: usize) -> Mat {
    let mut m = Mat::new(k, k, entries[..k * k].to_vec()).unwrap();
    for i in 0..k {
        m[(i, i)] += k as f64 + 1.0;
    }
    m
}

fn instance() -> impl Strategy<Value = Instance> {
    (2usize..=6)
        .prop_flat_map(|big_n| (Just(big_n), 1..big_n.min(4)))
        .prop_flat_map(|(big_n, n)| {
            let len = big_n * big_n;
            (
                Just((big_n, n)),
                prop::collection::vec(-1.0..1.0, len),
                prop::collection::vec(-1.0..1.0, len),
                prop::collection::vec(-1.0..1.0, len),
                prop::collection::vec(-1.0..1.0, big_n - n),
            )
        })
        .prop_map(|((big_n, n), t, e, g, w)| {
            let t = dominant(&t, big_n);
            let t_inv = t.inverse().unwrap();
            let q = Mat::new(
                n,
                big_n,
                (0..n).flat_map(|i| t_inv.row(i).to_vec()).collect(),
            )
            .unwrap();
            // S = [E' | ker Q] with E' a perturbation of the leading columns of T
            let mut s = t.clone();
            for i in 0..big_n {
                for j in 0..n {
                    s[(i, j)] += 0.3 * e[i * big_n + j];
                }
            }
            let g = dominant(&g, big_n - n);
            let mut block = Mat::zeros(big_n, big_n);
            for i in 0..big_n - n {
                for j in 0..big_n - n {
                    block[(n + i, n + j)] = g[(i, j)];
                }
            }
            let c = &(&s * &block) * &s.inverse().unwrap();
            let mut v = Vector::zeros(big_n);
            for (k, wk) in w.iter().enumerate() {
                v.axpy(*wk, &t.column(n + k));
            }
            Instance { c, q, v }
        })
        .prop_filter("away from the singular set", |i| {
            let s = i.c.singular_values();
            s[s.len() - 1 - i.q.rows()] > 1e-3 * s[0]
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn recovers_known_solution(inst in instance()) {
        let j = inst.c.mul_vec(&inst.v);
        let v = solve_constrained(&inst.c, &inst.q, &j).unwrap();
        let scale = 1.0 + inst.v.norm_inf();
        prop_assert!((&v - &inst.v).norm_inf() <= 1e-9 * scale, "{v:?} vs {:?}", inst.v);
        let (r, k) = constrained_residuals(&inst.c, &inst.q, &j, &v);
        prop_assert!(r <= 1e-10 * (1.0 + j.norm_inf()) && k <= 1e-10 * scale);
    }

    #[test]
    fn solution_is_linear_in_rhs(inst in instance(), s in -10.0f64..10.0) {
        let j = inst.c.mul_vec(&inst.v);
        let v = solve_constrained(&inst.c, &inst.q, &j).unwrap();
        let vs = solve_constrained(&inst.c, &inst.q, &j.scale(s)).unwrap();
        prop_assert!((&vs - &v.scale(s)).norm_inf() <= 1e-10 * (1.0 + s.abs()) * (1.0 + v.norm_inf()));
    }

    #[test]
    fn repeated_solves_are_bitwise_identical(inst in instance()) {
        let j = inst.c.mul_vec(&inst.v);
        let a = solve_constrained(&inst.c, &inst.q, &j).unwrap();
        let b = solve_constrained(&inst.c, &inst.q, &j).unwrap();
        prop_assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn rhs_outside_the_image_is_rejected(inst in instance(), k in 0usize..3) {
        // Q^T x has Q-component Q Q^T x != 0
        let row = k % inst.q.rows();
        let j = inst.q.transpose().mul_vec(&Vector::unit(inst.q.rows(), row));
        let err = solve_constrained(&inst.c, &inst.q, &j).unwrap_err();
        prop_assert!(matches!(err, Error::IncompatibleRhs { .. }), "{err:?}");
    }
}

#[test]
fn zero_corrector_matrix_is_singular() {
    let c = Mat::zeros(3, 3);
    let q = Mat::from_rows(&[&[1.0, 0.0, 0.0]]);
    let j = Vector::zeros(3);
    assert!(matches!(
        solve_constrained(&c, &q, &j),
        Err(Error::SingularSystem { .. })
    ));
}

#[test]
fn kernel_meeting_image_is_singular() {
    // nilpotent block: ker C = im C = span(e2), and Q does not fix the gap
    let c = Mat::from_rows(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]]);
    let q = Mat::from_rows(&[&[1.0, 0.0, 0.0]]);
    let j = Vector::from_slice(&[0.0, 1.0, 0.0]);
    assert!(solve_constrained(&c, &q, &j).is_err());
}

#[test]
fn shape_errors() {
    let c = Mat::identity(2);
    let q = Mat::from_rows(&[&[1.0, 0.0, 0.0]]);
    assert!(matches!(
        solve_constrained(&c, &q, &Vector::zeros(2)),
        Err(Error::DimensionMismatch(_))
    ));
    assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
    assert!(Mat::new(2, 2, vec![1.0; 3]).is_err());
}
