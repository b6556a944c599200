//! Property tests of the closed-form model identities over generated
//! inputs.

use num_complex::Complex64;
use proptest::prelude::*;
use spinflip::model::{
    self, carrier_matrix_det, carrier_matrix_real, radial_tangential_split, reduce_injection,
    reduced_fixed_point_map, reduced_jacobian, reduced_map, steady_carriers, ComplexPair,
    LaserState,
};
use spinflip::stability::{matching_distance, Spectrum};
use spinflip::{LaserParams, Mat2, Vec2, Vec6};

fn arb_params() -> impl Strategy<Value = LaserParams> {
    (1.0..500.0f64, -3.0..3.0f64, 0.05..5.0f64, 0.05..5.0f64, 1.001..4.0f64)
        .prop_map(|(kappa, alpha, gamma, delta, mu)| LaserParams {
            kappa,
            alpha,
            gamma,
            delta,
            mu,
        })
}

fn arb_x() -> impl Strategy<Value = Vec2> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b)| Vec2::new(a, b))
}

fn arb_complex(scale: f64) -> impl Strategy<Value = Complex64> {
    (-scale..scale, -scale..scale).prop_map(move |(re, im)| Complex64::new(re, im))
}

proptest! {
    #[test]
    fn carrier_determinant_is_bounded_below_by_delta(p in arb_params(), x in arb_x()) {
        let det = carrier_matrix_det(x, &p);
        prop_assert!(det >= p.delta);
        let m = carrier_matrix_real(x, &p);
        prop_assert!((m.determinant() - det).abs() <= 1e-9 * det);
    }

    #[test]
    fn steady_carriers_solve_the_carrier_balance(p in arb_params(), x in arb_x()) {
        let y = steady_carriers(x, &p);
        let lhs = carrier_matrix_real(x, &p) * y;
        prop_assert!((lhs[0] - p.mu).abs() < 1e-10 * (1.0 + p.mu));
        prop_assert!(lhs[1].abs() < 1e-10 * (1.0 + p.mu));
    }

    #[test]
    fn injection_reduction_round_trips(
        p in arb_params(),
        um in arb_complex(5.0),
        up in arb_complex(5.0),
    ) {
        prop_assume!(um.norm() > 1e-9 && up.norm() > 1e-9);
        let u = ComplexPair::new(um, up);
        let (r, phases) = reduce_injection(&u, &p);
        prop_assert!(r[0] >= 0.0 && r[1] >= 0.0);
        prop_assert!(!phases.minus_arbitrary && !phases.plus_arbitrary);
        let back = model::injection_from(r, &phases, &p);
        prop_assert!((back - u).norm() < 1e-12 * (1.0 + u.norm()));
    }

    #[test]
    fn radial_split_reconstructs_and_respects_bounds(p in arb_params(), x in arb_x()) {
        prop_assume!(x.norm() > 1e-6);
        let (a, b) = radial_tangential_split(x, &p).unwrap();
        let r = x.norm();
        let v = reduced_map(0.0, x, Vec2::zeros(), &p);
        let recon = a * x + b * Vec2::new(x[1], -x[0]);
        prop_assert!((v - recon).norm() <= 1e-12 * (1.0 + v.norm()));
        prop_assert!(1.0 - a >= 0.0);
        prop_assert!(1.0 - a < p.mu * 1f64.min(1.0 / (r * r)));
        let b_cap = p.mu
            * (1.0 / (1.0 + p.delta))
                .min((1.0 + p.delta).powf(-2.0 / 3.0) * r.powf(-2.0 / 3.0));
        prop_assert!(b.abs() < b_cap);
    }

    #[test]
    fn reduced_jacobian_matches_differences_and_ignores_s(
        p in arb_params(),
        x in arb_x(),
        s in -2.0..2.0f64,
        rh in (0.01..2.0f64, 0.01..2.0f64),
    ) {
        let rhat = Vec2::new(rh.0, rh.1);
        let j = reduced_jacobian(x, &p);
        let h = 1e-6 * (1.0 + x.norm());
        let mut fd = Mat2::zeros();
        for c in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let col = (reduced_map(s, xp, rhat, &p) - reduced_map(s, xm, rhat, &p)) / (2.0 * h);
            fd[(0, c)] = col[0];
            fd[(1, c)] = col[1];
        }
        prop_assert!((j - fd).norm() < 1e-4 * (1.0 + j.norm()), "{j} vs {fd}");
    }

    #[test]
    fn fixed_point_form_mirrors_the_root_form(
        p in arb_params(),
        x in arb_x(),
        s in -2.0..2.0f64,
        rh in (0.01..2.0f64, 0.01..2.0f64),
    ) {
        let rhat = Vec2::new(rh.0, rh.1);
        let f = reduced_map(s, x, rhat, &p);
        let g = reduced_fixed_point_map(s, x, rhat, &p);
        prop_assert!(((g - x) + f).norm() < 1e-12 * (1.0 + f.norm()));
    }

    #[test]
    fn state_vector_round_trip(v in prop::array::uniform6(-10.0..10.0f64)) {
        let vec = Vec6::from_row_slice(&v);
        prop_assert_eq!(LaserState::from_vec6(&vec).to_vec6(), vec);
    }

    #[test]
    fn matching_distance_is_a_permutation_invariant_metric(
        re in prop::array::uniform6(-3.0..3.0f64),
        im in prop::array::uniform6(-3.0..3.0f64),
        re2 in prop::array::uniform6(-3.0..3.0f64),
        im2 in prop::array::uniform6(-3.0..3.0f64),
        rot in 0usize..6,
    ) {
        let a = Spectrum(std::array::from_fn(|i| Complex64::new(re[i], im[i])));
        let b = Spectrum(std::array::from_fn(|i| Complex64::new(re2[i], im2[i])));
        // permuting one tuple leaves the distance unchanged
        let shuffled = Spectrum(std::array::from_fn(|i| a.0[(i + rot) % 6]));
        prop_assert!(matching_distance(&a, &shuffled) < 1e-12);
        let d_ab = matching_distance(&a, &b);
        let d_ba = matching_distance(&b, &a);
        prop_assert!((d_ab - d_ba).abs() < 1e-12);
        prop_assert!(
            matching_distance(&a, &shuffled) + d_ab >= matching_distance(&shuffled, &b) - 1e-12
        );
    }
}
