use optlin_core::estimation::{nonlinearity_gap, optimal_estimator};
use optlin_core::matching::{matching_moments, MomentSequence};
use optlin_core::spectral::{char_fn, fractional_power};
use optlin_core::vector::{check_decorrelation, linearity_transform, wiener_matrix};
use optlin_core::{distributions, CovPair, DensityGrid, Distribution, Mat2, Problem};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Distribution> {
    (0usize..4, 0.2f64..3.0).prop_map(|(k, s)| match k {
        0 => Distribution::gaussian(s).unwrap(),
        1 => Distribution::uniform(s).unwrap(),
        2 => Distribution::laplace(s).unwrap(),
        _ => Distribution::triangular(s).unwrap(),
    })
}

fn spd() -> impl Strategy<Value = Mat2> {
    (0.2f64..3.0, 0.2f64..3.0, -0.9f64..0.9).prop_map(|(a, b, rho)| {
        let c = rho * (a * b).sqrt();
        Mat2::new(a, c, c, b)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn odd_moments_vanish(d in family(), k in 0usize..5) {
        prop_assert_eq!(d.moment(2 * k + 1).unwrap(), 0.0);
    }

    #[test]
    fn densities_are_even(d in family(), x in -5.0f64..5.0) {
        prop_assert_eq!(d.density(x), d.density(-x));
    }

    #[test]
    fn variance_scales_quadratically(d in family(), c in 0.3f64..3.0) {
        let s = d.scaled(c).unwrap();
        prop_assert!((s.variance() - c * c * d.variance()).abs() < 1e-12 * s.variance());
    }

    #[test]
    fn wiener_identity(rx in spd(), rz in spd()) {
        let c = CovPair::new(rx, rz).unwrap();
        let k = wiener_matrix(&c);
        let lhs = (Mat2::IDENTITY - k).inverse().unwrap() * k;
        let rhs = rx * rz.inverse().unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10 * rhs.norm());
    }

    #[test]
    fn transform_diagonalizes_both(rx in spd(), rz in spd()) {
        let c = CovPair::new(rx, rz).unwrap();
        let t = linearity_transform(&c);
        prop_assert!(check_decorrelation(&t, &c).pass);
        prop_assert!(t.lambda[0] >= t.lambda[1] && t.lambda[1] > 0.0);
        let back = t.u.inverse().unwrap() * t.lambda_matrix() * t.u;
        let target = rx * rz.inverse().unwrap();
        prop_assert!((back - target).norm() < 1e-10 * target.norm());
        for i in 0..2 {
            let r = t.u.row(i);
            prop_assert!(((r[0] * r[0] + r[1] * r[1]).sqrt() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn unit_exponent_reproduces_noise_moments(d in family(), depth in 1usize..8) {
        let z = MomentSequence::of(&d, depth + 1).unwrap();
        let x = matching_moments(&z, 1.0, depth).unwrap();
        for k in 1..=depth + 1 {
            let (a, b) = (x.moment(k).unwrap(), z.moment(k).unwrap());
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "k = {}: {} vs {}", k, a, b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fractional_powers_compose(
        v in 0.3f64..2.0,
        a in 0.2f64..3.0,
        b in 0.2f64..3.0,
        lap in any::<bool>(),
    ) {
        let d = if lap { Distribution::laplace(v) } else { Distribution::gaussian(v) }.unwrap();
        let f = char_fn(&d, 3.0 / v.sqrt(), 256).unwrap();
        let two = fractional_power(&fractional_power(&f, a).unwrap(), b).unwrap();
        let one = fractional_power(&f, a * b).unwrap();
        prop_assert!(one.sup_distance(&two, f64::INFINITY).unwrap() < 1e-10);
    }

    #[test]
    fn tabulated_transform_is_conjugate_symmetric(
        vals in prop::collection::vec(0.0f64..1.0, 16..48),
        x_min in -2.0f64..0.0,
    ) {
        prop_assume!(vals.iter().sum::<f64>() > 0.1);
        let g = DensityGrid::new(x_min, 0.05, vals).unwrap();
        let f = char_fn(&Distribution::tabulated(g), 10.0, 128).unwrap();
        let z = f.zero_index();
        for j in 1..z {
            let (p, m) = (f.values()[z + j], f.values()[z - j]);
            prop_assert!((p - m.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn self_convolution_adds_variance(d in family(), n in 2u32..5) {
        let step = 0.01 * d.std_dev();
        let g = d.lattice(step).unwrap();
        let c = distributions::self_convolve(&Distribution::tabulated(g.clone()), n).unwrap();
        let want = n as f64 * g.variance();
        prop_assert!((c.variance() - want).abs() < 1e-9 * want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn optimal_never_loses_to_linear(x in family(), z in family(), gamma in 0.1f64..10.0) {
        let p = Problem::at_snr(x, &z, gamma).unwrap().with_step(0.02).unwrap();
        let gap = nonlinearity_gap(&p).unwrap();
        prop_assert!(gap >= -1e-9, "gap {}", gap);
    }

    #[test]
    fn estimator_is_odd(x in family(), z in family(), gamma in 0.1f64..10.0) {
        let p = Problem::at_snr(x, &z, gamma).unwrap().with_step(0.02).unwrap();
        let grid = p.default_obs_grid().unwrap();
        let h = optimal_estimator(&p, &grid).unwrap();
        let v = h.values();
        let n = v.len();
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..n / 2 {
            prop_assert!((v[i] + v[n - 1 - i]).abs() <= 1e-9 * scale, "index {}", i);
        }
    }
}
