use proptest::prelude::*;

use neumann_sieve::cell::{extrapolate, radial_capacity, TailModel};
use neumann_sieve::energy::{extrapolate_triple, Density, EnergyDensity};
use neumann_sieve::mesh::graded_axis;
use neumann_sieve::mesh::Field;
use neumann_sieve::regime::{
    assemble_limit, build_film, classify, direct_film_energy, poincare_check, FilmSpec, GridField, LimitValue, PhiTable, PlanarGrid,
    Profile, RegimeSequences, Sequence, Shape,
};

fn small() -> ProptestConfig {
    ProptestConfig { cases: 32, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(small())]

    #[test]
    fn power_density_is_homogeneous(f in prop::collection::vec(-3.0f64..3.0, 6), lambda in 0.1f64..4.0, p in 1.2f64..3.0) {
        let w = EnergyDensity::power(2, 3, p).unwrap();
        let scaled: Vec<f64> = f.iter().map(|x| x * lambda).collect();
        let (a, b) = (w.value(&f, 0.0), w.value(&scaled, 0.0));
        prop_assert!(a >= 0.0);
        prop_assert!((b - lambda.powf(p) * a).abs() <= 1e-12 * (1.0 + b));
    }

    #[test]
    fn power_gradient_matches_differences(f in prop::collection::vec(0.2f64..2.0, 3), p in 1.5f64..3.0) {
        let w = EnergyDensity::power(1, 3, p).unwrap();
        let mut g = vec![0.0; 3];
        w.gradient(&f, 0.0, &mut g);
        for k in 0..3 {
            let h = 1e-6;
            let (mut a, mut b) = (f.clone(), f.clone());
            a[k] += h;
            b[k] -= h;
            let fd = (w.value(&a, 0.0) - w.value(&b, 0.0)) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() < 1e-6 * (1.0 + g[k].abs()));
        }
    }

    #[test]
    fn graded_axes_are_nested(n1 in 2usize..6, extra in 1usize..5, h in 0.1f64..0.6, grading in 1.0f64..1.3) {
        let small: Vec<f64> = (1..=n1).map(|k| k as f64).collect();
        let large: Vec<f64> = (1..=n1 + extra).map(|k| k as f64).collect();
        let with_zero = |b: &[f64]| [vec![0.0], b.to_vec()].concat();
        let a = graded_axis(&with_zero(&small), 1.0, h, grading, h / 32.0);
        let b = graded_axis(&with_zero(&large), 1.0, h, grading, h / 32.0);
        prop_assert_eq!(&b[..a.len()], &a[..]);
        prop_assert!(b.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(b.windows(2).all(|w| w[1] - w[0] <= 1.5 * h * (1.0 + 1e-9)));
        for br in &large {
            prop_assert!(b.contains(br));
        }
    }

    #[test]
    fn capacity_decreases_with_outer_radius(d in 2usize..5, p_frac in 0.05f64..0.95, r in 1.1f64..50.0) {
        let p = 1.0 + p_frac * (d as f64 - 1.0);
        let near = radial_capacity(d, p, 1.0, r).unwrap();
        let far = radial_capacity(d, p, 1.0, 2.0 * r).unwrap();
        let inf = radial_capacity(d, p, 1.0, f64::INFINITY).unwrap();
        prop_assert!(near >= far && far >= inf && inf > 0.0);
        // the gap to the exterior capacity scales like r^{-(d-p)/(p-1)}
        if r.powf(-(d as f64 - p) / (p - 1.0)) > 1e-10 {
            prop_assert!(near > inf);
        }
    }

    #[test]
    fn quadratic_capacity_in_three_dimensions(r in 1.01f64..100.0) {
        // independent oracle: 4π / ∫_1^R s^{-2} ds
        let c = radial_capacity(3, 2.0, 1.0, r).unwrap();
        let oracle = 4.0 * std::f64::consts::PI / (1.0 - 1.0 / r);
        prop_assert!((c - oracle).abs() / oracle < 1e-12);
    }

    #[test]
    fn power_tail_is_recovered(limit in 0.5f64..10.0, a in 0.1f64..5.0, q in 0.5f64..2.0) {
        let n = [2.0, 4.0, 8.0, 16.0];
        let phi: Vec<f64> = n.iter().map(|x: &f64| limit + a * x.powf(-q)).collect();
        let e = extrapolate(&n, &phi, q, TailModel::Power).unwrap();
        prop_assert!((e.limit - limit).abs() < 1e-9 * limit);
    }

    #[test]
    fn triple_extrapolation_is_exact(limit in -2.0f64..2.0, c in 0.1f64..3.0, q in 0.5f64..2.5) {
        let r: [f64; 3] = [1e-1, 1e-2, 1e-3];
        let a = r.map(|x| limit + c * x.powf(q));
        let (l, rate) = extrapolate_triple(r, a).unwrap();
        prop_assert!((l - limit).abs() < 1e-7, "{} vs {}", l, limit);
        prop_assert!((rate.unwrap() - q).abs() < 1e-4);
    }

    #[test]
    fn finite_schedules_satisfy_scaling_identity(a in 1.0f64..3.0, b_over in 1.05f64..3.0, p in 1.1f64..1.9) {
        // r/δ = 1.5 for every j, so R0 = 1.5 Rℓ whenever both are finite
        let b = b_over;
        let seq = RegimeSequences {
            eps: Sequence::power(2.0, -1.0),
            delta: Sequence::Exponent { coef: a, base: 2.0, exponent: -b },
            r: Sequence::Exponent { coef: a * 1.5, base: 2.0, exponent: -b },
            n: 3,
            p,
        };
        let rep = classify(&seq).unwrap();
        match rep.ell {
            LimitValue::Finite(l) => prop_assert!((l - 1.5).abs() < 1e-9),
            other => prop_assert!(false, "ell = {:?}", other),
        }
        if let (LimitValue::Finite(re), LimitValue::Finite(rz)) = (rep.r_ell, rep.r_zero) {
            prop_assert!((rz - 1.5 * re).abs() <= 1e-9 * rz);
        }
    }

    #[test]
    fn poincare_ratio_is_scale_free(rho in 1e-4f64..1.0, delta in 1e-4f64..1.0, p in 1.2f64..3.0) {
        let base = poincare_check(Shape::Ball, p, &[1.0], &[1.0], &[Profile::Mixed], 12).unwrap();
        let rep = poincare_check(Shape::Ball, p, &[rho], &[delta], &[Profile::Mixed], 12).unwrap();
        prop_assert!((rep.rows[0].ratio - base.rows[0].ratio).abs() < 1e-9 * base.rows[0].ratio);
    }

    #[test]
    fn constant_layers_cost_r_phi(c in -3.0f64..3.0, r in 0.0f64..5.0, unit in 0.1f64..10.0) {
        let grid = PlanarGrid::new(0.0, 2.0, -1.0, 0.5, 5, 3).unwrap();
        let w = EnergyDensity::power(1, 2, 1.5).unwrap();
        let up = GridField::from_fn(grid, 1, |_, _, o| o[0] = c);
        let lo = GridField::from_fn(grid, 1, |_, _, o| o[0] = 0.0);
        let phi = PhiTable::Homogeneous { p: 1.5, unit_value: unit };
        let e = assemble_limit(&up, &lo, &w, r, &phi).unwrap();
        let oracle = 3.0 * r * unit * c.abs().powf(1.5);
        prop_assert!((e - oracle).abs() <= 1e-12 * (1.0 + oracle));
    }

    #[test]
    fn affine_films_match_closed_form(gx in -2.0f64..2.0, gy in -2.0f64..2.0) {
        let spec = FilmSpec::new([0.0, 0.5, 0.0, 0.5], 0.25, 0.05, 0.05, 0.025).unwrap();
        let film = build_film(&spec, 1_000_000).unwrap();
        let w = EnergyDensity::power(1, 3, 1.5).unwrap();
        let u = Field::from_fn(&film.mesh, 1, |_, x, _, o| o[0] = gx * x[0] + gy * x[1]);
        let e = direct_film_energy(&film, &w, &u).unwrap();
        let oracle = 2.0 * 0.25 * (gx * gx + gy * gy).powf(0.75);
        prop_assert!((e - oracle).abs() <= 1e-10 * (1.0 + oracle), "{} vs {}", e, oracle);
    }
}
