use proptest::prelude::*;

use shapeinv::certify::{bracket_count, bracket_envelope, chi_square_true_tail};
use shapeinv::divergence::{gauss_hellinger, gauss_tv, DivergenceKind};
use shapeinv::mcmc::quantile;
use shapeinv::measure::{bin_mass, circle_distance, eta_merge};
use shapeinv::model::MixtureModel;
use shapeinv::prior::{lambda_pmf, PriorConfig};
use shapeinv::{Complex64, DiscreteMeasure, FourierCurve, ShiftMeasure};

fn curve(max_cutoff: usize) -> impl Strategy<Value = FourierCurve> {
    (0..=max_cutoff).prop_flat_map(|l| {
        prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 2 * l + 1)
            .prop_map(|v| FourierCurve::from_dense(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap())
    })
}

fn atoms() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..1.0f64, 0.01..1.0f64), 1..8)
}

fn point(dim: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-4.0..4.0f64, -4.0..4.0f64), dim)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shifts_preserve_norms_and_compose(f in curve(5), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let s = f.shifted(a);
        prop_assert!((s.l2_norm() - f.l2_norm()).abs() < 1e-12);
        prop_assert!((s.h1_norm() - f.h1_norm()).abs() < 1e-12);
        let ab = f.shifted(a).shifted(b);
        let direct = f.shifted(a + b);
        prop_assert!(ab.l2_distance(&direct) < 1e-12);
        prop_assert!(f.shifted(1.0).l2_distance(&f) < 1e-12);
    }

    #[test]
    fn projection_splits_energy(f in curve(6), l in 0usize..6) {
        let (p, tail) = f.project(l);
        prop_assert!((p.l2_norm().powi(2) + tail * tail - f.l2_norm().powi(2)).abs() < 1e-9);
        prop_assert!(p.cutoff() <= l);
    }

    #[test]
    fn gaussian_distances_are_bounded_metrics((z1, z2) in (1usize..4).prop_flat_map(|d| (point(d), point(d)))) {
        let tv = gauss_tv(&z1, &z2).unwrap();
        let h = gauss_hellinger(&z1, &z2).unwrap();
        prop_assert!((0.0..=1.0).contains(&tv));
        prop_assert!((0.0..=2f64.sqrt()).contains(&h));
        prop_assert!((tv - gauss_tv(&z2, &z1).unwrap()).abs() < 1e-15);
        // distance chain for the closed forms
        prop_assert!(0.5 * h * h <= tv + 1e-12);
        prop_assert!(tv <= h + 1e-12);
        let d: f64 = z1.iter().zip(&z2).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(tv <= d / std::f64::consts::PI.sqrt() + 1e-12);
    }

    #[test]
    fn discrete_measures_are_probabilities(a in atoms(), r in -10i64..10) {
        let g = DiscreteMeasure::from_atoms(a).unwrap();
        let total: f64 = g.atoms().iter().map(|x| x.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(g.atoms().windows(2).all(|w| w[0].location < w[1].location));
        prop_assert!(g.moment(r).norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn eta_merge_separates_and_keeps_mass(a in atoms(), eta in 0.01..0.2f64) {
        let g = DiscreteMeasure::from_atoms(a).unwrap();
        let m = eta_merge(&g, eta).unwrap();
        let total: f64 = m.atoms().iter().map(|x| x.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        if m.len() > 1 {
            let locs: Vec<f64> = m.locations().collect();
            for i in 0..locs.len() {
                for j in i + 1..locs.len() {
                    prop_assert!(circle_distance(locs[i], locs[j]) >= eta - 1e-12);
                }
            }
            let masses = bin_mass(&ShiftMeasure::Discrete(g), &locs, eta).unwrap();
            prop_assert!(masses.iter().sum::<f64>() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn lambda_pmf_is_decreasing(rho in 1.05..1.95f64, c in 0.05..3.0f64, l_max in 1usize..40) {
        let cfg = PriorConfig { rho, c_lambda: c, l_max, ..PriorConfig::default() };
        let pmf = lambda_pmf(&cfg);
        prop_assert_eq!(pmf.len(), l_max);
        prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(pmf.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn quantile_is_monotone(v in prop::collection::vec(-5.0..5.0f64, 1..40), q1 in 0.0..1.0f64, q2 in 0.0..1.0f64) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let a = quantile(&v, lo).unwrap();
        let b = quantile(&v, hi).unwrap();
        prop_assert!(a <= b);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(min <= a && b <= max);
    }

    #[test]
    fn bracket_count_dominates_envelope(f in curve(3), eps in 0.05..0.7f64) {
        let k = bracket_count(&f, eps);
        prop_assert!(k >= 1);
        prop_assert!(k as f64 >= bracket_envelope(&f, eps));
    }

    #[test]
    fn chi_square_tail_decreases(k in 1usize..60, c1 in 0.0..3.0f64, c2 in 0.0..3.0f64) {
        let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        prop_assert!(chi_square_true_tail(k, hi).unwrap() <= chi_square_true_tail(k, lo).unwrap() + 1e-15);
    }

    #[test]
    fn mixture_density_is_shift_equivariant(f in curve(3), a in atoms(), phi in 0.0..1.0f64, z in point(7)) {
        // rotating both the observation and the shift law leaves the density unchanged
        let l = f.cutoff();
        let z: Vec<Complex64> = z[3 - l..=3 + l].to_vec();
        let g = DiscreteMeasure::from_atoms(a.clone()).unwrap();
        let moved = DiscreteMeasure::from_atoms(a.into_iter().map(|(x, w)| (x + phi, w))).unwrap();
        let zr: Vec<Complex64> = z
            .iter()
            .enumerate()
            .map(|(i, c)| c * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (i as f64 - l as f64) * phi))
            .collect();
        let d1 = MixtureModel::new(f.clone(), g).log_density(&z).unwrap();
        let d2 = MixtureModel::new(f, moved).log_density(&zr).unwrap();
        prop_assert!((d1 - d2).abs() < 1e-9);
    }

    #[test]
    fn divergence_names_round_trip(d in 0.01..1.0f64, i in 0usize..5) {
        let kind = [
            DivergenceKind::Hellinger,
            DivergenceKind::TotalVariation,
            DivergenceKind::KullbackLeibler,
            DivergenceKind::V,
            DivergenceKind::MDelta(d),
        ][i];
        prop_assert_eq!(DivergenceKind::parse(&kind.name()).unwrap(), kind);
    }
}
