use shapeinv::model::{girsanov_log_ratio, log_ratio, simulate, MixtureModel, SimConfig};
use shapeinv::rng::substream;
use shapeinv::{Complex64, DiscreteMeasure, FourierCurve};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Trapezoid rule with step 0.8 over six real dimensions; for Gaussians the
/// rule is exact up to terms of order exp(-pi^2 / h^2).
#[test]
fn mixture_density_integrates_to_one() {
    let theta = FourierCurve::from_dense(vec![c(0.3, -0.2), c(0.5, 0.0), c(-0.4, 0.6)]).unwrap();
    let g = DiscreteMeasure::from_atoms([(0.1, 0.2), (0.45, 0.5), (0.8, 0.3)]).unwrap();
    let model = MixtureModel::new(theta, g);
    let h = 0.8;
    let nodes: Vec<f64> = (-8..=8).map(|i| i as f64 * h).collect();
    let m = nodes.len();
    let mut total = 0.0;
    let mut z = vec![c(0.0, 0.0); 3];
    for idx in 0..m.pow(6) {
        let mut r = idx;
        let mut x = [0.0; 6];
        for v in &mut x {
            *v = nodes[r % m];
            r /= m;
        }
        for k in 0..3 {
            z[k] = c(x[2 * k], x[2 * k + 1]);
        }
        total += model.log_density(&z).unwrap().exp();
    }
    total *= h.powi(6);
    assert!((total - 1.0).abs() < 1e-5, "integral {total}");
}

/// `E_{p0}[p/p0] = 1` by Monte Carlo, with observations beyond both cutoffs.
#[test]
fn likelihood_ratio_has_unit_mean() {
    let f0 = FourierCurve::from_pairs([(1, c(1.0, 0.0)), (-1, c(0.2, 0.3))]);
    let g0 = DiscreteMeasure::from_atoms([(0.2, 0.5), (0.7, 0.5)]).unwrap();
    let f = FourierCurve::from_pairs([(1, c(0.7, 0.4)), (2, c(0.3, 0.0))]);
    let g = DiscreteMeasure::from_atoms([(0.0, 0.3), (0.5, 0.7)]).unwrap();
    let p0 = MixtureModel::new(f0.clone(), g0.clone());
    let mut rng = substream(21, 0);
    let n = 200_000;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..n {
        let y = p0.sample(3, &mut rng);
        let r = girsanov_log_ratio(&f, &g, &f0, &g0, &y).unwrap().exp();
        sum += r;
        sq += r * r;
    }
    let mean = sum / n as f64;
    let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - 1.0).abs() < 4.0 * se, "mean {mean} se {se}");
}

/// The reduced log-ratio agrees with the difference of full log densities.
#[test]
fn log_ratio_matches_full_densities() {
    let p = MixtureModel::new(
        FourierCurve::from_pairs([(1, c(1.0, 0.5))]),
        DiscreteMeasure::from_atoms([(0.3, 1.0)]).unwrap(),
    );
    let q = MixtureModel::new(
        FourierCurve::from_pairs([(1, c(-0.2, 0.1))]),
        DiscreteMeasure::from_atoms([(0.1, 0.5), (0.9, 0.5)]).unwrap(),
    );
    let mut rng = substream(22, 0);
    for _ in 0..100 {
        let y = p.sample(1, &mut rng);
        let full = p.log_density(&y).unwrap() - q.log_density(&y).unwrap();
        assert!((log_ratio(&p, &q, &y).unwrap() - full).abs() < 1e-10);
    }
}

/// Averaging derotated observations recovers the template.
#[test]
fn simulated_data_derotate_to_template() {
    let f0 = FourierCurve::from_pairs([(1, c(1.5, 0.0)), (3, c(0.0, -0.5))]);
    let g0 = DiscreteMeasure::from_atoms([(0.25, 0.5), (0.5, 0.5)]).unwrap();
    let data = simulate(&SimConfig::new(f0.clone(), g0.into(), 4000, 3), 9).unwrap();
    let shifts = data.oracle_shifts().unwrap();
    for k in -3i64..=3 {
        let avg: Complex64 = (0..data.n())
            .map(|j| data.coeff(j, k) * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 * shifts[j]))
            .sum::<Complex64>()
            / data.n() as f64;
        // noise average has sd 1/sqrt(n) per complex coordinate
        assert!((avg - f0.coeff(k)).norm() < 4.0 / (data.n() as f64).sqrt(), "k={k} avg={avg}");
    }
}
