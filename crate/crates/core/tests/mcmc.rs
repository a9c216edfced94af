use shapeinv::mcmc::{run_chain, run_chain_from, ChainState, McmcConfig};
use shapeinv::model::{simulate, Dataset, SimConfig};
use shapeinv::prior::{log_lambda_weights, PriorConfig};
use shapeinv::{Complex64, DiscreteMeasure, FourierCurve, GridDensity};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// With one observation the cutoff has a closed-form posterior: given `l`,
/// `z_k ~ CN(0, 1 + xi^2)` for `|k| <= l` and `CN(0, 1)` otherwise,
/// whatever the shift. The chain's cutoff frequencies must match it.
#[test]
fn cutoff_posterior_matches_exact_marginal() {
    let z = vec![c(0.4, -0.9), c(1.1, 0.3), c(-0.5, 0.2), c(0.8, 0.9), c(0.1, -0.6), c(-1.3, 0.4), c(0.2, 0.2)];
    let data = Dataset::new(3, z.clone(), None, 0).unwrap();
    let prior = PriorConfig {
        c_lambda: 0.1,
        l_max: 3,
        ..PriorConfig::default()
    };
    let n_calib = 4.0;
    let xi2 = prior.xi_variance(n_calib).unwrap();
    let lw = log_lambda_weights(&prior);
    let mut post: Vec<f64> = (1..=3usize)
        .map(|l| {
            let mut lp = lw[l - 1];
            for k in -(l as i64)..=l as i64 {
                let a = z[(k + 3) as usize].norm_sqr();
                lp += -(1.0 + xi2).ln() - a / (1.0 + xi2) + a;
            }
            lp
        })
        .collect();
    let mx = post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    post.iter_mut().for_each(|p| *p = (*p - mx).exp());
    let tot: f64 = post.iter().sum();
    post.iter_mut().for_each(|p| *p /= tot);

    let cfg = McmcConfig {
        iterations: 402_000,
        burn_in: 2_000,
        thin: 20,
        bins: 16,
        birth_death_rate: 1.0,
        seed: 31,
        ..McmcConfig::default()
    };
    let state = ChainState::new(FourierCurve::zeros(1), vec![0.03125], &GridDensity::uniform(16)).unwrap();
    let out = run_chain_from(state, &data, &prior, n_calib, &cfg).unwrap();
    let m = out.samples.len() as f64;
    let mut counts = [0f64; 3];
    for s in &out.samples {
        counts[s.cutoff() - 1] += 1.0;
    }
    let stat: f64 = counts.iter().zip(&post).map(|(o, p)| (o - m * p).powi(2) / (m * p)).sum();
    let p_value = ChiSquared::new(2.0).unwrap().sf(stat);
    assert!(p_value > 0.001, "counts {counts:?} expected {post:?} p {p_value}");
}

#[test]
fn birth_death_mixes_with_signal_at_two() {
    let f0 = FourierCurve::from_pairs([(1, c(1.0, 0.0)), (2, c(0.8, 0.0))]);
    let g0 = DiscreteMeasure::from_atoms([(0.2, 0.5), (0.55, 0.5)]).unwrap();
    let data = simulate(&SimConfig::new(f0, g0.into(), 100, 4), 3).unwrap();
    let prior = PriorConfig {
        c_lambda: 0.2,
        ..PriorConfig::default()
    };
    let cfg = McmcConfig {
        iterations: 600,
        burn_in: 300,
        thin: 10,
        bins: 64,
        seed: 5,
        ..McmcConfig::default()
    };
    let out = run_chain(&data, &prior, 100.0, &cfg).unwrap();
    let rate = out.acceptance_rate();
    assert!(rate > 0.0 && rate < 1.0, "rate {rate}");
    // the chain settles at the true cutoff or above it
    let at_least_two = out.samples.iter().filter(|s| s.cutoff() >= 2).count();
    assert!(at_least_two * 10 >= out.samples.len() * 9);
}

#[test]
fn chains_are_reproducible_and_seed_dependent() {
    let f0 = FourierCurve::from_pairs([(1, c(1.0, 0.0))]);
    let data = simulate(&SimConfig::new(f0, DiscreteMeasure::dirac(0.3).into(), 20, 2), 1).unwrap();
    let prior = PriorConfig::default();
    let cfg = McmcConfig {
        iterations: 60,
        burn_in: 20,
        thin: 5,
        bins: 32,
        seed: 77,
        ..McmcConfig::default()
    };
    let a = run_chain(&data, &prior, 20.0, &cfg).unwrap();
    let b = run_chain(&data, &prior, 20.0, &cfg).unwrap();
    assert_eq!(a, b);
    let other = run_chain(&data, &prior, 20.0, &McmcConfig { seed: 78, ..cfg }).unwrap();
    assert_ne!(a.samples, other.samples);
    assert_eq!(a.samples.len(), 8);
}

#[test]
fn rejects_mismatched_state() {
    let data = Dataset::new(2, vec![c(0.0, 0.0); 5], None, 0).unwrap();
    let cfg = McmcConfig {
        bins: 16,
        ..McmcConfig::default()
    };
    let state = ChainState::new(FourierCurve::zeros(1), vec![0.1, 0.2], &GridDensity::uniform(16)).unwrap();
    assert!(run_chain_from(state, &data, &PriorConfig::default(), 10.0, &cfg).is_err());
    let state = ChainState::new(FourierCurve::zeros(1), vec![0.1], &GridDensity::uniform(32)).unwrap();
    assert!(run_chain_from(state, &data, &PriorConfig::default(), 10.0, &cfg).is_err());
}
