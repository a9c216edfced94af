//! The sieve prior: a random cutoff `l ~ lambda`, complex Gaussian
//! coefficients of variance `xi_n^2` on `|k| <= l`, and a Dirichlet-process
//! shift law.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::fourier::FourierCurve;
use crate::measure::{dp_sample, DpConfig, ShiftMeasure};
use crate::rng::complex_normal;

/// Calibration of the coefficient variance `xi_n^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preset {
    /// `xi_n^2 = n^{-2/(2s+2)}` for a known smoothness `s >= 1`.
    NonAdaptive(f64),
    /// `xi_n^2 = n^{-1/4} (log n)^{-zeta}`.
    Adaptive,
}

impl Preset {
    /// Parses `nonadaptive:<s>` or `adaptive`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "adaptive" {
            return Ok(Preset::Adaptive);
        }
        let smooth = s
            .strip_prefix("nonadaptive:")
            .ok_or_else(|| Error::invalid(format!("unknown prior preset '{s}'")))?;
        let v: f64 = smooth
            .parse()
            .map_err(|_| Error::invalid(format!("invalid smoothness '{smooth}'")))?;
        if !(v >= 1.0) || !v.is_finite() {
            return Err(Error::invalid(format!("smoothness must be >= 1, got {v}")));
        }
        Ok(Preset::NonAdaptive(v))
    }

    pub fn name(&self) -> String {
        match self {
            Preset::NonAdaptive(s) => format!("nonadaptive:{s}"),
            Preset::Adaptive => "adaptive".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PriorConfig {
    pub rho: f64,
    pub c_lambda: f64,
    pub l_max: usize,
    pub preset: Preset,
    /// Log exponent of the adaptive preset.
    pub zeta: f64,
    pub dp: DpConfig,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            rho: 1.5,
            c_lambda: 1.0,
            l_max: 32,
            preset: Preset::NonAdaptive(1.0),
            zeta: 1.5,
            dp: DpConfig::default(),
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 1.0 && self.rho < 2.0) {
            return Err(Error::invalid(format!("rho must lie in (1, 2), got {}", self.rho)));
        }
        if !(self.c_lambda > 0.0) || !self.c_lambda.is_finite() {
            return Err(Error::invalid("c_lambda must be positive"));
        }
        if self.l_max < 1 {
            return Err(Error::invalid("l_max must be at least 1"));
        }
        if let Preset::NonAdaptive(s) = self.preset {
            if !(s >= 1.0) {
                return Err(Error::invalid(format!("smoothness must be >= 1, got {s}")));
            }
        }
        if !self.zeta.is_finite() {
            return Err(Error::invalid("zeta must be finite"));
        }
        self.dp.validate()
    }

    /// `xi_n^2` for this configuration's preset and `zeta`.
    pub fn xi_variance(&self, n: f64) -> Result<f64> {
        xi_variance_with_zeta(n, self.preset, self.zeta)
    }
}

/// Unnormalized `log lambda(l) = -c l^2 (log l)^rho` for `l = 1..=l_max`.
pub fn log_lambda_weights(cfg: &PriorConfig) -> Vec<f64> {
    (1..=cfg.l_max)
        .map(|l| {
            let lf = l as f64;
            -cfg.c_lambda * lf * lf * lf.ln().powf(cfg.rho)
        })
        .collect()
}

/// `lambda(l)` for `l = 1..=l_max` (entry `i` is `l = i + 1`).
pub fn lambda_pmf(cfg: &PriorConfig) -> Vec<f64> {
    let lw = log_lambda_weights(cfg);
    // the largest weight is at l = 1 (log weight 0), so no overflow
    let w: Vec<f64> = lw.iter().map(|x| x.exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

pub fn xi_variance(n: f64, preset: Preset) -> Result<f64> {
    xi_variance_with_zeta(n, preset, 1.5)
}

pub fn xi_variance_with_zeta(n: f64, preset: Preset, zeta: f64) -> Result<f64> {
    if !(n >= 2.0) || !n.is_finite() {
        return Err(Error::invalid(format!("sample size must be >= 2, got {n}")));
    }
    Ok(match preset {
        Preset::NonAdaptive(s) => n.powf(-2.0 / (2.0 * s + 2.0)),
        Preset::Adaptive => n.powf(-0.25) * n.ln().powf(-zeta),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PriorDraw {
    pub cutoff: usize,
    pub theta: FourierCurve,
    pub g: ShiftMeasure,
}

/// Draws `(l, theta, g)` from the prior calibrated for sample size `n`.
pub fn sample_prior<R: Rng + ?Sized>(cfg: &PriorConfig, n: f64, rng: &mut R) -> Result<PriorDraw> {
    cfg.validate()?;
    let xi2 = cfg.xi_variance(n)?;
    let pmf = lambda_pmf(cfg);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut cutoff = cfg.l_max;
    for (i, p) in pmf.iter().enumerate() {
        acc += p;
        if u < acc {
            cutoff = i + 1;
            break;
        }
    }
    let xi = xi2.sqrt();
    let coeffs = (0..2 * cutoff + 1).map(|_| xi * complex_normal(rng)).collect();
    let theta = FourierCurve::from_dense(coeffs)?;
    let g = dp_sample(&cfg.dp, rng)?.into();
    Ok(PriorDraw { cutoff, theta, g })
}

/// Membership in the sieve: `l <= k_n` and `|theta|^2 <= 4 k_n + 2`.
pub fn sieve_indicator(draw: &PriorDraw, k_n: usize) -> bool {
    draw.cutoff <= k_n && draw.theta.l2_norm().powi(2) <= (4 * k_n + 2) as f64
}

/// Upper bound on the prior mass outside the sieve: the `lambda` mass above
/// `k_n` plus `P(|theta|^2 > 4 k_n + 2 | l = k_n)`. Given `l`,
/// `2 |theta|^2 / xi^2` is chi-square with `2 (2 l + 1)` degrees of freedom,
/// and the conditional tail is largest at `l = k_n`.
pub fn sieve_complement_bound(cfg: &PriorConfig, n: f64, k_n: usize) -> Result<f64> {
    cfg.validate()?;
    if k_n < 1 {
        return Err(Error::invalid("k_n must be at least 1"));
    }
    let xi2 = cfg.xi_variance(n)?;
    let pmf = lambda_pmf(cfg);
    let lambda_tail: f64 = pmf.iter().skip(k_n).sum();
    let dof = 2.0 * (2 * k_n + 1) as f64;
    let chi = ChiSquared::new(dof).map_err(|e| Error::invalid(e.to_string()))?;
    let norm_tail = chi.sf(2.0 * (4 * k_n + 2) as f64 / xi2);
    Ok((lambda_tail + norm_tail).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use num_complex::Complex64;

    #[test]
    fn lambda_pmf_shape() {
        let cfg = PriorConfig::default();
        let pmf = lambda_pmf(&cfg);
        assert_eq!(pmf.len(), 32);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for w in pmf[1..].windows(2) {
            assert!(w[1] < w[0] || w[1] == 0.0);
        }
        let expect = (-4.0 * 2f64.ln().powf(1.5)).exp();
        assert!((pmf[1] / pmf[0] - expect).abs() < 1e-14);
    }

    #[test]
    fn xi_variance_examples() {
        assert!((xi_variance(100.0, Preset::NonAdaptive(1.0)).unwrap() - 0.1).abs() < 1e-15);
        assert!((xi_variance(256.0, Preset::NonAdaptive(3.0)).unwrap() - 0.25).abs() < 1e-15);
        let e4 = 4f64.exp();
        let expect = (-1f64).exp() / 8.0;
        assert!((xi_variance(e4, Preset::Adaptive).unwrap() - expect).abs() < 1e-15);
        assert!(xi_variance(1.0, Preset::Adaptive).is_err());
    }

    #[test]
    fn preset_parsing() {
        assert_eq!(Preset::parse("adaptive").unwrap(), Preset::Adaptive);
        assert_eq!(Preset::parse("nonadaptive:2").unwrap(), Preset::NonAdaptive(2.0));
        assert!(Preset::parse("nonadaptive:0.5").is_err());
        assert!(Preset::parse("other").is_err());
        let p = Preset::NonAdaptive(1.5);
        assert_eq!(Preset::parse(&p.name()).unwrap(), p);
    }

    #[test]
    fn config_validation() {
        let mut cfg = PriorConfig::default();
        cfg.rho = 2.0;
        assert!(cfg.validate().is_err());
        cfg.rho = 1.2;
        cfg.l_max = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sieve_examples() {
        let mut theta = FourierCurve::zeros(2);
        theta.set_coeff(0, Complex64::new(3.0, 0.0)).unwrap();
        let draw = PriorDraw {
            cutoff: 2,
            theta,
            g: crate::measure::DiscreteMeasure::dirac(0.0).into(),
        };
        assert!(sieve_indicator(&draw, 2));
        assert!(!sieve_indicator(&draw, 1));
    }

    #[test]
    fn prior_draws_match_lambda_and_xi() {
        let cfg = PriorConfig::default();
        let n = 100.0;
        let xi2 = cfg.xi_variance(n).unwrap();
        let mut rng = substream(8, 0);
        let draws = 10_000;
        let mut ones = 0usize;
        let mut sq = Vec::with_capacity(draws);
        for _ in 0..draws {
            let d = sample_prior(&cfg, n, &mut rng).unwrap();
            assert_eq!(d.theta.cutoff(), d.cutoff);
            if d.cutoff == 1 {
                ones += 1;
            }
            sq.push(d.theta.coeff(1).norm_sqr());
        }
        let p1 = lambda_pmf(&cfg)[0];
        let se = (p1 * (1.0 - p1) / draws as f64).sqrt();
        assert!((ones as f64 / draws as f64 - p1).abs() < 3.0 * se);
        let mean = sq.iter().sum::<f64>() / draws as f64;
        // |theta_1|^2 is exponential with mean xi^2, so its sd is xi^2
        assert!((mean - xi2).abs() < 3.0 * xi2 / (draws as f64).sqrt());
    }

    #[test]
    fn sieve_complement_bound_dominates_monte_carlo() {
        let mut cfg = PriorConfig::default();
        cfg.c_lambda = 0.2;
        cfg.dp.truncation = 2;
        let mut rng = substream(9, 0);
        for &n in &[4.0, 50.0] {
            let mut prev = f64::INFINITY;
            for k_n in 1..=3 {
                let draws = 20_000;
                let out = (0..draws)
                    .filter(|_| !sieve_indicator(&sample_prior(&cfg, n, &mut rng).unwrap(), k_n))
                    .count() as f64
                    / draws as f64;
                let bound = sieve_complement_bound(&cfg, n, k_n).unwrap();
                let se = (out * (1.0 - out) / draws as f64).sqrt();
                assert!(out <= bound + 3.0 * se, "n={n} k={k_n} mc={out} bound={bound}");
                assert!(out <= prev + 3.0 * se);
                prev = out;
            }
        }
    }
}
