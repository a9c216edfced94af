//! Simulation and likelihood of the shifted-curve model in the Fourier domain.
//!
//! Observation `j` is the coefficient vector `theta0 . tau_j + sigma xi_j` on
//! frequencies `|l| <= L_obs`. With `sigma = 1` its law is the location
//! mixture `sum_i p_i gamma(z - theta . phi_i)`, `gamma(z) = pi^{-p} exp(-|z|^2)`.
//! Frequencies above a model's cutoff are pure noise, so densities are
//! evaluated on any observation cutoff at least as large as the model's.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{unit_powers, FourierCurve};
use crate::measure::{DiscreteMeasure, ShiftMeasure};
use crate::rng::{complex_normal, log_sum_exp, substream};

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub f0: FourierCurve,
    pub g0: ShiftMeasure,
    pub n: usize,
    pub l_obs: usize,
    pub noise_scale: f64,
}

impl SimConfig {
    pub fn new(f0: FourierCurve, g0: ShiftMeasure, n: usize, l_obs: usize) -> Self {
        SimConfig {
            f0,
            g0,
            n,
            l_obs,
            noise_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("need at least one observation"));
        }
        if self.l_obs < self.f0.cutoff() {
            return Err(Error::invalid(format!(
                "observation cutoff {} below template cutoff {}",
                self.l_obs,
                self.f0.cutoff()
            )));
        }
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return Err(Error::invalid("noise scale must be finite and non-negative"));
        }
        Ok(())
    }
}

/// `n` observed coefficient vectors, stored row-major on frequencies
/// `-cutoff..=cutoff`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    cutoff: usize,
    coeffs: Vec<Complex64>,
    oracle_shifts: Option<Vec<f64>>,
    seed: u64,
}

impl Dataset {
    pub fn new(
        cutoff: usize,
        coeffs: Vec<Complex64>,
        oracle_shifts: Option<Vec<f64>>,
        seed: u64,
    ) -> Result<Self> {
        let dim = 2 * cutoff + 1;
        if !coeffs.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: coeffs.len() % dim,
            });
        }
        if let Some(s) = &oracle_shifts {
            if s.len() != coeffs.len() / dim {
                return Err(Error::DimensionMismatch {
                    expected: coeffs.len() / dim,
                    got: s.len(),
                });
            }
        }
        Ok(Dataset {
            cutoff,
            coeffs,
            oracle_shifts,
            seed,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn n(&self) -> usize {
        self.coeffs.len() / self.dim()
    }

    pub fn row(&self, j: usize) -> &[Complex64] {
        let d = self.dim();
        &self.coeffs[j * d..(j + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.coeffs.chunks_exact(self.dim())
    }

    /// Observation `j` at frequency `k`.
    pub fn coeff(&self, j: usize, k: i64) -> Complex64 {
        self.row(j)[(k + self.cutoff as i64) as usize]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn oracle_shifts(&self) -> Option<&[f64]> {
        self.oracle_shifts.as_deref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Keeps only frequencies `|k| <= cutoff`.
    pub fn truncated(&self, cutoff: usize) -> Result<Dataset> {
        if cutoff > self.cutoff {
            return Err(Error::invalid(format!(
                "cannot extend observation cutoff {} to {cutoff}",
                self.cutoff
            )));
        }
        let off = self.cutoff - cutoff;
        let d = 2 * cutoff + 1;
        let coeffs = self
            .rows()
            .flat_map(|r| r[off..off + d].iter().copied())
            .collect();
        Dataset::new(cutoff, coeffs, self.oracle_shifts.clone(), self.seed)
    }
}

fn draw_shift<R: Rng + ?Sized>(g: &ShiftMeasure, cumulative: &[f64], rng: &mut R) -> f64 {
    match g {
        ShiftMeasure::Discrete(d) => d.sample_location(cumulative, rng),
        ShiftMeasure::Grid(grid) => grid.sample_location(rng),
    }
}

/// Simulates a dataset. Observation `j` uses the random substream `j` of
/// `seed`, so the output does not depend on thread scheduling.
pub fn simulate(cfg: &SimConfig, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    let theta = cfg.f0.padded(cfg.l_obs)?;
    let cumulative = match &cfg.g0 {
        ShiftMeasure::Discrete(d) => d.cumulative(),
        ShiftMeasure::Grid(_) => Vec::new(),
    };
    let rows: Vec<(f64, Vec<Complex64>)> = (0..cfg.n)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(seed, j as u64);
            let tau = draw_shift(&cfg.g0, &cumulative, &mut rng);
            let mean = theta.shifted(tau);
            let row = mean
                .as_slice()
                .iter()
                .map(|&m| m + cfg.noise_scale * complex_normal(&mut rng))
                .collect();
            (tau, row)
        })
        .collect();
    let mut shifts = Vec::with_capacity(cfg.n);
    let mut coeffs = Vec::with_capacity(cfg.n * theta.dim());
    for (tau, row) in rows {
        shifts.push(tau);
        coeffs.extend(row);
    }
    Dataset::new(cfg.l_obs, coeffs, Some(shifts), seed)
}

/// The mixture law `P_{theta, g}` with unit noise.
#[derive(Clone, Debug)]
pub struct MixtureModel {
    theta: FourierCurve,
    g: DiscreteMeasure,
    log_weights: Vec<f64>,
    cumulative: Vec<f64>,
    theta_sq: f64,
}

impl MixtureModel {
    pub fn new(theta: FourierCurve, g: DiscreteMeasure) -> Self {
        let log_weights = g.atoms().iter().map(|a| a.weight.ln()).collect();
        let cumulative = g.cumulative();
        let theta_sq = theta.l2_norm().powi(2);
        MixtureModel {
            theta,
            g,
            log_weights,
            cumulative,
            theta_sq,
        }
    }

    /// Grid densities are replaced by atoms at their bin centers.
    pub fn from_shift_measure(theta: FourierCurve, g: &ShiftMeasure) -> Self {
        MixtureModel::new(theta, g.to_discrete())
    }

    pub fn theta(&self) -> &FourierCurve {
        &self.theta
    }

    pub fn g(&self) -> &DiscreteMeasure {
        &self.g
    }

    pub fn cutoff(&self) -> usize {
        self.theta.cutoff()
    }

    /// `log p(z)` for `dim(z) = 2 * cutoff + 1`.
    pub fn log_density(&self, z: &[Complex64]) -> Result<f64> {
        if z.len() != self.theta.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.theta.dim(),
                got: z.len(),
            });
        }
        Ok(self.log_density_any(z))
    }

    /// `log p(z)` for any odd `dim(z) >= 2 * cutoff + 1`, the extra
    /// coordinates being standard noise.
    pub(crate) fn log_density_any(&self, z: &[Complex64]) -> f64 {
        let p = z.len() as f64;
        let zsq: f64 = z.iter().map(|c| c.norm_sqr()).sum();
        -p * PI.ln() - zsq + self.log_density_reduced(z, &mut DensityScratch::default())
    }

    /// `log p(z) + p log(pi) + |z|^2`, the part that depends on the parameters.
    /// Differences of this quantity between models give exact log-likelihood ratios.
    pub(crate) fn log_density_reduced(&self, z: &[Complex64], scratch: &mut DensityScratch) -> f64 {
        let l = self.theta.cutoff();
        let zl = z.len() / 2;
        debug_assert!(zl >= l);
        let th = self.theta.as_slice();
        // a_k = z_k conj(theta_k); the cross term is 2 re sum_k a_k e^{i 2 pi k phi}
        scratch.a.clear();
        for k in 0..=2 * l {
            scratch.a.push(z[zl - l + k] * th[k].conj());
        }
        scratch.terms.clear();
        for (atom, &lw) in self.g.atoms().iter().zip(&self.log_weights) {
            unit_powers(atom.location, l, &mut scratch.pw);
            let mut cross = scratch.a[l].re;
            for k in 1..=l {
                cross += (scratch.a[l + k] * scratch.pw[k]).re + (scratch.a[l - k] * scratch.pw[k].conj()).re;
            }
            scratch.terms.push(lw + 2.0 * cross);
        }
        log_sum_exp(&scratch.terms) - self.theta_sq
    }

    /// Draws one observation on the cutoff `obs_cutoff >= cutoff`.
    pub fn sample<R: Rng + ?Sized>(&self, obs_cutoff: usize, rng: &mut R) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(2 * obs_cutoff + 1);
        self.sample_into(obs_cutoff, rng, &mut out);
        out
    }

    pub(crate) fn sample_into<R: Rng + ?Sized>(&self, obs_cutoff: usize, rng: &mut R, out: &mut Vec<Complex64>) {
        let phi = self.g.sample_location(&self.cumulative, rng);
        let mean = self.theta.shifted(phi);
        let l = self.theta.cutoff() as i64;
        out.clear();
        for k in -(obs_cutoff as i64)..=obs_cutoff as i64 {
            let m = if k.abs() <= l {
                mean.as_slice()[(k + l) as usize]
            } else {
                Complex64::new(0.0, 0.0)
            };
            out.push(m + complex_normal(rng));
        }
    }
}

#[derive(Default)]
pub(crate) struct DensityScratch {
    a: Vec<Complex64>,
    pw: Vec<Complex64>,
    terms: Vec<f64>,
}

/// `log sum_i p_i gamma(z - theta . phi_i)`.
pub fn mixture_log_density(theta: &FourierCurve, g: &DiscreteMeasure, z: &[Complex64]) -> Result<f64> {
    MixtureModel::new(theta.clone(), g.clone()).log_density(z)
}

/// `log p_{f,g}(y) - log p_{f0,g0}(y)`. Curves with a smaller cutoff than `y`
/// are zero padded; a larger cutoff is a dimension error.
pub fn girsanov_log_ratio(
    f: &FourierCurve,
    g: &DiscreteMeasure,
    f0: &FourierCurve,
    g0: &DiscreteMeasure,
    y: &[Complex64],
) -> Result<f64> {
    let p = MixtureModel::new(f.clone(), g.clone());
    let p0 = MixtureModel::new(f0.clone(), g0.clone());
    log_ratio(&p, &p0, y)
}

/// `log p(y) - log q(y)` for models whose cutoffs do not exceed that of `y`.
pub fn log_ratio(p: &MixtureModel, q: &MixtureModel, y: &[Complex64]) -> Result<f64> {
    check_obs_dim(p, y)?;
    check_obs_dim(q, y)?;
    let mut scratch = DensityScratch::default();
    Ok(p.log_density_reduced(y, &mut scratch) - q.log_density_reduced(y, &mut scratch))
}

fn check_obs_dim(m: &MixtureModel, y: &[Complex64]) -> Result<()> {
    if y.len().is_multiple_of(2) || y.len() < m.theta.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.theta.dim(),
            got: y.len(),
        });
    }
    Ok(())
}
