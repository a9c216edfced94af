//! Distances between mixture laws: closed forms for two Gaussians and
//! Monte-Carlo estimators with jackknife standard errors for mixtures.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::model::{DensityScratch, MixtureModel};
use crate::rng::{fork_seed, substream};

/// Number of jackknife blocks.
pub const JACKKNIFE_BLOCKS: usize = 50;

fn sq_distance(z1: &[Complex64], z2: &[Complex64]) -> Result<f64> {
    if z1.len() != z2.len() {
        return Err(Error::DimensionMismatch {
            expected: z1.len(),
            got: z2.len(),
        });
    }
    Ok(z1.iter().zip(z2).map(|(a, b)| (a - b).norm_sqr()).sum())
}

/// Total variation between `gamma(. - z1)` and `gamma(. - z2)`.
///
/// Each real coordinate has variance 1/2, so along `z1 - z2` the two laws are
/// real normals `1/sqrt(2)` apart per unit of distance, and the distance is
/// `2 Phi(|z1 - z2| / sqrt(2)) - 1 = erf(|z1 - z2| / 2)`.
pub fn gauss_tv(z1: &[Complex64], z2: &[Complex64]) -> Result<f64> {
    Ok(erfc(-sq_distance(z1, z2)?.sqrt() / 2.0) - 1.0)
}

/// Hellinger distance `sqrt(2 (1 - exp(-|z1 - z2|^2 / 4)))`.
pub fn gauss_hellinger(z1: &[Complex64], z2: &[Complex64]) -> Result<f64> {
    let d2 = sq_distance(z1, z2)?;
    Ok((2.0 * -(-d2 / 4.0).exp_m1()).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DivergenceKind {
    Hellinger,
    TotalVariation,
    KullbackLeibler,
    /// Second moment of the log-likelihood ratio.
    V,
    /// `M_delta^2` for the given `delta`.
    MDelta(f64),
}

impl DivergenceKind {
    pub fn name(&self) -> String {
        match self {
            DivergenceKind::Hellinger => "hellinger".into(),
            DivergenceKind::TotalVariation => "tv".into(),
            DivergenceKind::KullbackLeibler => "kl".into(),
            DivergenceKind::V => "v".into(),
            DivergenceKind::MDelta(d) => format!("mdelta:{d}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "hellinger" => Ok(DivergenceKind::Hellinger),
            "tv" => Ok(DivergenceKind::TotalVariation),
            "kl" => Ok(DivergenceKind::KullbackLeibler),
            "v" => Ok(DivergenceKind::V),
            _ => s
                .strip_prefix("mdelta:")
                .and_then(|d| d.parse::<f64>().ok())
                .filter(|d| *d > 0.0 && *d <= 1.0)
                .map(DivergenceKind::MDelta)
                .ok_or_else(|| Error::invalid(format!("unknown divergence kind '{s}'"))),
        }
    }
}

/// A divergence value. `value` is clipped to the admissible range of the
/// divergence; `raw` is the unclipped estimate. Closed forms have zero
/// standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceEstimate {
    pub kind: DivergenceKind,
    pub value: f64,
    pub raw: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl DivergenceEstimate {
    fn new(kind: DivergenceKind, raw: f64, std_error: f64, samples: usize) -> Self {
        let upper = match kind {
            DivergenceKind::Hellinger => std::f64::consts::SQRT_2,
            DivergenceKind::TotalVariation => 1.0,
            _ => f64::INFINITY,
        };
        DivergenceEstimate {
            kind,
            value: raw.clamp(0.0, upper),
            raw,
            std_error,
            samples,
        }
    }
}

/// Delete-one-block jackknife for a smooth function of block means.
///
/// `sums[b][i]` is the sum of statistic `i` over block `b`, which holds
/// `counts[b]` samples. Returns the full-sample estimate and its standard error.
pub fn jackknife<F: Fn(&[f64]) -> f64>(sums: &[Vec<f64>], counts: &[f64], h: F) -> (f64, f64) {
    let nb = sums.len();
    let dim = sums[0].len();
    let total: Vec<f64> = (0..dim).map(|i| sums.iter().map(|s| s[i]).sum()).collect();
    let n: f64 = counts.iter().sum();
    let full = h(&total.iter().map(|t| t / n).collect::<Vec<_>>());
    if nb < 2 {
        return (full, f64::NAN);
    }
    let loo: Vec<f64> = (0..nb)
        .map(|b| {
            let m = n - counts[b];
            let means: Vec<f64> = (0..dim).map(|i| (total[i] - sums[b][i]) / m).collect();
            h(&means)
        })
        .collect();
    let mean = loo.iter().sum::<f64>() / nb as f64;
    let var = loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>() * (nb - 1) as f64 / nb as f64;
    (full, var.sqrt())
}

fn check_samples(n: usize) -> Result<()> {
    if n < 1000 {
        return Err(Error::invalid(format!("need at least 1000 Monte-Carlo samples, got {n}")));
    }
    Ok(())
}

fn block_sizes(n: usize) -> Vec<usize> {
    let b = JACKKNIFE_BLOCKS.min(n);
    (0..b).map(|i| n / b + usize::from(i < n % b)).collect()
}

const STATS: usize = 4;

/// Per-block sums of statistics of the log-ratio `log q(x) - log p(x)`, `x ~ p`.
fn block_stats<F>(p: &MixtureModel, q: &MixtureModel, n: usize, seed: u64, stats: F) -> (Vec<Vec<f64>>, Vec<f64>)
where
    F: Fn(f64, &mut [f64]) + Sync,
{
    let obs_cutoff = p.cutoff().max(q.cutoff());
    let sizes = block_sizes(n);
    let sums: Vec<Vec<f64>> = sizes
        .par_iter()
        .enumerate()
        .map(|(b, &size)| {
            let mut rng = substream(seed, b as u64);
            let mut scratch = DensityScratch::default();
            let mut z = Vec::new();
            let mut acc = vec![0.0; STATS];
            for _ in 0..size {
                p.sample_into(obs_cutoff, &mut rng, &mut z);
                let l = q.log_density_reduced(&z, &mut scratch) - p.log_density_reduced(&z, &mut scratch);
                let mut row = [0.0; STATS];
                stats(l, &mut row);
                for (a, r) in acc.iter_mut().zip(&row) {
                    *a += r;
                }
            }
            acc
        })
        .collect();
    (sums, sizes.iter().map(|&s| s as f64).collect())
}

/// Estimates Hellinger, total variation, KL(p || q) and V(p || q) from one
/// set of `n` samples drawn from each of `p` and `q`.
///
/// * Hellinger: `d_H^2 = 2 - E_p sqrt(q/p) - E_q sqrt(p/q)`, the two-sided
///   average of the one-sided representations.
/// * TV: `E_m |p - q| / (p + q)` under `m = (p + q) / 2`, sampled with equal
///   numbers of draws from `p` and `q`.
/// * KL: `E_p log(p/q)`; V: `E_p log^2(p/q)`.
pub fn mc_divergences<R: Rng + ?Sized>(
    p: &MixtureModel,
    q: &MixtureModel,
    n: usize,
    rng: &mut R,
) -> Result<Vec<DivergenceEstimate>> {
    check_samples(n)?;
    let seed = fork_seed(rng);
    // from p: sqrt(q/p), |tanh(l/2)|, -l, l^2
    let (sp, counts) = block_stats(p, q, n, seed, |l, out| {
        out[0] = (0.5 * l).exp();
        out[1] = (0.5 * l).tanh().abs();
        out[2] = -l;
        out[3] = l * l;
    });
    let (sq, _) = block_stats(q, p, n, seed ^ 0x9e37_79b9_7f4a_7c15, |l, out| {
        out[0] = (0.5 * l).exp();
        out[1] = (0.5 * l).tanh().abs();
    });
    // pair block b of both sides so one jackknife covers both sample sets
    let sums: Vec<Vec<f64>> = sp
        .iter()
        .zip(&sq)
        .map(|(a, b)| vec![a[0], a[1], a[2], a[3], b[0], b[1]])
        .collect();
    let hell = |m: &[f64]| {
        let h2 = 2.0 - m[0] - m[4];
        h2.signum() * h2.abs().sqrt()
    };
    let (h, h_se) = jackknife(&sums, &counts, hell);
    let (tv, tv_se) = jackknife(&sums, &counts, |m| 0.5 * (m[1] + m[5]));
    let (kl, kl_se) = jackknife(&sums, &counts, |m| m[2]);
    let (v, v_se) = jackknife(&sums, &counts, |m| m[3]);
    Ok(vec![
        DivergenceEstimate::new(DivergenceKind::Hellinger, h, h_se, n),
        DivergenceEstimate::new(DivergenceKind::TotalVariation, tv, tv_se, n),
        DivergenceEstimate::new(DivergenceKind::KullbackLeibler, kl, kl_se, n),
        DivergenceEstimate::new(DivergenceKind::V, v, v_se, n),
    ])
}

/// Monte-Carlo estimate of a single divergence; see [`mc_divergences`].
pub fn mc_divergence<R: Rng + ?Sized>(
    kind: DivergenceKind,
    p: &MixtureModel,
    q: &MixtureModel,
    n: usize,
    rng: &mut R,
) -> Result<DivergenceEstimate> {
    if let DivergenceKind::MDelta(delta) = kind {
        return mc_m_delta(p, q, delta, n, rng);
    }
    let all = mc_divergences(p, q, n, rng)?;
    Ok(all.into_iter().find(|e| e.kind == kind).expect("all kinds estimated"))
}

/// `M_delta^2 = E_{p0}[r^delta 1{r >= e^{1/delta}}]` with `r = dP0/dP` the
/// likelihood ratio of the reference law `p0` against `p`.
pub fn mc_m_delta<R: Rng + ?Sized>(
    p0: &MixtureModel,
    p: &MixtureModel,
    delta: f64,
    n: usize,
    rng: &mut R,
) -> Result<DivergenceEstimate> {
    check_samples(n)?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1], got {delta}")));
    }
    let seed = fork_seed(rng);
    // l = log p - log p0 = -log r
    let (sums, counts) = block_stats(p0, p, n, seed, |l, out| {
        let log_r = -l;
        out[0] = if log_r >= 1.0 / delta { (delta * log_r).exp() } else { 0.0 };
    });
    let (m, se) = jackknife(&sums, &counts, |m| m[0]);
    Ok(DivergenceEstimate::new(DivergenceKind::MDelta(delta), m, se, n))
}
