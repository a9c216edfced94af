//! Metropolis-within-Gibbs posterior sampler.
//!
//! The latent shift of every observation lives on a grid of `B` bin centers
//! and the shift law is a piecewise-constant density on those bins, so its
//! full conditional is a finite Dirichlet. One sweep updates, in order, the
//! shifts, the coefficients (conjugate complex Gaussian), the shift law, and
//! with some probability the cutoff through a birth/death move on the
//! outermost frequency pair.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::divergence::{mc_divergence, DivergenceEstimate, DivergenceKind};
use crate::error::{Error, Result};
use crate::fourier::{unit_powers, FourierCurve};
use crate::measure::{DiscreteMeasure, GridDensity, ShiftMeasure};
use crate::model::{Dataset, MixtureModel};
use crate::prior::{log_lambda_weights, PriorConfig};
use crate::rng::{complex_normal, fork_seed, log_sum_exp, sample_log_weights, substream, StreamRng};

#[derive(Clone, Debug, PartialEq)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Number of shift bins `B`.
    pub bins: usize,
    pub birth_death_rate: f64,
    pub seed: u64,
    /// Keep the shifts at their initial values.
    pub fix_shifts: bool,
    /// Keep the cutoff at its initial value.
    pub fix_cutoff: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iterations: 2000,
            burn_in: 1000,
            thin: 10,
            bins: 256,
            birth_death_rate: 0.5,
            seed: 0,
            fix_shifts: false,
            fix_cutoff: false,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::invalid(format!(
                "burn-in {} must be smaller than the number of iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thinning interval must be at least 1"));
        }
        if self.bins < 16 {
            return Err(Error::invalid(format!("need at least 16 shift bins, got {}", self.bins)));
        }
        if !(0.0..=1.0).contains(&self.birth_death_rate) {
            return Err(Error::invalid("birth/death rate must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    theta: FourierCurve,
    shifts: Vec<f64>,
    log_g: Vec<f64>,
}

impl ChainState {
    /// A state with the given coefficients (cutoff taken from `theta`), shifts
    /// in `[0, 1)` and shift law on `g.bins()` bins.
    pub fn new(theta: FourierCurve, shifts: Vec<f64>, g: &GridDensity) -> Result<Self> {
        if theta.cutoff() < 1 {
            return Err(Error::invalid("chain cutoff must be at least 1"));
        }
        if shifts.iter().any(|s| !(0.0..1.0).contains(s)) {
            return Err(Error::invalid("shifts must lie in [0, 1)"));
        }
        Ok(ChainState {
            theta,
            shifts,
            log_g: g.masses().iter().map(|m| m.ln()).collect(),
        })
    }

    /// Cutoff 1, coefficients at the de-noised root mean power
    /// `sqrt(max(mean_j |z_kj|^2 - 1, 0))` with zero phase, uniform shifts on
    /// the grid and a uniform shift law.
    pub fn initial<R: Rng + ?Sized>(data: &Dataset, bins: usize, rng: &mut R) -> Result<Self> {
        if data.cutoff() < 1 {
            return Err(Error::invalid("data cutoff must be at least 1"));
        }
        let n = data.n();
        let theta = FourierCurve::from_dense(
            (-1i64..=1)
                .map(|k| {
                    if n == 0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let power = (0..n).map(|j| data.coeff(j, k).norm_sqr()).sum::<f64>() / n as f64;
                    Complex64::new((power - 1.0).max(0.0).sqrt(), 0.0)
                })
                .collect(),
        )?;
        let shifts = (0..n)
            .map(|_| (rng.random_range(0..bins) as f64 + 0.5) / bins as f64)
            .collect();
        ChainState::new(theta, shifts, &GridDensity::uniform(bins))
    }

    pub fn cutoff(&self) -> usize {
        self.theta.cutoff()
    }

    pub fn theta(&self) -> &FourierCurve {
        &self.theta
    }

    pub fn shifts(&self) -> &[f64] {
        &self.shifts
    }

    pub fn bins(&self) -> usize {
        self.log_g.len()
    }

    pub fn g(&self) -> GridDensity {
        let max = self.log_g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        GridDensity::new(self.log_g.iter().map(|l| (l - max).exp()).collect()).expect("normalized state")
    }

    fn bin_of(&self, tau: f64) -> usize {
        ((tau * self.bins() as f64) as usize).min(self.bins() - 1)
    }
}

/// Quantities shared by all sweeps of one chain.
struct SweepContext {
    l_max: usize,
    log_lambda: Vec<f64>,
    xi2: f64,
    dirichlet_prior: Vec<f64>,
    /// `exp(i 2 pi k tau_b)` for bin centers `tau_b`, `k = 0..=l_max`.
    twiddle: Vec<Vec<Complex64>>,
}

impl SweepContext {
    fn new(data: &Dataset, prior: &PriorConfig, n_calib: f64, bins: usize) -> Result<Self> {
        prior.validate()?;
        let l_max = prior.l_max.min(data.cutoff());
        if l_max < 1 {
            return Err(Error::invalid("data cutoff must be at least 1"));
        }
        let xi2 = prior.xi_variance(n_calib)?;
        let dirichlet_prior = prior
            .dp
            .base
            .bin_probabilities(bins)
            .into_iter()
            .map(|p| p * prior.dp.total_mass)
            .collect();
        let twiddle = (0..bins)
            .map(|b| {
                let mut pw = Vec::new();
                unit_powers((b as f64 + 0.5) / bins as f64, l_max, &mut pw);
                pw
            })
            .collect();
        Ok(SweepContext {
            l_max,
            log_lambda: log_lambda_weights(prior),
            xi2,
            dirichlet_prior,
            twiddle,
        })
    }
}

/// Per-observation cross-term coefficients: the log-likelihood of bin `b` is
/// `2 sum_k (cos_k re w_bk + sin_k im w_bk)` plus terms free of the shift.
fn cross_terms(data: &Dataset, theta: &FourierCurve, j: usize, cos: &mut Vec<f64>, sin: &mut Vec<f64>) {
    let l = theta.cutoff() as i64;
    cos.clear();
    sin.clear();
    for k in 0..=l {
        let a_pos = data.coeff(j, k) * theta.coeff(k).conj();
        if k == 0 {
            cos.push(a_pos.re);
            sin.push(0.0);
        } else {
            let a_neg = data.coeff(j, -k) * theta.coeff(-k).conj();
            cos.push(a_pos.re + a_neg.re);
            sin.push(a_neg.im - a_pos.im);
        }
    }
}

fn shift_log_weights(ctx: &SweepContext, log_g: &[f64], cos: &[f64], sin: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for (b, lg) in log_g.iter().enumerate() {
        let tw = &ctx.twiddle[b];
        let mut cross = 0.0;
        for k in 0..cos.len() {
            cross += cos[k] * tw[k].re + sin[k] * tw[k].im;
        }
        out.push(lg + 2.0 * cross);
    }
}

/// `S_k = sum_j z_kj exp(i 2 pi k tau_j)` for `|k| <= l`.
fn derotated_sums(data: &Dataset, shifts: &[f64], l: usize) -> Vec<Complex64> {
    let mut s = vec![Complex64::new(0.0, 0.0); 2 * l + 1];
    let mut pw = Vec::new();
    for (j, &tau) in shifts.iter().enumerate() {
        unit_powers(tau, l, &mut pw);
        for k in 0..=l {
            s[l + k] += data.coeff(j, k as i64) * pw[k];
            if k > 0 {
                s[l - k] += data.coeff(j, -(k as i64)) * pw[k].conj();
            }
        }
    }
    s
}

/// `log p(data | theta, g)` with the shifts integrated over the bin centers.
fn marginal_loglik(ctx: &SweepContext, state: &ChainState, data: &Dataset) -> f64 {
    let (mut cos, mut sin, mut w) = (Vec::new(), Vec::new(), Vec::new());
    let theta_sq = state.theta.l2_norm().powi(2);
    let d = data.dim() as f64;
    (0..data.n())
        .map(|j| {
            cross_terms(data, &state.theta, j, &mut cos, &mut sin);
            shift_log_weights(ctx, &state.log_g, &cos, &sin, &mut w);
            let zsq: f64 = data.row(j).iter().map(|z| z.norm_sqr()).sum();
            -d * PI.ln() - zsq - theta_sq + log_sum_exp(&w)
        })
        .sum()
}

/// Outcome of the cutoff move in one sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutoffMove {
    None,
    Rejected,
    Accepted,
}

fn sweep(
    ctx: &SweepContext,
    state: &mut ChainState,
    data: &Dataset,
    cfg: &McmcConfig,
    rng: &mut StreamRng,
) -> CutoffMove {
    let n = data.n();
    let bins = state.bins();

    // (a) shifts
    if !cfg.fix_shifts {
        let (mut cos, mut sin, mut w, mut scratch) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for j in 0..n {
            cross_terms(data, &state.theta, j, &mut cos, &mut sin);
            shift_log_weights(ctx, &state.log_g, &cos, &sin, &mut w);
            let b = sample_log_weights(rng, &w, &mut scratch);
            state.shifts[j] = (b as f64 + 0.5) / bins as f64;
        }
    }

    // (b) coefficients
    let l = state.cutoff();
    let precision = n as f64 + 1.0 / ctx.xi2;
    let sums = derotated_sums(data, &state.shifts, l);
    let sd = precision.sqrt().recip();
    let coeffs = sums.iter().map(|s| s / precision + sd * complex_normal(rng)).collect();
    state.theta = FourierCurve::from_dense(coeffs).expect("odd length");

    // (c) shift law: Dirichlet(alpha_b m + counts_b), drawn in log space
    let mut counts = vec![0usize; bins];
    for &tau in &state.shifts {
        counts[state.bin_of(tau)] += 1;
    }
    for b in 0..bins {
        let a = ctx.dirichlet_prior[b] + counts[b] as f64;
        // G(a) = G(a + 1) U^{1/a} keeps small shapes representable
        let g1: f64 = Gamma::new(a + 1.0, 1.0).expect("positive shape").sample(rng);
        let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
        state.log_g[b] = g1.ln() + u.ln() / a;
    }
    let norm = log_sum_exp(&state.log_g);
    state.log_g.iter_mut().for_each(|x| *x -= norm);

    // (d) cutoff
    if cfg.fix_cutoff || rng.random::<f64>() >= cfg.birth_death_rate {
        return CutoffMove::None;
    }
    let birth = rng.random::<bool>();
    if birth && l >= ctx.l_max || !birth && l <= 1 {
        return CutoffMove::Rejected;
    }
    let new_l = if birth { l + 1 } else { l - 1 };
    let outer = if birth { new_l } else { l };
    // proposal for a birth is the prior, which cancels against the prior factor
    let pair = if birth {
        let xi = ctx.xi2.sqrt();
        [xi * complex_normal(rng), xi * complex_normal(rng)]
    } else {
        [state.theta.coeff(-(l as i64)), state.theta.coeff(l as i64)]
    };
    let outer_sums = derotated_sums_pair(data, &state.shifts, outer);
    let mut gain = 0.0;
    for (t, s) in pair.iter().zip(outer_sums) {
        gain += 2.0 * (s * t.conj()).re - n as f64 * t.norm_sqr();
    }
    let log_ratio = ctx.log_lambda[new_l - 1] - ctx.log_lambda[l - 1] + if birth { gain } else { -gain };
    if rng.random::<f64>().ln() < log_ratio {
        let mut dense = Vec::with_capacity(2 * new_l + 1);
        if birth {
            dense.push(pair[0]);
            dense.extend_from_slice(state.theta.as_slice());
            dense.push(pair[1]);
        } else {
            dense.extend_from_slice(&state.theta.as_slice()[1..2 * l]);
        }
        state.theta = FourierCurve::from_dense(dense).expect("odd length");
        CutoffMove::Accepted
    } else {
        CutoffMove::Rejected
    }
}

/// `[S_{-k}, S_k]`.
fn derotated_sums_pair(data: &Dataset, shifts: &[f64], k: usize) -> [Complex64; 2] {
    let mut out = [Complex64::new(0.0, 0.0); 2];
    for (j, &tau) in shifts.iter().enumerate() {
        let w = Complex64::cis(2.0 * PI * k as f64 * tau);
        out[0] += data.coeff(j, -(k as i64)) * w.conj();
        out[1] += data.coeff(j, k as i64) * w;
    }
    out
}

/// One full sweep on `state`. `n_calib` is the sample size used to calibrate
/// the coefficient variance of the prior.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &Dataset,
    prior: &PriorConfig,
    n_calib: f64,
    cfg: &McmcConfig,
    rng: &mut R,
) -> Result<CutoffMove> {
    check_state(state, data)?;
    let ctx = SweepContext::new(data, prior, n_calib, state.bins())?;
    let mut local = substream(fork_seed(rng), 0);
    Ok(sweep(&ctx, state, data, cfg, &mut local))
}

fn check_state(state: &ChainState, data: &Dataset) -> Result<()> {
    if data.cutoff() < state.cutoff() {
        return Err(Error::invalid(format!(
            "data cutoff {} below chain cutoff {}",
            data.cutoff(),
            state.cutoff()
        )));
    }
    if state.shifts.len() != data.n() {
        return Err(Error::DimensionMismatch {
            expected: data.n(),
            got: state.shifts.len(),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSample {
    pub iter: usize,
    pub theta: FourierCurve,
    pub g: GridDensity,
}

impl PosteriorSample {
    pub fn cutoff(&self) -> usize {
        self.theta.cutoff()
    }

    pub fn model(&self) -> MixtureModel {
        MixtureModel::new(self.theta.clone(), self.g.to_atoms())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostic {
    pub iter: usize,
    pub loglik: f64,
    /// Running acceptance rate of the cutoff move.
    pub accept_bd: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainOutput {
    pub samples: Vec<PosteriorSample>,
    pub diagnostics: Vec<Diagnostic>,
    pub bd_attempts: usize,
    pub bd_accepts: usize,
}

impl ChainOutput {
    pub fn acceptance_rate(&self) -> f64 {
        if self.bd_attempts == 0 {
            f64::NAN
        } else {
            self.bd_accepts as f64 / self.bd_attempts as f64
        }
    }
}

/// Runs a chain from [`ChainState::initial`].
pub fn run_chain(data: &Dataset, prior: &PriorConfig, n_calib: f64, cfg: &McmcConfig) -> Result<ChainOutput> {
    cfg.validate()?;
    let mut rng = substream(cfg.seed, 1);
    let state = ChainState::initial(data, cfg.bins, &mut rng)?;
    run_chain_from(state, data, prior, n_calib, cfg)
}

/// Runs a chain from a given state; the output depends only on the inputs
/// and `cfg.seed`.
pub fn run_chain_from(
    mut state: ChainState,
    data: &Dataset,
    prior: &PriorConfig,
    n_calib: f64,
    cfg: &McmcConfig,
) -> Result<ChainOutput> {
    cfg.validate()?;
    check_state(&state, data)?;
    if state.bins() != cfg.bins {
        return Err(Error::DimensionMismatch {
            expected: cfg.bins,
            got: state.bins(),
        });
    }
    let ctx = SweepContext::new(data, prior, n_calib, cfg.bins)?;
    if state.cutoff() > ctx.l_max {
        return Err(Error::invalid(format!(
            "initial cutoff {} exceeds the largest admissible cutoff {}",
            state.cutoff(),
            ctx.l_max
        )));
    }
    let mut rng = substream(cfg.seed, 0);
    let mut out = ChainOutput {
        samples: Vec::new(),
        diagnostics: Vec::new(),
        bd_attempts: 0,
        bd_accepts: 0,
    };
    for iter in 0..cfg.iterations {
        match sweep(&ctx, &mut state, data, cfg, &mut rng) {
            CutoffMove::None => {}
            CutoffMove::Rejected => out.bd_attempts += 1,
            CutoffMove::Accepted => {
                out.bd_attempts += 1;
                out.bd_accepts += 1;
            }
        }
        if iter >= cfg.burn_in && (iter - cfg.burn_in).is_multiple_of(cfg.thin) {
            out.samples.push(PosteriorSample {
                iter,
                theta: state.theta.clone(),
                g: state.g(),
            });
            out.diagnostics.push(Diagnostic {
                iter,
                loglik: marginal_loglik(&ctx, &state, data),
                accept_bd: if out.bd_attempts == 0 {
                    0.0
                } else {
                    out.bd_accepts as f64 / out.bd_attempts as f64
                },
            });
        }
    }
    Ok(out)
}

/// Empirical `q`-quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyResults);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("quantile level must lie in [0, 1], got {q}")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

/// Monte-Carlo Hellinger distance from every posterior sample to the truth.
pub fn posterior_distances<R: Rng + ?Sized>(
    samples: &[PosteriorSample],
    f0: &FourierCurve,
    g0: &ShiftMeasure,
    n_mc: usize,
    rng: &mut R,
) -> Result<Vec<DivergenceEstimate>> {
    if samples.is_empty() {
        return Err(Error::EmptyResults);
    }
    let truth = MixtureModel::from_shift_measure(f0.clone(), g0);
    let seeds: Vec<u64> = samples.iter().map(|_| fork_seed(rng)).collect();
    samples
        .par_iter()
        .zip(seeds)
        .map(|(s, seed)| {
            let model = MixtureModel::new(s.theta.clone(), prune_atoms(&s.g));
            mc_divergence(DivergenceKind::Hellinger, &model, &truth, n_mc, &mut substream(seed, 0))
        })
        .collect()
}

/// Bin-center atoms of `g`, dropping masses below `1e-14`.
fn prune_atoms(g: &GridDensity) -> DiscreteMeasure {
    let atoms: Vec<(f64, f64)> = g
        .masses()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m >= 1e-14)
        .map(|(b, &m)| (g.bin_center(b), m))
        .collect();
    DiscreteMeasure::from_atoms(atoms).unwrap_or_else(|_| g.to_atoms())
}

/// `q`-quantile of the Hellinger distances between posterior laws and the
/// true law.
pub fn posterior_radius<R: Rng + ?Sized>(
    samples: &[PosteriorSample],
    f0: &FourierCurve,
    g0: &ShiftMeasure,
    q: f64,
    n_mc: usize,
    rng: &mut R,
) -> Result<f64> {
    let d: Vec<f64> = posterior_distances(samples, f0, g0, n_mc, rng)?
        .iter()
        .map(|e| e.value)
        .collect();
    quantile(&d, q)
}
