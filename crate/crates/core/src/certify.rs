//! Numerical certificates for the bounds used in the contraction argument.
//!
//! Each audit returns [`CertificateRow`]s: the estimated quantity, the bound
//! it is compared with, the margin `bound - quantity` and whether the check
//! passed (Monte-Carlo checks allow three standard errors).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::divergence::{mc_divergences, DivergenceEstimate};
use crate::error::{Error, Result};
use crate::fourier::{unit_powers, FourierCurve};
use crate::measure::{bin_mass, dp_sample, eta_merge, DiscreteMeasure, DpConfig, ShiftMeasure};
use crate::model::MixtureModel;
use crate::rng::{complex_normal, fork_seed, substream};

/// Largest `delta = eps / sqrt(2)` accepted by [`build_brackets`]. The
/// safety factor on the cell width keeps the brackets valid up to here.
pub const MAX_BRACKET_DELTA: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateRow {
    pub check: String,
    pub quantity: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

impl CertificateRow {
    pub fn new(check: impl Into<String>, quantity: f64, bound: f64, pass: bool) -> Self {
        CertificateRow {
            check: check.into(),
            quantity,
            bound,
            margin: bound - quantity,
            pass,
        }
    }

    /// `quantity <= bound` up to `slack` (e.g. three standard errors).
    fn upper(check: impl Into<String>, quantity: f64, bound: f64, slack: f64) -> Self {
        CertificateRow::new(check, quantity, bound, quantity <= bound + slack)
    }
}

/// Brackets `[l_i, u_i]` covering the Gaussian family
/// `{gamma(. - theta . phi) : phi in [0, 1)}` in `K` cells of width `1/K`.
///
/// On cell `i` (left end `phi_i = i/K`, center `m_i = theta . phi_i`):
/// `l_i = (1 + delta)^{-1} N_C(m_i, (1 + delta)^{-alpha} I)` and
/// `u_i = (1 + delta) N_C(m_i, (1 + delta)^{alpha} I)` with
/// `delta = eps / sqrt(2)`, `alpha = 1 / (2p)`, `p = 2 cutoff + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketFamily {
    theta: FourierCurve,
    epsilon: f64,
    delta: f64,
    alpha: f64,
    count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub phi_lower: f64,
    pub lower_scale: f64,
    pub lower_cov: f64,
    pub upper_scale: f64,
    pub upper_cov: f64,
}

/// `ceil(8 pi sqrt(p) |theta|_{H1} / eps)`: cells of width
/// `eps / (8 pi sqrt(p) |theta|_{H1})`, i.e. the leading-order width
/// `eps^2 / (32 pi^2 p |theta|^2)` on the squared scale, halved.
pub fn bracket_count(theta: &FourierCurve, epsilon: f64) -> usize {
    let h1 = theta.h1_norm();
    if h1 == 0.0 {
        return 1;
    }
    let p = theta.dim() as f64;
    (8.0 * PI * p.sqrt() * h1 / epsilon).ceil().max(1.0) as usize
}

/// The leading-order count `4 pi sqrt(2p) |theta|_{H1} / eps`.
pub fn bracket_envelope(theta: &FourierCurve, epsilon: f64) -> f64 {
    4.0 * PI * (2.0 * theta.dim() as f64).sqrt() * theta.h1_norm() / epsilon
}

pub fn build_brackets(theta: &FourierCurve, epsilon: f64) -> Result<BracketFamily> {
    let fam = BracketFamily::with_count(theta, epsilon, bracket_count(theta, epsilon))?;
    Ok(fam)
}

impl BracketFamily {
    /// A family with an explicit number of cells; [`build_brackets`] chooses
    /// the count. A curve with zero `H1` norm is rotation invariant and gets a
    /// single bracket whatever `count` is.
    pub fn with_count(theta: &FourierCurve, epsilon: f64, count: usize) -> Result<BracketFamily> {
        if !(epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        let delta = epsilon / std::f64::consts::SQRT_2;
        if delta > MAX_BRACKET_DELTA {
            return Err(Error::invalid(format!(
                "epsilon {epsilon} too large: delta = {delta} exceeds {MAX_BRACKET_DELTA}"
            )));
        }
        if count == 0 {
            return Err(Error::invalid("bracket count must be at least 1"));
        }
        let count = if theta.h1_norm() == 0.0 { 1 } else { count };
        Ok(BracketFamily {
            theta: theta.clone(),
            epsilon,
            delta,
            alpha: 1.0 / (2.0 * theta.dim() as f64),
            count,
        })
    }

    pub fn theta(&self) -> &FourierCurve {
        &self.theta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.count as f64
    }

    pub fn bracket(&self, i: usize) -> Bracket {
        let s = 1.0 + self.delta;
        Bracket {
            phi_lower: i as f64 / self.count as f64,
            lower_scale: 1.0 / s,
            lower_cov: s.powf(-self.alpha),
            upper_scale: s,
            upper_cov: s.powf(self.alpha),
        }
    }

    pub fn brackets(&self) -> impl Iterator<Item = Bracket> + '_ {
        (0..self.count).map(|i| self.bracket(i))
    }

    /// Squared Hellinger width in the conservative closed form
    /// `delta^2 + 2 [1 - 2^p sqrt(1 + delta) / (1 + (1 + delta)^{1/p})^p]`.
    pub fn width_sq(&self) -> f64 {
        self.delta * self.delta + 2.0 * self.gaussian_part()
    }

    /// Exact squared Hellinger distance between `l_i` and `u_i`; the mass
    /// terms contribute `delta^2 / (1 + delta)` rather than `delta^2`.
    pub fn exact_width_sq(&self) -> f64 {
        self.delta * self.delta / (1.0 + self.delta) + 2.0 * self.gaussian_part()
    }

    /// `1 - BC` for the two normalized Gaussians of a bracket.
    fn gaussian_part(&self) -> f64 {
        let p = self.theta.dim() as f64;
        let s = 1.0 + self.delta;
        // 2^p sqrt(s) / (1 + s^{1/p})^p, in logs for large p
        let log_bc = p * 2f64.ln() + 0.5 * s.ln() - p * (1.0 + s.powf(1.0 / p)).ln();
        -log_bc.exp_m1()
    }
}

fn log_scaled_gaussian(z: &[Complex64], mean: &[Complex64], scale: f64, cov: f64) -> f64 {
    let p = z.len() as f64;
    let d: f64 = z.iter().zip(mean).map(|(a, b)| (a - b).norm_sqr()).sum();
    scale.ln() - p * (PI * cov).ln() - d / cov
}

#[derive(Clone, Debug, PartialEq)]
pub struct BracketReport {
    pub valid: bool,
    pub envelope_ok: bool,
    pub width_ok: bool,
    /// Square root of the closed-form squared width.
    pub max_hellinger_width: f64,
    /// Largest `log l - log gamma` or `log gamma - log u` seen (should be <= 0).
    pub max_log_violation: f64,
    pub points_checked: usize,
}

/// Audits a bracket family: for every cell, `n_phi` stratified shifts are
/// tested at the two points where `l_i / gamma` and `gamma / u_i` peak, and
/// `n_z` further points are drawn at random cells, shifts and Gaussian
/// locations (with widened spread). Also checks the closed-form width.
pub fn verify_bracket<R: Rng + ?Sized>(fam: &BracketFamily, n_phi: usize, n_z: usize, rng: &mut R) -> BracketReport {
    let k = fam.len();
    let b0 = fam.bracket(0);
    let a = 1.0 / b0.lower_cov; // > 1
    let bu = b0.upper_cov; // > 1
    let seed = fork_seed(rng);

    let check = |z: &[Complex64], mean: &[Complex64], center: &[Complex64], br: &Bracket| -> f64 {
        let lg = log_scaled_gaussian(z, mean, 1.0, 1.0);
        let ll = log_scaled_gaussian(z, center, br.lower_scale, br.lower_cov);
        let lu = log_scaled_gaussian(z, center, br.upper_scale, br.upper_cov);
        (ll - lg).max(lg - lu)
    };

    let n_phi = n_phi.max(1);
    let worst_cells = (0..k)
        .into_par_iter()
        .map(|i| {
            let br = fam.bracket(i);
            let center = fam.theta.shifted(br.phi_lower);
            let mut worst = f64::NEG_INFINITY;
            for s in 0..n_phi {
                let phi = br.phi_lower + (s as f64 + 0.5) / n_phi as f64 * fam.cell_width();
                let mean = fam.theta.shifted(phi);
                let d: Vec<Complex64> = center.as_slice().iter().zip(mean.as_slice()).map(|(c, m)| c - m).collect();
                // maximizer of l/gamma: center + d/(a - 1); of gamma/u: center - d b/(b - 1)
                let zl: Vec<Complex64> = center.as_slice().iter().zip(&d).map(|(c, d)| c + d / (a - 1.0)).collect();
                let zu: Vec<Complex64> =
                    center.as_slice().iter().zip(&d).map(|(c, d)| c - d * bu / (bu - 1.0)).collect();
                worst = worst
                    .max(check(&zl, mean.as_slice(), center.as_slice(), &br))
                    .max(check(&zu, mean.as_slice(), center.as_slice(), &br))
                    .max(check(mean.as_slice(), mean.as_slice(), center.as_slice(), &br));
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);

    let chunks = 16usize;
    let worst_random = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c as u64);
            let count = n_z / chunks + usize::from(c < n_z % chunks);
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..count {
                let i = rng.random_range(0..k);
                let br = fam.bracket(i);
                let phi = br.phi_lower + rng.random::<f64>() * fam.cell_width();
                let mean = fam.theta.shifted(phi);
                let center = fam.theta.shifted(br.phi_lower);
                let spread = 1.0 + 2.0 * rng.random::<f64>();
                let z: Vec<Complex64> = mean.as_slice().iter().map(|m| m + spread * complex_normal(&mut rng)).collect();
                worst = worst.max(check(&z, mean.as_slice(), center.as_slice(), &br));
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);

    let max_log_violation = worst_cells.max(worst_random);
    let envelope_ok = max_log_violation <= 1e-10;
    let width_sq = fam.width_sq();
    let width_ok = width_sq <= fam.epsilon * fam.epsilon;
    BracketReport {
        valid: envelope_ok && width_ok,
        envelope_ok,
        width_ok,
        max_hellinger_width: width_sq.sqrt(),
        max_log_violation,
        points_checked: k * n_phi * 3 + n_z,
    }
}

/// The printed chi-square concentration bound
/// `exp(-(k/2)(c - log(1 + c)) - log(k)/2) / (c sqrt(2 pi))` for
/// `P(chi^2_k >= (1 + c) k)`.
pub fn chi_square_bound(k: usize, c: f64) -> Result<f64> {
    if k == 0 || !(c > 0.0) {
        return Err(Error::invalid("chi-square bound needs k >= 1 and c > 0"));
    }
    let kf = k as f64;
    Ok((-(kf / 2.0) * (c - c.ln_1p()) - 0.5 * kf.ln()).exp() / (c * (2.0 * PI).sqrt()))
}

/// Exact `P(chi^2_k >= (1 + c) k)`.
pub fn chi_square_true_tail(k: usize, c: f64) -> Result<f64> {
    if k == 0 || !(c > -1.0) {
        return Err(Error::invalid("chi-square tail needs k >= 1 and c > -1"));
    }
    let chi = ChiSquared::new(k as f64).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(chi.sf((1.0 + c) * k as f64))
}

/// Outer-region bound `2 (1 + a)^{2p} P(chi^2_{2p} >= 2 R^2 / (1 + a)^2)`
/// with `R = (1 + a) sqrt((1 + c) p)`, returned with `R`.
pub fn outer_region_bound(a: f64, c: f64, p: usize) -> Result<(f64, f64)> {
    if !(a > 0.0) || !(c > 0.0) || p == 0 {
        return Err(Error::invalid("outer-region bound needs a > 0, c > 0, p >= 1"));
    }
    let r = (1.0 + a) * ((1.0 + c) * p as f64).sqrt();
    let tail = chi_square_true_tail(2 * p, c)?;
    Ok((2.0 * (1.0 + a).powi(2 * p as i32) * tail, r))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiceRow {
    pub t: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub bound: f64,
}

/// Tail of `sup_alpha re <u^{-alpha}, dW>`, represented on the coefficients as
/// `sup_alpha re sum_l conj(u_l) exp(i 2 pi l alpha) Z_l` with i.i.d. standard
/// complex `Z_l`, against `(|u'| / (2 pi |u|)) exp(-t^2 / |u|^2)`.
/// The supremum is taken over `n_grid` equispaced `alpha`.
pub fn rice_tail_experiment<R: Rng + ?Sized>(
    u: &FourierCurve,
    t_grid: &[f64],
    n_grid: usize,
    n_mc: usize,
    rng: &mut R,
) -> Result<Vec<RiceRow>> {
    let norm = u.l2_norm();
    if norm == 0.0 {
        return Err(Error::invalid("curve must have positive L2 norm"));
    }
    if n_grid == 0 || n_mc == 0 {
        return Err(Error::invalid("grid and trial counts must be positive"));
    }
    let l = u.cutoff();
    let twiddle: Vec<Vec<Complex64>> = (0..n_grid)
        .map(|g| {
            let mut pw = Vec::new();
            unit_powers(g as f64 / n_grid as f64, l, &mut pw);
            pw
        })
        .collect();
    let conj_u: Vec<Complex64> = u.as_slice().iter().map(|c| c.conj()).collect();
    let seed = fork_seed(rng);
    let chunks = 64usize.min(n_mc);
    let sups: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = substream(seed, c as u64);
            let count = n_mc / chunks + usize::from(c < n_mc % chunks);
            let mut a = vec![Complex64::new(0.0, 0.0); 2 * l + 1];
            (0..count)
                .map(|_| {
                    for (ai, cu) in a.iter_mut().zip(&conj_u) {
                        *ai = cu * complex_normal(&mut rng);
                    }
                    let mut best = f64::NEG_INFINITY;
                    for tw in &twiddle {
                        let mut x = a[l].re;
                        for k in 1..=l {
                            x += (a[l + k] * tw[k]).re + (a[l - k] * tw[k].conj()).re;
                        }
                        best = best.max(x);
                    }
                    best
                })
                .collect::<Vec<f64>>()
        })
        .collect();
    let coef = u.h1_norm() / norm;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let p = sups.iter().filter(|&&s| s > t).count() as f64 / n_mc as f64;
            RiceRow {
                t,
                empirical: p,
                std_error: (p * (1.0 - p) / n_mc as f64).sqrt(),
                bound: coef * (-t * t / (norm * norm)).exp(),
            }
        })
        .collect())
}

fn hellinger(p: &MixtureModel, q: &MixtureModel, n_mc: usize, seed: u64) -> Result<DivergenceEstimate> {
    Ok(mc_divergences(p, q, n_mc, &mut substream(seed, 0))?[0])
}

fn random_curve<R: Rng + ?Sized>(cutoff: usize, scale: f64, rng: &mut R) -> FourierCurve {
    FourierCurve::from_dense((0..2 * cutoff + 1).map(|_| scale * complex_normal(rng)).collect()).expect("odd length")
}

/// Monte-Carlo audit of three Hellinger bounds:
///
/// * truncation: `d_H(P_{f0, g0}, P_{f0_l, g0}) <= sqrt(2) |f0 - f0_l|`;
/// * same shift law: `d_H(P_{f0_l, g}, P_{f, g}) <= 2^{1/4} sqrt(|f - f0_l|)`
///   for `n_cases` random `f` near `f0_l` and random `g`;
/// * separated mixtures: `d_H^2(P_{theta, g~}, P_{theta, g^}) <=
///   sqrt(pi/2) |theta|_{H1} eta + 2 sum_j |g^(arc_j) - g~(phi_j)|` for
///   random `eta`-separated `g~` and perturbations `g^`, `theta = f0_l`.
///
/// A check passes when the estimate is within three standard errors of the
/// bound.
pub fn e_bounds_audit<R: Rng + ?Sized>(
    f0: &FourierCurve,
    g0: &ShiftMeasure,
    l_n: usize,
    n_mc: usize,
    n_cases: usize,
    rng: &mut R,
) -> Result<Vec<CertificateRow>> {
    if l_n < 1 {
        return Err(Error::invalid("l_n must be at least 1"));
    }
    let mut rows = Vec::new();
    let (f0_l, tail) = f0.project(l_n);
    let g0d = g0.to_discrete();

    let est = hellinger(
        &MixtureModel::new(f0.clone(), g0d.clone()),
        &MixtureModel::new(f0_l.clone(), g0d.clone()),
        n_mc,
        fork_seed(rng),
    )?;
    let bound = std::f64::consts::SQRT_2 * tail;
    rows.push(CertificateRow::upper("truncation", est.value, bound, 3.0 * est.std_error));

    let dp = DpConfig {
        truncation: 5,
        ..DpConfig::default()
    };
    for case in 0..n_cases {
        let g = dp_sample(&dp, rng)?;
        let scale = 0.05 + 0.5 * rng.random::<f64>();
        let f = f0_l.padded(l_n)?;
        let noise = random_curve(l_n, scale, rng);
        let f: Vec<Complex64> = f.as_slice().iter().zip(noise.as_slice()).map(|(a, b)| a + b).collect();
        let f = FourierCurve::from_dense(f)?;
        let est = hellinger(
            &MixtureModel::new(f0_l.clone(), g.clone()),
            &MixtureModel::new(f.clone(), g),
            n_mc,
            fork_seed(rng),
        )?;
        let bound = 2f64.powf(0.25) * f.l2_distance(&f0_l).sqrt();
        rows.push(CertificateRow::upper(format!("same_shift_law/{case}"), est.value, bound, 3.0 * est.std_error));
    }

    let h1 = f0_l.h1_norm();
    for case in 0..n_cases {
        let eta = 0.02 + 0.08 * rng.random::<f64>();
        let raw = DiscreteMeasure::from_atoms((0..6).map(|_| (rng.random::<f64>(), 0.2 + rng.random::<f64>())))?;
        let sep = eta_merge(&raw, eta)?;
        // move every atom inside its arc and reweight a little
        let pert = DiscreteMeasure::from_atoms(sep.atoms().iter().map(|a| {
            let jitter = (rng.random::<f64>() - 0.5) * eta * 0.999;
            (a.location + jitter, a.weight * (0.8 + 0.4 * rng.random::<f64>()))
        }))?;
        let centers: Vec<f64> = sep.locations().collect();
        let masses = bin_mass(&ShiftMeasure::Discrete(pert.clone()), &centers, eta)?;
        let mismatch: f64 = masses.iter().zip(sep.atoms()).map(|(m, a)| (m - a.weight).abs()).sum();
        let est = hellinger(
            &MixtureModel::new(f0_l.clone(), sep),
            &MixtureModel::new(f0_l.clone(), pert),
            n_mc,
            fork_seed(rng),
        )?;
        let h2 = est.raw * est.raw.abs();
        let h2_se = 2.0 * est.raw.abs() * est.std_error;
        let bound = (PI / 2.0).sqrt() * h1 * eta + 2.0 * mismatch;
        rows.push(CertificateRow::upper(format!("separated_mixture/{case}"), h2, bound, 3.0 * h2_se));
    }
    Ok(rows)
}

/// All certificate checks for the truth `(f0, g0)` at truncation level
/// `l_n`: bracket validity at `eps = 0.5`, the printed chi-square bound
/// against the exact tail, the Rice tail bound and [`e_bounds_audit`].
pub fn certificate_suite<R: Rng + ?Sized>(
    f0: &FourierCurve,
    g0: &ShiftMeasure,
    l_n: usize,
    n_mc: usize,
    n_cases: usize,
    rng: &mut R,
) -> Result<Vec<CertificateRow>> {
    let mut rows = Vec::new();
    let (theta, _) = f0.project(l_n);
    let eps = 0.5;
    let fam = build_brackets(&theta, eps)?;
    let rep = verify_bracket(&fam, 8, n_mc, rng);
    rows.push(CertificateRow::new("bracket_envelope", rep.max_log_violation, 0.0, rep.envelope_ok));
    rows.push(CertificateRow::new("bracket_width_sq", fam.width_sq(), eps * eps, rep.width_ok));
    let env = bracket_envelope(&theta, eps);
    let allowed = (1.5 * env).max(1.0);
    rows.push(CertificateRow::new("bracket_count", fam.len() as f64, allowed, fam.len() as f64 <= allowed));

    for (k, c) in [(10, 1.0), (50, 0.5), (200, 0.25)] {
        let exact = chi_square_true_tail(k, c)?;
        let bound = chi_square_bound(k, c)?;
        rows.push(CertificateRow::new(format!("chi_square/k={k},c={c}"), exact, bound, exact <= bound));
    }

    if theta.l2_norm() > 0.0 {
        let norm = theta.l2_norm();
        let t_grid: Vec<f64> = [1.0, 1.5, 2.0].iter().map(|m| m * norm).collect();
        for r in rice_tail_experiment(&theta, &t_grid, 256, n_mc, rng)? {
            rows.push(CertificateRow::upper(
                format!("rice/t={:.4}", r.t),
                r.empirical,
                r.bound,
                3.0 * r.std_error,
            ));
        }
    }
    rows.extend(e_bounds_audit(f0, g0, l_n, n_mc, n_cases, rng)?);
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallMass {
    pub empirical: f64,
    pub std_error: f64,
    /// `N log(1/r)`.
    pub lower_bound_exponent: f64,
}

/// Monte-Carlo `P(sum_j |X_j - x_j| <= 2 r)` for `X ~ Dirichlet(alphas)`.
pub fn dirichlet_ball_mass<R: Rng + ?Sized>(
    alphas: &[f64],
    target: &[f64],
    r: f64,
    n_mc: usize,
    rng: &mut R,
) -> Result<BallMass> {
    let n = alphas.len();
    if n < 2 || target.len() != n {
        return Err(Error::invalid("need at least two matching Dirichlet parameters and target coordinates"));
    }
    if alphas.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return Err(Error::invalid("Dirichlet parameters must be positive and finite"));
    }
    if target.iter().any(|x| *x < 0.0) || (target.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("target must lie on the simplex"));
    }
    if !(r > 0.0) || r > 1.0 / n as f64 {
        return Err(Error::invalid(format!("radius must lie in (0, 1/N], got {r}")));
    }
    if n_mc == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let gammas: Vec<Gamma<f64>> = alphas
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map_err(|e| Error::invalid(e.to_string())))
        .collect::<Result<_>>()?;
    let mut x = vec![0.0; n];
    let mut hits = 0usize;
    for _ in 0..n_mc {
        let mut total = 0.0;
        for (xi, g) in x.iter_mut().zip(&gammas) {
            *xi = g.sample(rng);
            total += *xi;
        }
        let l1: f64 = x.iter().zip(target).map(|(a, b)| (a / total - b).abs()).sum();
        if l1 <= 2.0 * r {
            hits += 1;
        }
    }
    let p = hits as f64 / n_mc as f64;
    Ok(BallMass {
        empirical: p,
        std_error: (p * (1.0 - p) / n_mc as f64).sqrt(),
        lower_bound_exponent: n as f64 * (1.0 / r).ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn frequency_zero_curve_gives_singleton() {
        let theta = FourierCurve::from_pairs([(0, c(2.0, -1.0))]);
        let fam = build_brackets(&theta, 0.1).unwrap();
        assert_eq!(fam.len(), 1);
        let rep = verify_bracket(&fam, 4, 1000, &mut substream(0, 0));
        assert!(rep.valid, "{rep:?}");
        assert!(rep.max_hellinger_width <= 0.1);
    }

    #[test]
    fn bracket_count_formula() {
        let mut theta = FourierCurve::zeros(1);
        theta.set_coeff(1, c(1.0, 0.0)).unwrap();
        let fam = build_brackets(&theta, 0.1).unwrap();
        let expect = (4.0 * PI * 6f64.sqrt() / 0.1 * 2f64.sqrt()).ceil() as usize;
        assert_eq!(fam.len(), expect);
        let half = build_brackets(&theta, 0.05).unwrap();
        assert!((half.len() as i64 - 2 * fam.len() as i64).abs() <= 1);
    }

    #[test]
    fn bracket_widths() {
        let theta = FourierCurve::from_pairs([(1, c(1.0, 0.0)), (-2, c(0.0, 0.5))]);
        for eps in [0.05, 0.1, 0.2, 0.5] {
            let fam = build_brackets(&theta, eps).unwrap();
            assert!(fam.width_sq() <= eps * eps);
            assert!(fam.exact_width_sq() <= fam.width_sq());
        }
        assert!(build_brackets(&theta, 0.8).is_err());
    }

    #[test]
    fn brackets_hold_and_widened_cells_fail() {
        let theta = FourierCurve::from_pairs([(-1, c(0.3, 0.2)), (0, c(1.0, 0.0)), (1, c(0.7, -0.4))]);
        let fam = build_brackets(&theta, 0.2).unwrap();
        let rep = verify_bracket(&fam, 64, 10_000, &mut substream(1, 0));
        assert!(rep.valid, "{rep:?}");
        let wide = BracketFamily::with_count(&theta, 0.2, (fam.len() / 10).max(1)).unwrap();
        let rep = verify_bracket(&wide, 64, 10_000, &mut substream(1, 1));
        assert!(!rep.valid);
    }

    #[test]
    fn chi_square_bound_values() {
        let b = chi_square_bound(10, 1.0).unwrap();
        let expect = (-(5.0) * (1.0 - 2f64.ln()) - 0.5 * 10f64.ln()).exp() / (2.0 * PI).sqrt();
        assert!((b - expect).abs() < 1e-15);
        assert!((b - 0.0272).abs() < 1e-4);
        let t = chi_square_true_tail(10, 1.0).unwrap();
        assert!((t - 0.0293).abs() < 1e-4);
        assert!(chi_square_bound(20, 1.0).unwrap() < b);
        assert!(chi_square_bound(10, 1e-8).unwrap() > 1e6);
    }

    #[test]
    fn rice_zero_threshold_and_single_frequency() {
        let u = FourierCurve::from_pairs([(1, c(1.0, 0.0))]);
        let rows = rice_tail_experiment(&u, &[0.0, 1.0], 64, 20_000, &mut substream(2, 0)).unwrap();
        assert!(rows[0].empirical > 0.999);
        let exact = (-1.0f64).exp();
        assert!((rows[1].empirical - exact).abs() < 4.0 * rows[1].std_error + 1e-3);
        assert!((rows[1].bound - exact).abs() < 1e-15);
    }

    #[test]
    fn two_point_dirichlet_ball() {
        let r = 0.05;
        let got = dirichlet_ball_mass(&[1.0, 1.0], &[0.5, 0.5], r, 200_000, &mut substream(3, 0)).unwrap();
        assert!((got.empirical - 2.0 * r).abs() < 3.0 * got.std_error);
        assert!(dirichlet_ball_mass(&[1.0, 1.0], &[0.5, 0.5], 0.6, 10, &mut substream(3, 1)).is_err());
    }
}
