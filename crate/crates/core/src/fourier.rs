//! Band-limited 1-periodic complex curves stored by their Fourier coefficients.
//!
//! The analysis convention is `theta_l(h) = int_0^1 exp(-i 2 pi l t) h(t) dt`, so
//! a curve is synthesised as `sum_l theta_l exp(i 2 pi l t)` and translating it by
//! `phi` multiplies `theta_l` by `exp(-i 2 pi l phi)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A curve with coefficients on the frequencies `-cutoff..=cutoff`.
///
/// Frequencies above the cutoff are implicitly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCurve {
    cutoff: usize,
    coeffs: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    /// `sqrt(sum |theta_l|^2)`.
    L2,
    /// `sqrt(sum l^2 |theta_l|^2)`; frequency 0 carries no weight.
    H1,
    /// `sqrt(sum (1 + |l|^{2s}) |theta_l|^2)`, defined for `s >= 1`.
    Hs(f64),
}

/// `exp(i 2 pi k phi)` for `k = 0..=max_k`.
pub(crate) fn unit_powers(phi: f64, max_k: usize, out: &mut Vec<Complex64>) {
    out.clear();
    out.push(Complex64::new(1.0, 0.0));
    if max_k == 0 {
        return;
    }
    let w = Complex64::cis(2.0 * PI * phi);
    let mut cur = w;
    out.push(w);
    for k in 2..=max_k {
        // re-anchor every few steps so the recurrence does not drift
        cur = if k % 16 == 0 {
            Complex64::cis(2.0 * PI * phi * k as f64)
        } else {
            cur * w
        };
        out.push(cur);
    }
}

impl FourierCurve {
    pub fn zeros(cutoff: usize) -> Self {
        FourierCurve {
            cutoff,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * cutoff + 1],
        }
    }

    /// Builds a curve from the dense vector `(theta_{-L}, ..., theta_L)`.
    pub fn from_dense(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "dense coefficient vector must have odd length, got {}",
                coeffs.len()
            )));
        }
        Ok(FourierCurve {
            cutoff: coeffs.len() / 2,
            coeffs,
        })
    }

    /// Builds a curve from `(frequency, coefficient)` pairs. The cutoff is the
    /// largest `|frequency|` present; repeated frequencies are summed.
    pub fn from_pairs<I: IntoIterator<Item = (i64, Complex64)>>(pairs: I) -> Self {
        let pairs: Vec<(i64, Complex64)> = pairs.into_iter().collect();
        let cutoff = pairs.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        let mut curve = FourierCurve::zeros(cutoff);
        for (k, c) in pairs {
            curve.coeffs[(k + cutoff as i64) as usize] += c;
        }
        curve
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Complex dimension `2 * cutoff + 1` of the coefficient vector.
    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Dense coefficients ordered from frequency `-cutoff` to `cutoff`.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize > self.cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.cutoff as i64) as usize]
        }
    }

    pub fn set_coeff(&mut self, k: i64, value: Complex64) -> Result<()> {
        if k.unsigned_abs() as usize > self.cutoff {
            return Err(Error::invalid(format!(
                "frequency {k} outside cutoff {}",
                self.cutoff
            )));
        }
        self.coeffs[(k + self.cutoff as i64) as usize] = value;
        Ok(())
    }

    /// Iterates `(frequency, coefficient)` over all retained frequencies.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let l = self.cutoff as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - l, c))
    }

    /// Same curve represented with a larger cutoff (zero padded).
    pub fn padded(&self, cutoff: usize) -> Result<Self> {
        if cutoff < self.cutoff {
            return Err(Error::DimensionMismatch {
                expected: 2 * cutoff + 1,
                got: self.dim(),
            });
        }
        let mut out = FourierCurve::zeros(cutoff);
        let off = cutoff - self.cutoff;
        out.coeffs[off..off + self.dim()].copy_from_slice(&self.coeffs);
        Ok(out)
    }

    /// The shift-rotation action `theta . phi`: coefficient `l` is multiplied by
    /// `exp(-i 2 pi l phi)`. `phi` is taken modulo 1.
    pub fn shifted(&self, phi: f64) -> Self {
        let phi = phi.rem_euclid(1.0);
        let mut pw = Vec::with_capacity(self.cutoff + 1);
        unit_powers(phi, self.cutoff, &mut pw);
        let l = self.cutoff;
        let mut out = self.clone();
        for k in 0..=l {
            // e^{-i 2 pi k phi} for +k, e^{+i 2 pi k phi} for -k
            out.coeffs[l + k] = self.coeffs[l + k] * pw[k].conj();
            if k > 0 {
                out.coeffs[l - k] = self.coeffs[l - k] * pw[k];
            }
        }
        out
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn h1_norm(&self) -> f64 {
        self.iter()
            .map(|(k, c)| (k * k) as f64 * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self, kind: NormKind) -> Result<f64> {
        match kind {
            NormKind::L2 => Ok(self.l2_norm()),
            NormKind::H1 => Ok(self.h1_norm()),
            NormKind::Hs(s) => {
                if !(s >= 1.0) {
                    return Err(Error::invalid(format!("Sobolev index must be >= 1, got {s}")));
                }
                Ok(self
                    .iter()
                    .map(|(k, c)| (1.0 + (k.unsigned_abs() as f64).powf(2.0 * s)) * c.norm_sqr())
                    .sum::<f64>()
                    .sqrt())
            }
        }
    }

    /// L2 projection onto frequencies `|k| <= l`, together with the L2 norm of
    /// the discarded tail.
    pub fn project(&self, l: usize) -> (Self, f64) {
        if l >= self.cutoff {
            return (self.clone(), 0.0);
        }
        let off = self.cutoff - l;
        let kept = self.coeffs[off..off + 2 * l + 1].to_vec();
        let tail = self.coeffs[..off]
            .iter()
            .chain(&self.coeffs[off + 2 * l + 1..])
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt();
        (FourierCurve { cutoff: l, coeffs: kept }, tail)
    }

    /// `sum_l theta_l exp(i 2 pi l t)`.
    pub fn evaluate(&self, t: f64) -> Complex64 {
        let mut pw = Vec::with_capacity(self.cutoff + 1);
        unit_powers(t.rem_euclid(1.0), self.cutoff, &mut pw);
        let l = self.cutoff;
        let mut acc = self.coeffs[l];
        for k in 1..=l {
            acc += self.coeffs[l + k] * pw[k] + self.coeffs[l - k] * pw[k].conj();
        }
        acc
    }

    /// L2 distance between two curves of possibly different cutoffs.
    pub fn l2_distance(&self, other: &FourierCurve) -> f64 {
        let l = self.cutoff.max(other.cutoff) as i64;
        (-l..=l)
            .map(|k| (self.coeff(k) - other.coeff(k)).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        FourierCurve {
            cutoff: self.cutoff,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn shift_leaves_frequency_zero_alone() {
        let f = FourierCurve::from_pairs([(0, c(3.0, 0.0))]);
        assert_eq!(f.shifted(0.7), f);
    }

    #[test]
    fn quarter_turn_rotation() {
        let f = FourierCurve::from_pairs([(1, c(1.0, 0.0))]);
        let g = f.shifted(0.25);
        assert!((g.coeff(1) - c(0.0, -1.0)).norm() < 1e-15);
        assert_eq!(f.shifted(0.0), f);
    }

    #[test]
    fn norm_examples() {
        let f = FourierCurve::from_pairs([(-1, c(1.0, 0.0)), (1, c(1.0, 0.0))]);
        assert!((f.norm(NormKind::L2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((f.norm(NormKind::H1).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let z = FourierCurve::from_pairs([(0, c(3.0, 0.0))]);
        assert_eq!(z.norm(NormKind::H1).unwrap(), 0.0);
        let h = FourierCurve::from_pairs([(2, c(1.0, 0.0))]);
        assert!((h.norm(NormKind::Hs(2.0)).unwrap() - 17f64.sqrt()).abs() < 1e-14);
        assert!(h.norm(NormKind::Hs(0.5)).is_err());
    }

    #[test]
    fn project_examples() {
        let f = FourierCurve::from_pairs([(0, c(1.0, 0.0)), (2, c(1.0, 0.0))]);
        let (p, tail) = f.project(1);
        assert_eq!(p, FourierCurve::from_pairs([(0, c(1.0, 0.0)), (1, c(0.0, 0.0))]));
        assert_eq!(tail, 1.0);
        let (same, zero) = f.project(5);
        assert_eq!(same, f);
        assert_eq!(zero, 0.0);

        let g = FourierCurve::from_pairs([(1, c(1.0, 0.0)), (3, c(0.5, 0.0))]);
        let (_, tail) = g.project(2);
        assert!((tail - 0.5).abs() < 1e-15);
        let h1 = g.h1_norm();
        assert!((h1 - 3.25f64.sqrt()).abs() < 1e-15);
        assert!(tail <= h1 * 0.5);
    }

    #[test]
    fn evaluate_examples() {
        let f = FourierCurve::from_pairs([(0, c(2.0, -1.0))]);
        assert_eq!(f.evaluate(0.37), c(2.0, -1.0));
        let g = FourierCurve::from_pairs([(1, c(1.0, 0.0))]);
        assert!((g.evaluate(0.0) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn parseval_on_fine_grid() {
        let mut rng = crate::rng::substream(3, 0);
        for cutoff in [0usize, 5, 64] {
            let coeffs: Vec<Complex64> = (0..2 * cutoff + 1)
                .map(|_| crate::rng::complex_normal(&mut rng))
                .collect();
            let f = FourierCurve::from_dense(coeffs).unwrap();
            let m = 4096;
            let mean = (0..m)
                .map(|i| f.evaluate(i as f64 / m as f64).norm_sqr())
                .sum::<f64>()
                / m as f64;
            let l2 = f.l2_norm().powi(2);
            assert!(((mean - l2) / l2).abs() < 1e-6, "cutoff {cutoff}: {mean} vs {l2}");
        }
    }

    #[test]
    fn padding_keeps_coefficients() {
        let f = FourierCurve::from_pairs([(-1, c(1.0, 2.0)), (1, c(0.5, 0.0))]);
        let p = f.padded(3).unwrap();
        assert_eq!(p.cutoff(), 3);
        for k in -3..=3 {
            assert_eq!(p.coeff(k), f.coeff(k));
        }
        assert!(p.padded(1).is_err());
    }

    fn arb_curve() -> impl Strategy<Value = FourierCurve> {
        (0usize..6).prop_flat_map(|l| {
            prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 2 * l + 1).prop_map(|v| {
                FourierCurve::from_dense(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
                    .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn shift_is_an_isometry(f in arb_curve(), phi in 0.0f64..1.0) {
            let g = f.shifted(phi);
            for kind in [NormKind::L2, NormKind::H1, NormKind::Hs(1.7)] {
                let a = f.norm(kind).unwrap();
                let b = g.norm(kind).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
            }
        }

        #[test]
        fn shift_is_a_group_action(f in arb_curve(), p1 in 0.0f64..1.0, p2 in 0.0f64..1.0) {
            let a = f.shifted(p1).shifted(p2);
            let b = f.shifted((p1 + p2).rem_euclid(1.0));
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }

        #[test]
        fn shift_matches_translation(f in arb_curve(), t in -2.0f64..2.0, phi in 0.0f64..1.0) {
            let lhs = f.shifted(phi).evaluate(t);
            let rhs = f.evaluate(t - phi);
            prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + f.l2_norm() * 10.0));
        }

        #[test]
        fn projection_tail_bound(s in 1.0f64..3.0, cutoff in 1usize..20, l in 1usize..20, seed in 0u64..1000) {
            let mut rng = crate::rng::substream(seed, 0);
            let pairs: Vec<(i64, Complex64)> = (-(cutoff as i64)..=cutoff as i64)
                .filter(|&k| k != 0)
                .map(|k| {
                    let z = crate::rng::complex_normal(&mut rng);
                    (k, z / z.norm() * (k.unsigned_abs() as f64).powf(-(s + 1.0)))
                })
                .collect();
            let f = FourierCurve::from_pairs(pairs);
            let (_, tail) = f.project(l);
            let bound = f.norm(NormKind::Hs(s)).unwrap() * (l as f64).powf(-s);
            prop_assert!(tail <= bound * (1.0 + 1e-12));
        }
    }
}
