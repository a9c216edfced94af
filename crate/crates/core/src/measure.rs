//! Probability measures on the circle `[0, 1)` used as shift laws.
//!
//! A [`GridDensity`] is the piecewise-constant density with the given mass on
//! each of `B` equal bins. Likelihood code that needs atoms uses
//! [`GridDensity::to_atoms`], which places each bin mass at the bin center.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::nnls;

/// Total masses within this distance of one are left unscaled.
const NORMALIZED_TOL: f64 = 1e-12;

/// Distance between two points of the circle `R / Z`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Finitely supported probability measure with strictly increasing locations.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    /// Reduces locations mod 1, sorts, merges coincident locations, drops zero
    /// weights and normalizes the total mass to one.
    pub fn from_atoms<I: IntoIterator<Item = (f64, f64)>>(atoms: I) -> Result<Self> {
        let mut raw: Vec<Atom> = Vec::new();
        for (loc, w) in atoms {
            if !loc.is_finite() || !w.is_finite() || w < 0.0 {
                return Err(Error::invalid(format!("invalid atom ({loc}, {w})")));
            }
            if w > 0.0 {
                let mut location = loc.rem_euclid(1.0);
                if location >= 1.0 {
                    location = 0.0;
                }
                raw.push(Atom { location, weight: w });
            }
        }
        if raw.is_empty() {
            return Err(Error::invalid("measure has no positive mass"));
        }
        raw.sort_by(|a, b| a.location.total_cmp(&b.location));
        let mut merged: Vec<Atom> = Vec::with_capacity(raw.len());
        for a in raw {
            match merged.last_mut() {
                Some(last) if last.location == a.location => last.weight += a.weight,
                _ => merged.push(a),
            }
        }
        let total: f64 = merged.iter().map(|a| a.weight).sum();
        // already-normalized input is kept bit-exact
        if (total - 1.0).abs() > NORMALIZED_TOL {
            for a in &mut merged {
                a.weight /= total;
            }
        }
        Ok(DiscreteMeasure { atoms: merged })
    }

    pub fn dirac(location: f64) -> Self {
        DiscreteMeasure::from_atoms([(location, 1.0)]).expect("unit atom")
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn locations(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.location)
    }

    /// Trigonometric moment `c_r = sum_j p_j exp(i 2 pi r phi_j)`.
    pub fn moment(&self, r: i64) -> Complex64 {
        self.atoms
            .iter()
            .map(|a| a.weight * Complex64::cis(2.0 * PI * r as f64 * a.location))
            .sum()
    }

    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.atoms
            .iter()
            .map(|a| {
                acc += a.weight;
                acc
            })
            .collect()
    }

    pub fn sample_location<R: Rng + ?Sized>(&self, cumulative: &[f64], rng: &mut R) -> f64 {
        let u = rng.random::<f64>() * cumulative[cumulative.len() - 1];
        let i = cumulative.partition_point(|&c| c <= u).min(self.atoms.len() - 1);
        self.atoms[i].location
    }

    /// Mass of the circular arc `[start, start + len)`.
    pub fn arc_mass(&self, start: f64, len: f64) -> f64 {
        if len >= 1.0 {
            return 1.0;
        }
        self.atoms
            .iter()
            .filter(|a| (a.location - start).rem_euclid(1.0) < len)
            .map(|a| a.weight)
            .sum()
    }

    /// Smallest circular gap between distinct atoms (`1` for a single atom).
    pub fn min_separation(&self) -> f64 {
        let n = self.atoms.len();
        if n < 2 {
            return 1.0;
        }
        let mut gap = 1.0 - self.atoms[n - 1].location + self.atoms[0].location;
        for w in self.atoms.windows(2) {
            gap = gap.min(w[1].location - w[0].location);
        }
        gap
    }
}

/// Piecewise-constant density on `B` equal bins of the circle.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    masses: Vec<f64>,
}

impl GridDensity {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::invalid("grid density needs at least one bin"));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::invalid("grid masses must be finite and non-negative"));
        }
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("grid density has no positive mass"));
        }
        if (total - 1.0).abs() <= NORMALIZED_TOL {
            return Ok(GridDensity { masses });
        }
        Ok(GridDensity {
            masses: masses.into_iter().map(|m| m / total).collect(),
        })
    }

    pub fn uniform(bins: usize) -> Self {
        GridDensity {
            masses: vec![1.0 / bins as f64; bins],
        }
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        (b as f64 + 0.5) / self.masses.len() as f64
    }

    /// Atoms at bin centers carrying the bin masses; empty bins are skipped.
    pub fn to_atoms(&self) -> DiscreteMeasure {
        DiscreteMeasure::from_atoms(
            self.masses
                .iter()
                .enumerate()
                .map(|(b, &m)| (self.bin_center(b), m)),
        )
        .expect("normalized grid density")
    }

    /// Trigonometric moment of the piecewise-constant density.
    pub fn moment(&self, r: i64) -> Complex64 {
        let nb = self.masses.len() as f64;
        let x = PI * r as f64 / nb;
        let damp = if r == 0 { 1.0 } else { x.sin() / x };
        self.masses
            .iter()
            .enumerate()
            .map(|(b, &m)| m * Complex64::cis(2.0 * PI * r as f64 * self.bin_center(b)))
            .sum::<Complex64>()
            * damp
    }

    fn cdf(&self, x: f64) -> f64 {
        let nb = self.masses.len();
        let pos = x.clamp(0.0, 1.0) * nb as f64;
        let full = (pos.floor() as usize).min(nb);
        let mut acc: f64 = self.masses[..full].iter().sum();
        if full < nb {
            acc += self.masses[full] * (pos - full as f64);
        }
        acc
    }

    pub fn arc_mass(&self, start: f64, len: f64) -> f64 {
        if len >= 1.0 {
            return 1.0;
        }
        let a = start.rem_euclid(1.0);
        let b = a + len;
        if b <= 1.0 {
            self.cdf(b) - self.cdf(a)
        } else {
            self.cdf(1.0) - self.cdf(a) + self.cdf(b - 1.0)
        }
    }

    pub fn sample_location<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = rng.random::<f64>();
        let mut acc = 0.0;
        let mut bin = self.masses.len() - 1;
        for (b, &m) in self.masses.iter().enumerate() {
            acc += m;
            if u < acc {
                bin = b;
                break;
            }
        }
        (bin as f64 + rng.random::<f64>()) / self.masses.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ShiftMeasure {
    Discrete(DiscreteMeasure),
    Grid(GridDensity),
}

impl ShiftMeasure {
    pub fn moment(&self, r: i64) -> Complex64 {
        match self {
            ShiftMeasure::Discrete(d) => d.moment(r),
            ShiftMeasure::Grid(g) => g.moment(r),
        }
    }

    pub fn arc_mass(&self, start: f64, len: f64) -> f64 {
        match self {
            ShiftMeasure::Discrete(d) => d.arc_mass(start, len),
            ShiftMeasure::Grid(g) => g.arc_mass(start, len),
        }
    }

    /// Atomic version used by likelihood evaluations.
    pub fn to_discrete(&self) -> DiscreteMeasure {
        match self {
            ShiftMeasure::Discrete(d) => d.clone(),
            ShiftMeasure::Grid(g) => g.to_atoms(),
        }
    }
}

impl From<DiscreteMeasure> for ShiftMeasure {
    fn from(d: DiscreteMeasure) -> Self {
        ShiftMeasure::Discrete(d)
    }
}

impl From<GridDensity> for ShiftMeasure {
    fn from(g: GridDensity) -> Self {
        ShiftMeasure::Grid(g)
    }
}

/// Base density of the Dirichlet process.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseDensity {
    Uniform,
    /// Piecewise-constant density with the given (unnormalized) bin weights.
    Tabulated(Vec<f64>),
}

impl BaseDensity {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            BaseDensity::Uniform => rng.random::<f64>(),
            BaseDensity::Tabulated(w) => GridDensity::new(w.clone())
                .expect("validated base density")
                .sample_location(rng),
        }
    }

    /// Probability of each of `bins` equal bins under the base density.
    pub fn bin_probabilities(&self, bins: usize) -> Vec<f64> {
        match self {
            BaseDensity::Uniform => vec![1.0 / bins as f64; bins],
            BaseDensity::Tabulated(w) => {
                let g = GridDensity::new(w.clone()).expect("validated base density");
                (0..bins)
                    .map(|b| g.arc_mass(b as f64 / bins as f64, 1.0 / bins as f64))
                    .collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DpConfig {
    pub base: BaseDensity,
    pub total_mass: f64,
    pub truncation: usize,
}

impl Default for DpConfig {
    fn default() -> Self {
        DpConfig {
            base: BaseDensity::Uniform,
            total_mass: 1.0,
            truncation: 50,
        }
    }
}

impl DpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.total_mass > 0.0) || !self.total_mass.is_finite() {
            return Err(Error::invalid("DP total mass must be positive"));
        }
        if self.truncation == 0 {
            return Err(Error::invalid("DP truncation must be at least 1"));
        }
        if let BaseDensity::Tabulated(w) = &self.base {
            if w.is_empty() || w.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return Err(Error::invalid("tabulated base density must be positive"));
            }
        }
        Ok(())
    }
}

/// Truncated stick-breaking draw from the Dirichlet process: `K - 1` sticks with
/// `Beta(1, m)` proportions, the last atom absorbing the remaining mass.
pub fn dp_sample<R: Rng + ?Sized>(cfg: &DpConfig, rng: &mut R) -> Result<DiscreteMeasure> {
    cfg.validate()?;
    let beta = Beta::new(1.0, cfg.total_mass)
        .map_err(|e| Error::invalid(format!("stick distribution: {e}")))?;
    let mut remaining = 1.0;
    let mut atoms = Vec::with_capacity(cfg.truncation);
    for _ in 0..cfg.truncation - 1 {
        let v: f64 = beta.sample(rng);
        atoms.push((cfg.base.sample(rng), remaining * v));
        remaining *= 1.0 - v;
    }
    atoms.push((cfg.base.sample(rng), remaining));
    DiscreteMeasure::from_atoms(atoms)
}

/// Makes the support `eta`-separated on the circle.
///
/// Atoms are scanned in increasing location; an atom is kept when it is at
/// circular distance at least `eta` from every atom kept so far. Each removed
/// atom's weight goes to its nearest kept atom, ties going to the smaller
/// location.
pub fn eta_merge(g: &DiscreteMeasure, eta: f64) -> Result<DiscreteMeasure> {
    if !(eta > 0.0) {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    let mut kept: Vec<Atom> = Vec::new();
    let mut removed: Vec<Atom> = Vec::new();
    for &a in g.atoms() {
        let ok = match (kept.first(), kept.last()) {
            (Some(first), Some(last)) => {
                circle_distance(a.location, last.location) >= eta
                    && circle_distance(a.location, first.location) >= eta
            }
            _ => true,
        };
        if ok {
            kept.push(a);
        } else {
            removed.push(a);
        }
    }
    for r in removed {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        // kept is sorted, so strict comparison keeps the smaller location on ties
        for (i, k) in kept.iter().enumerate() {
            let d = circle_distance(r.location, k.location);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        kept[best].weight += r.weight;
    }
    DiscreteMeasure::from_atoms(kept.into_iter().map(|a| (a.location, a.weight)))
}

/// Masses `g([c - eta/2, c + eta/2))` of the arcs around each center.
pub fn bin_mass(g: &ShiftMeasure, centers: &[f64], eta: f64) -> Result<Vec<f64>> {
    if !(eta > 0.0) || eta > 1.0 {
        return Err(Error::invalid(format!("eta must lie in (0, 1], got {eta}")));
    }
    if centers.len() > 1 {
        let mut sorted: Vec<f64> = centers.iter().map(|c| c.rem_euclid(1.0)).collect();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut gap = 1.0 - sorted[n - 1] + sorted[0];
        for w in sorted.windows(2) {
            gap = gap.min(w[1] - w[0]);
        }
        if gap < eta - 1e-12 {
            return Err(Error::OverlappingIntervals { eta });
        }
    }
    Ok(centers
        .iter()
        .map(|&c| g.arc_mass(c - eta / 2.0, eta).clamp(0.0, 1.0))
        .collect())
}

/// Default size of the location grid used by [`moment_match_discretize`].
pub fn default_moment_grid(order: usize) -> usize {
    (8 * (order + 1)).max(512)
}

/// Discrete measure with at most `2 * order + 1` atoms whose trigonometric
/// moments `c_r`, `|r| <= order`, match those of `g` within `tol`.
pub fn moment_match_discretize(g: &ShiftMeasure, order: usize, tol: f64) -> Result<DiscreteMeasure> {
    moment_match_on_grid(g, order, tol, default_moment_grid(order))
}

/// [`moment_match_discretize`] with an explicit number of equispaced grid points.
///
/// The candidate locations are the equispaced grid together with the atoms of
/// `g` when `g` is discrete. A non-negative unit-mass combination matching the
/// moments is found (for a discrete `g`, `g` itself; otherwise by non-negative
/// least squares), then pruned to a basic solution and re-verified by direct
/// moment evaluation.
pub fn moment_match_on_grid(
    g: &ShiftMeasure,
    order: usize,
    tol: f64,
    grid_size: usize,
) -> Result<DiscreteMeasure> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    if grid_size < 8 * (order + 1) {
        return Err(Error::invalid(format!(
            "grid of {grid_size} points is too coarse for order {order}; need at least {}",
            8 * (order + 1)
        )));
    }
    if let ShiftMeasure::Discrete(d) = g {
        if d.len() <= 2 * order + 1 {
            return Ok(d.clone());
        }
    }

    let mut locations: Vec<f64> = (0..grid_size).map(|i| i as f64 / grid_size as f64).collect();
    let mut start: Option<Vec<f64>> = None;
    if let ShiftMeasure::Discrete(d) = g {
        let mut w = vec![0.0; grid_size];
        for a in d.atoms() {
            locations.push(a.location);
            w.push(a.weight);
        }
        start = Some(w);
    }

    let rows = 2 * order + 1;
    let a = DMatrix::from_fn(rows, locations.len(), |row, col| moment_row(row, locations[col]));
    let target = DVector::from_fn(rows, |row, _| {
        if row == 0 {
            1.0
        } else {
            let m = g.moment(row.div_ceil(2) as i64);
            if row % 2 == 1 {
                m.re
            } else {
                m.im
            }
        }
    });

    let mut x = match start {
        Some(w) => DVector::from_vec(w),
        None => nnls::nnls(&a, &target, 50 * rows + 100),
    };
    nnls::caratheodory_prune(&a, &mut x);

    let atoms: Vec<(f64, f64)> = x
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| (locations[i], w))
        .collect();
    let mass: f64 = atoms.iter().map(|a| a.1).sum();
    let out = if atoms.is_empty() {
        None
    } else {
        DiscreteMeasure::from_atoms(atoms).ok()
    };
    let Some(out) = out else {
        return Err(Error::InfeasibleWithinTolerance { max_error: 1.0, tol });
    };
    let mut max_error = (mass - 1.0).abs();
    for r in 1..=order as i64 {
        max_error = max_error.max((out.moment(r) - g.moment(r)).norm());
    }
    if max_error > tol {
        return Err(Error::InfeasibleWithinTolerance { max_error, tol });
    }
    Ok(out)
}

fn moment_row(row: usize, phi: f64) -> f64 {
    if row == 0 {
        return 1.0;
    }
    let r = row.div_ceil(2) as f64;
    let angle = 2.0 * PI * r * phi;
    if row % 2 == 1 {
        angle.cos()
    } else {
        angle.sin()
    }
}
