//! The contraction-rate experiment: for each sample size, simulate data,
//! sample the posterior and measure Hellinger distances between posterior
//! draws and the true law.

use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::fourier::FourierCurve;
use crate::io::{write_atomic, CsvTable};
use crate::mcmc::{posterior_distances, quantile, run_chain, McmcConfig};
use crate::measure::{DiscreteMeasure, ShiftMeasure};
use crate::model::{simulate, SimConfig};
use crate::prior::{Preset, PriorConfig};
use crate::rng::substream;

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub f0: FourierCurve,
    pub g0: ShiftMeasure,
    pub smoothness: f64,
    pub l_obs: usize,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub prior: PriorConfig,
    /// Chain settings; the seed is replaced by a per-task seed.
    pub mcmc: McmcConfig,
    /// Monte-Carlo samples per side for each Hellinger estimate.
    pub divergence_samples: usize,
    pub quantile: f64,
    pub seed: u64,
    /// When set, one line per finished replicate is appended to
    /// `progress.csv` in this directory.
    pub out_dir: Option<PathBuf>,
}

/// Default truth: `theta_l = 2 l^{-(s+1)}` for `l = 1, 2, 3` and shifts at
/// 0.15 and 0.6 with weights 0.4 and 0.6.
pub fn default_truth(smoothness: f64) -> (FourierCurve, ShiftMeasure) {
    let f0 = FourierCurve::from_pairs(
        (1..=3).map(|l| (l as i64, Complex64::new(2.0 * (l as f64).powf(-(smoothness + 1.0)), 0.0))),
    );
    let g0 = DiscreteMeasure::from_atoms([(0.15, 0.4), (0.6, 0.6)]).expect("valid atoms");
    (f0, g0.into())
}

impl Default for StudyConfig {
    fn default() -> Self {
        let (f0, g0) = default_truth(1.0);
        StudyConfig {
            f0,
            g0,
            smoothness: 1.0,
            l_obs: 8,
            n_grid: vec![50, 200, 800],
            replicates: 3,
            prior: PriorConfig {
                preset: Preset::NonAdaptive(1.0),
                ..PriorConfig::default()
            },
            mcmc: McmcConfig {
                iterations: 3000,
                burn_in: 1000,
                thin: 100,
                ..McmcConfig::default()
            },
            divergence_samples: 4000,
            quantile: 0.5,
            seed: 0,
            out_dir: None,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::invalid("n_grid must not be empty"));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("n_grid must be strictly increasing"));
        }
        if self.n_grid[0] < 2 {
            return Err(Error::invalid("sample sizes must be at least 2"));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be at least 1"));
        }
        if !(self.smoothness >= 1.0) {
            return Err(Error::invalid("smoothness must be >= 1"));
        }
        if self.l_obs < self.f0.cutoff() {
            return Err(Error::invalid("l_obs must be at least the cutoff of f0"));
        }
        if self.divergence_samples < 1000 {
            return Err(Error::invalid("divergence_samples must be at least 1000"));
        }
        if !(0.0..=1.0).contains(&self.quantile) {
            return Err(Error::invalid("quantile must lie in [0, 1]"));
        }
        self.prior.validate()?;
        self.mcmc.validate()
    }
}

/// Seeds of one `(n, replicate)` task.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaskSeeds {
    pub data: u64,
    pub chain: u64,
    pub divergence: u64,
}

pub fn task_seeds(seed: u64, n_index: usize, replicate: usize) -> TaskSeeds {
    let mut rng = substream(seed, ((n_index as u64) << 32) | replicate as u64);
    TaskSeeds {
        data: rng.next_u64(),
        chain: rng.next_u64(),
        divergence: rng.next_u64(),
    }
}

/// `n^{-s/(2s+2)} log n`.
pub fn reference_rate(n: f64, smoothness: f64) -> f64 {
    n.powf(-smoothness / (2.0 * smoothness + 2.0)) * n.ln()
}

/// Hellinger distance between one posterior draw and the true law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceRow {
    pub n: usize,
    pub replicate: usize,
    pub iter: usize,
    pub hellinger: f64,
    pub std_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusRow {
    pub n: usize,
    pub replicate: usize,
    pub radius: f64,
    /// Mean Monte-Carlo standard error of the underlying distances.
    pub std_error: f64,
    pub samples: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SummaryRow {
    pub n: usize,
    /// Median of all distances at this `n`, pooled over replicates and draws.
    pub median_radius: f64,
    pub values: usize,
    pub reference: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResults {
    pub smoothness: f64,
    pub quantile: f64,
    pub rows: Vec<DistanceRow>,
}

impl StudyResults {
    fn keys(&self) -> Vec<(usize, usize)> {
        let mut keys: Vec<(usize, usize)> = self.rows.iter().map(|r| (r.n, r.replicate)).collect();
        keys.dedup();
        keys.sort_unstable();
        keys.dedup();
        keys
    }

    pub fn radii(&self) -> Result<Vec<RadiusRow>> {
        self.keys()
            .into_iter()
            .map(|(n, replicate)| {
                let rows: Vec<&DistanceRow> =
                    self.rows.iter().filter(|r| r.n == n && r.replicate == replicate).collect();
                let d: Vec<f64> = rows.iter().map(|r| r.hellinger).collect();
                Ok(RadiusRow {
                    n,
                    replicate,
                    radius: quantile(&d, self.quantile)?,
                    std_error: rows.iter().map(|r| r.std_error).sum::<f64>() / rows.len() as f64,
                    samples: rows.len(),
                })
            })
            .collect()
    }

    pub fn summary(&self) -> Result<Vec<SummaryRow>> {
        let mut ns: Vec<usize> = self.rows.iter().map(|r| r.n).collect();
        ns.sort_unstable();
        ns.dedup();
        ns.into_iter()
            .map(|n| {
                let d: Vec<f64> = self.rows.iter().filter(|r| r.n == n).map(|r| r.hellinger).collect();
                Ok(SummaryRow {
                    n,
                    median_radius: quantile(&d, 0.5)?,
                    values: d.len(),
                    reference: reference_rate(n as f64, self.smoothness),
                })
            })
            .collect()
    }

    /// Least-squares slope of `log median_radius` against `log n`.
    pub fn fitted_slope(&self) -> Result<f64> {
        let s = self.summary()?;
        if s.len() < 2 {
            return Err(Error::invalid("slope needs at least two sample sizes"));
        }
        let xs: Vec<f64> = s.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = s.iter().map(|r| r.median_radius.max(f64::MIN_POSITIVE).ln()).collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        Ok(sxy / sxx)
    }

    /// The asymptotic exponent `-s/(2s+2)`.
    pub fn reference_exponent(&self) -> f64 {
        -self.smoothness / (2.0 * self.smoothness + 2.0)
    }
}

/// Runs every `(n, replicate)` task in order.
pub fn run_contraction_study(cfg: &StudyConfig) -> Result<StudyResults> {
    cfg.validate()?;
    let progress = match &cfg.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join("progress.csv");
            fs::write(&path, "n,replicate,radius,samples\n")?;
            Some(path)
        }
        None => None,
    };
    let mut results = StudyResults {
        smoothness: cfg.smoothness,
        quantile: cfg.quantile,
        rows: Vec::new(),
    };
    for (i, &n) in cfg.n_grid.iter().enumerate() {
        for replicate in 0..cfg.replicates {
            let seeds = task_seeds(cfg.seed, i, replicate);
            let sim = SimConfig::new(cfg.f0.clone(), cfg.g0.clone(), n, cfg.l_obs);
            let data = simulate(&sim, seeds.data)?;
            let mcmc = McmcConfig {
                seed: seeds.chain,
                ..cfg.mcmc.clone()
            };
            let chain = run_chain(&data, &cfg.prior, n as f64, &mcmc)?;
            let dist = posterior_distances(
                &chain.samples,
                &cfg.f0,
                &cfg.g0,
                cfg.divergence_samples,
                &mut substream(seeds.divergence, 0),
            )?;
            let mut values = Vec::with_capacity(dist.len());
            for (s, e) in chain.samples.iter().zip(&dist) {
                values.push(e.value);
                results.rows.push(DistanceRow {
                    n,
                    replicate,
                    iter: s.iter,
                    hellinger: e.value,
                    std_error: e.std_error,
                });
            }
            if let Some(path) = &progress {
                let mut f = OpenOptions::new().append(true).open(path)?;
                writeln!(f, "{n},{replicate},{},{}", quantile(&values, cfg.quantile)?, values.len())?;
                f.flush()?;
            }
        }
    }
    Ok(results)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Svg,
}

pub const DISTANCES_HEADER: &str = "n,replicate,iter,hellinger,std_error";
pub const RADII_HEADER: &str = "n,replicate,radius,std_error,samples";
pub const SUMMARY_HEADER: &str = "n,median_radius,values,reference";

/// Writes `distances.csv`, `radii.csv` and `summary.csv` into `dir`, plus
/// `contraction.svg` when requested. Nothing is written for empty results.
pub fn emit_report(results: &StudyResults, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    if results.rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    // render everything before touching the filesystem
    let radii = results.radii()?;
    let summary = results.summary()?;
    let slope = results.fitted_slope().ok();

    let mut distances = format!(
        "# smoothness={}\n# quantile={}\n{DISTANCES_HEADER}\n",
        results.smoothness, results.quantile
    );
    for r in &results.rows {
        let _ = writeln!(distances, "{},{},{},{},{}", r.n, r.replicate, r.iter, r.hellinger, r.std_error);
    }
    let mut radii_csv = format!("{RADII_HEADER}\n");
    for r in &radii {
        let _ = writeln!(radii_csv, "{},{},{},{},{}", r.n, r.replicate, r.radius, r.std_error, r.samples);
    }
    let mut summary_csv = String::new();
    if let Some(s) = slope {
        let _ = writeln!(summary_csv, "# fitted_slope={s}");
    }
    let _ = writeln!(summary_csv, "# reference_exponent={}", results.reference_exponent());
    let _ = writeln!(summary_csv, "{SUMMARY_HEADER}");
    for r in &summary {
        let _ = writeln!(summary_csv, "{},{},{},{}", r.n, r.median_radius, r.values, r.reference);
    }
    let mut files = vec![
        (dir.join("distances.csv"), distances),
        (dir.join("radii.csv"), radii_csv),
        (dir.join("summary.csv"), summary_csv),
    ];
    if formats.contains(&ReportFormat::Svg) {
        files.push((dir.join("contraction.svg"), render_svg(results, &summary, slope)));
    }
    for (path, text) in &files {
        write_atomic(path, text)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// Reads `distances.csv` written by [`emit_report`].
pub fn read_study_results(dir: &Path) -> Result<StudyResults> {
    let path = dir.join("distances.csv");
    let header: Vec<&str> = DISTANCES_HEADER.split(',').collect();
    let t = CsvTable::read(&path, &header)?;
    let smoothness = t.meta_parse("smoothness")?.ok_or_else(|| t.error(0, "missing smoothness"))?;
    let q = t.meta_parse("quantile")?.ok_or_else(|| t.error(0, "missing quantile"))?;
    let rows = t
        .rows
        .iter()
        .map(|(line, f)| {
            Ok(DistanceRow {
                n: t.field(*line, &f[0], "n")?,
                replicate: t.field(*line, &f[1], "replicate")?,
                iter: t.field(*line, &f[2], "iter")?,
                hellinger: t.field(*line, &f[3], "hellinger distance")?,
                std_error: t.field(*line, &f[4], "std_error")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StudyResults {
        smoothness,
        quantile: q,
        rows,
    })
}

/// Log-log plot of the median radius with the reference curve
/// `M n^{-s/(2s+2)} log n`, `M` chosen to match the smallest `n`.
fn render_svg(results: &StudyResults, summary: &[SummaryRow], slope: Option<f64>) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 50.0);
    let scale = summary[0].median_radius.max(1e-12) / summary[0].reference;
    let xs: Vec<f64> = summary.iter().map(|r| (r.n as f64).log10()).collect();
    let ys: Vec<f64> = summary.iter().map(|r| r.median_radius.max(1e-12).log10()).collect();
    let refs: Vec<f64> = summary.iter().map(|r| (scale * r.reference).log10()).collect();
    let (mut x0, mut x1) = (xs[0], xs[xs.len() - 1]);
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let all = ys.iter().chain(&refs);
    let mut y0 = all.clone().copied().fold(f64::INFINITY, f64::min);
    let mut y1 = all.copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((y1 - y0) * 0.1).max(0.05);
    y0 -= pad;
    y1 += pad;
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| top + (y1 - y) / (y1 - y0) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(s, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let title = match slope {
        Some(sl) => format!(
            "median posterior Hellinger radius (slope {sl:.3}, reference {:.3})",
            results.reference_exponent()
        ),
        None => "median posterior Hellinger radius".to_string(),
    };
    let _ = writeln!(s, "<text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>", left);
    let _ = writeln!(
        s,
        "<line x1=\"{l:.2}\" y1=\"{b:.2}\" x2=\"{r:.2}\" y2=\"{b:.2}\" stroke=\"black\"/>",
        l = left,
        r = w - right,
        b = h - bottom
    );
    let _ = writeln!(
        s,
        "<line x1=\"{l:.2}\" y1=\"{t:.2}\" x2=\"{l:.2}\" y2=\"{b:.2}\" stroke=\"black\"/>",
        l = left,
        t = top,
        b = h - bottom
    );
    for (r, &x) in summary.iter().zip(&xs) {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            px(x),
            h - bottom + 18.0,
            r.n
        );
    }
    for y in [y0 + pad, y1 - pad] {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{:.3}</text>",
            left - 6.0,
            py(y) + 4.0,
            10f64.powf(y)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">n (log scale)</text>",
        (left + w - right) / 2.0,
        h - 12.0
    );
    let poly = |vals: &[f64]| -> String {
        xs.iter()
            .zip(vals)
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(
        s,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>",
        poly(&refs)
    );
    let _ = writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>", poly(&ys));
    for (&x, &y) in xs.iter().zip(&ys) {
        let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"steelblue\"/>", px(x), py(y));
    }
    s.push_str("</svg>\n");
    s
}
