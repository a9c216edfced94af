//! CSV formats.
//!
//! Floats are written with the shortest representation that parses back to
//! the same value, so every writer/reader pair round-trips bit-exactly.
//! Lines starting with `#` carry `key=value` metadata. Files are written to a
//! temporary sibling and renamed into place, so a failed write leaves no
//! partial file behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::certify::CertificateRow;
use crate::divergence::DivergenceEstimate;
use crate::error::{Error, Result};
use crate::fourier::FourierCurve;
use crate::mcmc::ChainOutput;
use crate::measure::{DiscreteMeasure, GridDensity, ShiftMeasure};
use crate::model::Dataset;

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    if let Err(e) = fs::write(&tmp, contents) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::from(e)
    })
}

/// Data rows of a CSV file with its metadata lines.
pub(crate) struct CsvTable {
    path: PathBuf,
    pub meta: Vec<(String, String)>,
    /// `(line number, fields)`.
    pub rows: Vec<(usize, Vec<String>)>,
    header: usize,
}

impl CsvTable {
    pub fn read(path: &Path, header: &[&str]) -> Result<CsvTable> {
        let text = fs::read_to_string(path)?;
        CsvTable::parse(path, &text, &[header])
    }

    /// Parses `text`, accepting any one of `headers`; the header found is
    /// available through [`CsvTable::header_index`].
    pub fn parse(path: &Path, text: &str, headers: &[&[&str]]) -> Result<CsvTable> {
        let mut meta = Vec::new();
        let mut rows = Vec::new();
        let mut header_seen: Option<usize> = None;
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    meta.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
            match header_seen {
                None => {
                    let found = headers.iter().position(|h| {
                        h.len() == fields.len() && h.iter().zip(&fields).all(|(a, b)| a == b)
                    });
                    match found {
                        Some(h) => header_seen = Some(h),
                        None => {
                            return Err(parse_error(
                                path,
                                lineno,
                                format!("expected header '{}', found '{line}'", headers[0].join(",")),
                            ))
                        }
                    }
                }
                Some(h) => {
                    let want = headers[h].len();
                    if fields.len() != want {
                        return Err(parse_error(
                            path,
                            lineno,
                            format!("expected {want} fields, found {}", fields.len()),
                        ));
                    }
                    rows.push((lineno, fields));
                }
            }
        }
        let Some(header) = header_seen else {
            return Err(parse_error(path, 0, "missing header"));
        };
        Ok(CsvTable {
            path: path.to_path_buf(),
            meta,
            rows,
            header,
        })
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.meta(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| parse_error(&self.path, 0, format!("invalid metadata {key}={v}"))),
        }
    }

    pub fn field<T: std::str::FromStr>(&self, line: usize, value: &str, name: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| parse_error(&self.path, line, format!("invalid {name} '{value}'")))
    }

    pub fn error(&self, line: usize, msg: impl Into<String>) -> Error {
        parse_error(&self.path, line, msg)
    }

    pub fn header_index(&self) -> usize {
        self.header
    }
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

pub fn curve_to_csv(curve: &FourierCurve) -> String {
    let mut s = format!("# cutoff={}\nfreq,re,im\n", curve.cutoff());
    for (k, c) in curve.iter() {
        let _ = writeln!(s, "{k},{},{}", c.re, c.im);
    }
    s
}

pub fn write_curve(path: &Path, curve: &FourierCurve) -> Result<()> {
    write_atomic(path, &curve_to_csv(curve))
}

/// Reads a curve. Frequencies must be strictly increasing; missing ones are
/// zero. The cutoff is the `cutoff` metadata if present, else the largest
/// `|freq|`.
pub fn read_curve(path: &Path) -> Result<FourierCurve> {
    let t = CsvTable::read(path, &["freq", "re", "im"])?;
    let mut pairs = Vec::with_capacity(t.rows.len());
    let mut last: Option<i64> = None;
    for (line, f) in &t.rows {
        let k: i64 = t.field(*line, &f[0], "frequency")?;
        if last.is_some_and(|l| k <= l) {
            return Err(t.error(*line, "frequencies must be strictly increasing"));
        }
        last = Some(k);
        let re: f64 = t.field(*line, &f[1], "real part")?;
        let im: f64 = t.field(*line, &f[2], "imaginary part")?;
        pairs.push((k, Complex64::new(re, im)));
    }
    let curve = FourierCurve::from_pairs(pairs);
    match t.meta_parse::<usize>("cutoff")? {
        Some(l) => curve.padded(l).map_err(|_| t.error(0, format!("frequencies exceed declared cutoff {l}"))),
        None => Ok(curve),
    }
}

pub fn measure_to_csv(g: &ShiftMeasure) -> String {
    match g {
        ShiftMeasure::Discrete(d) => {
            let mut s = String::from("location,weight\n");
            for a in d.atoms() {
                let _ = writeln!(s, "{},{}", a.location, a.weight);
            }
            s
        }
        ShiftMeasure::Grid(grid) => {
            let mut s = format!("# bins={}\nbin_index,mass\n", grid.bins());
            for (b, m) in grid.masses().iter().enumerate() {
                let _ = writeln!(s, "{b},{m}");
            }
            s
        }
    }
}

pub fn write_measure(path: &Path, g: &ShiftMeasure) -> Result<()> {
    write_atomic(path, &measure_to_csv(g))
}

/// Reads either measure format, chosen by the header.
pub fn read_measure(path: &Path) -> Result<ShiftMeasure> {
    let text = fs::read_to_string(path)?;
    let t = CsvTable::parse(path, &text, &[&["location", "weight"], &["bin_index", "mass"]])?;
    if t.header_index() == 0 {
        let mut atoms = Vec::with_capacity(t.rows.len());
        for (line, f) in &t.rows {
            atoms.push((t.field::<f64>(*line, &f[0], "location")?, t.field::<f64>(*line, &f[1], "weight")?));
        }
        let d = DiscreteMeasure::from_atoms(atoms).map_err(|e| t.error(0, e.to_string()))?;
        return Ok(d.into());
    }
    let bins: usize = t
        .meta_parse("bins")?
        .ok_or_else(|| t.error(0, "grid density needs a '# bins=<B>' line"))?;
    let mut masses = vec![0.0; bins];
    for (line, f) in &t.rows {
        let b: usize = t.field(*line, &f[0], "bin index")?;
        if b >= bins {
            return Err(t.error(*line, format!("bin index {b} out of range for {bins} bins")));
        }
        masses[b] = t.field(*line, &f[1], "mass")?;
    }
    let g = GridDensity::new(masses).map_err(|e| t.error(0, e.to_string()))?;
    Ok(g.into())
}

/// Sidecar path holding oracle shifts: `data.csv` -> `data.shifts.csv`.
pub fn shifts_sidecar(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.shifts.csv"))
}

pub fn dataset_to_csv(data: &Dataset) -> String {
    let mut s = format!("# seed={}\n# cutoff={}\nobs,freq,re,im\n", data.seed(), data.cutoff());
    let l = data.cutoff() as i64;
    for (j, row) in data.rows().enumerate() {
        for (i, c) in row.iter().enumerate() {
            let _ = writeln!(s, "{j},{},{},{}", i as i64 - l, c.re, c.im);
        }
    }
    s
}

/// Writes the dataset and, when present, its oracle shifts to the sidecar.
pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    if let Some(shifts) = data.oracle_shifts() {
        let mut s = String::from("obs,shift\n");
        for (j, t) in shifts.iter().enumerate() {
            let _ = writeln!(s, "{j},{t}");
        }
        write_atomic(&shifts_sidecar(path), &s)?;
    }
    write_atomic(path, &dataset_to_csv(data))
}

/// Reads a dataset; rows must list observations in order, each with the
/// frequencies `-cutoff..=cutoff` in increasing order. The sidecar is read
/// when it exists.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let t = CsvTable::read(path, &["obs", "freq", "re", "im"])?;
    let seed: u64 = t.meta_parse("seed")?.ok_or_else(|| t.error(0, "missing '# seed=<u64>' line"))?;
    let cutoff: usize = match t.meta_parse("cutoff")? {
        Some(c) => c,
        None => {
            let mut m = 0usize;
            for (line, f) in &t.rows {
                m = m.max(t.field::<i64>(*line, &f[1], "frequency")?.unsigned_abs() as usize);
            }
            m
        }
    };
    let dim = 2 * cutoff + 1;
    let mut coeffs = Vec::with_capacity(t.rows.len());
    for (idx, (line, f)) in t.rows.iter().enumerate() {
        let j: usize = t.field(*line, &f[0], "observation index")?;
        let k: i64 = t.field(*line, &f[1], "frequency")?;
        if j != idx / dim || k != (idx % dim) as i64 - cutoff as i64 {
            return Err(t.error(
                *line,
                format!("expected observation {} frequency {}", idx / dim, (idx % dim) as i64 - cutoff as i64),
            ));
        }
        coeffs.push(Complex64::new(
            t.field(*line, &f[2], "real part")?,
            t.field(*line, &f[3], "imaginary part")?,
        ));
    }
    if coeffs.len() % dim != 0 {
        return Err(t.error(0, "last observation is incomplete"));
    }
    let sidecar = shifts_sidecar(path);
    let shifts = if sidecar.exists() {
        let s = CsvTable::read(&sidecar, &["obs", "shift"])?;
        let mut out = Vec::with_capacity(s.rows.len());
        for (idx, (line, f)) in s.rows.iter().enumerate() {
            let j: usize = s.field(*line, &f[0], "observation index")?;
            if j != idx {
                return Err(s.error(*line, format!("expected observation {idx}")));
            }
            out.push(s.field::<f64>(*line, &f[1], "shift")?);
        }
        Some(out)
    } else {
        None
    };
    Dataset::new(cutoff, coeffs, shifts, seed).map_err(|e| t.error(0, e.to_string()))
}

pub fn estimates_to_csv(rows: &[(DivergenceEstimate, u64)]) -> String {
    let mut s = String::from("kind,value,std_error,samples,seed\n");
    for (e, seed) in rows {
        let _ = writeln!(s, "{},{},{},{},{seed}", e.kind.name(), e.value, e.std_error, e.samples);
    }
    s
}

pub fn write_estimates(path: &Path, rows: &[(DivergenceEstimate, u64)]) -> Result<()> {
    write_atomic(path, &estimates_to_csv(rows))
}

pub fn certificates_to_csv(rows: &[CertificateRow]) -> String {
    let mut s = String::from("check,quantity,bound,margin,pass\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.check, r.quantity, r.bound, r.margin, r.pass);
    }
    s
}

pub fn write_certificates(path: &Path, rows: &[CertificateRow]) -> Result<()> {
    write_atomic(path, &certificates_to_csv(rows))
}

pub fn read_certificates(path: &Path) -> Result<Vec<CertificateRow>> {
    let t = CsvTable::read(path, &["check", "quantity", "bound", "margin", "pass"])?;
    t.rows
        .iter()
        .map(|(line, f)| {
            Ok(CertificateRow {
                check: f[0].clone(),
                quantity: t.field(*line, &f[1], "quantity")?,
                bound: t.field(*line, &f[2], "bound")?,
                margin: t.field(*line, &f[3], "margin")?,
                pass: t.field(*line, &f[4], "pass flag")?,
            })
        })
        .collect()
}

/// Writes `theta.csv`, `g.csv`, `ell.csv` and `diagnostics.csv` into `dir`.
pub fn write_chain(dir: &Path, out: &ChainOutput) -> Result<()> {
    let mut theta = String::from("iter,freq,re,im\n");
    let mut g = String::from("iter,bin,mass\n");
    let mut ell = String::from("iter,ell\n");
    for s in &out.samples {
        for (k, c) in s.theta.iter() {
            let _ = writeln!(theta, "{},{k},{},{}", s.iter, c.re, c.im);
        }
        for (b, m) in s.g.masses().iter().enumerate() {
            let _ = writeln!(g, "{},{b},{m}", s.iter);
        }
        let _ = writeln!(ell, "{},{}", s.iter, s.cutoff());
    }
    let mut diag = String::from("iter,loglik,accept_bd\n");
    for d in &out.diagnostics {
        let _ = writeln!(diag, "{},{},{}", d.iter, d.loglik, d.accept_bd);
    }
    write_atomic(&dir.join("theta.csv"), &theta)?;
    write_atomic(&dir.join("g.csv"), &g)?;
    write_atomic(&dir.join("ell.csv"), &ell)?;
    write_atomic(&dir.join("diagnostics.csv"), &diag)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_reports_line_numbers() {
        let text = "freq,re,im\n-1,0.5,0\n0,abc,1\n";
        let t = CsvTable::parse(Path::new("x.csv"), text, &[&["freq", "re", "im"]]).unwrap();
        let (line, f) = &t.rows[1];
        let err = t.field::<f64>(*line, &f[1], "real part").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn wrong_header_and_field_count() {
        assert!(CsvTable::parse(Path::new("x"), "a,b\n", &[&["freq", "re", "im"]]).is_err());
        let err = CsvTable::parse(Path::new("x"), "freq,re,im\n1,2\n", &[&["freq", "re", "im"]]);
        assert!(matches!(err, Err(Error::Parse { line: 2, .. })));
    }
}
