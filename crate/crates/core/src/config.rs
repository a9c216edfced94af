//! Flat `key = value` configuration files for the command-line tool.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown or repeated
//! keys are errors, reported with their line number.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::{read_curve, read_measure};
use crate::measure::DpConfig;
use crate::prior::Preset;
use crate::study::StudyConfig;

/// Parsed key/value pairs; values are consumed with [`KeyValues::take`].
#[derive(Debug)]
pub struct KeyValues {
    path: PathBuf,
    entries: BTreeMap<String, (String, usize)>,
}

impl KeyValues {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let (k, v) = s.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected key = value, got '{s}'"),
            })?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: "empty key".into(),
                });
            }
            if let Some((_, first)) = entries.insert(key.clone(), (v.trim().to_string(), line)) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    msg: format!("key '{key}' already set on line {first}"),
                });
            }
        }
        Ok(KeyValues {
            path: path.to_path_buf(),
            entries,
        })
    }

    /// Removes `key` and parses its value.
    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| Error::Parse {
                path: self.path.clone(),
                line,
                msg: format!("invalid value '{v}' for '{key}'"),
            }),
        }
    }

    fn take_with<T>(&mut self, key: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((v, line)) => f(&v).map(Some).map_err(|e| Error::Parse {
                path: self.path.clone(),
                line,
                msg: format!("'{key}': {e}"),
            }),
        }
    }

    /// Fails on the first key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.entries.iter().min_by_key(|(_, (_, line))| *line) {
            None => Ok(()),
            Some((key, (_, line))) => Err(Error::Parse {
                path: self.path,
                line: *line,
                msg: format!("unknown key '{key}'"),
            }),
        }
    }
}

/// Everything the command-line subcommands can be configured with.
#[derive(Clone, Debug)]
pub struct Settings {
    pub study: StudyConfig,
    /// Sample size for `simulate`.
    pub n: usize,
    /// Monte-Carlo draws for the certificate checks.
    pub cert_samples: usize,
    /// Random cases per certificate check.
    pub cert_cases: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            study: StudyConfig::default(),
            n: 200,
            cert_samples: 20_000,
            cert_cases: 4,
        }
    }
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut s = Settings::default();
        s.apply(KeyValues::read(path)?)?;
        Ok(s)
    }

    /// Applies every key of `kv`; relative `f0`/`g0` paths resolve against
    /// the configuration file's directory.
    pub fn apply(&mut self, mut kv: KeyValues) -> Result<()> {
        let base = kv.path.parent().map(Path::to_path_buf).unwrap_or_default();
        let st = &mut self.study;
        if let Some(v) = kv.take("seed")? {
            st.seed = v;
        }
        if let Some(v) = kv.take("smoothness")? {
            st.smoothness = v;
            st.prior.preset = Preset::NonAdaptive(v);
        }
        if let Some(p) = kv.take_with("f0", |v| read_curve(&base.join(v)))? {
            st.f0 = p;
        }
        if let Some(p) = kv.take_with("g0", |v| read_measure(&base.join(v)))? {
            st.g0 = p;
        }
        if let Some(v) = kv.take("l_obs")? {
            st.l_obs = v;
        }
        if let Some(v) = kv.take("n")? {
            self.n = v;
        }
        if let Some(v) = kv.take_with("n_grid", parse_list)? {
            st.n_grid = v;
        }
        if let Some(v) = kv.take("replicates")? {
            st.replicates = v;
        }
        if let Some(v) = kv.take("quantile")? {
            st.quantile = v;
        }
        if let Some(v) = kv.take("divergence_samples")? {
            st.divergence_samples = v;
        }
        if let Some(v) = kv.take_with("preset", Preset::parse)? {
            st.prior.preset = v;
        }
        if let Some(v) = kv.take("rho")? {
            st.prior.rho = v;
        }
        if let Some(v) = kv.take("c_lambda")? {
            st.prior.c_lambda = v;
        }
        if let Some(v) = kv.take("l_max")? {
            st.prior.l_max = v;
        }
        if let Some(v) = kv.take("zeta")? {
            st.prior.zeta = v;
        }
        let dp: &mut DpConfig = &mut st.prior.dp;
        if let Some(v) = kv.take("dp_mass")? {
            dp.total_mass = v;
        }
        if let Some(v) = kv.take("dp_truncation")? {
            dp.truncation = v;
        }
        let m = &mut st.mcmc;
        if let Some(v) = kv.take("iterations")? {
            m.iterations = v;
        }
        if let Some(v) = kv.take("burn_in")? {
            m.burn_in = v;
        }
        if let Some(v) = kv.take("thin")? {
            m.thin = v;
        }
        if let Some(v) = kv.take("bins")? {
            m.bins = v;
        }
        if let Some(v) = kv.take("birth_death_rate")? {
            m.birth_death_rate = v;
        }
        if let Some(v) = kv.take("cert_samples")? {
            self.cert_samples = v;
        }
        if let Some(v) = kv.take("cert_cases")? {
            self.cert_cases = v;
        }
        kv.finish()?;
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::invalid("n must be at least 1"));
        }
        if self.cert_samples < 1000 {
            return Err(Error::invalid("cert_samples must be at least 1000"));
        }
        if self.cert_cases == 0 {
            return Err(Error::invalid("cert_cases must be at least 1"));
        }
        self.study.validate()
    }
}

fn parse_list(v: &str) -> Result<Vec<usize>> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("invalid list entry '{}'", s.trim())))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Settings> {
        let mut s = Settings::default();
        s.apply(KeyValues::parse(Path::new("test.conf"), text)?)?;
        Ok(s)
    }

    #[test]
    fn reads_known_keys() {
        let s = parse("# comment\nseed = 9\nn_grid = 20, 40\npreset = adaptive\nbins=32\n").unwrap();
        assert_eq!(s.study.seed, 9);
        assert_eq!(s.study.n_grid, vec![20, 40]);
        assert_eq!(s.study.prior.preset, Preset::Adaptive);
        assert_eq!(s.study.mcmc.bins, 32);
    }

    #[test]
    fn unknown_key_reports_line() {
        match parse("seed = 1\n\nbogus = 2\n") {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("bogus"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_values_and_duplicates() {
        assert!(matches!(parse("seed = x\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("seed = 1\nseed = 2\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse("no equals sign\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("preset = weird\n"), Err(Error::Parse { line: 1, .. })));
        assert!(parse("replicates = 0\n").unwrap_err().is_validation());
    }
}
