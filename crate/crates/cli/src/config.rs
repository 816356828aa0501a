//! Run configuration: defaults, a flat `key = value` file format and the
//! command-line overrides applied on top of it.
//!
//! ```text
//! # S 1-4 with a smaller grid
//! scenario = S 1-4
//! reps = 20
//! methods = kmeans, ward.D2
//! combos = _.EIHI, _d.MEI
//! ```

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use epiclust::benchkm::TbConfig;
use epiclust::curves::DEFAULT_LAMBDA;
use epiclust::metrics::DEFAULT_CANDIDATES;
use epiclust::simgen::NoiseMode;
use epiclust::ComboSpec;

use crate::ingest::HeaderMode;

/// Number of clusters: fixed, or picked by mean silhouette.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KChoice {
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for KChoice {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(KChoice::Auto);
        }
        let k: usize = s.parse().map_err(|_| anyhow!("k must be `auto` or an integer, got `{s}`"))?;
        Ok(KChoice::Fixed(k))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub input: Option<PathBuf>,
    pub header: HeaderMode,
    pub reps: usize,
    /// `None` takes the number of groups of the data.
    pub k: Option<KChoice>,
    pub seed: u64,
    /// `None` uses `max(4, m / 3)`.
    pub basis_size: Option<usize>,
    pub lambda: f64,
    pub noise: NoiseMode,
    /// Method names; `None` runs the default set of the subcommand.
    pub methods: Option<Vec<String>>,
    /// `None` runs all eighteen combinations.
    pub combos: Option<Vec<ComboSpec>>,
    pub candidates: Vec<usize>,
    pub tb: TbConfig,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            input: None,
            header: HeaderMode::Auto,
            reps: 100,
            k: None,
            seed: 1,
            basis_size: None,
            lambda: DEFAULT_LAMBDA,
            noise: NoiseMode::default(),
            methods: None,
            combos: None,
            candidates: DEFAULT_CANDIDATES.to_vec(),
            tb: TbConfig::default(),
            out: None,
        }
    }
}

/// Keys accepted in configuration files, spelled as the long flags.
pub const KEYS: [&str; 15] = [
    "scenario",
    "input",
    "header",
    "reps",
    "k",
    "seed",
    "basis-size",
    "lambda",
    "noise",
    "methods",
    "combos",
    "candidates",
    "gamma",
    "window",
    "out",
];

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| anyhow!("`{key}` expects a number, got `{value}`"))
}

fn candidates(value: &str) -> Result<Vec<usize>> {
    if let Some((a, b)) = value.split_once('-') {
        let (a, b): (usize, usize) = (number("candidates", a.trim())?, number("candidates", b.trim())?);
        if a > b {
            bail!("empty candidate range `{value}`");
        }
        return Ok((a..=b).collect());
    }
    list(value).iter().map(|v| number("candidates", v)).collect()
}

/// Splits configuration text into `(line, key, value)` triples. Keys are
/// normalized to the flag spelling, so `basis_size` and `basis-size` agree.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected `key = value`, got `{line}`", i + 1);
        };
        let key = key.trim().to_ascii_lowercase().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            bail!("line {}: unknown key `{key}`", i + 1);
        }
        let value = value.trim().trim_matches('"').to_string();
        out.push((i + 1, key, value));
    }
    Ok(out)
}

impl RunConfig {
    /// Sets one option from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "scenario" => self.scenario = Some(value.to_string()),
            "input" => self.input = Some(PathBuf::from(value)),
            "header" => self.header = value.parse()?,
            "reps" => self.reps = number(key, value)?,
            "k" => self.k = Some(value.parse()?),
            "seed" => self.seed = number(key, value)?,
            "basis-size" => self.basis_size = Some(number(key, value)?),
            "lambda" => self.lambda = number(key, value)?,
            "noise" => self.noise = value.parse()?,
            "methods" => self.methods = Some(list(value)),
            "combos" => {
                self.combos = if value.trim() == "all" {
                    None
                } else {
                    Some(list(value).iter().map(|c| c.parse()).collect::<epiclust::Result<_>>()?)
                }
            }
            "candidates" => self.candidates = candidates(value)?,
            "gamma" => self.tb.gamma = number(key, value)?,
            "window" => self.tb.window = number(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => bail!("unknown option `{key}`"),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (line, key, value) in parse_pairs(text)? {
            self.set(&key, &value).with_context(|| format!("line {line}"))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        self.apply_text(&text)
            .with_context(|| format!("in config file {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            bail!("reps must be at least 1");
        }
        if let Some(KChoice::Fixed(k)) = self.k {
            if k < 2 {
                bail!("k must be at least 2, got {k}");
            }
        }
        if self.candidates.is_empty() || self.candidates.iter().any(|&k| k < 2) {
            bail!("candidates must be a non-empty list of values of at least 2");
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            bail!("lambda must be finite and non-negative");
        }
        if let Some(b) = self.basis_size {
            if b < 4 {
                bail!("basis-size must be at least 4, got {b}");
            }
        }
        if matches!(&self.methods, Some(m) if m.is_empty()) {
            bail!("methods list is empty");
        }
        if matches!(&self.combos, Some(c) if c.is_empty()) {
            bail!("combos list is empty");
        }
        self.tb.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nscenario = S 1-4\nreps=7\nbasis_size = 12\ncombos = _.EIHI, dd2.MEI\n")
            .unwrap();
        c.set("reps", "3").unwrap();
        assert_eq!(c.scenario.as_deref(), Some("S 1-4"));
        assert_eq!(c.reps, 3);
        assert_eq!(c.basis_size, Some(12));
        assert_eq!(c.combos.as_ref().unwrap().len(), 2);
        c.validate().unwrap();
    }

    #[test]
    fn bad_lines_name_their_position() {
        let mut c = RunConfig::default();
        let e = c.apply_text("reps = 2\nnonsense\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = c.apply_text("\ncolour = red\n").unwrap_err();
        assert!(e.to_string().contains("unknown key"), "{e}");
        let e = c.apply_text("reps = many").unwrap_err();
        assert!(format!("{e:#}").contains("expects a number"), "{e:#}");
    }

    #[test]
    fn k_and_candidates() {
        let mut c = RunConfig::default();
        c.set("k", "auto").unwrap();
        assert_eq!(c.k, Some(KChoice::Auto));
        c.set("k", "1").unwrap();
        assert!(c.validate().is_err());
        c.set("k", "3").unwrap();
        c.set("candidates", "2-4").unwrap();
        assert_eq!(c.candidates, vec![2, 3, 4]);
        c.set("candidates", "2, 5").unwrap();
        assert_eq!(c.candidates, vec![2, 5]);
        c.validate().unwrap();
        c.set("window", "4").unwrap();
        assert!(c.validate().is_err());
    }
}
