//! Run configuration: a flat `key = value` file overlaid by command-line flags.
//!
//! Keys are the long flag names without the leading dashes, e.g.
//!
//! ```text
//! # emotions, MLDM at 25%
//! arff = data/emotions.arff
//! xml = data/emotions.xml
//! method = mldm
//! p = 25
//! seed = 7
//! hidden = 128,128
//! ```
//!
//! `data` may appear on several lines; every other key at most once.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mldm::diffusion::DiffusionConfig;
use mldm::eval::MlknnConfig;
use mldm::resample::ResamplerSpec;

pub const DEFAULT_P: f64 = 25.0;
pub const DEFAULT_K: usize = 3;
pub const DEFAULT_FOLDS: usize = 5;

/// A configuration problem, reported with the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid value for `--{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    None,
    Mldm,
    Lpros,
    Mlros,
    Mlsmote,
    Remedial,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Method as clap::ValueEnum>::from_str(s.trim(), true)
            .map_err(|_| format!("unknown method `{s}` (expected none, mldm, lpros, mlros, mlsmote or remedial)"))
    }
}

/// One dataset: a single ARFF file, or train/test fold patterns with `{fold}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSpec {
    pub name: String,
    pub source: DataSource,
    pub xml: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Single(PathBuf),
    Folds { train: String, test: String },
}

impl FromStr for DataSpec {
    type Err = String;

    /// `[name=]data.arff,labels.xml` or `[name=]tra{fold}.arff,tst{fold}.arff,labels.xml`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (name, rest) = match s.split_once('=') {
            Some((n, r)) if !n.trim().is_empty() => (Some(n.trim().to_string()), r),
            _ => (None, s),
        };
        let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(format!("empty path in `{s}`"));
        }
        let (source, xml) = match parts[..] {
            [arff, xml] => (DataSource::Single(arff.into()), PathBuf::from(xml)),
            [train, test, xml] => {
                if !train.contains("{fold}") || !test.contains("{fold}") {
                    return Err(format!("fold patterns in `{s}` must contain `{{fold}}`"));
                }
                (DataSource::Folds { train: train.into(), test: test.into() }, PathBuf::from(xml))
            }
            _ => return Err(format!("expected `arff,xml` or `train,test,xml`, got `{s}`")),
        };
        let name = name.unwrap_or_else(|| {
            xml.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dataset".into())
        });
        Ok(DataSpec { name, source, xml })
    }
}

/// Everything a subcommand may need. `None` means "not given".
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub arff: Option<PathBuf>,
    pub xml: Option<PathBuf>,
    pub data: Vec<DataSpec>,
    pub method: Option<Method>,
    pub methods: Option<Vec<Method>>,
    pub p: Option<f64>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub steps: Option<usize>,
    pub beta_start: Option<f64>,
    pub beta_end: Option<f64>,
    pub hidden: Option<Vec<usize>>,
    pub epochs: Option<usize>,
    pub batch: Option<usize>,
    pub lr: Option<f64>,
    pub momentum: Option<f64>,
    pub folds: Option<usize>,
    pub jobs: Option<usize>,
    pub knn: Option<usize>,
    pub smoothing: Option<f64>,
}

fn value<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    raw.trim().parse().map_err(|e: T::Err| ConfigError::new(key, format!("`{raw}`: {e}")))
}

fn list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    raw.split(',').filter(|s| !s.trim().is_empty()).map(|s| value(key, s)).collect()
}

fn once<T>(slot: &mut Option<T>, key: &str, v: T) -> Result<(), ConfigError> {
    if slot.is_some() {
        return Err(ConfigError::new(key, "given more than once"));
    }
    *slot = Some(v);
    Ok(())
}

impl RunConfig {
    /// Parse the text of a config file. Paths are taken relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        let path = |raw: &str| base.join(raw.trim());
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, raw)) = line.split_once('=') else {
                return Err(ConfigError::new("config", format!("line {}: expected `key = value`", n + 1)));
            };
            let key = key.trim();
            let raw = raw.trim();
            let at = |e: ConfigError| ConfigError::new(e.field, format!("line {}: {}", n + 1, e.message));
            match key {
                "arff" => once(&mut c.arff, key, path(raw)),
                "xml" => once(&mut c.xml, key, path(raw)),
                "data" => value::<DataSpec>(key, raw).map(|d| c.data.push(rebase(d, base))),
                "method" => value(key, raw).and_then(|v| once(&mut c.method, key, v)),
                "methods" => list(key, raw).and_then(|v| once(&mut c.methods, key, v)),
                "p" => value(key, raw).and_then(|v| once(&mut c.p, key, v)),
                "k" => value(key, raw).and_then(|v| once(&mut c.k, key, v)),
                "seed" => value(key, raw).and_then(|v| once(&mut c.seed, key, v)),
                "out" => once(&mut c.out, key, path(raw)),
                "report" => once(&mut c.report, key, path(raw)),
                "table" => once(&mut c.table, key, path(raw)),
                "csv" => once(&mut c.csv, key, path(raw)),
                "steps" => value(key, raw).and_then(|v| once(&mut c.steps, key, v)),
                "beta-start" => value(key, raw).and_then(|v| once(&mut c.beta_start, key, v)),
                "beta-end" => value(key, raw).and_then(|v| once(&mut c.beta_end, key, v)),
                "hidden" => list(key, raw).and_then(|v| once(&mut c.hidden, key, v)),
                "epochs" => value(key, raw).and_then(|v| once(&mut c.epochs, key, v)),
                "batch" => value(key, raw).and_then(|v| once(&mut c.batch, key, v)),
                "lr" => value(key, raw).and_then(|v| once(&mut c.lr, key, v)),
                "momentum" => value(key, raw).and_then(|v| once(&mut c.momentum, key, v)),
                "folds" => value(key, raw).and_then(|v| once(&mut c.folds, key, v)),
                "jobs" => value(key, raw).and_then(|v| once(&mut c.jobs, key, v)),
                "knn" => value(key, raw).and_then(|v| once(&mut c.knn, key, v)),
                "smoothing" => value(key, raw).and_then(|v| once(&mut c.smoothing, key, v)),
                _ => Err(ConfigError::new("config", format!("unknown key `{key}`"))),
            }
            .map_err(at)?;
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text, path.parent().unwrap_or(Path::new("")))
    }

    /// Values set in `flags` replace those in `self`.
    pub fn overlay(mut self, flags: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if flags.$f.is_some() { self.$f = flags.$f; } )* };
        }
        take!(
            arff, xml, method, methods, p, k, seed, out, report, table, csv, steps, beta_start, beta_end, hidden,
            epochs, batch, lr, momentum, folds, jobs, knn, smoothing
        );
        if !flags.data.is_empty() {
            self.data = flags.data;
        }
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Diffusion settings. Changing `steps` alone rescales the default schedule.
    pub fn diffusion(&self) -> Result<DiffusionConfig, ConfigError> {
        let mut c = DiffusionConfig::default();
        if let Some(steps) = self.steps {
            if steps == 0 {
                return Err(ConfigError::new("steps", "need at least one diffusion step"));
            }
            if self.beta_start.is_none() && self.beta_end.is_none() {
                c = c.with_scaled_schedule(steps);
            }
            c.steps = steps;
        }
        c.beta_start = self.beta_start.unwrap_or(c.beta_start);
        c.beta_end = self.beta_end.unwrap_or(c.beta_end);
        if !(c.beta_start > 0.0 && c.beta_start <= c.beta_end && c.beta_end < 1.0) {
            let field = if c.beta_start > 0.0 && c.beta_start < 1.0 { "beta-end" } else { "beta-start" };
            return Err(ConfigError::new(
                field,
                format!("need 0 < beta-start <= beta-end < 1, got {} and {}", c.beta_start, c.beta_end),
            ));
        }
        if self.hidden.is_some() {
            c.hidden = self.hidden.clone();
        }
        c.epochs = self.epochs.unwrap_or(c.epochs);
        c.batch_size = self.batch.unwrap_or(c.batch_size);
        c.learning_rate = self.lr.unwrap_or(c.learning_rate);
        c.momentum = self.momentum.unwrap_or(c.momentum);
        c.validate().map_err(from_core)?;
        Ok(c)
    }

    /// The resampler for `method`, validated.
    pub fn spec(&self, method: Method) -> Result<ResamplerSpec, ConfigError> {
        let p = self.p.unwrap_or(DEFAULT_P);
        let spec = match method {
            Method::None => ResamplerSpec::Identity,
            Method::Mldm => ResamplerSpec::Mldm { p, config: self.diffusion()? },
            Method::Lpros => ResamplerSpec::Lpros { p },
            Method::Mlros => ResamplerSpec::Mlros { p },
            Method::Mlsmote => ResamplerSpec::Mlsmote { k: self.k.unwrap_or(DEFAULT_K) },
            Method::Remedial => ResamplerSpec::Remedial,
        };
        spec.validate().map_err(from_core)?;
        Ok(spec)
    }

    pub fn classifier(&self) -> Result<MlknnConfig, ConfigError> {
        let d = MlknnConfig::default();
        let c = MlknnConfig { k: self.knn.unwrap_or(d.k), s: self.smoothing.unwrap_or(d.s) };
        c.validate().map_err(from_core)?;
        Ok(c)
    }

    /// The non-empty method list.
    pub fn method_list(&self) -> Result<Vec<Method>, ConfigError> {
        match &self.methods {
            Some(m) if !m.is_empty() => Ok(m.clone()),
            _ => Err(ConfigError::new("methods", "at least one method is required")),
        }
    }
}

fn rebase(mut d: DataSpec, base: &Path) -> DataSpec {
    d.xml = base.join(&d.xml);
    d.source = match d.source {
        DataSource::Single(p) => DataSource::Single(base.join(p)),
        DataSource::Folds { train, test } => DataSource::Folds {
            train: base.join(train).to_string_lossy().into_owned(),
            test: base.join(test).to_string_lossy().into_owned(),
        },
    };
    d
}

/// Map a library parameter error onto the flag that carries it.
pub fn from_core(e: mldm::Error) -> ConfigError {
    match e {
        mldm::Error::InvalidParameter { name, message } => {
            let field = match name {
                "betas" => "beta-start",
                other => other,
            };
            ConfigError::new(field, message)
        }
        other => ConfigError::new("config", other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_with_comments() {
        let text = "# a run\narff = a.arff  # trailing\nmethod = MLDM\np = 12.5\nhidden = 32, 16\ndata = e=x.arff,x.xml\n";
        let c = RunConfig::parse(text, Path::new("base")).unwrap();
        assert_eq!(c.arff, Some(PathBuf::from("base/a.arff")));
        assert_eq!(c.method, Some(Method::Mldm));
        assert_eq!(c.p, Some(12.5));
        assert_eq!(c.hidden, Some(vec![32, 16]));
        assert_eq!(c.data[0].name, "e");
        assert_eq!(c.data[0].source, DataSource::Single("base/x.arff".into()));
    }

    #[test]
    fn rejects_unknown_and_repeated_keys() {
        let e = RunConfig::parse("colour = red\n", Path::new("")).unwrap_err();
        assert!(e.message.contains("unknown key `colour`"));
        let e = RunConfig::parse("p = 1\np = 2\n", Path::new("")).unwrap_err();
        assert_eq!(e.field, "p");
        let e = RunConfig::parse("p = lots\n", Path::new("")).unwrap_err();
        assert_eq!(e.field, "p");
        assert!(e.message.starts_with("line 1"));
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig { p: Some(10.0), k: Some(5), ..Default::default() };
        let flags = RunConfig { p: Some(30.0), ..Default::default() };
        let c = file.overlay(flags);
        assert_eq!((c.p, c.k), (Some(30.0), Some(5)));
    }

    #[test]
    fn data_specs() {
        let d: DataSpec = "tra{fold}.arff,tst{fold}.arff,dir/emotions.xml".parse().unwrap();
        assert_eq!(d.name, "emotions");
        assert!(matches!(d.source, DataSource::Folds { .. }));
        assert!("a.arff".parse::<DataSpec>().is_err());
        assert!("tra.arff,tst.arff,x.xml".parse::<DataSpec>().is_err());
    }

    #[test]
    fn negative_p_names_the_flag() {
        let c = RunConfig { p: Some(-5.0), ..Default::default() };
        let e = c.spec(Method::Lpros).unwrap_err();
        assert_eq!(e.field, "p");
        assert!(e.to_string().contains("--p"));
    }

    #[test]
    fn steps_alone_rescale_the_schedule() {
        let c = RunConfig { steps: Some(1000), ..Default::default() };
        let d = c.diffusion().unwrap();
        assert_eq!((d.steps, d.beta_start, d.beta_end), (1000, 1e-4, 0.02));
        let c = RunConfig { steps: Some(50), beta_start: Some(0.01), ..Default::default() };
        let d = c.diffusion().unwrap();
        assert_eq!((d.beta_start, d.beta_end), (0.01, 0.2));
        let c = RunConfig { beta_end: Some(1.5), ..Default::default() };
        assert_eq!(c.diffusion().unwrap_err().field, "beta-end");
    }
}
