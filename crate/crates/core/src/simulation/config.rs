use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use super::summary::Study;
use crate::{Error, Result};

/// A seeded study description, usually read from a `key = value` file.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub study: Study,
    pub parameters: BTreeMap<String, String>,
    pub reps: usize,
    pub master_seed: u64,
    /// Worker threads; `None` uses every available core.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(study: Study, reps: usize, master_seed: u64) -> Self {
        Self { study, parameters: BTreeMap::new(), reps, master_seed, threads: None }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    /// Parses `key = value` lines. Blank lines and `#` comments are ignored.
    ///
    /// `study`, `reps` and `master_seed` are required; every other key is a
    /// study parameter.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", i + 1)))?;
            let key = k.trim().to_string();
            if map.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        let study = Study::parse(&map.remove("study").ok_or_else(|| Error::MissingParameter("study".into()))?)?;
        let reps = take(&mut map, "reps")?;
        let master_seed = take(&mut map, "master_seed")?;
        let threads = map.remove("threads").map(|s| parse_value("threads", &s)).transpose()?;
        if reps == 0 {
            return Err(Error::invalid("reps must be at least 1"));
        }
        Ok(Self { study, parameters: map, reps, master_seed, threads })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// A required study parameter.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.parameters.get(key).ok_or_else(|| Error::MissingParameter(key.to_string()))?;
        parse_value(key, raw)
    }

    /// An optional study parameter.
    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.parameters.get(key) {
            Some(raw) => parse_value(key, raw),
            None => Ok(default),
        }
    }

    /// A required comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let raw = self.parameters.get(key).ok_or_else(|| Error::MissingParameter(key.to_string()))?;
        raw.split(',').map(|s| parse_value(key, s)).collect()
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Parse(format!("parameter `{key}`: cannot parse `{}`", raw.trim())))
}

fn take<T: FromStr>(map: &mut BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = map.remove(key).ok_or_else(|| Error::MissingParameter(key.to_string()))?;
    parse_value(key, &raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let c = ExperimentConfig::parse(
            "# table 1, first row\nstudy = denoising\nreps=10\nmaster_seed = 42\np1 = 100\np2 = 10\nr = 2\nt = 15\n",
        )
        .unwrap();
        assert_eq!(c.study, Study::Denoising);
        assert_eq!((c.reps, c.master_seed, c.threads), (10, 42, None));
        assert_eq!(c.get::<usize>("p1").unwrap(), 100);
        assert_eq!(c.get::<f64>("t").unwrap(), 15.0);
        assert!(c.get_or("squared", false).is_ok_and(|b| !b));
    }

    #[test]
    fn errors_name_the_key() {
        let e = ExperimentConfig::parse("study = cca\nmaster_seed = 1\n").unwrap_err();
        assert!(e.to_string().contains("`reps`"), "{e}");
        let e = ExperimentConfig::parse("study = nonsense\nreps = 1\nmaster_seed = 1\n").unwrap_err();
        assert!(matches!(e, Error::UnknownStudy(ref s) if s == "nonsense"));
        let c = ExperimentConfig::parse("study = cca\nreps = 1\nmaster_seed = 1\n").unwrap();
        assert!(c.get::<usize>("p1").unwrap_err().to_string().contains("`p1`"));
        assert!(ExperimentConfig::parse("study cca\n").is_err());
        assert!(ExperimentConfig::parse("study = cca\nstudy = cca\n").is_err());
    }

    #[test]
    fn lists() {
        let c = ExperimentConfig::new(Study::Clustering, 1, 1).with("n", "5, 10,20");
        assert_eq!(c.get_list::<usize>("n").unwrap(), vec![5, 10, 20]);
    }
}
