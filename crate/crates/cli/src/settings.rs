//! Settings file and the merge of file values with command-line flags.
//!
//! The file holds one `key = value` per line; `#` starts a comment. Keys:
//! `corpus`, `model`, `mode`, `profile` (desk | paper), `clusters`, `k`,
//! `repeats`, `test_fraction`, `metric`, `grid`, `unseen` (default | reject),
//! `seed`, `threads`, plus the model parameters accepted by `--set`.
//! A flag given on the command line always wins over the file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use iotrisk::dimred::DEFAULT_K;
use iotrisk::encoding::UnseenPolicy;
use iotrisk::ensemble::{ModelFamily, ModelSpec, Profile, SPEC_KEYS};
use iotrisk::pipeline::{Mode, PipelineConfig};

use crate::args::{FeatureArgs, FoldArgs, ModelArgs};
use crate::exit::Failure;

const FILE_KEYS: [&str; 13] = [
    "corpus",
    "model",
    "mode",
    "profile",
    "clusters",
    "k",
    "repeats",
    "test_fraction",
    "metric",
    "grid",
    "unseen",
    "seed",
    "threads",
];

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_REPEATS: usize = 2;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    entries: Vec<(String, String)>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Failure::usage(format!("settings line {}: expected key = value", n + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if !FILE_KEYS.contains(&k.as_str()) && !SPEC_KEYS.contains(&k.as_str()) {
                return Err(Failure::usage(format!("settings line {}: unknown key `{k}`", n + 1)));
            }
            if entries.iter().any(|(e, _)| *e == k) {
                return Err(Failure::usage(format!("settings line {}: `{k}` given twice", n + 1)));
            }
            entries.push((k, v));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// `flag`, else the parsed file value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, Failure>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.get(key) {
            Some(s) => s
                .parse()
                .map_err(|e| Failure::usage(format!("settings `{key}`: {e}"))),
            None => Ok(default),
        }
    }

    pub fn corpus(&self, flag: Option<PathBuf>) -> Option<PathBuf> {
        flag.or_else(|| self.get("corpus").map(PathBuf::from))
    }

    pub fn seed(&self, flag: Option<u64>) -> Result<u64, Failure> {
        self.pick(flag, "seed", DEFAULT_SEED)
    }

    pub fn modes(&self, flag: &[Mode]) -> Result<Vec<Mode>, Failure> {
        if !flag.is_empty() {
            return Ok(flag.to_vec());
        }
        match self.get("mode") {
            Some(s) => s
                .split(',')
                .map(|m| m.trim().parse::<Mode>().map_err(|e| Failure::usage(e.to_string())))
                .collect(),
            None => Ok(vec![Mode::WoDr]),
        }
    }

    pub fn mode(&self, flag: Option<Mode>) -> Result<Mode, Failure> {
        self.pick(flag, "mode", Mode::WoDr)
    }

    pub fn folds(&self, f: &FoldArgs) -> Result<(usize, usize), Failure> {
        Ok((
            self.pick(f.k, "k", DEFAULT_FOLDS)?,
            self.pick(f.repeats, "repeats", DEFAULT_REPEATS)?,
        ))
    }

    pub fn pipeline(&self, mode: Mode, f: &FeatureArgs, seed: u64) -> Result<PipelineConfig, Failure> {
        let unseen = if f.reject_unseen {
            UnseenPolicy::Reject
        } else {
            match self.get("unseen") {
                None | Some("default") => UnseenPolicy::Default,
                Some("reject") => UnseenPolicy::Reject,
                Some(other) => return Err(Failure::usage(format!("settings `unseen`: `{other}` (default | reject)"))),
            }
        };
        let k = self.pick(f.clusters, "clusters", DEFAULT_K)?;
        if k == 0 {
            return Err(Failure::usage("--clusters must be at least 1"));
        }
        Ok(PipelineConfig {
            mode,
            k,
            unseen,
            seed,
            ..PipelineConfig::default()
        })
    }

    /// Family, profile and overrides. The paper profile takes no overrides.
    pub fn model_spec(&self, m: &ModelArgs) -> Result<ModelSpec, Failure> {
        let family: ModelFamily = self.pick(m.model, "model", ModelFamily::Gbdt)?;
        let profile = if m.paper_params {
            Profile::Paper
        } else {
            match self.get("profile") {
                None | Some("desk") => Profile::Desk,
                Some("paper") => Profile::Paper,
                Some(other) => return Err(Failure::usage(format!("settings `profile`: `{other}` (desk | paper)"))),
            }
        };
        let mut overrides: Vec<(String, String)> = self
            .entries
            .iter()
            .filter(|(k, _)| SPEC_KEYS.contains(&k.as_str()) && !m.set.iter().any(|(f, _)| f == k))
            .cloned()
            .collect();
        overrides.extend(m.set.iter().cloned());
        if profile == Profile::Paper && !overrides.is_empty() {
            return Err(Failure::usage(
                "the paper profile is fixed; drop the parameter overrides or use the desk profile",
            ));
        }
        let mut spec = ModelSpec::new(family, profile);
        for (k, v) in &overrides {
            spec.set(k, v).map_err(|e| Failure::usage(e.to_string()))?;
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let s = Settings::parse("seed = 3\nk = 10 # folds\n").unwrap();
        assert_eq!(s.seed(Some(9)).unwrap(), 9);
        assert_eq!(s.seed(None).unwrap(), 3);
        let folds = FoldArgs { k: None, repeats: Some(4) };
        assert_eq!(s.folds(&folds).unwrap(), (10, 4));
    }

    #[test]
    fn unknown_and_duplicate_keys_fail() {
        assert_eq!(Settings::parse("colour = red").unwrap_err().code, 2);
        assert!(Settings::parse("seed = 1\nseed = 2").is_err());
        assert!(Settings::parse("seed 1").is_err());
    }

    #[test]
    fn model_parameters_from_file_and_flags() {
        let s = Settings::parse("learning_rate = 0.2\nn_estimators = 40").unwrap();
        let m = ModelArgs {
            set: vec![("n_estimators".into(), "12".into())],
            ..ModelArgs::default()
        };
        let spec = s.model_spec(&m).unwrap();
        assert_eq!(spec.gbdt.learning_rate, 0.2);
        assert_eq!(spec.gbdt.n_estimators, 12);
    }

    #[test]
    fn paper_profile_rejects_overrides() {
        let s = Settings::parse("learning_rate = 0.2").unwrap();
        let m = ModelArgs {
            paper_params: true,
            ..ModelArgs::default()
        };
        assert_eq!(s.model_spec(&m).unwrap_err().code, 2);
        let spec = Settings::default().model_spec(&m).unwrap();
        assert_eq!(spec.gbdt.n_estimators, 10000);
    }

    #[test]
    fn mode_list_from_file() {
        let s = Settings::parse("mode = wo_dr, pca").unwrap();
        assert_eq!(s.modes(&[]).unwrap(), vec![Mode::WoDr, Mode::Pca]);
        assert_eq!(s.modes(&[Mode::Tsne]).unwrap(), vec![Mode::Tsne]);
        assert!(Settings::parse("mode = umap").unwrap().modes(&[]).is_err());
    }
}
