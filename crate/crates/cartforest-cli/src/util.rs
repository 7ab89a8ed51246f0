//! Config resolution, dataset loading, and artifact helpers.

use cartforest::data::{load_csv, read_schema_file, split_train_test, Dataset};
use cartforest::error::{Error, Result};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Merges an optional `key = value` config file with command-line values
/// (flags override the file) and records every resolved setting for the
/// provenance echo. Unknown config keys are rejected.
pub struct Resolver {
    file: HashMap<String, String>,
    consumed: HashSet<String>,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(config: Option<&Path>) -> Result<Self> {
        let mut file = HashMap::new();
        if let Some(path) = config {
            for (lineno, raw) in std::fs::read_to_string(path)?.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    Error::Argument(format!(
                        "config line {}: expected 'key = value'",
                        lineno + 1
                    ))
                })?;
                file.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Resolver {
            file,
            consumed: HashSet::new(),
            resolved: BTreeMap::new(),
        })
    }

    fn file_value<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                Error::Argument(format!("config key '{key}': cannot parse '{raw}'"))
            }),
        }
    }

    /// Required setting with a default.
    pub fn get<T: FromStr + ToString>(
        &mut self,
        key: &str,
        cli: Option<T>,
        default: T,
    ) -> Result<T> {
        self.consumed.insert(key.to_string());
        let value = match cli {
            Some(v) => v,
            None => self.file_value(key)?.unwrap_or(default),
        };
        self.resolved.insert(key.to_string(), value.to_string());
        Ok(value)
    }

    /// Optional setting (absent unless given somewhere).
    pub fn get_opt<T: FromStr + ToString>(
        &mut self,
        key: &str,
        cli: Option<T>,
    ) -> Result<Option<T>> {
        self.consumed.insert(key.to_string());
        let value = match cli {
            Some(v) => Some(v),
            None => self.file_value(key)?,
        };
        self.resolved.insert(
            key.to_string(),
            value.as_ref().map_or("default".into(), |v| v.to_string()),
        );
        Ok(value)
    }

    /// Optional path-valued setting.
    pub fn get_opt_path(&mut self, key: &str, cli: Option<PathBuf>) -> Result<Option<PathBuf>> {
        Ok(self
            .get_opt::<String>(key, cli.map(|p| p.to_string_lossy().into_owned()))?
            .map(PathBuf::from))
    }

    /// Required path-valued setting.
    pub fn require_path(&mut self, key: &str, cli: Option<PathBuf>) -> Result<PathBuf> {
        Ok(PathBuf::from(self.require::<String>(
            key,
            cli.map(|p| p.to_string_lossy().into_owned()),
        )?))
    }

    /// Required setting without a default.
    pub fn require<T: FromStr + ToString>(&mut self, key: &str, cli: Option<T>) -> Result<T> {
        self.consumed.insert(key.to_string());
        match cli {
            Some(v) => {
                self.resolved.insert(key.to_string(), v.to_string());
                Ok(v)
            }
            None => match self.file_value::<T>(key)? {
                Some(v) => {
                    self.resolved.insert(key.to_string(), v.to_string());
                    Ok(v)
                }
                None => Err(Error::Argument(format!("missing required setting '{key}'"))),
            },
        }
    }

    /// Fails on config keys that no setting consumed.
    pub fn finish(mut self, command: &str) -> Result<BTreeMap<String, String>> {
        for key in self.file.keys() {
            if !self.consumed.contains(key) {
                return Err(Error::Argument(format!("unknown config key '{key}'")));
            }
        }
        self.resolved.insert("command".into(), command.to_string());
        Ok(self.resolved)
    }
}

/// The resolved provenance block written into every output directory.
/// `workers` is intentionally not part of it: artifacts are identical for
/// any worker count.
pub fn write_run_config(out: &Path, resolved: &BTreeMap<String, String>) -> Result<()> {
    let mut text = String::new();
    for (k, v) in resolved {
        if k == "workers" {
            continue;
        }
        text.push_str(&format!("{k} = {v}\n"));
    }
    std::fs::write(out.join("run_config.txt"), text)?;
    Ok(())
}

/// Loaded training (and optional test) data.
pub struct LoadedData {
    pub train: Dataset,
    pub test: Option<Dataset>,
}

/// Loads `data` against `schema`, optionally splitting off a training part
/// or loading a separate test file.
pub fn load_data(
    data: &Path,
    schema_path: &Path,
    target: &str,
    test: Option<&Path>,
    split_train: Option<usize>,
    seed: u64,
) -> Result<LoadedData> {
    let schema = read_schema_file(schema_path)?;
    let full = load_csv(data, &schema, target)?;
    match (split_train, test) {
        (Some(_), Some(_)) => Err(Error::Argument(
            "--split-train and --test are mutually exclusive".into(),
        )),
        (Some(n_train), None) => {
            let (train, test) = split_train_test(&full, n_train, seed)?;
            Ok(LoadedData {
                train,
                test: Some(test),
            })
        }
        (None, Some(test_path)) => {
            let test = load_csv(test_path, &schema, target)?;
            Ok(LoadedData {
                train: full,
                test: Some(test),
            })
        }
        (None, None) => Ok(LoadedData {
            train: full,
            test: None,
        }),
    }
}

pub fn ensure_out_dir(out: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(out)?;
    Ok(out.to_path_buf())
}

pub fn write_file(out: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::write(out.join(name), contents)?;
    Ok(())
}

/// Parses "bootstrap" | "identity" | "subsample:<k>" | "blb:<m>".
pub fn parse_resample(s: &str) -> Result<cartforest::data::ResampleKind> {
    use cartforest::data::ResampleKind;
    match s {
        "bootstrap" => Ok(ResampleKind::Bootstrap),
        "identity" => Ok(ResampleKind::Identity),
        _ => {
            if let Some(k) = s.strip_prefix("subsample:") {
                let k = k
                    .parse()
                    .map_err(|_| Error::Argument(format!("bad subsample size '{k}'")))?;
                Ok(ResampleKind::Subsample { k })
            } else if let Some(m) = s.strip_prefix("blb:") {
                let m = m
                    .parse()
                    .map_err(|_| Error::Argument(format!("bad blb size '{m}'")))?;
                Ok(ResampleKind::Blb { m })
            } else {
                Err(Error::Argument(format!(
                    "unknown resample kind '{s}' (bootstrap|identity|subsample:<k>|blb:<m>)"
                )))
            }
        }
    }
}

/// Parses "exhaustive" | "extra:<S>" | "extra".
pub fn parse_split_mode(s: &str) -> Result<cartforest::cart::SplitMode> {
    use cartforest::cart::SplitMode;
    match s {
        "exhaustive" => Ok(SplitMode::Exhaustive),
        "extra" => Ok(SplitMode::ExtraRandomized {
            thresholds_per_var: 1,
        }),
        _ => {
            if let Some(rest) = s.strip_prefix("extra:") {
                let thresholds_per_var = rest
                    .parse()
                    .map_err(|_| Error::Argument(format!("bad extra threshold count '{rest}'")))?;
                Ok(SplitMode::ExtraRandomized { thresholds_per_var })
            } else {
                Err(Error::Argument(format!(
                    "unknown split mode '{s}' (exhaustive|extra:<S>)"
                )))
            }
        }
    }
}

pub fn fmt(v: f64) -> String {
    format!("{v}")
}
