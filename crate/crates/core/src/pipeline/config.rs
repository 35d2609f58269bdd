//! Plain-text key-value configuration with `[section]` headers, plus the
//! bundled experiment presets.

use std::collections::BTreeMap;
use std::path::Path;

use super::PipelineError;

/// Parsed config file: `section -> key -> value`. Keys set later override
/// earlier ones, which is how CLI flags overlay a preset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let mut out = ConfigFile::default();
        let mut current = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(inner) = line.strip_prefix('[') {
                let name = inner.strip_suffix(']').ok_or(PipelineError::Config {
                    line: idx + 1,
                    reason: "unterminated section header".to_string(),
                })?;
                current = name.trim().to_string();
                out.sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(PipelineError::Config {
                line: idx + 1,
                reason: format!("expected `key = value`, found `{line}`"),
            })?;
            if current.is_empty() {
                return Err(PipelineError::Config {
                    line: idx + 1,
                    reason: "key outside any [section]".to_string(),
                });
            }
            out.sections
                .get_mut(&current)
                .expect("section inserted above")
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn sections(&self) -> impl Iterator<Item = &str> {
        self.sections.keys().map(String::as_str)
    }

    pub fn keys(&self, section: &str) -> impl Iterator<Item = (&str, &str)> {
        self.sections
            .get(section)
            .into_iter()
            .flat_map(|s| s.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.into());
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|s| s.get(key)).map(String::as_str)
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str, PipelineError> {
        self.get(section, key).ok_or_else(|| PipelineError::MissingKey {
            section: section.to_string(),
            key: key.to_string(),
        })
    }

    fn parse_key<T: std::str::FromStr>(
        &self,
        section: &str,
        key: &str,
        default: T,
    ) -> Result<T, PipelineError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(raw) => raw.parse().map_err(|_| PipelineError::BadValue {
                section: section.to_string(),
                key: key.to_string(),
                value: raw.to_string(),
            }),
        }
    }

    pub fn get_f64(&self, section: &str, key: &str, default: f64) -> Result<f64, PipelineError> {
        self.parse_key(section, key, default)
    }

    pub fn get_usize(
        &self,
        section: &str,
        key: &str,
        default: usize,
    ) -> Result<usize, PipelineError> {
        self.parse_key(section, key, default)
    }

    pub fn get_u64(&self, section: &str, key: &str, default: u64) -> Result<u64, PipelineError> {
        self.parse_key(section, key, default)
    }

    pub fn get_bool(&self, section: &str, key: &str, default: bool) -> Result<bool, PipelineError> {
        match self.get(section, key) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(other) => Err(PipelineError::BadValue {
                section: section.to_string(),
                key: key.to_string(),
                value: other.to_string(),
            }),
        }
    }

    /// Comma-separated usize list, e.g. hidden layer widths.
    pub fn get_usize_list(
        &self,
        section: &str,
        key: &str,
        default: &[usize],
    ) -> Result<Vec<usize>, PipelineError> {
        match self.get(section, key) {
            None => Ok(default.to_vec()),
            Some(raw) => raw
                .split(',')
                .map(|p| {
                    p.trim().parse().map_err(|_| PipelineError::BadValue {
                        section: section.to_string(),
                        key: key.to_string(),
                        value: raw.to_string(),
                    })
                })
                .collect(),
        }
    }

    /// Renders back to the canonical INI text (sections and keys sorted).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (section, keys) in &self.sections {
            out.push_str(&format!("[{section}]\n"));
            for (key, value) in keys {
                out.push_str(&format!("{key} = {value}\n"));
            }
            out.push('\n');
        }
        out
    }
}

/// Experiment presets: supervised runs on complete rows only, with SMOTE,
/// and on the imputed dataset, plus the deep Q-learning baseline. Paths are
/// supplied separately (flags or an overlay config).
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "experiment1" => Some(PRESET_EXPERIMENT1),
        "experiment2" => Some(PRESET_EXPERIMENT2),
        "experiment3" => Some(PRESET_EXPERIMENT3),
        "rl-baseline" => Some(PRESET_RL_BASELINE),
        _ => None,
    }
}

pub const PRESET_NAMES: [&str; 4] =
    ["experiment1", "experiment2", "experiment3", "rl-baseline"];

const PRESET_EXPERIMENT1: &str = "\
# Supervised baseline on complete rows only: no imputation, no resampling.
[analyze]
enabled = true
threshold = 0.7

[impute]
enabled = false

[smote]
enabled = false

[split]
train_fraction = 0.75
seed = 5

[train]
kind = ann
hidden = 1200,1200,1200
batch_size = 512
learning_rate = 0.001
max_epochs = 100
patience = 5
weights = 0.69,3.44,19.5
init = he
complete_rows_only = true
seed = 7

[evaluate]
enabled = true
";

const PRESET_EXPERIMENT2: &str = "\
# Complete rows with SMOTE-equalized training classes (3 neighbours).
[analyze]
enabled = true
threshold = 0.7

[impute]
enabled = false

[split]
train_fraction = 0.75
seed = 5

[smote]
enabled = true
k = 3
seed = 13

[train]
kind = ann
hidden = 1200,1200,1200
batch_size = 512
learning_rate = 0.001
max_epochs = 100
patience = 5
weights = 0.5,0.85,1.0
init = he
complete_rows_only = true
seed = 7

[evaluate]
enabled = true
";

const PRESET_EXPERIMENT3: &str = "\
# Full dataset with staged random-forest imputation; inverse-frequency
# class weights.
[analyze]
enabled = true
threshold = 0.7

[impute]
enabled = true
trees = 100
max_iterations = 10
min_leaf = 5
seed = 11

[smote]
enabled = false

[split]
train_fraction = 0.75
seed = 5

[train]
kind = ann
hidden = 1200,1200,1200
batch_size = 512
learning_rate = 0.001
max_epochs = 100
patience = 5
weights = formula
init = he
seed = 7

[evaluate]
enabled = true
";

const PRESET_RL_BASELINE: &str = "\
# Deep Q-learning on complete rows; reward ratios from the class counts.
[impute]
enabled = false

[smote]
enabled = false

[split]
train_fraction = 0.75
seed = 5

[train]
kind = dqn
hidden = 1200,1200,1200
complete_rows_only = true
seed = 7

[dqn]
episodes = 500
gamma = 0.1
memory = 1000000
epsilon_start = 1.0
epsilon_end = 0.01
batch_size = 64
target_update_every = 5
learning_rate = 0.001
optimizer = sgd

[evaluate]
enabled = true
";
