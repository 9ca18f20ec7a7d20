//! Optional `--config` file. Flags win over the file, the file over
//! built-in defaults.
//!
//! ```toml
//! out_dir = "out"
//! threads = 2
//! deterministic = true
//!
//! [verify]
//! fw_iterations = 4
//! property_cases = 64
//! property_seed = 17
//!
//! [fields]
//! samples = 100
//! seed = 1
//! tol = 1e-12
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub deterministic: Option<bool>,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub fields: FieldsConfig,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub fw_iterations: Option<usize>,
    pub property_cases: Option<usize>,
    pub property_seed: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsConfig {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }
}

/// Picks flag, then config, then default, remembering which.
pub fn layered<T: Copy>(flag: Option<T>, file: Option<T>, default: T) -> (T, crate::report::Provenance) {
    use crate::report::Provenance;
    match (flag, file) {
        (Some(v), _) => (v, Provenance::Flag),
        (None, Some(v)) => (v, Provenance::Config),
        (None, None) => (default, Provenance::Default),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Provenance;

    #[test]
    fn flags_beat_file_beat_default() {
        assert_eq!(layered(Some(1), Some(2), 3), (1, Provenance::Flag));
        assert_eq!(layered(None, Some(2), 3), (2, Provenance::Config));
        assert_eq!(layered::<i32>(None, None, 3), (3, Provenance::Default));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("[fields]\nsample = 3\n").is_err());
        let c: FileConfig = toml::from_str("threads = 2\n[verify]\nfw_iterations = 3\n").unwrap();
        assert_eq!((c.threads, c.verify.fw_iterations), (Some(2), Some(3)));
    }
}
