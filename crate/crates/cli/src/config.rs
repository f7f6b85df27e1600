//! Scenario configuration. One TOML file carries the medium and a table per
//! subcommand; every key has a default, so an empty file is valid.
//!
//! ```toml
//! [medium]
//! kind = "homogeneous"
//! c0 = 1.0
//!
//! [mc-propagate]
//! s = 0.05
//! n_paths = 20000
//! ```

use serde::{Deserialize, Serialize};
use wavepath::medium::ScenarioDescriptor;

use crate::commands::{GreenParams, KernelCheckParams, McParams, RayParams, SpectralParams, TomographyParams};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioConfig {
    pub medium: ScenarioDescriptor,
    pub kernel_check: KernelCheckParams,
    pub mc_propagate: McParams,
    pub ray_trace: RayParams,
    pub green_matrix: GreenParams,
    pub spectral_run: SpectralParams,
    pub tomography: TomographyParams,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            medium: ScenarioDescriptor::homogeneous(3, 1.0),
            kernel_check: Default::default(),
            mc_propagate: Default::default(),
            ray_trace: Default::default(),
            green_matrix: Default::default(),
            spectral_run: Default::default(),
            tomography: Default::default(),
        }
    }
}

impl ScenarioConfig {
    /// Parses a TOML document, reporting the dotted path of the first bad key.
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let value: toml::Value = toml::from_str(text).map_err(|e| CliError::config("<document>", e.message()))?;
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(if path == "." { "<root>".into() } else { path }, e.into_inner().message().to_string())
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(ScenarioConfig::from_toml_str("").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn unknown_key_reports_path() {
        let err = ScenarioConfig::from_toml_str("[tomography]\nkk = 2\n").unwrap_err();
        match err {
            CliError::Config { path, .. } => assert!(path.starts_with("tomography"), "{path}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn bad_type_reports_path() {
        let err = ScenarioConfig::from_toml_str("[mc-propagate]\nn_paths = \"many\"\n").unwrap_err();
        match err {
            CliError::Config { path, .. } => assert_eq!(path, "mc-propagate.n_paths"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn partial_tables_keep_other_defaults() {
        let c = ScenarioConfig::from_toml_str("[medium]\nkind = \"homogeneous\"\nc0 = 2.0\n[ray-trace]\ns = 0.5\n").unwrap();
        assert_eq!(c.ray_trace.s, 0.5);
        assert_eq!(c.ray_trace.n_steps, RayParams::default().n_steps);
        assert_eq!(c.medium, ScenarioDescriptor::homogeneous(3, 2.0));
    }
}
