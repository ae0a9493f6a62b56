use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use gdtm::internal::StepRule;
use gdtm::network::{Construction, NetConfig};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstructionArg {
    Internal,
    External,
}

impl From<ConstructionArg> for Construction {
    fn from(c: ConstructionArg) -> Self {
        match c {
            ConstructionArg::Internal => Construction::Internal,
            ConstructionArg::External => Construction::External,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Unit,
    #[value(alias = "line-search")]
    #[serde(alias = "line_search")]
    Linesearch,
}

impl From<ModeArg> for StepRule {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Unit => StepRule::Unit,
            ModeArg::Linesearch => StepRule::LineSearch,
        }
    }
}

/// Flags shared by every subcommand. Keys set in `--config` win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Corpus machine name or path to a JSON machine file.
    #[arg(long)]
    pub machine: Option<String>,
    #[arg(long, value_enum)]
    pub construction: Option<ConstructionArg>,
    /// JSON file with `x`, `y` and optionally `epsilon`.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Trace (JSON lines) or report (JSON) destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Enumerate every configuration instead of the reachable ones.
    #[arg(long)]
    #[serde(default)]
    pub full_enumeration: bool,
    /// Raw input bits such as `101`; they are framed before use.
    #[arg(long)]
    pub input: Option<String>,
    /// TOML file overriding these flags; network constants go under `[net]`.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(skip)]
    pub net: Option<NetConfig>,
}

impl Options {
    /// Applies the config file, if any, on top of the flags.
    pub fn resolve(self) -> Result<Options, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = load_toml(&path)?;
        Ok(Options {
            machine: file.machine.or(self.machine),
            construction: file.construction.or(self.construction),
            dataset: file.dataset.or(self.dataset),
            out: file.out.or(self.out),
            max_iters: file.max_iters.or(self.max_iters),
            mode: file.mode.or(self.mode),
            full_enumeration: file.full_enumeration || self.full_enumeration,
            input: file.input.or(self.input),
            config: Some(path),
            net: file.net.or(self.net),
        })
    }

    pub fn machine_name(&self) -> &str {
        self.machine.as_deref().unwrap_or("copy")
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters.unwrap_or(100_000)
    }

    /// Network settings with the construction flag applied.
    pub fn net_config(&self) -> NetConfig {
        let mut net = self.net.clone().unwrap_or_default();
        if let Some(c) = self.construction {
            net.construction = c.into();
        }
        if let Some(n) = self.max_iters {
            net.max_machine_steps = n;
        }
        net
    }
}

fn load_toml(path: &Path) -> Result<Options, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_wins_over_flags() {
        let dir = std::env::temp_dir().join(format!("gdtm-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "machine = \"increment\"\nmode = \"linesearch\"\n[net]\nb = 18\n").unwrap();
        let flags = Options {
            machine: Some("copy".into()),
            max_iters: Some(7),
            config: Some(path),
            ..Options::default()
        };
        let o = flags.resolve().unwrap();
        assert_eq!(o.machine_name(), "increment");
        assert_eq!(o.mode, Some(ModeArg::Linesearch));
        assert_eq!(o.max_iters(), 7);
        assert_eq!(o.net_config().b, Some(18));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Options>("machnie = \"copy\"").is_err());
    }
}
