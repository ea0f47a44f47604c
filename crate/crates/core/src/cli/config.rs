//! JSON run configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{InitialDataSpec, Regularity, StudyConfig};
use crate::profile::VelocityProfile;
use crate::system::KernelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Nodes,
    System,
    SolveMoments,
    SolveKinetic,
    SolveBgk,
    Convergence,
    Stability,
    BgkLimit,
    Validate,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Nodes,
        Command::System,
        Command::SolveMoments,
        Command::SolveKinetic,
        Command::SolveBgk,
        Command::Convergence,
        Command::Stability,
        Command::BgkLimit,
        Command::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Nodes => "nodes",
            Command::System => "system",
            Command::SolveMoments => "solve-moments",
            Command::SolveKinetic => "solve-kinetic",
            Command::SolveBgk => "solve-bgk",
            Command::Convergence => "convergence",
            Command::Stability => "stability",
            Command::BgkLimit => "bgk-limit",
            Command::Validate => "validate",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid("command", format!("unknown command `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default = "default_kernel_profile")]
    pub profile: VelocityProfile,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_lambda_loss")]
    pub lambda_loss: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            profile: default_kernel_profile(),
            alphas: default_alphas(),
            lambda_loss: default_lambda_loss(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default = "default_regularity")]
    pub regularity: Regularity,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_data_profile")]
    pub velocity: VelocityProfile,
    #[serde(default = "default_target_norm")]
    pub target_norm: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            regularity: default_regularity(),
            seed: default_seed(),
            velocity: default_data_profile(),
            target_norm: default_target_norm(),
        }
    }
}

/// One run of `momclose`. Every field has a default, so `{}` is a valid file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_horizon")]
    pub horizon_t: f64,
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default = "default_nv")]
    pub nv: usize,
    /// Defaults to `2 (1 + horizon_t)`.
    #[serde(default)]
    pub domain_length: Option<f64>,
    #[serde(default = "default_time_samples")]
    pub time_samples: usize,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub out_dir: Option<std::path::PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

fn default_kernel_profile() -> VelocityProfile {
    VelocityProfile::bump(0.0, 0.8, 1.0)
}
fn default_alphas() -> Vec<f64> {
    vec![1.0]
}
fn default_lambda_loss() -> f64 {
    1.0
}
fn default_regularity() -> Regularity {
    Regularity::Sobolev { k: 2 }
}
fn default_seed() -> u64 {
    1
}
fn default_data_profile() -> VelocityProfile {
    VelocityProfile::bump(0.0, 0.4, 1.0)
}
fn default_target_norm() -> f64 {
    1.0
}
fn default_order() -> usize {
    4
}
fn default_n_list() -> Vec<usize> {
    vec![4, 6, 8, 12, 16, 24, 32, 48]
}
fn default_horizon() -> f64 {
    1.0
}
fn default_nx() -> usize {
    512
}
fn default_nv() -> usize {
    64
}
fn default_time_samples() -> usize {
    32
}
fn default_eps_list() -> Vec<f64> {
    (0..11).map(|k| 0.1 / 2f64.powi(k)).collect()
}
fn default_eps() -> f64 {
    0.01
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid("config", e.to_string()))
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length.unwrap_or(2.0 * (1.0 + self.horizon_t))
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        KernelSpec::new(
            self.kernel.profile.clone(),
            self.kernel.alphas.clone(),
            self.kernel.lambda_loss,
            (-1.0, 1.0),
        )
    }

    pub fn data(&self) -> InitialDataSpec {
        InitialDataSpec {
            regularity: self.data.regularity.clone(),
            seed: self.data.seed,
            nx: self.nx,
            length: self.domain_length(),
            velocity: self.data.velocity.clone(),
            target_norm: self.data.target_norm,
        }
    }

    pub fn study(&self) -> Result<StudyConfig> {
        Ok(StudyConfig {
            n_list: self.n_list.clone(),
            horizon: self.horizon_t,
            kernel: self.kernel()?,
            data: self.data(),
            nv: self.nv,
            time_samples: self.time_samples,
            eps_list: self.eps_list.clone(),
            seeds: self.seeds.clone(),
        })
    }

    /// Range checks for every field, without touching the solvers.
    pub fn validate(&self) -> Result<()> {
        self.validate_for(Command::Validate)
    }

    /// Range checks for the fields `command` reads. `Validate` checks all of them.
    pub fn validate_for(&self, command: Command) -> Result<()> {
        if self.order > 128 {
            return Err(Error::invalid("order", "must be at most 128"));
        }
        if !(self.horizon_t > 0.0) || !self.horizon_t.is_finite() {
            return Err(Error::invalid("horizon_t", "must be positive and finite"));
        }
        if self.nx < 2 || !self.nx.is_power_of_two() || self.nx > 1 << 16 {
            return Err(Error::invalid("nx", "must be a power of two between 2 and 65536"));
        }
        if self.nv == 0 || self.nv > 512 {
            return Err(Error::invalid("nv", "must be between 1 and 512"));
        }
        if self.n_list.iter().any(|&n| n > 128) {
            return Err(Error::invalid("n_list", "orders must be at most 128"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::invalid("eps", "must be positive"));
        }
        let length = self.domain_length();
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::invalid("domain_length", "must be positive and finite"));
        }
        if self.order + 1 > self.nv {
            return Err(Error::invalid("order", "needs at least order + 1 velocity nodes"));
        }
        let kernel = self.kernel().map_err(|e| name_key("kernel.profile", e))?;
        if command == Command::Nodes || command == Command::System {
            return Ok(());
        }
        self.data()
            .validate(kernel.interval)
            .map_err(|e| name_key("data.velocity", e))?;
        match command {
            Command::Convergence | Command::Stability | Command::BgkLimit | Command::Validate => {
                self.study()?.validate()
            }
            _ => Ok(()),
        }
    }
}

/// Attaches the config key to errors that do not carry one.
fn name_key(key: &str, err: Error) -> Error {
    match err {
        Error::BumpOutsideInterval { .. } => Error::invalid(key, err.to_string()),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_uses_defaults() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c.nx, 512);
        assert_eq!(c.domain_length(), 4.0);
        assert_eq!(c.time_samples, 32);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_json(r#"{"horizon": 1.0}"#).unwrap_err();
        assert!(err.to_string().contains("horizon"));
        assert!(RunConfig::from_json(r#"{"kernel": {"lambda": 1.0}}"#).is_err());
    }

    #[test]
    fn validation_names_the_key() {
        let c = RunConfig::from_json(r#"{"nx": 100}"#).unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("nx"));
        let c = RunConfig::from_json(r#"{"n_list": [8, 4]}"#).unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("n_list"));
        assert!(c.validate_for(Command::SolveKinetic).is_ok());
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
            let json = serde_json::to_string(&c).unwrap();
            assert_eq!(json, format!("\"{}\"", c.name()));
        }
        assert!("plot".parse::<Command>().is_err());
    }
}
