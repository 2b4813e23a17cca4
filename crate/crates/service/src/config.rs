//! Settings for the server and the CLI.
//!
//! Every value can come from a command-line flag, a `COACH_*` environment
//! variable, or a TOML config file, in that order of precedence, before
//! falling back to a built-in default.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use chrono::NaiveDate;
use clap::{Args, ValueEnum};
use coach_core::{demo, CoachConfig, ModelSettings};
use coach_healthdata::{parse_time_zone, HealthStore, StoreConfig};
use coach_llm::live::{DEFAULT_API_KEY_ENV, DEFAULT_ENDPOINT};
use coach_llm::{LiveConfig, LiveProvider, Provider, ReplayProvider, DEFAULT_MODEL, DEFAULT_TEMPERATURE};
use serde::Deserialize;

pub const DEFAULT_DATA_DIR: &str = "coach-data";
pub const DEFAULT_BIND: &str = "127.0.0.1";
pub const DEFAULT_PORT: u16 = 8080;

/// A configuration mistake the user has to fix; the CLI exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    /// An OpenAI-compatible chat-completions endpoint.
    Live,
    /// Answers from a recorded cassette; never touches the network.
    Replay,
    /// The built-in offline demo model.
    Scripted,
}

/// Contents of the TOML config file. All keys are optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub bind: Option<String>,
    pub port: Option<u16>,
    pub provider: Option<ProviderKind>,
    pub cassette: Option<PathBuf>,
    pub timezone: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_tool_calls: Option<usize>,
    pub today: Option<NaiveDate>,
    pub api_token: Option<String>,
    pub endpoint: Option<String>,
    pub api_key_env: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))?;
        toml::from_str(&text).map_err(|e| usage(format!("config file {}: {e}", path.display())))
    }
}

/// Options shared by every command that talks to the coach.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML config file.
    #[arg(long, env = "COACH_CONFIG")]
    pub config: Option<PathBuf>,
    /// Directory holding imported health records and sessions [default: coach-data].
    #[arg(long, env = "COACH_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    /// Chat model backend [default: live].
    #[arg(long, env = "COACH_PROVIDER", value_enum)]
    pub provider: Option<ProviderKind>,
    /// Cassette file for the replay provider.
    #[arg(long, env = "COACH_CASSETTE")]
    pub cassette: Option<PathBuf>,
    /// IANA time zone used to bucket health data [default: UTC].
    #[arg(long, env = "COACH_TIMEZONE")]
    pub timezone: Option<String>,
    /// Model id sent to the provider [default: gpt-4-0613].
    #[arg(long, env = "COACH_MODEL")]
    pub model: Option<String>,
    /// Sampling temperature [default: 1.0].
    #[arg(long, env = "COACH_TEMPERATURE")]
    pub temperature: Option<f64>,
    /// Tool executions allowed per turn [default: 3].
    #[arg(long, env = "COACH_MAX_TOOL_CALLS")]
    pub max_tool_calls: Option<usize>,
    /// Pin the date shown to the model (YYYY-MM-DD) instead of the current date.
    #[arg(long, env = "COACH_TODAY")]
    pub today: Option<NaiveDate>,
    /// Chat-completions URL for the live provider.
    #[arg(long, env = "COACH_ENDPOINT")]
    pub endpoint: Option<String>,
    /// Environment variable holding the live provider's API key [default: OPENAI_API_KEY].
    #[arg(long, env = "COACH_API_KEY_ENV")]
    pub api_key_env: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderSettings {
    pub kind: ProviderKind,
    pub cassette: Option<PathBuf>,
    pub endpoint: String,
    pub api_key_env: String,
}

/// Fully resolved settings.
#[derive(Debug, Clone)]
pub struct Settings {
    pub data_dir: PathBuf,
    pub provider: ProviderSettings,
    pub time_zone: chrono_tz::Tz,
    pub coach: CoachConfig,
    pub file: FileConfig,
}

impl CommonArgs {
    pub fn file_config(&self) -> anyhow::Result<FileConfig> {
        match &self.config {
            Some(path) => FileConfig::load(path),
            None => Ok(FileConfig::default()),
        }
    }

    pub fn resolve(&self) -> anyhow::Result<Settings> {
        let file = self.file_config()?;
        let kind = self.provider.or(file.provider).unwrap_or(ProviderKind::Live);
        let provider = ProviderSettings {
            kind,
            cassette: self.cassette.clone().or_else(|| file.cassette.clone()),
            endpoint: self
                .endpoint
                .clone()
                .or_else(|| file.endpoint.clone())
                .unwrap_or_else(|| DEFAULT_ENDPOINT.to_string()),
            api_key_env: self
                .api_key_env
                .clone()
                .or_else(|| file.api_key_env.clone())
                .unwrap_or_else(|| DEFAULT_API_KEY_ENV.to_string()),
        };
        if kind == ProviderKind::Replay && provider.cassette.is_none() {
            return Err(usage("the replay provider needs --cassette"));
        }
        let zone_name = self.timezone.clone().or_else(|| file.timezone.clone()).unwrap_or_else(|| "UTC".into());
        let time_zone = parse_time_zone(&zone_name).map_err(|e| usage(format!("--timezone: {e}")))?;
        let temperature = self.temperature.or(file.temperature).unwrap_or(DEFAULT_TEMPERATURE);
        if !(0.0..=2.0).contains(&temperature) {
            return Err(usage(format!("--temperature must be within 0..=2, got {temperature}")));
        }
        let coach = CoachConfig {
            model: ModelSettings {
                model_id: self.model.clone().or_else(|| file.model.clone()).unwrap_or_else(|| DEFAULT_MODEL.into()),
                temperature,
            },
            max_tool_calls: self
                .max_tool_calls
                .or(file.max_tool_calls)
                .unwrap_or(coach_core::orchestrator::DEFAULT_MAX_TOOL_CALLS),
            today: self.today.or(file.today),
        };
        Ok(Settings {
            data_dir: self.data_dir.clone().or_else(|| file.data_dir.clone()).unwrap_or_else(|| DEFAULT_DATA_DIR.into()),
            provider,
            time_zone,
            coach,
            file,
        })
    }
}

impl Settings {
    pub fn health_dir(&self) -> PathBuf {
        self.data_dir.join("health")
    }

    pub fn sessions_dir(&self) -> PathBuf {
        self.data_dir.join("sessions")
    }

    pub fn open_store(&self) -> anyhow::Result<HealthStore> {
        let config = StoreConfig {
            time_zone: self.time_zone,
            ..StoreConfig::default()
        };
        HealthStore::open(self.health_dir(), config)
            .with_context(|| format!("opening health store in {}", self.health_dir().display()))
    }

    pub fn build_provider(&self) -> anyhow::Result<Arc<dyn Provider>> {
        build_provider(&self.provider, demo::demo_provider)
    }
}

/// Builds a provider. `scripted` is whatever offline model the caller supplies.
pub fn build_provider<P: Provider + 'static>(
    settings: &ProviderSettings,
    scripted: impl FnOnce() -> P,
) -> anyhow::Result<Arc<dyn Provider>> {
    Ok(match settings.kind {
        ProviderKind::Live => Arc::new(LiveProvider::new(LiveConfig::from_env(
            settings.endpoint.clone(),
            &settings.api_key_env,
        ))?),
        ProviderKind::Replay => {
            let path = settings
                .cassette
                .as_ref()
                .ok_or_else(|| usage("the replay provider needs a cassette"))?;
            Arc::new(
                ReplayProvider::from_file(path).with_context(|| format!("loading cassette {}", path.display()))?,
            )
        }
        ProviderKind::Scripted => Arc::new(scripted()),
    })
}

/// Options of `coach serve` beyond [`CommonArgs`].
#[derive(Debug, Clone, Default, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Address to listen on [default: 127.0.0.1].
    #[arg(long, env = "COACH_BIND")]
    pub bind: Option<String>,
    /// Port to listen on [default: 8080].
    #[arg(long, env = "COACH_PORT")]
    pub port: Option<u16>,
    /// Require `Authorization: Bearer <token>` on every API request.
    #[arg(long, env = "COACH_API_TOKEN", hide_env_values = true)]
    pub api_token: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ServeSettings {
    pub settings: Settings,
    pub bind: String,
    pub port: u16,
    pub api_token: Option<String>,
}

impl ServeArgs {
    pub fn resolve(&self) -> anyhow::Result<ServeSettings> {
        let settings = self.common.resolve()?;
        let file = &settings.file;
        Ok(ServeSettings {
            bind: self.bind.clone().or_else(|| file.bind.clone()).unwrap_or_else(|| DEFAULT_BIND.into()),
            port: self.port.or(file.port).unwrap_or(DEFAULT_PORT),
            api_token: self.api_token.clone().or_else(|| file.api_token.clone()).filter(|t| !t.is_empty()),
            settings,
        })
    }
}
