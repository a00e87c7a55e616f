//! Output bookkeeping shared by the subcommands: the output directory, the
//! list of files written, input digests and the run manifest.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// A failed run and its exit code (1 usage/config, 2 data).
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
    /// Subcommand whose usage line should accompany the message.
    pub usage_for: Option<&'static str>,
}

impl Failure {
    pub fn usage(subcommand: &'static str, message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
            usage_for: Some(subcommand),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
            usage_for: None,
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
            usage_for: None,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<monoculture::Error> for Failure {
    fn from(e: monoculture::Error) -> Self {
        if e.is_data_error() {
            Failure::data(e.to_string())
        } else {
            Failure::config(e.to_string())
        }
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Serialize)]
struct InputDigest {
    role: String,
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    version: &'a str,
    seed: u64,
    format: OutFormat,
    config: &'a serde_json::Value,
    inputs: &'a [InputDigest],
    outputs: &'a [String],
}

/// One invocation's output directory and record of what it read and wrote.
pub struct Run {
    subcommand: &'static str,
    dir: PathBuf,
    pub format: OutFormat,
    pub seed: u64,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
}

impl Run {
    pub fn new(subcommand: &'static str, dir: &Path, format: OutFormat, seed: u64) -> Outcome<Run> {
        fs::create_dir_all(dir).map_err(|e| Failure::data(format!("{}: {e}", dir.display())))?;
        Ok(Run {
            subcommand,
            dir: dir.to_path_buf(),
            format,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    /// Record the SHA-256 of an input file.
    pub fn input(&mut self, role: &str, path: &Path) -> Outcome {
        let bytes = fs::read(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        self.inputs.push(InputDigest {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Note a file written by a library call.
    pub fn wrote(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Outcome {
        let p = self.path(name);
        fs::write(&p, contents).map_err(|e| Failure::data(format!("{}: {e}", p.display())))?;
        self.wrote(name);
        Ok(())
    }

    /// Write `value` as pretty JSON when the JSON format was requested.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Outcome {
        if self.format != OutFormat::Json {
            return Ok(());
        }
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::data(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }

    /// Write `manifest.json`. Thread count and output directory are left
    /// out so equal runs produce equal manifests.
    pub fn finish(self, config: &serde_json::Value) -> Outcome {
        let m = Manifest {
            subcommand: self.subcommand,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            format: self.format,
            config,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let text = serde_json::to_string_pretty(&m).map_err(|e| Failure::data(e.to_string()))?;
        let p = self.dir.join("manifest.json");
        fs::write(&p, text + "\n").map_err(|e| Failure::data(format!("{}: {e}", p.display())))
    }
}

/// File-name-safe form of a model id.
pub fn slug(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// Read and deserialize a TOML config file. Problems are usage errors.
pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Outcome<T> {
    let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

pub fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("config serializes")
}
