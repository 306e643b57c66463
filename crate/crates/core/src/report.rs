//! Structured run reports persisted as TOML.
//!
//! A report holds the command name, the fully resolved configuration and
//! named result sections. Non-finite floats use TOML's `inf`, `-inf` and
//! `nan` tokens, so every value round-trips. 64-bit seeds are stored as
//! strings because TOML integers are signed.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub command: String,
    pub config: toml::Table,
    pub sections: toml::Table,
}

fn ser_err(e: impl std::fmt::Display) -> Error {
    Error::invalid(format!("cannot serialize report value: {e}"))
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            format_version: REPORT_FORMAT_VERSION,
            command: command.to_string(),
            config: toml::Table::new(),
            sections: toml::Table::new(),
        }
    }

    /// Records one configuration entry (a struct becomes a sub-table).
    pub fn set_config<T: Serialize + ?Sized>(&mut self, key: &str, value: &T) -> Result<()> {
        self.config.insert(key.to_string(), toml::Value::try_from(value).map_err(ser_err)?);
        Ok(())
    }

    pub fn add_section<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        self.sections.insert(name.to_string(), toml::Value::try_from(value).map_err(ser_err)?);
        Ok(())
    }

    pub fn section<T: DeserializeOwned>(&self, name: &str) -> Result<T> {
        let v = self
            .sections
            .get(name)
            .ok_or_else(|| Error::invalid(format!("report has no section '{name}'")))?;
        v.clone()
            .try_into()
            .map_err(|e| Error::invalid(format!("section '{name}': {e}")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(ser_err)
    }

    pub fn from_toml(text: &str, file: &str) -> Result<Self> {
        let report: Self = toml::from_str(text).map_err(|e| Error::Format {
            file: file.to_string(),
            message: e.to_string(),
        })?;
        if report.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::Format {
                file: file.to_string(),
                message: format!("unsupported report format version {}", report.format_version),
            });
        }
        Ok(report)
    }
}

pub fn write_report(report: &RunReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_toml()?).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunReport::from_toml(&text, &path.display().to_string())
}

/// Serde adapter storing a `u64` as a decimal string.
pub mod seed_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Int(u64),
        }
        match Repr::deserialize(d)? {
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
            Repr::Int(i) => Ok(i),
        }
    }
}
