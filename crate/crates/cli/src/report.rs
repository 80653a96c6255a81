//! Run reports and the manifest of emitted files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub config: RunConfig,
    pub config_hash: String,
    /// Wall-clock time per stage, left out of `report_hash`.
    pub timings: Vec<Timing>,
    pub checks: Vec<Check>,
    /// Command-specific results.
    pub results: Value,
    pub files: Vec<FileEntry>,
    pub report_hash: String,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// SHA-256 over the canonical JSON of everything except the timings,
    /// the output directory and the hash itself.
    pub fn compute_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serialises");
        let obj = v.as_object_mut().expect("object");
        obj.remove("timings");
        obj.remove("report_hash");
        if let Some(cfg) = obj.get_mut("config").and_then(Value::as_object_mut) {
            cfg.remove("out");
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }
}

pub fn sha256_file(path: &Path) -> anyhow::Result<(u64, String)> {
    let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok((data.len() as u64, hex::encode(Sha256::digest(&data))))
}

/// Collects outputs, checks and timings for one command.
pub struct Recorder {
    command: String,
    config: RunConfig,
    dir: PathBuf,
    files: Vec<FileEntry>,
    checks: Vec<Check>,
    timings: Vec<Timing>,
    stage: Option<(String, Instant)>,
}

impl Recorder {
    /// Creates the output directory if needed.
    pub fn new(command: &str, config: &RunConfig) -> anyhow::Result<Self> {
        fs::create_dir_all(&config.out).with_context(|| format!("creating {}", config.out.display()))?;
        Ok(Self {
            command: command.to_string(),
            config: config.clone(),
            dir: config.out.clone(),
            files: Vec::new(),
            checks: Vec::new(),
            timings: Vec::new(),
            stage: None,
        })
    }

    /// Starts timing `name`, closing the previous stage.
    pub fn stage(&mut self, name: &str) {
        self.end_stage();
        self.stage = Some((name.to_string(), Instant::now()));
    }

    fn end_stage(&mut self) {
        if let Some((stage, t)) = self.stage.take() {
            self.timings.push(Timing { stage, seconds: t.elapsed().as_secs_f64() });
        }
    }

    /// Writes one output file through `fill` and records it.
    pub fn write(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> anyhow::Result<()>) -> anyhow::Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let path = self.dir.join(name);
        fs::write(&path, &buf).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: buf.len() as u64,
            sha256: hex::encode(Sha256::digest(&buf)),
        });
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        self.write(name, |buf| {
            buf.extend_from_slice(text.as_bytes());
            Ok(())
        })
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> anyhow::Result<()> {
        self.write(name, |buf| {
            serde_json::to_writer_pretty(&mut *buf, value)?;
            buf.push(b'\n');
            Ok(())
        })
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), passed, detail: detail.into() });
    }

    /// Finishes the report and writes it as `<command>_report.json`.
    pub fn finish(mut self, results: Value) -> anyhow::Result<RunReport> {
        self.end_stage();
        let mut report = RunReport {
            command: self.command.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: self.config.hash(),
            config: self.config,
            timings: self.timings,
            checks: self.checks,
            results,
            files: self.files,
            report_hash: String::new(),
        };
        report.report_hash = report.compute_hash();
        let path = self.dir.join(report_name(&self.command));
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(report)
    }
}

pub fn report_name(command: &str) -> String {
    format!("{command}_report.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_skips_timings_only() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig { out: dir.path().to_path_buf(), ..Default::default() };
        let mut rec = Recorder::new("probe", &cfg).unwrap();
        rec.stage("work");
        rec.write_text("a.txt", "hello").unwrap();
        rec.check("ok", true, "fine");
        let mut report = rec.finish(Value::Null).unwrap();
        assert_eq!(report.files[0].bytes, 5);
        assert_eq!(
            report.files[0].sha256,
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
        let h = report.compute_hash();
        assert_eq!(h, report.report_hash);
        report.timings.push(Timing { stage: "x".into(), seconds: 9.0 });
        assert_eq!(report.compute_hash(), h);
        report.checks[0].passed = false;
        assert_ne!(report.compute_hash(), h);
        let on_disk: RunReport =
            serde_json::from_str(&fs::read_to_string(dir.path().join("probe_report.json")).unwrap()).unwrap();
        assert_eq!(on_disk.report_hash, h);
    }
}
