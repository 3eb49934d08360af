//! Run manifests: a JSON record written alongside every CLI output that
//! captures the resolved configuration, input digests and seed needed to
//! reproduce that output byte for byte.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One input file reference: where it was read from and what it hashed to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    /// Path as given on the command line.
    pub path: String,
    /// Lowercase hex SHA-256 of the file contents.
    pub sha256: String,
}

/// Provenance record for a single CLI invocation.
///
/// The manifest holds everything needed to re-run the command: the tool
/// version, the subcommand, every option with defaults materialized, a
/// digest of every input file, and the seed when the command uses one.
/// Re-running with identical inputs reproduces the outputs byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Always `"fairrank"`.
    pub tool: String,
    /// Crate version that produced the output.
    pub version: String,
    /// Subcommand name, e.g. `"retrieve"`.
    pub command: String,
    /// Resolved options, defaults included, keyed by flag name.
    pub config: BTreeMap<String, String>,
    /// Digests of all input files, keyed by flag name.
    pub inputs: BTreeMap<String, InputDigest>,
    /// RNG seed, for commands that draw randomness.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunManifest {
    /// Starts an empty manifest for `command`.
    pub fn new(command: &str) -> Self {
        RunManifest {
            tool: "fairrank".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: BTreeMap::new(),
            inputs: BTreeMap::new(),
            seed: None,
        }
    }

    /// Records one resolved option value under its flag name.
    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.config.insert(key.to_string(), value.to_string());
        self
    }

    /// Records the seed (also mirrored into `config` by the CLI).
    pub fn set_seed(&mut self, seed: u64) -> &mut Self {
        self.seed = Some(seed);
        self
    }

    /// Hashes the file at `path` and records it under `key`.
    pub fn add_input(&mut self, key: &str, path: impl AsRef<Path>) -> Result<&mut Self> {
        let path = path.as_ref();
        let sha256 = digest_file(path)?;
        self.inputs.insert(
            key.to_string(),
            InputDigest {
                path: path.display().to_string(),
                sha256,
            },
        );
        Ok(self)
    }

    /// Path of the manifest that accompanies `output`:
    /// `<output>.manifest.json` for files, `<output>/manifest.json` for
    /// directories.
    pub fn path_for_output(output: &Path) -> PathBuf {
        if output.is_dir() {
            output.join("manifest.json")
        } else {
            let mut name = output
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            name.push_str(".manifest.json");
            output.with_file_name(name)
        }
    }

    /// Writes the manifest next to `output` and returns the manifest path.
    pub fn write_for_output(&self, output: impl AsRef<Path>) -> Result<PathBuf> {
        let path = Self::path_for_output(output.as_ref());
        let mut body = serde_json::to_string_pretty(self)
            .map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
        body.push('\n');
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Reads a manifest back from `path`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&body).map_err(|e| Error::parse(path, 0, e.to_string()))
    }
}

/// Lowercase hex SHA-256 of the file at `path`.
pub fn digest_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut hex = String::with_capacity(64);
    for byte in Sha256::digest(&bytes) {
        use std::fmt::Write;
        let _ = write!(hex, "{byte:02x}");
    }
    Ok(hex)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_matches_known_sha256() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("input.txt");
        fs::write(&path, b"abc").unwrap();
        assert_eq!(
            digest_file(&path).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn digest_missing_file_is_io_error() {
        let err = digest_file("no/such/file.bin").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn manifest_roundtrips_and_names_sidecar_after_file() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("corpus.jsonl");
        fs::write(&input, b"{}\n").unwrap();
        let output = dir.path().join("run.txt");
        fs::write(&output, b"").unwrap();

        let mut manifest = RunManifest::new("retrieve");
        manifest.set("k", 500).set("model", "bm25");
        manifest.set_seed(7);
        manifest.add_input("corpus", &input).unwrap();
        let written = manifest.write_for_output(&output).unwrap();

        assert_eq!(written, dir.path().join("run.txt.manifest.json"));
        let loaded = RunManifest::load(&written).unwrap();
        assert_eq!(loaded, manifest);
        assert_eq!(loaded.tool, "fairrank");
        assert_eq!(loaded.config["k"], "500");
        assert_eq!(loaded.seed, Some(7));
        assert_eq!(loaded.inputs["corpus"].path, input.display().to_string());
    }

    #[test]
    fn directory_output_gets_manifest_inside() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = RunManifest::new("gen-synth");
        let written = manifest.write_for_output(dir.path()).unwrap();
        assert_eq!(written, dir.path().join("manifest.json"));
        assert!(written.is_file());
    }

    #[test]
    fn rewriting_identical_manifest_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("queries.tsv");
        fs::write(&input, b"q1\thello\n").unwrap();

        let build = || {
            let mut m = RunManifest::new("retrieve");
            m.set("k", 500);
            m.add_input("queries", &input).unwrap();
            m
        };
        let out_a = dir.path().join("a.txt");
        let out_b = dir.path().join("b.txt");
        fs::write(&out_a, b"").unwrap();
        fs::write(&out_b, b"").unwrap();
        let path_a = build().write_for_output(&out_a).unwrap();
        let path_b = build().write_for_output(&out_b).unwrap();
        assert_eq!(fs::read(path_a).unwrap(), fs::read(path_b).unwrap());
    }
}
