//! Deferred artifact writing: scenarios assemble every output in memory and
//! nothing touches the filesystem until the whole run has succeeded, so a
//! failed run leaves no partial outputs. The manifest lists every file with
//! a SHA-256 checksum.

use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use rtwave_core::sim::FlattenedState;
use rtwave_core::spectral::Grid;

/// 17 significant digits: round-trips f64 exactly and keeps CSV output
/// byte-deterministic.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_bytes(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_string(&mut self, name: &str, text: String) {
        self.add_bytes(name, text.into_bytes());
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.add_string(name, text);
        Ok(())
    }

    /// Write all files plus `MANIFEST.json` under `dir`.
    pub fn write_all(
        self,
        dir: &Path,
        scenario: &str,
        config_raw: &[u8],
        seed: u64,
    ) -> Result<()> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        let mut entries = Vec::new();
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            let mut f = std::fs::File::create(&path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            f.write_all(bytes)?;
            entries.push(serde_json::json!({
                "name": name,
                "bytes": bytes.len(),
                "sha256": hex(&Sha256::digest(bytes)),
            }));
        }
        entries.sort_by(|a, b| a["name"].as_str().cmp(&b["name"].as_str()));
        let manifest = serde_json::json!({
            "tool": "rtwave",
            "version": env!("CARGO_PKG_VERSION"),
            "scenario": scenario,
            "seed": seed,
            "config_sha256": hex(&Sha256::digest(config_raw)),
            "files": entries,
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(dir.join("MANIFEST.json"), text)?;
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

const STATE_MAGIC: &[u8; 8] = b"RTWVST01";

/// Serialize a state checkpoint: magic, dimensions, time, then the complex
/// coefficient arrays of q, u₁..u₃ (each plus then minus layer) and η±, all
/// little-endian f64 pairs in row-major order.
pub fn state_to_bytes(state: &FlattenedState, grid: &Grid) -> Vec<u8> {
    let m = grid.m() as u64;
    let np = (grid.n_v_plus + 1) as u64;
    let nm = (grid.n_v_minus + 1) as u64;
    let mut out = Vec::new();
    out.extend_from_slice(STATE_MAGIC);
    for d in [m, np, nm] {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.extend_from_slice(&state.time.to_le_bytes());
    let mut push_arr = |iter: &mut dyn Iterator<Item = num_complex::Complex64>| {
        for c in iter {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    };
    let volumes = [&state.q, &state.u[0], &state.u[1], &state.u[2]];
    for v in volumes {
        push_arr(&mut v.plus.iter().copied());
        push_arr(&mut v.minus.iter().copied());
    }
    push_arr(&mut state.eta_plus.coeffs.iter().copied());
    push_arr(&mut state.eta_minus.coeffs.iter().copied());
    out
}
