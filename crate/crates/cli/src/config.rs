//! Experiment configuration: flat `section.key = value` text (diff-friendly)
//! or an equivalent JSON document. Values are held as JSON values internally
//! so both formats share one set of typed accessors.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::Value;

use rtwave_core::equilibrium::{PhysicalParams, PressureLaw};
use rtwave_core::sim::ModeSpec;
use rtwave_core::spectral::Grid;

#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<String, Value>,
    /// Raw bytes of the config file, hashed into the manifest.
    pub raw: Vec<u8>,
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) -> Result<()> {
    match v {
        Value::Object(map) => {
            for (k, inner) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, inner, out)?;
            }
            Ok(())
        }
        other => {
            if out.insert(prefix.to_string(), other.clone()).is_some() {
                bail!("duplicate config key '{prefix}'");
            }
            Ok(())
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let text = std::str::from_utf8(&raw).context("config file is not valid UTF-8")?;
        let trimmed = text.trim_start();
        let mut values = BTreeMap::new();
        if trimmed.starts_with('{') {
            let doc: Value = serde_json::from_str(text).context("invalid JSON config")?;
            if !doc.is_object() {
                bail!("JSON config must be an object at top level");
            }
            flatten("", &doc, &mut values)?;
        } else {
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| anyhow!("line {}: expected 'key = value', got '{line}'", lineno + 1))?;
                let key = key.trim();
                if key.is_empty() {
                    bail!("line {}: empty key", lineno + 1);
                }
                let vs = value.trim();
                // numbers and booleans become typed JSON values, everything
                // else stays a string
                let v = serde_json::from_str::<Value>(vs)
                    .ok()
                    .filter(|v| v.is_number() || v.is_boolean())
                    .unwrap_or_else(|| Value::String(vs.to_string()));
                if values.insert(key.to_string(), v).is_some() {
                    bail!("line {}: duplicate config key '{key}'", lineno + 1);
                }
            }
        }
        Ok(Self { values, raw })
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn get(&self, key: &str) -> Result<&Value> {
        self.values
            .get(key)
            .ok_or_else(|| anyhow!("missing required config key '{key}'"))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.get(key)?;
        v.as_f64()
            .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
            .ok_or_else(|| anyhow!("config key '{key}' must be a number, got {v}"))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.has(key) {
            self.f64(key)
        } else {
            Ok(default)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let v = self.get(key)?;
        v.as_u64()
            .map(|u| u as usize)
            .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
            .ok_or_else(|| anyhow!("config key '{key}' must be a non-negative integer, got {v}"))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        if self.has(key) {
            self.usize(key)
        } else {
            Ok(default)
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        if self.has(key) {
            let v = self.get(key)?;
            v.as_u64()
                .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
                .ok_or_else(|| anyhow!("config key '{key}' must be a non-negative integer"))
        } else {
            Ok(default)
        }
    }

    pub fn i64(&self, key: &str) -> Result<i64> {
        let v = self.get(key)?;
        v.as_i64()
            .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
            .ok_or_else(|| anyhow!("config key '{key}' must be an integer, got {v}"))
    }

    pub fn i64_or(&self, key: &str, default: i64) -> Result<i64> {
        if self.has(key) {
            self.i64(key)
        } else {
            Ok(default)
        }
    }

    pub fn string(&self, key: &str) -> Result<String> {
        let v = self.get(key)?;
        v.as_str()
            .map(str::to_string)
            .ok_or_else(|| anyhow!("config key '{key}' must be a string, got {v}"))
    }

    pub fn string_or(&self, key: &str, default: &str) -> Result<String> {
        if self.has(key) {
            self.string(key)
        } else {
            Ok(default.to_string())
        }
    }

    /// Comma-separated list of numbers (or a JSON array in JSON configs).
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let v = self.get(key)?;
        if let Some(arr) = v.as_array() {
            return arr
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| anyhow!("config key '{key}': array entries must be numbers"))
                })
                .collect();
        }
        let s = v
            .as_str()
            .ok_or_else(|| anyhow!("config key '{key}' must be a list of numbers"))?;
        s.split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| anyhow!("config key '{key}': cannot parse '{}' as number", p.trim()))
            })
            .collect()
    }

    /// Mode list "k1,k2,re,im; k1,k2,re,im; …" (or JSON array of 4-tuples).
    pub fn modes(&self, key: &str) -> Result<Vec<ModeSpec>> {
        if !self.has(key) {
            return Ok(Vec::new());
        }
        let v = self.get(key)?;
        let tuples: Vec<[f64; 4]> = if let Some(arr) = v.as_array() {
            arr.iter()
                .map(|entry| {
                    let inner = entry
                        .as_array()
                        .filter(|a| a.len() == 4)
                        .ok_or_else(|| anyhow!("config key '{key}': each mode needs 4 entries"))?;
                    let mut t = [0.0; 4];
                    for (slot, x) in t.iter_mut().zip(inner) {
                        *slot = x
                            .as_f64()
                            .ok_or_else(|| anyhow!("config key '{key}': mode entries must be numbers"))?;
                    }
                    Ok(t)
                })
                .collect::<Result<_>>()?
        } else {
            let s = v
                .as_str()
                .ok_or_else(|| anyhow!("config key '{key}' must be a mode list"))?;
            s.split(';')
                .filter(|g| !g.trim().is_empty())
                .map(|g| {
                    let parts: Vec<f64> = g
                        .split(',')
                        .map(|p| {
                            p.trim().parse::<f64>().map_err(|_| {
                                anyhow!("config key '{key}': cannot parse '{}' in mode spec", p.trim())
                            })
                        })
                        .collect::<Result<_>>()?;
                    if parts.len() != 4 {
                        bail!("config key '{key}': each mode needs 'k1,k2,re,im'");
                    }
                    Ok([parts[0], parts[1], parts[2], parts[3]])
                })
                .collect::<Result<_>>()?
        };
        tuples
            .into_iter()
            .map(|[k1, k2, re, im]| {
                if k1.fract() != 0.0 || k2.fract() != 0.0 {
                    bail!("config key '{key}': wavenumbers must be integers");
                }
                Ok(ModeSpec {
                    k1: k1 as i64,
                    k2: k2 as i64,
                    re,
                    im,
                })
            })
            .collect()
    }

    /// Wavenumber pair list "k1,k2; k1,k2; …".
    pub fn pairs(&self, key: &str) -> Result<Vec<(i64, i64)>> {
        if !self.has(key) {
            return Ok(Vec::new());
        }
        let s = self.string(key)?;
        s.split(';')
            .filter(|g| !g.trim().is_empty())
            .map(|g| {
                let (a, b) = g
                    .split_once(',')
                    .ok_or_else(|| anyhow!("config key '{key}': expected 'k1,k2' pairs"))?;
                Ok((
                    a.trim().parse().map_err(|_| anyhow!("config key '{key}': bad integer"))?,
                    b.trim().parse().map_err(|_| anyhow!("config key '{key}': bad integer"))?,
                ))
            })
            .collect()
    }
}

/// Physical parameters from the `params.*` section.
pub fn params_from(cfg: &Config) -> Result<PhysicalParams> {
    let p = PhysicalParams {
        g: cfg.f64("params.g")?,
        p_atm: cfg.f64("params.p_atm")?,
        ell: cfg.f64("params.ell")?,
        b: cfg.f64("params.b")?,
        l1: cfg.f64("params.l1")?,
        l2: cfg.f64("params.l2")?,
        mu_plus: cfg.f64("params.mu_plus")?,
        mu_minus: cfg.f64("params.mu_minus")?,
        mu_bulk_plus: cfg.f64_or("params.mu_bulk_plus", 0.0)?,
        mu_bulk_minus: cfg.f64_or("params.mu_bulk_minus", 0.0)?,
        sigma_plus: cfg.f64("params.sigma_plus")?,
        sigma_minus: cfg.f64("params.sigma_minus")?,
    };
    p.validate().map_err(|e| anyhow!("params: {e}"))?;
    Ok(p)
}

/// A pressure law from section `law_plus.*` or `law_minus.*`.
pub fn law_from(cfg: &Config, section: &str) -> Result<PressureLaw> {
    let kind = cfg.string(&format!("{section}.kind"))?;
    let law = match kind.as_str() {
        "polytropic" => PressureLaw::polytropic(
            cfg.f64(&format!("{section}.k"))?,
            cfg.f64(&format!("{section}.alpha"))?,
        ),
        "tabulated" => {
            let s = cfg.string(&format!("{section}.table"))?;
            let table: Vec<(f64, f64)> = s
                .split(';')
                .filter(|g| !g.trim().is_empty())
                .map(|g| {
                    let (r, p) = g
                        .split_once(':')
                        .ok_or_else(|| anyhow!("{section}.table: expected 'rho:pressure' pairs"))?;
                    Ok((
                        r.trim().parse().map_err(|_| anyhow!("{section}.table: bad number"))?,
                        p.trim().parse().map_err(|_| anyhow!("{section}.table: bad number"))?,
                    ))
                })
                .collect::<Result<_>>()?;
            PressureLaw::Tabulated { table }
        }
        other => bail!("{section}.kind: unknown pressure law '{other}'"),
    };
    law.validate().map_err(|e| anyhow!("{section}: {e}"))?;
    Ok(law)
}

/// Discretization from the `grid.*` section plus the physical lengths.
pub fn grid_from(cfg: &Config, params: &PhysicalParams) -> Result<Grid> {
    Grid::new(
        params.l1,
        params.l2,
        cfg.usize("grid.n_h")?,
        cfg.usize("grid.n_v_plus")?,
        cfg.usize("grid.n_v_minus")?,
        params.ell,
        params.b,
    )
    .map_err(|e| anyhow!("grid: {e}"))
}
